"""Run the synthetic reducible frames through the rank and sign test."""
from projmetric import catalog
from projmetric.analysis import AnalysisConfig, analyze

cfg = AnalysisConfig(points=5, seed=0)
for name in ("reducible-rank1", "reducible-samesign", "reducible-rank2"):
    entry = catalog.get(name)
    agg = analyze(entry.model, cfg)["aggregate"]
    print(f"{name:20s} rank {agg['theta_ranks']}  {agg['verdict']:26s} (expected {entry.expected})")
    print("    " + entry.provenance)
