"""Print the exact symbol and Spencer dimension checks for n = 2..4."""
from projmetric.spencer import cartan_test, PSI_WEIGHTS, spencer_H, verify

for c in verify(ns=(2, 3, 4), ms=(3, 4, 5), seed=0):
    d = c.as_dict()
    print(f"{d['claim_id']:44s} formula={d['formula']!s:>6} brute={d['brute_force']!s:>6} "
          f"{'ok' if d['match'] else 'differs'}{'' if d['authoritative'] else ' (alternative form, informational)'}")

print("\nH^{2,2} at n = 3:", spencer_H(3, 2).H)
for label, w in (("adapted", PSI_WEIGHTS), ("plain", None)):
    r = cartan_test(3, 3, psi_weights=w)
    print(f"Cartan test ({label} basis): {r.dim_next} vs {r.total} -> {'pass' if r.passed else 'fail'}")
