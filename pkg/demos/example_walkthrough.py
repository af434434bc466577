"""Walk the built-in generic example through each stage at one point."""
import numpy as np

from projmetric import catalog
from projmetric.jets import PointTM
from projmetric.metrizability import analyze_point, third_order_coeffs
from projmetric.spraygeom import PointGeometry, eigenframe, jacobi

np.set_printoptions(precision=4, suppress=True)

spray = catalog.get("paper-example").model
u = PointTM((0.3, -0.4, 0.7), (0.9, 1.2, -0.5))
print("spray:", spray.sources)

g = PointGeometry(spray, u, 4)
J = jacobi(spray, u, geom=g)
print("\nJacobi endomorphism at u:\n", J.Phi)
print("|Phi y| =", J.annihilation_residual)

F = eigenframe(J, spray, u, geom=g)
print("\neigenvalues:", F.lambdas)

T = third_order_coeffs(F)
worst = max(abs(v) for d in (T.kappa, T.theta, T.beta, T.gamma) for v in d.values())
print("largest third-order coefficient:", worst)

r = analyze_point(spray, u)
print("\nclassification:", r.classification.value)
print("span residual:", r.cond1_residual)
print("reducible:", r.reducible)
print("verdict:", r.verdict.value)
