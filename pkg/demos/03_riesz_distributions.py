"""
Riesz distributions and the Hadamard coefficient
================================================

R(alpha) is paired with compactly supported test functions by quadrature
over the forward cone; small alpha is reached by analytic continuation
with powers of the wave operator.
"""

import numpy as np

from wavenets import RieszParams, default_battery, hadamard_v0, riesz_constant, riesz_pair, verify_recursion

print("C(2, 2) =", riesz_constant(2, 2), "  C(2, 4) =", riesz_constant(2, 4))

# R(0) is the delta distribution
for n in (2, 4):
    for phi in default_battery(n, 2):
        val = riesz_pair(RieszParams(0.0, n), phi)
        print(f"n={n} {phi.label}: <R(0), phi> = {val:.12f}   phi(0) = {float(phi(*[0.0] * n)):.12f}")

# box R(alpha + 2) = R(alpha)
print(f"recursion at alpha=2, n=2: {verify_recursion(2.0, 2, default_battery(2, 3)):.2e}")

# along flat rays the leading Hadamard coefficient is one
rng = np.random.default_rng(0)
dirs = rng.normal(size=(4, 3))
dirs /= np.linalg.norm(dirs, axis=1)[:, None]
states = hadamard_v0(None, [0.1, 0.0, 0.0], dirs, 0.5)
print("max |V0 - 1| on Minkowski rays:", max(float(np.max(np.abs(s.V - 1))) for s in states))
