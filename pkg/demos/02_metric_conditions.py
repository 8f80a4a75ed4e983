"""
Growth conditions on metric nets
================================

Metric nets g_eps = -beta dt^2 + h are checked for the two growth
conditions required by the existence theory: derivatives may blow up at
most like eps^-k, and the time direction must stay uniformly timelike.
"""

from wavenets import (EpsGrid, Mesh, check_condition_A, check_condition_B, check_splitting,
                      make_adversarial, make_minkowski, make_pp_wave_rosen, make_robertson_walker)

grid = EpsGrid.geometric(0.1, 6, 0.5)
flat = Mesh.torus(16, times=(-1.0, 1.0, 21))

nets = {
    "Minkowski": make_minkowski(flat, grid),
    "Robertson-Walker f=2": make_robertson_walker(2.0, None, flat, grid),
    "adversarial": make_adversarial(flat, grid),
}
for name, g in nets.items():
    A = check_condition_A(g)
    B = check_condition_B(g) if g.active_indices() else None
    print(f"{name:>22}: A={'PASS' if A.passed else 'FAIL'}  B={'PASS' if B and B.passed else 'FAIL'}"
          f"  (sup |g| exponent {A.g_estimates[0].exponent:.2f})")

# the splitting of RW: beta = 1, h = 4 dx^2
S = check_splitting(nets["Robertson-Walker f=2"])
print(f"RW lower bound on h: {S.h_lower_bound:.3f}")

# the impulsive pp-wave with a mollified kink needs a fine time mesh (takes ~20 s)
pp = make_pp_wave_rosen(Mesh.torus(8, dim=2, times=(-0.5, 0.5, 1281)), grid)
A = check_condition_A(pp)
for k in (1, 2, 3):
    print(f"pp-wave: growth exponent of order-{k} derivatives {A.g_estimates[k].exponent:+.2f}")
print("pp-wave condition B:", "PASS" if check_condition_B(pp).passed else "FAIL")
