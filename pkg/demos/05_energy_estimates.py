"""
Energies, Sobolev norms and the Gronwall constant
=================================================

Energies are integrals of the energy-momentum tensor contracted with the
slice normal.  On a smooth static metric the order-1 part is conserved;
on the mollified pp-wave the growth constant does not depend on eps.
"""

import numpy as np

from wavenets import (CauchyData, EpsGrid, Mesh, TestFunction, energy_report, make_minkowski,
                      make_pp_wave_rosen, solve, verify_gronwall, verify_norm_energy_equivalence)

grid = EpsGrid.geometric(0.1, 4, 0.5)
g = make_minkowski(Mesh.torus(16, times=(-1.0, 1.0, 21)), grid)
sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(512), np.sin), 1.0, n_out=5)
rep = energy_report(sol, k_max=1)
print("tau:", sol.times)
print("E0:", np.round(rep.energies[0][0], 6))
print("E1:", np.round(rep.energies[1][0], 6), " (pi/2 + pi/2 cos^2 tau)")
print("E1 / |u|_1^2:", verify_norm_energy_equivalence(sol).C_low)

# a smaller pp-wave run than the acceptance one (about 15 s)
pp = make_pp_wave_rosen(Mesh.torus(8, dim=2, times=(-0.5, 0.5, 641)), grid)
bump = TestFunction([0.0, 0.0], [1.5, 1.5], amplitude=np.e, sharpness=1.0)
data = CauchyData.from_functions(grid, Mesh.torus(32, dim=2), bump, lambda x, y: 0.3 * np.sin(x))
gr = verify_gronwall(solve(g=pp, data=data, T=0.5, n_out=6))
print("C''' per eps:", np.round(gr.C3, 4), " spread:", round(gr.spread, 4))
