"""
Solving the wave equation for every eps
=======================================

The Cauchy problem is solved independently for each eps with a
conservative second-order scheme; the results form a solution net.
"""

import numpy as np

from wavenets import (CauchyData, Delta, EpsGrid, Mesh, TestFunction, convergence_order, dalembert_oracle,
                      default_battery, domain_of_dependence_check, make_minkowski, make_robertson_walker, solve,
                      solve_distributional)

grid = EpsGrid.geometric(0.1, 4, 0.5)
flat = Mesh.torus(16, times=(-1.0, 1.0, 21))
g = make_minkowski(flat, grid)

# standing wave against the closed form
sol = solve(g, CauchyData.from_functions(grid, Mesh.torus(512), np.sin), 1.0, n_out=5)
x = sol.mesh.spatial_coords()[0]
print("max error vs sin x cos t:", float(np.max(np.abs(sol.u.samples[:, -1] - np.sin(x) * np.cos(1.0)))))

rep = convergence_order(g, lambda N: CauchyData.from_functions(grid, Mesh.torus(N), np.sin), 1.0, [256, 512, 1024],
                        exact=lambda t, x: dalembert_oracle(np.sin, None, t, x, 1.0, period=2 * np.pi))
print("fitted orders:", {float(e): round(o, 3) for e, o in rep.orders.items()})

# compactly supported data stay inside the causal future (light speed 1/2 on RW f=2)
bump = TestFunction([0.0], [1.0], amplitude=np.e**6, sharpness=6.0)
data = CauchyData.from_functions(grid, Mesh.torus(256), bump, support=((-1.0, 1.0),))
for name, metric in (("Minkowski", g), ("RW", make_robertson_walker(2.0, None, flat, grid))):
    dep = domain_of_dependence_check(metric, data, 1.0, [(-1.0, 1.0)])
    print(f"{name}: speed {dep.speed}, relative size outside the cone {dep.relative:.1e}")

# delta initial velocity: pairings approach the shadow 1/2 on (-t, t)
g6 = make_minkowski(flat, EpsGrid.geometric(0.1, 6, 0.5))
dist = solve_distributional(g6, None, Delta(0.0), 0.5, default_battery(1, 5), Mesh.torus(8192), n_out=3)
print("associated with the d'Alembert shadow:", dist.associated)
