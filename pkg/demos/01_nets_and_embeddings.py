"""
Nets of smooth functions and their asymptotics
===============================================

A generalized function is represented by a net of smooth samples, one
array per value of the regularization parameter eps.  This script builds
a few nets, reads off their growth exponents and embeds distributions by
mollification.
"""

import numpy as np

from wavenets import (Delta, EpsGrid, Heaviside, Mesh, Mollifier, ScalarNet, association_check,
                      classify_moderate, classify_negligible, default_battery, mollifier_embed)

# a geometric grid eps_k = 0.1 * 2^-k and a periodic mesh
grid = EpsGrid.geometric(0.1, 6, 0.5)
mesh = Mesh.torus(256)
print("eps grid:", np.round(grid.array, 5))

# sup |d^j u_eps| ~ eps^-2 for u_eps = sin(x) / eps^2
net = ScalarNet.from_function(grid, mesh, lambda e, x: np.sin(x) / e**2)
verdict = classify_moderate(net, [0, 1, 2])
for j, est in verdict.estimates.items():
    print(f"derivative multi-index {j}: fitted exponent {est.exponent:.3f}")

# eps^4 cos(x) is negligible up to order 4 but not beyond
small = ScalarNet.from_function(grid, mesh, lambda e, x: e**4 * np.cos(x))
print("negligible orders:", classify_negligible(small, [2, 4, 5]).negligible)

# the mollifier is normalized to unit mass
rho = Mollifier.of_dim(1)
print(f"mollifier normalization constant: {rho.norm:.12f}")

# embed delta and a step function, then compare pairings with the exact values
fine = Mesh.torus(8192)
battery = default_battery(1, 4)
for target in (Delta(0.0), Heaviside(0.1)):
    emb = mollifier_embed(target, grid, fine)
    rep = association_check(emb, target.pair, battery)
    print(f"{type(target).__name__:>9}: {rep.verdict}")
