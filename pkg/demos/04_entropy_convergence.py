"""
Choosing a lengthscale from entropy convergence curves
======================================================

Start from an edgeless graph on n vertices and add edges one at a time.
Track the kernel entropy divided by log n, which is exactly 1 for the edgeless
graph. If the curve falls close to zero while the graph is still sparse, the
lengthscale is so large that every graph looks the same and the entropy no
longer carries information.
"""

import numpy as np

from kle.hyperparams import entropy_convergence_curve, select_lengthscale
from kle.kernels import KernelConfig

n = 20
grid = (0.1, 0.3, 1.0, 2.0, 5.0, 10.0)
curves = [entropy_convergence_curve(n, KernelConfig.heat(t)) for t in grid]

marks = np.linspace(0, curves[0].max_edges, 6).astype(int)
print("edges      " + "".join(f"{m:>9d}" for m in marks))
for t, c in zip(grid, curves):
    vals = "".join(f"{c.vne_scaled[m]:9.3f}" for m in marks)
    print(f"t={t:<5}    {vals}   collapses={c.collapses()}")

print("selected t:", select_lengthscale(curves))

# %%
# A random edge order gives a different path but the same conclusion.
rnd = [entropy_convergence_curve(n, KernelConfig.heat(t), schedule="random", seed=1) for t in grid]
print("random schedule collapses:", {t: c.collapses() for t, c in zip(grid, rnd)})
