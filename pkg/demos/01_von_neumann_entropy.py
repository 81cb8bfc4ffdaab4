"""
Von Neumann entropy of density matrices
=======================================

A density matrix is symmetric, positive semidefinite and has unit trace.
Its von Neumann entropy is the Shannon entropy of its eigenvalues.
"""

import numpy as np
from scipy.stats import ortho_group

from kle.linalg import is_density_matrix, unit_trace_normalize, von_neumann_entropy

rng = np.random.default_rng(0)

# %%
# A diagonal density matrix is just a probability vector on the diagonal.
p = np.array([0.5, 0.25, 0.25])
print("diag(p) entropy:", von_neumann_entropy(np.diag(p)))
print("Shannon entropy:", -(p * np.log(p)).sum())

# %%
# Rotating the basis does not change the spectrum, so the entropy is the same.
Q = ortho_group.rvs(3, random_state=rng)
print("rotated:", von_neumann_entropy(Q @ np.diag(p) @ Q.T))

# %%
# A rank-one matrix is a pure state and carries no uncertainty.
v = rng.normal(size=5)
print("pure state:", von_neumann_entropy(np.outer(v, v) / (v @ v)))

# %%
# Entropy is concave: mixing two states never lowers the average entropy.
A = np.diag([1.0, 0, 0])
B = np.diag([0, 0.5, 0.5])
for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
    mix = von_neumann_entropy(lam * A + (1 - lam) * B)
    avg = lam * von_neumann_entropy(A) + (1 - lam) * von_neumann_entropy(B)
    print(f"lambda={lam:.2f}  S(mix)={mix:.4f}  average={avg:.4f}")

# %%
# Any positive definite kernel becomes a density matrix after dividing by
# sqrt(K_ii K_jj) and by the number of points.
X = rng.normal(size=(4, 2))
K = np.exp(-((X[:, None] - X[None]) ** 2).sum(-1))
rho = unit_trace_normalize(K)
print("trace:", np.trace(rho), "valid:", is_density_matrix(rho))
print("entropy:", von_neumann_entropy(rho), "max possible:", np.log(4))
