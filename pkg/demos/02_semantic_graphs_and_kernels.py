"""
From NLI judgments to semantic kernels
======================================

Answers become vertices; edges are weighted by how strongly one answer
entails or is neutral to another. Heat and Matérn kernels on the graph
Laplacian turn the graph into a density matrix.
"""

import numpy as np

from kle.graph import AnswerSet, bidirectional_cluster, laplacian, weight_matrix_answers
from kle.kernels import KernelConfig, build_kernel
from kle.nli import MockNli

answers = AnswerSet(
    "capital-fr",
    "What is the capital of France?",
    ("Paris", "It's Paris.", "Lyon", "Paris, France", "Marseille"),
)

# The mock provider answers from a rule table; anything not listed is neutral.
paris = {"Paris", "It's Paris.", "Paris, France"}


def rule(a, b):
    if a in paris and b in paris:
        return "entailment"
    if (a in paris) != (b in paris):
        return "contradiction"
    return None


nli = MockNli(rule=rule)

# %%
# Bidirectional entailment groups the answers into meaning classes.
clusters = bidirectional_cluster(answers, nli)
print("clusters:", clusters.summary())

# %%
# Edge weights: entailment counts 1, neutral 0.5, contradiction 0, in both
# directions.
G = weight_matrix_answers(answers, nli)
print("weights:\n", G.W)
print("Laplacian:\n", laplacian(G))

# %%
# Heat kernels at a few lengthscales. Larger t spreads mass along edges.
for t in (0.1, 0.3, 1.0, 3.0):
    K = build_kernel(G, KernelConfig.heat(t))
    print(f"heat t={t:<4} entropy={K.entropy:.4f}")

# %%
# The Matérn kernel approaches the heat kernel with t = kappa^2 / 2 as nu grows.
heat = build_kernel(G, KernelConfig.heat(0.5)).matrix
for nu in (1, 10, 200):
    mat = build_kernel(G, KernelConfig.matern(nu=nu, kappa=1.0)).matrix
    print(f"matern nu={nu:<3} max |K_matern - K_heat| = {np.abs(mat - heat).max():.2e}")
