"""
Evaluating uncertainty scores
=============================

A good uncertainty score ranks incorrect answers above correct ones (AUROC)
and lets a system keep high accuracy when it abstains on the most uncertain
questions (AUARC). Comparisons across many scenarios are summarized as win
rates with a one-sided binomial test.
"""

import numpy as np

from kle.evaluation import auarc, auroc, binomial_significance, evaluate_scenario, win_rate

rng = np.random.default_rng(0)

# %%
# Synthetic scenario: method A tracks correctness well, B is mostly noise.
n = 200
correct = rng.random(n) < 0.6
signal = np.where(correct, 0.0, 1.0)
scores = {
    "A": signal + rng.normal(0, 0.6, n),
    "B": signal + rng.normal(0, 2.0, n),
}
for m, u in scores.items():
    print(f"{m}: AUROC={auroc(u, correct):.3f}  AUARC={auarc(u, correct):.3f}")

# %%
# Bootstrap intervals share the same resamples across methods.
report = evaluate_scenario("synthetic", scores, correct, resamples=300, seed=0)
for m, r in report.results.items():
    iv = r["auroc"]
    print(f"{m}: AUROC {iv.point:.3f} [{iv.low:.3f}, {iv.high:.3f}]")

# %%
# Win rates over 60 scenarios of varying difficulty.
reports = []
for s in range(60):
    y = rng.random(80) < rng.uniform(0.3, 0.8)
    sig = np.where(y, 0.0, 1.0)
    noise = rng.uniform(0.5, 2.0)
    reports.append(
        evaluate_scenario(
            f"s{s}",
            {"A": sig + rng.normal(0, noise, 80), "B": sig + rng.normal(0, noise * 1.3, 80)},
            y,
            resamples=0,
        )
    )
w = win_rate(reports, "auroc")
print("A beats B in", int(w.wins[0, 1]), "of 60 scenarios; fraction", round(w.fractions[0, 1], 3))
print("one-sided p-value:", w.p_values()[0, 1])

# Smallest number of wins out of 60 that is significant at 5%.
k = next(k for k in range(61) if binomial_significance(k, 60) < 0.05)
print(f"significant from {k}/60 = {k / 60:.3f} wins")
