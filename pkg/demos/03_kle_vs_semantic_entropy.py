"""
When cluster counting is not enough
===================================

Two models each produce ten answers that fall into three meaning classes of
sizes 4, 3 and 3. Semantic entropy only sees the cluster sizes, so it cannot
tell them apart. In the first model the classes contradict one another; in
the second they are merely neutral, i.e. semantically close. The kernel
entropy notices the difference.
"""

from kle.estimators import score_answer_set
from kle.graph import AnswerSet
from kle.nli import MockNli

labels = [0] * 4 + [1] * 3 + [2] * 3
texts = tuple(f"answer {i}" for i in range(len(labels)))
label_of = dict(zip(texts, labels))


def make_model(cross):
    def rule(a, b):
        return "entailment" if label_of[a] == label_of[b] else cross

    return MockNli(rule=rule)


answers = AnswerSet("twins", "Where is the best place to see the northern lights?", texts)
methods = ["DSE", "KLE_heat", "KLEc_heat", "KLE_matern"]

for name, cross in (("contradicting classes", "contradiction"), ("neutral classes", "neutral")):
    s = score_answer_set(answers, make_model(cross), methods, include_question=False)
    row = "  ".join(f"{m}={s.scores[m]:.4f}" for m in methods)
    print(f"{name:22s} {row}")

# %%
# With token log-probabilities available, likelihood-weighted semantic entropy
# and predictive entropy can be reported too. Without them those two are
# marked unavailable instead of failing.
lp = [[-0.1, -0.2]] * 4 + [[-1.5]] * 3 + [[-2.0, -0.5]] * 3
with_lp = AnswerSet("twins", answers.question, texts, token_logprobs=lp)
print(score_answer_set(with_lp, make_model("neutral"), include_question=False).to_record()["scores"])
print(score_answer_set(answers, make_model("neutral"), include_question=False).unavailable)
