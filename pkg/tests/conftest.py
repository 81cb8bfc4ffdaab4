import numpy as np
import pytest
from scipy.stats import ortho_group

from kle.graph import AnswerSet
from kle.nli import MockNli


def random_density(rng, n, rank=None):
    rank = rank or n
    X = rng.normal(size=(n, rank))
    K = X @ X.T
    return K / np.trace(K)


def random_orthogonal(rng, n):
    if n == 1:
        return np.array([[1.0]])
    return ortho_group.rvs(n, random_state=rng)


def random_weights(rng, n, p=0.5, values=(0.5, 1.0, 1.5, 2.0)):
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                W[i, j] = W[j, i] = rng.choice(values)
    return W


def labelled_mock(labels, cross="contradiction"):
    """Mock oracle over answers named by ``labels``: same label entails
    bidirectionally, different labels get ``cross`` in both directions."""
    lab = {f"a{i}": l for i, l in enumerate(labels)}

    def rule(a, b):
        if a in lab and b in lab:
            return "entailment" if lab[a] == lab[b] else cross
        return None

    answers = AnswerSet("q", "question?", tuple(lab))
    return answers, MockNli(rule=rule)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
