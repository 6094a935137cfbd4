import numpy as np
import pytest

from riskcal import CandidateSet, LossTable, MultiObjectiveProblem, RiskSpec


def make_table(values) -> LossTable:
    """Loss table from an (n, m) or (n, m, L) array-like."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return LossTable(arr)


def average_problem(*alphas: float) -> MultiObjectiveProblem:
    return MultiObjectiveProblem(tuple(
        RiskSpec(objective=l, measure="average", alpha=a) for l, a in enumerate(alphas)
    ))


def quantile_problem(alpha: float, q: float) -> MultiObjectiveProblem:
    return MultiObjectiveProblem((RiskSpec(objective=0, measure="quantile", q=q, alpha=alpha),))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
