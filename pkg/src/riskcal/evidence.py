"""Per-candidate statistical evidence against the hypothesis of high risk.

Two families: fixed-sample p-values (Hoeffding concentration for average
risk, exact binomial tail for quantile risk) and anytime-valid e-processes
built from betting martingales.  A candidate's null is "unreliable": its
true risk sits at or above the threshold alpha.  Small p-values and large
wealth are evidence of reliability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, DataError, ProvenanceError

P_METHODS = ("hoeffding", "binomial_quantile", "combined")
SPLITS = ("full", "opt", "mht")


@dataclass(frozen=True)
class PValue:
    """A p-value plus how and from which data split it was computed.

    split is "full" when the whole calibration set was used, "opt" / "mht"
    for one side of a split; procedures that must only see held-out
    evidence check the tag.
    """

    value: float
    method: str
    split: str = "full"

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise DataError(f"p-value outside [0, 1]: {self.value}")
        if self.method not in P_METHODS:
            raise DataError(f"unknown p-value method {self.method!r}")
        if self.split not in SPLITS:
            raise DataError(f"unknown split tag {self.split!r}")


def hoeffding_p_value(n: int, alpha: float, r_hat: float, split: str = "full") -> PValue:
    """Concentration p-value for the null "average risk >= alpha".

    exp(-2 n ((alpha - r_hat)_+)^2); exactly 1.0 whenever the empirical
    average r_hat is at or above the threshold.
    """
    if n < 1:
        raise DataError("sample count must be >= 1")
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"alpha outside [0, 1]: {alpha}")
    if not (0.0 <= r_hat <= 1.0):
        raise DataError(f"empirical risk outside [0, 1]: {r_hat}")
    gap = max(alpha - r_hat, 0.0)
    return PValue(min(math.exp(-2.0 * n * gap * gap), 1.0), method="hoeffding", split=split)


def binomial_tail(k: int, n: int, q: float) -> float:
    """P[Bin(n, q) <= k], accumulated in log space.

    Stable and exact to double precision for n up to 10^6 (validated
    against rational-arithmetic references).
    """
    if n < 1:
        raise DataError("sample count must be >= 1")
    if not (0.0 < q < 1.0):
        raise ConfigError("binomial rate q must lie strictly inside (0, 1)")
    if k >= n:
        return 1.0
    if k < 0:
        return 0.0
    i = np.arange(k + 1)
    log_terms = (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
        + i * math.log(q) + (n - i) * math.log1p(-q)
    )
    return float(min(math.exp(logsumexp(log_terms)), 1.0))


def quantile_p_value(k: int, n: int, q: float, split: str = "full") -> PValue:
    """Exact binomial p-value for the null "level-q risk >= alpha".

    k is the number of losses at or above alpha.  Under the null each loss
    independently lands there with probability at least q, making k
    stochastically at least Bin(n, q); the p-value is P[Bin(n, q) <= k].
    """
    if not (0 <= k <= n):
        raise DataError(f"exceedance count {k} outside [0, {n}]")
    return PValue(binomial_tail(k, n, q), method="binomial_quantile", split=split)


def combine_p_values(pvals: Sequence[PValue]) -> PValue:
    """Max over per-objective p-values: valid for the union of their nulls.

    If any single null holds, its p-value is super-uniform and so is the
    max.  All inputs must carry the same split tag.
    """
    if not pvals:
        raise DataError("no p-values to combine")
    splits = {p.split for p in pvals}
    if len(splits) > 1:
        raise ProvenanceError(f"cannot combine p-values from different splits: {sorted(splits)}")
    return PValue(max(p.value for p in pvals), method="combined", split=pvals[0].split)


def objective_p_value(losses, spec, split: str = "full") -> PValue:
    """Evidence against one controlled objective's null, from raw losses.

    Dispatches on the spec's measure: Hoeffding for averages, the exact
    binomial tail for quantiles.
    """
    from .risk import QUANTILE, empirical_average_risk, exceedance_count

    if not spec.controlled:
        raise ConfigError("p-values are only defined for controlled objectives")
    arr = np.asarray(losses, dtype=float)
    if spec.measure == QUANTILE:
        return quantile_p_value(exceedance_count(arr, spec.alpha), arr.size, spec.q, split)
    return hoeffding_p_value(arr.size, spec.alpha, empirical_average_risk(arr), split)


def candidate_p_value(table, candidate: int, problem, split: str = "full") -> PValue:
    """Max-combined p-value over all controlled objectives of one candidate."""
    return combine_p_values([
        objective_p_value(table.losses(candidate, spec.objective), spec, split)
        for spec in problem.controlled
    ])


# ---------------------------------------------------------------------------
# Betting e-processes


@dataclass(frozen=True)
class BettingConfig:
    """Betting strategy for an e-process targeting "average risk >= alpha".

    Every emitted bet lies in [0, clip / (1 - alpha)], so each wealth
    factor 1 + bet * (alpha - loss) stays >= 1 - clip > 0.  "constant"
    always bets mu0 (capped); "adaptive" aims at the running gap
    (alpha - mean) / mean-squared-gap.
    """

    strategy: str = "adaptive"
    mu0: float = 0.5
    clip: float = 0.5

    def __post_init__(self):
        if self.strategy not in ("constant", "adaptive"):
            raise ConfigError(f"unknown betting strategy {self.strategy!r}")
        if self.mu0 < 0.0:
            raise ConfigError("constant bet mu0 must be nonnegative")
        if not (0.0 < self.clip < 1.0):
            raise ConfigError("bet clip must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class EProcessState:
    """Wealth of a test martingale after t observations.

    Immutable; eprocess_update returns the successor.  mean_loss is the
    running mean of past losses and mean_gap_sq the running mean of past
    (alpha - loss)^2 terms — just enough memory to choose the next bet, so
    the state is self-contained without the observation log.  The full
    trajectory is reconstructible via replay_wealth.
    """

    alpha: float
    config: BettingConfig
    wealth: float = 1.0
    t: int = 0
    mean_loss: float = 0.0
    mean_gap_sq: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie strictly inside (0, 1)")
        if self.wealth < 0.0:
            raise DataError("e-process wealth must be nonnegative")
        if self.t == 0 and self.wealth != 1.0:
            raise DataError("initial wealth must be exactly 1")
        if self.t < 0:
            raise DataError("observation count must be nonnegative")


def next_bet(state: EProcessState) -> float:
    """Bet for the next observation, a function of past data only."""
    cfg = state.config
    cap = cfg.clip / (1.0 - state.alpha)
    if cfg.strategy == "constant":
        return min(cfg.mu0, cap)
    if state.t == 0:
        return 0.0
    raw = (state.alpha - state.mean_loss) / (state.mean_gap_sq + 1e-6)
    return min(max(raw, 0.0), cap)


def eprocess_update(state: EProcessState, loss: float) -> EProcessState:
    """Feed one loss: multiply wealth by 1 + bet * (alpha - loss)."""
    if not (0.0 <= loss <= 1.0):
        raise DataError(f"loss outside [0, 1]: {loss}")
    mu = next_bet(state)
    factor = 1.0 + mu * (state.alpha - loss)
    if factor <= 0.0:
        raise DataError("betting payoff not positive; bet exceeds its cap")
    t = state.t + 1
    gap_sq = (state.alpha - loss) ** 2
    return replace(
        state,
        wealth=state.wealth * factor,
        t=t,
        mean_loss=state.mean_loss + (loss - state.mean_loss) / t,
        mean_gap_sq=state.mean_gap_sq + (gap_sq - state.mean_gap_sq) / t,
    )


def replay_wealth(
    alpha: float, config: BettingConfig, losses: Sequence[float] | np.ndarray
) -> list[float]:
    """Wealth trajectory [W_1, ..., W_T] over a loss sequence.

    Replays the exact update rule, so feeding a session's observation log
    back in reproduces its wealth path bit for bit.
    """
    state = EProcessState(alpha=alpha, config=config)
    out = []
    for x in np.asarray(losses, dtype=float):
        state = eprocess_update(state, float(x))
        out.append(state.wealth)
    return out


def ville_reject(state: EProcessState, delta: float, m: int) -> bool:
    """Anytime-valid rejection: wealth at or above m / delta.

    Per-candidate threshold m/delta gives type-I error <= delta/m at any
    stopping time (Ville's inequality); a union bound over m tracked
    candidates yields family-wise level delta.
    """
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie strictly inside (0, 1)")
    if m < 1:
        raise ConfigError("hypothesis count m must be >= 1")
    return state.wealth >= m / delta
