"""Candidate sets, calibration loss tables, risk specifications and the
empirical risk statistics computed from them.

Losses must lie in [0, 1]; rescaling unbounded losses is the caller's
responsibility.  All types are immutable after construction and all
operations are pure, so they can be evaluated concurrently across
candidates and trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

AVERAGE = "average"
QUANTILE = "quantile"
CONTROLLED = "controlled"
FREE = "free"


@dataclass(frozen=True)
class Candidate:
    """A candidate configuration: a stable identifier plus an opaque descriptor."""

    id: str
    descriptor: Any = None


class CandidateSet:
    """Ordered, immutable collection of candidates with unique identifiers."""

    def __init__(self, candidates: Iterable[Candidate | str]):
        items = []
        for c in candidates:
            items.append(c if isinstance(c, Candidate) else Candidate(str(c)))
        ids = [c.id for c in items]
        if not ids:
            raise DataError("candidate set is empty")
        if any(not i for i in ids):
            raise DataError("candidate identifiers must be non-empty")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate candidate identifiers: {dupes}")
        self._items: tuple[Candidate, ...] = tuple(items)
        self._index = {c.id: k for k, c in enumerate(items)}

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self._items)

    def index_of(self, candidate_id: str) -> int:
        try:
            return self._index[candidate_id]
        except KeyError:
            raise DataError(f"unknown candidate identifier: {candidate_id!r}") from None

    def subset(self, indices: Sequence[int]) -> "CandidateSet":
        return CandidateSet([self._items[i] for i in indices])

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, k: int) -> Candidate:
        return self._items[k]


class LossTable:
    """Dense per-sample, per-candidate, per-objective losses in [0, 1].

    Shape is (n_samples, n_candidates, n_objectives).  Values are validated
    at construction; out-of-range or missing (NaN) entries are a hard error.
    The underlying array is frozen.
    """

    def __init__(self, values: np.ndarray):
        arr = np.ascontiguousarray(values, dtype=float)
        if arr.ndim != 3:
            raise DataError(f"loss table must be 3-d (samples, candidates, objectives); got shape {arr.shape}")
        if arr.size:
            if np.isnan(arr).any():
                raise DataError("loss table contains NaN entries")
            lo, hi = float(arr.min()), float(arr.max())
            if lo < 0.0 or hi > 1.0:
                raise DataError(f"losses must lie in [0, 1]; observed range [{lo}, {hi}]")
        arr.setflags(write=False)
        self.values = arr

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.values.shape[1]

    @property
    def n_objectives(self) -> int:
        return self.values.shape[2]

    def losses(self, candidate: int, objective: int) -> np.ndarray:
        """1-d loss vector for one (candidate, objective) pair."""
        return self.values[:, candidate, objective]

    def subset_samples(self, indices: Sequence[int]) -> "LossTable":
        return LossTable(self.values[np.asarray(indices, dtype=int), :, :])

    def subset_candidates(self, indices: Sequence[int]) -> "LossTable":
        return LossTable(self.values[:, np.asarray(indices, dtype=int), :])


@dataclass(frozen=True)
class RiskSpec:
    """How one objective is measured and whether it is controlled.

    measure "average" is the mean loss; "quantile" is the level-q statistic
    defined as the smallest value r such that at least a (1 - q) fraction of
    losses lies at or below r.  Controlled objectives carry a threshold
    alpha in (0, 1); free objectives are only minimized.
    """

    objective: int
    measure: str = AVERAGE
    q: float | None = None
    role: str = CONTROLLED
    alpha: float | None = None

    def __post_init__(self):
        if self.objective < 0:
            raise ConfigError("objective index must be >= 0")
        if self.measure not in (AVERAGE, QUANTILE):
            raise ConfigError(f"unknown risk measure {self.measure!r}")
        if self.measure == QUANTILE:
            if self.q is None or not (0.0 < self.q < 1.0):
                raise ConfigError("quantile level q must lie strictly inside (0, 1)")
        if self.role not in (CONTROLLED, FREE):
            raise ConfigError(f"unknown risk role {self.role!r}")
        if self.role == CONTROLLED:
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ConfigError("threshold alpha must lie strictly inside (0, 1)")

    @property
    def controlled(self) -> bool:
        return self.role == CONTROLLED


@dataclass(frozen=True)
class MultiObjectiveProblem:
    """Full problem statement: one RiskSpec per objective, controlled specs first."""

    specs: tuple[RiskSpec, ...]

    def __post_init__(self):
        if not self.specs:
            raise ConfigError("at least one risk specification is required")
        object.__setattr__(self, "specs", tuple(self.specs))
        objectives = sorted(s.objective for s in self.specs)
        if objectives != list(range(len(self.specs))):
            raise ConfigError("risk specs must cover objectives 0..L-1 exactly once")
        roles = [s.role for s in self.specs]
        if CONTROLLED not in roles:
            raise ConfigError("at least one objective must be controlled")
        first_free = roles.index(FREE) if FREE in roles else len(roles)
        if CONTROLLED in roles[first_free:]:
            raise ConfigError("controlled specs must be listed before free specs")

    @property
    def n_objectives(self) -> int:
        return len(self.specs)

    @property
    def controlled(self) -> tuple[RiskSpec, ...]:
        return tuple(s for s in self.specs if s.controlled)

    @property
    def free(self) -> tuple[RiskSpec, ...]:
        return tuple(s for s in self.specs if not s.controlled)

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(s.alpha for s in self.controlled)


@dataclass(frozen=True)
class SplitConfig:
    """Deterministic sample split into an optimization part and a testing part."""

    fraction_opt: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.fraction_opt < 1.0):
            raise ConfigError("fraction_opt must lie strictly inside (0, 1)")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")


def empirical_average_risk(losses: Sequence[float] | np.ndarray) -> float:
    """Arithmetic mean of a non-empty loss vector."""
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise DataError("empty sample")
    return float(arr.mean())


def exceedance_count(losses: Sequence[float] | np.ndarray, threshold: float) -> int:
    """Number of losses at or above the threshold (ties count as exceedances)."""
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise DataError("empty sample")
    return int((arr >= threshold).sum())


def empirical_quantile(losses: Sequence[float] | np.ndarray, q: float) -> float:
    """Level-q risk statistic of a sample.

    Returns the ceil((1 - q) * n)-th smallest value: the smallest r such that
    at least a (1 - q) fraction of the sample lies at or below r.
    """
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise DataError("empty sample")
    if not (0.0 < q < 1.0):
        raise ConfigError("quantile level q must lie strictly inside (0, 1)")
    n = arr.size
    k = math.ceil((1.0 - q) * n)
    k = min(max(k, 1), n)
    return float(np.partition(arr, k - 1)[k - 1])


def estimate_risk(losses: Sequence[float] | np.ndarray, spec: RiskSpec) -> float:
    """Plug-in estimate of the risk measure a spec names."""
    if spec.measure == AVERAGE:
        return empirical_average_risk(losses)
    return empirical_quantile(losses, spec.q)


def risk_matrix(table: LossTable, problem: MultiObjectiveProblem) -> np.ndarray:
    """(n_candidates, n_objectives) matrix of plug-in risk estimates."""
    if problem.n_objectives != table.n_objectives:
        raise DataError(
            f"problem declares {problem.n_objectives} objectives but table has {table.n_objectives}"
        )
    out = np.empty((table.n_candidates, table.n_objectives))
    for spec in problem.specs:
        for j in range(table.n_candidates):
            out[j, spec.objective] = estimate_risk(table.losses(j, spec.objective), spec)
    return out


def split_calibration(table: LossTable, cfg: SplitConfig) -> tuple[LossTable, LossTable]:
    """Partition samples into (optimization, testing) tables by seeded shuffle.

    The first output receives floor(fraction_opt * n) samples.  The partition
    is a deterministic function of (n_samples, fraction_opt, seed); candidate
    and objective axes are unchanged.
    """
    n = table.n_samples
    if n < 2:
        raise DataError("need at least 2 samples to split")
    n_opt = int(math.floor(cfg.fraction_opt * n))
    if n_opt == 0 or n_opt == n:
        raise DataError(f"degenerate split: fraction_opt={cfg.fraction_opt} over {n} samples")
    perm = np.random.default_rng(cfg.seed).permutation(n)
    opt_idx = np.sort(perm[:n_opt])
    mht_idx = np.sort(perm[n_opt:])
    return table.subset_samples(opt_idx), table.subset_samples(mht_idx)
