"""Synthetic calibration scenarios with analytically known true risks.

Three loss families, all supported on [0, 1]:

- bernoulli: loss is 0/1 with a per-candidate, per-objective mean.
- beta: loss ~ Beta(a, b) per candidate and objective.
- delay_heavy_tail: loss = min(exp(Normal(mu, sigma)), 1) — a clipped
  log-normal whose mass piles up at the cap, the shape that makes average
  risk and tail risk disagree.

Every generator annotates exact averages and level-q statistics, so Monte
Carlo harnesses can classify selections against ground truth instead of
against another estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import norm

from .errors import ConfigError, DataError
from .risk import AVERAGE, Candidate, CandidateSet, LossTable, MultiObjectiveProblem, RiskSpec

KINDS = ("bernoulli", "beta", "delay_heavy_tail")

# Threshold under which heavy_tail_demo's middle candidate looks reliable
# on average but not in the 0.9-level tail.
HEAVY_TAIL_DEMO_ALPHA = 0.98
HEAVY_TAIL_DEMO_Q = 0.9


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic data-generating process.

    params is an (m candidates) x (L objectives) nest: a mean for
    bernoulli, an (a, b) pair for beta, a (mu, sigma) pair for
    delay_heavy_tail.
    """

    kind: str
    params: tuple
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        rows = tuple(tuple(self._check_cell(cell) for cell in row) for row in self.params)
        if not rows or not rows[0]:
            raise ConfigError("params must be a nonempty candidates x objectives nest")
        if len({len(r) for r in rows}) != 1:
            raise ConfigError("params rows must all have the same number of objectives")
        object.__setattr__(self, "params", rows)

    def _check_cell(self, cell):
        if self.kind == "bernoulli":
            try:
                p = float(cell)
            except (TypeError, ValueError):
                raise ConfigError(f"bernoulli parameters must be scalar means; got {cell!r}") from None
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"bernoulli mean outside [0, 1]: {p}")
            return p
        try:
            x, y = (float(v) for v in cell)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.kind} parameters must be numeric pairs; got {cell!r}") from None
        if self.kind == "beta":
            if x <= 0.0 or y <= 0.0:
                raise ConfigError(f"beta shape parameters must be positive: ({x}, {y})")
        else:
            if not math.isfinite(x):
                raise ConfigError(f"location must be finite: {x}")
            if y <= 0.0 or not math.isfinite(y):
                raise ConfigError(f"scale must be positive and finite: {y}")
        return (x, y)

    @property
    def m(self) -> int:
        return len(self.params)

    @property
    def n_objectives(self) -> int:
        return len(self.params[0])

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        width = max(3, len(str(self.m - 1)))
        return tuple(f"c{j:0{width}d}" for j in range(self.m))

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "params": [[list(c) if isinstance(c, tuple) else c for c in row] for row in self.params],
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def scenario_from_doc(doc: Mapping) -> ScenarioSpec:
    if not isinstance(doc, Mapping):
        raise ConfigError("scenario must be a JSON object")
    unknown = set(doc) - {"kind", "params", "n_samples", "seed"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        kind = doc["kind"]
        params = doc["params"]
        n_samples = int(doc["n_samples"])
        seed = int(doc.get("seed", 0))
    except KeyError as exc:
        raise ConfigError(f"scenario missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario field not an integer: {exc}") from None
    if not isinstance(params, (list, tuple)) or not params:
        raise ConfigError("'params' must be a nonempty list of per-candidate rows")
    rows = []
    for row in params:
        if not isinstance(row, (list, tuple)) or not row:
            raise ConfigError(
                "each params row needs one cell per objective, e.g. [0.2] or [[1.0, 9.0]]")
        rows.append(tuple(tuple(c) if isinstance(c, (list, tuple)) else c for c in row))
    return ScenarioSpec(kind=kind, params=tuple(rows), n_samples=n_samples, seed=seed)


class TrueRisks:
    """Exact risk functionals of a scenario's loss distributions."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec

    def average(self, candidate: int, objective: int) -> float:
        cell = self.spec.params[candidate][objective]
        if self.spec.kind == "bernoulli":
            return float(cell)
        if self.spec.kind == "beta":
            a, b = cell
            return a / (a + b)
        mu, sigma = cell
        # E min(e^N, 1) = E[e^N; N <= 0] + P[N > 0]
        below = math.exp(mu + 0.5 * sigma * sigma) * norm.cdf(-(mu + sigma * sigma) / sigma)
        return float(below + 1.0 - norm.cdf(-mu / sigma))

    def quantile(self, candidate: int, objective: int, q: float) -> float:
        """Smallest r with P[loss <= r] >= 1 - q."""
        if not (0.0 < q < 1.0):
            raise ConfigError("quantile level q must lie strictly inside (0, 1)")
        cell = self.spec.params[candidate][objective]
        if self.spec.kind == "bernoulli":
            return 0.0 if float(cell) <= q else 1.0
        if self.spec.kind == "beta":
            a, b = cell
            return float(beta_dist.ppf(1.0 - q, a, b))
        mu, sigma = cell
        return float(min(math.exp(mu + sigma * norm.ppf(1.0 - q)), 1.0))

    def risk(self, candidate: int, spec: RiskSpec) -> float:
        if spec.measure == AVERAGE:
            return self.average(candidate, spec.objective)
        return self.quantile(candidate, spec.objective, spec.q)

    def unreliable(self, problem: MultiObjectiveProblem) -> tuple[bool, ...]:
        """Null-hypothesis truth per candidate: any controlled risk at or
        above its threshold."""
        return tuple(
            any(self.risk(j, s) >= s.alpha for s in problem.controlled)
            for j in range(self.spec.m)
        )

    def to_doc(self, quantile_levels: tuple[float, ...] = ()) -> dict:
        m, L = self.spec.m, self.spec.n_objectives
        doc = {
            "kind": self.spec.kind,
            "candidates": list(self.spec.candidate_ids),
            "average": [[self.average(j, l) for l in range(L)] for j in range(m)],
        }
        if quantile_levels:
            doc["quantiles"] = {
                format(q, ".9g"): [[self.quantile(j, l, q) for l in range(L)] for j in range(m)]
                for q in quantile_levels
            }
        return doc


def generate_synthetic(spec: ScenarioSpec) -> tuple[CandidateSet, LossTable, TrueRisks]:
    """Draw a seeded loss table; identical spec -> identical table."""
    rng = np.random.default_rng(spec.seed)
    n, m, L = spec.n_samples, spec.m, spec.n_objectives
    if spec.kind == "bernoulli":
        p = np.array(spec.params, dtype=float)
        values = (rng.random((n, m, L)) < p).astype(float)
    elif spec.kind == "beta":
        cells = np.array(spec.params, dtype=float)  # (m, L, 2)
        values = rng.beta(cells[:, :, 0], cells[:, :, 1], size=(n, m, L))
    else:
        cells = np.array(spec.params, dtype=float)
        values = np.minimum(np.exp(rng.normal(cells[:, :, 0], cells[:, :, 1], size=(n, m, L))), 1.0)
    candidates = CandidateSet([Candidate(cid, descriptor={"scenario_index": j})
                               for j, cid in enumerate(spec.candidate_ids)])
    return candidates, LossTable(values), TrueRisks(spec)


def scenario_sampler(spec: ScenarioSpec, objective: int, seed: int) -> Callable[[str], float]:
    """One-loss-at-a-time sampler for adaptive sessions.

    Draw order follows call order, so a fixed (plan, seed) pair reproduces
    the same loss stream.
    """
    if not (0 <= objective < spec.n_objectives):
        raise DataError(f"objective {objective} out of range for {spec.n_objectives}")
    rng = np.random.default_rng(seed)
    index = {cid: j for j, cid in enumerate(spec.candidate_ids)}

    def sample(candidate_id: str) -> float:
        try:
            j = index[candidate_id]
        except KeyError:
            raise DataError(f"unknown candidate identifier: {candidate_id!r}") from None
        cell = spec.params[j][objective]
        if spec.kind == "bernoulli":
            return float(rng.random() < cell)
        if spec.kind == "beta":
            a, b = cell
            return float(rng.beta(a, b))
        mu, sigma = cell
        return float(min(math.exp(rng.normal(mu, sigma)), 1.0))

    return sample


def heavy_tail_demo(n_samples: int = 2000, seed: int = 0) -> ScenarioSpec:
    """Three clipped log-normal delay candidates that pull average-risk and
    tail-risk selection apart at alpha = HEAVY_TAIL_DEMO_ALPHA.

    - c000: low delays throughout — reliable on both measures
      (average ~ 0.227, 0.9-level statistic ~ 0.105).
    - c001: deceptive — average ~ 0.941 stays under the threshold while the
      0.9-level statistic saturates at 1.0 above it.
    - c002: bad on both measures (average ~ 0.995).
    """
    params = (
        ((math.log(0.2), 0.5),),
        ((3.9, 3.0),),
        ((2.06, 1.0),),
    )
    return ScenarioSpec(kind="delay_heavy_tail", params=params, n_samples=n_samples, seed=seed)


def with_seed(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    return replace(spec, seed=seed)
