"""Adaptive calibration: spend the query budget where the evidence is
growing, stop early, and keep the family-wise guarantee at the (data-
dependent) stopping time.

One e-process per candidate accumulates wealth as losses arrive; a
candidate is accepted as reliable the moment its wealth crosses m / delta
(Ville + union bound over the m candidates fixed at session start), after
which it is never queried again.  Because the e-processes are anytime
valid, any stopping rule that reads only the session state — budget,
round count, rejection count — preserves the guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .evidence import BettingConfig, EProcessState, eprocess_update, ville_reject
from .mht import FWER, SelectionResult
from .risk import CandidateSet


@dataclass(frozen=True)
class AcquisitionPolicy:
    """How each round's queries are allocated across non-rejected candidates.

    epsilon_greedy: each slot explores uniformly at random with probability
    epsilon, otherwise exploits the candidate with the highest current
    wealth (identifier tie-break).  uniform: round-robin cycling.
    queries_per_round = None means one slot per candidate.
    """

    kind: str = "epsilon_greedy"
    epsilon: float = 0.1
    queries_per_round: int | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "epsilon_greedy"):
            raise ConfigError(f"unknown acquisition policy {self.kind!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.queries_per_round is not None and self.queries_per_round < 1:
            raise ConfigError("queries_per_round must be >= 1")

    def to_doc(self) -> dict:
        return {"kind": self.kind, "epsilon": self.epsilon,
                "queries_per_round": self.queries_per_round}


@dataclass(frozen=True)
class StopRule:
    """Session-state stopping condition: query budget, round cap, or a
    target rejection count.  At least one of max_queries / max_rounds must
    be set so every session terminates; max_rounds = 0 is a valid empty
    run, while a zero query budget is a configuration error.
    """

    max_queries: int | None = None
    max_rounds: int | None = None
    target_rejections: int | None = None

    def __post_init__(self):
        if self.max_queries is None and self.max_rounds is None:
            raise ConfigError("stop rule must bound queries or rounds")
        if self.max_queries is not None and self.max_queries < 1:
            raise ConfigError("zero budget: max_queries must be >= 1 when set")
        if self.max_rounds is not None and self.max_rounds < 0:
            raise ConfigError("max_rounds must be >= 0")
        if self.target_rejections is not None and self.target_rejections < 1:
            raise ConfigError("target_rejections must be >= 1 when set")

    def to_doc(self) -> dict:
        return {"max_queries": self.max_queries, "max_rounds": self.max_rounds,
                "target_rejections": self.target_rejections}


class AdaptiveSession:
    """Single-writer state of one adaptive calibration run.

    Rounds are strictly sequential: plan queries with altt_round, fulfil
    them, fold the losses back in with altt_update.  The rejected list only
    grows; rejected candidates never appear in later plans, and their
    e-processes stay frozen at the crossing value.
    """

    def __init__(
        self,
        candidates: CandidateSet | Sequence[str],
        alpha: float,
        delta: float,
        betting: BettingConfig | None = None,
        stop: StopRule | None = None,
    ):
        ids = candidates.ids if isinstance(candidates, CandidateSet) else tuple(str(c) for c in candidates)
        if not ids:
            raise DataError("candidate set is empty")
        if len(set(ids)) != len(ids):
            raise DataError("duplicate candidate identifiers")
        if not (0.0 < delta < 1.0):
            raise ConfigError("delta must lie strictly inside (0, 1)")
        self.ids = ids
        self.m = len(ids)
        self.alpha = alpha
        self.delta = delta
        self.betting = betting if betting is not None else BettingConfig()
        # stop = None means externally signalled: the caller just stops
        # driving rounds; only total rejection halts the session by itself.
        self.stop = stop
        self.states = {cid: EProcessState(alpha=alpha, config=self.betting) for cid in ids}
        self._rr_pointer = 0
        self.query_counts = {cid: 0 for cid in ids}
        self.observations: dict[str, list[float]] = {cid: [] for cid in ids}
        self.rejected: list[str] = []
        self.rejected_set: set[str] = set()
        self.budget_consumed = 0
        self.rounds_completed = 0
        self.pending_plan: list[str] | None = None
        self.round_log: list[dict] = []
        self.stopped = self._stop_now()

    def active(self) -> list[str]:
        return [cid for cid in self.ids if cid not in self.rejected_set]

    def wealth(self, cid: str) -> float:
        return self.states[cid].wealth

    def _stop_now(self) -> bool:
        s = self.stop
        if s is not None:
            if s.max_queries is not None and self.budget_consumed >= s.max_queries:
                return True
            if s.max_rounds is not None and self.rounds_completed >= s.max_rounds:
                return True
            if s.target_rejections is not None and len(self.rejected) >= s.target_rejections:
                return True
        return len(self.rejected) == self.m


def altt_round(session: AdaptiveSession, policy: AcquisitionPolicy, rng_seed: int) -> list[str]:
    """Plan this round's queries; never names a rejected candidate.

    With everything rejected (or no budget left for a single query) the
    plan is empty and the session is marked stopped.
    """
    if session.stopped:
        raise ConfigError("session already stopped")
    if session.pending_plan is not None:
        raise ConfigError("previous round's plan has not been fulfilled")
    active = session.active()
    if not active:
        session.stopped = True
        return []
    k = policy.queries_per_round if policy.queries_per_round is not None else session.m
    if session.stop is not None and session.stop.max_queries is not None:
        k = min(k, session.stop.max_queries - session.budget_consumed)
    if k <= 0:
        session.stopped = True
        return []

    if policy.kind == "uniform":
        start = session._rr_pointer
        plan = [active[(start + i) % len(active)] for i in range(k)]
        session._rr_pointer = (start + k) % len(active)
    else:
        rng = np.random.default_rng(rng_seed)
        best = min(active, key=lambda cid: (-session.wealth(cid), cid))
        explore = rng.random(k) < policy.epsilon
        picks = rng.integers(0, len(active), size=k)
        plan = [active[picks[i]] if explore[i] else best for i in range(k)]

    session.pending_plan = plan
    return list(plan)


def altt_update(session: AdaptiveSession, observations: Mapping[str, Sequence[float]]) -> AdaptiveSession:
    """Fold one round's observed losses into the session.

    Only candidates named by the pending plan may report, with at most as
    many losses as they were asked for; partial and empty rounds are fine
    (the round still counts).  Newly crossed candidates join the rejected
    list in identifier order.
    """
    if session.pending_plan is None:
        raise ConfigError("no pending query plan; call altt_round first")
    plan = session.pending_plan
    planned: dict[str, int] = {}
    for cid in plan:
        planned[cid] = planned.get(cid, 0) + 1
    for cid, losses in observations.items():
        if cid in session.rejected_set:
            raise DataError(f"observation for rejected candidate {cid!r}")
        if cid not in planned:
            raise DataError(f"observation for unqueried candidate {cid!r}")
        if len(losses) > planned[cid]:
            raise DataError(
                f"{len(losses)} observations for {cid!r} but only {planned[cid]} queried"
            )

    queues = {cid: iter(losses) for cid, losses in observations.items()}
    folded: dict[str, list[float]] = {}
    for cid in plan:
        it = queues.get(cid)
        if it is None:
            continue
        loss = next(it, None)
        if loss is None:
            continue
        loss = float(loss)
        session.states[cid] = eprocess_update(session.states[cid], loss)
        session.query_counts[cid] += 1
        session.budget_consumed += 1
        session.observations[cid].append(loss)
        folded.setdefault(cid, []).append(loss)

    new = sorted(
        cid for cid in session.active()
        if ville_reject(session.states[cid], session.delta, session.m)
    )
    session.rejected.extend(new)
    session.rejected_set.update(new)
    session.rounds_completed += 1
    session.round_log.append({
        "round": session.rounds_completed,
        "plan": list(plan),
        "observations": folded,
        "new_rejections": new,
        "budget_consumed": session.budget_consumed,
    })
    session.pending_plan = None
    session.stopped = session._stop_now()
    return session


def altt_run(
    sampler: Callable[[str], float],
    candidates: CandidateSet | Sequence[str],
    alpha: float,
    delta: float,
    policy: AcquisitionPolicy | None = None,
    stop: StopRule | None = None,
    betting: BettingConfig | None = None,
    seed: int = 0,
) -> SelectionResult:
    """Run a full adaptive session against a per-candidate loss sampler.

    Per-round RNG streams are spawned from the master seed, so (seed,
    sampler, policy, stop) fully determine the run.  The audit log carries
    every plan and every observed loss; replaying it reproduces each
    wealth trajectory exactly.
    """
    if stop is None:
        raise ConfigError("a stop rule is required")
    policy = policy if policy is not None else AcquisitionPolicy()
    session = AdaptiveSession(candidates, alpha, delta, betting=betting, stop=stop)

    round_idx = 0
    while not session.stopped:
        rng_seed = int(np.random.SeedSequence(seed, spawn_key=(round_idx,)).generate_state(1, np.uint64)[0])
        plan = altt_round(session, policy, rng_seed)
        if not plan:
            break
        observations: dict[str, list[float]] = {}
        for cid in plan:
            loss = float(sampler(cid))
            observations.setdefault(cid, []).append(loss)
        altt_update(session, observations)
        round_idx += 1

    return SelectionResult(
        procedure="altt",
        guarantee=FWER,
        delta=delta,
        selected=tuple(sorted(session.rejected)),
        evidence={cid: session.wealth(cid) for cid in session.ids},
        evidence_kind="e_wealth",
        audit=tuple(session.round_log),
        metadata={
            "m": session.m,
            "alpha": alpha,
            "seed": seed,
            "rounds": session.rounds_completed,
            "budget_consumed": session.budget_consumed,
            "query_counts": dict(session.query_counts),
            "rejection_order": list(session.rejected),
            "policy": policy.to_doc(),
            "stop": stop.to_doc(),
            "betting": {"strategy": session.betting.strategy,
                        "mu0": session.betting.mu0, "clip": session.betting.clip},
        },
    )
