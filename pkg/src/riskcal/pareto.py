"""Pareto Testing: restrict to the estimated front, order by optimization-split
evidence, certify on held-out evidence.

Splitting is what makes the pipeline valid: the front and the test order are
functions of the optimization split only, so the testing-split p-values fed
to the fixed-sequence test are independent of how they were arranged.
Provenance tags on p-values enforce that discipline mechanically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, ProvenanceError
from .evidence import PValue, candidate_p_value
from .mht import FWER, SelectionResult, fixed_sequence_test
from .risk import (
    CandidateSet,
    LossTable,
    MultiObjectiveProblem,
    SplitConfig,
    risk_matrix,
    split_calibration,
)


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated candidates under coordinatewise minimization.

    members are indices into ids/risks; risks is the full estimated
    (candidate x objective) matrix the front was computed from.
    """

    members: tuple[int, ...]
    ids: tuple[str, ...]
    risks: np.ndarray

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(self.ids[i] for i in self.members)


def pareto_front(points: np.ndarray | Sequence[Sequence[float]], ids: Sequence[str] | None = None) -> ParetoFront:
    """Weak-domination front: drop a point only if another is at least as good
    everywhere and strictly better somewhere.  Exact duplicates never dominate
    each other, so statistically indistinguishable candidates all survive to
    be tested.

    Single lexicographic sweep: dominators always sort before their victims,
    so each point needs checking only against the front built so far.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DataError("need a nonempty list of equal-length risk vectors")
    if not np.isfinite(pts).all():
        raise DataError("risk vectors must be finite")
    m = pts.shape[0]
    if ids is None:
        ids = tuple(str(i) for i in range(m))
    else:
        ids = tuple(ids)
        if len(ids) != m:
            raise DataError(f"{len(ids)} identifiers for {m} points")

    order = sorted(range(m), key=lambda i: tuple(pts[i]))
    members: list[int] = []
    front_rows = np.empty_like(pts)
    k = 0
    for i in order:
        if k:
            f = front_rows[:k]
            dominated = ((f <= pts[i]).all(axis=1) & (f < pts[i]).any(axis=1)).any()
            if dominated:
                continue
        front_rows[k] = pts[i]
        k += 1
        members.append(i)
    members.sort()
    return ParetoFront(members=tuple(members), ids=ids, risks=pts)


def pt_order(front: ParetoFront, p_opt: Mapping[str, PValue]) -> list[str]:
    """Test order for the front: ascending optimization-split p-value,
    identifier as the tie-break.  Rejects any evidence not tagged "opt" —
    ordering by held-out p-values would spend the testing data twice.
    """
    member_ids = set(front.member_ids)
    if set(p_opt) != member_ids:
        missing = sorted(member_ids - set(p_opt))
        extra = sorted(set(p_opt) - member_ids)
        raise DataError(f"order evidence mismatch: missing {missing}, unexpected {extra}")
    wrong = sorted(cid for cid, pv in p_opt.items() if pv.split != "opt")
    if wrong:
        raise ProvenanceError(f"ordering requires optimization-split p-values; got other splits for {wrong}")
    return sorted(p_opt, key=lambda cid: (p_opt[cid].value, cid))


def pareto_testing(
    candidates: CandidateSet,
    table: LossTable,
    problem: MultiObjectiveProblem,
    split: SplitConfig,
    delta: float,
) -> SelectionResult:
    """Full pipeline: split, estimate risks, front, order, fixed-sequence test.

    Every selected candidate is certified against all controlled objectives
    jointly (the per-candidate p-value is the max over objectives, which is
    valid for the union of the per-objective nulls) at family-wise level
    delta.
    """
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie strictly inside (0, 1)")
    if len(candidates) != table.n_candidates:
        raise DataError(f"{len(candidates)} candidates for a table with {table.n_candidates}")
    if problem.n_objectives != table.n_objectives:
        raise DataError(
            f"problem declares {problem.n_objectives} objectives but table has {table.n_objectives}"
        )

    opt, mht = split_calibration(table, split)
    if opt.n_samples < 2 or mht.n_samples < 2:
        raise DataError(
            f"need at least 2 samples per split; got {opt.n_samples} optimization, {mht.n_samples} testing"
        )

    risks = risk_matrix(opt, problem)
    front = pareto_front(risks, ids=candidates.ids)

    p_opt = {candidates.ids[j]: candidate_p_value(opt, j, problem, split="opt")
             for j in front.members}
    order = pt_order(front, p_opt)

    p_mht = {candidates.ids[j]: candidate_p_value(mht, j, problem, split="mht")
             for j in front.members}
    fst = fixed_sequence_test([(cid, p_mht[cid]) for cid in order], delta)

    return SelectionResult(
        procedure="pareto_testing",
        guarantee=FWER,
        delta=delta,
        selected=fst.selected,
        evidence={cid: p_mht[cid].value for cid in order},
        evidence_kind="p_value",
        audit=fst.audit,
        metadata={
            "split": {"optimization": opt.n_samples, "testing": mht.n_samples,
                      "fraction_opt": split.fraction_opt, "seed": split.seed},
            "front": list(front.member_ids),
            "order": order,
            "ordering_p_values": {cid: p_opt[cid].value for cid in order},
            "estimated_risks": {candidates.ids[j]: [float(x) for x in risks[j]]
                                for j in front.members},
        },
    )
