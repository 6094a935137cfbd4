"""Multiple-testing engines: per-candidate evidence in, certified selection out.

Every procedure returns a SelectionResult whose audit log records each
threshold comparison actually made, in the order made, so the selection can
be recomputed from the log alone.  Empty selections are valid outcomes, not
errors — abstention is the safe default.

Deterministic tie-breaking throughout: equal evidence is ordered by
candidate identifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, DataError
from .evidence import EProcessState, PValue, ville_reject
from .graph import ReliabilityGraph

FWER = "FWER"
FDR = "FDR"


@dataclass(frozen=True)
class SelectionResult:
    """A certified selection plus everything needed to audit it.

    selected preserves meaningful order: prefix order for sequential
    procedures (fixed-sequence variants), identifier order for set-valued
    ones.  evidence maps every candidate to the scalar the procedure
    thresholded (p-value, upper bound, or wealth); audit lists the
    comparisons in execution order.
    """

    procedure: str
    guarantee: str
    delta: float
    selected: tuple[str, ...]
    evidence: dict[str, float]
    evidence_kind: str
    audit: tuple[dict, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.guarantee not in (FWER, FDR):
            raise ConfigError(f"unknown guarantee {self.guarantee!r}")
        extra = set(self.selected) - set(self.evidence)
        if extra:
            raise DataError(f"selected candidates outside the tested set: {sorted(extra)}")

    def to_doc(self) -> dict:
        return {
            "procedure": self.procedure,
            "guarantee": self.guarantee,
            "delta": self.delta,
            "selected": list(self.selected),
            "evidence_kind": self.evidence_kind,
            "evidence": dict(sorted(self.evidence.items())),
            "audit": list(self.audit),
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class ConfidenceBound:
    """Upper confidence bound on one candidate's risk, at a stated level."""

    candidate_id: str
    value: float
    level: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise DataError(f"confidence bound outside [0, 1]: {self.value}")
        if not (0.0 < self.level < 1.0):
            raise ConfigError("confidence level must lie strictly inside (0, 1)")


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie strictly inside (0, 1)")


def _by_value_then_id(p: Mapping[str, PValue]) -> list[tuple[str, PValue]]:
    return sorted(p.items(), key=lambda kv: (kv[1].value, kv[0]))


def bonferroni(p: Mapping[str, PValue], delta: float) -> SelectionResult:
    """Select every candidate with p strictly below delta / m."""
    _check_delta(delta)
    if not p:
        raise DataError("no candidates to test")
    m = len(p)
    threshold = delta / m
    audit = []
    selected = []
    for cid in sorted(p):
        ok = p[cid].value < threshold
        audit.append({"candidate": cid, "p": p[cid].value, "threshold": threshold,
                      "comparison": "<", "selected": ok})
        if ok:
            selected.append(cid)
    return SelectionResult(
        procedure="bonferroni", guarantee=FWER, delta=delta,
        selected=tuple(selected),
        evidence={cid: pv.value for cid, pv in p.items()},
        evidence_kind="p_value",
        audit=tuple(audit),
        metadata={"m": m},
    )


def fixed_sequence_test(ordered: Sequence[tuple[str, PValue]], delta: float) -> SelectionResult:
    """Walk the presumed-reliability order, selecting while p <= delta.

    Halts at the first violation; later candidates are never tested, which
    is what lets every test run at the full level delta.
    """
    _check_delta(delta)
    if not ordered:
        raise DataError("no candidates to test")
    ids = [cid for cid, _ in ordered]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate candidate in test order")
    audit = []
    selected = []
    for cid, pv in ordered:
        ok = pv.value <= delta
        audit.append({"candidate": cid, "p": pv.value, "threshold": delta,
                      "comparison": "<=", "selected": ok})
        if not ok:
            break
        selected.append(cid)
    return SelectionResult(
        procedure="fixed_sequence", guarantee=FWER, delta=delta,
        selected=tuple(selected),
        evidence={cid: pv.value for cid, pv in ordered},
        evidence_kind="p_value",
        audit=tuple(audit),
        metadata={"order": ids, "halted_at": len(audit) - 1 if len(selected) < len(ordered) else None},
    )


def ucb_fixed_sequence(ordered: Sequence[ConfidenceBound], alpha: float) -> SelectionResult:
    """Fixed-sequence testing on upper confidence bounds: select while R+ < alpha.

    All bounds must share one confidence level; that level is the
    family-wise guarantee of the prefix selection.
    """
    if not ordered:
        raise DataError("no candidates to test")
    if not (0.0 < alpha < 1.0):
        raise ConfigError("alpha must lie strictly inside (0, 1)")
    levels = {b.level for b in ordered}
    if len(levels) > 1:
        raise DataError(f"mixed confidence levels in one sequence: {sorted(levels)}")
    delta = levels.pop()
    ids = [b.candidate_id for b in ordered]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate candidate in test order")
    audit = []
    selected = []
    for b in ordered:
        ok = b.value < alpha
        audit.append({"candidate": b.candidate_id, "upper_bound": b.value, "threshold": alpha,
                      "comparison": "<", "selected": ok})
        if not ok:
            break
        selected.append(b.candidate_id)
    return SelectionResult(
        procedure="ucb_fixed_sequence", guarantee=FWER, delta=delta,
        selected=tuple(selected),
        evidence={b.candidate_id: b.value for b in ordered},
        evidence_kind="upper_bound",
        audit=tuple(audit),
        metadata={"order": ids, "alpha": alpha},
    )


def benjamini_hochberg(p: Mapping[str, PValue], delta: float) -> SelectionResult:
    """Step-up over sorted p-values: largest k with p_(k) <= delta * k / m."""
    _check_delta(delta)
    if not p:
        raise DataError("no candidates to test")
    m = len(p)
    ranked = _by_value_then_id(p)
    audit = []
    best_k = 0
    for k, (cid, pv) in enumerate(ranked, start=1):
        threshold = delta * k / m
        ok = pv.value <= threshold
        audit.append({"candidate": cid, "rank": k, "p": pv.value, "threshold": threshold,
                      "comparison": "<=", "passes": ok})
        if ok:
            best_k = k
    selected = sorted(cid for cid, _ in ranked[:best_k])
    return SelectionResult(
        procedure="benjamini_hochberg", guarantee=FDR, delta=delta,
        selected=tuple(selected),
        evidence={cid: pv.value for cid, pv in p.items()},
        evidence_kind="p_value",
        audit=tuple(audit),
        metadata={"m": m, "k": best_k},
    )


def dagger(graph: ReliabilityGraph, p: Mapping[str, PValue], delta: float) -> SelectionResult:
    """Ancestor-gated, leaf-weighted step-up testing over a DAG.

    Nodes become testable only once all parents are rejected.  Depths
    (longest path from the roots) are processed in order; within the
    testable set at each depth, a step-up finds the largest r such that at
    least r nodes satisfy p_v <= delta * leaves(v) * (R + r) / L_total,
    where R counts earlier rejections and L_total the graph's leaves.  On
    an edgeless graph this is exactly the flat step-up of
    benjamini_hochberg.  Terminates at the first depth that yields no new
    rejection (no deeper node can become testable after that).
    """
    _check_delta(delta)
    if set(p) != set(graph.ids):
        missing = sorted(set(graph.ids) - set(p))
        extra = sorted(set(p) - set(graph.ids))
        raise DataError(f"candidate/node mismatch: missing p-values {missing}, unknown candidates {extra}")
    l_total = graph.n_leaves
    rejected: set[int] = set()
    audit = []
    for d in range(graph.max_depth + 1):
        testable = [v for v in graph.nodes_at_depth(d)
                    if all(u in rejected for u in graph.parents(v))]
        # Sort by (p, id) so equal thresholds resolve deterministically.
        testable.sort(key=lambda v: (p[graph.ids[v]].value, graph.ids[v]))
        new: list[int] = []
        chosen_r = 0
        for r in range(len(testable), 0, -1):
            budget = delta * (len(rejected) + r) / l_total
            passing = [v for v in testable
                       if p[graph.ids[v]].value <= budget * graph.leaf_descendants(v)]
            if len(passing) >= r:
                # At the maximal feasible r exactly r nodes pass.
                new = passing
                chosen_r = r
                break
        audit.append({
            "depth": d,
            "testable": [graph.ids[v] for v in testable],
            "rejections_before": len(rejected),
            "step_up_r": chosen_r,
            "comparisons": [
                {"candidate": graph.ids[v], "p": p[graph.ids[v]].value,
                 "threshold": delta * graph.leaf_descendants(v) * (len(rejected) + max(chosen_r, 1)) / l_total,
                 "selected": v in new}
                for v in testable
            ],
        })
        if not new:
            break
        rejected.update(new)
    selected = sorted(graph.ids[v] for v in rejected)
    return SelectionResult(
        procedure="dagger", guarantee=FDR, delta=delta,
        selected=tuple(selected),
        evidence={cid: pv.value for cid, pv in p.items()},
        evidence_kind="p_value",
        audit=tuple(audit),
        metadata={"graph": graph.to_doc(), "n_leaves": l_total},
    )


def evalue_fwer(states: Mapping[str, EProcessState], delta: float) -> SelectionResult:
    """Select every candidate whose e-process wealth reached m / delta.

    Valid at any data-dependent stopping time: each e-process is a
    supermartingale under its null, so Ville's inequality bounds the
    per-candidate crossing probability by delta / m.
    """
    _check_delta(delta)
    if not states:
        raise DataError("no candidates to test")
    m = len(states)
    threshold = m / delta
    audit = []
    selected = []
    for cid in sorted(states):
        ok = ville_reject(states[cid], delta, m)
        audit.append({"candidate": cid, "wealth": states[cid].wealth, "threshold": threshold,
                      "comparison": ">=", "selected": ok})
        if ok:
            selected.append(cid)
    return SelectionResult(
        procedure="evalue_fwer", guarantee=FWER, delta=delta,
        selected=tuple(selected),
        evidence={cid: st.wealth for cid, st in states.items()},
        evidence_kind="e_wealth",
        audit=tuple(audit),
        metadata={"m": m},
    )
