"""Reliability-graph construction from pairwise prior beliefs plus held-out
data, and the RG-PT pipeline: front restriction, graph-shaped testing, FDR
control.

The prior says, for each ordered candidate pair, how likely i is to beat j
on a single sample; held-out paired comparisons update it as a pseudocount
posterior.  Edges follow the posterior down the score order, so the graph
is acyclic by construction — a wrong prior can only cost power, never
validity, because the p-values tested on the graph come from the held-out
split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError, DataError
from .evidence import candidate_p_value
from .graph import ReliabilityGraph, transitive_reduction
from .mht import FDR, SelectionResult, dagger
from .pareto import pareto_front
from .risk import (
    CandidateSet,
    LossTable,
    MultiObjectiveProblem,
    SplitConfig,
    risk_matrix,
    split_calibration,
)


@dataclass(frozen=True)
class PriorBeliefs:
    """Pairwise win probabilities eta[i, j] = belief that candidate i incurs
    the lower loss on a fresh sample, with pseudocount strength n_p.

    n_p = 0 means data-only; the diagonal is unused and pinned to 0.5.
    """

    eta: np.ndarray
    n_p: float = 0.0

    def __post_init__(self):
        eta = np.ascontiguousarray(self.eta, dtype=float)
        if eta.ndim != 2 or eta.shape[0] != eta.shape[1]:
            raise DataError(f"eta must be square; got shape {eta.shape}")
        if eta.size == 0:
            raise DataError("eta must cover at least one candidate")
        if np.isnan(eta).any() or eta.min() < 0.0 or eta.max() > 1.0:
            raise DataError("eta entries must lie in [0, 1]")
        m = eta.shape[0]
        eta[np.arange(m), np.arange(m)] = 0.5
        asym = eta + eta.T - 1.0
        if np.abs(asym).max() > 1e-9:
            i, j = np.unravel_index(np.abs(asym).argmax(), asym.shape)
            raise DataError(f"eta[{i},{j}] + eta[{j},{i}] = {eta[i, j] + eta[j, i]}, expected 1")
        if not (self.n_p >= 0.0):
            raise ConfigError("pseudocount strength n_p must be nonnegative")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def m(self) -> int:
        return self.eta.shape[0]

    def restrict(self, indices) -> "PriorBeliefs":
        idx = np.asarray(indices, dtype=int)
        return PriorBeliefs(self.eta[np.ix_(idx, idx)].copy(), self.n_p)


def uninformative_prior(m: int) -> PriorBeliefs:
    return PriorBeliefs(np.full((m, m), 0.5), 0.0)


def prior_from_doc(doc: Mapping, candidates: CandidateSet) -> PriorBeliefs:
    """Parse a prior document: {"candidates": [...], "n_p": float, and either
    "eta": dense matrix or "pairs": [[id_i, id_j, eta_ij], ...]}.

    Pairs not mentioned default to 0.5; each listed pair fixes its mirror
    entry to 1 - eta_ij.
    """
    if not isinstance(doc, Mapping):
        raise DataError("prior document must be a JSON object")
    ids = doc.get("candidates")
    if ids is None:
        raise DataError("prior document missing 'candidates'")
    if list(ids) != list(candidates.ids):
        raise DataError("prior candidate list does not match the loss table's candidates")
    m = len(candidates)
    n_p = float(doc.get("n_p", 0.0))
    if "eta" in doc and "pairs" in doc:
        raise DataError("prior document must give 'eta' or 'pairs', not both")
    if "eta" in doc:
        eta = np.asarray(doc["eta"], dtype=float)
        if eta.shape != (m, m):
            raise DataError(f"eta must be {m}x{m}; got {eta.shape}")
        return PriorBeliefs(eta, n_p)
    eta = np.full((m, m), 0.5)
    for k, entry in enumerate(doc.get("pairs", [])):
        try:
            id_i, id_j, value = entry
        except (TypeError, ValueError):
            raise DataError(f"pairs[{k}] must be [id_i, id_j, eta_ij]") from None
        i, j = candidates.index_of(str(id_i)), candidates.index_of(str(id_j))
        if i == j:
            raise DataError(f"pairs[{k}] relates a candidate to itself")
        value = float(value)
        eta[i, j] = value
        eta[j, i] = 1.0 - value
    return PriorBeliefs(eta, n_p)


def load_prior(path: str, candidates: CandidateSet) -> PriorBeliefs:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read prior file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"prior file {path} is not valid JSON: {exc}") from exc
    return prior_from_doc(doc, candidates)


def posterior_preference(prior: PriorBeliefs, table: LossTable, objective: int) -> np.ndarray:
    """Posterior win probabilities pi[i, j] after paired comparisons.

    c_ij counts samples where candidate i's loss is strictly below j's, plus
    half of the ties; pi = (n_p * eta + c) / (n_p + n).  With no data the
    posterior is the prior; with no prior it is the paired win rate.
    """
    m = prior.m
    if table.n_candidates != m:
        raise DataError(f"prior covers {m} candidates but table has {table.n_candidates}")
    if not (0 <= objective < table.n_objectives):
        raise DataError(f"objective {objective} out of range for {table.n_objectives}")
    n = table.n_samples
    if prior.n_p + n <= 0.0:
        raise DataError("no data and no prior mass: posterior undefined")
    losses = table.values[:, :, objective]  # (n, m)
    a = losses[:, :, None]
    b = losses[:, None, :]
    wins = (a < b).sum(axis=0).astype(float)
    ties = (a == b).sum(axis=0).astype(float)
    c = wins + 0.5 * ties
    pi = (prior.n_p * prior.eta + c) / (prior.n_p + n)
    pi[np.arange(m), np.arange(m)] = 0.5
    return pi


def build_rg(
    posterior: np.ndarray, tau: float = 0.6, ids=None
) -> ReliabilityGraph:
    """Build the reliability graph from a posterior preference matrix.

    Candidates are ranked by mean win probability (identifier tie-break);
    an edge i -> j is drawn when i ranks above j and the posterior backs it
    at strength tau or more.  All edges point down the ranking, so the
    result is a DAG; the transitive reduction keeps only the covering
    relations, which is what gives level-wise testing meaningful depths.
    """
    pi = np.asarray(posterior, dtype=float)
    if pi.ndim != 2 or pi.shape[0] != pi.shape[1] or pi.shape[0] == 0:
        raise DataError(f"posterior must be a nonempty square matrix; got shape {pi.shape}")
    m = pi.shape[0]
    if np.isnan(pi).any() or pi.min() < 0.0 or pi.max() > 1.0:
        raise DataError("posterior entries must lie in [0, 1]")
    off = ~np.eye(m, dtype=bool)
    if m > 1 and np.abs((pi + pi.T - 1.0)[off]).max() > 1e-9:
        raise DataError("inconsistent posterior: pi[i,j] + pi[j,i] must equal 1")
    if not (0.5 < tau <= 1.0):
        raise ConfigError("edge threshold tau must lie in (0.5, 1]")
    if ids is None:
        ids = tuple(str(i) for i in range(m))
    else:
        ids = tuple(str(i) for i in ids)
        if len(ids) != m:
            raise DataError(f"{len(ids)} identifiers for {m} candidates")

    if m == 1:
        return ReliabilityGraph(ids, [])
    scores = pi.sum(axis=1, where=off) / (m - 1)
    rank = sorted(range(m), key=lambda i: (-scores[i], ids[i]))
    position = {i: k for k, i in enumerate(rank)}
    edges = [(i, j)
             for i in range(m) for j in range(m)
             if i != j and position[i] < position[j] and pi[i, j] >= tau]
    return ReliabilityGraph(ids, transitive_reduction(ids, edges))


def rg_pt(
    candidates: CandidateSet,
    table: LossTable,
    problem: MultiObjectiveProblem,
    prior: PriorBeliefs,
    split: SplitConfig,
    tau: float = 0.6,
    delta: float = 0.1,
    preference_objective: int | None = None,
) -> SelectionResult:
    """RG-PT: Pareto restriction as in plain PT, then graph-shaped step-up
    testing of held-out evidence, certifying FDR at level delta.

    The graph is estimated on the optimization split (pairwise comparisons
    on preference_objective, defaulting to the first controlled one) over
    the front members only; testing-split p-values are combined over all
    controlled objectives and fed to the ancestor-gated step-up.
    """
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie strictly inside (0, 1)")
    if len(candidates) != table.n_candidates:
        raise DataError(f"{len(candidates)} candidates for a table with {table.n_candidates}")
    if problem.n_objectives != table.n_objectives:
        raise DataError(
            f"problem declares {problem.n_objectives} objectives but table has {table.n_objectives}"
        )
    if prior.m != len(candidates):
        raise DataError(f"prior covers {prior.m} candidates but there are {len(candidates)}")
    if preference_objective is None:
        preference_objective = problem.controlled[0].objective
    if preference_objective not in {s.objective for s in problem.controlled}:
        raise ConfigError(f"preference objective {preference_objective} is not controlled")

    opt, mht = split_calibration(table, split)
    if opt.n_samples < 2 or mht.n_samples < 2:
        raise DataError(
            f"need at least 2 samples per split; got {opt.n_samples} optimization, {mht.n_samples} testing"
        )

    risks = risk_matrix(opt, problem)
    front = pareto_front(risks, ids=candidates.ids)
    members = list(front.members)

    pi = posterior_preference(
        prior.restrict(members), opt.subset_candidates(members), preference_objective
    )
    graph = build_rg(pi, tau, ids=front.member_ids)

    p_mht = {candidates.ids[j]: candidate_p_value(mht, j, problem, split="mht")
             for j in members}
    inner = dagger(graph, p_mht, delta)

    return SelectionResult(
        procedure="rg_pt",
        guarantee=FDR,
        delta=delta,
        selected=inner.selected,
        evidence=inner.evidence,
        evidence_kind="p_value",
        audit=inner.audit,
        metadata={
            "split": {"optimization": opt.n_samples, "testing": mht.n_samples,
                      "fraction_opt": split.fraction_opt, "seed": split.seed},
            "front": list(front.member_ids),
            "graph": graph.to_doc(),
            "tau": tau,
            "preference_objective": preference_objective,
            "pseudocount": prior.n_p,
        },
    )
