"""Method registry and the single-document run configuration.

One JSON config fully determines a calibration run: method, level delta,
thresholds, data source (inline CSV, synthetic scenario, or an adaptive
feed), and method-specific knobs.  Seeds for the split, the scenario, and
the acquisition policy are derived from one master seed unless given
explicitly, so a config plus a seed reproduces a run byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .adaptive import AcquisitionPolicy, AdaptiveSession, StopRule, altt_run, altt_update
from .errors import ConfigError, DataError
from .evidence import BettingConfig, candidate_p_value
from .io import parse_loss_csv
from .mht import SelectionResult, bonferroni
from .pareto import pareto_testing
from .rg import PriorBeliefs, load_prior, prior_from_doc, rg_pt, uninformative_prior
from .risk import (
    AVERAGE,
    CONTROLLED,
    FREE,
    QUANTILE,
    CandidateSet,
    LossTable,
    MultiObjectiveProblem,
    RiskSpec,
    SplitConfig,
)
from .scenarios import ScenarioSpec, TrueRisks, generate_synthetic, scenario_from_doc, scenario_sampler


@dataclass(frozen=True)
class MethodInfo:
    name: str
    measure: str
    guarantee: str
    multi_objective: bool
    adaptive: bool
    description: str

    def to_doc(self) -> dict:
        return {"measure": self.measure, "guarantee": self.guarantee,
                "multi_objective": self.multi_objective, "adaptive": self.adaptive,
                "description": self.description}


METHODS: dict[str, MethodInfo] = {
    "ltt": MethodInfo("ltt", AVERAGE, "FWER", False, False,
                      "Average-risk selection via per-candidate concentration p-values and Bonferroni."),
    "qltt": MethodInfo("qltt", QUANTILE, "FWER", False, False,
                       "Quantile-risk selection via exact binomial p-values and Bonferroni."),
    "pt": MethodInfo("pt", AVERAGE, "FWER", True, False,
                     "Split, Pareto-front restriction, ordered fixed-sequence testing."),
    "rgpt": MethodInfo("rgpt", AVERAGE, "FDR", True, False,
                       "Pareto restriction plus a prior-informed reliability graph, tested level-wise."),
    "altt": MethodInfo("altt", AVERAGE, "FWER", False, True,
                       "Sequential acquisition with per-candidate e-processes and anytime-valid stopping."),
}

_TOP_KEYS = {
    "method", "delta", "alphas", "quantile_q", "split", "prior", "prior_path", "tau",
    "preference_objective", "betting", "policy", "stop", "seed",
    "input", "input_csv", "scenario", "feed", "feed_jsonl", "check",
}


def derive_seed(master: int, *key: int) -> int:
    """Stable 64-bit child seed of a master seed."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RunConfig:
    method: str
    delta: float
    alphas: tuple[float, ...]
    seed: int
    quantile_q: float | None = None
    split: Mapping | None = None
    prior: Mapping | None = None
    prior_path: str | None = None
    tau: float = 0.6
    preference_objective: int | None = None
    betting: BettingConfig | None = None
    policy: AcquisitionPolicy | None = None
    stop: StopRule | None = None
    input_path: str | None = None
    input_csv: str | None = None
    scenario: ScenarioSpec | None = None
    scenario_seed_explicit: bool = False
    feed_path: str | None = None
    feed_jsonl: str | None = None

    @property
    def info(self) -> MethodInfo:
        return METHODS[self.method]

    def echo(self) -> dict:
        """Compact, data-free configuration echo for audit metadata."""
        doc: dict = {"method": self.method, "delta": self.delta,
                     "alphas": list(self.alphas), "seed": self.seed}
        if self.quantile_q is not None:
            doc["quantile_q"] = self.quantile_q
        if self.method in ("pt", "rgpt"):
            doc["split"] = dict(self.split) if self.split else {}
        if self.method == "rgpt":
            doc["tau"] = self.tau
        if self.scenario is not None:
            doc["scenario"] = self.scenario.to_doc()
        if self.input_path is not None:
            doc["input"] = self.input_path
        return doc


def parse_run_config(doc: Mapping, seed_override: int | None = None) -> RunConfig:
    """Validate a config document; every error names the offending key."""
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    method = doc.get("method")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {sorted(METHODS)}; got {method!r}")
    info = METHODS[method]

    if "delta" not in doc:
        raise ConfigError("config missing 'delta'")
    delta = float(doc["delta"])
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie strictly inside (0, 1)")

    alphas_doc = doc.get("alphas")
    if not isinstance(alphas_doc, (list, tuple)) or not alphas_doc:
        raise ConfigError("'alphas' must be a nonempty list of thresholds")
    alphas = tuple(float(a) for a in alphas_doc)
    if any(not (0.0 < a < 1.0) for a in alphas):
        raise ConfigError("every alpha must lie strictly inside (0, 1)")
    if not info.multi_objective and len(alphas) != 1:
        raise ConfigError(f"method {method!r} controls a single objective; give exactly one alpha")

    quantile_q = doc.get("quantile_q")
    if method == "qltt":
        if quantile_q is None:
            raise ConfigError("qltt requires 'quantile_q'")
        quantile_q = float(quantile_q)
        if not (0.0 < quantile_q < 1.0):
            raise ConfigError("quantile_q must lie strictly inside (0, 1)")
    elif quantile_q is not None:
        raise ConfigError(f"'quantile_q' only applies to qltt, not {method!r}")

    for key, methods in (("split", ("pt", "rgpt")), ("prior", ("rgpt",)),
                         ("prior_path", ("rgpt",)), ("tau", ("rgpt",)),
                         ("preference_objective", ("rgpt",)),
                         ("betting", ("altt",)), ("policy", ("altt",)), ("stop", ("altt",)),
                         ("feed", ("altt",)), ("feed_jsonl", ("altt",))):
        if key in doc and method not in methods:
            raise ConfigError(f"{key!r} only applies to {'/'.join(methods)}, not {method!r}")

    if seed_override is not None:
        seed = int(seed_override)
    elif "seed" in doc:
        seed = int(doc["seed"])
    else:
        raise ConfigError("config missing 'seed' (or pass --seed)")
    if not (0 <= seed < 2**64):
        raise ConfigError("seed must be a 64-bit unsigned integer")

    if "prior" in doc and "prior_path" in doc:
        raise ConfigError("give 'prior' inline or 'prior_path', not both")

    sources = [k for k in ("input", "input_csv", "scenario", "feed", "feed_jsonl") if k in doc]
    if len(sources) != 1:
        raise ConfigError(f"config must name exactly one data source "
                          f"(input | input_csv | scenario | feed); got {sources or 'none'}")

    scenario = None
    scenario_seed_explicit = False
    if "scenario" in doc:
        scenario_seed_explicit = isinstance(doc["scenario"], Mapping) and "seed" in doc["scenario"]
        scenario = scenario_from_doc(doc["scenario"])

    betting = None
    if "betting" in doc:
        b = doc["betting"]
        unknown_b = set(b) - {"strategy", "mu0", "clip"}
        if unknown_b:
            raise ConfigError(f"unknown betting keys: {sorted(unknown_b)}")
        betting = BettingConfig(strategy=b.get("strategy", "adaptive"),
                                mu0=float(b.get("mu0", 0.5)), clip=float(b.get("clip", 0.5)))
    policy = None
    if "policy" in doc:
        pdoc = doc["policy"]
        unknown_p = set(pdoc) - {"kind", "epsilon", "queries_per_round"}
        if unknown_p:
            raise ConfigError(f"unknown policy keys: {sorted(unknown_p)}")
        qpr = pdoc.get("queries_per_round")
        policy = AcquisitionPolicy(kind=pdoc.get("kind", "epsilon_greedy"),
                                   epsilon=float(pdoc.get("epsilon", 0.1)),
                                   queries_per_round=int(qpr) if qpr is not None else None)
    stop = None
    if "stop" in doc:
        sdoc = doc["stop"]
        unknown_s = set(sdoc) - {"max_queries", "max_rounds", "target_rejections"}
        if unknown_s:
            raise ConfigError(f"unknown stop keys: {sorted(unknown_s)}")
        stop = StopRule(
            max_queries=int(sdoc["max_queries"]) if sdoc.get("max_queries") is not None else None,
            max_rounds=int(sdoc["max_rounds"]) if sdoc.get("max_rounds") is not None else None,
            target_rejections=int(sdoc["target_rejections"]) if sdoc.get("target_rejections") is not None else None,
        )
    if method == "altt" and "scenario" in doc and stop is None:
        raise ConfigError("altt on a scenario requires a 'stop' rule")

    split = doc.get("split")
    if split is not None:
        unknown_sp = set(split) - {"fraction_opt", "seed"}
        if unknown_sp:
            raise ConfigError(f"unknown split keys: {sorted(unknown_sp)}")

    tau = float(doc.get("tau", 0.6))
    pref = doc.get("preference_objective")

    return RunConfig(
        method=method, delta=delta, alphas=alphas, seed=seed,
        quantile_q=quantile_q, split=split,
        prior=doc.get("prior"), prior_path=doc.get("prior_path"), tau=tau,
        preference_objective=int(pref) if pref is not None else None,
        betting=betting, policy=policy, stop=stop,
        input_path=doc.get("input"), input_csv=doc.get("input_csv"),
        scenario=scenario, scenario_seed_explicit=scenario_seed_explicit,
        feed_path=doc.get("feed"), feed_jsonl=doc.get("feed_jsonl"),
    )


def build_problem(cfg: RunConfig, n_objectives: int) -> MultiObjectiveProblem:
    """Problem statement implied by a config for a table with L objectives.

    Controlled objectives are 0..len(alphas)-1 with the method's risk
    measure; any further table objectives are free (minimized by the front,
    never tested).
    """
    l_c = len(cfg.alphas)
    if l_c > n_objectives:
        raise ConfigError(f"{l_c} thresholds but the data has {n_objectives} objectives")
    measure = cfg.info.measure
    specs = [RiskSpec(objective=l, measure=measure,
                      q=cfg.quantile_q if measure == QUANTILE else None,
                      role=CONTROLLED, alpha=cfg.alphas[l])
             for l in range(l_c)]
    specs += [RiskSpec(objective=l, measure=AVERAGE, role=FREE)
              for l in range(l_c, n_objectives)]
    return MultiObjectiveProblem(tuple(specs))


def _resolve_table(cfg: RunConfig):
    if cfg.input_csv is not None:
        candidates, table = parse_loss_csv(cfg.input_csv)
        return candidates, table, None
    if cfg.input_path is not None:
        from .io import load_loss_table

        candidates, table = load_loss_table(cfg.input_path)
        return candidates, table, None
    if cfg.scenario is not None:
        data_seed = cfg.scenario.seed if cfg.scenario_seed_explicit else derive_seed(cfg.seed, 0)
        spec = replace(cfg.scenario, seed=data_seed)
        candidates, table, truth = generate_synthetic(spec)
        return candidates, table, truth
    raise ConfigError(f"method {cfg.method!r} needs a loss table (input, input_csv, or scenario)")


def _resolve_prior(cfg: RunConfig, candidates: CandidateSet) -> PriorBeliefs:
    if cfg.prior is not None:
        return prior_from_doc(cfg.prior, candidates)
    if cfg.prior_path is not None:
        return load_prior(cfg.prior_path, candidates)
    return uninformative_prior(len(candidates))


def _split_config(cfg: RunConfig) -> SplitConfig:
    split = cfg.split or {}
    fraction = float(split.get("fraction_opt", 0.5))
    seed = int(split["seed"]) if "seed" in split else derive_seed(cfg.seed, 1)
    return SplitConfig(fraction_opt=fraction, seed=seed)


def _flat_test(cfg: RunConfig, candidates: CandidateSet, table: LossTable) -> SelectionResult:
    problem = build_problem(cfg, 1)
    if table.n_objectives < 1:
        raise DataError("loss table has no objectives")
    p = {cid: candidate_p_value(table, j, problem, split="full")
         for j, cid in enumerate(candidates.ids)}
    result = bonferroni(p, cfg.delta)
    return replace(result, procedure=cfg.method, metadata={**result.metadata, "n_samples": table.n_samples})


def _feed_session(cfg: RunConfig) -> SelectionResult:
    """Drive an adaptive session from a prerecorded JSON-lines feed.

    Each line is {"round": int, "candidate_id": str, "loss": float}; the
    candidate universe is every identifier the feed mentions, fixed before
    the first update.  Batches are applied in ascending round order, and a
    line naming an already-rejected candidate is a data error — the
    operator queried a candidate the session had already cleared.
    """
    text = cfg.feed_jsonl
    if text is None:
        try:
            with open(cfg.feed_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read feed {cfg.feed_path}: {exc}") from exc
    rounds: dict[int, list[tuple[str, float]]] = {}
    ids: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            rnd = int(entry["round"])
            cid = str(entry["candidate_id"])
            loss = float(entry["loss"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"feed line {lineno}: expected "
                            '{"round": int, "candidate_id": str, "loss": number} — ' + str(exc)) from None
        if cid not in seen:
            seen.add(cid)
            ids.append(cid)
        rounds.setdefault(rnd, []).append((cid, loss))
    if not rounds:
        raise DataError("feed contains no observations")

    session = AdaptiveSession(ids, cfg.alphas[0], cfg.delta, betting=cfg.betting, stop=cfg.stop)
    for rnd in sorted(rounds):
        if session.stopped:
            break
        batch = rounds[rnd]
        session.pending_plan = [cid for cid, _ in batch]
        observations: dict[str, list[float]] = {}
        for cid, loss in batch:
            observations.setdefault(cid, []).append(loss)
        altt_update(session, observations)

    return SelectionResult(
        procedure="altt", guarantee="FWER", delta=cfg.delta,
        selected=tuple(sorted(session.rejected)),
        evidence={cid: session.wealth(cid) for cid in session.ids},
        evidence_kind="e_wealth",
        audit=tuple(session.round_log),
        metadata={"m": session.m, "alpha": cfg.alphas[0], "mode": "feed",
                  "rounds": session.rounds_completed,
                  "budget_consumed": session.budget_consumed,
                  "query_counts": dict(session.query_counts),
                  "rejection_order": list(session.rejected)},
    )


def run_calibration(cfg: RunConfig) -> SelectionResult:
    """Execute one configured calibration run and stamp the config echo."""
    if cfg.method in ("ltt", "qltt"):
        candidates, table, _ = _resolve_table(cfg)
        result = _flat_test(cfg, candidates, table)
    elif cfg.method == "pt":
        candidates, table, _ = _resolve_table(cfg)
        problem = build_problem(cfg, table.n_objectives)
        result = pareto_testing(candidates, table, problem, _split_config(cfg), cfg.delta)
    elif cfg.method == "rgpt":
        candidates, table, _ = _resolve_table(cfg)
        problem = build_problem(cfg, table.n_objectives)
        prior = _resolve_prior(cfg, candidates)
        result = rg_pt(candidates, table, problem, prior, _split_config(cfg),
                       tau=cfg.tau, delta=cfg.delta,
                       preference_objective=cfg.preference_objective)
    elif cfg.method == "altt":
        if cfg.feed_jsonl is not None or cfg.feed_path is not None:
            result = _feed_session(cfg)
        elif cfg.scenario is not None:
            data_seed = cfg.scenario.seed if cfg.scenario_seed_explicit else derive_seed(cfg.seed, 0)
            spec = replace(cfg.scenario, seed=data_seed)
            sampler = scenario_sampler(spec, objective=0, seed=derive_seed(cfg.seed, 2))
            result = altt_run(sampler, spec.candidate_ids, cfg.alphas[0], cfg.delta,
                              policy=cfg.policy, stop=cfg.stop, betting=cfg.betting,
                              seed=derive_seed(cfg.seed, 3))
        else:
            raise ConfigError("altt requires a 'scenario' or a 'feed' data source")
    else:  # pragma: no cover - registry and parser agree on names
        raise ConfigError(f"unhandled method {cfg.method!r}")

    return replace(result, metadata={**result.metadata, "run": cfg.echo()})


def run_calibration_doc(doc: Mapping, seed_override: int | None = None) -> SelectionResult:
    return run_calibration(parse_run_config(doc, seed_override))


def truth_for(cfg: RunConfig) -> TrueRisks | None:
    """Ground truth when the config's data source is synthetic."""
    if cfg.scenario is None:
        return None
    return TrueRisks(cfg.scenario)
