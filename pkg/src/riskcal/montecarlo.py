"""Monte Carlo certification: run a configured pipeline against synthetic
ground truth many times and measure the error rate it promises to control.

Per-trial seeds are spawned from the master seed by key, so trials are
independent streams and the report is identical whether trials run
serially or across processes — aggregation is order-free and the per-trial
records are sorted by trial index before summarizing.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import ConfigError, DataError
from .methods import METHODS, build_problem, derive_seed, parse_run_config, run_calibration
from .scenarios import ScenarioSpec, TrueRisks, scenario_from_doc


def wilson_interval(successes: float, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial rate; stays valid near 0 and 1.

    successes may be fractional (summed false-discovery proportions are
    certified with the same algebra).
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if not (0.0 <= successes <= trials):
        raise DataError(f"successes {successes} outside [0, {trials}]")
    n = float(trials)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


@dataclass(frozen=True)
class ValidationReport:
    """Empirical certificate for one (method config, scenario) pair.

    error_rate is the empirical FWER (fraction of trials selecting any
    truly unreliable candidate) or FDR (mean false-discovery proportion,
    zero for empty selections).  Raw per-trial counts are included so the
    headline numbers can be recomputed from the report alone.  Wall-clock
    time is kept on the object but deliberately left out of the serialized
    document, which must be a pure function of config and seed.
    """

    method: str
    guarantee: str
    delta: float
    trials: int
    error_rate: float
    wilson_low: float
    wilson_high: float
    power: float
    selection_sizes: tuple[int, ...]
    false_counts: tuple[int, ...]
    n_candidates: int
    n_reliable: int
    seed: int
    scenario: dict
    runtime_seconds: float = 0.0

    def to_doc(self) -> dict:
        return {
            "method": self.method,
            "guarantee": self.guarantee,
            "delta": self.delta,
            "trials": self.trials,
            "error_rate": self.error_rate,
            "wilson_low": self.wilson_low,
            "wilson_high": self.wilson_high,
            "power": self.power,
            "selection_sizes": list(self.selection_sizes),
            "false_counts": list(self.false_counts),
            "n_candidates": self.n_candidates,
            "n_reliable": self.n_reliable,
            "seed": self.seed,
            "scenario": self.scenario,
        }


def _trial_batch(config_doc: dict, master_seed: int, start: int, stop: int) -> list[tuple[int, int, int, int]]:
    """Run trials [start, stop); returns (trial, selected, false, reliable_selected)."""
    base = parse_run_config(config_doc, seed_override=master_seed)
    truth = TrueRisks(base.scenario)
    problem = build_problem(base, 1 if not base.info.multi_objective else base.scenario.n_objectives)
    unreliable = truth.unreliable(problem)
    index = {cid: j for j, cid in enumerate(base.scenario.candidate_ids)}
    out = []
    for t in range(start, stop):
        spec = replace(base.scenario, seed=derive_seed(master_seed, t, 0))
        cfg = replace(base, scenario=spec, scenario_seed_explicit=True,
                      seed=derive_seed(master_seed, t, 1))
        selected = run_calibration(cfg).selected
        false = sum(1 for cid in selected if unreliable[index[cid]])
        reliable_sel = len(selected) - false
        out.append((t, len(selected), false, reliable_sel))
    return out


def monte_carlo_validate(
    config: Mapping,
    scenario: ScenarioSpec | Mapping | None = None,
    trials: int = 1000,
    jobs: int = 1,
    seed: int | None = None,
) -> ValidationReport:
    """Certify a method's guarantee on synthetic ground truth.

    Each trial draws a fresh dataset (seed spawned per trial), runs the
    configured pipeline, and classifies every selected candidate against
    the scenario's exact risks.  FWER methods are scored by the fraction
    of trials with any false selection; FDR methods by the mean
    false-discovery proportion.  A 'check' key in the config may restate
    the expected guarantee; a mismatch with the method's own is an error.
    """
    if trials < 100:
        raise ConfigError("trials must be >= 100 for a meaningful certificate")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")

    doc = dict(config)
    if scenario is not None:
        doc["scenario"] = scenario.to_doc() if isinstance(scenario, ScenarioSpec) else dict(scenario)
        doc.pop("input", None)
        doc.pop("input_csv", None)
        doc.pop("feed", None)
        doc.pop("feed_jsonl", None)
    check = doc.pop("check", None)

    cfg = parse_run_config(doc, seed_override=seed)
    if cfg.scenario is None:
        raise ConfigError("validation requires a synthetic scenario with known ground truth")
    info = METHODS[cfg.method]
    if check is not None and str(check).upper() != info.guarantee:
        raise ConfigError(
            f"method {cfg.method!r} certifies {info.guarantee}, not {str(check).upper()}"
        )
    master = cfg.seed

    truth = TrueRisks(cfg.scenario)
    problem = build_problem(cfg, 1 if not info.multi_objective else cfg.scenario.n_objectives)
    unreliable = truth.unreliable(problem)
    n_reliable = sum(1 for u in unreliable if not u)

    began = time.perf_counter()
    if jobs == 1:
        records = _trial_batch(doc, master, 0, trials)
    else:
        bounds = [trials * k // jobs for k in range(jobs + 1)]
        spans = [(a, b) for a, b in zip(bounds, bounds[1:]) if a < b]
        records = []
        with ProcessPoolExecutor(max_workers=len(spans)) as pool:
            futures = [pool.submit(_trial_batch, doc, master, a, b) for a, b in spans]
            for fut in futures:
                records.extend(fut.result())
        records.sort(key=lambda rec: rec[0])
    elapsed = time.perf_counter() - began

    sizes = tuple(rec[1] for rec in records)
    falses = tuple(rec[2] for rec in records)
    if info.guarantee == "FWER":
        violations = sum(1 for f in falses if f > 0)
        error_rate = violations / trials
        low, high = wilson_interval(violations, trials)
    else:
        fdp_sum = sum(f / max(s, 1) for s, f in zip(sizes, falses))
        error_rate = fdp_sum / trials
        low, high = wilson_interval(fdp_sum, trials)
    if n_reliable:
        power = sum(rec[3] for rec in records) / (n_reliable * trials)
    else:
        power = 0.0

    return ValidationReport(
        method=cfg.method,
        guarantee=info.guarantee,
        delta=cfg.delta,
        trials=trials,
        error_rate=error_rate,
        wilson_low=low,
        wilson_high=high,
        power=power,
        selection_sizes=sizes,
        false_counts=falses,
        n_candidates=cfg.scenario.m,
        n_reliable=n_reliable,
        seed=master,
        scenario=cfg.scenario.to_doc(),
        runtime_seconds=elapsed,
    )
