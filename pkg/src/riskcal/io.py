"""File formats: long-format loss CSV, canonical JSON, and report rendering.

Canonical JSON is the determinism backbone: keys sorted, floats printed
with 9 significant digits, compact separators, one trailing newline when
written to disk.  Two equal documents always serialize to identical bytes.

Loss CSV round-trips exactly: dump_loss_table prints floats with repr
(shortest form that parses back to the same double), and load accepts rows
in any order as long as every (sample, candidate, objective) cell appears
exactly once.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .risk import CandidateSet, LossTable

LOSS_HEADER = ["sample_id", "candidate_id", "objective", "loss"]


# ---------------------------------------------------------------------------
# Canonical JSON


def _canonical(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise DataError(f"cannot serialize non-finite number: {v}")
        out.append(format(v, ".9g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, Mapping):
        keys = list(obj.keys())
        if any(not isinstance(k, str) for k in keys):
            raise DataError("canonical JSON requires string keys")
        if len(set(keys)) != len(keys):
            raise DataError("duplicate keys in document")
        out.append("{")
        for i, k in enumerate(sorted(keys)):
            if i:
                out.append(",")
            out.append(json.dumps(k, ensure_ascii=False))
            out.append(":")
            _canonical(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, item in enumerate(items):
            if i:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    else:
        raise DataError(f"cannot serialize {type(obj).__name__} to canonical JSON")


def canonical_json(doc) -> str:
    """Deterministic JSON text: sorted keys, .9g floats, compact separators."""
    out: list[str] = []
    _canonical(doc, out)
    return "".join(out)


def fmt_float(v: float) -> str:
    return format(float(v), ".9g")


# ---------------------------------------------------------------------------
# Loss CSV


def parse_loss_csv(text: str) -> tuple[CandidateSet, LossTable]:
    """Parse long-format loss rows: sample_id,candidate_id,objective,loss.

    Rows may come in any order; sample and candidate order is first
    appearance.  The table must be complete — every (sample, candidate,
    objective) cell exactly once — and objectives must be 0..L-1.
    """
    reader = csv.reader(_stdio.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty input, expected header "
                        f"{','.join(LOSS_HEADER)}") from None
    if header != LOSS_HEADER:
        raise DataError(f"line 1: header must be exactly {','.join(LOSS_HEADER)}; got {','.join(header)}")

    samples: dict[str, int] = {}
    cands: dict[str, int] = {}
    cells: dict[tuple[int, int, int], float] = {}
    max_obj = -1
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise DataError(f"line {lineno}: expected 4 fields, got {len(row)}")
        sid, cid, obj_s, loss_s = row
        if not sid or not cid:
            raise DataError(f"line {lineno}: empty sample or candidate identifier")
        try:
            obj = int(obj_s)
        except ValueError:
            raise DataError(f"line {lineno}: objective must be an integer, got {obj_s!r}") from None
        if obj < 0:
            raise DataError(f"line {lineno}: objective must be >= 0, got {obj}")
        try:
            loss = float(loss_s)
        except ValueError:
            raise DataError(f"line {lineno}: loss must be a number, got {loss_s!r}") from None
        if math.isnan(loss) or not (0.0 <= loss <= 1.0):
            raise DataError(f"line {lineno}: loss outside [0, 1]: {loss_s}")
        s = samples.setdefault(sid, len(samples))
        c = cands.setdefault(cid, len(cands))
        key = (s, c, obj)
        if key in cells:
            raise DataError(f"line {lineno}: duplicate cell ({sid}, {cid}, {obj})")
        cells[key] = loss
        max_obj = max(max_obj, obj)

    if not cells:
        raise DataError("no data rows after the header")
    n, m, L = len(samples), len(cands), max_obj + 1
    if len(cells) != n * m * L:
        sample_ids = list(samples)
        cand_ids = list(cands)
        for s in range(n):
            for c in range(m):
                for o in range(L):
                    if (s, c, o) not in cells:
                        raise DataError(
                            f"missing cell: sample {sample_ids[s]!r}, candidate {cand_ids[c]!r}, objective {o}"
                        )
    values = np.empty((n, m, L))
    for (s, c, o), loss in cells.items():
        values[s, c, o] = loss
    return CandidateSet(list(cands)), LossTable(values)


def load_loss_table(path: str) -> tuple[CandidateSet, LossTable]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read loss table {path}: {exc}") from exc
    return parse_loss_csv(text)


def dump_loss_table(candidates: CandidateSet, table: LossTable,
                    sample_ids: Sequence[str] | None = None) -> str:
    """Inverse of parse_loss_csv; floats printed in shortest round-trip form."""
    if len(candidates) != table.n_candidates:
        raise DataError(f"{len(candidates)} candidates for a table with {table.n_candidates}")
    n, L = table.n_samples, table.n_objectives
    if sample_ids is None:
        sample_ids = [f"s{i}" for i in range(n)]
    elif len(sample_ids) != n:
        raise DataError(f"{len(sample_ids)} sample identifiers for {n} samples")
    lines = [",".join(LOSS_HEADER)]
    rows = table.values.tolist()  # native floats: repr is shortest round-trip
    ids = candidates.ids
    for i in range(n):
        row = rows[i]
        for j, cid in enumerate(ids):
            cell = row[j]
            for l in range(L):
                lines.append(f"{sample_ids[i]},{cid},{l},{cell[l]!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Report rendering


def histogram_csv(candidates: CandidateSet, table: LossTable, bins: int = 20) -> str:
    """Loss histograms per candidate and objective; rows = bins x candidates x objectives."""
    if bins < 1:
        raise DataError("bins must be >= 1")
    edges = np.linspace(0.0, 1.0, bins + 1)
    lines = ["candidate_id,objective,bin_lo,bin_hi,count"]
    for j, cid in enumerate(candidates.ids):
        for l in range(table.n_objectives):
            counts, _ = np.histogram(table.losses(j, l), bins=edges)
            for b in range(bins):
                lines.append(f"{cid},{l},{fmt_float(edges[b])},{fmt_float(edges[b + 1])},{int(counts[b])}")
    return "\n".join(lines) + "\n"


def summary_doc(candidates: CandidateSet, table: LossTable,
                quantile_levels: tuple[float, ...] = (0.5, 0.9)) -> dict:
    """Per-candidate, per-objective loss summaries (means and level-q statistics)."""
    from .risk import empirical_quantile

    out: dict = {"n_samples": table.n_samples, "candidates": {}}
    for j, cid in enumerate(candidates.ids):
        per_obj = []
        for l in range(table.n_objectives):
            losses = table.losses(j, l)
            entry = {"mean": float(losses.mean())}
            for q in quantile_levels:
                entry[f"q_{format(q, '.9g')}"] = empirical_quantile(losses, q)
            per_obj.append(entry)
        out["candidates"][cid] = per_obj
    return out


def selection_csv(doc: Mapping) -> str:
    """Flat CSV view of a selection document: one row per tested candidate."""
    evidence = doc.get("evidence", {})
    selected = set(doc.get("selected", []))
    lines = ["candidate_id,evidence,selected"]
    for cid in sorted(evidence):
        lines.append(f"{cid},{fmt_float(evidence[cid])},{str(cid in selected).lower()}")
    return "\n".join(lines) + "\n"


def validation_csv(doc: Mapping) -> str:
    """Key-value CSV summary of a validation report."""
    lines = ["key,value"]
    for key in ("method", "guarantee", "delta", "trials", "error_rate",
                "wilson_low", "wilson_high", "power", "n_candidates", "n_reliable"):
        if key in doc:
            v = doc[key]
            lines.append(f"{key},{fmt_float(v) if isinstance(v, float) else v}")
    sizes = doc.get("selection_sizes")
    if sizes:
        lines.append(f"mean_selection_size,{fmt_float(sum(sizes) / len(sizes))}")
    return "\n".join(lines) + "\n"


def render_report(doc: Mapping, fmt: str) -> str:
    """Render a result/report document in the requested output format."""
    if fmt == "json":
        return canonical_json(doc) + "\n"
    if fmt == "csv-summary":
        if "trials" in doc:
            return validation_csv(doc)
        if "procedure" in doc:
            return selection_csv(doc)
        raise DataError("no CSV summary defined for this document")
    raise DataError(f"unknown report format {fmt!r}")


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def emit_report(doc: Mapping, path: str, fmt: str = "json") -> None:
    """Serialize a document deterministically: same doc, same bytes."""
    write_text(path, render_report(doc, fmt))
