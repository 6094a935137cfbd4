"""Command-line client for the calibration service.

Each subcommand builds one HTTP request, posts it to the service — an
in-process instance by default, or a remote one via ``--server`` — and
writes the response out.  JSON results are written byte-for-byte as the
service produced them, so repeated runs with the same config and seed can
be compared with ``cmp`` or a checksum.

Path-valued config keys (``input``, ``prior_path``, ``feed``) are inlined
client-side before posting; the service never reads the caller's
filesystem.

Exit codes: 0 success, 1 configuration or usage error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import httpx

from .errors import ConfigError, DataError, InvariantError, ProvenanceError, RiskcalError
from .io import canonical_json, render_report

_ERROR_KINDS = {
    "ConfigError": ConfigError,
    "DataError": DataError,
    "ProvenanceError": ProvenanceError,
    "InvariantError": InvariantError,
}


class _Parser(argparse.ArgumentParser):
    # usage problems must land on exit code 1, not argparse's default 2
    def error(self, message: str):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="riskcal",
                     description="Risk-controlling candidate selection via multiple testing.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p: argparse.ArgumentParser, fmt: bool = True) -> None:
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv-summary"), default="json",
                           help="output format (default: json)")

    common(sub.add_parser("calibrate", help="run a selection procedure on calibration data"))
    common(sub.add_parser("simulate", help="draw a synthetic loss table with known ground truth"),
           fmt=False)
    p = sub.add_parser("validate", help="certify a config's guarantee by Monte Carlo")
    common(p)
    p.add_argument("--trials", type=int, default=None, help="number of Monte Carlo trials")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    common(sub.add_parser("report", help="summarize a loss table"))
    return parser


def _load_config(path: str) -> tuple[dict, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return doc, os.path.dirname(os.path.abspath(path))


def _read_data_file(path: str, base: str) -> str:
    full = path if os.path.isabs(path) else os.path.join(base, path)
    try:
        with open(full, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {full}: {exc}") from exc


def _inline_files(doc: dict, base: str) -> dict:
    """Swap path-valued keys for their file contents.

    Relative paths resolve against the config file's own directory, so a
    config bundle can be moved around as a unit.
    """
    out = dict(doc)
    for path_key, inline_key in (("input", "input_csv"), ("feed", "feed_jsonl")):
        if path_key in out:
            if inline_key in out:
                raise ConfigError(f"config has both {path_key!r} and {inline_key!r}")
            out[inline_key] = _read_data_file(str(out.pop(path_key)), base)
    if "prior_path" in out:
        if "prior" in out:
            raise ConfigError("config has both 'prior_path' and 'prior'")
        text = _read_data_file(str(out.pop("prior_path")), base)
        try:
            out["prior"] = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"prior file is not valid JSON: {exc}") from exc
    return out


def _check_seed(seed: int | None) -> int | None:
    if seed is not None and not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return seed


def _client(server: str | None) -> httpx.Client:
    if server is not None:
        return httpx.Client(base_url=server, timeout=None)
    # default: run the service in-process; TestClient is the standard sync
    # bridge onto an ASGI app and behaves like a real server here
    import warnings

    with warnings.catch_warnings():
        # starlette prefers its httpx2 fork; the classic httpx API it falls
        # back to is the one we target
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service.app import app  # deferred: only the default path needs fastapi

    return TestClient(app, base_url="http://riskcal", raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, payload: dict) -> httpx.Response:
    resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "kind" in detail:
        cls = _ERROR_KINDS.get(str(detail["kind"]), RiskcalError)
        raise cls(str(detail.get("message", "")))
    raise RiskcalError(f"service returned {resp.status_code}: {resp.text[:300]}")


def _write_bytes(out: str | None, data: bytes) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        with open(out, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from exc


def _write_result(resp: httpx.Response, out: str | None, fmt: str) -> None:
    if fmt == "json":
        # verbatim service bytes: the artifact is reproducible end to end
        _write_bytes(out, resp.content)
    else:
        _write_bytes(out, render_report(resp.json(), fmt).encode("utf-8"))


def _cmd_calibrate(args: argparse.Namespace) -> int:
    doc, base = _load_config(args.config)
    payload = {"config": _inline_files(doc, base), "seed": _check_seed(args.seed)}
    with _client(args.server) as client:
        resp = _post(client, "/calibrate", payload)
    _write_result(resp, args.out, args.format)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    doc, _ = _load_config(args.config)
    levels = doc.pop("quantile_levels", [0.9])
    if not isinstance(levels, list) or not all(
            isinstance(q, (int, float)) and not isinstance(q, bool) for q in levels):
        raise ConfigError("'quantile_levels' must be a list of numbers")
    payload = {"scenario": doc, "seed": _check_seed(args.seed), "quantile_levels": levels}
    with _client(args.server) as client:
        resp = _post(client, "/simulate", payload)
    body = resp.json()
    if args.out is None:
        sys.stdout.write(body["csv"])
        return 0
    _write_bytes(args.out, body["csv"].encode("utf-8"))
    truth_path = args.out + ".truth.json"
    _write_bytes(truth_path, (canonical_json(body["truth"]) + "\n").encode("utf-8"))
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    doc, base = _load_config(args.config)
    # trials/jobs may live in the config for convenience; flags win
    trials = doc.pop("trials", None) if args.trials is None else args.trials
    jobs = doc.pop("jobs", None) if args.jobs is None else args.jobs
    doc.pop("trials", None)
    doc.pop("jobs", None)
    trials = 1000 if trials is None else trials
    jobs = 1 if jobs is None else jobs
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise ConfigError("trials must be a positive integer")
    if not isinstance(jobs, int) or isinstance(jobs, bool) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    payload = {"config": _inline_files(doc, base), "trials": trials, "jobs": jobs,
               "seed": _check_seed(args.seed)}
    with _client(args.server) as client:
        resp = _post(client, "/validate", payload)
    _write_result(resp, args.out, args.format)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    doc, base = _load_config(args.config)
    unknown = set(doc) - {"input", "input_csv", "bins"}
    if unknown:
        raise ConfigError(f"unknown report config keys: {sorted(unknown)}")
    if ("input" in doc) == ("input_csv" in doc):
        raise ConfigError("report config needs exactly one of 'input', 'input_csv'")
    text = doc["input_csv"] if "input_csv" in doc else _read_data_file(str(doc["input"]), base)
    bins = doc.get("bins", 20)
    if not isinstance(bins, int) or isinstance(bins, bool) or bins < 1:
        raise ConfigError("bins must be a positive integer")
    payload = {"input_csv": text, "bins": bins, "format": args.format}
    with _client(args.server) as client:
        resp = _post(client, "/report", payload)
    _write_bytes(args.out, resp.json()["content"].encode("utf-8"))
    return 0


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RiskcalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
