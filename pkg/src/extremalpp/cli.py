"""Command-line runner: ``python3 -m extremalpp <subcommand>``.

Config files are flat ``key = value`` text, one experiment per file::

    experiment = max_law
    statistic = spearman
    n = 200
    p = 100
    reps = 2000
    seed = 42
    assert.ks_max.statistic = <= 0.08

Exit codes: 0 when every ``assert.*`` line holds, 1 when one fails,
2 for an invalid config, 3 for I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .datagen import MarginalSpec, derive_seed, make_rng
from .exactdist import kendall_pmf
from .experiments import (SCHEMA, ConfigError, ExperimentConfig, coupling_metrics,
                          point_process_metrics, records_metrics, run_experiment)
from .prmref import LimitFamily

__all__ = ["main", "parse_config", "load_config", "estimate_fourth_moment", "format_csv",
           "read_raw_csv", "EXIT_OK", "EXIT_FAIL", "EXIT_CONFIG", "EXIT_IO"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

_INT_KEYS = {"n", "p", "reps", "seed", "k", "record_order", "a1_draws", "a2_reps", "a2_spokes"}
_FLOAT_KEYS = {"threshold", "coupling_tol"}
_STR_KEYS = {"experiment", "statistic", "model", "sigma_true", "score", "out"}


def _parse_bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def parse_config(text: str) -> ExperimentConfig:
    kw, asserts = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("assert."):
                asserts[key[len("assert."):]] = value
            elif key in _INT_KEYS:
                kw[key] = int(value)
            elif key in _FLOAT_KEYS:
                kw[key] = float(value)
            elif key in _STR_KEYS:
                kw[key] = value
            elif key == "marginal":
                kw[key] = MarginalSpec.parse(value)
            elif key == "family":
                kw[key] = LimitFamily.parse(value)
            elif key == "surrogate":
                kw[key] = _parse_bool(value)
            elif key == "ex4":
                kw[key] = value if value == "estimate" else float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if "experiment" not in kw:
        raise ConfigError("missing key 'experiment'")
    return ExperimentConfig(assertions=asserts, **kw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def estimate_fourth_moment(samples, min_draws: int = 10**4) -> tuple:
    """Sample ``E X^4`` and its standard error from an array or an iterable of arrays."""
    if isinstance(samples, np.ndarray):
        samples = [samples]
    count, s1, s2 = 0, 0.0, 0.0
    for chunk in samples:
        x4 = np.asarray(chunk, dtype=float).ravel() ** 4
        count += x4.size
        s1 += float(x4.sum())
        s2 += float((x4 * x4).sum())
    if count < min_draws:
        raise ValueError(f"need at least {min_draws} draws, got {count}")
    mean = s1 / count
    var = max(s2 / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(var / count)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _header_meta(cfg) -> str:
    meta = {"schema": SCHEMA, "experiment": cfg.experiment, "statistic": cfg.statistic,
            "n": cfg.n, "p": cfg.p, "threshold": _fmt(cfg.threshold), "k": cfg.k,
            "record_order": cfg.record_order, "coupling_tol": _fmt(cfg.coupling_tol),
            "family": str(cfg.family)}
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items())


def format_csv(cfg, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(_header_meta(cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_raw_csv(path):
    """Returns ``(meta, columns, rows)`` with numeric cells parsed."""
    meta, lines = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    k, _, v = tok.partition("=")
                    meta[k] = v
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for rec in reader:
        rows.append([int(v) if v.lstrip("-").isdigit() else float(v) for v in rec])
    return meta, columns, rows


def dump_summary(summary) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def _prefix(cfg, config_path) -> Path:
    if cfg.out:
        return Path(cfg.out)
    return Path(config_path).with_suffix("")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _resolve_ex4(cfg):
    if cfg.ex4 != "estimate":
        return cfg, None
    rng = make_rng(derive_seed(cfg.seed, 55))
    chunks = (cfg.marginal.draw_standardized(rng, 10**5) for _ in range(10))
    value, se = estimate_fourth_moment(chunks)
    return cfg.with_(ex4=value), {"value": value, "stderr": se, "draws": 10**6}


def _run_config(args, forced=None) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_(seed=args.seed)
        if forced is not None:
            cfg = cfg.with_(experiment=forced)
        cfg.validate()
        cfg, ex4_note = _resolve_ex4(cfg)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    res = run_experiment(cfg, threads=args.threads)
    if ex4_note is not None:
        res.summary["reference"]["ex4_estimate"] = ex4_note
    raw = format_csv(cfg, res.columns, res.rows)
    summary = dump_summary(res.summary)
    prefix = _prefix(cfg, args.config)
    log = "\n".join(res.log + [f"total_elapsed_s={time.perf_counter() - t0:.3f}"]) + "\n"
    try:
        _write(prefix.with_name(prefix.name + ".csv"), raw)
        _write(prefix.with_name(prefix.name + ".summary.json"), summary)
        _write(prefix.with_name(prefix.name + ".log"), log)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(raw if args.format == "csv" else summary)
    return EXIT_OK if res.summary["all_pass"] else EXIT_FAIL


def cmd_simulate(args) -> int:
    return _run_config(args)


def cmd_conditions(args) -> int:
    return _run_config(args, forced="conditions")


def cmd_exact_kendall(args) -> int:
    if args.n < 2:
        print("error: --n must be >= 2", file=sys.stderr)
        return EXIT_CONFIG
    text = kendall_pmf(args.n).to_csv()
    try:
        _write(Path(args.out), text)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.format == "csv":
        sys.stdout.write(text)
    return EXIT_OK


def report_metrics(meta, columns, rows, family: LimitFamily) -> dict:
    """Recompute the test section of a summary from raw rows."""
    cfg = ExperimentConfig(experiment=meta["experiment"], statistic=meta.get("statistic", "spearman"),
                           n=int(meta.get("n", 200)), p=int(meta.get("p", 100)),
                           threshold=float(meta.get("threshold", 0.0)), k=int(meta.get("k", 2)),
                           record_order=int(meta.get("record_order", 1)),
                           coupling_tol=float(meta.get("coupling_tol", 0.05)), family=family, seed=0)
    if cfg.experiment in ("max_law", "order_stats", "exceedance_counts"):
        return point_process_metrics(cfg, columns, rows)
    if cfg.experiment == "records":
        return records_metrics(cfg, columns, rows)
    if cfg.experiment == "coupling_rho_r":
        return coupling_metrics(cfg, columns, rows)
    raise ConfigError(f"report does not handle experiment {cfg.experiment!r}")


def cmd_report(args) -> int:
    try:
        family = LimitFamily.parse(args.against)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        meta, columns, rows = read_raw_csv(args.input)
    except (OSError, StopIteration) as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        metrics = report_metrics(meta, columns, rows, family)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(dump_summary({"schema": SCHEMA, "against": str(family), "metrics": metrics}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="extremalpp", description="Extremal point process experiments")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker count (default: $EXTREMALPP_THREADS or 1); results do not depend on it")
    ap.add_argument("--format", choices=("csv", "summary"), default="summary",
                    help="what to print on stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run one experiment config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_simulate)
    e = sub.add_parser("exact-kendall", help="write the exact null PMF of Kendall's tau")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_exact_kendall)
    c = sub.add_parser("conditions", help="tail and anti-clustering estimates")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_conditions)
    r = sub.add_parser("report", help="re-test a raw CSV against a limit family")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--against", required=True)
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
