"""Experiment definitions shared by the CLI and the acceptance suite.

An experiment turns an :class:`ExperimentConfig` into per-replication rows
plus a summary dict.  Replications are independent given
``derive_seed(seed, rep)`` and are collected in rep order, so results do
not depend on the worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import kernels as K
from .datagen import (LinearModelSpec, MarginalSpec, derive_seed, gen_iid_matrix,
                      gen_linear_process, gen_matrix_model, make_rng, model_covariance,
                      tridiagonal)
from .exactdist import kendall_pmf
from .gof import estimate_A1, estimate_A2, ks_test, poisson_count_test
from .pointproc import TooFewRecords, record_gap_normalized, record_times_from_values
from .prmref import (GUMBEL, LimitFamily, limit_cdf, orderstat_k_cdf, record_gap_cdf,
                     record_last_cdf)
from .scaling import (Affine, d_of, interpoint_constants, r_variance, rho_variance,
                      scaling_constants, statistic_transform, tau_variance)

__all__ = [
    "EXPERIMENTS",
    "STATISTICS",
    "SUPPORTED",
    "ExperimentConfig",
    "ExperimentResult",
    "ConfigError",
    "run_experiment",
    "resolve_threads",
]

EXPERIMENTS = ("max_law", "order_stats", "exceedance_counts", "records", "exact_kendall",
               "conditions", "coupling_rho_r")
STATISTICS = ("kendall", "spearman", "r_major", "interpoint", "covariance_W", "custom_score")

# statistic/experiment support matrix
SUPPORTED = {
    "max_law": set(STATISTICS),
    "order_stats": set(STATISTICS),
    "exceedance_counts": set(STATISTICS),
    "records": set(STATISTICS),
    "exact_kendall": {"kendall"},
    "conditions": {"kendall", "spearman", "r_major", "interpoint", "custom_score"},
    "coupling_rho_r": {"spearman"},
}

SCHEMA = "extremalpp.raw/1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    statistic: str = "spearman"
    n: int = 200
    p: int = 100
    reps: int = 1000
    seed: Optional[int] = None
    marginal: MarginalSpec = MarginalSpec()
    model: str = "iid"  # iid | linear:<a0,a1,...> | tridiagonal:<diag>:<off>
    family: LimitFamily = GUMBEL
    threshold: float = 0.0
    k: int = 2
    ex4: Optional[float] = None  # None -> analytic moment of the marginal
    sigma_true: str = "zero"  # zero | model
    surrogate: bool = False
    record_order: int = 1
    coupling_tol: float = 0.05
    a1_draws: int = 100000
    a2_reps: int = 100
    a2_spokes: int = 1000
    score: str = "spearman"  # custom_score: spearman | wilcoxon | van_der_waerden
    out: Optional[str] = None
    assertions: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.statistic not in STATISTICS:
            raise ConfigError(f"unknown statistic {self.statistic!r}; expected one of {STATISTICS}")
        if self.statistic not in SUPPORTED[self.experiment]:
            raise ConfigError(f"statistic {self.statistic!r} not supported by {self.experiment!r}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.n < 2 or (self.p < 2 and self.experiment != "exact_kendall"):
            raise ConfigError("need n >= 2 and p >= 2")
        if self.statistic == "r_major" and self.n < 3:
            raise ConfigError("r_major needs n >= 3")
        if self.experiment not in ("exact_kendall", "conditions") and self.p < 3:
            raise ConfigError("need p >= 3 so that p(p-1)/2 >= 3")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        for key in self.assertions:
            if not isinstance(self.assertions[key], str):
                raise ConfigError(f"assertion {key!r} must be a string like '<= 0.08'")
        return self

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: list
    rows: list
    summary: dict
    log: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("EXTREMALPP_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


# -- data and statistic plumbing --------------------------------------------------------


def _matrix_model(cfg):
    kind, _, arg = cfg.model.partition(":")
    return kind, arg


def generate(cfg: ExperimentConfig, rep: int) -> np.ndarray:
    seed = derive_seed(cfg.seed, rep)
    kind, arg = _matrix_model(cfg)
    if kind == "iid":
        return gen_iid_matrix(cfg.marginal, cfg.p, cfg.n, seed).data
    if kind == "linear":
        coeffs = tuple(float(v) for v in arg.split(","))
        return gen_linear_process(LinearModelSpec(coeffs=coeffs, innovation=cfg.marginal), cfg.p, cfg.n, seed).data
    if kind == "tridiagonal":
        diag, off = (float(v) for v in arg.split(":"))
        spec = LinearModelSpec(matrix=tridiagonal(cfg.p, diag, off), innovation=cfg.marginal)
        return gen_matrix_model(spec, cfg.p, cfg.n, seed).data
    raise ConfigError(f"unknown model {cfg.model!r}")


def _sigma_true(cfg):
    if cfg.sigma_true == "zero":
        return 0.0
    kind, arg = _matrix_model(cfg)
    if kind == "tridiagonal":
        diag, off = (float(v) for v in arg.split(":"))
        return model_covariance(tridiagonal(cfg.p, diag, off))
    if kind == "linear":
        a = np.array([float(v) for v in arg.split(",")])
        a = a / np.linalg.norm(a)
        acf = np.array([a[: a.size - h] @ a[h:] for h in range(a.size)])
        lag = np.abs(np.subtract.outer(np.arange(cfg.p), np.arange(cfg.p)))
        return np.where(lag < acf.size, acf[np.minimum(lag, acf.size - 1)], 0.0)
    return 0.0


def _score(cfg) -> K.ScoreSpec:
    from scipy.stats import norm

    if cfg.score == "spearman":
        return K.ScoreSpec(g=lambda u: u - 0.5, f=lambda u: u - 0.5)
    if cfg.score == "wilcoxon":
        return K.ScoreSpec(g=lambda u: u, f=lambda u: u - 0.5)
    if cfg.score == "van_der_waerden":
        return K.ScoreSpec(g=norm.ppf, f=lambda u: u - 0.5)
    raise ConfigError(f"unknown score {cfg.score!r}")


def ex4_of(cfg) -> float:
    return cfg.marginal.fourth_moment() if cfg.ex4 is None else float(cfg.ex4)


def transform_for(cfg) -> Affine:
    if cfg.statistic == "custom_score":
        from .kernels import standardize_simple_linear
        from .scaling import rank_transform

        mu, sd = standardize_simple_linear(_score(cfg), cfg.n)
        return rank_transform(mu, sd, cfg.p * (cfg.p - 1) // 2)
    return statistic_transform(cfg.statistic, cfg.n, cfg.p, ex4_of(cfg))


def kernel_for(cfg) -> K.Kernel:
    table = {"kendall": K.KENDALL, "spearman": K.SPEARMAN, "r_major": K.R_MAJOR,
             "interpoint": K.INTERPOINT}
    if cfg.statistic in table:
        return table[cfg.statistic]
    if cfg.statistic == "custom_score":
        return K.simple_linear_kernel(_score(cfg))
    raise ConfigError(f"no tuple kernel for statistic {cfg.statistic!r}")


def transformed_matrix(cfg, X, sigma_true=0.0) -> np.ndarray:
    """``(p, p)`` matrix of transformed kernel values (only i < j entries are meaningful)."""
    if cfg.statistic == "covariance_W":
        return K.cov_W_matrix(X, sigma_true)
    T = kernel_for(cfg).pairwise(X)
    return transform_for(cfg)(T)


def reference_values(cfg) -> dict:
    pt = cfg.p * (cfg.p - 1) // 2
    ref = {"p_tilde": pt, "d_p": d_of(pt) if pt >= 3 else None,
           "tau_variance": tau_variance(cfg.n), "rho_variance": rho_variance(cfg.n),
           "lambda": float(cfg.family.mu(cfg.threshold)), "threshold": cfg.threshold,
           "family": str(cfg.family)}
    if cfg.n >= 3:
        ref["r_variance"] = r_variance(cfg.n)
    if cfg.statistic == "interpoint" and cfg.p >= 3:
        b, c = interpoint_constants(cfg.n, cfg.p, ex4_of(cfg))
        ref.update({"b_n": b, "c_n": c, "ex4": ex4_of(cfg)})
    if cfg.statistic in ("kendall", "spearman", "r_major", "custom_score") and pt >= 3:
        t = transform_for(cfg)
        ref.update({"transform_center": t.center, "transform_scale": t.scale})
    return ref


def _map_reps(fn: Callable[[int], object], reps: int, threads: int) -> list:
    if threads <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(reps)))


# -- experiment bodies -------------------------------------------------------------------


def _top_values(cfg, rep, sigma):
    X = generate(cfg, rep)
    T = transformed_matrix(cfg, X, sigma)
    vals = T[np.triu_indices(cfg.p, 1)]
    kk = min(cfg.k, vals.size)
    top = np.sort(np.partition(vals, vals.size - kk)[vals.size - kk:])[::-1]
    count = int(np.sum(vals > cfg.threshold))
    return list(top) + [math.nan] * (cfg.k - kk), count


def _surrogate_max(cfg, rep) -> float:
    pt = cfg.p * (cfg.p - 1) // 2
    d = d_of(pt)
    z = make_rng(derive_seed(cfg.seed, 7, rep)).standard_normal(pt)
    return d * (z.max() - d)


def _run_point_process(cfg, threads):
    sigma = _sigma_true(cfg) if cfg.statistic == "covariance_W" else 0.0

    def one(rep):
        top, count = _top_values(cfg, rep, sigma)
        row = [rep] + top + [count]
        if cfg.surrogate:
            row.append(_surrogate_max(cfg, rep))
        return row

    rows = _map_reps(one, cfg.reps, threads)
    cols = ["rep"] + [("max" if j == 0 else f"top{j + 1}") for j in range(cfg.k)] + ["count"]
    if cfg.surrogate:
        cols.append("surrogate_max")
    return cols, rows


def _col(cols, rows, name):
    i = cols.index(name)
    return np.array([r[i] for r in rows], dtype=float)


def point_process_metrics(cfg, cols, rows) -> dict:
    """Test reports computed from raw rows; also used by the ``report`` subcommand."""
    fam = cfg.family
    metrics = {}
    R = len(rows)
    if cfg.experiment in ("max_law", "order_stats") and R >= 10:
        metrics["ks_max"] = ks_test(_col(cols, rows, "max"), lambda x: limit_cdf(fam, x), label=str(fam)).as_dict()
        if "surrogate_max" in cols:
            s = ks_test(_col(cols, rows, "surrogate_max"), lambda x: limit_cdf(fam, x), label=str(fam)).as_dict()
            metrics["ks_surrogate"] = s
            metrics["ks_gap_vs_surrogate"] = abs(s["statistic"] - metrics["ks_max"]["statistic"])
    if cfg.experiment == "order_stats" and R >= 10:
        for j in range(2, cfg.k + 1):
            name = f"top{j}"
            if name in cols:
                metrics[f"ks_{name}"] = ks_test(_col(cols, rows, name),
                                                lambda x, j=j: orderstat_k_cdf(fam, j, x),
                                                label=f"{fam} k={j}").as_dict()
    if cfg.experiment in ("max_law", "exceedance_counts") and R >= 200 and "count" in cols:
        lam = float(fam.mu(cfg.threshold))
        metrics["poisson_counts"] = poisson_count_test(_col(cols, rows, "count").astype(int), lam).as_dict()
    return metrics


def _run_records(cfg, threads):
    sigma = _sigma_true(cfg) if cfg.statistic == "covariance_W" else 0.0

    def one(rep):
        X = generate(cfg, rep)
        T = transformed_matrix(cfg, X, sigma)
        rec = record_times_from_values(T)
        try:
            last, second, gap = record_gap_normalized(rec, cfg.p)
        except TooFewRecords:
            last, second, gap = rec.times[-1] / cfg.p, math.nan, math.nan
        return [rep, rec.zeta, last, second, gap]

    rows = _map_reps(one, cfg.reps, threads)
    return ["rep", "zeta", "last", "second_last", "gap"], rows


def records_metrics(cfg, cols, rows) -> dict:
    zeta = _col(cols, rows, "zeta")
    last = _col(cols, rows, "last")
    gap = _col(cols, rows, "gap")
    kept = gap[~np.isnan(gap)]
    m = 2
    o = cfg.record_order
    metrics = {
        "zeta_mean": float(zeta.mean()),
        "zeta_reference_log": 1.0 + math.log(cfg.p / m),
        "zeta_reference_exact": 1.0 + sum(m / j for j in range(m + 1, cfg.p + 1)),
        "discarded": int(np.isnan(gap).sum()),
        "record_law_order": o,
    }
    metrics["zeta_rel_error_log"] = metrics["zeta_mean"] / metrics["zeta_reference_log"] - 1.0
    metrics["zeta_rel_error_exact"] = metrics["zeta_mean"] / metrics["zeta_reference_exact"] - 1.0
    if last.size >= 10:
        metrics["ks_last"] = ks_test(last, lambda x: record_last_cdf(np.clip(x, 1e-300, 1), o),
                                     label=f"x^{o}").as_dict()
    if kept.size >= 10:
        metrics["ks_gap"] = ks_test(kept, lambda x: record_gap_cdf(np.clip(x, 1e-300, 1), o),
                                    label=f"gap order {o}").as_dict()
    return metrics


def _run_coupling(cfg, threads):
    pt = cfg.p * (cfg.p - 1) // 2
    d = d_of(pt)
    sr = math.sqrt(rho_variance(cfg.n))
    sq = math.sqrt(r_variance(cfg.n))
    iu = np.triu_indices(cfg.p, 1)

    def one(rep):
        X = generate(cfg, rep)
        rho = K.spearman_matrix(X)[iu]
        tau = K.kendall_matrix(X)[iu]
        r = ((cfg.n + 1) * rho - 3.0 * tau) / (cfg.n - 2)
        yr = d * (rho / sr - d)
        yq = d * (r / sq - d)
        return [rep, float(yr.max()), float(yq.max()), float(np.abs(yr - yq).max())]

    rows = _map_reps(one, cfg.reps, threads)
    return ["rep", "max_rho", "max_r", "max_abs_diff"], rows


def coupling_metrics(cfg, cols, rows) -> dict:
    fam = cfg.family
    diff = _col(cols, rows, "max_abs_diff")
    metrics = {"fraction_within_tol": float(np.mean(diff <= cfg.coupling_tol)),
               "coupling_tol": cfg.coupling_tol, "max_abs_diff_max": float(diff.max())}
    if len(rows) >= 10:
        kr = ks_test(_col(cols, rows, "max_rho"), lambda x: limit_cdf(fam, x), label=str(fam)).as_dict()
        kq = ks_test(_col(cols, rows, "max_r"), lambda x: limit_cdf(fam, x), label=str(fam)).as_dict()
        metrics.update(ks_rho=kr, ks_r=kq, ks_rho_r_gap=abs(kr["statistic"] - kq["statistic"]))
    return metrics


def _run_exact_kendall(cfg):
    pmf = kendall_pmf(cfg.n)
    rows = [[k, format(float(v), ".17g"), c, pr]
            for k, (v, c, pr) in enumerate(zip(pmf.support, pmf.counts, pmf.probs))]
    metrics = {"support_size": len(pmf.support), "probability_sum": float(pmf.probs.sum()),
               "variance": float(pmf.variance()), "variance_formula": tau_variance(cfg.n),
               "arithmetic": pmf.arithmetic}
    if pmf.exact:
        metrics["variance_exact_match"] = pmf.variance() == tau_variance(cfg.n, exact=True)
    return ["rep", "value", "count", "probability"], rows, metrics, pmf


def _fresh_generator(cfg):
    def gen(rng, rows):
        return cfg.marginal.draw(rng, (rows, cfg.n))
    return gen


def conditions_metrics(cfg) -> dict:
    kern = kernel_for(cfg)
    trans = transform_for(cfg)
    gen = _fresh_generator(cfg)
    x = cfg.threshold
    a1 = estimate_A1(kern, trans, gen, x, cfg.a1_draws, cfg.p, seed=derive_seed(cfg.seed, 101))
    a2 = estimate_A2(kern, trans, gen, x, cfg.a2_reps, cfg.p, seed=derive_seed(cfg.seed, 102),
                     spokes=cfg.a2_spokes)
    target = float(cfg.family.mu(x))
    return {
        "A1": {"value": a1.value, "stderr": a1.stderr, "draws": a1.draws, "target": target,
               "relative": a1.value / target if target else math.nan},
        "A2": [r.as_dict() for r in a2],
    }


# -- assertions ------------------------------------------------------------------------


def _lookup(metrics: dict, path: str):
    cur = metrics
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        else:
            cur = cur[part]
    return cur


def check_assertions(assertions: dict, metrics: dict) -> dict:
    """Evaluate ``{"ks_max.statistic": "<= 0.08", "x": "in 0.85 1.15"}`` against metrics."""
    out = {}
    for key, expr in sorted(assertions.items()):
        parts = expr.split()
        try:
            value = float(_lookup(metrics, key))
        except (KeyError, IndexError, TypeError, ValueError):
            out[key] = {"expr": expr, "value": None, "pass": False}
            continue
        op = parts[0]
        if op == "<=":
            ok = value <= float(parts[1])
        elif op == ">=":
            ok = value >= float(parts[1])
        elif op == "<":
            ok = value < float(parts[1])
        elif op == ">":
            ok = value > float(parts[1])
        elif op == "in":
            ok = float(parts[1]) <= value <= float(parts[2])
        else:
            raise ConfigError(f"bad assertion operator in {expr!r}")
        out[key] = {"expr": expr, "value": value, "pass": bool(ok)}
    return out


def _config_echo(cfg) -> dict:
    d = {}
    for k, v in cfg.__dict__.items():
        if k == "assertions":
            continue
        d[k] = v if isinstance(v, (int, float, str, bool, type(None))) else str(v)
    return d


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    cfg.validate()
    threads = resolve_threads(threads)
    log = []
    t0 = time.perf_counter()
    summary = {"schema": SCHEMA, "config": _config_echo(cfg)}
    if cfg.experiment != "exact_kendall":
        summary["reference"] = reference_values(cfg)
    extra = None
    if cfg.experiment in ("max_law", "order_stats", "exceedance_counts"):
        cols, rows = _run_point_process(cfg, threads)
        metrics = point_process_metrics(cfg, cols, rows)
    elif cfg.experiment == "records":
        cols, rows = _run_records(cfg, threads)
        metrics = records_metrics(cfg, cols, rows)
    elif cfg.experiment == "coupling_rho_r":
        cols, rows = _run_coupling(cfg, threads)
        metrics = coupling_metrics(cfg, cols, rows)
    elif cfg.experiment == "exact_kendall":
        cols, rows, metrics, extra = _run_exact_kendall(cfg)
    else:
        cols, rows = ["rep"], []
        metrics = conditions_metrics(cfg)
    summary["metrics"] = metrics
    scope = dict(metrics, reference=summary.get("reference", {}))
    checks = check_assertions(cfg.assertions, scope)
    summary["assertions"] = checks
    summary["all_pass"] = all(c["pass"] for c in checks.values())
    log.append(f"experiment={cfg.experiment} statistic={cfg.statistic} reps={cfg.reps} "
               f"threads={threads} elapsed_s={time.perf_counter() - t0:.3f}")
    res = ExperimentResult(cfg, cols, rows, summary, log)
    res.pmf = extra
    return res
