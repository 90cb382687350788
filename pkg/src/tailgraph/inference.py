"""Residual-based inference for zero partial tail correlation.

For a pair of variables and prediction weights b fitted on the remaining
ones, the preimage residuals ``U = t^-1(X_pair) - b' t^-1(X_rest)`` are
regularly varying on all of R^2.  Their thresholded second angular moment
estimates the off-diagonal conditional inner product, its variance follows
from the iid angular products, and

    t = sigma_u_hat / sqrt(tau2_hat / k)

is referred to a t distribution with k - 1 degrees of freedom under the null
of zero partial tail correlation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import stats

from .errors import (
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    InsufficientExceedancesError,
    TailgraphError,
)
from .project import Partition, conditional_ipm, ptc_matrix, solve_b
from .rvsim import RvNoiseSpec, ar1_matrix, construct, sample_noise, theoretical_ipm
from .tpdm import MIN_EXCEEDANCES, TailSample, estimate_tpdm
from .xlinear import softplus, softplus_inv


def max_workers(threads=None) -> int:
    """Worker cap: explicit argument, else the TAILGRAPH_THREADS env var, else 1."""
    if threads is None:
        env = os.environ.get("TAILGRAPH_THREADS", "").strip()
        threads = int(env) if env.isdigit() else 1
    return max(1, int(threads))


def _run_indexed(fn, count, threads):
    """Evaluate fn(i) for i in range(count), optionally on a thread pool.

    Results come back ordered by index, so aggregation does not depend on
    completion order.
    """
    workers = max_workers(threads)
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


@dataclass
class ResidualSample:
    """Retained preimage residuals for one pair, with polar decomposition."""

    u: np.ndarray                 # (k, 2) residual rows above the radius threshold
    pair: tuple[int, int]
    b_used: np.ndarray
    r: np.ndarray                 # (k,) radii
    w: np.ndarray                 # (k, 2) unit angles
    n_total: int                  # residual rows before thresholding
    threshold: float
    m_trace: float | None = None  # trace of the estimated conditional IPM

    def __len__(self) -> int:
        return self.u.shape[0]


def residuals(sample, part: Partition, b, q_pred: float = 0.98,
              m_trace: float | None = None, prefilter_quantile: float | None = None,
              ) -> ResidualSample:
    """Compute preimage residuals and retain radius exceedances.

    Residuals are computed for every observation; rows whose residual radius
    exceeds the empirical ``q_pred`` quantile are retained.  When
    ``prefilter_quantile`` is set, rows are first restricted to those whose
    predicted pair has a large radius (an optional variant, off by default).
    """
    data = sample.data if isinstance(sample, TailSample) else np.asarray(sample, dtype=float)
    if len(part.target) != 2:
        raise DomainError("residual inference needs exactly two target variables")
    if not 0.0 < q_pred < 1.0:
        raise DomainError("q_pred must lie in (0, 1)")
    B = np.asarray(b, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.shape != (len(part.complement), 2):
        raise DimensionError(f"weights must be ({len(part.complement)}, 2), got {B.shape}")
    Y = softplus_inv(data)
    Y1 = Y[:, list(part.target)]
    Y2 = Y[:, list(part.complement)]
    U = Y1 - Y2 @ B

    if prefilter_quantile is not None:
        pred = softplus(Y2 @ B)
        pred_r = np.sqrt(np.sum(pred ** 2, axis=1))
        keep = pred_r > np.quantile(pred_r, prefilter_quantile)
        U = U[keep]

    r = np.sqrt(np.sum(U ** 2, axis=1))
    n_total = r.size
    thr = float(np.quantile(r, q_pred)) if n_total else 0.0
    mask = r > thr
    k = int(mask.sum())
    if k < MIN_EXCEEDANCES:
        raise InsufficientExceedancesError(k, MIN_EXCEEDANCES, "residual radii")
    rk = r[mask]
    return ResidualSample(u=U[mask], pair=tuple(part.target), b_used=B, r=rk,
                          w=U[mask] / rk[:, None], n_total=n_total, threshold=thr,
                          m_trace=m_trace)


def _estimator_mask(res: ResidualSample, q_res: float | None):
    """Exceedance set for the angular-moment estimator.

    ``q_res=None`` treats every retained row as an exceedance.  Otherwise the
    target count is ``floor((1 - q_res) * n_total)`` relative to the rows the
    residuals were computed from; if the retained set is already at or below
    that count it is used whole, else it is re-thresholded at the matching
    upper order statistic (strict, ties dropped).
    """
    if q_res is None:
        k = len(res)
        return np.ones(k, dtype=bool), k, float(res.r.min())
    if not 0.0 < q_res < 1.0:
        raise DomainError("q_res must lie in (0, 1)")
    k_target = int(np.floor((1.0 - q_res) * res.n_total + 1e-9))
    if k_target >= len(res):
        k = len(res)
        return np.ones(k, dtype=bool), k, float(res.r.min())
    # threshold at the (k+1)-th upper order statistic so the strict
    # exceedance count equals k (absent ties, which are dropped)
    cut = res.r.size - k_target - 1
    order_stat = np.partition(res.r, cut)[cut]
    mask = res.r > order_stat
    k = int(mask.sum())
    if k < MIN_EXCEEDANCES:
        raise InsufficientExceedancesError(k, MIN_EXCEEDANCES, "residual estimator")
    return mask, k, float(res.r[mask].min())


def _resolve_residual_mass(res: ResidualSample, mass, r_k: float, k: int) -> float:
    if mass == "trace":
        if res.m_trace is None:
            raise DomainError("mass='trace' needs the conditional-IPM trace on the sample")
        return float(res.m_trace)
    if mass == "estimate":
        return r_k ** 2 / res.n_total * k
    m = float(mass)
    if m <= 0:
        raise DomainError("fixed mass must be positive")
    return m


def estimate_sigma_u(res: ResidualSample, q_res: float | None = None, mass="trace"):
    """Thresholded angular-moment estimate of the conditional off-diagonal.

    Returns ``(sigma_u_hat, m_tilde, k)``.  ``mass`` is "trace" (total mass
    taken as the trace of the estimated conditional IPM), "estimate"
    (``(R_(k)^2/n) k`` on the residual radii) or a positive number.
    """
    mask, k, r_k = _estimator_mask(res, q_res)
    m = _resolve_residual_mass(res, mass, r_k, k)
    prod = res.w[mask, 0] * res.w[mask, 1]
    return m / k * float(prod.sum()), m, k


def estimate_tau2(res: ResidualSample, m_tilde: float, q_res: float | None = None) -> float:
    """Variance scale ``m~^2 (E[W1^2 W2^2] - E[W1 W2]^2)`` of the estimator.

    Sample moments over the exceedance angles use 1/(k-1) normalization.
    Raises :class:`DegenerateVarianceError` when the result is not positive,
    which happens when the angular products carry no spread.
    """
    mask, k, _ = _estimator_mask(res, q_res)
    prod = res.w[mask, 0] * res.w[mask, 1]
    e1 = prod.sum() / (k - 1)
    e2 = (prod ** 2).sum() / (k - 1)
    tau2 = float(m_tilde) ** 2 * (e2 - e1 ** 2)
    if not np.isfinite(tau2) or tau2 <= 0.0:
        raise DegenerateVarianceError(
            f"angular products have no usable spread (tau2={tau2:.3e})")
    return tau2


def t_statistic(sigma_u_hat: float, tau2_hat: float, k: int) -> float:
    """Studentized statistic ``sigma_u_hat / sqrt(tau2_hat / k)``."""
    if tau2_hat <= 0.0:
        raise DegenerateVarianceError("tau2 must be positive")
    if k < 2:
        raise DomainError("need k >= 2")
    return float(sigma_u_hat / np.sqrt(tau2_hat / k))


def confidence_interval(sigma_u_hat: float, tau2_hat: float, k: int, level: float = 0.95):
    """Two-sided t interval ``sigma_u_hat +- t_{(1+level)/2, k-1} sqrt(tau2/k)``."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if tau2_hat <= 0.0:
        raise DegenerateVarianceError("tau2 must be positive")
    if k < 2:
        raise DomainError("need k >= 2")
    half = stats.t.ppf((1.0 + level) / 2.0, k - 1) * np.sqrt(tau2_hat / k)
    return float(sigma_u_hat - half), float(sigma_u_hat + half)


def critical_value(method, alpha: float = 0.05, n_pairs: int | None = None,
                   df: int | None = None) -> float:
    """Global critical value for the all-pairs test.

    ``method`` is "bonferroni" (two-sided t quantile at alpha/(2 n_pairs)),
    "none" (unadjusted two-sided t quantile), a number, or "fixed:<c>" for a
    value used verbatim (e.g. externally computed studentized-range values).
    """
    if isinstance(method, (int, float)):
        return float(method)
    if isinstance(method, str) and method.startswith("fixed:"):
        return float(method.split(":", 1)[1])
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if df is None or df < 2:
        raise DomainError("need df >= 2")
    if method == "bonferroni":
        if not n_pairs or n_pairs < 1:
            raise DomainError("bonferroni needs the number of pairs")
        return float(stats.t.ppf(1.0 - alpha / (2.0 * n_pairs), df))
    if method == "none":
        return float(stats.t.ppf(1.0 - alpha / 2.0, df))
    raise DomainError(f"unknown critical value method {method!r}")


@dataclass
class PairRecord:
    """Per-pair test outcome; ``error`` is set when the pipeline failed."""

    i: int
    j: int
    names: tuple[str, str]
    sigma_u: float | None = None
    tau2: float | None = None
    k: int | None = None
    t_stat: float | None = None
    reject: bool | None = None
    error: str | None = None


@dataclass
class PtcTestReport:
    """All-pairs test report with one global critical value."""

    records: list[PairRecord]
    critical_value: float
    adjustment: str
    alpha: float
    columns: list[str]
    quantiles: dict = field(default_factory=dict)
    ptc: np.ndarray | None = None

    def record(self, i: int, j: int) -> PairRecord:
        a, b = min(i, j), max(i, j)
        for rec in self.records:
            if (rec.i, rec.j) == (a, b):
                return rec
        raise KeyError((i, j))

    def n_rejected(self) -> int:
        return sum(1 for r in self.records if r.reject)

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "adjustment": self.adjustment,
            "quantiles": dict(self.quantiles),
            "ptc": None if self.ptc is None else [
                [None if np.isnan(v) else float(v) for v in row] for row in self.ptc],
            "pairs": [
                {
                    "i": r.i, "j": r.j, "names": list(r.names),
                    "sigma_u": r.sigma_u, "tau2": r.tau2, "k": r.k,
                    "t": r.t_stat, "reject": r.reject, "error": r.error,
                }
                for r in self.records
            ],
        }

    csv_header = ("i", "j", "name_i", "name_j", "sigma_u", "tau2", "k", "t", "reject", "error")

    def to_csv_rows(self):
        for r in self.records:
            yield (r.i, r.j, r.names[0], r.names[1],
                   "" if r.sigma_u is None else repr(r.sigma_u),
                   "" if r.tau2 is None else repr(r.tau2),
                   "" if r.k is None else r.k,
                   "" if r.t_stat is None else repr(r.t_stat),
                   "" if r.reject is None else int(r.reject),
                   r.error or "")


def _pair_stats(sample: TailSample, sigma_hat, i: int, j: int, q_pred, q_res):
    part = Partition.pair(i, j, sample.p)
    b = solve_b(sigma_hat, part)
    cond = conditional_ipm(sigma_hat, part)
    res = residuals(sample, part, b, q_pred=q_pred, m_trace=cond.trace)
    sigma_u, m_tilde, k = estimate_sigma_u(res, q_res=q_res, mass="trace")
    tau2 = estimate_tau2(res, m_tilde, q_res=q_res)
    return sigma_u, tau2, k, t_statistic(sigma_u, tau2, k)


def ptc_test_all_pairs(sample: TailSample, q_radial: float = 0.95, q_pred: float = 0.98,
                       q_res: float | None = None, cv_method="bonferroni",
                       alpha: float = 0.05, tpdm_mode: str = "pairwise",
                       tpdm_mass="fixed", threads=None) -> PtcTestReport:
    """Test every pair for zero partial tail correlation.

    Estimates the TPDM once, then per pair: prediction weights from the
    complement block, preimage residuals thresholded at ``q_pred``, the
    angular-moment estimate and its variance, and the t statistic.  One
    global critical value is applied; per-pair failures are recorded in the
    report instead of aborting the run.
    """
    if sample.p < 3:
        raise DomainError("need at least 3 variables (a pair plus one conditioning variable)")
    sigma_hat = estimate_tpdm(sample, q_radial=q_radial, mode=tpdm_mode, mass=tpdm_mass)
    pairs = list(combinations(range(sample.p), 2))

    def run_pair(idx):
        i, j = pairs[idx]
        rec = PairRecord(i=i, j=j, names=(sample.columns[i], sample.columns[j]))
        try:
            rec.sigma_u, rec.tau2, rec.k, rec.t_stat = _pair_stats(
                sample, sigma_hat, i, j, q_pred, q_res)
        except TailgraphError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        return rec

    records = _run_indexed(run_pair, len(pairs), threads)
    ok = [r for r in records if r.error is None]
    if isinstance(cv_method, str) and cv_method in ("bonferroni", "none"):
        if not ok:
            raise DegenerateVarianceError("every pair failed; no critical value available")
        df = min(r.k for r in ok) - 1
        cv = critical_value(cv_method, alpha=alpha, n_pairs=len(pairs), df=df)
        adjustment = cv_method
    else:
        # externally supplied reference value (e.g. a studentized-range
        # critical value computed elsewhere), used verbatim
        cv = critical_value(cv_method)
        adjustment = "tukey-reference"
    for r in ok:
        r.reject = bool(abs(r.t_stat) > cv)

    try:
        ptc_vals = ptc_matrix(sigma_hat)
    except TailgraphError:
        ptc_vals = None
    return PtcTestReport(records=records, critical_value=cv, adjustment=adjustment,
                         alpha=alpha, columns=list(sample.columns),
                         quantiles={"radial": q_radial, "pred": q_pred, "res": q_res},
                         ptc=ptc_vals)


@dataclass
class CoverageResult:
    """Monte Carlo summary of confidence-interval coverage for one pair."""

    coverage: float
    level: float
    reps: int
    n: int
    phi: float
    true_value: float
    covered: np.ndarray
    partition_estimates: np.ndarray
    residual_estimates: np.ndarray
    k_values: np.ndarray
    t_values: np.ndarray
    failed: int = 0

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "level": self.level,
            "reps": self.reps,
            "n": self.n,
            "phi": self.phi,
            "true_value": self.true_value,
            "failed": self.failed,
            "mean_k": float(np.mean(self.k_values)) if self.k_values.size else None,
            "partition_estimates": self.partition_estimates.tolist(),
            "residual_estimates": self.residual_estimates.tolist(),
        }


def coverage_study(phi: float = 0.7, n: int = 10_000, reps: int = 500,
                   q_radial: float = 0.98, level: float = 0.95, seed=0,
                   noise: RvNoiseSpec | None = None, target=(1, 3), p: int = 4,
                   threads=None) -> CoverageResult:
    """Confidence-interval coverage for one conditional off-diagonal entry.

    Simulates the autoregressive model, estimates the TPDM from the largest
    (1 - q_radial) fraction of full-vector radii, fits prediction weights for
    the target pair, and builds a per-replication t interval for the
    conditional off-diagonal from the residual estimator.  Both the
    partition-based and the residual-based estimates are returned per
    replication.  The default pair (second and fourth variable given the
    others) has true value 0.
    """
    if reps < 1:
        raise DomainError("reps must be >= 1")
    A = ar1_matrix(phi, p)
    part = Partition(target=tuple(target),
                     complement=tuple(k for k in range(p) if k not in target))
    true_c = conditional_ipm(theoretical_ipm(A), part).matrix[0, 1]
    seeds = np.random.SeedSequence(seed).spawn(reps)
    spec = noise or RvNoiseSpec()

    def run_rep(rep):
        X = construct(A, sample_noise(p, n, spec, seeds[rep]))
        sample = TailSample(X, margin="raw")
        sigma_hat = estimate_tpdm(sample, q_radial=q_radial, mode="global", mass="estimate")
        b = solve_b(sigma_hat, part)
        cond = conditional_ipm(sigma_hat, part)
        res = residuals(sample, part, b, q_pred=q_radial, m_trace=cond.trace)
        sigma_u, m_tilde, k = estimate_sigma_u(res, mass="trace")
        tau2 = estimate_tau2(res, m_tilde)
        lo, hi = confidence_interval(sigma_u, tau2, k, level)
        t_val = t_statistic(sigma_u, tau2, k)
        return (lo <= true_c <= hi, cond.matrix[0, 1], sigma_u, k, t_val)

    covered, part_est, res_est, ks, ts = [], [], [], [], []
    failed = 0
    for out in _run_indexed(lambda r: _safe_rep(run_rep, r), reps, threads):
        if out is None:
            failed += 1
            continue
        c, pe, re_, k, tv = out
        covered.append(c)
        part_est.append(pe)
        res_est.append(re_)
        ks.append(k)
        ts.append(tv)
    covered = np.asarray(covered, dtype=bool)
    coverage = float(covered.mean()) if covered.size else float("nan")
    return CoverageResult(coverage=coverage, level=level, reps=reps, n=n, phi=phi,
                          true_value=float(true_c), covered=covered,
                          partition_estimates=np.asarray(part_est),
                          residual_estimates=np.asarray(res_est),
                          k_values=np.asarray(ks), t_values=np.asarray(ts),
                          failed=failed)


def _safe_rep(fn, rep):
    try:
        return fn(rep)
    except TailgraphError:
        return None
