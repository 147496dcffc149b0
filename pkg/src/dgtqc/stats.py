"""Statistical kernel: ECDF distance, two-sample KS, Pearson r and OLS.

Everything here is a pure function of its inputs. The only randomness is the
Monte-Carlo branch of the exact KS test, which always draws from a generator
seeded by the caller.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dgtqc.errors import ArgumentError, DegenerateError, SingularityError

KS_METHODS = ("asymptotic", "exact")

# Largest number of relabelings enumerated before switching to Monte-Carlo.
MAX_ENUMERATION = 200_000
DEFAULT_RESAMPLES = 10_000

_SERIES_TOL = 1e-12
_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float
    method: str  # asymptotic | exact-enumeration | exact-montecarlo
    sample_sizes: tuple[int, int]


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    t_statistic: float
    p_value: float
    n: int


@dataclass(frozen=True)
class RegressionResult:
    """Least-squares fit with intercept.

    ``slope_std_errors`` and ``slope_p_values`` are the usual per-coefficient
    t-tests; ``standardized_betas`` are slopes rescaled by sd(x_j)/sd(y).
    """

    intercept: float
    slopes: tuple[float, ...]
    standardized_betas: tuple[float, ...]
    r_squared: float
    f_statistic: float
    df: tuple[int, int]
    p_value: float
    n: int
    slope_std_errors: tuple[float, ...] = ()
    slope_p_values: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slopes": list(self.slopes),
            "standardized_betas": list(self.standardized_betas),
            "slope_std_errors": list(self.slope_std_errors),
            "slope_p_values": list(self.slope_p_values),
            "r_squared": self.r_squared,
            "f_statistic": self.f_statistic,
            "df": list(self.df),
            "p_value": self.p_value,
            "n": self.n,
        }


def _as_sample(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ArgumentError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite values")
    return arr


def ecdf_sup_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Largest gap between the right-continuous ECDFs of ``x`` and ``y``.

    Both ECDFs are evaluated at every distinct pooled value, so ties across
    the samples are handled exactly.
    """
    x = np.sort(_as_sample(x, "x"))
    y = np.sort(_as_sample(y, "y"))
    grid = np.unique(np.concatenate([x, y]))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lambda).

    Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2). Below
    lambda = 1.18 the alternating series converges slowly, so the equivalent
    Jacobi theta form of the CDF is summed there instead.
    """
    if not lam >= 0 or math.isnan(lam):
        raise ArgumentError(f"lambda must be non-negative, got {lam}")
    if lam == 0:
        return 1.0
    if lam < 1.18:
        # 1 - Q = sqrt(2 pi)/lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        c = -(math.pi**2) / (8.0 * lam * lam)
        total = 0.0
        k = 1
        while True:
            term = math.exp(c * (2 * k - 1) ** 2)
            total += term
            if term < _SERIES_TOL * max(total, _CF_TINY) or term == 0.0:
                break
            k += 1
        q = 1.0 - math.sqrt(2.0 * math.pi) / lam * total
    else:
        q = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * lam * lam)
            q += term if k % 2 == 1 else -term
            if term < _SERIES_TOL:
                break
            k += 1
        q *= 2.0
    return min(1.0, max(0.0, q))


def _pooled_layout(x: np.ndarray, y: np.ndarray):
    """Sorted pooled sample, membership mask of x, and tie-group end indices."""
    pooled = np.concatenate([x, y])
    order = np.argsort(pooled, kind="stable")
    z = pooled[order]
    in_x = order < x.size
    # last index of each run of equal values
    ends = np.flatnonzero(np.append(z[1:] != z[:-1], True))
    return in_x, ends


def _scaled_stats(masks: np.ndarray, ends: np.ndarray, n: int, m: int) -> np.ndarray:
    """n*m*D for each row of ``masks``, in exact integer arithmetic."""
    cx = np.cumsum(masks, axis=1, dtype=np.int64)[:, ends]
    cy = (ends + 1)[None, :] - cx
    return np.max(np.abs(m * cx - n * cy), axis=1)


def _chunk_rows(total: int, width: int, budget: int = 2_000_000) -> int:
    return max(1, min(total, budget // max(width, 1)))


def _exact_enumeration(in_x, ends, n, m, observed):
    N = n + m
    combos = itertools.combinations(range(N), n)
    hits = 0
    total = 0
    step = _chunk_rows(math.comb(N, n), N)
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, step)),
            dtype=np.intp,
        )
        if block.size == 0:
            break
        block = block.reshape(-1, n)
        masks = np.zeros((block.shape[0], N), dtype=np.int8)
        masks[np.arange(block.shape[0])[:, None], block] = 1
        hits += int(np.count_nonzero(_scaled_stats(masks, ends, n, m) >= observed))
        total += block.shape[0]
    return hits / total


def _exact_montecarlo(in_x, ends, n, m, observed, n_resamples, seed):
    rng = np.random.default_rng(seed)
    base = in_x.astype(np.int8)
    hits = 0
    done = 0
    step = _chunk_rows(n_resamples, base.size)
    while done < n_resamples:
        c = min(step, n_resamples - done)
        masks = rng.permuted(np.tile(base, (c, 1)), axis=1)
        hits += int(np.count_nonzero(_scaled_stats(masks, ends, n, m) >= observed))
        done += c
    # the observed labeling is one admissible relabeling
    return (hits + 1) / (n_resamples + 1)


def ks_two_sample(
    x: Sequence[float],
    y: Sequence[float],
    method: str = "asymptotic",
    *,
    seed: int | np.random.SeedSequence | None = 0,
    n_resamples: int = DEFAULT_RESAMPLES,
    max_enumeration: int = MAX_ENUMERATION,
) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test.

    Parameters
    ----------
    x, y : sequences of numbers, each of length >= 2
    method : {"asymptotic", "exact"}
        ``asymptotic`` uses Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D) with
        ne = n*m/(n+m). ``exact`` counts relabelings of the pooled multiset
        with D at least the observed one; all C(n+m, n) relabelings are
        enumerated when that is at most ``max_enumeration``, otherwise
        ``n_resamples`` seeded random relabelings are drawn.
    seed : seed for the Monte-Carlo branch. Never drawn from ambient state.

    Returns
    -------
    KsResult
    """
    xa = _as_sample(x, "x")
    ya = _as_sample(y, "y")
    n, m = xa.size, ya.size
    if n < 2 or m < 2:
        raise ArgumentError(f"both samples need at least 2 values, got ({n}, {m})")
    if method not in KS_METHODS:
        raise ArgumentError(f"unknown KS method {method!r}")

    if method == "asymptotic":
        label = "asymptotic"
    elif math.comb(n + m, n) <= max_enumeration:
        label = "exact-enumeration"
    else:
        label = "exact-montecarlo"
        if n_resamples < 1:
            raise ArgumentError("n_resamples must be positive")

    in_x, ends = _pooled_layout(xa, ya)
    observed = int(_scaled_stats(in_x[None, :].astype(np.int8), ends, n, m)[0])
    d = observed / (n * m)
    if observed == 0:
        return KsResult(0.0, 1.0, label, (n, m))

    if label == "asymptotic":
        en = math.sqrt(n * m / (n + m))
        p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
    elif label == "exact-enumeration":
        p = _exact_enumeration(in_x, ends, n, m, observed)
    else:
        p = _exact_montecarlo(in_x, ends, n, m, observed, n_resamples, seed)
    return KsResult(d, min(1.0, max(0.0, p)), label, (n, m))


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) by the modified Lentz continued fraction."""
    if not (a > 0 and b > 0):
        raise ArgumentError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ArgumentError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ArgumentError("df must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Survival function of the F distribution."""
    if d1 <= 0 or d2 <= 0:
        raise ArgumentError("degrees of freedom must be positive")
    if math.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    xa = _as_sample(x, "x")
    ya = _as_sample(y, "y")
    if xa.size != ya.size:
        raise ArgumentError(f"length mismatch: {xa.size} vs {ya.size}")
    n = xa.size
    if n < 3:
        raise ArgumentError("pearson needs at least 3 pairs")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateError("a variable is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        return CorrelationResult(r, math.copysign(math.inf, r), 0.0, n)
    t = r * math.sqrt(df / (1.0 - r * r))
    return CorrelationResult(r, t, t_sf_two_sided(t, df), n)


def ols(predictors, y: Sequence[float]) -> RegressionResult:
    """Ordinary least squares of ``y`` on the given predictor columns plus intercept.

    ``predictors`` is a list of columns (or a single 1-D column).
    """
    ya = _as_sample(y, "y")
    cols = np.asarray(predictors, dtype=float)
    if cols.ndim == 1:
        cols = cols[None, :]
    if cols.ndim != 2 or cols.shape[1] != ya.size:
        raise ArgumentError("each predictor column must have the same length as y")
    if not np.all(np.isfinite(cols)):
        raise ArgumentError("predictors contain non-finite values")
    k, n = cols.shape
    if k < 1:
        raise ArgumentError("at least one predictor is required")
    if n <= k + 1:
        raise ArgumentError(f"need n > k + 1 observations, got n={n}, k={k}")

    ss_tot = float(np.sum((ya - ya.mean()) ** 2))
    if ss_tot == 0:
        raise DegenerateError("response is constant")
    design = np.column_stack([np.ones(n), cols.T])
    if np.linalg.matrix_rank(design) < k + 1:
        raise SingularityError("predictor columns are linearly dependent")

    coef, *_ = np.linalg.lstsq(design, ya, rcond=None)
    resid = ya - design @ coef
    ss_res = float(resid @ resid)
    r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    df_den = n - k - 1
    if r2 >= 1.0:
        f_stat = math.inf
        p = 0.0
    else:
        f_stat = (r2 / k) / ((1.0 - r2) / df_den)
        p = f_sf(f_stat, k, df_den)

    sd_y = float(np.std(ya, ddof=1))
    sd_x = np.std(cols, axis=1, ddof=1)
    slopes = coef[1:]
    betas = slopes * sd_x / sd_y

    sigma2 = ss_res / df_den
    cov = sigma2 * np.linalg.inv(design.T @ design)
    se = np.sqrt(np.clip(np.diag(cov)[1:], 0.0, None))
    slope_p = []
    for b_j, se_j in zip(slopes, se):
        if se_j == 0:
            slope_p.append(0.0)
        else:
            slope_p.append(t_sf_two_sided(float(b_j / se_j), df_den))

    return RegressionResult(
        intercept=float(coef[0]),
        slopes=tuple(float(s) for s in slopes),
        standardized_betas=tuple(float(b) for b in betas),
        r_squared=r2,
        f_statistic=f_stat,
        df=(k, df_den),
        p_value=p,
        n=n,
        slope_std_errors=tuple(float(s) for s in se),
        slope_p_values=tuple(slope_p),
    )


def f_from_r_squared(r2: float, df_num: int, df_den: int) -> float:
    """F statistic implied by R^2 and the model degrees of freedom."""
    if not 0.0 <= r2 <= 1.0:
        raise ArgumentError(f"R^2 must lie in [0, 1], got {r2}")
    if r2 == 1.0:
        return math.inf
    return (r2 / df_num) / ((1.0 - r2) / df_den)
