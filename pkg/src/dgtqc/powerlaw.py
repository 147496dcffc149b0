"""Power-law fitting and bootstrap goodness-of-fit.

Follows the Clauset-Shalizi-Newman recipe: for every candidate lower cutoff
``xmin`` the scaling exponent is estimated by maximum likelihood and the
KS distance between the tail and the fitted model is measured; the cutoff
with the smallest distance wins. The goodness-of-fit p-value comes from a
semi-parametric bootstrap that re-runs the whole fit on each replicate.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dgtqc.errors import ArgumentError, InstabilityError, InsufficientTailError

log = logging.getLogger(__name__)

MIN_TAIL = 3
ALPHA_MAX = 6.0
DEFAULT_REPLICATES = 1000
MAX_DISCARD_FRACTION = 0.10

# Bernoulli numbers B_2 .. B_20 for the Euler-Maclaurin tail of zeta.
_BERNOULLI = (
    1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6,
    -3617 / 510, 43867 / 798, -174611 / 330,
)
_EM_TERMS = 12


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: float
    n_tail: int
    d_statistic: float
    mode: str  # continuous | discrete
    n: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class GofResult:
    fit: PowerLawFit
    p_value: float
    replicates: int
    seed: int
    discarded: int = 0

    def as_dict(self) -> dict:
        return {"p_value": self.p_value, "replicates": self.replicates,
                "seed": self.seed, "discarded": self.discarded, **self.fit.as_dict()}


# --------------------------------------------------------------------------- #
# Hurwitz zeta
# --------------------------------------------------------------------------- #

def hurwitz_zeta(s: float, q):
    """zeta(s, q) = sum_{k>=0} (q + k)^-s for s > 1, q > 0.

    The first terms are summed directly and the remainder is closed with the
    Euler-Maclaurin formula, whose neglected term is far below 1e-12 here.
    Vectorized over ``q``.
    """
    if not s > 1:
        raise ArgumentError(f"zeta needs s > 1, got {s}")
    qa = np.asarray(q, dtype=float)
    if np.any(qa <= 0):
        raise ArgumentError("zeta needs q > 0")
    k = np.arange(_EM_TERMS, dtype=float)
    head = np.sum((qa[..., None] + k) ** -s, axis=-1)
    a = qa + _EM_TERMS
    tail = a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** -s
    # rising factorial s (s+1) ... (s+2j-2) / (2j)!
    coef = s
    power = a ** (-s - 1.0)
    for j, b2j in enumerate(_BERNOULLI, start=1):
        tail = tail + b2j / math.factorial(2 * j) * coef * power
        coef *= (s + 2 * j - 1) * (s + 2 * j)
        power = power / (a * a)
    out = head + tail
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- #
# Fitting
# --------------------------------------------------------------------------- #

def _check_data(data, integer: bool) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ArgumentError("data must be a non-empty list of finite numbers")
    if np.any(x <= 0):
        raise ArgumentError("power-law data must be strictly positive")
    if integer and np.any(x != np.round(x)):
        raise ArgumentError("discrete fit needs integer data")
    if x.size < MIN_TAIL:
        raise InsufficientTailError(f"need at least {MIN_TAIL} values, got {x.size}")
    if np.unique(x).size < 2:
        raise InsufficientTailError("need at least 2 distinct values")
    return np.sort(x)


def _groups(x: np.ndarray):
    """Distinct values with the first and last sorted index of each."""
    u, first, counts = np.unique(x, return_index=True, return_counts=True)
    return u, first, first + counts - 1


def _candidates(u, first, n):
    """Indices into ``u`` of admissible cutoffs (tail >= MIN_TAIL, not constant)."""
    ok = (n - first >= MIN_TAIL) & (np.arange(u.size) < u.size - 1)
    return np.flatnonzero(ok)


def _continuous_scan(x, u, first, last, cand, xmin_override=None):
    n = x.size
    logs = np.log(x)
    suffix = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    best = None
    step = max(1, 2_000_000 // max(u.size, 1))
    for start in range(0, cand.size, step):
        j = cand[start:start + step]
        s = first[j]
        cut = u[j] if xmin_override is None else np.full(j.size, xmin_override)
        n_tail = n - s
        denom = suffix[s] - n_tail * np.log(cut)
        with np.errstate(divide="ignore"):
            alpha = 1.0 + n_tail / denom
        # (candidate, distinct value) grid; columns before the cutoff are masked
        cols = np.arange(u.size)
        live = cols[None, :] >= j[:, None]
        ratio = u[None, :] / cut[:, None]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            model = 1.0 - ratio ** (1.0 - alpha[:, None])
            hi = (last[None, :] + 1 - s[:, None]) / n_tail[:, None]
            lo = (first[None, :] - s[:, None]) / n_tail[:, None]
            gap = np.maximum(np.abs(hi - model), np.abs(lo - model))
        gap = np.where(live, gap, -np.inf)
        d = np.max(gap, axis=1)
        d = np.where(np.isfinite(alpha) & (alpha > 1), d, np.inf)
        i = int(np.argmin(d))
        if np.isfinite(d[i]) and (best is None or d[i] < best[3]):
            best = (float(alpha[i]), float(cut[i]), int(n_tail[i]), float(d[i]))
    return best


def _discrete_loglik(alpha, xmin, n_tail, sum_log):
    return -n_tail * math.log(hurwitz_zeta(alpha, xmin)) - alpha * sum_log


def _golden_max(f, lo, hi, tol=1e-10):
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def discrete_alpha_mle(tail: Sequence[float], xmin: float) -> float:
    """Golden-section maximizer of the discrete power-law likelihood over (1, 6]."""
    t = np.asarray(tail, dtype=float)
    n_tail = t.size
    sum_log = float(np.sum(np.log(t)))
    return _golden_max(
        lambda a: _discrete_loglik(a, xmin, n_tail, sum_log), 1.0 + 1e-9, ALPHA_MAX
    )


def _discrete_scan(x, u, first, last, cand):
    n = x.size
    best = None
    for j in cand:
        s = first[j]
        cut = u[j]
        tail = x[s:]
        alpha = discrete_alpha_mle(tail, cut)
        vals = u[j:]
        fe = (last[j:] + 1 - s) / tail.size
        z0 = hurwitz_zeta(alpha, cut)
        # model CDF at each distinct value and just before the next one
        at_v = 1.0 - hurwitz_zeta(alpha, vals + 1.0) / z0
        nxt = np.append(vals[1:] - 1.0, vals[-1])
        before_next = 1.0 - hurwitz_zeta(alpha, nxt + 1.0) / z0
        d = float(np.max(np.maximum(np.abs(fe - at_v), np.abs(fe - before_next))))
        if best is None or d < best[3]:
            best = (alpha, float(cut), int(n - s), d)
    return best


def fit_powerlaw(data, mode: str = "continuous", xmin: float | None = None) -> PowerLawFit:
    if mode == "continuous":
        return fit_continuous(data, xmin=xmin)
    if mode == "discrete":
        return fit_discrete(data, xmin=xmin)
    raise ArgumentError(f"unknown power-law mode {mode!r}")


def fit_continuous(data: Sequence[float], xmin: float | None = None) -> PowerLawFit:
    """Continuous power-law fit with KS-minimizing cutoff.

    ``alpha = 1 + n_tail / sum(ln(x_i / xmin))`` over the tail x_i >= xmin.
    Passing ``xmin`` fixes the cutoff instead of searching.
    """
    x = _check_data(data, integer=False)
    u, first, last = _groups(x)
    if xmin is not None:
        if xmin <= 0:
            raise ArgumentError("xmin must be positive")
        j = int(np.searchsorted(u, xmin, side="left"))
        if j >= u.size or x.size - first[j] < MIN_TAIL:
            raise InsufficientTailError(f"fewer than {MIN_TAIL} points at or above xmin={xmin}")
        best = _continuous_scan(x, u, first, last, np.array([j]), xmin_override=float(xmin))
    else:
        cand = _candidates(u, first, x.size)
        best = _continuous_scan(x, u, first, last, cand) if cand.size else None
    if best is None:
        raise InsufficientTailError("no admissible xmin candidate")
    alpha, cut, n_tail, d = best
    return PowerLawFit(alpha, cut, n_tail, d, "continuous", x.size)


def fit_discrete(data: Sequence[int], xmin: int | None = None) -> PowerLawFit:
    """Discrete power-law fit; alpha maximizes the Hurwitz-zeta likelihood."""
    x = _check_data(data, integer=True)
    u, first, last = _groups(x)
    if xmin is not None:
        idx = np.flatnonzero(u == xmin)
        if idx.size == 0 or x.size - first[idx[0]] < MIN_TAIL:
            raise InsufficientTailError(f"fewer than {MIN_TAIL} points at or above xmin={xmin}")
        cand = idx
    else:
        cand = _candidates(u, first, x.size)
    if cand.size == 0:
        raise InsufficientTailError("no admissible xmin candidate")
    alpha, cut, n_tail, d = _discrete_scan(x, u, first, last, cand)
    return PowerLawFit(alpha, cut, n_tail, d, "discrete", x.size)


# --------------------------------------------------------------------------- #
# Sampling
# --------------------------------------------------------------------------- #

def sample_powerlaw(alpha: float, xmin: float, n: int, seed=0, mode: str = "continuous") -> np.ndarray:
    """Draw ``n`` power-law variates by CDF inversion.

    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    if not alpha > 1:
        raise ArgumentError(f"alpha must exceed 1, got {alpha}")
    if not xmin > 0:
        raise ArgumentError(f"xmin must be positive, got {xmin}")
    if n < 1:
        raise ArgumentError("n must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)  # [0, 1)
    if mode == "continuous":
        return xmin * (1.0 - u) ** (-1.0 / (alpha - 1.0))
    if mode != "discrete":
        raise ArgumentError(f"unknown power-law mode {mode!r}")
    if xmin != int(xmin):
        raise ArgumentError("discrete xmin must be an integer")
    return _discrete_inverse(alpha, float(xmin), 1.0 - u)


def _discrete_inverse(alpha, xmin, surv):
    """Smallest integer x >= xmin with zeta(alpha, x+1)/zeta(alpha, xmin) <= surv."""
    z0 = hurwitz_zeta(alpha, xmin)

    def tail(x):
        return hurwitz_zeta(alpha, x + 1.0) / z0

    lo = np.full(surv.shape, xmin)
    done = tail(lo) <= surv
    hi = np.maximum(np.floor(xmin * surv ** (-1.0 / (alpha - 1.0))), xmin + 1.0)
    # grow the bracket until the upper end satisfies the condition
    while True:
        bad = ~done & (tail(hi) > surv)
        if not bad.any():
            break
        lo = np.where(bad, hi, lo)
        hi = np.where(bad, hi * 2.0, hi)
    # invariant for unfinished entries: tail(lo) > surv >= tail(hi)
    while True:
        active = ~done & (hi - lo > 1)
        if not active.any():
            break
        mid = np.floor((lo + hi) / 2.0)
        ok = tail(mid) <= surv
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return np.where(done, xmin, hi)


# --------------------------------------------------------------------------- #
# Goodness of fit
# --------------------------------------------------------------------------- #

def _replicate_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def _replicate_distances(data, fit, seed, indices):
    below = data[data < fit.xmin]
    n = data.size
    p_tail = fit.n_tail / n
    out = []
    for r in indices:
        rng = np.random.default_rng(_replicate_seed(seed, r))
        n_pl = n if below.size == 0 else int(rng.binomial(n, p_tail))
        parts = []
        if n_pl:
            parts.append(sample_powerlaw(fit.alpha, fit.xmin, n_pl, rng, fit.mode))
        if n - n_pl:
            parts.append(rng.choice(below, size=n - n_pl, replace=True))
        synth = np.concatenate(parts)
        try:
            out.append(fit_powerlaw(synth, fit.mode).d_statistic)
        except ArgumentError as exc:
            log.debug("replicate %d discarded: %s", r, exc)
            out.append(None)
    return out


def gof_pvalue(
    data: Sequence[float],
    fit: PowerLawFit | None = None,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    n_jobs: int = 1,
) -> GofResult:
    """Semi-parametric bootstrap p-value for the power-law hypothesis.

    Each replicate keeps the data size; every point comes from the fitted
    power law above ``xmin`` with probability n_tail/n and otherwise is drawn
    uniformly from the observed values below ``xmin``. The replicate is
    re-fitted with the same cutoff search and its KS distance recorded.
    ``p = #(D_replicate >= D_observed) / #replicates``.

    Replicate ``r`` uses the substream ``SeedSequence(seed, spawn_key=(r,))``,
    so the result does not depend on ``n_jobs``.
    """
    if replicates < 100:
        raise ArgumentError("use at least 100 replicates")
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if fit is None:
        fit = fit_powerlaw(x)
    if n_jobs > 1:
        chunks = [list(range(i, replicates, n_jobs)) for i in range(n_jobs)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_replicate_distances, [x] * n_jobs, [fit] * n_jobs,
                                  [seed] * n_jobs, chunks))
        ds = [None] * replicates
        for chunk, res in zip(chunks, parts):
            for r, d in zip(chunk, res):
                ds[r] = d
    else:
        ds = _replicate_distances(x, fit, seed, range(replicates))

    valid = [d for d in ds if d is not None]
    discarded = replicates - len(valid)
    if discarded:
        log.info("%d of %d bootstrap replicates discarded", discarded, replicates)
    if discarded > MAX_DISCARD_FRACTION * replicates:
        raise InstabilityError(
            f"{discarded} of {replicates} replicates failed to re-fit"
        )
    # small tolerance so replicates tying with the observed fit count as >=
    hits = sum(1 for d in valid if d >= fit.d_statistic - 1e-12)
    return GofResult(fit, hits / len(valid), len(valid), seed, discarded)
