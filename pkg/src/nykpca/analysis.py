"""Effective-dimension diagnostics, error-bound calculators and synthetic spectra.

The bound constants (6, 42, 67, 5, 19, 78, 334) are fixed literals and are
never tuned.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .exceptions import InfeasibleError, UsageError
from .linalg import psd_solve
from .sampling import make_rng

MAX_SPECTRUM_DIM = 100_000


class Decay(str, enum.Enum):
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class SpectrumSpec:
    """A prescribed eigenvalue profile.

    ``polynomial``: ``scale * i ** -rate`` (rate > 1).
    ``exponential``: ``scale * exp(-rate * i)`` (rate > 0).

    ``dim`` truncates the profile. Left as None, it is the smallest dimension
    whose analytic tail is below ``tail_tol`` times the total, capped at
    100000 (a warning is issued at the cap). An explicit ``dim`` whose tail
    exceeds ``tail_tol`` is rejected.
    """

    decay: Decay
    rate: float
    scale: float = 1.0
    dim: int | None = None
    tail_tol: float = 1e-12

    def __post_init__(self):
        decay = Decay(self.decay)
        object.__setattr__(self, "decay", decay)
        if decay is Decay.POLYNOMIAL and not self.rate > 1:
            raise UsageError(f"polynomial decay needs rate > 1, got {self.rate}")
        if decay is Decay.EXPONENTIAL and not self.rate > 0:
            raise UsageError(f"exponential decay needs rate > 0, got {self.rate}")
        if not self.scale > 0:
            raise UsageError(f"scale must be positive, got {self.scale}")
        if self.dim is None:
            object.__setattr__(self, "dim", self._auto_dim())
        else:
            dim = int(self.dim)
            if dim < 1:
                raise UsageError(f"dim must be >= 1, got {dim}")
            ratio = self.tail(dim) / self.total()
            if ratio > self.tail_tol:
                raise UsageError(
                    f"truncating at dim={dim} drops {ratio:.3g} of the trace "
                    f"(tolerance {self.tail_tol:.3g}); use a larger dim"
                )
            object.__setattr__(self, "dim", dim)

    @classmethod
    def polynomial(cls, alpha, scale=1.0, **kw):
        return cls(Decay.POLYNOMIAL, alpha, scale, **kw)

    @classmethod
    def exponential(cls, tau, scale=1.0, **kw):
        return cls(Decay.EXPONENTIAL, tau, scale, **kw)

    def tail(self, ell):
        """Analytic ``sum_{i > ell} lambda_i`` of the untruncated profile."""
        ell = np.asarray(ell, dtype=np.float64)
        if self.decay is Decay.POLYNOMIAL:
            out = self.scale * zeta(self.rate, ell + 1)
        else:
            out = self.scale * np.exp(-self.rate * (ell + 1)) / -np.expm1(-self.rate)
        return out if out.ndim else float(out)

    def total(self):
        return self.tail(0)

    def _auto_dim(self):
        target = self.tail_tol * self.total()
        if self.decay is Decay.EXPONENTIAL:
            # tail(d) / total = exp(-rate * d)
            dim = max(1, math.ceil(-math.log(self.tail_tol) / self.rate))
            while dim > 1 and self.tail(dim - 1) <= target:
                dim -= 1
            while self.tail(dim) > target:
                dim += 1
        else:
            lo, hi = 1, MAX_SPECTRUM_DIM
            if self.tail(hi) > target:
                warnings.warn(
                    f"polynomial spectrum truncated at the cap dim={MAX_SPECTRUM_DIM}; "
                    f"dropped tail is {self.tail(hi) / self.total():.3g} of the trace",
                    stacklevel=3,
                )
                return MAX_SPECTRUM_DIM
            while lo < hi:
                mid = (lo + hi) // 2
                if self.tail(mid) <= target:
                    hi = mid
                else:
                    lo = mid + 1
            dim = lo
        if dim > MAX_SPECTRUM_DIM:
            warnings.warn(f"spectrum truncated at the cap dim={MAX_SPECTRUM_DIM}", stacklevel=3)
            dim = MAX_SPECTRUM_DIM
        return dim

    def eigenvalues(self):
        i = np.arange(1, self.dim + 1, dtype=np.float64)
        if self.decay is Decay.POLYNOMIAL:
            return self.scale * i ** -self.rate
        return self.scale * np.exp(-self.rate * i)


def _spectrum(eigs):
    if isinstance(eigs, SpectrumSpec):
        return eigs.eigenvalues()
    return np.asarray(eigs, dtype=np.float64)


def effective_dimension(eigs, t) -> float:
    """``sum_i lambda_i / (lambda_i + t)`` for a spectrum or a SpectrumSpec."""
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    lam = _spectrum(eigs)
    lam = lam[lam > 0]
    return float(np.sum(lam / (lam + t)))


def empirical_max_leverage(K, t) -> float:
    """Largest regularized leverage of a training point.

    Plug-in estimate of ``sup_x <k(., x), (C + t I)^-1 k(., x)>`` with ``C``
    replaced by the empirical covariance and the sup taken over the training
    points: the max diagonal entry of ``K ((1/n) K + t I)^-1``.
    """
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    return float(np.max(np.diagonal(psd_solve(K / n, t, K))))


def reconstruction_bound(n_c, lambda_ell, t) -> float:
    """High-probability upper bound ``n_c * (6 * lambda_ell + 42 * t)`` on the
    Nystrom reconstruction error, where ``n_c`` is the effective dimension at
    ``t`` and ``lambda_ell`` the ell-th population eigenvalue."""
    return n_c * (6.0 * lambda_ell + 42.0 * t)


def _check_delta(delta):
    if not 0 < delta < 1:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")


def plain_t_range(kappa, n, delta, lambda_1):
    """Admissible ``t`` for plain sampling: ``[(9 kappa / n) log(n / delta), lambda_1]``."""
    _check_delta(delta)
    return 9.0 * kappa / n * math.log(n / delta), float(lambda_1)


def m_threshold_plain(n_inf, t, kappa, delta) -> int:
    """Landmarks needed by plain sampling: ``max(67, 5 n_inf) log(4 kappa / (t delta))``."""
    _check_delta(delta)
    if not (n_inf > 0 and t > 0 and kappa > 0):
        raise UsageError("n_inf, t and kappa must be positive")
    return math.ceil(max(67.0, 5.0 * n_inf) * math.log(4.0 * kappa / (t * delta)))


def m_threshold_als(n_c, n, T, delta) -> int:
    """Landmarks needed by leverage-score sampling:
    ``max(334, 78 T^2 n_c) log(8 n / delta)``."""
    _check_delta(delta)
    if T < 1:
        raise UsageError(f"T must be >= 1, got {T}")
    return math.ceil(max(334.0, 78.0 * T * T * n_c) * math.log(8.0 * n / delta))


def select_als_regularization(eigs, n, kappa, delta, T, m, *, rtol=1e-4) -> float:
    """Smallest ``t`` in ``[(19 kappa / n) log(2n / delta), lambda_1]`` with
    ``78 T^2 N(t) log(8n / delta) <= m``, where ``N`` is the effective dimension
    of ``eigs``.

    ``N`` is nonincreasing in ``t`` so the feasible set is an interval reaching
    up to ``lambda_1``; its left end is located by bisection in log ``t`` to
    relative width ``rtol``. A warning is issued when ``m < 334 log(8n/delta)``.

    Raises
    ------
    InfeasibleError
        If the condition fails even at ``t = lambda_1`` (``gap`` is the excess
        of the left side over ``m`` there) or the range is empty.
    """
    _check_delta(delta)
    if T < 1:
        raise UsageError(f"T must be >= 1, got {T}")
    lam = _spectrum(eigs)
    log_term = math.log(8.0 * n / delta)
    side = 334.0 * log_term
    if m < side:
        warnings.warn(f"m={m} is below the side condition 334 log(8n/delta) = {side:.1f}",
                      stacklevel=2)
    lo = 19.0 * kappa / n * math.log(2.0 * n / delta)
    hi = float(np.max(lam))
    if lo > hi:
        raise InfeasibleError(f"empty range: lower end {lo:.4g} exceeds lambda_1 {hi:.4g}",
                              gap=lo - hi)

    def excess(t):
        return 78.0 * T * T * effective_dimension(lam, t) * log_term - m

    if excess(lo) <= 0:
        return lo
    gap = excess(hi)
    if gap > 0:
        raise InfeasibleError(
            f"condition fails at t = lambda_1 = {hi:.4g}: need m >= {m + gap:.1f}", gap=gap
        )
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi)
        if excess(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class BoundReport:
    t: float
    n_c: float
    n_inf: float
    lambda_ell: float
    bound_value: float
    m_threshold_plain: int
    m_threshold_als: int
    kappa: float


def bound_report(eigs, ell, t, *, kappa, n, delta, n_inf, T=1.0) -> BoundReport:
    """Collect the bound value and both landmark thresholds at one ``t``."""
    lam = _spectrum(eigs)
    if not 1 <= ell <= len(lam):
        raise UsageError(f"ell must lie in [1, {len(lam)}], got {ell}")
    n_c = effective_dimension(lam, t)
    lambda_ell = float(lam[ell - 1])
    return BoundReport(
        t=float(t),
        n_c=n_c,
        n_inf=float(n_inf),
        lambda_ell=lambda_ell,
        bound_value=reconstruction_bound(n_c, lambda_ell, t),
        m_threshold_plain=m_threshold_plain(n_inf, t, kappa, delta),
        m_threshold_als=m_threshold_als(n_c, n, T, delta),
        kappa=float(kappa),
    )


def generate_spectrum_dataset(spec: SpectrumSpec, n, seed) -> np.ndarray:
    """Rows ``(sqrt(lambda_1) e_1, ..., sqrt(lambda_d) e_d)`` with Rademacher ``e``.

    Under the linear kernel the population covariance has exactly the
    eigenvalues of ``spec`` and every point has ``k(x, x) = sum lambda_i``.
    """
    n = int(n)
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    root = np.sqrt(spec.eigenvalues())
    signs = make_rng(seed).integers(0, 2, size=(n, spec.dim), dtype=np.int8)
    X = signs.astype(np.float64)
    X *= 2.0
    X -= 1.0
    X *= root
    return X


def fit_rate(ns, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    ns = np.asarray(ns, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if ns.shape != errors.shape or ns.ndim != 1:
        raise UsageError("ns and errors must be 1-D and of equal length")
    if len(ns) < 3:
        raise UsageError(f"need at least 3 points, got {len(ns)}")
    if np.any(ns <= 0) or np.any(errors <= 0):
        raise UsageError("sample sizes and errors must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(slope)
