"""Landmark selection: uniform subsets and (approximate) leverage-score sampling.

Randomness
----------
Every routine takes an unsigned integer ``seed`` and draws from
``numpy.random.Generator(numpy.random.Philox(seed))``, a counter-based
generator with a fixed, documented output stream. Independent sub-seeds for
repetitions are obtained with :func:`derive_seed`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import UsageError
from .kernels import KernelSpec, gram
from .linalg import inv_sqrt_psd, psd_solve


def make_rng(seed) -> np.random.Generator:
    seed = int(seed)
    if seed < 0:
        raise UsageError(f"seed must be an unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(master, *keys) -> int:
    """Sub-seed for ``keys`` (e.g. ``(m, repetition)``) under ``master``.

    Uses ``SeedSequence(entropy=master, spawn_key=keys)`` and takes its first
    64-bit state word, so the mapping is fixed across platforms.
    """
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class Scheme(str, enum.Enum):
    PLAIN_UNIFORM = "uniform"
    ALS = "als"


@dataclass(frozen=True)
class LandmarkSet:
    indices: np.ndarray
    scheme: Scheme
    seed: int
    distinct_indices: np.ndarray = field(init=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "distinct_indices", np.unique(idx))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class LeverageScores:
    """Per-sample ridge leverage scores at regularization ``s``.

    ``pilot_size`` is None for exact scores.
    """

    scores: np.ndarray
    s: float
    pilot_size: int | None = None
    seed: int | None = None

    @property
    def exact(self):
        return self.pilot_size is None


def uniform_without_replacement(n, m, seed) -> LandmarkSet:
    """``m`` distinct indices from ``range(n)`` by a partial Fisher-Yates shuffle.

    Step ``i`` swaps position ``i`` with a position drawn uniformly from
    ``[i, n)`` via ``Generator.integers``; the first ``m`` positions are the
    sample.
    """
    n, m = int(n), int(m)
    if not 1 <= m <= n:
        raise UsageError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = make_rng(seed)
    pool = np.arange(n, dtype=np.int64)
    for i in range(m):
        j = int(rng.integers(i, n))
        pool[i], pool[j] = pool[j], pool[i]
    return LandmarkSet(pool[:m].copy(), Scheme.PLAIN_UNIFORM, int(seed))


def exact_leverage_scores(K, s) -> LeverageScores:
    """Diagonal of ``K (K + n s I)^-1`` for an n x n Gram matrix ``K``."""
    if not s > 0:
        raise UsageError(f"regularization s must be positive, got {s}")
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    # K and its resolvent commute, so the diagonal of (K + nsI)^-1 K is the same
    scores = np.diagonal(psd_solve(K, n * s, K)).copy()
    return LeverageScores(scores, float(s))


def approx_leverage_scores(X, spec: KernelSpec, s, pilot_size, seed) -> LeverageScores:
    """Leverage scores of a pilot Nystrom approximation of the Gram matrix.

    A pilot set ``L`` of ``pilot_size`` points is drawn uniformly without
    replacement. With ``B = K_nL K_LL^{-1/2}`` the approximation is
    ``B B^T`` and its scores are ``b_i^T (B^T B + n s I)^-1 b_i``,
    which costs O(n * pilot_size^2).
    """
    if not s > 0:
        raise UsageError(f"regularization s must be positive, got {s}")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    pilot = uniform_without_replacement(n, pilot_size, seed)
    XL = X[pilot.distinct_indices]
    R, _ = inv_sqrt_psd(gram(spec, XL))
    B = gram(spec, X, XL) @ R
    W = psd_solve(B.T @ B, n * s, B.T)
    scores = np.einsum("ij,ji->i", B, W)
    return LeverageScores(scores, float(s), pilot_size=int(pilot_size), seed=int(seed))


def approximation_factor(exact: LeverageScores, approx: LeverageScores) -> float:
    """Smallest ``T`` with ``exact / T <= approx <= T * exact`` elementwise."""
    a = np.asarray(exact.scores, dtype=np.float64)
    b = np.asarray(approx.scores, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"score vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    if exact.s != approx.s:
        raise UsageError(f"scores computed at different s: {exact.s} vs {approx.s}")
    if np.any(a <= 0) or np.any(b <= 0):
        raise UsageError("leverage scores must be strictly positive")
    return float(np.max(np.maximum(a / b, b / a)))


def als_sample(scores: LeverageScores, m, seed) -> LandmarkSet:
    """``m`` i.i.d. draws, with replacement, proportional to the scores.

    Inverse-CDF sampling: ``u = Generator.random(m)`` is mapped through the
    cumulative normalized scores with ``searchsorted(..., side="right")``.
    """
    m = int(m)
    if m < 1:
        raise UsageError(f"need m >= 1, got {m}")
    p = np.asarray(scores.scores if isinstance(scores, LeverageScores) else scores, dtype=np.float64)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise UsageError("scores must be finite and nonnegative")
    total = p.sum()
    if not total > 0:
        raise UsageError("all scores are zero")
    cdf = np.cumsum(p / total)
    u = make_rng(seed).random(m)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    # guard the u*cdf[-1] == cdf[-1] edge and any trailing zero-weight entries
    idx = np.minimum(idx, np.flatnonzero(p)[-1])
    return LandmarkSet(idx, Scheme.ALS, int(seed))
