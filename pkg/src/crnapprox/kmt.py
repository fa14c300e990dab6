"""
Hungarian (KMT) construction of a Poisson path from Gaussian increments.

Given ``n = 2**K`` standard normal increments on a grid of step Delta, the
construction produces standardized Poisson increments coupled to them:

* dyadic block sums ``V[j, k]`` of the normals (block ``k`` of size ``2**j``)
  and the half-block differences ``Vtilde[q, k] = V[q-1, 2k] - V[q-1, 2k+1]``;
* the first block of every level through the quantile transform
  ``U[j, 1] = G_j(Phi(2**(-j/2) V[j, 1]))``;
* every other block by splitting its parent with the conditional quantile
  transform, which for a Poisson pair reduces to ``Binomial(m, 1/2)``.

Values are "standardized": a Poisson count ``c`` of mean ``mu`` is reported as
``(c - mu) / sqrt(Delta)``. Internally the construction runs on integer counts,
so the dyadic identity ``U[j, k] = U[j-1, 2k] + U[j-1, 2k+1]`` holds exactly.
Each cell depends only on its parent, so filling level by level gives the
same values as the column-block fill order reported by :func:`fill_schedule`.

CDF conventions follow ``F(x) = P(U < x)`` (strict inequality, left limit) and
``G(t) = sup{x : F(x) <= t}``, i.e. ``G(t)`` is the smallest atom ``c`` with
``P(U <= c) > t``. Phi is ``scipy.special.ndtr`` (double precision erf based).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .errors import LatticeError

LOGGER = logging.getLogger(__name__)

# relative tolerance for snapping back-converted counts onto the integer lattice
LATTICE_TOLERANCE = 1e-9


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and n & (n - 1) == 0


def _snap(value: float) -> float:
    nearest = round(value)
    if abs(value - nearest) <= LATTICE_TOLERANCE * max(1.0, abs(value)):
        return float(nearest)
    return value


# ========== Types ==========


@dataclass(frozen=True)
class DyadicIncrements:
    """``n = 2**K`` standardized increments on a grid of step ``delta``."""

    delta: float
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise LatticeError(f"increments must be one-dimensional, got shape {values.shape}")
        if not _is_power_of_two(values.size):
            raise LatticeError(
                f"number of increments must be a power of two >= 2, got {values.size}; "
                "round the horizon up to the next power of two"
            )
        if not self.delta > 0:
            raise LatticeError(f"grid step must be positive, got {self.delta}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def levels(self) -> int:
        """K such that n = 2**K."""
        return self.n.bit_length() - 1

    def counts(self) -> np.ndarray:
        """Poisson counts ``sqrt(Delta) * values + Delta``; must be non-negative integers.

        Raises:
            LatticeError: If any increment is off the Poisson lattice
        """
        raw = math.sqrt(self.delta) * self.values + self.delta
        counts = np.rint(raw)
        if np.any(np.abs(raw - counts) > LATTICE_TOLERANCE * np.maximum(1.0, np.abs(raw))) or np.any(counts < 0):
            raise LatticeError("increments are not standardized Poisson counts")
        return counts.astype(np.int64)

    def is_lattice(self) -> bool:
        try:
            self.counts()
        except LatticeError:
            return False
        return True


@dataclass(frozen=True)
class DyadicSums:
    """Block sums ``V`` (K x (n-1)) and half-block differences ``Vtilde`` ((K-1) x (n/2-1)).

    Row ``j`` / ``q - 1`` and column ``k - 1`` hold ``V[j, k]`` / ``Vtilde[q, k]``;
    cells past the valid range of a row are zero.
    """

    v_matrix: np.ndarray
    vtilde_matrix: np.ndarray


@dataclass(frozen=True)
class KmtConstruction:
    """Every quantity of one construction, standardized.

    ``u_matrix`` has the layout of ``DyadicSums.v_matrix`` and ``u_tilde`` the
    layout of ``DyadicSums.vtilde_matrix``; ``first_increment`` is N̄_1.
    """

    first_increment: float
    u_matrix: np.ndarray
    u_tilde: np.ndarray
    increments: DyadicIncrements


@dataclass(frozen=True)
class PairedNoise:
    """Poisson path ``N(k Delta)`` and drifted Wiener path ``W(k Delta)`` for one channel."""

    delta: float
    poisson_path: np.ndarray
    wiener_path: np.ndarray
    channel: str = ""

    @property
    def n(self) -> int:
        return self.poisson_path.size - 1

    @property
    def horizon(self) -> float:
        return self.n * self.delta

    def compensated(self) -> tuple[np.ndarray, np.ndarray]:
        """``(N(t) - t, W(t) - t)`` on the grid."""
        t = np.arange(self.n + 1) * self.delta
        return self.poisson_path - t, self.wiener_path - t


# ========== Quantile tables ==========


def _poisson_table_size(mean: float) -> int:
    return int(mean + 12.0 * math.sqrt(mean) + 12.0) + 1


@lru_cache(maxsize=512)
def _poisson_cdf_table(mean: float, size: int) -> np.ndarray:
    """``P(count <= c)`` for ``c = 0 .. size - 1`` by log-space accumulation."""
    log_pmf = stats.poisson.logpmf(np.arange(size), mean)
    cdf = np.minimum(np.exp(np.logaddexp.accumulate(log_pmf)), 1.0)
    cdf.flags.writeable = False
    return cdf


@lru_cache(maxsize=8192)
def _binomial_cdf_table(m: int) -> np.ndarray:
    """``P(A <= a)`` for ``A ~ Binomial(m, 1/2)``, ``a = 0 .. m``."""
    log_pmf = stats.binom.logpmf(np.arange(m + 1), m, 0.5)
    cdf = np.minimum(np.exp(np.logaddexp.accumulate(log_pmf)), 1.0)
    cdf[-1] = 1.0
    cdf.flags.writeable = False
    return cdf


def _level_mean(level: int, delta: float) -> float:
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    return float(2**level) * delta


def _poisson_quantile_counts(level: int, delta: float, t: np.ndarray) -> np.ndarray:
    """Smallest count ``c`` with ``P(count <= c) > t`` for Poisson(2**level Delta)."""
    mean = _level_mean(level, delta)
    size = _poisson_table_size(mean)
    while True:
        cdf = _poisson_cdf_table(mean, size)
        index = np.searchsorted(cdf, t, side="right")
        if np.all(index < size):
            return index.astype(np.int64)
        size *= 2


def _binomial_split_counts(t: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Smallest ``a`` with ``P(A <= a) > t`` for ``A ~ Binomial(total, 1/2)``, elementwise."""
    result = np.empty(totals.shape, dtype=np.int64)
    order = np.argsort(totals, kind="stable")
    values, starts = np.unique(totals[order], return_index=True)
    ends = np.append(starts[1:], totals.size)
    for total, start, end in zip(values, starts, ends):
        cells = order[start:end]
        result[cells] = np.searchsorted(_binomial_cdf_table(int(total)), t[cells], side="right")
    return result


def _conditioning_count(level: int, delta: float, y: float) -> int:
    raw = _snap(math.sqrt(delta) * y + _level_mean(level, delta))
    if raw < 0 or raw != math.floor(raw):
        raise LatticeError(
            f"conditioning value y={y!r} is off the lattice at level {level}, Delta={delta}: "
            f"sqrt(Delta) * y + 2**level * Delta = {raw!r} is not a non-negative integer"
        )
    return int(raw)


def _check_probability(t: float) -> None:
    if not 0.0 < t < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {t!r}")


# ========== Scalar transforms ==========


def poisson_cdf_standardized(level: int, delta: float, x: float) -> float:
    """``F_j(x) = P(U_j < x)`` for a standardized Poisson(2**j Delta) count."""
    mean = _level_mean(level, delta)
    if math.isnan(x):
        raise ValueError("x must not be NaN")
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    threshold = _snap(math.sqrt(delta) * x + mean)
    largest = math.ceil(threshold) - 1
    if largest < 0:
        return 0.0
    size = _poisson_table_size(mean)
    if largest >= size:
        return float(stats.poisson.cdf(largest, mean))
    return float(_poisson_cdf_table(mean, size)[largest])


def quantile_G(level: int, delta: float, t: float) -> float:
    """``G_j(t) = sup{x : F_j(x) <= t}`` as a standardized lattice point."""
    _check_probability(t)
    count = _poisson_quantile_counts(level, delta, np.array([t]))[0]
    return (count - _level_mean(level, delta)) / math.sqrt(delta)


def conditional_cdf(level: int, delta: float, x: float, y: float) -> float:
    """``P(A - B < sqrt(Delta) x | A + B = m)`` with ``m = sqrt(Delta) y + 2**q Delta``.

    Raises:
        LatticeError: If ``m`` is not a non-negative integer
    """
    m = _conditioning_count(level, delta, y)
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    largest = math.ceil(_snap((math.sqrt(delta) * x + m) / 2.0)) - 1
    if largest < 0:
        return 0.0
    if largest >= m:
        return 1.0
    return float(_binomial_cdf_table(m)[largest])


def conditional_quantile_G(level: int, delta: float, t: float, y: float) -> float:
    """``G_q(t | y)``: standardized ``2a - m`` for the smallest ``a`` with ``P(A <= a) > t``."""
    _check_probability(t)
    m = _conditioning_count(level, delta, y)
    a = int(np.searchsorted(_binomial_cdf_table(m), t, side="right"))
    return (2 * a - m) / math.sqrt(delta)


# ========== Construction ==========


def _level_sums(values: np.ndarray, level: int) -> np.ndarray:
    """Sums over consecutive blocks of ``2**level`` values: ``V[level, k]`` for k = 0, 1, ..."""
    return values.reshape(-1, 2**level).sum(axis=1)


def build_dyadic_sums(increments: DyadicIncrements) -> DyadicSums:
    n, levels = increments.n, increments.levels
    v_matrix = np.zeros((levels, n - 1))
    for j in range(levels):
        sums = _level_sums(increments.values, j)
        v_matrix[j, : sums.size - 1] = sums[1:]
    vtilde = np.zeros((levels - 1, n // 2 - 1))
    for q in range(1, levels):
        sums = _level_sums(increments.values, q - 1)
        diff = sums[2::2] - sums[3::2]
        vtilde[q - 1, : diff.size] = diff
    return DyadicSums(v_matrix=v_matrix, vtilde_matrix=vtilde)


def fill_schedule(levels: int) -> list[range]:
    """Column blocks (1-based) in the order the U matrix is filled: 1, 2-3, 4-7, ..."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    return [range(2**p, 2 ** (p + 1)) for p in range(levels)]


def kmt_construct(normals: DyadicIncrements) -> KmtConstruction:
    """Run the full construction and keep every intermediate matrix."""
    values, delta = normals.values, normals.delta
    n, levels = normals.n, normals.levels
    scale = math.sqrt(delta)

    first = int(_poisson_quantile_counts(0, delta, special.ndtr(values[:1]))[0])
    u_counts: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * levels
    splits: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * levels
    parent: np.ndarray | None = None
    for j in range(levels - 1, -1, -1):
        sums = _level_sums(values, j)
        top = _poisson_quantile_counts(j, delta, special.ndtr(sums[1:2] / 2 ** (j / 2)))
        if parent is None:
            level = top
        else:
            q = j + 1
            t = special.ndtr((sums[2::2] - sums[3::2]) / 2 ** (q / 2))
            left = _binomial_split_counts(t, parent)
            level = np.empty(2 * parent.size + 1, dtype=np.int64)
            level[0] = top[0]
            level[1::2] = left
            level[2::2] = parent - left
            splits[q] = 2 * left - parent
        u_counts[j] = level
        parent = level

    counts = np.concatenate([[first], u_counts[0]])
    if np.any(counts < 0):
        raise LatticeError("KMT construction produced a negative count")

    u_matrix = np.zeros((levels, n - 1))
    for j, level in enumerate(u_counts):
        u_matrix[j, : level.size] = (level - _level_mean(j, delta)) / scale
    u_tilde = np.zeros((levels - 1, n // 2 - 1))
    for q in range(1, levels):
        u_tilde[q - 1, : splits[q].size] = splits[q] / scale

    increments = DyadicIncrements(delta, (counts - delta) / scale)
    return KmtConstruction(
        first_increment=(first - delta) / scale,
        u_matrix=u_matrix,
        u_tilde=u_tilde,
        increments=increments,
    )


def kmt_transform(normals: DyadicIncrements) -> DyadicIncrements:
    """Standardized Poisson increments coupled to ``normals``.

    Raises:
        LatticeError: If the input length is not a power of two
    """
    return kmt_construct(normals).increments


def assemble_paired_paths(
    normals: DyadicIncrements, poissons: DyadicIncrements, channel: str = ""
) -> PairedNoise:
    """Cumulate both increment sequences into paths anchored at 0.

    ``N(k Delta) = sum_{i<=k} (sqrt(Delta) N_i + Delta)`` and likewise for W.

    Raises:
        LatticeError: On mismatched lengths or steps, or off-lattice Poisson values
    """
    if normals.n != poissons.n or not math.isclose(normals.delta, poissons.delta, rel_tol=1e-12):
        raise LatticeError(
            f"paired increments disagree: n={normals.n}/{poissons.n}, Delta={normals.delta}/{poissons.delta}"
        )
    counts = poissons.counts()
    poisson_path = np.concatenate([[0.0], np.cumsum(counts, dtype=np.int64).astype(float)])
    wiener_steps = math.sqrt(normals.delta) * normals.values + normals.delta
    wiener_path = np.concatenate([[0.0], np.cumsum(wiener_steps)])
    return PairedNoise(normals.delta, poisson_path, wiener_path, channel)
