"""Vector and matrix primitives used across the pipeline.

Cosine geometry, 2-D Gaussian blur, nearest-rank percentiles, symmetric
eigen-decomposition with a deterministic ordering/sign convention, and
maximum-weight assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import InvalidInputError, NumericError, as_float_vector

# Norms below this are treated as zero vectors (no meaningful direction).
ZERO_NORM_TOL = 1e-12


def l2_normalize(v) -> np.ndarray:
    """Return v / ||v||_2. Raises InvalidInputError for (near-)zero vectors."""
    v = as_float_vector(v)
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM_TOL:
        raise InvalidInputError("cannot normalize a zero vector")
    return v / norm


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between a and b, clamped to [-1, 1]."""
    a = as_float_vector(a)
    b = as_float_vector(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_TOL or nb < ZERO_NORM_TOL:
        raise InvalidInputError("cosine similarity undefined for zero vectors")
    cos = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, cos))


def cosine_distance(a, b) -> float:
    """d(a, b) = (1 - cos(a, b)) / 2, in [0, 1]."""
    return (1.0 - cosine_similarity(a, b)) / 2.0


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*sigma)."""
    if not math.isfinite(sigma) or sigma < 0:
        raise InvalidInputError(f"sigma must be finite and >= 0, got {sigma}")
    if sigma == 0:
        return np.array([1.0])
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def gaussian_blur(m, sigma: float) -> np.ndarray:
    """2-D convolution with a truncated, normalized Gaussian kernel.

    Kernel radius is ceil(3*sigma) in index units; borders are handled by
    reflection (edge value repeated), which keeps constant matrices
    constant. sigma = 0 is the identity.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    w = gaussian_kernel_1d(sigma)
    if w.size == 1:
        return m.copy()
    out = _convolve_axis(m, w, axis=0)
    return _convolve_axis(out, w, axis=1)


def _convolve_axis(m: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = (taps.size - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(m, pad, mode="symmetric")
    out = np.zeros_like(m)
    for t, weight in enumerate(taps):
        index = [slice(None), slice(None)]
        index[axis] = slice(t, t + m.shape[axis])
        out += weight * padded[tuple(index)]
    return out


def nearest_rank_index(p: float, n: int) -> int:
    """Index of the nearest-rank p-percentile in a sorted length-n array."""
    if not math.isfinite(p) or not (0.0 <= p <= 100.0):
        raise InvalidInputError(f"percentile must lie in [0, 100], got {p}")
    if n < 1:
        raise InvalidInputError("percentile of an empty collection")
    return min(n - 1, max(0, math.ceil(p / 100.0 * n) - 1))


def nearest_rank_percentile(row, p: float) -> float:
    """Nearest-rank percentile: sorted[ceil(p/100 * n) - 1], no interpolation."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise InvalidInputError("percentile requires a non-empty 1-D vector")
    ordered = np.sort(row)
    return float(ordered[nearest_rank_index(p, row.size)])


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues sorted descending; column j of `vectors` pairs with values[j].

    Sign convention: in each eigenvector, the entry of largest magnitude
    (first such index on ties) is non-negative.
    """

    values: np.ndarray
    vectors: np.ndarray


# Inputs are required to be symmetric up to this absolute tolerance.
SYMMETRY_TOL = 1e-10


def eigh(m) -> EigenDecomposition:
    """Eigen-decomposition of a symmetric matrix with deterministic output.

    Eigenvalues come back sorted descending (stable on ties) with unit-norm,
    sign-fixed eigenvectors. Raises InvalidInputError if the input is not
    symmetric within 1e-10, NumericError if the solver fails to converge.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise InvalidInputError(f"matrix is asymmetric beyond tolerance ({asym:.3e})")
    sym = 0.5 * (m + m.T)
    try:
        values, vectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigen-decomposition failed: {exc}") from exc
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        lead = int(np.argmax(np.abs(column)))
        if column[lead] < 0:
            vectors[:, j] = -column
    return EigenDecomposition(values=values, vectors=vectors)


def optimal_assignment(cost, maximize: bool = False) -> list[tuple[int, int]]:
    """Optimal one-to-one assignment of size min(r, c) on an r x c matrix.

    Returns (row, col) pairs minimizing total cost, or maximizing total
    weight when `maximize` is set.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("assignment matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost, maximize=maximize)
    return list(zip(rows.tolist(), cols.tolist()))
