"""Clustering algorithms over segment embeddings.

Offline: spherical k-means (with an elbow criterion for the cluster
count) and spectral clustering on a refined cosine-affinity matrix (with
an eigen-gap criterion). Online: a naive threshold-based centroid
clusterer behind a pluggable one-in/one-out interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .core import (
    AffinityMatrix,
    ClusteringResult,
    DegenerateAffinityError,
    InvalidInputError,
    as_float_vector,
)
from .numerics import (
    ZERO_NORM_TOL,
    EigenDecomposition,
    eigh,
    gaussian_blur,
    l2_normalize,
    nearest_rank_index,
)

DEFAULT_MAX_CLUSTERS = 8


@dataclass(frozen=True)
class SpectralParams:
    """Knobs of the spectral pipeline. Defaults are CLI-exposed, not baked in."""

    sigma: float = 1.0
    p_percentile: float = 95.0
    soft_multiplier: float = 0.01
    min_clusters: int = 2
    max_clusters: int = DEFAULT_MAX_CLUSTERS
    eig_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise InvalidInputError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (0.0 < self.p_percentile < 100.0):
            raise InvalidInputError(
                f"p_percentile must lie in (0, 100), got {self.p_percentile}"
            )
        if not math.isfinite(self.soft_multiplier):
            raise InvalidInputError("soft_multiplier must be finite")
        if self.min_clusters < 1:
            raise InvalidInputError(f"min_clusters must be >= 1, got {self.min_clusters}")
        if self.max_clusters < self.min_clusters:
            raise InvalidInputError("max_clusters must be >= min_clusters")
        if not (self.eig_floor > 0):
            raise InvalidInputError("eig_floor must be positive")


@dataclass(frozen=True)
class KMeansParams:
    """Spherical k-means settings; k=None means estimate it with the elbow."""

    k: int | None = None
    max_iters: int = 300
    tol: float = 1e-6
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not (self.tol >= 0):
            raise InvalidInputError("tol must be >= 0")
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")


def _as_matrix(embeddings) -> np.ndarray:
    """Stack embeddings (raw vectors or objects with .embedding) into (n, d)."""
    if isinstance(embeddings, np.ndarray) and embeddings.ndim == 2:
        x = np.array(embeddings, dtype=np.float64)
        if x.shape[0] == 0 or x.shape[1] == 0:
            raise InvalidInputError("empty embedding matrix")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("embeddings contain non-finite entries")
        return x
    rows = [as_float_vector(getattr(e, "embedding", e)) for e in embeddings]
    if not rows:
        raise InvalidInputError("no embeddings given")
    dim = rows[0].size
    if any(r.size != dim for r in rows):
        raise InvalidInputError("embeddings must share one dimension")
    return np.stack(rows)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms < ZERO_NORM_TOL):
        raise InvalidInputError("zero-norm embedding has no direction")
    return x / norms[:, None]


def build_affinity(embeddings) -> AffinityMatrix:
    """Pairwise cosine similarities; each diagonal entry takes its row's max.

    Raw cosines are kept in [-1, 1] (no shift); thresholding and
    normalization downstream handle the sign.
    """
    x = _as_matrix(embeddings)
    if x.shape[0] < 2:
        raise InvalidInputError("affinity needs at least 2 embeddings")
    u = _unit_rows(x)
    a = np.clip(u @ u.T, -1.0, 1.0)
    np.fill_diagonal(a, -np.inf)
    np.fill_diagonal(a, a.max(axis=1))
    return AffinityMatrix(a)


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    return m


def refine_threshold(m, p: float, soft_multiplier: float) -> np.ndarray:
    """Per row, scale entries strictly below the row's nearest-rank p-percentile.

    soft_multiplier = 0 reproduces hard zeroing; entries at or above the
    percentile pass through unchanged.
    """
    m = _as_square(m)
    if not (0.0 < p < 100.0):
        raise InvalidInputError(f"p must lie in (0, 100), got {p}")
    if not math.isfinite(soft_multiplier):
        raise InvalidInputError("soft_multiplier must be finite")
    cut = np.sort(m, axis=1)[:, nearest_rank_index(p, m.shape[1])]
    return np.where(m < cut[:, None], m * soft_multiplier, m)


def refine_symmetrize(m) -> np.ndarray:
    """Elementwise Y_ij = max(X_ij, X_ji)."""
    m = _as_square(m)
    return np.maximum(m, m.T)


def refine_diffuse(m) -> np.ndarray:
    """Y = X Xᵀ (Gram form: always symmetric PSD)."""
    m = _as_square(m)
    return m @ m.T


def refine_row_max_normalize(m) -> np.ndarray:
    """Divide each row by its own maximum, making every row max exactly 1."""
    m = _as_square(m)
    row_max = m.max(axis=1)
    if np.any(row_max <= 0):
        bad = int(np.argmax(row_max <= 0))
        raise DegenerateAffinityError(
            f"row {bad} has max {row_max[bad]:.3e} <= 0; cannot normalize"
        )
    return m / row_max[:, None]


def refine_chain(
    a: AffinityMatrix, params: SpectralParams
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Blur, threshold, symmetrize, diffuse, row-max-normalize, in that order.

    Returns the final matrix plus a snapshot of the matrix after each of
    the five stages (for heatmap dumps).
    """
    stages: list[np.ndarray] = []
    m = gaussian_blur(a.entries, params.sigma)
    stages.append(m)
    m = refine_threshold(m, params.p_percentile, params.soft_multiplier)
    stages.append(m)
    m = refine_symmetrize(m)
    stages.append(m)
    m = refine_diffuse(m)
    stages.append(m)
    m = refine_row_max_normalize(m)
    stages.append(m)
    return m, stages


def estimate_k_eigengap(
    values,
    min_clusters: int,
    max_clusters: int,
    eig_floor: float = 1e-10,
) -> int:
    """k maximizing values[k-1] / max(values[k], eig_floor) over the allowed range.

    `values` must be sorted descending. The search range is
    [min_clusters, min(max_clusters, n-1)]; ties break toward smaller k.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise InvalidInputError("need at least 2 eigenvalues")
    if np.any(np.diff(values) > 1e-10):
        raise InvalidInputError("eigenvalues must be sorted descending")
    if not (eig_floor > 0):
        raise InvalidInputError("eig_floor must be positive")
    lo = min_clusters
    hi = min(max_clusters, values.size - 1)
    if lo < 1 or lo > hi:
        raise InvalidInputError(
            f"empty cluster-count search range [{lo}, {hi}]"
        )
    best_k = lo
    best_ratio = -math.inf
    for k in range(lo, hi + 1):
        ratio = values[k - 1] / max(values[k], eig_floor)
        if ratio > best_ratio:
            best_k, best_ratio = k, ratio
    return best_k


def spectral_embed(decomp: EigenDecomposition, k: int) -> np.ndarray:
    """Rows of the top-k eigenvectors, each row L2-normalized.

    Row i is the new embedding of segment i. Zero rows (possible when a
    segment has no weight in the top-k subspace) are replaced by the unit
    vector along the first coordinate.
    """
    n = decomp.vectors.shape[0]
    if not (1 <= k <= n):
        raise InvalidInputError(f"k must lie in [1, {n}], got {k}")
    rows = np.array(decomp.vectors[:, :k])
    norms = np.linalg.norm(rows, axis=1)
    zero = norms < ZERO_NORM_TOL
    rows[zero] = 0.0
    rows[zero, 0] = 1.0
    norms[zero] = 1.0
    return rows / norms[:, None]


def _cos_dist_sq(u: np.ndarray, center: np.ndarray) -> np.ndarray:
    d = (1.0 - np.clip(u @ center, -1.0, 1.0)) / 2.0
    return d * d


def _kmeans_pp(u: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: sample proportional to squared cosine distance."""
    n = u.shape[0]
    chosen = [int(rng.integers(n))]
    weights = _cos_dist_sq(u, u[chosen[0]])
    for _ in range(1, k):
        total = float(weights.sum())
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=weights / total))
        chosen.append(idx)
        weights = np.minimum(weights, _cos_dist_sq(u, u[idx]))
    return u[chosen].copy()


def _objective(u: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    sims = np.einsum("ij,ij->i", u, centroids[labels])
    d = (1.0 - np.clip(sims, -1.0, 1.0)) / 2.0
    return float(np.sum(d * d))


def _repair_empty(
    u: np.ndarray, centroids: np.ndarray, labels: np.ndarray, k: int
) -> np.ndarray:
    """Move the point farthest from its centroid into each empty cluster."""
    counts = np.bincount(labels, minlength=k)
    for c in range(k):
        while counts[c] == 0:
            sims = np.einsum("ij,ij->i", u, centroids[labels])
            dist = (1.0 - np.clip(sims, -1.0, 1.0)) / 2.0
            # only clusters with >= 2 members may donate a point
            dist[counts[labels] < 2] = -np.inf
            i = int(np.argmax(dist))
            counts[labels[i]] -= 1
            labels[i] = c
            counts[c] += 1
            centroids[c] = u[i]
    return labels


def _lloyd(
    u: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """One seeded k-means run. Returns (labels, centroids, objective, history).

    The recorded objective is evaluated after each centroid update; an
    update that would increase it is rejected, so the history is
    non-increasing and the loop always terminates.
    """
    centroids = _kmeans_pp(u, k, rng)
    labels = None
    prev_obj = math.inf
    history: list[float] = []
    for _ in range(max_iters):
        sims = u @ centroids.T
        new_labels = np.argmax(sims, axis=1)
        # repair works on a copy: the accepted state must survive a rejected update
        new_centroids = centroids.copy()
        new_labels = _repair_empty(u, new_centroids, new_labels, k)
        for c in range(k):
            s = u[new_labels == c].sum(axis=0)
            norm = np.linalg.norm(s)
            if norm >= ZERO_NORM_TOL:
                new_centroids[c] = s / norm
        obj = _objective(u, new_centroids, new_labels)
        if obj > prev_obj:
            break
        unchanged = labels is not None and np.array_equal(labels, new_labels)
        labels, centroids = new_labels, new_centroids
        history.append(obj)
        improved = prev_obj - obj
        prev_obj = obj
        if unchanged or improved < tol:
            break
    return labels, centroids, prev_obj, history


def kmeans(embeddings, params: KMeansParams) -> ClusteringResult:
    """Spherical k-means: cosine assignment, normalized-mean centroids.

    Inputs are L2-normalized first. Runs `restarts` seeded k-means++
    initializations and keeps the run with the lowest objective
    sum(d(x_i, c_{a(i)})^2), d being the halved cosine distance.
    """
    u = _unit_rows(_as_matrix(embeddings))
    n = u.shape[0]
    if params.k is not None:
        k = params.k
    elif n == 1:
        k = 1
    else:
        k = estimate_k_elbow(u, min(DEFAULT_MAX_CLUSTERS, n), params)
    if k > n:
        raise InvalidInputError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(params.seed)
    best_labels = None
    best_obj = math.inf
    for _ in range(params.restarts):
        labels, _, obj, _ = _lloyd(u, k, rng, params.max_iters, params.tol)
        if obj < best_obj:
            best_labels, best_obj = labels, obj
    return ClusteringResult(labels=best_labels, k=k)


def mscd_table(embeddings, max_clusters: int, params: KMeansParams) -> dict[int, float]:
    """Mean squared cosine distance to the assigned centroid, for k = 1..max.

    Every k is clustered with the same seed so the table is reproducible
    and directly comparable across k.
    """
    u = _unit_rows(_as_matrix(embeddings))
    n = u.shape[0]
    if not (1 <= max_clusters <= n):
        raise InvalidInputError(f"max_clusters must lie in [1, {n}], got {max_clusters}")
    table: dict[int, float] = {}
    for k in range(1, max_clusters + 1):
        rng = np.random.default_rng(params.seed)
        best_obj = math.inf
        for _ in range(params.restarts):
            _, _, obj, _ = _lloyd(u, k, rng, params.max_iters, params.tol)
            best_obj = min(best_obj, obj)
        table[k] = best_obj / n
    return table


def estimate_k_elbow(
    embeddings,
    max_clusters: int,
    params: KMeansParams,
    min_clusters: int = 1,
) -> int:
    """k with the largest drop MSCD(k-1) - MSCD(k), searched from k >= 2.

    The search range is [max(2, min_clusters), max_clusters]; ties break
    toward smaller k.
    """
    table = mscd_table(embeddings, max_clusters, params)
    lo = max(2, min_clusters)
    if lo > max_clusters:
        raise InvalidInputError(f"empty cluster-count search range [{lo}, {max_clusters}]")
    best_k = lo
    best_drop = -math.inf
    for k in range(lo, max_clusters + 1):
        drop = table[k - 1] - table[k]
        if drop > best_drop:
            best_k, best_drop = k, drop
    return best_k


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Clustering plus the diagnostics needed to inspect or visualize the run."""

    clustering: ClusteringResult
    k: int
    eigenvalues: np.ndarray
    affinity: np.ndarray
    stages: list[np.ndarray]


def spectral_cluster(embeddings, params: SpectralParams) -> SpectralResult:
    """Affinity construction, refinement, eigen-gap k, re-embedding, k-means.

    The refined matrix is symmetrized as (M + Mᵀ)/2 before
    eigen-decomposition (row-max normalization breaks symmetry). Cluster
    bounds are clamped to the segment count; when n is too small to leave
    an eigen-gap search range, k is forced to the clamped minimum.
    """
    x = _as_matrix(embeddings)
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError("spectral clustering needs at least 2 segments")
    min_c = min(params.min_clusters, n)
    max_c = min(params.max_clusters, n)
    a = build_affinity(x)
    refined, stages = refine_chain(a, params)
    decomp = eigh(0.5 * (refined + refined.T))
    if min_c > min(max_c, n - 1):
        k = min_c
    else:
        k = estimate_k_eigengap(decomp.values, min_c, max_c, params.eig_floor)
    emb = spectral_embed(decomp, k)
    clustering = kmeans(emb, KMeansParams(k=k, seed=params.seed))
    return SpectralResult(
        clustering=clustering,
        k=k,
        eigenvalues=decomp.values,
        affinity=a.entries,
        stages=stages,
    )


class OnlineClusterer(Protocol):
    """One embedding in, one cluster label out, no lookahead, no revision."""

    def step(self, embedding) -> int: ...


@dataclass
class NaiveOnlineClusterer:
    """Threshold-based streaming clusterer over running centroid sums.

    Each cluster keeps the sum of its L2-normalized members; cosine to the
    sum equals cosine to the mean, so the centroid never needs explicit
    renormalization. A new embedding joins the most similar cluster if
    that similarity reaches the threshold, otherwise it founds a new
    cluster. Labels are final the moment they are emitted.
    """

    threshold: float = 0.5
    _sums: list[np.ndarray] = field(default_factory=list, init=False, repr=False)
    _counts: list[int] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        if not (-1.0 < self.threshold < 1.0):
            raise InvalidInputError(
                f"threshold must lie in (-1, 1), got {self.threshold}"
            )

    def step(self, embedding) -> int:
        unit = l2_normalize(as_float_vector(getattr(embedding, "embedding", embedding)))
        best_label = -1
        best_sim = -math.inf
        for label, s in enumerate(self._sums):
            norm = float(np.linalg.norm(s))
            sim = float(unit @ s) / norm if norm >= ZERO_NORM_TOL else -1.0
            if sim > best_sim:
                best_label, best_sim = label, sim
        if best_label < 0 or best_sim < self.threshold:
            self._sums.append(unit.copy())
            self._counts.append(1)
            return len(self._sums) - 1
        self._sums[best_label] = self._sums[best_label] + unit
        self._counts[best_label] += 1
        return best_label


def run_online(clusterer: OnlineClusterer, embeddings) -> ClusteringResult:
    """Feed embeddings through an online clusterer in order."""
    labels = [clusterer.step(e) for e in embeddings]
    if not labels:
        raise InvalidInputError("no embeddings given")
    return ClusteringResult(labels=np.array(labels), k=max(labels) + 1)
