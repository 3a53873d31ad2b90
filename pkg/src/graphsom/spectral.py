"""Laplacian construction, symmetric eigendecomposition and spectral clustering.

All downstream geometry (community verification, diffusion kernels, relaxed-cut
embeddings) runs off the ``EigenDecomposition`` produced here, so the
decomposition carries a deterministic sign convention and a measured residual
bound.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError
from .graph import WeightedGraph, induced_unweighted

__all__ = [
    "LaplacianMatrix",
    "EigenDecomposition",
    "SpectralEmbedding",
    "laplacian",
    "eig_sym",
    "eigenvalue_group_multiplicity",
    "spectral_embedding",
    "kmeans",
    "spectral_clustering",
    "evaluate_cut",
    "dump_matrix_csv",
]

#: Tolerance for grouping numerically equal eigenvalues, relative to
#: max(1, lambda_max).  Sits well above solver residual and below the spectral
#: gaps of integer-spectrum graphs.
EIGENVALUE_GROUP_RTOL = 1e-8


@dataclass(frozen=True)
class LaplacianMatrix:
    """Dense symmetric Laplacian with its weighted/unweighted provenance."""

    matrix: np.ndarray
    mode: str  # "weighted" | "unweighted"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal, sign-fixed eigenvectors."""

    values: np.ndarray  # shape (n,), ascending
    vectors: np.ndarray  # shape (n, n), column k pairs with values[k]
    residual_bound: float

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def decomp_id(self) -> str:
        h = hashlib.sha1()
        h.update(self.values.tobytes())
        h.update(self.vectors.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SpectralEmbedding:
    """Rows are vertex coordinates on the first p positive-eigenvalue eigenvectors."""

    p: int
    coordinates: np.ndarray  # shape (n, p)


def laplacian(g: WeightedGraph, mode: str = "weighted") -> LaplacianMatrix:
    """Degree-diagonal minus adjacency; ``unweighted`` drops weights first."""
    if mode not in ("weighted", "unweighted"):
        raise AnalysisError(f"unknown Laplacian mode {mode!r}")
    h = induced_unweighted(g) if mode == "unweighted" else g
    w = h.weight_matrix()
    lap = np.diag(w.sum(axis=1)) - w
    return LaplacianMatrix(matrix=lap, mode=mode)


def eig_sym(m: np.ndarray) -> EigenDecomposition:
    """Full decomposition of a symmetric matrix, ascending, sign-normalized.

    Sign convention: the largest-magnitude coordinate of each eigenvector is
    positive (ties resolved to the lowest index), which keeps golden files
    stable across BLAS builds.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise AnalysisError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
        raise AnalysisError("matrix is not symmetric within tolerance")
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise AnalysisError(f"eigendecomposition failed to converge: {exc}") from None
    for k in range(values.shape[0]):
        col = vectors[:, k]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            vectors[:, k] = -col
    residual = float(np.max(np.linalg.norm(m @ vectors - vectors * values, axis=0))) if m.size else 0.0
    return EigenDecomposition(values=values, vectors=vectors, residual_bound=residual)


def eigenvalue_group_multiplicity(decomp: EigenDecomposition, target: float) -> int:
    """Size of the eigenvalue group containing ``target`` under the grouping tolerance."""
    tol = EIGENVALUE_GROUP_RTOL * max(1.0, float(np.max(decomp.values, initial=0.0)))
    return int(np.sum(np.abs(decomp.values - target) <= tol))


def spectral_embedding(decomp: EigenDecomposition, p: int) -> SpectralEmbedding:
    """Map vertex i to the i-th coordinates of the p smallest positive-eigenvalue vectors."""
    n = decomp.n
    if not 1 <= p <= n - 1:
        raise AnalysisError(f"p must be in [1, n-1]={n - 1}, got {p}")
    if n < 2 or decomp.values[1] <= 1e-9:
        raise AnalysisError("graph is disconnected (second eigenvalue is zero)")
    return SpectralEmbedding(p=p, coordinates=decomp.vectors[:, 1:p + 1].copy())


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-9,
    restarts: int = 10,
) -> np.ndarray:
    """Lloyd iterations with seeded random distinct initial centers.

    Runs ``restarts`` independent Lloyd passes (substreams of the seed) and
    keeps the labeling with the lowest objective.  Empty clusters are
    re-seeded from the point farthest from its current center.  Deterministic
    for a fixed seed.  Returns the cluster label of each point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if k > n:
        raise AnalysisError(f"k={k} exceeds number of points {n}")
    if k < 1:
        raise AnalysisError("k must be >= 1")
    rng = np.random.default_rng(seed)
    best_labels: np.ndarray | None = None
    best_obj = np.inf
    for _ in range(max(1, restarts)):
        centers = points[rng.choice(n, size=k, replace=False)].copy()
        labels = np.full(n, -1, dtype=int)
        for _ in range(max_iter):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = np.argmin(d2, axis=1)
            for c in range(k):
                if not np.any(new_labels == c):
                    far = int(np.argmax(d2[np.arange(n), new_labels]))
                    centers[c] = points[far]
                    new_labels[far] = c
            shift = 0.0
            for c in range(k):
                mean = points[new_labels == c].mean(axis=0)
                shift = max(shift, float(np.linalg.norm(mean - centers[c])))
                centers[c] = mean
            converged = bool(np.array_equal(new_labels, labels)) and shift <= tol
            labels = new_labels
            if converged:
                break
        obj = 0.0
        for c in range(k):
            block = points[labels == c]
            obj += float(((block - block.mean(axis=0)) ** 2).sum())
        if obj < best_obj - 1e-15:
            best_obj = obj
            best_labels = labels
    assert best_labels is not None
    return best_labels


def spectral_clustering(g: WeightedGraph, p: int, k: int, seed: int) -> dict[str, int]:
    """Relaxed-cut embedding followed by k-means on the embedded vertices."""
    decomp = eig_sym(laplacian(g, "weighted").matrix)
    emb = spectral_embedding(decomp, p)
    labels = kmeans(emb.coordinates, k, seed)
    return {g.label(i): int(labels[i]) for i in range(g.n)}


def evaluate_cut(g: WeightedGraph, partition: list[set[str]]) -> float:
    """Total cut weight: sum over blocks of the weight leaving the block."""
    seen: set[str] = set()
    for block in partition:
        overlap = seen & set(block)
        if overlap:
            raise AnalysisError(f"partition blocks overlap on {sorted(overlap)}")
        seen |= set(block)
    missing = set(g.vertices) - seen
    if missing:
        raise AnalysisError(f"partition misses vertices {sorted(missing)}")
    total = 0.0
    for block in partition:
        idx = {g.index(lab) for lab in block}
        for i in idx:
            for j, w in g.neighbors(i).items():
                if j not in idx:
                    total += w
    return total


def dump_matrix_csv(m: np.ndarray, path) -> None:
    """Debug dump: row-major CSV with 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(m):
            fh.write(",".join(format(x, ".17g") for x in row))
            fh.write("\n")
