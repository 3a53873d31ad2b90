"""Diffusion kernel on a graph and the kernel-space geometry built on it.

The kernel matrix is assembled from the Laplacian eigendecomposition (spectral
sum with weights exp(-beta * lambda_k)), which is unconditionally positive
semi-definite -- unlike general-purpose matrix exponentials at large beta.
All feature-space distances go through the kernel trick; the explicit
eigencoordinate embedding is kept as a testing oracle.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, InputFormatError
from .spectral import EigenDecomposition, eig_sym

__all__ = [
    "DiffusionKernel",
    "KernelPcaResult",
    "diffusion_kernel",
    "explicit_feature_map",
    "feature_inner",
    "kernel_distance_sq",
    "prototype_distance_sq",
    "kernel_pca",
    "save_kernel",
    "load_kernel",
]

#: Beta band studied in practice; values outside trigger a warning only.
BETA_COMFORT_RANGE = (0.01, 0.05)

#: Distances this far below zero are treated as roundoff and clamped.
CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class DiffusionKernel:
    """exp(-beta * L) with its beta and a link to the source decomposition."""

    beta: float
    matrix: np.ndarray
    source_decomp_id: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class KernelPcaResult:
    """Top principal directions of the mapped vertices.

    ``coefficients`` rows express each unit-norm principal direction as a
    linear combination of the (uncentered) mapped vertices; ``projections``
    columns are the vertex coordinates along each direction.
    """

    coefficients: np.ndarray  # (num_components, n)
    variances: np.ndarray  # (num_components,)
    projections: np.ndarray  # (n, num_components)


def diffusion_kernel(decomp: EigenDecomposition, beta: float) -> DiffusionKernel:
    """Assemble exp(-beta * L) from the spectral sum."""
    if beta < 0:
        raise AnalysisError(f"beta must be nonnegative, got {beta}")
    if beta > 0 and not BETA_COMFORT_RANGE[0] <= beta <= BETA_COMFORT_RANGE[1]:
        warnings.warn(
            f"beta={beta} is outside the usual band {BETA_COMFORT_RANGE}",
            stacklevel=2,
        )
    n = decomp.n
    scale = max(1.0, float(np.max(np.abs(decomp.values), initial=0.0)))
    if decomp.residual_bound > 1e-8 * scale:
        raise AnalysisError(
            f"decomposition residual {decomp.residual_bound} too large for kernel assembly"
        )
    weights = np.exp(-beta * decomp.values)
    mat = (decomp.vectors * weights) @ decomp.vectors.T
    mat = (mat + mat.T) / 2.0
    return DiffusionKernel(beta=float(beta), matrix=mat, source_decomp_id=decomp.decomp_id)


def explicit_feature_map(decomp: EigenDecomposition, beta: float) -> np.ndarray:
    """Row i = eigencoordinates of vertex i; inner products use exp(-beta*lambda) weights.

    Testing oracle only: the weighted inner product of rows i and j equals the
    kernel entry (i, j).
    """
    return decomp.vectors.copy()


def feature_inner(
    decomp: EigenDecomposition, beta: float, z: np.ndarray, zp: np.ndarray
) -> float:
    """Weighted inner product matching the explicit feature map."""
    w = np.exp(-beta * decomp.values)
    return float(np.sum(w * np.asarray(z) * np.asarray(zp)))


def _clamp(value: float) -> float:
    if value < -CLAMP_TOL:
        raise AnalysisError(f"negative squared distance {value}: kernel is not PSD")
    return max(value, 0.0)


def kernel_distance_sq(kernel: DiffusionKernel, i: int, gamma: np.ndarray) -> float:
    """Squared feature-space distance from vertex i to the point sum_j gamma_j phi(x_j)."""
    k = kernel.matrix
    gamma = np.asarray(gamma, dtype=float)
    kg = k @ gamma
    return _clamp(float(k[i, i] + gamma @ kg - 2.0 * kg[i]))


def prototype_distance_sq(
    kernel: DiffusionKernel, gamma_a: np.ndarray, gamma_b: np.ndarray
) -> float:
    """Squared feature-space distance between two coefficient-vector points."""
    diff = np.asarray(gamma_a, dtype=float) - np.asarray(gamma_b, dtype=float)
    return _clamp(float(diff @ kernel.matrix @ diff))


def kernel_pca(kernel: DiffusionKernel, num_components: int = 2) -> KernelPcaResult:
    """PCA of the mapped vertices through the double-centered kernel.

    Components are scaled so each principal direction has unit feature-space
    norm; the projection of vertex i on component c is then (Kc alpha_c)_i.
    """
    n = kernel.n
    if n < 2:
        raise AnalysisError("kernel PCA needs at least 2 vertices")
    if not 1 <= num_components <= n - 1:
        raise AnalysisError(
            f"num_components must be in [1, n-1]={n - 1}, got {num_components}"
        )
    k = kernel.matrix
    row_mean = k.mean(axis=0)
    grand = k.mean()
    kc = k - row_mean[None, :] - row_mean[:, None] + grand
    kc = (kc + kc.T) / 2.0
    decomp = eig_sym(kc)
    order = np.argsort(decomp.values)[::-1][:num_components]
    if decomp.values[order[0]] < 1e-12:
        raise AnalysisError("degenerate kernel: top principal variance below 1e-12")

    coeffs = np.zeros((num_components, n))
    variances = np.zeros(num_components)
    projections = np.zeros((n, num_components))
    for c, col in enumerate(order):
        mu = float(decomp.values[col])
        alpha = decomp.vectors[:, col]
        if mu > 1e-12:
            alpha_scaled = alpha / np.sqrt(mu)  # unit feature-space norm
            projections[:, c] = kc @ alpha_scaled
        else:
            alpha_scaled = np.zeros(n)
        variances[c] = max(mu, 0.0) / n
        # Express the centered direction over the uncentered mapped vertices.
        coeffs[c] = alpha_scaled - alpha_scaled.mean()
    return KernelPcaResult(coefficients=coeffs, variances=variances, projections=projections)


# ---------------------------------------------------------------------------
# Cache file
# ---------------------------------------------------------------------------

_MAGIC = b"DKRN"
_VERSION = 1
_HEADER = struct.Struct("<4sIId")


def save_kernel(kernel: DiffusionKernel, path) -> None:
    """Binary cache: magic, version u32, n u32, beta f64, row-major f64 LE entries."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, kernel.n, kernel.beta))
        fh.write(np.ascontiguousarray(kernel.matrix, dtype="<f8").tobytes())


def load_kernel(path) -> DiffusionKernel:
    """Load a cached kernel and re-validate its row sums."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InputFormatError(f"{path}: truncated kernel header")
        magic, version, n, beta = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise InputFormatError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise InputFormatError(f"{path}: unsupported version {version}")
        data = fh.read()
    expected = n * n * 8
    if len(data) != expected:
        raise InputFormatError(f"{path}: expected {expected} matrix bytes, got {len(data)}")
    mat = np.frombuffer(data, dtype="<f8").astype(float).reshape(n, n)
    if float(np.max(np.abs(mat.sum(axis=1) - 1.0), initial=0.0)) > 1e-10:
        raise InputFormatError(f"{path}: kernel row sums deviate from 1")
    return DiffusionKernel(beta=beta, matrix=mat, source_decomp_id="cache")
