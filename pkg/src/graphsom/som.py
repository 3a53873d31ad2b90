"""Batch kernel self-organizing map with annealing, quality measures and drill-down.

Training alternates a kernel-trick assignment step (each vertex to its closest
prototype) with a representation step (prototype coefficients as row-normalized
neighborhood weights).  The temperature is held until the assignment
stabilizes, then decays geometrically; once the neighborhood influence of even
the closest distinct unit falls below ``final_epsilon`` the neighborhood
collapses to an indicator and the loop finishes as a plain kernel k-means,
whose quantization error is exactly non-increasing.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError
from .graph import WeightedGraph, induced_subgraph
from .kernel import (
    DiffusionKernel,
    diffusion_kernel,
    kernel_pca,
    prototype_distance_sq,
)
from .spectral import eig_sym, laplacian

__all__ = [
    "GridTopology",
    "SomConfig",
    "IterationRecord",
    "SomModel",
    "QualityReport",
    "init_random",
    "init_kernel_pca",
    "assign",
    "assign_all",
    "represent",
    "train",
    "quantization_error",
    "kaski_lagus",
    "q_modularity",
    "u_matrix",
    "hierarchical_som",
]


@dataclass(frozen=True)
class GridTopology:
    """Regular 2-D grid of units; inter-unit distance is Euclidean on integer coords."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise AnalysisError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def units(self) -> int:
        return self.rows * self.cols

    def coords(self) -> np.ndarray:
        r, c = np.divmod(np.arange(self.units), self.cols)
        return np.stack([r, c], axis=1).astype(float)

    def distances(self) -> np.ndarray:
        xy = self.coords()
        diff = xy[:, None, :] - xy[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))

    def neighbors(self, j: int) -> list[int]:
        """4-neighborhood (rook adjacency) unit indices."""
        r, c = divmod(j, self.cols)
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out.append(rr * self.cols + cc)
        return out


@dataclass(frozen=True)
class SomConfig:
    grid: GridTopology
    t0: float | None = None  # default: squared grid diameter
    anneal_ratio: float = 0.9
    final_epsilon: float = 0.01
    max_outer_iterations: int | None = None  # default: 10 * units * n
    init: str = "kernel_pca"  # "kernel_pca" | "random"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t0 is not None and self.t0 <= 0:
            raise AnalysisError(f"t0 must be positive, got {self.t0}")
        if not 0.0 < self.anneal_ratio < 1.0:
            raise AnalysisError(f"anneal_ratio must be in (0,1), got {self.anneal_ratio}")
        if self.init not in ("kernel_pca", "random"):
            raise AnalysisError(f"unknown init {self.init!r}")

    def initial_temperature(self) -> float:
        if self.t0 is not None:
            return self.t0
        d = self.grid.distances()
        diam2 = float(d.max()) ** 2
        return diam2 if diam2 > 0 else 1.0

    def iteration_guard(self, n: int) -> int:
        if self.max_outer_iterations is not None:
            return self.max_outer_iterations
        return max(10 * self.grid.units * n, 100)


@dataclass(frozen=True)
class IterationRecord:
    temperature: float
    changes: int
    phase: str  # "anneal" | "final" | "cycle-break"
    quantization_error: float | None = None


@dataclass(frozen=True)
class SomModel:
    config: SomConfig
    beta: float
    vertex_labels: tuple[str, ...]
    gamma: np.ndarray  # (units, n) prototype coefficients
    assignment: np.ndarray  # (n,) unit index per vertex
    iteration_log: tuple[IterationRecord, ...]
    lineage: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return len(self.vertex_labels)

    def unit_members(self, j: int) -> tuple[str, ...]:
        return tuple(
            lab for lab, a in zip(self.vertex_labels, self.assignment) if a == j
        )

    def unit_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.config.grid.units)


@dataclass(frozen=True)
class QualityReport:
    quantization_error: float
    kaski_lagus: float | None
    kaski_lagus_skip_reason: str | None
    q_modularity: float | None
    q_modularity_skip_reason: str | None
    nonempty_units: int
    unit_sizes: tuple[int, ...]


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def init_random(kernel: DiffusionKernel, grid: GridTopology, seed: int) -> np.ndarray:
    """Each prototype starts at a randomly chosen mapped vertex (one-hot rows)."""
    n = kernel.n
    m = grid.units
    if m > n:
        warnings.warn(f"more units ({m}) than vertices ({n})", stacklevel=2)
    rng = np.random.default_rng(seed)
    picks = rng.choice(n, size=m, replace=m > n)
    gamma = np.zeros((m, n))
    gamma[np.arange(m), picks] = 1.0
    return gamma


def init_kernel_pca(kernel: DiffusionKernel, grid: GridTopology) -> np.ndarray:
    """Regular lattice over the top-2 kernel principal directions.

    The grid dimension with more units is paired with the first (higher
    variance) direction; a singleton dimension sits at the feature-space mean.
    """
    n = kernel.n
    if n < 3:
        raise AnalysisError("kernel PCA initialization needs at least 3 vertices")
    pca = kernel_pca(kernel, num_components=2)

    def axis_positions(count: int, component: int) -> np.ndarray:
        if count == 1:
            return np.zeros(1)
        proj = pca.projections[:, component]
        return np.linspace(float(proj.min()), float(proj.max()), count)

    if grid.cols >= grid.rows:
        col_comp, row_comp = 0, 1
    else:
        col_comp, row_comp = 1, 0
    row_pos = axis_positions(grid.rows, row_comp)
    col_pos = axis_positions(grid.cols, col_comp)

    mean_coeff = np.full(n, 1.0 / n)
    gamma = np.zeros((grid.units, n))
    for j in range(grid.units):
        r, c = divmod(j, grid.cols)
        gamma[j] = (
            mean_coeff
            + row_pos[r] * pca.coefficients[row_comp]
            + col_pos[c] * pca.coefficients[col_comp]
        )
    return gamma


# ---------------------------------------------------------------------------
# Training steps
# ---------------------------------------------------------------------------

def assign_all(kernel: DiffusionKernel, gamma: np.ndarray) -> np.ndarray:
    """Closest unit for every vertex; ties broken by lowest unit index."""
    k = kernel.matrix
    kg = k @ gamma.T  # (n, units)
    quad = np.einsum("ji,ij->j", gamma, kg)  # gamma_j K gamma_j per unit
    cost = quad[None, :] - 2.0 * kg
    return np.argmin(cost, axis=1)


def assign(kernel: DiffusionKernel, gamma: np.ndarray, i: int) -> int:
    """Unit index of the closest prototype for vertex i."""
    return int(assign_all(kernel, gamma)[i])


def represent(
    grid: GridTopology,
    assignment: np.ndarray,
    temperature: float,
    previous_gamma: np.ndarray,
) -> np.ndarray:
    """Row-normalized Gaussian neighborhood weights around each unit.

    A unit whose neighborhood mass underflows keeps its previous coefficients.
    """
    h = grid.distances()  # (units, units)
    influence = np.exp(-(h[:, assignment] ** 2) / temperature)  # (units, n)
    return _normalize_rows(influence, previous_gamma)


def _represent_final(
    grid: GridTopology, assignment: np.ndarray, previous_gamma: np.ndarray
) -> np.ndarray:
    """Indicator neighborhood: each row uniform over its assigned vertices."""
    units = grid.units
    n = assignment.shape[0]
    influence = np.zeros((units, n))
    influence[assignment, np.arange(n)] = 1.0
    return _normalize_rows(influence, previous_gamma)


def _normalize_rows(influence: np.ndarray, previous_gamma: np.ndarray) -> np.ndarray:
    sums = influence.sum(axis=1)
    gamma = previous_gamma.copy()
    alive = sums >= 1e-300
    gamma[alive] = influence[alive] / sums[alive, None]
    return gamma


def train(
    kernel: DiffusionKernel,
    config: SomConfig,
    vertex_labels: tuple[str, ...] | None = None,
    beta: float | None = None,
    lineage: tuple[str, ...] = (),
) -> SomModel:
    """Run the batch kernel SOM to its final stabilized assignment."""
    n = kernel.n
    labels = (
        tuple(vertex_labels)
        if vertex_labels is not None
        else tuple(f"v{i}" for i in range(n))
    )
    if len(labels) != n:
        raise AnalysisError("vertex label count does not match kernel order")
    if config.init == "random":
        gamma = init_random(kernel, config.grid, config.seed)
    else:
        gamma = init_kernel_pca(kernel, config.grid)

    temperature = config.initial_temperature()
    guard = config.iteration_guard(n)
    h_min = 1.0  # smallest nonzero grid distance
    log: list[IterationRecord] = []
    prev_assign: np.ndarray | None = None
    seen_at_temperature: set[bytes] = set()
    final_phase = math.exp(-(h_min ** 2) / temperature) < config.final_epsilon
    iterations = 0

    while True:
        iterations += 1
        if iterations > guard:
            raise AnalysisError(
                f"iteration guard exceeded ({guard}); training did not stabilize"
            )
        f = assign_all(kernel, gamma)
        changes = int(np.sum(f != prev_assign)) if prev_assign is not None else n
        stable = prev_assign is not None and changes == 0

        cycling = False
        if not stable:
            key = f.tobytes()
            if key in seen_at_temperature:
                cycling = True  # revisited assignment at this temperature
            seen_at_temperature.add(key)

        if final_phase:
            gamma = _represent_final(config.grid, f, gamma)
            qe = quantization_error_raw(kernel, gamma, f)
            log.append(
                IterationRecord(
                    temperature=temperature,
                    changes=changes,
                    phase="cycle-break" if cycling else "final",
                    quantization_error=qe,
                )
            )
            if stable or cycling:
                prev_assign = f
                break
        else:
            gamma = represent(config.grid, f, temperature, gamma)
            log.append(
                IterationRecord(
                    temperature=temperature,
                    changes=changes,
                    phase="cycle-break" if cycling else "anneal",
                )
            )
            if stable or cycling:
                temperature *= config.anneal_ratio
                seen_at_temperature = set()
                if math.exp(-(h_min ** 2) / temperature) < config.final_epsilon:
                    final_phase = True
        prev_assign = f

    return SomModel(
        config=config,
        beta=float(beta) if beta is not None else 0.0,
        vertex_labels=labels,
        gamma=gamma,
        assignment=prev_assign,
        iteration_log=tuple(log),
        lineage=tuple(lineage),
    )


# ---------------------------------------------------------------------------
# Quality measures
# ---------------------------------------------------------------------------

def quantization_error_raw(
    kernel: DiffusionKernel, gamma: np.ndarray, assignment: np.ndarray
) -> float:
    k = kernel.matrix
    kg = k @ gamma.T
    quad = np.einsum("ji,ij->j", gamma, kg)
    n = assignment.shape[0]
    diag = np.diag(k)
    vals = diag + quad[assignment] - 2.0 * kg[np.arange(n), assignment]
    return float(np.sum(np.maximum(vals, 0.0)))


def quantization_error(kernel: DiffusionKernel, model: SomModel) -> float:
    """Sum of squared feature-space distances from each vertex to its BMU prototype."""
    return quantization_error_raw(kernel, model.gamma, model.assignment)


def _prototype_edge_lengths(
    kernel: DiffusionKernel, grid: GridTopology, gamma: np.ndarray
) -> dict[tuple[int, int], float]:
    lengths: dict[tuple[int, int], float] = {}
    for j in range(grid.units):
        for u in grid.neighbors(j):
            if j < u:
                d = math.sqrt(prototype_distance_sq(kernel, gamma[j], gamma[u]))
                lengths[(j, u)] = d
    return lengths


def _grid_shortest_path(
    grid: GridTopology,
    lengths: dict[tuple[int, int], float],
    source: int,
) -> np.ndarray:
    """Dijkstra over grid units with prototype-distance edge lengths."""
    dist = np.full(grid.units, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u in grid.neighbors(v):
            key = (v, u) if v < u else (u, v)
            nd = d + lengths[key]
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def kaski_lagus(kernel: DiffusionKernel, model: SomModel) -> float:
    """Topographic quality: BMU distance plus the shortest grid path to the second BMU."""
    grid = model.config.grid
    if grid.units < 2:
        raise AnalysisError("Kaski-Lagus needs at least 2 units (second BMU undefined)")
    gamma = model.gamma
    k = kernel.matrix
    n = model.n
    kg = k @ gamma.T
    quad = np.einsum("ji,ij->j", gamma, kg)
    cost = np.diag(k)[:, None] + quad[None, :] - 2.0 * kg  # squared distances
    cost = np.maximum(cost, 0.0)

    lengths = _prototype_edge_lengths(kernel, grid, gamma)
    path_from: dict[int, np.ndarray] = {}

    total = 0.0
    for i in range(n):
        bmu = int(model.assignment[i])
        # second BMU: argmin over units other than the BMU
        masked = cost[i].copy()
        masked[bmu] = np.inf
        second = int(np.argmin(masked))
        if bmu not in path_from:
            path_from[bmu] = _grid_shortest_path(grid, lengths, bmu)
        total += math.sqrt(cost[i, bmu]) + float(path_from[bmu][second])
    return total / n


def q_modularity(
    g: WeightedGraph, assignment: dict[str, int], weighted: bool = True
) -> float:
    """Newman-style modularity of a vertex clustering, weighted by default."""
    clusters = sorted(set(assignment.values()))
    missing = set(g.vertices) - set(assignment)
    if missing:
        raise AnalysisError(f"assignment misses vertices {sorted(missing)}")
    pos = {c: idx for idx, c in enumerate(clusters)}
    e = np.zeros(len(clusters))  # intra-cluster fraction
    a = np.zeros(len(clusters))  # attached-end fraction
    total = 0.0
    for i, j, w in g.edges():
        val = w if weighted else 1.0
        total += val
        ci = pos[assignment[g.label(i)]]
        cj = pos[assignment[g.label(j)]]
        if ci == cj:
            e[ci] += val
        a[ci] += val / 2.0
        a[cj] += val / 2.0
    if total == 0:
        raise AnalysisError("graph has no edges")
    e /= total
    a /= total
    denom = 1.0 - float(np.sum(a ** 2))
    if abs(denom) < 1e-12:
        raise AnalysisError("q-modularity undefined: sum of squared cluster fractions is 1")
    return float(np.sum(e - a ** 2)) / denom


def u_matrix(kernel: DiffusionKernel, model: SomModel) -> np.ndarray:
    """Per-unit mean feature-space distance to grid-neighbor prototypes."""
    grid = model.config.grid
    out = np.zeros(grid.units)
    for j in range(grid.units):
        ds = [
            math.sqrt(prototype_distance_sq(kernel, model.gamma[j], model.gamma[u]))
            for u in grid.neighbors(j)
        ]
        out[j] = float(np.mean(ds)) if ds else 0.0
    return out


def quality_report(
    g: WeightedGraph, kernel: DiffusionKernel, model: SomModel
) -> QualityReport:
    """Bundle the three quality measures, surfacing undefined cases explicitly."""
    qe = quantization_error(kernel, model)
    kl = None
    kl_reason = None
    try:
        kl = kaski_lagus(kernel, model)
    except AnalysisError as exc:
        kl_reason = str(exc)
    qm = None
    qm_reason = None
    try:
        qm = q_modularity(
            g, {lab: int(u) for lab, u in zip(model.vertex_labels, model.assignment)}
        )
    except AnalysisError as exc:
        qm_reason = str(exc)
    sizes = model.unit_sizes()
    return QualityReport(
        quantization_error=qe,
        kaski_lagus=kl,
        kaski_lagus_skip_reason=kl_reason,
        q_modularity=qm,
        q_modularity_skip_reason=qm_reason,
        nonempty_units=int(np.sum(sizes > 0)),
        unit_sizes=tuple(int(s) for s in sizes),
    )


# ---------------------------------------------------------------------------
# Hierarchical drill-down
# ---------------------------------------------------------------------------

def hierarchical_som(
    g: WeightedGraph,
    parent: SomModel,
    unit: int,
    config: SomConfig,
    beta: float,
) -> tuple[SomModel, WeightedGraph]:
    """Train a fresh map on the subgraph induced by one parent cluster."""
    if not 0 <= unit < parent.config.grid.units:
        raise AnalysisError(f"unit {unit} out of range")
    members = parent.unit_members(unit)
    if not members:
        raise AnalysisError(f"unit {unit} is empty")
    needed = max(3, config.grid.units)
    if len(members) < needed:
        raise AnalysisError(
            f"unit {unit} has {len(members)} vertices; need at least {needed}"
        )
    sub = induced_subgraph(g, members)
    decomp = eig_sym(laplacian(sub, "weighted").matrix)
    child_kernel = diffusion_kernel(decomp, beta)
    child = train(
        child_kernel,
        config,
        vertex_labels=sub.vertices,
        beta=beta,
        lineage=parent.lineage + (f"unit:{unit}",),
    )
    return child, sub
