"""Weighted undirected graphs: construction, ingestion and small-world metrology.

The graph is the universe every other module reads.  Vertices carry stable
string labels whose positions are fixed by first-appearance order, so that
serializing and re-loading a graph preserves indices and therefore all
matrix-based computations downstream.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import AnalysisError, InputFormatError

__all__ = [
    "WeightedGraph",
    "ContractRecord",
    "GraphStats",
    "load_edge_list",
    "load_contracts",
    "build_from_contracts",
    "largest_connected_component",
    "induced_unweighted",
    "induced_subgraph",
    "graph_stats",
    "betweenness",
    "cumulative_degree_distribution",
]


class WeightedGraph:
    """Symmetric positively-weighted undirected graph with ordered labels.

    Immutable after construction.  Adjacency is kept as per-vertex dicts
    (neighbor index -> weight); a dense weight matrix can be materialized on
    demand for the spectral modules.
    """

    __slots__ = ("_labels", "_index", "_adj")

    def __init__(self, labels: Sequence[str], edges: Iterable[tuple[str, str, float]]):
        self._labels: tuple[str, ...] = tuple(labels)
        if len(set(self._labels)) != len(self._labels):
            raise AnalysisError("duplicate vertex labels")
        self._index: dict[str, int] = {lab: i for i, lab in enumerate(self._labels)}
        self._adj: tuple[dict[int, float], ...] = tuple({} for _ in self._labels)
        for a, b, w in edges:
            self._add_edge(a, b, w)

    def _add_edge(self, a: str, b: str, w: float) -> None:
        w = float(w)
        if w <= 0.0:
            raise AnalysisError(f"edge weight must be positive: {a!r}-{b!r} w={w}")
        if a == b:
            raise AnalysisError(f"self-loop rejected: {a!r}")
        try:
            i, j = self._index[a], self._index[b]
        except KeyError as exc:
            raise AnalysisError(f"unknown vertex label {exc.args[0]!r}") from None
        self._adj[i][j] = self._adj[i].get(j, 0.0) + w
        self._adj[j][i] = self._adj[j].get(i, 0.0) + w

    # -- basic accessors ---------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._labels

    @property
    def n(self) -> int:
        return len(self._labels)

    @property
    def m(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj) // 2

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise AnalysisError(f"unknown vertex label {label!r}") from None

    def label(self, i: int) -> str:
        return self._labels[i]

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def neighbors(self, i: int) -> Mapping[int, float]:
        return self._adj[i]

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def weight(self, i: int, j: int) -> float:
        return self._adj[i].get(j, 0.0)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield each undirected edge once as (i, j, w) with i < j."""
        for i, nbrs in enumerate(self._adj):
            for j, w in nbrs.items():
                if i < j:
                    yield i, j, w

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges())

    def degree(self, i: int, weighted: bool = True) -> float:
        if weighted:
            return sum(self._adj[i].values())
        return float(len(self._adj[i]))

    def degrees(self, weighted: bool = True) -> np.ndarray:
        return np.array([self.degree(i, weighted) for i in range(self.n)])

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix W with zero diagonal."""
        w = np.zeros((self.n, self.n))
        for i, j, wij in self.edges():
            w[i, j] = wij
            w[j, i] = wij
        return w

    def csr_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """Unweighted adjacency in CSR form (indptr, indices), neighbors sorted."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i in range(self.n):
            indptr[i + 1] = indptr[i] + len(self._adj[i])
        indices = np.empty(indptr[-1], dtype=np.int64)
        for i in range(self.n):
            indices[indptr[i]:indptr[i + 1]] = sorted(self._adj[i])
        return indptr, indices

    def components(self) -> list[list[int]]:
        """Connected components as index lists, each in ascending order."""
        seen = [False] * self.n
        comps: list[list[int]] = []
        for s in range(self.n):
            if seen[s]:
                continue
            comp = [s]
            seen[s] = True
            queue = deque([s])
            while queue:
                v = queue.popleft()
                for u in self._adj[v]:
                    if not seen[u]:
                        seen[u] = True
                        comp.append(u)
                        queue.append(u)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n == 0 or len(self.components()) == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self._labels == other._labels and self._adj == other._adj

    def __hash__(self) -> int:  # labels identify the graph well enough for sets
        return hash(self._labels)

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class ContractRecord:
    """One agrarian-contract-style record linking a set of persons."""

    contract_id: str
    date: int
    lord: str | None
    notary: str | None
    persons: tuple[str, ...]
    person_roles: tuple[str, ...]

    VALID_ROLES = frozenset({"peasant", "noble", "notary"})

    def validate(self, date_range: tuple[int, int] = (1000, 2000)) -> None:
        if not self.persons:
            raise InputFormatError(f"contract {self.contract_id!r}: empty person list")
        if len(self.person_roles) != len(self.persons):
            raise InputFormatError(
                f"contract {self.contract_id!r}: roles do not align with persons"
            )
        bad = set(self.person_roles) - self.VALID_ROLES
        if bad:
            raise InputFormatError(
                f"contract {self.contract_id!r}: unknown roles {sorted(bad)}"
            )
        lo, hi = date_range
        if not lo <= self.date <= hi:
            raise InputFormatError(
                f"contract {self.contract_id!r}: implausible date {self.date}"
            )


@dataclass(frozen=True)
class GraphStats:
    """Small-world metrology of a graph (hop metrics on the unweighted view)."""

    vertex_count: int
    edge_count: int
    total_weight: float
    density: float
    diameter: int
    mean_shortest_path: float
    local_connectivity: float
    component_count: int
    restricted_to_largest_component: bool = field(default=False)


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def _as_text_lines(source) -> Iterator[str]:
    if isinstance(source, (str, bytes)):
        import os

        if isinstance(source, bytes):
            yield from io.StringIO(source.decode("utf-8"))
            return
        if os.path.exists(source):
            with open(source, "r", encoding="utf-8") as fh:
                yield from fh
            return
        raise InputFormatError(f"no such file: {source}")
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        yield from io.StringIO(data)
        return
    yield from source


def load_edge_list(
    source,
    *,
    delimiter: str = ",",
    default_weight: float = 1.0,
    header: str | bool = "auto",
) -> WeightedGraph:
    """Parse a ``source,target[,weight]`` edge list into a graph.

    Duplicate pairs merge by weight summation; vertex order is first-appearance
    order.  Comment lines start with ``#``; an optional header line
    ``source,target[,weight]`` is skipped when ``header`` is True or "auto".
    """
    labels: list[str] = []
    seen: set[str] = set()
    rows: list[tuple[str, str, float]] = []
    first_data = True
    for lineno, raw in enumerate(_as_text_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(delimiter)]
        if first_data:
            first_data = False
            lowered = [p.lower() for p in parts]
            if header is True or (
                header == "auto" and lowered[:2] == ["source", "target"]
            ):
                continue
        if len(parts) == 2:
            a, b = parts
            w = default_weight
        elif len(parts) == 3:
            a, b = parts[0], parts[1]
            try:
                w = float(parts[2])
            except ValueError:
                raise InputFormatError(
                    f"line {lineno}: unparseable weight {parts[2]!r}"
                ) from None
        else:
            raise InputFormatError(f"line {lineno}: expected 2 or 3 fields, got {len(parts)}")
        if not a or not b:
            raise InputFormatError(f"line {lineno}: empty vertex label")
        if a == b:
            raise InputFormatError(f"line {lineno}: self-loop on {a!r}")
        if w <= 0:
            raise InputFormatError(f"line {lineno}: non-positive weight {w}")
        for lab in (a, b):
            if lab not in seen:
                seen.add(lab)
                labels.append(lab)
        rows.append((a, b, w))
    return WeightedGraph(labels, rows)


def load_contracts(source, date_range: tuple[int, int] = (1000, 2000)) -> list[ContractRecord]:
    """Parse the contract CSV (header ``contract_id,date,lord,notary,persons,roles``)."""
    lines = list(_as_text_lines(source))
    reader = csv.DictReader(lines)
    required = {"contract_id", "date", "lord", "notary", "persons", "roles"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise InputFormatError(
            f"contract CSV must have header {sorted(required)}, got {reader.fieldnames}"
        )
    records: list[ContractRecord] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            date = int(row["date"])
        except (TypeError, ValueError):
            raise InputFormatError(f"line {lineno}: unparseable date {row['date']!r}") from None
        persons = tuple(p.strip() for p in row["persons"].split(";") if p.strip())
        roles = tuple(r.strip() for r in row["roles"].split(";") if r.strip())
        rec = ContractRecord(
            contract_id=row["contract_id"].strip(),
            date=date,
            lord=row["lord"].strip() or None,
            notary=row["notary"].strip() or None,
            persons=persons,
            person_roles=roles,
        )
        try:
            rec.validate(date_range)
        except InputFormatError as exc:
            raise InputFormatError(f"line {lineno}: {exc}") from None
        records.append(rec)
    return records


def build_from_contracts(
    records: Sequence[ContractRecord],
    *,
    window_years: int = 15,
    excluded_lords: frozenset[str] | set[str] = frozenset(),
    drop_roles: frozenset[str] | set[str] = frozenset({"noble", "notary"}),
) -> WeightedGraph:
    """Build the person-interaction graph from contract records.

    Two evidence rules each add +1 to a pair weight: co-occurrence in one
    contract, and appearance in two contracts less than ``window_years`` apart
    that share a non-excluded lord or share a notary.  Persons whose role is in
    ``drop_roles`` are removed before any counting.
    """
    if not records:
        raise AnalysisError("empty record list")
    if window_years < 0:
        raise AnalysisError(f"window_years must be nonnegative, got {window_years}")
    excluded_lords = frozenset(excluded_lords)
    drop_roles = frozenset(drop_roles)

    kept: list[tuple[ContractRecord, tuple[str, ...]]] = []
    for rec in records:
        persons = tuple(
            p
            for p, role in zip(rec.persons, rec.person_roles)
            if role not in drop_roles
        )
        kept.append((rec, persons))

    # Vertex order: first appearance across records, in input order.
    labels: list[str] = []
    seen: set[str] = set()
    for _, persons in kept:
        for p in persons:
            if p not in seen:
                seen.add(p)
                labels.append(p)

    weights: dict[tuple[str, str], float] = {}

    def bump(a: str, b: str) -> None:
        key = (a, b) if a < b else (b, a)
        weights[key] = weights.get(key, 0.0) + 1.0

    # Rule 1: shared contract.
    for _, persons in kept:
        uniq = sorted(set(persons))
        for x in range(len(uniq)):
            for y in range(x + 1, len(uniq)):
                bump(uniq[x], uniq[y])

    # Rule 2: cross-contract pair within the window sharing a lord or notary.
    for a in range(len(kept)):
        rec_a, pers_a = kept[a]
        for b in range(a + 1, len(kept)):
            rec_b, pers_b = kept[b]
            if abs(rec_a.date - rec_b.date) >= window_years:
                continue
            same_lord = (
                rec_a.lord is not None
                and rec_a.lord == rec_b.lord
                and rec_a.lord not in excluded_lords
            )
            same_notary = rec_a.notary is not None and rec_a.notary == rec_b.notary
            if not (same_lord or same_notary):
                continue
            pairs = {
                (p, q) if p < q else (q, p)
                for p in pers_a
                for q in pers_b
                if p != q
            }
            for p, q in pairs:
                bump(p, q)

    # Deterministic edge order regardless of dict history.
    edge_items = [(a, b, w) for (a, b), w in sorted(weights.items())]
    return WeightedGraph(labels, edge_items)


# ---------------------------------------------------------------------------
# Induced graphs
# ---------------------------------------------------------------------------

def largest_connected_component(g: WeightedGraph) -> WeightedGraph:
    """Induced subgraph on the largest component (ties: smallest first index)."""
    if g.n == 0:
        raise AnalysisError("empty graph has no components")
    comps = g.components()
    best = max(comps, key=lambda c: (len(c), -c[0]))
    return induced_subgraph(g, {g.label(i) for i in best})


def induced_unweighted(g: WeightedGraph) -> WeightedGraph:
    """Same vertices and edges, every weight replaced by 1."""
    return WeightedGraph(
        g.vertices, ((g.label(i), g.label(j), 1.0) for i, j, _ in g.edges())
    )


def induced_subgraph(g: WeightedGraph, vertex_labels: Iterable[str]) -> WeightedGraph:
    """Subgraph induced by ``vertex_labels``; relative vertex order preserved."""
    wanted = set(vertex_labels)
    unknown = wanted - set(g.vertices)
    if unknown:
        raise AnalysisError(f"unknown vertex labels: {sorted(unknown)}")
    keep = [lab for lab in g.vertices if lab in wanted]
    keep_idx = {g.index(lab) for lab in keep}
    edges = (
        (g.label(i), g.label(j), w)
        for i, j, w in g.edges()
        if i in keep_idx and j in keep_idx
    )
    return WeightedGraph(keep, edges)


# ---------------------------------------------------------------------------
# Metrology
# ---------------------------------------------------------------------------

def _bfs_hops(g: WeightedGraph, source: int) -> list[int]:
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def graph_stats(g: WeightedGraph) -> GraphStats:
    """Density, hop diameter, mean shortest path, local connectivity.

    On a disconnected graph the path metrics are computed on the largest
    component and flagged.
    """
    n = g.n
    comps = g.components() if n else []
    restricted = len(comps) > 1
    h = largest_connected_component(g) if restricted else g

    diameter = 0
    total = 0
    pairs = 0
    for s in range(h.n):
        dist = _bfs_hops(h, s)
        for t in range(s + 1, h.n):
            total += dist[t]
            pairs += 1
            diameter = max(diameter, dist[t])
    mean_path = total / pairs if pairs else 0.0

    density = (2 * g.m / (n * (n - 1))) if n >= 2 else 0.0

    # Local connectivity: mean density of neighbor-induced subgraphs over
    # vertices of degree >= 2 (undefined below that).
    dens = []
    for v in range(n):
        nbrs = sorted(g.neighbors(v))
        k = len(nbrs)
        if k < 2:
            continue
        links = sum(
            1
            for x in range(k)
            for y in range(x + 1, k)
            if g.has_edge(nbrs[x], nbrs[y])
        )
        dens.append(2 * links / (k * (k - 1)))
    local = float(np.mean(dens)) if dens else 0.0

    return GraphStats(
        vertex_count=n,
        edge_count=g.m,
        total_weight=g.total_weight,
        density=density,
        diameter=diameter,
        mean_shortest_path=mean_path,
        local_connectivity=local,
        component_count=len(comps),
        restricted_to_largest_component=restricted,
    )


def betweenness(g: WeightedGraph) -> dict[str, float]:
    """Unnormalized shortest-path betweenness (hop metric, unordered pairs)."""
    from ._betweenness import brandes_csr

    indptr, indices = g.csr_adjacency()
    scores = brandes_csr(indptr, indices, g.n)
    # Dependency accumulation visits each unordered pair from both endpoints.
    return {g.label(i): scores[i] / 2.0 for i in range(g.n)}


def cumulative_degree_distribution(
    g: WeightedGraph, weighted: bool = False
) -> list[tuple[float, float]]:
    """(k, fraction of vertices with degree >= k) over distinct degrees."""
    if g.n == 0:
        return []
    degs = np.sort(g.degrees(weighted=weighted))
    out = []
    for k in np.unique(degs):
        frac = float(np.sum(degs >= k)) / g.n
        out.append((float(k), frac))
    return out
