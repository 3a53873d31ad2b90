"""Perfect communities, rich-club, central vertices and the glyph summary graph.

Detection is combinatorial: a perfect community is exactly a class of vertices
with identical closed neighborhoods (pairwise adjacent with the same outside
links).  The spectral route is kept as verification: the indicator-difference
vectors of a true community are eigenvectors of the unweighted Laplacian at
eigenvalue d+1, and the remaining eigenvectors are constant on the community.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import AnalysisError
from .graph import WeightedGraph, betweenness, induced_subgraph
from .spectral import (
    EigenDecomposition,
    eigenvalue_group_multiplicity,
)

__all__ = [
    "PerfectCommunity",
    "CommunityVerification",
    "RichClub",
    "CentralSelection",
    "SummaryGlyph",
    "SummaryGraph",
    "find_perfect_communities",
    "verify_community_spectral",
    "rich_club",
    "central_vertices",
    "summary_graph",
]


@dataclass(frozen=True)
class PerfectCommunity:
    """A maximal set of >= 2 mutually adjacent vertices with identical outside links."""

    members: tuple[str, ...]  # in vertex-position order
    outside_neighbors: tuple[str, ...]
    inside_degree: int  # unweighted degree of any member

    @property
    def expected_eigenvalue(self) -> int:
        return self.inside_degree + 1

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CommunityVerification:
    """Spectral verification report for one community."""

    members: tuple[str, ...]
    expected_eigenvalue: int
    residuals: tuple[float, ...]  # one per spanning difference vector
    max_residual: float
    multiplicity: int
    required_multiplicity: int
    constancy_max_deviation: float
    checked_eigenvectors: int
    verified: bool


@dataclass(frozen=True)
class RichClub:
    """Greedy highest-degree prefix whose induced subgraph keeps a small diameter."""

    members: tuple[str, ...]  # insertion order = degree order
    density_curve: tuple[tuple[int, float], ...]
    diameter_limit: int


@dataclass(frozen=True)
class CentralSelection:
    """Betweenness-ranked central vertices with the component-count curve."""

    ranked_vertices: tuple[str, ...]
    component_curve: tuple[tuple[int, int], ...]  # (k, component count)
    chosen_k: int
    chosen_vertices: tuple[str, ...]


@dataclass(frozen=True)
class SummaryGlyph:
    kind: str  # "community" | "rich_club" | "central"
    ident: str
    members: tuple[str, ...]
    size: int
    mean_date: float | None = None
    dominant_location: str | None = None
    location_share: float | None = None
    dominant_family: str | None = None
    family_share: float | None = None
    isolated: bool = False


@dataclass(frozen=True)
class SummaryGraph:
    glyphs: tuple[SummaryGlyph, ...]
    edges: tuple[tuple[str, str, float], ...]  # glyph ident pairs, summed weight


# ---------------------------------------------------------------------------
# Detection and verification
# ---------------------------------------------------------------------------

def find_perfect_communities(g: WeightedGraph) -> list[PerfectCommunity]:
    """All maximal perfect communities, as closed-neighborhood classes of size >= 2."""
    classes: dict[frozenset[int], list[int]] = {}
    for v in range(g.n):
        closed = frozenset(g.neighbors(v)) | {v}
        classes.setdefault(closed, []).append(v)
    out: list[PerfectCommunity] = []
    for closed, members in classes.items():
        if len(members) < 2:
            continue
        members.sort()
        outside = sorted(closed - set(members))
        out.append(
            PerfectCommunity(
                members=tuple(g.label(i) for i in members),
                outside_neighbors=tuple(g.label(i) for i in outside),
                inside_degree=len(g.neighbors(members[0])),
            )
        )
    out.sort(key=lambda c: g.index(c.members[0]))
    return out


def verify_community_spectral(
    g: WeightedGraph,
    community: PerfectCommunity,
    decomp: EigenDecomposition,
    tol: float = 1e-8,
) -> CommunityVerification:
    """Check the eigenvalue identity and coordinate constancy on one community.

    ``decomp`` must be the decomposition of the *unweighted* Laplacian.  The
    community's indicator-difference vectors must be eigenvectors at d+1; any
    eigenvector orthogonal to their span must be constant on the community.
    """
    idx = [g.index(lab) for lab in community.members]
    k = len(idx)
    lam = float(community.expected_eigenvalue)
    n = decomp.n

    lap = None  # rebuilt lazily from the decomposition's source graph
    from .spectral import laplacian

    lap = laplacian(g, "unweighted").matrix

    residuals = []
    base = idx[0]
    for other in idx[1:]:
        vec = np.zeros(n)
        vec[base] = 1.0
        vec[other] = -1.0
        residuals.append(float(np.linalg.norm(lap @ vec - lam * vec)))
    max_residual = max(residuals, default=0.0)
    if max_residual > tol:
        raise AnalysisError(
            f"community {community.members} is not perfect at tol={tol}: "
            f"residual {max_residual}"
        )

    multiplicity = eigenvalue_group_multiplicity(decomp, lam)
    required = k - 1

    # Constancy check: eigenvectors orthogonal to the difference span must be
    # constant on the community.  The projection of h onto that span is the
    # community restriction minus its mean.
    max_dev = 0.0
    checked = 0
    for c in range(n):
        h = decomp.vectors[:, c]
        sub = h[idx]
        proj = float(np.linalg.norm(sub - sub.mean()))
        if proj <= tol:
            checked += 1
            max_dev = max(max_dev, float(sub.max() - sub.min()))
    verified = (
        max_residual <= tol and multiplicity >= required and max_dev <= tol
    )
    return CommunityVerification(
        members=community.members,
        expected_eigenvalue=int(lam),
        residuals=tuple(residuals),
        max_residual=max_residual,
        multiplicity=multiplicity,
        required_multiplicity=required,
        constancy_max_deviation=max_dev,
        checked_eigenvectors=checked,
        verified=verified,
    )


# ---------------------------------------------------------------------------
# Rich club and central vertices
# ---------------------------------------------------------------------------

def _hop_diameter(g: WeightedGraph) -> int:
    """Hop diameter; returns a value > n for disconnected graphs."""
    from .graph import _bfs_hops

    worst = 0
    for s in range(g.n):
        dist = _bfs_hops(g, s)
        if min(dist) < 0:
            return g.n + 1
        worst = max(worst, max(dist))
    return worst


def rich_club(g: WeightedGraph, diameter_limit: int = 2) -> RichClub:
    """Greedy scan over vertices by non-increasing unweighted degree.

    A candidate whose addition pushes the induced diameter past the limit
    terminates the scan.  The density curve over accepted prefixes is returned
    for the analyst's sharp-decrease judgment.
    """
    if g.n == 0:
        raise AnalysisError("empty graph")
    order = sorted(range(g.n), key=lambda v: (-g.degree(v, weighted=False), v))
    members: list[str] = []
    curve: list[tuple[int, float]] = []
    for v in order:
        candidate = members + [g.label(v)]
        sub = induced_subgraph(g, candidate)
        if _hop_diameter(sub) > diameter_limit:
            break
        members = candidate
        size = len(members)
        possible = size * (size - 1) / 2
        density = sub.m / possible if possible else 1.0
        curve.append((size, density))
    return RichClub(
        members=tuple(members),
        density_curve=tuple(curve),
        diameter_limit=diameter_limit,
    )


def central_vertices(
    g: WeightedGraph,
    communities: Sequence[PerfectCommunity],
    club: RichClub,
    k: int | None = None,
    min_drop: int = 1,
) -> CentralSelection:
    """Select high-betweenness vertices that glue the summary together.

    Candidates are vertices outside all communities and the rich-club, ranked
    by decreasing betweenness.  The component-count curve of the induced
    subgraphs drives the automatic elbow choice (largest single-step drop of
    at least ``min_drop``; ties to the smaller k).
    """
    base: set[str] = set(club.members)
    for comm in communities:
        base |= set(comm.members)
    scores = betweenness(g)
    candidates = [lab for lab in g.vertices if lab not in base]
    candidates.sort(key=lambda lab: (-scores[lab], g.index(lab)))
    if k is not None and k > len(candidates):
        raise AnalysisError(f"k={k} exceeds candidate count {len(candidates)}")

    limit = len(candidates) if k is None else k
    curve: list[tuple[int, int]] = []
    current = set(base)
    sub = induced_subgraph(g, current) if current else None
    curve.append((0, len(sub.components()) if sub is not None else 0))
    for step in range(1, limit + 1):
        current.add(candidates[step - 1])
        sub = induced_subgraph(g, current)
        curve.append((step, len(sub.components())))

    if k is None:
        best_drop = 0
        chosen = 0
        for step in range(1, len(curve)):
            drop = curve[step - 1][1] - curve[step][1]
            if drop > best_drop:
                best_drop = drop
                chosen = step
        if best_drop < min_drop:
            chosen = 0
    else:
        chosen = k
    return CentralSelection(
        ranked_vertices=tuple(candidates),
        component_curve=tuple(curve),
        chosen_k=chosen,
        chosen_vertices=tuple(candidates[:chosen]),
    )


# ---------------------------------------------------------------------------
# Summary graph
# ---------------------------------------------------------------------------

def _modal(values: list[str]) -> tuple[str | None, float | None]:
    if not values:
        return None, None
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(sorted(counts), key=lambda x: counts[x])
    return best, counts[best] / len(values)


def summary_graph(
    g: WeightedGraph,
    communities: Sequence[PerfectCommunity],
    club: RichClub,
    centrals: CentralSelection,
    node_metadata: Mapping[str, Mapping[str, object]] | None = None,
) -> SummaryGraph:
    """Glyph-level graph: one glyph per community, one for the rich-club,
    one per chosen central vertex.

    A vertex claimed by both a community and the rich-club is drawn in the
    rich-club glyph and the community shrinks accordingly.
    """
    if node_metadata:
        unknown = set(node_metadata) - set(g.vertices)
        if unknown:
            raise AnalysisError(f"metadata labels not in graph: {sorted(unknown)}")

    club_set = set(club.members)

    def attrs(members: tuple[str, ...]) -> dict[str, object]:
        if not node_metadata:
            return {}
        dates = [
            float(node_metadata[m]["date"])  # type: ignore[arg-type]
            for m in members
            if m in node_metadata and node_metadata[m].get("date") is not None
        ]
        locs = [
            str(node_metadata[m]["location"])
            for m in members
            if m in node_metadata and node_metadata[m].get("location")
        ]
        fams = [
            str(node_metadata[m]["family"])
            for m in members
            if m in node_metadata and node_metadata[m].get("family")
        ]
        loc, loc_share = _modal(locs)
        fam, fam_share = _modal(fams)
        return {
            "mean_date": float(np.mean(dates)) if dates else None,
            "dominant_location": loc,
            "location_share": loc_share,
            "dominant_family": fam,
            "family_share": fam_share,
        }

    glyphs: list[SummaryGlyph] = []
    for c_idx, comm in enumerate(communities):
        members = tuple(m for m in comm.members if m not in club_set)
        if not members:
            continue
        glyphs.append(
            SummaryGlyph(
                kind="community",
                ident=f"community_{c_idx}",
                members=members,
                size=len(members),
                **attrs(members),
            )
        )
    if club.members:
        glyphs.append(
            SummaryGlyph(
                kind="rich_club",
                ident="rich_club",
                members=tuple(club.members),
                size=len(club.members),
                **attrs(tuple(club.members)),
            )
        )
    for lab in centrals.chosen_vertices:
        if lab in club_set:
            continue
        glyphs.append(
            SummaryGlyph(
                kind="central",
                ident=f"central_{lab}",
                members=(lab,),
                size=1,
                **attrs((lab,)),
            )
        )

    owner: dict[str, str] = {}
    for glyph in glyphs:
        for m in glyph.members:
            if m in owner:
                raise AnalysisError(f"vertex {m!r} claimed by two glyphs")
            owner[m] = glyph.ident

    sums: dict[tuple[str, str], float] = {}
    for i, j, w in g.edges():
        a = owner.get(g.label(i))
        b = owner.get(g.label(j))
        if a is None or b is None or a == b:
            continue
        key = (a, b) if a < b else (b, a)
        sums[key] = sums.get(key, 0.0) + w
    edges = tuple((a, b, w) for (a, b), w in sorted(sums.items()))

    touched = {a for a, _, _ in edges} | {b for _, b, _ in edges}
    glyphs = [
        glyph
        if glyph.ident in touched
        else SummaryGlyph(**{**glyph.__dict__, "isolated": True})
        for glyph in glyphs
    ]
    return SummaryGraph(glyphs=tuple(glyphs), edges=edges)
