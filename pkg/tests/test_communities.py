import numpy as np
import pytest

from graphsom import (
    AnalysisError,
    central_vertices,
    eig_sym,
    find_perfect_communities,
    laplacian,
    rich_club,
    summary_graph,
    verify_community_spectral,
)
from oracles import (
    brute_force_perfect_communities,
    graph_from_edges,
    random_graph,
    twin_blowup,
)


def k3():
    return graph_from_edges([("1", "2"), ("1", "3"), ("2", "3")])


def paw():
    return graph_from_edges([("1", "2"), ("1", "3"), ("2", "3"), ("3", "4")])


def test_find_k3():
    comms = find_perfect_communities(k3())
    assert len(comms) == 1
    assert comms[0].members == ("1", "2", "3")
    assert comms[0].inside_degree == 2
    assert comms[0].expected_eigenvalue == 3


def test_find_paw():
    comms = find_perfect_communities(paw())
    assert len(comms) == 1
    assert comms[0].members == ("1", "2")
    assert comms[0].outside_neighbors == ("3",)
    assert comms[0].inside_degree == 2


def test_find_star_and_cycle_empty():
    star = graph_from_edges([("c", "a"), ("c", "b"), ("c", "d")])
    assert find_perfect_communities(star) == []
    cycle = graph_from_edges([("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")])
    assert find_perfect_communities(cycle) == []


@pytest.mark.parametrize("seed", range(30))
def test_detector_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(2, 11)), float(rng.choice([0.2, 0.5, 0.8])))
    got = [c.members for c in find_perfect_communities(g)]
    assert got == brute_force_perfect_communities(g)


def test_detector_disjoint_and_maximal():
    rng = np.random.default_rng(99)
    for _ in range(20):
        g = random_graph(rng, 9, 0.5)
        comms = find_perfect_communities(g)
        seen = set()
        for c in comms:
            assert not (seen & set(c.members))
            seen |= set(c.members)
        brute = brute_force_perfect_communities(g)
        assert not any(
            set(a.members) < set(b) for a in comms for b in brute
        )


# -- spectral verification ---------------------------------------------------

def test_verify_paw():
    g = paw()
    dec = eig_sym(laplacian(g, "unweighted").matrix)
    (comm,) = find_perfect_communities(g)
    rep = verify_community_spectral(g, comm, dec)
    assert rep.verified
    assert rep.expected_eigenvalue == 3
    assert rep.max_residual == 0.0  # integer matrix-vector product is exact
    assert rep.multiplicity == 1
    assert rep.required_multiplicity == 1
    # eigenvectors at 0, 1, 4 are constant on {1,2}
    assert rep.constancy_max_deviation <= 1e-8
    assert rep.checked_eigenvectors == 3


def test_verify_k3():
    g = k3()
    dec = eig_sym(laplacian(g, "unweighted").matrix)
    (comm,) = find_perfect_communities(g)
    rep = verify_community_spectral(g, comm, dec)
    assert rep.verified
    assert rep.multiplicity == 2 == rep.required_multiplicity


def test_verify_rejects_fake_community():
    from graphsom.communities import PerfectCommunity

    g = paw()
    dec = eig_sym(laplacian(g, "unweighted").matrix)
    fake = PerfectCommunity(members=("1", "4"), outside_neighbors=(), inside_degree=2)
    with pytest.raises(AnalysisError, match="not perfect"):
        verify_community_spectral(g, fake, dec)


@pytest.mark.parametrize("seed", range(10))
def test_planted_recovery(seed):
    rng = np.random.default_rng(1000 + seed)
    g, classes = twin_blowup(rng, base_n=int(rng.integers(3, 8)), p=0.5)
    comms = find_perfect_communities(g)
    dec = eig_sym(laplacian(g, "unweighted").matrix)
    for members in classes.values():
        if len(members) < 2:
            continue
        hit = [c for c in comms if set(members) <= set(c.members)]
        assert len(hit) == 1
    for comm in comms:
        rep = verify_community_spectral(g, comm, dec)
        assert rep.verified
        assert rep.multiplicity >= rep.required_multiplicity


# -- rich club ---------------------------------------------------------------

def test_rich_club_k4_with_pendants():
    g = graph_from_edges(
        [("1", "2"), ("1", "3"), ("1", "4"), ("2", "3"), ("2", "4"), ("3", "4"),
         ("5", "1"), ("6", "5")]
    )
    club = rich_club(g, diameter_limit=2)
    assert set(club.members) == {"1", "2", "3", "4", "5"}
    # every proper prefix also satisfies the diameter limit (prefix-closed)
    from graphsom.communities import _hop_diameter
    from graphsom.graph import induced_subgraph

    for size in range(1, len(club.members) + 1):
        sub = induced_subgraph(g, club.members[:size])
        assert _hop_diameter(sub) <= 2


def test_rich_club_complete_graph():
    edges = [(str(i), str(j)) for i in range(5) for j in range(i + 1, 5)]
    club = rich_club(graph_from_edges(edges), diameter_limit=2)
    assert len(club.members) == 5
    assert all(d == 1.0 for _, d in club.density_curve)


def test_rich_club_star():
    star = graph_from_edges([("c", "a"), ("c", "b"), ("c", "d")])
    club = rich_club(star, diameter_limit=2)
    assert len(club.members) == 4


def test_rich_club_degree_order():
    g = graph_from_edges(
        [("1", "2"), ("1", "3"), ("1", "4"), ("2", "3"), ("2", "4"), ("3", "4"),
         ("5", "1"), ("6", "5")]
    )
    club = rich_club(g)
    degs = [g.degree(g.index(v), weighted=False) for v in club.members]
    assert degs == sorted(degs, reverse=True)


def test_rich_club_empty_graph():
    with pytest.raises(AnalysisError):
        rich_club(graph_from_edges([], vertices=[]))


# -- central vertices --------------------------------------------------------

def central_fixture():
    # two K3's a,b with a3-m-b3 path; {a1,a2} and {b1,b2} are perfect communities
    return graph_from_edges(
        [("a1", "a2"), ("a1", "a3"), ("a2", "a3"),
         ("b1", "b2"), ("b1", "b3"), ("b2", "b3"),
         ("a3", "m"), ("m", "b3")]
    )


def test_central_vertices_merge_components():
    g = central_fixture()
    comms = find_perfect_communities(g)
    assert sorted(c.members for c in comms) == [("a1", "a2"), ("b1", "b2")]
    empty_club = rich_club(g).__class__(members=(), density_curve=(), diameter_limit=2)
    sel = central_vertices(g, comms, empty_club)
    # m has the highest betweenness (all 9 cross pairs), then a3/b3 (8 each)
    assert sel.ranked_vertices[0] == "m"
    assert set(sel.ranked_vertices) == {"a3", "b3", "m"}
    assert sel.component_curve == ((0, 2), (1, 3), (2, 2), (3, 1))
    # tied largest drops resolve to the smaller k
    assert sel.chosen_k == 2

    sel3 = central_vertices(g, comms, empty_club, k=3)
    from graphsom.graph import induced_subgraph

    final = induced_subgraph(
        g, set(sel3.chosen_vertices) | {"a1", "a2", "b1", "b2"}
    )
    assert len(final.components()) == 1


def test_central_k0_and_no_drop():
    g = central_fixture()
    comms = find_perfect_communities(g)
    from graphsom.communities import RichClub

    empty_club = RichClub(members=(), density_curve=(), diameter_limit=2)
    sel0 = central_vertices(g, comms, empty_club, k=0)
    assert sel0.chosen_vertices == ()
    assert len(sel0.component_curve) == 1

    k3g = k3()
    comms3 = find_perfect_communities(k3g)
    sel = central_vertices(k3g, comms3, empty_club)
    assert sel.chosen_k == 0  # communities already induce one component


def test_central_k_too_large():
    g = central_fixture()
    comms = find_perfect_communities(g)
    from graphsom.communities import RichClub

    empty_club = RichClub(members=(), density_curve=(), diameter_limit=2)
    with pytest.raises(AnalysisError):
        central_vertices(g, comms, empty_club, k=100)


def test_component_curve_bounded_increase():
    rng = np.random.default_rng(5)
    from graphsom.communities import RichClub

    for _ in range(10):
        g = random_graph(rng, 12, 0.25)
        comms = find_perfect_communities(g)
        club = RichClub(members=(), density_curve=(), diameter_limit=2)
        sel = central_vertices(g, comms, club)
        counts = [c for _, c in sel.component_curve]
        for a, b in zip(counts, counts[1:]):
            assert b - a <= 1  # a new vertex adds at most one component


# -- summary graph -----------------------------------------------------------

def test_summary_two_triangles():
    g = graph_from_edges(
        [("a1", "a2"), ("a1", "a3"), ("a2", "a3"),
         ("b1", "b2"), ("b1", "b3"), ("b2", "b3"), ("a3", "b3")]
    )
    comms = find_perfect_communities(g)
    assert sorted(c.members for c in comms) == [("a1", "a2"), ("b1", "b2")]
    from graphsom.communities import CentralSelection, RichClub

    club = RichClub(members=(), density_curve=(), diameter_limit=2)
    none = CentralSelection(ranked_vertices=(), component_curve=((0, 2),), chosen_k=0, chosen_vertices=())
    summary = summary_graph(g, comms, club, none)
    assert len(summary.glyphs) == 2
    assert summary.edges == ()
    assert all(gl.isolated for gl in summary.glyphs)

    withc = CentralSelection(
        ranked_vertices=("a3", "b3"), component_curve=((0, 2), (1, 2), (2, 1)),
        chosen_k=2, chosen_vertices=("a3", "b3"),
    )
    summary2 = summary_graph(g, comms, club, withc)
    idents = {gl.ident for gl in summary2.glyphs}
    assert idents == {"community_0", "community_1", "central_a3", "central_b3"}
    touched = {a for a, _, _ in summary2.edges} | {b for _, b, _ in summary2.edges}
    assert touched == idents


def test_summary_single_glyph_and_metadata():
    g = graph_from_edges([("1", "2"), ("1", "3"), ("2", "3")])
    comms = find_perfect_communities(g)
    from graphsom.communities import CentralSelection, RichClub

    club = RichClub(members=(), density_curve=(), diameter_limit=2)
    none = CentralSelection(ranked_vertices=(), component_curve=((0, 1),), chosen_k=0, chosen_vertices=())
    meta = {
        "1": {"date": 1300, "location": "Pern", "family": "Faure"},
        "2": {"date": 1320, "location": "Pern", "family": "Roux"},
    }
    summary = summary_graph(g, comms, club, none, node_metadata=meta)
    (glyph,) = summary.glyphs
    assert glyph.mean_date == 1310.0
    assert glyph.dominant_location == "Pern"
    assert glyph.location_share == 1.0
    assert summary.edges == ()


def test_summary_rich_club_claims_overlap():
    g = graph_from_edges(
        [("1", "2"), ("1", "3"), ("2", "3"), ("3", "4")]
    )
    comms = find_perfect_communities(g)  # {1,2}
    club = rich_club(g)
    from graphsom.communities import CentralSelection

    none = CentralSelection(ranked_vertices=(), component_curve=((0, 1),), chosen_k=0, chosen_vertices=())
    summary = summary_graph(g, comms, club, none)
    owners = {}
    for gl in summary.glyphs:
        for m in gl.members:
            assert m not in owners
            owners[m] = gl.kind
    # rich-club wins the overlap
    for m in club.members:
        assert owners[m] == "rich_club"


def test_summary_unknown_metadata_label():
    g = k3()
    comms = find_perfect_communities(g)
    from graphsom.communities import CentralSelection, RichClub

    club = RichClub(members=(), density_curve=(), diameter_limit=2)
    none = CentralSelection(ranked_vertices=(), component_curve=((0, 1),), chosen_k=0, chosen_vertices=())
    with pytest.raises(AnalysisError, match="metadata"):
        summary_graph(g, comms, club, none, node_metadata={"zz": {"date": 1300}})
