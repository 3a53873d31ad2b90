import csv
import json

import pytest
from click.testing import CliRunner

from graphsom.cli import main
from graphsom.dotio import parse as parse_dot

BRIDGED = "\n".join(
    ["a1,a2,1", "a1,a3,1", "a2,a3,1", "b1,b2,1", "b1,b3,1", "b2,b3,1", "a3,b3,1"]
) + "\n"

DISCONNECTED = "\n".join(
    ["a1,a2,1", "a1,a3,1", "a2,a3,1", "x,y,1"]
) + "\n"

METADATA = (
    "label,date,location,family\n"
    "a1,1300,Pern,Faure\n"
    "a2,1320,Pern,Roux\n"
    "b1,1350,Lordat,Clergue\n"
    "b2,1360,Lordat,Clergue\n"
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def edges(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text(BRIDGED)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- stats -------------------------------------------------------------------

def test_stats_outputs(runner, edges, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["stats", "--input", edges, "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "stats.json").read_text())
    assert doc["schema_version"] == "1"
    assert doc["vertex_count"] == 6
    assert doc["edge_count"] == 7
    assert doc["density"] == pytest.approx(7 / 15)
    rows = read_csv(out / "degree_distribution.csv")
    assert rows[0] == ["k", "fraction"]
    assert float(rows[1][1]) == 1.0
    assert (out / "degree_distribution_weighted.csv").exists()


def test_stats_missing_file_exit_2(runner, tmp_path):
    res = runner.invoke(main, ["stats", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "no such file" in res.stderr


def test_stats_bad_input_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,a,1\n")
    res = runner.invoke(main, ["stats", "--input", str(bad), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2


# -- communities -------------------------------------------------------------

def test_communities_outputs(runner, edges, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["communities", "--input", edges, "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "communities.json").read_text())
    members = sorted(tuple(c["members"]) for c in doc["communities"])
    assert members == [("a1", "a2"), ("b1", "b2")]
    ver = json.loads((out / "verification.json").read_text())
    assert all(rep["verified"] for rep in ver["reports"])
    assert ver["graph_hash"] == doc["graph_hash"]
    dot = parse_dot((out / "summary.dot").read_text())
    assert dot.name == "summary"
    kinds = {attrs["kind"] for _, attrs in dot.nodes}
    assert "community" in kinds


def test_communities_metadata_fill(runner, edges, tmp_path):
    meta = tmp_path / "meta.csv"
    meta.write_text(METADATA)
    out = tmp_path / "out"
    res = runner.invoke(
        main,
        ["communities", "--input", edges, "--out", str(out), "--metadata", str(meta)],
    )
    assert res.exit_code == 0, res.output
    dot = parse_dot((out / "summary.dot").read_text())
    fills = [attrs.get("fillcolor") for _, attrs in dot.nodes]
    assert all(f and f.startswith("#") for f in fills)
    # oldest community black, newest white under the linear grayscale
    assert "#000000" in fills and "#ffffff" in fills


def test_communities_disconnected_notice(runner, tmp_path):
    p = tmp_path / "disc.csv"
    p.write_text(DISCONNECTED)
    out = tmp_path / "out"
    res = runner.invoke(main, ["communities", "--input", str(p), "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "largest component" in res.stderr
    doc = json.loads((out / "communities.json").read_text())
    assert doc["communities"][0]["members"] == ["a1", "a2", "a3"]


def test_communities_bad_k_exit_2(runner, edges, tmp_path):
    res = runner.invoke(
        main, ["communities", "--input", edges, "--out", str(tmp_path / "o"), "--k", "lots"]
    )
    assert res.exit_code == 2


def test_communities_missing_metadata_exit_2(runner, edges, tmp_path):
    res = runner.invoke(
        main,
        ["communities", "--input", edges, "--out", str(tmp_path / "o"),
         "--metadata", str(tmp_path / "nope.csv")],
    )
    assert res.exit_code == 2


# -- som ---------------------------------------------------------------------

def som_args(edges, out, grid="2x2"):
    return ["som", "--input", edges, "--out", str(out), "--grid", grid, "--beta", "0.05"]


def test_som_outputs(runner, edges, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, som_args(edges, out))
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "model.json").read_text())
    assert doc["schema_version"] == "1"
    assert len(doc["assignment"]) == 6
    rows = read_csv(out / "assignment.csv")
    assert rows[0] == ["label", "unit"]
    assert len(rows) == 7
    dot = parse_dot((out / "map.dot").read_text())
    assert all(ident.startswith("unit_") for ident, _ in dot.nodes)
    um = read_csv(out / "umatrix.csv")
    assert um[0] == ["unit", "row", "col", "mean_neighbor_distance"]
    assert len(um) == 5
    quality = json.loads((out / "quality.json").read_text())
    assert quality["quantization_error"] >= 0.0
    assert sum(quality["unit_sizes"]) == 6


def test_som_idempotent_byte_identical(runner, edges, tmp_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert runner.invoke(main, som_args(edges, out1)).exit_code == 0
    assert runner.invoke(main, som_args(edges, out2)).exit_code == 0
    for name in ("model.json", "assignment.csv", "map.dot", "umatrix.csv", "quality.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_som_bad_grid_exit_2(runner, edges, tmp_path):
    res = runner.invoke(
        main, ["som", "--input", edges, "--out", str(tmp_path / "o"), "--grid", "7by7"]
    )
    assert res.exit_code == 2


def test_som_select_table(runner, edges, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["som", "--input", edges, "--out", str(out), "--select"])
    assert res.exit_code == 0, res.output
    rows = read_csv(out / "selection.csv")
    assert rows[0] == ["beta", "grid", "quantization_error", "kaski_lagus", "q_modularity", "nonempty_units"]
    assert len(rows) == 1 + 5 * 6  # betas x grid sizes
    kls = [float(r[3]) for r in rows[1:] if r[3]]
    assert kls == sorted(kls)


# -- drilldown ---------------------------------------------------------------

def test_drilldown(runner, edges, tmp_path):
    parent_out = tmp_path / "parent"
    assert runner.invoke(main, som_args(edges, parent_out, grid="1x2")).exit_code == 0
    model_path = parent_out / "model.json"
    doc = json.loads(model_path.read_text())
    # pick the unit holding the larger cluster
    counts = {}
    for u in doc["assignment"]:
        counts[u] = counts.get(u, 0) + 1
    unit = max(counts, key=lambda u: counts[u])
    out = tmp_path / "drill"
    res = runner.invoke(
        main,
        ["drilldown", "--input", edges, "--out", str(out),
         "--model", str(model_path), "--unit", str(unit), "--grid", "1x2"],
    )
    assert res.exit_code == 0, res.output
    prefix = f"drill_unit{unit}_"
    for name in ("model.json", "assignment.csv", "map.dot", "umatrix.csv", "quality.json"):
        assert (out / (prefix + name)).exists()
    child = json.loads((out / (prefix + "model.json")).read_text())
    assert child["lineage"] == [f"unit:{unit}"]
    assert len(child["vertices"]) == counts[unit]


def test_drilldown_hash_mismatch_exit_1(runner, edges, tmp_path):
    parent_out = tmp_path / "parent"
    assert runner.invoke(main, som_args(edges, parent_out, grid="1x2")).exit_code == 0
    other = tmp_path / "other.csv"
    other.write_text("p,q,1\nq,r,1\np,r,1\n")
    res = runner.invoke(
        main,
        ["drilldown", "--input", str(other), "--out", str(tmp_path / "d"),
         "--model", str(parent_out / "model.json"), "--unit", "0"],
    )
    assert res.exit_code == 1
    assert "hash mismatch" in res.stderr


def test_drilldown_bad_unit_exit_1(runner, edges, tmp_path):
    parent_out = tmp_path / "parent"
    assert runner.invoke(main, som_args(edges, parent_out, grid="1x2")).exit_code == 0
    res = runner.invoke(
        main,
        ["drilldown", "--input", edges, "--out", str(tmp_path / "d"),
         "--model", str(parent_out / "model.json"), "--unit", "99"],
    )
    assert res.exit_code == 1


def test_drilldown_corrupt_model_exit_2(runner, edges, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{oops")
    res = runner.invoke(
        main,
        ["drilldown", "--input", edges, "--out", str(tmp_path / "d"),
         "--model", str(broken), "--unit", "0"],
    )
    assert res.exit_code == 2


# -- export-overlay ----------------------------------------------------------

def test_export_overlay(runner, edges, tmp_path):
    comm_out = tmp_path / "comm"
    som_out = tmp_path / "som"
    assert runner.invoke(main, ["communities", "--input", edges, "--out", str(comm_out)]).exit_code == 0
    assert runner.invoke(main, som_args(edges, som_out, grid="1x2")).exit_code == 0
    out = tmp_path / "overlay"
    res = runner.invoke(
        main,
        ["export-overlay", "--communities", str(comm_out / "communities.json"),
         "--model", str(som_out / "model.json"), "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    rows = read_csv(out / "crosstab.csv")
    assert rows[0] == ["community_id", "som_unit", "overlap"]
    # each 2-member community lands fully inside one unit
    assert sorted(int(r[2]) for r in rows[1:]) == [2, 2]
    dot = parse_dot((out / "overlay.dot").read_text())
    assert len(dot.nodes) == 2
    assert all(attrs["fillcolor"].startswith("#") for _, attrs in dot.nodes)


def test_export_overlay_hash_mismatch_exit_1(runner, edges, tmp_path):
    comm_out = tmp_path / "comm"
    assert runner.invoke(main, ["communities", "--input", edges, "--out", str(comm_out)]).exit_code == 0
    other = tmp_path / "other.csv"
    other.write_text("p,q,1\nq,r,1\np,r,1\n")
    som_out = tmp_path / "som"
    assert runner.invoke(main, som_args(str(other), som_out, grid="1x2")).exit_code == 0
    res = runner.invoke(
        main,
        ["export-overlay", "--communities", str(comm_out / "communities.json"),
         "--model", str(som_out / "model.json"), "--out", str(tmp_path / "o")],
    )
    assert res.exit_code == 1
    assert "different graphs" in res.stderr


def test_export_overlay_missing_inputs_exit_2(runner, tmp_path):
    res = runner.invoke(
        main,
        ["export-overlay", "--communities", str(tmp_path / "c.json"),
         "--model", str(tmp_path / "m.json"), "--out", str(tmp_path / "o")],
    )
    assert res.exit_code == 2
