"""Command-line front end: ingestion -> analysis -> static export artifacts.

Exit codes: 0 success, 1 analysis-level precondition error, 2 I/O or parse
error.  ``TOOL_THREADS`` caps internal (BLAS) parallelism and must therefore
be applied before numpy is first imported, which is why the heavy imports in
this module are deferred into the command bodies.
"""

from __future__ import annotations

import csv
import json
import os
import sys

if "TOOL_THREADS" in os.environ:
    _cap = os.environ["TOOL_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _cap)

import click

from .errors import AnalysisError, InputFormatError

SCHEMA_VERSION = "1"

SWEEP_BETAS = (0.01, 0.02, 0.03, 0.04, 0.05)
SWEEP_GRIDS = tuple((s, s) for s in range(5, 11))


def _fail(exc: BaseException, code: int) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _load_graph(input_path: str, contracts: bool):
    from . import graph as G

    if not os.path.exists(input_path):
        _fail(FileNotFoundError(f"no such file: {input_path}"), 2)
    try:
        if contracts:
            records = G.load_contracts(input_path)
            return G.build_from_contracts(records)
        return G.load_edge_list(input_path)
    except InputFormatError as exc:
        _fail(exc, 2)
    except AnalysisError as exc:
        _fail(exc, 1)


def load_metadata(path: str) -> dict[str, dict[str, object]]:
    """Node metadata CSV with header ``label,date,location,family`` (all but label optional)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise InputFormatError(f"{path}: metadata CSV needs a 'label' column")
        out: dict[str, dict[str, object]] = {}
        for lineno, row in enumerate(reader, start=2):
            date = row.get("date") or None
            if date is not None:
                try:
                    date = float(date)
                except ValueError:
                    raise InputFormatError(f"{path} line {lineno}: bad date {date!r}") from None
            out[row["label"]] = {
                "date": date,
                "location": row.get("location") or None,
                "family": row.get("family") or None,
            }
    return out


def _parse_grid(text: str):
    from .som import GridTopology

    try:
        r, c = text.lower().split("x")
        return GridTopology(rows=int(r), cols=int(c))
    except (ValueError, AnalysisError) as exc:
        _fail(InputFormatError(f"bad --grid value {text!r}: {exc}"), 2)


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _date_fill(mean_date: float | None, lo: float | None, hi: float | None) -> str:
    """Linear grayscale from oldest (black) to newest (white); mid-gray fallback."""
    if mean_date is None or lo is None or hi is None:
        return "#c0c0c0"
    if hi <= lo:
        level = 128
    else:
        level = int(round(255 * (mean_date - lo) / (hi - lo)))
    return f"#{level:02x}{level:02x}{level:02x}"


@click.group()
def main() -> None:
    """Graph community extraction and kernel SOM mapping toolkit."""


_common = [
    click.option("--input", "input_path", required=True, help="Edge list or contract CSV."),
    click.option("--contracts", is_flag=True, help="Treat the input as contract records."),
    click.option("--out", "out_dir", required=True, help="Output directory."),
]


def _with_common(fn):
    for deco in reversed(_common):
        fn = deco(fn)
    return fn


@main.command()
@_with_common
def stats(input_path: str, contracts: bool, out_dir: str) -> None:
    """Graph metrology report plus cumulative degree distributions."""
    from . import graph as G
    from .serialize import graph_hash

    g = _load_graph(input_path, contracts)
    try:
        st = G.graph_stats(g)
    except AnalysisError as exc:
        _fail(exc, 1)
    os.makedirs(out_dir, exist_ok=True)
    _write_json(
        os.path.join(out_dir, "stats.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "graph_hash": graph_hash(g),
            "vertex_count": st.vertex_count,
            "edge_count": st.edge_count,
            "total_weight": st.total_weight,
            "density": st.density,
            "diameter": st.diameter,
            "mean_shortest_path": st.mean_shortest_path,
            "local_connectivity": st.local_connectivity,
            "component_count": st.component_count,
            "restricted_to_largest_component": st.restricted_to_largest_component,
        },
    )
    for weighted, name in ((False, "degree_distribution.csv"), (True, "degree_distribution_weighted.csv")):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "fraction"])
            for k, frac in G.cumulative_degree_distribution(g, weighted=weighted):
                writer.writerow([format(k, "g"), format(frac, ".17g")])
    click.echo(f"stats written to {out_dir}")


@main.command()
@_with_common
@click.option("--metadata", "metadata_path", default=None, help="Node metadata CSV.")
@click.option("--diameter-limit", default=2, show_default=True)
@click.option("--k", "k_opt", default="auto", show_default=True, help="Central vertex count or 'auto'.")
def communities(
    input_path: str,
    contracts: bool,
    out_dir: str,
    metadata_path: str | None,
    diameter_limit: int,
    k_opt: str,
) -> None:
    """Perfect communities, rich-club, central vertices and the summary DOT."""
    from . import communities as C
    from . import graph as G
    from .dotio import DotGraph
    from .serialize import graph_hash
    from .spectral import eig_sym, laplacian

    g = _load_graph(input_path, contracts)
    metadata = None
    if metadata_path is not None:
        if not os.path.exists(metadata_path):
            _fail(FileNotFoundError(f"no such file: {metadata_path}"), 2)
        try:
            metadata = load_metadata(metadata_path)
        except InputFormatError as exc:
            _fail(exc, 2)
    try:
        if not g.is_connected():
            click.echo("input graph disconnected; restricting to largest component", err=True)
            g = G.largest_connected_component(g)
        k = None if k_opt == "auto" else int(k_opt)
        comms = C.find_perfect_communities(g)
        decomp = eig_sym(laplacian(g, "unweighted").matrix)
        reports = [C.verify_community_spectral(g, comm, decomp) for comm in comms]
        club = C.rich_club(g, diameter_limit=diameter_limit)
        centrals = C.central_vertices(g, comms, club, k=k)
        summary = C.summary_graph(g, comms, club, centrals, node_metadata=metadata)
    except ValueError as exc:
        _fail(InputFormatError(f"bad --k value {k_opt!r}"), 2)
    except AnalysisError as exc:
        _fail(exc, 1)

    os.makedirs(out_dir, exist_ok=True)
    ghash = graph_hash(g)
    _write_json(
        os.path.join(out_dir, "communities.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "graph_hash": ghash,
            "communities": [
                {
                    "id": f"community_{i}",
                    "members": list(c.members),
                    "outside_neighbors": list(c.outside_neighbors),
                    "inside_degree": c.inside_degree,
                    "expected_eigenvalue": c.expected_eigenvalue,
                }
                for i, c in enumerate(comms)
            ],
            "rich_club": {
                "members": list(club.members),
                "density_curve": [[s, d] for s, d in club.density_curve],
                "diameter_limit": club.diameter_limit,
            },
            "central_vertices": {
                "ranked": list(centrals.ranked_vertices),
                "component_curve": [[a, b] for a, b in centrals.component_curve],
                "chosen_k": centrals.chosen_k,
                "chosen": list(centrals.chosen_vertices),
            },
        },
    )
    _write_json(
        os.path.join(out_dir, "verification.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "graph_hash": ghash,
            "tolerance": 1e-8,
            "reports": [
                {
                    "community_id": f"community_{i}",
                    "members": list(rep.members),
                    "expected_eigenvalue": rep.expected_eigenvalue,
                    "residuals": list(rep.residuals),
                    "max_residual": rep.max_residual,
                    "multiplicity": rep.multiplicity,
                    "required_multiplicity": rep.required_multiplicity,
                    "constancy_max_deviation": rep.constancy_max_deviation,
                    "verified": rep.verified,
                }
                for i, rep in enumerate(reports)
            ],
        },
    )

    dates = [gl.mean_date for gl in summary.glyphs if gl.mean_date is not None]
    lo = min(dates) if dates else None
    hi = max(dates) if dates else None
    shapes = {"community": "circle", "rich_club": "box", "central": "square"}
    dot = DotGraph(name="summary")
    for gl in summary.glyphs:
        attrs = {
            "shape": shapes[gl.kind],
            "label": str(gl.size) if gl.kind != "central" else gl.members[0],
            "kind": gl.kind,
        }
        if metadata:
            attrs["style"] = "filled"
            attrs["fillcolor"] = _date_fill(gl.mean_date, lo, hi)
        if gl.dominant_family:
            attrs["family"] = gl.dominant_family
        if gl.dominant_location:
            attrs["location"] = gl.dominant_location
        if gl.isolated:
            attrs["isolated"] = "true"
        dot.add_node(gl.ident, **attrs)
    for a, b, w in summary.edges:
        dot.add_edge(a, b, weight=format(w, "g"))
    with open(os.path.join(out_dir, "summary.dot"), "w", encoding="utf-8") as fh:
        fh.write(dot.to_text())
    click.echo(f"communities written to {out_dir}")


def _som_artifacts(g, kernel, model, out_dir: str, prefix: str = "") -> None:
    from . import som as S
    from .dotio import DotGraph
    from .serialize import graph_hash, model_to_json

    os.makedirs(out_dir, exist_ok=True)
    ghash = graph_hash(g)
    with open(os.path.join(out_dir, prefix + "model.json"), "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model, ghash))
        fh.write("\n")
    with open(
        os.path.join(out_dir, prefix + "assignment.csv"), "w", encoding="utf-8", newline=""
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "unit"])
        for lab, unit in zip(model.vertex_labels, model.assignment):
            writer.writerow([lab, int(unit)])

    sizes = model.unit_sizes()
    inter: dict[tuple[int, int], float] = {}
    for i, j, w in g.edges():
        a = int(model.assignment[i])
        b = int(model.assignment[j])
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        inter[key] = inter.get(key, 0.0) + w
    dot = DotGraph(name="som_map")
    max_size = int(sizes.max()) if sizes.size else 1
    for j in range(model.config.grid.units):
        if sizes[j] == 0:
            continue
        r, c = divmod(j, model.config.grid.cols)
        width = 0.3 + 1.2 * (sizes[j] / max_size) ** 0.5
        dot.add_node(
            f"unit_{j}",
            shape="square",
            label=str(int(sizes[j])),
            pos=f"{c},{r}!",
            width=format(width, ".3f"),
        )
    for (a, b), w in sorted(inter.items()):
        dot.add_edge(f"unit_{a}", f"unit_{b}", weight=format(w, "g"))
    with open(os.path.join(out_dir, prefix + "map.dot"), "w", encoding="utf-8") as fh:
        fh.write(dot.to_text())

    um = S.u_matrix(kernel, model)
    with open(
        os.path.join(out_dir, prefix + "umatrix.csv"), "w", encoding="utf-8", newline=""
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "row", "col", "mean_neighbor_distance"])
        for j in range(model.config.grid.units):
            r, c = divmod(j, model.config.grid.cols)
            writer.writerow([j, r, c, format(um[j], ".17g")])

    rep = S.quality_report(g, kernel, model)
    _write_json(
        os.path.join(out_dir, prefix + "quality.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "graph_hash": ghash,
            "quantization_error": rep.quantization_error,
            "kaski_lagus": rep.kaski_lagus,
            "kaski_lagus_skip_reason": rep.kaski_lagus_skip_reason,
            "q_modularity": rep.q_modularity,
            "q_modularity_skip_reason": rep.q_modularity_skip_reason,
            "nonempty_units": rep.nonempty_units,
            "unit_sizes": list(rep.unit_sizes),
        },
    )


@main.command()
@_with_common
@click.option("--beta", default=0.05, show_default=True)
@click.option("--grid", "grid_text", default="7x7", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--init", default="kernel_pca", show_default=True, type=click.Choice(["kernel_pca", "random"]))
@click.option("--select", "select_mode", is_flag=True, help="Sweep beta x grid sizes and emit a ranking table.")
def som(
    input_path: str,
    contracts: bool,
    out_dir: str,
    beta: float,
    grid_text: str,
    seed: int,
    init: str,
    select_mode: bool,
) -> None:
    """Train a batch kernel SOM and export model, map, U-matrix and quality."""
    from . import graph as G
    from . import som as S
    from .kernel import diffusion_kernel
    from .spectral import eig_sym, laplacian

    g = _load_graph(input_path, contracts)
    try:
        if not g.is_connected():
            click.echo("input graph disconnected; restricting to largest component", err=True)
            g = G.largest_connected_component(g)
        decomp = eig_sym(laplacian(g, "weighted").matrix)
        if select_mode:
            os.makedirs(out_dir, exist_ok=True)
            rows = []
            for b in SWEEP_BETAS:
                kern = diffusion_kernel(decomp, b)
                for r, c in SWEEP_GRIDS:
                    cfg = S.SomConfig(grid=S.GridTopology(r, c), init=init, seed=seed)
                    model = S.train(kern, cfg, vertex_labels=g.vertices, beta=b)
                    rep = S.quality_report(g, kern, model)
                    rows.append(
                        (b, f"{r}x{c}", rep.quantization_error, rep.kaski_lagus, rep.q_modularity, rep.nonempty_units)
                    )
            rows.sort(key=lambda t: (t[3] if t[3] is not None else float("inf")))
            with open(os.path.join(out_dir, "selection.csv"), "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["beta", "grid", "quantization_error", "kaski_lagus", "q_modularity", "nonempty_units"])
                for b, gr, qe, kl, qm, ne in rows:
                    writer.writerow([b, gr, format(qe, ".17g"),
                                     format(kl, ".17g") if kl is not None else "",
                                     format(qm, ".17g") if qm is not None else "", ne])
            click.echo(f"selection table written to {out_dir}")
            return
        grid = _parse_grid(grid_text)
        kern = diffusion_kernel(decomp, beta)
        cfg = S.SomConfig(grid=grid, init=init, seed=seed)
        model = S.train(kern, cfg, vertex_labels=g.vertices, beta=beta)
    except AnalysisError as exc:
        _fail(exc, 1)
    _som_artifacts(g, kern, model, out_dir)
    click.echo(f"som artifacts written to {out_dir}")


@main.command()
@_with_common
@click.option("--model", "model_path", required=True, help="Parent model JSON.")
@click.option("--unit", required=True, type=int, help="Parent unit to drill into.")
@click.option("--grid", "grid_text", default="7x7", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--init", default="kernel_pca", show_default=True, type=click.Choice(["kernel_pca", "random"]))
def drilldown(
    input_path: str,
    contracts: bool,
    out_dir: str,
    model_path: str,
    unit: int,
    grid_text: str,
    seed: int,
    init: str,
) -> None:
    """Train a child map on the subgraph of one parent cluster."""
    from . import graph as G
    from . import som as S
    from .kernel import diffusion_kernel
    from .serialize import graph_hash, model_from_json
    from .spectral import eig_sym, laplacian

    g = _load_graph(input_path, contracts)
    if not os.path.exists(model_path):
        _fail(FileNotFoundError(f"no such file: {model_path}"), 2)
    try:
        with open(model_path, "r", encoding="utf-8") as fh:
            parent, parent_hash = model_from_json(fh.read())
    except InputFormatError as exc:
        _fail(exc, 2)
    try:
        if not g.is_connected():
            g = G.largest_connected_component(g)
        if parent_hash and parent_hash != graph_hash(g):
            raise AnalysisError("model was trained on a different graph (vertex-set hash mismatch)")
        grid = _parse_grid(grid_text)
        cfg = S.SomConfig(grid=grid, init=init, seed=seed)
        child, sub = S.hierarchical_som(g, parent, unit, cfg, beta=parent.beta)
        decomp = eig_sym(laplacian(sub, "weighted").matrix)
        kern = diffusion_kernel(decomp, parent.beta)
    except AnalysisError as exc:
        _fail(exc, 1)
    _som_artifacts(sub, kern, child, out_dir, prefix=f"drill_unit{unit}_")
    click.echo(f"drilldown artifacts written to {out_dir}")


@main.command("export-overlay")
@click.option("--communities", "communities_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--out", "out_dir", required=True)
def export_overlay(communities_path: str, model_path: str, out_dir: str) -> None:
    """Color communities by their dominant SOM unit; emit cross-tab CSV + DOT."""
    from .dotio import DotGraph
    from .serialize import model_from_json

    for path in (communities_path, model_path):
        if not os.path.exists(path):
            _fail(FileNotFoundError(f"no such file: {path}"), 2)
    try:
        with open(communities_path, "r", encoding="utf-8") as fh:
            cdoc = json.load(fh)
        with open(model_path, "r", encoding="utf-8") as fh:
            model, model_hash = model_from_json(fh.read())
    except (json.JSONDecodeError, InputFormatError) as exc:
        _fail(InputFormatError(f"unreadable artifact: {exc}"), 2)
    try:
        if cdoc.get("graph_hash") and model_hash and cdoc["graph_hash"] != model_hash:
            raise AnalysisError("communities and model come from different graphs")
        unit_of = {lab: int(u) for lab, u in zip(model.vertex_labels, model.assignment)}
        crosstab: list[tuple[str, int, int]] = []
        dominant: dict[str, int] = {}
        for comm in cdoc.get("communities", []):
            counts: dict[int, int] = {}
            for member in comm["members"]:
                if member not in unit_of:
                    raise AnalysisError(f"community member {member!r} missing from model")
                counts[unit_of[member]] = counts.get(unit_of[member], 0) + 1
            for unit in sorted(counts):
                crosstab.append((comm["id"], unit, counts[unit]))
            dominant[comm["id"]] = max(sorted(counts), key=lambda u: counts[u])
    except (KeyError, TypeError) as exc:
        _fail(InputFormatError(f"malformed communities JSON: {exc}"), 2)
    except AnalysisError as exc:
        _fail(exc, 1)

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "crosstab.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community_id", "som_unit", "overlap"])
        for cid, unit, count in crosstab:
            writer.writerow([cid, unit, count])

    palette = [
        "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
        "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
        "#9a6324", "#fffac8", "#800000", "#aaffc3",
    ]
    unit_color = {
        u: palette[i % len(palette)]
        for i, u in enumerate(sorted(set(dominant.values())))
    }
    dot = DotGraph(name="overlay")
    for comm in cdoc.get("communities", []):
        cid = comm["id"]
        dot.add_node(
            cid,
            shape="circle",
            label=str(len(comm["members"])),
            style="filled",
            fillcolor=unit_color[dominant[cid]],
            unit=str(dominant[cid]),
        )
    with open(os.path.join(out_dir, "overlay.dot"), "w", encoding="utf-8") as fh:
        fh.write(dot.to_text())
    click.echo(f"overlay written to {out_dir}")


if __name__ == "__main__":
    main()
