"""JSON artifact schemas shared by the library and the CLI.

All reports carry ``schema_version`` (currently "1") and, where two artifacts
must describe the same graph, a ``graph_hash`` over the sorted vertex labels.
The prototype matrix is written with 17 significant digits so a reloaded model
reproduces training output bit for bit.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .errors import InputFormatError
from .graph import WeightedGraph
from .som import GridTopology, IterationRecord, SomConfig, SomModel

SCHEMA_VERSION = "1"


def graph_hash(g: WeightedGraph) -> str:
    h = hashlib.sha1()
    for lab in sorted(g.vertices):
        h.update(lab.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(model: SomModel, ghash: str) -> str:
    """Serialize a trained model; gamma entries carry 17 significant digits."""
    cfg = model.config
    doc = {
        "schema_version": SCHEMA_VERSION,
        "graph_hash": ghash,
        "config": {
            "rows": cfg.grid.rows,
            "cols": cfg.grid.cols,
            "t0": cfg.t0,
            "anneal_ratio": cfg.anneal_ratio,
            "final_epsilon": cfg.final_epsilon,
            "max_outer_iterations": cfg.max_outer_iterations,
            "init": cfg.init,
            "seed": cfg.seed,
        },
        "beta": model.beta,
        "vertices": list(model.vertex_labels),
        "assignment": [int(a) for a in model.assignment],
        "iteration_log": [
            {
                "temperature": rec.temperature,
                "changes": rec.changes,
                "phase": rec.phase,
                "quantization_error": rec.quantization_error,
            }
            for rec in model.iteration_log
        ],
        "lineage": list(model.lineage),
        "gamma": "@GAMMA@",
    }
    gamma_text = (
        "["
        + ", ".join(
            "[" + ", ".join(_fmt(x) for x in row) + "]" for row in model.gamma
        )
        + "]"
    )
    text = json.dumps(doc, indent=2, sort_keys=True)
    return text.replace('"@GAMMA@"', gamma_text)


def model_from_json(text: str) -> tuple[SomModel, str]:
    """Load a model plus its graph hash."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"model JSON unreadable: {exc}") from None
    try:
        cfg_doc = doc["config"]
        config = SomConfig(
            grid=GridTopology(rows=cfg_doc["rows"], cols=cfg_doc["cols"]),
            t0=cfg_doc["t0"],
            anneal_ratio=cfg_doc["anneal_ratio"],
            final_epsilon=cfg_doc["final_epsilon"],
            max_outer_iterations=cfg_doc["max_outer_iterations"],
            init=cfg_doc["init"],
            seed=cfg_doc["seed"],
        )
        model = SomModel(
            config=config,
            beta=float(doc["beta"]),
            vertex_labels=tuple(doc["vertices"]),
            gamma=np.array(doc["gamma"], dtype=float),
            assignment=np.array(doc["assignment"], dtype=int),
            iteration_log=tuple(
                IterationRecord(
                    temperature=rec["temperature"],
                    changes=rec["changes"],
                    phase=rec["phase"],
                    quantization_error=rec.get("quantization_error"),
                )
                for rec in doc["iteration_log"]
            ),
            lineage=tuple(doc.get("lineage", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"model JSON missing or malformed field: {exc}") from None
    return model, doc.get("graph_hash", "")
