"""JSON model documents.

``{"family": "tree"|"comb"|"tree+loop"|"finite", "m"|"alpha": int, "lambda": float,
"loop_rate": float?, "explicit_laws": [...]?}``

Finite models list one entry per vertex::

    {"vertex": "a", "law": [{"prob": 0.25, "children": {}},
                            {"prob": 0.75, "children": {"a": 2}}]}
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .core import ExplicitLaw, FiniteModel
from .errors import InvalidLaw
from .geometry import CombGraph, TreeGraph


def build_model(doc: dict, lam: float | None = None):
    family = doc.get("family")
    if lam is None:
        lam = doc.get("lambda")
    if family in ("tree", "tree+loop"):
        return TreeGraph(int(doc.get("m", 3)), float(lam), doc.get("loop_rate", 0) or 0)
    if family == "comb":
        return CombGraph(doc.get("alpha", 1), float(lam))
    if family == "finite":
        laws = {}
        for entry in doc.get("explicit_laws", []):
            v = str(entry["vertex"])
            pairs = [(item.get("children", {}), item["prob"]) for item in entry["law"]]
            laws[v] = ExplicitLaw.from_pairs(v, pairs, order=str)
        if not laws:
            raise InvalidLaw("finite model needs explicit_laws")
        return FiniteModel(laws)
    raise InvalidLaw(f"unknown model family {family!r}")


def load_model(path, lam: float | None = None):
    doc = read_model_doc(path)
    return build_model(doc, lam), doc


def read_model_doc(path) -> dict:
    p = Path(path)
    if not p.exists():
        shipped = resources.files("brwext") / "models" / (p.name if p.suffix else p.name + ".json")
        if shipped.is_file():
            return json.loads(shipped.read_text())
    return json.loads(p.read_text())


def shipped_models() -> list[str]:
    folder = resources.files("brwext") / "models"
    return sorted(f.name[:-5] for f in folder.iterdir() if f.name.endswith(".json"))
