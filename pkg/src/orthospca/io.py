"""Matrix CSV ingestion and result-document (de)serialization."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .exact import SparseComponent, SpcaSolution
from .linalg import IndexSet, SymMatrix

RESULT_VERSION = 1


class MatrixFormatError(ValueError):
    pass


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_matrix(text: str) -> SymMatrix:
    """Parse a square numeric CSV.

    A header row is detected by a non-numeric first token; a leading label
    column is dropped when every data row starts with a non-numeric cell.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise MatrixFormatError("matrix file is empty")
    rows = [[c.strip() for c in r] for r in rows]
    if not _is_number(rows[0][0]):
        rows = rows[1:]
        if not rows:
            raise MatrixFormatError("matrix file has a header but no data")
    if all(not _is_number(r[0]) for r in rows) and all(len(r) > 1 for r in rows):
        rows = [r[1:] for r in rows]
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise MatrixFormatError(f"row {i + 1} has {len(r)} columns, expected {width}")
    if len(rows) != width:
        raise MatrixFormatError(f"matrix is not square: {len(rows)} rows x {width} columns")
    values = np.empty((width, width))
    for i, r in enumerate(rows):
        for j, cell in enumerate(r):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise MatrixFormatError(
                    f"non-numeric cell at row {i + 1}, column {j + 1}: {cell!r}") from None
    return SymMatrix(values)


def load_matrix(path) -> SymMatrix:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return parse_matrix(fh.read())


def format_matrix(a) -> str:
    a = np.asarray(a, dtype=float)
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in a)


def write_matrix(path, a) -> None:
    Path(path).write_text(format_matrix(a), encoding="utf-8")


def component_to_dict(k: int, c: SparseComponent) -> dict:
    return {
        "k": k,
        "support": list(c.support.indices),
        "values": [float(v) for v in c.values],
        "variance": float(c.variance),
        "sparsity_relaxed": bool(c.sparsity_relaxed),
        "evaluations": int(c.evaluations),
    }


def component_from_dict(d: dict, n: int) -> SparseComponent:
    support = IndexSet(tuple(d["support"]), n)
    return SparseComponent(support, np.asarray(d["values"], dtype=float), float(d["variance"]),
                           bool(d.get("sparsity_relaxed", False)), int(d.get("evaluations", 0)))


def solution_from_document(doc: dict) -> SpcaSolution:
    n = int(doc["matrix"]["n"])
    cfg = doc["config"]
    comps = [component_from_dict(c, n) for c in doc["components"]]
    return SpcaSolution(comps, doc["matrix"].get("fingerprint", ""), int(cfg["p"]), cfg["mode"],
                        float(cfg.get("eps") or 0.0),
                        float(cfg.get("delta") or 0.0) if cfg["mode"] == "threshold" else 0.0, n)


def dump_document(doc: dict) -> str:
    # repr-based float output round-trips exactly
    return json.dumps(_finite(doc), indent=2, allow_nan=False, default=_json_default) + "\n"


def _finite(o):
    # JSON has no infinities; unbounded certificate values become null
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, (float, np.floating)) and not np.isfinite(o):
        return None
    return o


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def load_document(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def components_csv(sol: SpcaSolution) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["k", "variance", "sparsity_relaxed"] + [f"x{j}" for j in range(sol.n)])
    for k, c in enumerate(sol.components, 1):
        w.writerow([k, repr(float(c.variance)), int(c.sparsity_relaxed)]
                   + [repr(float(v)) for v in c.vector()])
    return out.getvalue()
