"""Embedding files, report documents and trace CSVs.

Two embedding formats are supported:

* ``csv``: one row per vector, ``.``-decimal reals separated by commas, with
  an optional first line starting with ``#``.
* ``bin-f64``: the 8 ASCII bytes ``FIMEFF01``, then ``n`` and ``d`` as
  little-endian uint64, then ``n*d`` little-endian float64 values in
  row-major order.

Report documents are JSON trees whose reals are written with 17
significant digits, so ``loads(dumps(doc))`` restores every float bit for
bit.
"""

from __future__ import annotations

import json
import math
import re
import struct
from pathlib import Path

import numpy as np

from .barlow import TRACE_COLUMNS, BtLossBreakdown, TraceRecord, TrainingTrace
from .errors import InputError, ParseError
from .fim import EfficiencyReport
from .lab import ValidationResult

SCHEMA_VERSION = "1"
MAGIC = b"FIMEFF01"
HEADER = struct.Struct("<8sQQ")
FORMATS = ("csv", "bin-f64")

_REAL = re.compile(r"^\s*[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\s*$")


# -- embedding files ---------------------------------------------------------


def sniff_format(path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return "bin-f64" if head == MAGIC else "csv"


def read_embeddings(path, fmt: str | None = None) -> np.ndarray:
    """Load an n x d matrix from ``path``; ``fmt=None`` sniffs the magic bytes."""
    if fmt is None:
        fmt = sniff_format(path)
    if fmt == "csv":
        with open(path, "rb") as fh:
            return parse_csv(fh.read())
    if fmt == "bin-f64":
        with open(path, "rb") as fh:
            return parse_bin(fh.read())
    raise InputError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def parse_csv(data: bytes) -> np.ndarray:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("non-ASCII byte in CSV", f"byte {exc.start}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    start = 1 if lines and lines[0].startswith("#") else 0
    rows = []
    width = None
    for lineno in range(start, len(lines)):
        line = lines[lineno].rstrip("\r")
        fields = line.split(",")
        for col, tok in enumerate(fields):
            if not _REAL.match(tok):
                raise ParseError(f"bad real {tok!r} in column {col}", f"line {lineno + 1}")
        values = [float(tok) for tok in fields]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"expected {width} fields, found {len(values)}", f"line {lineno + 1}")
        if not all(math.isfinite(v) for v in values):
            raise ParseError("value overflows float64", f"line {lineno + 1}")
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", "line 1")
    return np.array(rows, dtype=np.float64)


def parse_bin(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise ParseError(f"file shorter than the {HEADER.size}-byte header", f"byte {len(data)}")
    magic, n, d = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", "byte 0")
    if n == 0 or d == 0:
        raise ParseError(f"empty matrix n={n} d={d}", "byte 8")
    expected = HEADER.size + 8 * n * d
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes for n={n} d={d}, got {len(data)}", f"byte {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ParseError("non-finite value", f"byte {HEADER.size + 8 * int(bad[0])}")
    return values.reshape(n, d)


def format_real(x: float) -> str:
    """17-significant-digit text for a float, always recognisable as a real."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def write_csv(path, z, header: str | None = None):
    z = np.asarray(z, dtype=np.float64)
    with open(path, "w", newline="\n") as fh:
        if header is not None:
            fh.write("# " + header + "\n")
        for row in z:
            fh.write(",".join(format_real(v) for v in row) + "\n")


def write_bin(path, z):
    z = np.ascontiguousarray(z, dtype="<f8")
    n, d = z.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, d))
        fh.write(z.tobytes())


def write_embeddings(path, z, fmt: str = "csv"):
    if fmt == "csv":
        write_csv(path, z)
    elif fmt == "bin-f64":
        write_bin(path, z)
    else:
        raise InputError(f"unknown format {fmt!r}")


# -- report documents ----------------------------------------------------------


def _plain(x):
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def to_tree(obj) -> dict:
    """Flatten a report object into a JSON-ready tree tagged with ``type``."""
    if isinstance(obj, EfficiencyReport):
        return {
            "type": "efficiency_report",
            "cov_eigenvalues": _plain(obj.cov_eigenvalues),
            "fim_eigenvalues": _plain(obj.fim_eigenvalues),
            "epsilon": float(obj.epsilon),
            "d_eff": int(obj.d_eff),
            "eta": float(obj.eta),
            "condition_number": float(obj.condition_number),
            "offdiag_mass": None if obj.offdiag_mass is None else float(obj.offdiag_mass),
            "null_dimensions": int(obj.null_dimensions),
        }
    if isinstance(obj, BtLossBreakdown):
        return {
            "type": "bt_loss",
            "invariance": float(obj.invariance),
            "redundancy": float(obj.redundancy),
            "lambda": float(obj.lam),
            "total": float(obj.total),
        }
    if isinstance(obj, ValidationResult):
        return {
            "type": "validation_result",
            "name": obj.name,
            "passed": bool(obj.passed),
            "measured": _plain(obj.measured),
            "tolerance": _plain(obj.tolerance),
            "config": _plain(obj.config),
            "extras": _plain(obj.extras),
        }
    if isinstance(obj, TrainingTrace):
        return {
            "type": "training_trace",
            "columns": list(TRACE_COLUMNS),
            "rows": [[getattr(r, c) for c in TRACE_COLUMNS] for r in obj.records],
        }
    raise InputError(f"cannot serialise {type(obj).__name__}")


def _floats(xs):
    return np.array([float(v) for v in xs], dtype=np.float64)


def from_tree(tree: dict):
    kind = tree.get("type")
    if kind == "efficiency_report":
        mass = tree["offdiag_mass"]
        return EfficiencyReport(
            cov_eigenvalues=_floats(tree["cov_eigenvalues"]),
            fim_eigenvalues=_floats(tree["fim_eigenvalues"]),
            epsilon=float(tree["epsilon"]),
            d_eff=int(tree["d_eff"]),
            eta=float(tree["eta"]),
            condition_number=float(tree["condition_number"]),
            offdiag_mass=None if mass is None else float(mass),
            null_dimensions=int(tree["null_dimensions"]),
        )
    if kind == "bt_loss":
        return BtLossBreakdown(
            float(tree["invariance"]), float(tree["redundancy"]), float(tree["lambda"]), float(tree["total"])
        )
    if kind == "validation_result":
        res = ValidationResult(tree["name"], tree["measured"], tree["tolerance"], tree["config"], tree["extras"])
        if res.passed != tree["passed"]:
            raise InputError("stored pass flag disagrees with measured deviations")
        return res
    if kind == "training_trace":
        trace = TrainingTrace()
        for row in tree["rows"]:
            rec = dict(zip(tree["columns"], row))
            trace.append(TraceRecord(int(rec.pop("step")), **{k: float(v) for k, v in rec.items()}))
        return trace
    raise InputError(f"unknown document node type {kind!r}")


def _emit(x, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format_real(x)
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in x):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in x) + "]"
        items = [pad + _emit(v, indent, level + 1) for v in x]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise InputError(f"cannot encode {type(x).__name__}")


def make_document(command: str, **sections) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "command": command}
    for key, value in sections.items():
        doc[key] = to_tree(value) if hasattr(value, "__dataclass_fields__") else _plain(value)
    return doc


def dumps(doc, indent: int = 2) -> str:
    return _emit(_plain(doc), indent, 0) + "\n"


def loads(text: str):
    return json.loads(text)


def serialize(obj) -> str:
    """Standalone document for one report object."""
    return dumps({"schema_version": SCHEMA_VERSION, **to_tree(obj)})


def parse(text: str):
    tree = loads(text)
    if tree.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {tree.get('schema_version')!r}")
    return from_tree(tree)


# -- traces ------------------------------------------------------------------------


def trace_to_csv(trace: TrainingTrace) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for r in trace.records:
        lines.append(",".join([str(r.step)] + [format_real(getattr(r, c)) for c in TRACE_COLUMNS[1:]]))
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace: TrainingTrace):
    Path(path).write_text(trace_to_csv(trace), newline="\n")


def read_trace_csv(path) -> TrainingTrace:
    lines = Path(path).read_text().strip().split("\n")
    if tuple(lines[0].split(",")) != TRACE_COLUMNS:
        raise ParseError("unexpected trace header", "line 1")
    trace = TrainingTrace()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(TRACE_COLUMNS):
            raise ParseError("wrong field count", f"line {lineno}")
        trace.append(TraceRecord(int(fields[0]), *(float(f) for f in fields[1:])))
    return trace
