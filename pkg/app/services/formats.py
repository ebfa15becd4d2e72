"""Text formats for graphs, blow-up labels, F_p^n functions, tricolor triples and deletion traces.

Every reader skips blank lines and ``#`` comments and raises ``ParseError``
with the 1-based line number of the offending line.
"""

import hashlib
import json
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ParseError, PreconditionError, WorkbenchError
from ..models.fpn import DensityFunction, FpnSpace
from ..models.graph import BlowupLabeling, BlowupVertex, Graph
from ..models.schemas import DeletionStep, ExperimentReport, TricolorTriple
from .removal_engine import format_trace

FORMATS = ("edge-list", "function", "tricolor", "trace")


def _records(text: str) -> Iterator[Tuple[int, List[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield lineno, body.split()


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", lineno) from None


def _header(records: Iterator[Tuple[int, List[str]]], fields: int, what: str) -> Tuple[int, List[int]]:
    try:
        lineno, tokens = next(records)
    except StopIteration:
        raise ParseError(f"missing {what} header") from None
    if len(tokens) != fields:
        raise ParseError(f"{what} header needs {fields} fields, got {len(tokens)}", lineno)
    return lineno, [_int(t, lineno) for t in tokens]


# Edge lists

def read_edge_list(text: str) -> Graph:
    """``n m`` followed by ``m`` lines ``u v`` (0-based)."""
    records = _records(text)
    header_line, (n, m) = _header(records, 2, "edge-list")
    if n < 0 or m < 0:
        raise ParseError("vertex and edge counts must be non-negative", header_line)
    edges = []
    seen = set()
    for lineno, tokens in records:
        if len(tokens) != 2:
            raise ParseError(f"edge line needs 2 fields, got {len(tokens)}", lineno)
        u, v = (_int(t, lineno) for t in tokens)
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"edge ({u}, {v}) outside [0, {n})", lineno)
        if u == v:
            raise ParseError(f"loop at vertex {u}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {key}", lineno)
        seen.add(key)
        edges.append(key)
    if len(edges) != m:
        raise ParseError(f"header announces {m} edges, found {len(edges)}", header_line)
    return Graph.from_edges(n, edges)


def write_edge_list(g: Graph, comment: Optional[str] = None) -> str:
    lines = [f"# {comment}"] if comment else []
    lines.append(f"{g.n} {g.edge_count}")
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def write_blowup_labels(labeling: BlowupLabeling) -> str:
    """One ``index base:bitstring`` line per blow-up vertex."""
    lines = [f"{labeling.base_size} {labeling.copies}"]
    lines.extend(f"{k} {labeling.vertex(k).label()}" for k in range(labeling.size))
    return "\n".join(lines) + "\n"


def read_blowup_labels(text: str) -> Tuple[BlowupLabeling, List[BlowupVertex]]:
    records = _records(text)
    _, (base_size, copies) = _header(records, 2, "label")
    labeling = BlowupLabeling(base_size, copies)
    vertices: List[BlowupVertex] = []
    for lineno, tokens in records:
        if len(tokens) != 2 or ":" not in tokens[1]:
            raise ParseError("label line must read 'index base:bits'", lineno)
        index = _int(tokens[0], lineno)
        base, bits = tokens[1].split(":", 1)
        if len(bits) != copies or set(bits) - {"0", "1"}:
            raise ParseError(f"bit string {bits!r} is not {copies} binary digits", lineno)
        vertex = BlowupVertex(_int(base, lineno), tuple(int(b) for b in bits))
        if index != len(vertices) or labeling.vertex(index) != vertex:
            raise ParseError(f"label {tokens[1]} does not match index {index}", lineno)
        vertices.append(vertex)
    if len(vertices) != labeling.size:
        raise ParseError(f"expected {labeling.size} labels, found {len(vertices)}")
    return labeling, vertices


# F_p^n sets and functions

def _digit_string(space: FpnSpace, index: int) -> str:
    return "".join(str(d) for d in space.digits(index))


def _parse_point(space: FpnSpace, token: str, lineno: int) -> int:
    if len(token) != space.n or not token.isdigit() or any(int(c) >= space.p for c in token):
        raise ParseError(f"{token!r} is not a point of F_{space.p}^{space.n}", lineno)
    return space.index([int(c) for c in token])


def _space(p: int, n: int, lineno: int) -> FpnSpace:
    if n < 1:
        raise ParseError("dimension must be at least 1", lineno)
    try:
        return FpnSpace(p=p, n=n)
    except WorkbenchError as e:
        raise ParseError(str(e), lineno) from e


def read_function(text: str) -> DensityFunction:
    """``p n`` then ``point value`` lines, or a single compact ``elements:`` line for an indicator.

    Points are big-endian base-p digit strings; unlisted points have value 0.
    """
    records = _records(text)
    header_line, (p, n) = _header(records, 2, "function")
    space = _space(p, n, header_line)
    values = np.zeros(space.size)
    listed = set()
    compact = False
    for lineno, tokens in records:
        if tokens[0] == "elements:":
            if compact or listed:
                raise ParseError("compact form must be the only body line", lineno)
            compact = True
            for token in tokens[1:]:
                point = _parse_point(space, token, lineno)
                if point in listed:
                    raise ParseError(f"duplicate point {token}", lineno)
                listed.add(point)
                values[point] = 1.0
            continue
        if compact:
            raise ParseError("compact form must be the only body line", lineno)
        if len(tokens) != 2:
            raise ParseError(f"function line needs 2 fields, got {len(tokens)}", lineno)
        point = _parse_point(space, tokens[0], lineno)
        if point in listed:
            raise ParseError(f"duplicate point {tokens[0]}", lineno)
        try:
            value = float(tokens[1])
        except ValueError:
            raise ParseError(f"expected a number, got {tokens[1]!r}", lineno) from None
        if not 0.0 <= value <= 1.0:
            raise ParseError(f"value {value} outside [0, 1]", lineno)
        listed.add(point)
        values[point] = value
    return DensityFunction(space, values)


def write_function(f: DensityFunction, form: str = "table") -> str:
    """Write ``f`` as a table of its nonzero values or, for indicators, in compact form."""
    space = f.space
    if space.n < 1:
        raise PreconditionError("the function format needs dimension at least 1")
    lines = [f"{space.p} {space.n}"]
    support = [int(k) for k in f.support()]
    if form == "compact":
        if not f.is_indicator:
            raise PreconditionError("compact form is only defined for indicator functions")
        lines.append(" ".join(["elements:"] + [_digit_string(space, k) for k in support]))
    elif form == "table":
        lines.extend(f"{_digit_string(space, k)} {float(f.values[k])!r}" for k in support)
    else:
        raise PreconditionError(f"unknown function form {form!r}")
    return "\n".join(lines) + "\n"


# Tricolor triples

def read_tricolor(text: str) -> TricolorTriple:
    """``p n l`` then the ``l`` points of x, the ``l`` of y and the ``l`` of z, one per line."""
    records = _records(text)
    header_line, (p, n, l) = _header(records, 3, "tricolor")
    space = _space(p, n, header_line)
    points: List[int] = []
    for lineno, tokens in records:
        if len(tokens) != 1:
            raise ParseError("tricolor lines hold a single point", lineno)
        points.append(_parse_point(space, tokens[0], lineno))
    if len(points) != 3 * l:
        raise ParseError(f"expected {3 * l} points, found {len(points)}", header_line)
    return TricolorTriple(space=space, xs=tuple(points[:l]), ys=tuple(points[l : 2 * l]), zs=tuple(points[2 * l :]))


def write_tricolor(t: TricolorTriple) -> str:
    space = t.space
    lines = [f"{space.p} {space.n} {t.length}"]
    for name, seq in (("x", t.xs), ("y", t.ys), ("z", t.zs)):
        lines.append(f"# {name}")
        lines.extend(_digit_string(space, k) for k in seq)
    return "\n".join(lines) + "\n"


# Deletion traces

def read_trace(text: str) -> List[DeletionStep]:
    """Inverse of ``format_trace``: lines ``step u-v beta threshold``."""
    steps = []
    for lineno, tokens in _records(text):
        if len(tokens) != 4 or tokens[1].count("-") != 1 or tokens[2].count("/") != 1:
            raise ParseError("trace line must read 'step u-v beta threshold'", lineno)
        u, v = (_int(x, lineno) for x in tokens[1].split("-"))
        try:
            threshold = float(tokens[3])
        except ValueError:
            raise ParseError(f"expected a number, got {tokens[3]!r}", lineno) from None
        steps.append(
            DeletionStep(step=_int(tokens[0], lineno), edge=(u, v), beta=tokens[2], threshold=threshold)
        )
    return steps


def write_trace(trace: Sequence[DeletionStep]) -> str:
    return "".join(line + "\n" for line in format_trace(trace))


def convert_text(text: str, kind: str, form: Optional[str] = None) -> str:
    """Parse ``text`` as ``kind`` and write it back out (``form`` picks the function layout)."""
    if kind == "edge-list":
        return write_edge_list(read_edge_list(text))
    if kind == "function":
        f = read_function(text)
        return write_function(f, form or ("compact" if f.is_indicator else "table"))
    if kind == "tricolor":
        return write_tricolor(read_tricolor(text))
    if kind == "trace":
        return write_trace(read_trace(text))
    raise PreconditionError(f"unknown format {kind!r}; expected one of {', '.join(FORMATS)}")


# Experiment reports

REPORT_SCHEMA = "triangle-lemma-workbench/report"


def _dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def report_lines(report: ExperimentReport, with_timing: bool = True) -> List[str]:
    """JSON-lines form: schema header, inputs, one line per measurement and check, timing last.

    Everything before the timing line is a pure function of the inputs and seed.
    """
    data = report.model_dump(mode="json")
    lines = [
        _dumps({"schema": REPORT_SCHEMA, "version": report.schema_version, "experiment": report.experiment}),
        _dumps({"kind": "inputs", "seed": report.seed, **data["inputs"]}),
    ]
    lines.extend(_dumps({"kind": "measurement", "name": k, "value": v}) for k, v in data["measurements"].items())
    lines.extend(_dumps({"kind": "check", **c}) for c in data["checks"])
    lines.append(_dumps({"kind": "summary", "checks": len(report.checks), "passed": report.passed}))
    if with_timing:
        lines.append(_dumps({"kind": "timing", **data["timing"]}))
    return lines


def report_text(report: ExperimentReport) -> str:
    out = [f"experiment {report.experiment} (seed {report.seed})"]
    for name, value in report.measurements.items():
        out.append(f"  {name}: {value}")
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        out.append(f"  [{mark}] {c.name}: {c.lhs:.6g} {c.relation} {c.rhs:.6g}  ({c.reference})")
    out.append(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed")
    return "\n".join(out) + "\n"


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
