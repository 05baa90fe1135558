"""Per-type count series, Pearson correlation matrices and scenario graphs."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import IO, Union

import numpy as np

from .alert_model import CandidateGroup, ClassifiedAlert, CorrelationMatrix, Edge, Node, ScenarioGraph
from .errors import InputError

DEFAULT_BIN_WIDTH = 60.0
DEFAULT_THETA = 0.5
UNDEFINED_CSV = "NA"


class EdgeMode(str, Enum):
    ADJACENT = "adjacent"
    ANY_FORWARD = "any-forward"


class SignMode(str, Enum):
    ABS = "abs"
    POSITIVE = "positive"


@dataclass(frozen=True)
class CountSeries:
    alert_type: str
    bins: tuple[int, ...]
    bin_width: float
    origin: float

    def __len__(self) -> int:
        return len(self.bins)

    @property
    def total(self) -> int:
        return sum(self.bins)


def _type_order(members: Iterable[ClassifiedAlert]) -> list[tuple[str, int]]:
    """Distinct (type, stage) pairs ordered by stage, then first appearance."""
    seen: dict[str, int] = {}
    for m in members:
        seen.setdefault(m.alert.alert_type, m.stage)
    order = {t: i for i, t in enumerate(seen)}
    return sorted(seen.items(), key=lambda kv: (kv[1], order[kv[0]]))


def build_count_series(candidate: CandidateGroup, bin_width: float = DEFAULT_BIN_WIDTH) -> list[CountSeries]:
    """Count each alert type's occurrences in fixed-width bins.

    Bins are half-open ``[origin + k*w, origin + (k+1)*w)`` starting at the
    earliest alert, as many as needed to reach the latest one, and never
    fewer than two.
    """
    if not bin_width > 0 or not math.isfinite(bin_width):
        raise InputError(f"bin_width must be positive, got {bin_width}")
    members = candidate.members
    if not members:
        raise InputError("cannot bin an empty candidate group")
    # exact arithmetic: timestamps carry millisecond resolution
    width = Fraction(bin_width).limit_denominator(10**9)
    stamps = [Fraction(m.alert.timestamp).limit_denominator(10**6) for m in members]
    origin = min(stamps)
    index = [int((t - origin) // width) for t in stamps]
    n = max(2, max(index) + 1)

    types = _type_order(members)
    slot = {t: i for i, (t, _) in enumerate(types)}
    counts = np.zeros((len(types), n), dtype=np.int64)
    for m, k in zip(members, index):
        counts[slot[m.alert.alert_type], k] += 1
    return [CountSeries(t, tuple(int(c) for c in counts[i]), float(bin_width), float(origin))
            for i, (t, _) in enumerate(types)]


def _values(x: CountSeries | Sequence[float]) -> np.ndarray:
    return np.asarray(x.bins if isinstance(x, CountSeries) else x, dtype=float)


def pearson(x: CountSeries | Sequence[float], y: CountSeries | Sequence[float]) -> float | None:
    """Pearson correlation of two equal-length samples, ``None`` if either is constant."""
    if isinstance(x, CountSeries) and isinstance(y, CountSeries):
        if x.bin_width != y.bin_width or x.origin != y.origin:
            raise ValueError("count series do not share a bin grid")
    a, b = _values(x), _values(y)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ValueError("need at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    if saa == 0.0 or sbb == 0.0:
        return None
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    if abs(abs(r) - 1.0) <= 1e-12:
        return math.copysign(1.0, r)
    return r


def correlation_matrix(series: Sequence[CountSeries]) -> CorrelationMatrix:
    if len(series) < 2:
        raise InputError(f"correlation matrix needs at least 2 series, got {len(series)}")
    k = len(series)
    out = np.full((k, k), np.nan)
    for i in range(k):
        if pearson(series[i], series[i]) is not None:
            out[i, i] = 1.0
        for j in range(i + 1, k):
            r = pearson(series[i], series[j])
            if r is not None:
                out[i, j] = out[j, i] = r
    return CorrelationMatrix(tuple(s.alert_type for s in series), out, series[0].bin_width)


def accepts(r: float | None, theta: float, sign: SignMode | str = SignMode.ABS) -> bool:
    if r is None:
        return False
    return (abs(r) if SignMode(sign) is SignMode.ABS else r) >= theta


def build_scenario_graph(
    candidate: CandidateGroup,
    matrix: CorrelationMatrix,
    threshold: float = DEFAULT_THETA,
    *,
    edge_mode: EdgeMode | str = EdgeMode.ADJACENT,
    sign: SignMode | str = SignMode.ABS,
) -> ScenarioGraph:
    """Connect alert types of consecutive stages whose correlation clears ``threshold``.

    In adjacent mode an edge only joins a stage to the next stage present in
    the group; any-forward mode allows any later stage. Types seen at least
    twice get a self-loop.
    """
    if not 0.0 < threshold <= 1.0:
        raise InputError(f"threshold must lie in (0, 1], got {threshold}")
    edge_mode, sign = EdgeMode(edge_mode), SignMode(sign)
    types = _type_order(candidate.members)
    missing = [t for t, _ in types if t not in matrix]
    if missing:
        raise InputError(f"correlation matrix lacks alert type(s) {missing}")

    ids: dict[str, list[str]] = {t: [] for t, _ in types}
    for m in candidate.members:
        ids[m.alert.alert_type].append(m.alert.id)
    nodes = [Node(t, s, len(ids[t]), tuple(ids[t])) for t, s in types]

    present = sorted({s for _, s in types})
    next_stage = dict(zip(present, present[1:]))
    edges = []
    for src, s1 in types:
        for dst, s2 in types:
            if s2 <= s1:
                continue
            if edge_mode is EdgeMode.ADJACENT and next_stage.get(s1) != s2:
                continue
            r = matrix.r(src, dst)
            if accepts(r, threshold, sign):
                edges.append(Edge(src, dst, r))
    return ScenarioGraph(
        target_ip=candidate.target_ip,
        nodes=tuple(nodes),
        edges=tuple(edges),
        self_loops=frozenset(n.alert_type for n in nodes if n.count >= 2),
        theta=threshold,
        bin_width=matrix.bin_width,
        edge_mode=edge_mode.value,
    )


# -- export -----------------------------------------------------------------

def _fmt(value: float) -> str:
    return UNDEFINED_CSV if math.isnan(value) else repr(float(value))


def matrix_to_csv(matrix: CorrelationMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alert_type", *matrix.types])
    for t, row in zip(matrix.types, matrix.entries):
        writer.writerow([t, *(_fmt(v) for v in row)])
    return buf.getvalue()


def matrix_from_csv(source: Union[str, IO[str]], bin_width: float | None = None) -> CorrelationMatrix:
    """Read a matrix written by ``matrix_to_csv``; blank or ``NA`` cells are undefined."""
    text = source if isinstance(source, str) else source.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise InputError("empty matrix file")
    header = [c.strip() for c in rows[0][1:]]
    body = rows[1:]
    if [r[0].strip() for r in body] != header:
        raise InputError("matrix row labels do not match the header")
    values = []
    for r in body:
        cells = [c.strip() for c in r[1:]] + [""] * (len(header) - len(r) + 1)
        values.append([np.nan if c in ("", UNDEFINED_CSV) else float(c) for c in cells])
    return CorrelationMatrix(tuple(header), np.array(values), bin_width)


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(graph: ScenarioGraph) -> str:
    lines = [f"digraph {_dot_id('scenario_' + graph.target_ip)} {{",
             "  rankdir=LR;",
             "  node [shape=box];",
             f"  label={_dot_id(f'{graph.target_ip} theta={graph.theta} bin={graph.bin_width}')};"]
    for stage in sorted({n.stage for n in graph.nodes}):
        members = " ".join(_dot_id(n.alert_type) for n in graph.nodes if n.stage == stage)
        lines.append(f"  {{ rank=same; {members} }}")
    for n in graph.nodes:
        label = _dot_id(n.alert_type)[:-1] + f'\\n{n.stage}:{n.count}"'
        lines.append(f"  {_dot_id(n.alert_type)} [label={label}];")
    for e in graph.edges:
        lines.append(f"  {_dot_id(e.source)} -> {_dot_id(e.target)} [label=\"{e.r:.4f}\"];")
    for t in sorted(graph.self_loops):
        lines.append(f"  {_dot_id(t)} -> {_dot_id(t)} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
