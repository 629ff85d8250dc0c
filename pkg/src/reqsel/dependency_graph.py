"""Signed fuzzy value dependency graph, precedence records, and influence
propagation.

A value dependency graph (VDG) has an edge (i -> j) when r_i's value depends
explicitly on the selection state of r_j, carrying a strength in (0, 1] and
a quality: `+` (selecting r_j helps r_i) or `-` (it hurts). A dependency
path transfers value like a chain of fuzzy implications: its strength is the
weakest edge on it and its quality is the product of edge signs (a missing
edge makes the quality non-specified, which absorbs everything).

All-pairs propagation takes, for every ordered pair, the strongest positive
path and the strongest negative path separately:

    pos(i, j) = sup over positive-quality paths i -> j of min edge strength
    neg(i, j) = sup over negative-quality paths of the same
    I(i, j)   = pos(i, j) - neg(i, j)

Both suprema come from one max-min transitive closure of the parity-expanded
state graph over 2n states (node, sign): a `+` edge (i -> j) preserves the
walk's sign, a `-` edge flips it. Removing a repeated-state cycle from a
walk never lowers its min strength, so suprema over walks equal suprema over
state-simple paths; the closure and the DFS oracle both compute the latter,
which also settles how node revisits in the original graph are treated (a
node may be revisited when the accumulated sign differs).

The single-pass interleaved Floyd-Warshall from the source method is kept as
`alg2_reference`: it can under-converge on cyclic graphs where positive and
negative strengths feed each other, because processing node k once cannot
use both parities of k as intermediates. `propagate_strengths` is the
authoritative semantics.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .errors import InputFormatError, ValidationError

POSITIVE = "+"
NEGATIVE = "-"
UNSPECIFIED = "±"


def combine_quality(a: str, b: str) -> str:
    """Serial quality composition: like signs give +, unlike give -, and a
    non-specified quality absorbs."""
    if a == UNSPECIFIED or b == UNSPECIFIED:
        return UNSPECIFIED
    return POSITIVE if a == b else NEGATIVE


@dataclass(frozen=True)
class ValueDependencyGraph:
    """n nodes; edges map (i, j) -> (strength in (0, 1], quality in {+, -})."""

    n: int
    edges: dict[tuple[int, int], tuple[float, str]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("graph needs at least one node")
        object.__setattr__(self, "edges", dict(self.edges))
        for (i, j), (strength, quality) in self.edges.items():
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValidationError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i == j:
                raise ValidationError(f"self-edge on node {i} not allowed")
            if not 0.0 < strength <= 1.0:
                raise ValidationError(f"edge ({i}, {j}) strength {strength} outside (0, 1]")
            if quality not in (POSITIVE, NEGATIVE):
                raise ValidationError(f"edge ({i}, {j}) quality {quality!r} must be + or -")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def negative_edge_count(self) -> int:
        return sum(1 for _, q in self.edges.values() if q == NEGATIVE)


@dataclass(frozen=True)
class RequiresAll:
    """Selecting `source` requires selecting `target`."""

    source: int
    target: int


@dataclass(frozen=True)
class RequiresAny:
    """Selecting `source` requires selecting at least one target."""

    source: int
    targets: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class Conflicts:
    """The two requirements cannot both be selected (unordered pair)."""

    a: int
    b: int


@dataclass(frozen=True)
class ExactlyOne:
    """Exactly one member of the set must be selected."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))


PrecedenceRecord = Union[RequiresAll, RequiresAny, Conflicts, ExactlyOne]


@dataclass(frozen=True)
class PrecedenceGraph:
    n: int
    constraints: tuple[PrecedenceRecord, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("precedence graph needs at least one node")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for rec in self.constraints:
            if isinstance(rec, RequiresAll):
                self._check_index(rec.source)
                self._check_index(rec.target)
                if rec.source == rec.target:
                    raise ValidationError("a requirement cannot require itself")
            elif isinstance(rec, RequiresAny):
                self._check_index(rec.source)
                if not rec.targets:
                    raise ValidationError("requires-any needs a non-empty target set")
                for t in rec.targets:
                    self._check_index(t)
                if rec.source in rec.targets:
                    raise ValidationError("requires-any source cannot be its own target")
                if len(set(rec.targets)) != len(rec.targets):
                    raise ValidationError("requires-any targets must be distinct")
            elif isinstance(rec, Conflicts):
                self._check_index(rec.a)
                self._check_index(rec.b)
                if rec.a == rec.b:
                    raise ValidationError("a requirement cannot conflict with itself")
            elif isinstance(rec, ExactlyOne):
                if len(rec.members) < 2:
                    raise ValidationError("exactly-one needs at least two members")
                if len(set(rec.members)) != len(rec.members):
                    raise ValidationError("exactly-one members must be distinct")
                for m in rec.members:
                    self._check_index(m)
            else:
                raise ValidationError(f"unknown precedence record {rec!r}")

    def _check_index(self, idx: int) -> None:
        if not 0 <= idx < self.n:
            raise ValidationError(f"requirement index {idx} out of range for n={self.n}")

    @classmethod
    def empty(cls, n: int) -> "PrecedenceGraph":
        return cls(n=n, constraints=())


@dataclass(frozen=True)
class InfluenceMatrix:
    """Strongest positive and negative propagated strengths per ordered pair,
    and their difference I = pos - neg."""

    pos: np.ndarray
    neg: np.ndarray
    influence: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        pos = np.asarray(self.pos, dtype=np.float64)
        neg = np.asarray(self.neg, dtype=np.float64)
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "neg", neg)
        if pos.ndim != 2 or pos.shape[0] != pos.shape[1] or pos.shape != neg.shape:
            raise ValidationError("pos and neg must be square matrices of the same shape")
        for name, mat in (("pos", pos), ("neg", neg)):
            if ((mat < 0.0) | (mat > 1.0)).any():
                raise ValidationError(f"{name} entries must lie in [0, 1]")
            if np.abs(np.diag(mat)).max(initial=0.0) != 0.0:
                raise ValidationError(f"{name} diagonal must be zero (no self-influence)")
        object.__setattr__(self, "influence", pos - neg)

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "InfluenceMatrix":
        return cls(pos=np.zeros((n, n)), neg=np.zeros((n, n)))


def path_strength(g: ValueDependencyGraph, path: Sequence[int]) -> tuple[str, float]:
    """Weakest-edge strength and sign product along an explicit node path."""
    if len(path) < 2:
        raise ValidationError("a dependency path needs at least two nodes")
    strength = 1.0
    quality = POSITIVE
    for a, b in itertools.pairwise(path):
        edge = g.edges.get((a, b))
        if edge is None:
            return UNSPECIFIED, 0.0
        rho, q = edge
        strength = min(strength, rho)
        quality = combine_quality(quality, q)
    return quality, strength


def _maxmin_closure(a: np.ndarray) -> np.ndarray:
    c = a.copy()
    for k in range(c.shape[0]):
        np.maximum(c, np.minimum(c[:, k : k + 1], c[k : k + 1, :]), out=c)
    return c


def propagate_strengths(g: ValueDependencyGraph) -> InfluenceMatrix:
    """Max-min transitive closure on the parity-expanded state graph.

    States are laid out as [(0,+)..(n-1,+), (0,-)..(n-1,-)]; a positive edge
    connects equal parities, a negative edge opposite ones, so the expanded
    adjacency is [[P, N], [N, P]]. After closure, pos(i, j) is the entry from
    (i,+) to (j,+) and neg(i, j) the entry from (i,+) to (j,-). One closure is
    O((2n)^3).
    """
    n = g.n
    p = np.zeros((n, n))
    m = np.zeros((n, n))
    for (i, j), (rho, q) in g.edges.items():
        (p if q == POSITIVE else m)[i, j] = rho
    expanded = np.block([[p, m], [m, p]])
    closure = _maxmin_closure(expanded)
    pos = closure[:n, :n].copy()
    neg = closure[:n, n:].copy()
    np.fill_diagonal(pos, 0.0)
    np.fill_diagonal(neg, 0.0)
    return InfluenceMatrix(pos=pos, neg=neg)


def alg2_reference(g: ValueDependencyGraph) -> InfluenceMatrix:
    """Verbatim single-pass interleaved Floyd-Warshall (reference only).

    Each node k is processed once, updating the positive and negative
    matrices from each other with the current values. Sound (every produced
    value is realized by some walk) but possibly under-converged on cyclic
    graphs with negative edges; compare against propagate_strengths.
    """
    n = g.n
    pos = np.zeros((n, n))
    neg = np.zeros((n, n))
    for (i, j), (rho, q) in g.edges.items():
        (pos if q == POSITIVE else neg)[i, j] = rho
    for k in range(n):
        for i in range(n):
            for j in range(n):
                cand = min(pos[i, k], pos[k, j])
                if cand > pos[i, j]:
                    pos[i, j] = cand
                cand = min(neg[i, k], neg[k, j])
                if cand > pos[i, j]:
                    pos[i, j] = cand
                cand = min(pos[i, k], neg[k, j])
                if cand > neg[i, j]:
                    neg[i, j] = cand
                cand = min(neg[i, k], pos[k, j])
                if cand > neg[i, j]:
                    neg[i, j] = cand
    np.fill_diagonal(pos, 0.0)
    np.fill_diagonal(neg, 0.0)
    return InfluenceMatrix(pos=pos, neg=neg)


def brute_force_influence(g: ValueDependencyGraph, max_len: int) -> InfluenceMatrix:
    """Oracle: exhaustive DFS over sign-labeled paths up to max_len edges.

    Enumerates state-simple paths in the parity-expanded graph (no repeated
    (node, sign) state), recording per-sign suprema of min strengths. Since
    cutting a repeated-state cycle never lowers a walk's min strength, this
    equals the supremum over all walks once max_len reaches 2n - 1.
    """
    if g.n > 10:
        raise ValidationError("brute-force influence is limited to n <= 10")
    if max_len < 1:
        raise ValidationError("max_len must be at least 1")
    n = g.n
    adj: list[list[tuple[int, float, bool]]] = [[] for _ in range(n)]
    for (i, j), (rho, q) in g.edges.items():
        adj[i].append((j, rho, q == NEGATIVE))
    for neighbors in adj:
        neighbors.sort()

    pos = np.zeros((n, n))
    neg = np.zeros((n, n))

    def walk(start: int, node: int, positive: bool, strength: float, depth: int, seen: int) -> None:
        if depth == max_len:
            return
        for nxt, rho, flips in adj[node]:
            nxt_positive = positive != flips
            state = nxt * 2 + (0 if nxt_positive else 1)
            if seen & (1 << state):
                continue
            s = min(strength, rho)
            target = pos if nxt_positive else neg
            if s > target[start, nxt]:
                target[start, nxt] = s
            walk(start, nxt, nxt_positive, s, depth + 1, seen | (1 << state))

    for start in range(n):
        walk(start, start, True, 1.0, 0, 1 << (start * 2))
    np.fill_diagonal(pos, 0.0)
    np.fill_diagonal(neg, 0.0)
    return InfluenceMatrix(pos=pos, neg=neg)


def vdl_nvdl(g: ValueDependencyGraph) -> tuple[float, float | None]:
    """Dependency density k/(n(n-1)) and negative share m/k (None if k=0)."""
    if g.n < 2:
        raise ValidationError("dependency level needs at least two nodes")
    k = g.edge_count
    vdl = k / (g.n * (g.n - 1))
    if k == 0:
        return vdl, None
    return vdl, g.negative_edge_count / k


def pdl_npdl(p: PrecedenceGraph) -> tuple[float, float | None]:
    """Precedence density over pairwise records and the conflicts share.

    Requires-all and conflicts count one each; requires-any counts one per
    (source, target); exactly-one counts one per member pair. Conflicts are
    the negative kind.
    """
    if p.n < 2:
        raise ValidationError("precedence level needs at least two nodes")
    k = 0
    negative = 0
    for rec in p.constraints:
        if isinstance(rec, RequiresAll):
            k += 1
        elif isinstance(rec, RequiresAny):
            k += len(rec.targets)
        elif isinstance(rec, Conflicts):
            k += 1
            negative += 1
        elif isinstance(rec, ExactlyOne):
            s = len(rec.members)
            k += s * (s - 1) // 2
    pdl = k / (p.n * (p.n - 1))
    if k == 0:
        return pdl, None
    return pdl, negative / k


def default_ids(n: int) -> tuple[str, ...]:
    return tuple(f"r{i + 1}" for i in range(n))


def save_vdg(g: ValueDependencyGraph, sink: IO[str], ids: Sequence[str] | None = None) -> None:
    """Write `from,to,strength,quality` rows, quality in {+, -}.

    A `# nodes` comment records the full node universe so isolated nodes
    survive a round trip through the edge list.
    """
    names = tuple(ids) if ids is not None else default_ids(g.n)
    if len(names) != g.n:
        raise ValidationError("id list length does not match node count")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["# nodes", *names])
    writer.writerow(["from", "to", "strength", "quality"])
    for (i, j) in sorted(g.edges):
        rho, q = g.edges[(i, j)]
        writer.writerow([names[i], names[j], repr(float(rho)), q])


def load_vdg(
    source: IO[str] | Iterable[str], ids: Sequence[str] | None = None
) -> tuple[ValueDependencyGraph, tuple[str, ...]]:
    """Read a VDG CSV; returns the graph plus the node id order used.

    With `ids` given, nodes map onto that universe (unknown ids are errors).
    Without it, a `# nodes` comment in the file supplies the universe; as a
    last resort nodes are the ids seen in edges, in first-appearance order.
    """
    rows: list[tuple[int, list[str]]] = []
    universe: tuple[str, ...] | None = None
    for lineno, record in enumerate(csv.reader(source), start=1):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if record[0].lstrip().startswith("#"):
            if record[0].strip().lower() == "# nodes" and len(record) > 1:
                universe = tuple(cell.strip() for cell in record[1:])
            continue
        rows.append((lineno, [cell.strip() for cell in record]))
    if rows and [c.lower() for c in rows[0][1]] == ["from", "to", "strength", "quality"]:
        rows = rows[1:]
    if ids is None and universe is not None:
        ids = universe

    raw: list[tuple[int, str, str, float, str]] = []
    for lineno, record in rows:
        if len(record) != 4:
            raise InputFormatError(f"line {lineno}: expected 4 fields, found {len(record)}")
        src, dst, strength_text, quality = record
        try:
            strength = float(strength_text)
        except ValueError as exc:
            raise InputFormatError(f"line {lineno}: strength {strength_text!r} is not a number") from exc
        if quality not in (POSITIVE, NEGATIVE):
            raise InputFormatError(f"line {lineno}: quality {quality!r} must be + or -")
        if not 0.0 < strength <= 1.0:
            raise InputFormatError(f"line {lineno}: strength {strength} outside (0, 1]")
        raw.append((lineno, src, dst, strength, quality))

    if ids is not None:
        names = tuple(ids)
        index = {name: pos for pos, name in enumerate(names)}
        for lineno, src, dst, _, _ in raw:
            for name in (src, dst):
                if name not in index:
                    raise InputFormatError(f"line {lineno}: unknown requirement id {name!r}")
    else:
        order: list[str] = []
        for _, src, dst, _, _ in raw:
            for name in (src, dst):
                if name not in order:
                    order.append(name)
        if not order:
            raise InputFormatError("VDG CSV holds no edges and no id universe was supplied")
        names = tuple(order)
        index = {name: pos for pos, name in enumerate(names)}

    edges: dict[tuple[int, int], tuple[float, str]] = {}
    for lineno, src, dst, strength, quality in raw:
        key = (index[src], index[dst])
        if key in edges:
            raise InputFormatError(f"line {lineno}: duplicate edge {src} -> {dst}")
        edges[key] = (strength, quality)
    return ValueDependencyGraph(n=len(names), edges=edges), names


_CONSTRAINT_TYPES = {"requires_all", "requires_any", "conflicts", "exactly_one"}


def load_constraints(source: IO[str], ids: Sequence[str]) -> PrecedenceGraph:
    """Parse the constraints JSON array against a known id universe.

    Schema per item: {"type": ..., "source": id, "targets": [ids]} with type
    one of requires_all / requires_any / conflicts / exactly_one. A
    requires_all or conflicts item with several targets expands to one record
    per target; exactly_one takes its whole member set from "targets". The
    array may also arrive wrapped as {"records": [...]} so that generated
    files can carry metadata keys alongside.
    """
    try:
        data = json.load(source)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"constraints JSON malformed: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("records"), list):
        data = data["records"]
    if not isinstance(data, list):
        raise InputFormatError("constraints JSON must be an array of records")
    index = {name: pos for pos, name in enumerate(ids)}

    def resolve(name: object, where: str) -> int:
        if not isinstance(name, str) or name not in index:
            raise InputFormatError(f"record {where}: unknown requirement id {name!r}")
        return index[name]

    records: list[PrecedenceRecord] = []
    for pos, item in enumerate(data):
        where = f"#{pos + 1}"
        if not isinstance(item, dict) or "type" not in item:
            raise InputFormatError(f"record {where}: expected an object with a \"type\" key")
        kind = item["type"]
        if kind not in _CONSTRAINT_TYPES:
            raise InputFormatError(f"record {where}: unknown type {kind!r}")
        targets = item.get("targets")
        if not isinstance(targets, list) or not targets:
            raise InputFormatError(f"record {where}: \"targets\" must be a non-empty array")
        target_idx = [resolve(t, where) for t in targets]
        if kind == "exactly_one":
            members = target_idx
            if "source" in item and item["source"] is not None:
                members = [resolve(item["source"], where), *target_idx]
            records.append(ExactlyOne(members=tuple(members)))
            continue
        source_idx = resolve(item.get("source"), where)
        if kind == "requires_all":
            records.extend(RequiresAll(source=source_idx, target=t) for t in target_idx)
        elif kind == "requires_any":
            records.append(RequiresAny(source=source_idx, targets=tuple(target_idx)))
        else:
            records.extend(Conflicts(a=source_idx, b=t) for t in target_idx)
    try:
        return PrecedenceGraph(n=len(index), constraints=tuple(records))
    except ValidationError as exc:
        raise InputFormatError(f"constraints JSON invalid: {exc}") from exc


def save_constraints(p: PrecedenceGraph, sink: IO[str], ids: Sequence[str]) -> None:
    names = tuple(ids)
    if len(names) != p.n:
        raise ValidationError("id list length does not match node count")
    items: list[dict] = []
    for rec in p.constraints:
        if isinstance(rec, RequiresAll):
            items.append({"type": "requires_all", "source": names[rec.source], "targets": [names[rec.target]]})
        elif isinstance(rec, RequiresAny):
            items.append({"type": "requires_any", "source": names[rec.source], "targets": [names[t] for t in rec.targets]})
        elif isinstance(rec, Conflicts):
            items.append({"type": "conflicts", "source": names[rec.a], "targets": [names[rec.b]]})
        else:
            items.append({"type": "exactly_one", "targets": [names[m] for m in rec.members]})
    json.dump(items, sink, indent=2)
    sink.write("\n")


def save_influence_matrix(inf: InfluenceMatrix, sink: IO[str], ids: Sequence[str] | None = None) -> None:
    """Write the net influence matrix as `id,<id1>,...` CSV rows."""
    names = tuple(ids) if ids is not None else default_ids(inf.n)
    if len(names) != inf.n:
        raise ValidationError("id list length does not match matrix dimension")
    sink.write("id," + ",".join(names) + "\n")
    for i, name in enumerate(names):
        row = ",".join(repr(float(v)) for v in inf.influence[i])
        sink.write(f"{name},{row}\n")


def load_influence_matrix(source: IO[str]) -> tuple[InfluenceMatrix, tuple[str, ...]]:
    """Read a net influence matrix written by save_influence_matrix.

    Only the net influence survives a round trip; the positive and negative
    parts are recovered as its positive and negative components, which yield
    identical penalties.
    """
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, line.split(",")))
    if len(rows) < 2:
        raise InputFormatError("influence CSV needs a header row and one row per requirement")
    header_no, header = rows[0]
    if header[0] != "id":
        raise InputFormatError(f"line {header_no}: expected header starting with \"id\"")
    names = tuple(header[1:])
    n = len(names)
    if len(rows) - 1 != n:
        raise InputFormatError(f"expected {n} matrix rows, found {len(rows) - 1}")
    matrix = np.zeros((n, n))
    for i, (lineno, cells) in enumerate(rows[1:]):
        if len(cells) != n + 1:
            raise InputFormatError(f"line {lineno}: expected {n + 1} columns, found {len(cells)}")
        if cells[0] != names[i]:
            raise InputFormatError(f"line {lineno}: row id {cells[0]!r} does not match header order")
        for j, cell in enumerate(cells[1:]):
            try:
                matrix[i, j] = float(cell)
            except ValueError as exc:
                raise InputFormatError(f"line {lineno}: bad influence value {cell!r}") from exc
    try:
        inf = InfluenceMatrix(pos=np.clip(matrix, 0.0, None), neg=np.clip(-matrix, 0.0, None))
    except ValidationError as exc:
        raise InputFormatError(f"influence CSV invalid: {exc}") from exc
    return inf, names
