"""Linear compartmental models as directed graphs.

A model is the quadruple (G, In, Out, Leak) on compartments ``1..n``.  Edge
``j -> i`` carries the rate parameter ``a_ij`` and a leak from ``i`` carries
``a_0i``.  Compartment indices are 1-based everywhere in this package.
"""

from __future__ import annotations

import json
import math
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .poly import MPoly

__all__ = [
    "Param",
    "ModelSpec",
    "ModelError",
    "ModelSyntaxError",
    "LinearExpr",
    "SymbolicMatrix",
    "GraphInvariants",
    "parse_model",
    "load_model",
    "dump_model",
    "compartmental_matrix",
    "output_reachable_subgraph",
    "graph_invariants",
    "reverse_model",
    "strongly_connected_components",
    "bfs_distances",
    "canonical_form",
]


class Param(NamedTuple):
    """Rate parameter ``a_{to,frm}``; ``to == 0`` marks a leak from ``frm``.

    Tuple ordering puts every leak before every edge (leaks ascending), then
    edges lexicographically by ``(to, frm)``.
    """

    to: int
    frm: int

    @classmethod
    def edge(cls, frm: int, to: int) -> Param:
        return cls(to, frm)

    @classmethod
    def leak(cls, i: int) -> Param:
        return cls(0, i)

    @property
    def is_leak(self) -> bool:
        return self.to == 0

    @property
    def symbol(self) -> str:
        if self.to < 10 and self.frm < 10:
            return f"a{self.to}{self.frm}"
        return f"a{self.to}_{self.frm}"

    @classmethod
    def parse(cls, text: str) -> Param:
        """Inverse of :attr:`symbol` (``a21``, ``a10_3``)."""
        if not text.startswith("a"):
            raise ValueError(f"bad parameter symbol {text!r}")
        body = text[1:]
        parsed = None
        try:
            if "_" in body:
                to, frm = body.split("_")
                parsed = cls(int(to), int(frm))
            elif len(body) == 2 and body.isdigit():
                parsed = cls(int(body[0]), int(body[1]))
        except ValueError:
            pass
        if parsed is None or parsed.frm < 1 or parsed.to < 0 or parsed.to == parsed.frm:
            raise ValueError(f"bad parameter symbol {text!r}")
        return parsed

    def __str__(self) -> str:
        return self.symbol

    def __repr__(self) -> str:
        return self.symbol


class ModelError(ValueError):
    """A model description violates the model invariants."""


class ModelSyntaxError(ModelError):
    """The model file is not well-formed; carries line/column when known."""

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)


@dataclass(frozen=True)
class ModelSpec:
    n: int
    edges: frozenset[tuple[int, int]]  # (from, to)
    inputs: frozenset[int]
    outputs: frozenset[int]
    leaks: frozenset[int] = frozenset()
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        object.__setattr__(self, "leaks", frozenset(self.leaks))
        self._validate()

    def _validate(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ModelError(f"n must be a positive integer, got {self.n!r}")
        for frm, to in sorted(self.edges):
            for v in (frm, to):
                if not 1 <= v <= self.n:
                    raise ModelError(f"edge [{frm}, {to}] has index {v} outside 1..{self.n}")
            if frm == to:
                raise ModelError(f"self-loop at {frm}")
        for label, group in (("input", self.inputs), ("output", self.outputs), ("leak", self.leaks)):
            for v in sorted(group):
                if not 1 <= v <= self.n:
                    raise ModelError(f"{label} compartment {v} outside 1..{self.n}")

    # -- convenience ------------------------------------------------------

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges, key=lambda e: (e[1], e[0]))

    def params(self) -> tuple[Param, ...]:
        """Canonically ordered parameter vector."""
        ps = [Param.leak(i) for i in self.leaks] + [Param.edge(f, t) for f, t in self.edges]
        return tuple(sorted(ps))

    def successors(self) -> dict[int, list[int]]:
        out = {v: [] for v in self.vertices}
        for f, t in sorted(self.edges):
            out[f].append(t)
        return out

    def predecessors(self) -> dict[int, list[int]]:
        out = {v: [] for v in self.vertices}
        for f, t in sorted(self.edges, key=lambda e: (e[1], e[0])):
            out[t].append(f)
        return out

    def replace(self, **changes) -> ModelSpec:
        data = dict(
            n=self.n, edges=self.edges, inputs=self.inputs, outputs=self.outputs,
            leaks=self.leaks, name=self.name,
        )
        data.update(changes)
        return ModelSpec(**data)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "edges": [[f, t] for f, t in sorted(self.edges)],
            "inputs": sorted(self.inputs),
            "outputs": sorted(self.outputs),
            "leaks": sorted(self.leaks),
        }
        if self.name is not None:
            out["name"] = self.name
        return out

    def require_io(self):
        """Analysis operations need at least one input and one output."""
        if not self.inputs:
            raise ModelError("model has no inputs")
        if not self.outputs:
            raise ModelError("model has no outputs")

    def __str__(self) -> str:
        edges = ", ".join(f"{f}->{t}" for f, t in sorted(self.edges))
        return (f"Model(n={self.n}, edges=[{edges}], In={sorted(self.inputs)}, "
                f"Out={sorted(self.outputs)}, Leak={sorted(self.leaks)})")


# ---------------------------------------------------------------------------
# Model files

_FIELDS = {"n", "edges", "inputs", "outputs", "leaks", "name"}


def _int_list(data, key: str) -> list[int]:
    value = data.get(key, [] if key == "leaks" else None)
    if value is None:
        raise ModelError(f"missing field '{key}'")
    if not isinstance(value, list):
        raise ModelError(f"field '{key}' must be an array of integers")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ModelError(f"field '{key}' has non-integer entry {v!r}")
    seen = set()
    for v in value:
        if v in seen:
            raise ModelError(f"field '{key}' lists compartment {v} twice")
        seen.add(v)
    return value


def parse_model(text: str) -> ModelSpec:
    """Parse and validate the JSON model format.

    >>> parse_model('{"n":1,"edges":[],"inputs":[1],"outputs":[1],"leaks":[]}').n
    1
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ModelSyntaxError("model must be a JSON object")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ModelError(f"unknown field(s): {', '.join(unknown)}")
    n = data.get("n")
    if n is None:
        raise ModelError("missing field 'n'")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelError(f"n must be a positive integer, got {n!r}")
    raw_edges = data.get("edges")
    if raw_edges is None:
        raise ModelError("missing field 'edges'")
    if not isinstance(raw_edges, list):
        raise ModelError("field 'edges' must be an array of [from, to] pairs")
    edges = []
    for e in raw_edges:
        if (not isinstance(e, list) or len(e) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in e)):
            raise ModelError(f"edge {e!r} is not an integer pair [from, to]")
        frm, to = e
        if frm == to:
            raise ModelError(f"self-loop at {frm}")
        if (frm, to) in edges:
            raise ModelError(f"duplicate edge [{frm}, {to}]")
        edges.append((frm, to))
    inputs = _int_list(data, "inputs")
    outputs = _int_list(data, "outputs")
    leaks = _int_list(data, "leaks")
    if not inputs:
        raise ModelError("inputs must be nonempty")
    if not outputs:
        raise ModelError("outputs must be nonempty")
    name = data.get("name")
    if name is not None and not isinstance(name, str):
        raise ModelError("field 'name' must be a string")
    return ModelSpec(n, frozenset(edges), frozenset(inputs), frozenset(outputs), frozenset(leaks), name)


def load_model(path) -> ModelSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def dump_model(m: ModelSpec, indent: int | None = None) -> str:
    return json.dumps(m.to_dict(), indent=indent)


# ---------------------------------------------------------------------------
# Compartmental matrix


class LinearExpr:
    """Rational constant plus a sparse rational combination of parameters."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[Param, Fraction] | Iterable = (), constant=0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Param, Fraction] = {}
        for p, c in items:
            acc[p] = acc.get(p, 0) + Fraction(c)
        self.terms = tuple(sorted((p, c) for p, c in acc.items() if c))
        self.constant = Fraction(constant)

    def to_mpoly(self) -> MPoly:
        d = {(p,): c for p, c in self.terms}
        if self.constant:
            d[()] = self.constant
        return MPoly(d)

    def __add__(self, other: LinearExpr) -> LinearExpr:
        return LinearExpr(list(self.terms) + list(other.terms), self.constant + other.constant)

    def is_zero(self) -> bool:
        return not self.terms and not self.constant

    def __eq__(self, other) -> bool:
        if isinstance(other, LinearExpr):
            return self.terms == other.terms and self.constant == other.constant
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.terms, self.constant))

    def __repr__(self) -> str:
        return self.to_mpoly().render()


@dataclass(frozen=True)
class SymbolicMatrix:
    """The compartmental matrix A(G); ``entries[i-1][j-1]`` is A_ij."""

    n: int
    entries: tuple[tuple[LinearExpr, ...], ...]

    def __getitem__(self, idx) -> LinearExpr:
        i, j = idx
        return self.entries[i - 1][j - 1]

    def column_sum(self, j: int) -> LinearExpr:
        total = LinearExpr()
        for i in range(1, self.n + 1):
            total = total + self[i, j]
        return total

    def principal(self, vertices: Iterable[int]) -> SymbolicMatrix:
        vs = sorted(vertices)
        return SymbolicMatrix(len(vs), tuple(tuple(self[i, j] for j in vs) for i in vs))

    def to_lists(self) -> list[list[str]]:
        return [[repr(e) for e in row] for row in self.entries]


def compartmental_matrix(m: ModelSpec) -> SymbolicMatrix:
    rows = [[LinearExpr() for _ in range(m.n)] for _ in range(m.n)]
    diag: dict[int, list] = {v: [] for v in m.vertices}
    for frm, to in m.edges:
        p = Param.edge(frm, to)
        rows[to - 1][frm - 1] = LinearExpr([(p, 1)])
        diag[frm].append((p, -1))
    for i in m.leaks:
        diag[i].append((Param.leak(i), -1))
    for v, terms in diag.items():
        rows[v - 1][v - 1] = LinearExpr(terms)
    return SymbolicMatrix(m.n, tuple(tuple(r) for r in rows))


# ---------------------------------------------------------------------------
# Graph algorithms


def bfs_distances(adjacency: Mapping[int, Iterable[int]], source: int) -> dict[int, int]:
    """Edge-count distances from ``source`` to every reachable vertex."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def strongly_connected_components(vertices: Iterable[int], adjacency: Mapping[int, Iterable[int]]) -> list[frozenset[int]]:
    """Tarjan's algorithm, iterative.  Components come out in reverse
    topological order of the condensation (sinks first)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, iter(adjacency[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adjacency[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(frozenset(comp))
    return comps


def reaching(m: ModelSpec, target: int) -> set[int]:
    """Vertices with a directed path to ``target`` (``target`` included)."""
    return set(bfs_distances(m.predecessors(), target))


def output_reachable_subgraph(m: ModelSpec, out: int) -> tuple[ModelSpec, dict[int, int]]:
    """Induced submodel on the vertices that reach ``out``.

    Returns the relabeled submodel (compartments renumbered ``1..k`` in
    ascending original order) and the map original -> new label.
    """
    if out not in m.outputs:
        raise ModelError(f"compartment {out} is not an output")
    keep = sorted(reaching(m, out))
    relabel = {v: k for k, v in enumerate(keep, 1)}
    sub = ModelSpec(
        n=len(keep),
        edges=frozenset((relabel[f], relabel[t]) for f, t in m.edges if f in relabel and t in relabel),
        inputs=frozenset(relabel[v] for v in m.inputs if v in relabel),
        outputs=frozenset(relabel[v] for v in m.outputs if v in relabel),
        leaks=frozenset(relabel[v] for v in m.leaks if v in relabel),
        name=m.name,
    )
    return sub, relabel


@dataclass(frozen=True)
class GraphInvariants:
    shortest_dist: dict[tuple[int, int], float]  # math.inf when unreachable
    reach_to_output: dict[int, int]
    reach_from_input: dict[int, int]
    traps: list[frozenset[int]]
    input_connectable: bool
    output_connectable: bool

    def to_dict(self) -> dict:
        return {
            "shortest_dist": [
                [i, j, ("inf" if d == math.inf else d)] for (i, j), d in sorted(self.shortest_dist.items())
            ],
            "reach_to_output": {str(k): v for k, v in sorted(self.reach_to_output.items())},
            "reach_from_input": {str(k): v for k, v in sorted(self.reach_from_input.items())},
            "traps": [sorted(t) for t in self.traps],
            "input_connectable": self.input_connectable,
            "output_connectable": self.output_connectable,
        }


def traps(m: ModelSpec) -> list[frozenset[int]]:
    """Leak-free SCCs with no edge leaving them."""
    succ = m.successors()
    found = []
    for comp in strongly_connected_components(m.vertices, succ):
        if comp & m.leaks:
            continue
        if any(w not in comp for v in comp for w in succ[v]):
            continue
        found.append(comp)
    return sorted(found, key=lambda c: sorted(c))


def graph_invariants(m: ModelSpec) -> GraphInvariants:
    succ = m.successors()
    pred = m.predecessors()
    dist = {}
    from_input = {}
    reached_from_inputs: set[int] = set()
    for i in sorted(m.inputs):
        d = bfs_distances(succ, i)
        from_input[i] = len(d)
        reached_from_inputs |= set(d)
        for j in sorted(m.outputs):
            dist[(i, j)] = d.get(j, math.inf)
    to_output = {}
    reaching_outputs: set[int] = set()
    for j in sorted(m.outputs):
        r = bfs_distances(pred, j)
        to_output[j] = len(r)
        reaching_outputs |= set(r)
    return GraphInvariants(
        shortest_dist=dist,
        reach_to_output=to_output,
        reach_from_input=from_input,
        traps=traps(m),
        input_connectable=reached_from_inputs == set(m.vertices),
        output_connectable=reaching_outputs == set(m.vertices),
    )


def reverse_model(m: ModelSpec) -> tuple[ModelSpec, dict[Param, Param]]:
    """Reverse every edge and swap inputs with outputs.

    Returns the reversed model and the parameter map original -> reversed
    (``a_ij`` goes to ``a_ji``; leaks are unchanged).
    """
    rev = ModelSpec(
        n=m.n,
        edges=frozenset((t, f) for f, t in m.edges),
        inputs=m.outputs,
        outputs=m.inputs,
        leaks=m.leaks,
        name=m.name,
    )
    mapping = {p: (p if p.is_leak else Param(p.frm, p.to)) for p in m.params()}
    return rev, mapping


def canonical_form(m: ModelSpec) -> tuple:
    """Relabel by breadth-first order from the inputs, then sort.

    Vertices never reached from an input follow in ascending label order.
    Used to deduplicate generated models; it is a normal form for the
    labelings produced by the transforms, not a general isomorphism test.
    """
    succ = m.successors()
    order: list[int] = []
    seen: set[int] = set()
    queue = deque(sorted(m.inputs))
    seen.update(queue)
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    order += [v for v in m.vertices if v not in seen]
    lab = {v: k for k, v in enumerate(order, 1)}
    return (
        m.n,
        tuple(sorted((lab[f], lab[t]) for f, t in m.edges)),
        tuple(sorted(lab[v] for v in m.inputs)),
        tuple(sorted(lab[v] for v in m.outputs)),
        tuple(sorted(lab[v] for v in m.leaks)),
    )
