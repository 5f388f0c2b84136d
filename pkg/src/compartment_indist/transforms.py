"""Constructive indistinguishability.

Each transform takes a model of a supported shape and returns a new model
together with the parameter renaming that carries one coefficient map onto
the other.  Transforms certify their own output by default: the renamed
coefficient map of the source must equal the coefficient map of the result,
otherwise :class:`CertificationError` is raised.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple

from .ioeq import CoefficientMap, coefficient_map, io_equations, structure_signature
from .model import ModelError, ModelSpec, Param, canonical_form

__all__ = [
    "ParamBijection",
    "BijectionError",
    "TransformError",
    "CertificationError",
    "SkeletalMatchError",
    "Detour",
    "SkeletalPathWitness",
    "apply_bijection",
    "is_permutation_certificate",
    "match_skeletal_path",
    "move_leak",
    "leak_to_terminal_cycle",
    "terminal_cycle_to_leak",
    "shift_detour",
    "unshift_detour",
    "branch_submodel",
    "compose_sink",
    "compose_source",
    "enumerate_family",
]


class BijectionError(ValueError):
    pass


class TransformError(ModelError):
    """The model does not satisfy a transform's preconditions."""


class CertificationError(TransformError):
    """A constructed renaming failed exact coefficient-map comparison."""


class SkeletalMatchError(TransformError):
    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(reason + (f": {detail}" if detail else ""))


# ---------------------------------------------------------------------------
# Parameter bijections


class ParamBijection:
    """Bijective renaming of parameters, ``Param -> Param``."""

    __slots__ = ("_map",)

    def __init__(self, mapping: Mapping[Param, Param] | Iterable[tuple[Param, Param]]):
        items = list(mapping.items()) if isinstance(mapping, Mapping) else list(mapping)
        m = {}
        for src, dst in items:
            if src in m and m[src] != dst:
                raise BijectionError(f"{src} is mapped twice")
            m[src] = dst
        if len(set(m.values())) != len(m):
            raise BijectionError("renaming is not injective")
        self._map = m

    @classmethod
    def identity(cls, params: Iterable[Param]) -> ParamBijection:
        return cls({p: p for p in params})

    @property
    def domain(self) -> frozenset[Param]:
        return frozenset(self._map)

    @property
    def image(self) -> frozenset[Param]:
        return frozenset(self._map.values())

    def __call__(self, p: Param) -> Param:
        try:
            return self._map[p]
        except KeyError:
            raise BijectionError(f"parameter {p} is not mapped") from None

    def __getitem__(self, p: Param) -> Param:
        return self(p)

    def __contains__(self, p) -> bool:
        return p in self._map

    def __len__(self) -> int:
        return len(self._map)

    def items(self):
        return sorted(self._map.items())

    def inverse(self) -> ParamBijection:
        return ParamBijection({v: k for k, v in self._map.items()})

    def then(self, other: ParamBijection) -> ParamBijection:
        """Composition: apply ``self`` first, then ``other``."""
        return ParamBijection({k: other(v) for k, v in self._map.items()})

    def union(self, other: ParamBijection) -> ParamBijection:
        overlap = self.domain & other.domain
        if overlap:
            raise BijectionError(f"domains overlap on {sorted(overlap)}")
        return ParamBijection(list(self._map.items()) + list(other._map.items()))

    def is_identity(self) -> bool:
        return all(k == v for k, v in self._map.items())

    def to_pairs(self) -> list[list[str]]:
        return [[k.symbol, v.symbol] for k, v in self.items()]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Iterable[str]]) -> ParamBijection:
        out = []
        for pair in pairs:
            src, dst = pair
            out.append((Param.parse(src), Param.parse(dst)))
        return cls(out)

    def __eq__(self, other) -> bool:
        if isinstance(other, ParamBijection):
            return self._map == other._map
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}->{v}" for k, v in self.items())
        return f"ParamBijection({body})"


def apply_bijection(c: CoefficientMap, phi: ParamBijection) -> CoefficientMap:
    missing = sorted(c.variables() - phi.domain)
    if missing:
        raise BijectionError(f"unmapped parameter(s): {', '.join(map(str, missing))}")
    return c.rename(phi)


def is_permutation_certificate(a: ModelSpec, b: ModelSpec, phi: ParamBijection) -> bool:
    """True iff ``phi`` maps a's parameters onto b's and renames a's
    coefficient map into b's, key by key."""
    pa, pb = frozenset(a.params()), frozenset(b.params())
    missing = sorted(pa - phi.domain)
    if missing:
        raise BijectionError(f"unmapped parameter(s): {', '.join(map(str, missing))}")
    if phi.domain != pa or phi.image != pb:
        return False
    ea, eb = io_equations(a), io_equations(b)
    if structure_signature(a, ea) != structure_signature(b, eb):
        return False
    ca, cb = coefficient_map(a, ea), coefficient_map(b, eb)
    if ca.keys() != cb.keys():
        return False
    return apply_bijection(ca, phi).values() == cb.values()


def _certify(a: ModelSpec, b: ModelSpec, phi: ParamBijection, what: str):
    if not is_permutation_certificate(a, b, phi):
        raise CertificationError(f"{what}: renaming does not carry the coefficient map of {a} onto {b}")


# ---------------------------------------------------------------------------
# Skeletal path recognition


class Detour(NamedTuple):
    """Off-ramp from path position ``i`` into ``s``; on-ramp from ``t`` to
    path position ``j``.  Positions are 1-based along the path."""

    i: int
    j: int
    s: int
    t: int
    vertices: frozenset[int]


@dataclass(frozen=True)
class SkeletalPathWitness:
    path: tuple[int, ...]
    kind: str  # "path", "leaks", "terminal_cycle" or "detour"
    leaks: frozenset[int] = frozenset()
    detour: Detour | None = None

    @property
    def n(self) -> int:
        return len(self.path)

    def position(self, v: int) -> int:
        return self.path.index(v) + 1

    def at(self, k: int) -> int:
        """Compartment at 1-based path position ``k``."""
        return self.path[k - 1]

    def to_dict(self) -> dict:
        out = {"path": list(self.path), "kind": self.kind, "leaks": sorted(self.leaks)}
        if self.detour is not None:
            d = self.detour
            out["detour"] = {"i": d.i, "j": d.j, "s": d.s, "t": d.t, "vertices": sorted(d.vertices)}
        return out


_PATH_LIMIT = 20000


def _simple_paths(succ, source, target):
    stack = [(source, [source])]
    count = 0
    while stack:
        v, trail = stack.pop()
        if v == target:
            count += 1
            if count > _PATH_LIMIT:
                return
            yield tuple(trail)
            continue
        for w in reversed(succ[v]):
            if w not in trail:
                stack.append((w, trail + [w]))


def _weakly_connected(vertices: set[int], edges: Iterable[tuple[int, int]]) -> bool:
    if not vertices:
        return False
    adj = {v: set() for v in vertices}
    for f, t in edges:
        adj[f].add(t)
        adj[t].add(f)
    start = next(iter(vertices))
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v] - seen:
            seen.add(w)
            queue.append(w)
    return seen == vertices


def _classify(m: ModelSpec, path: tuple[int, ...], active: set[int]) -> SkeletalPathWitness | None:
    on_path = set(path)
    path_edges = {(path[k], path[k + 1]) for k in range(len(path) - 1)}
    extra = set(m.edges) - path_edges
    rest = active - on_path
    if not rest:
        if not extra:
            return SkeletalPathWitness(path, "leaks" if m.leaks else "path", m.leaks)
        if len(path) >= 2 and extra == {(path[-1], path[-2])} and not m.leaks:
            return SkeletalPathWitness(path, "terminal_cycle")
        return None
    internal, off, on = [], [], []
    for f, t in extra:
        if f in rest and t in rest:
            internal.append((f, t))
        elif f in on_path and t in rest:
            off.append((f, t))
        elif f in rest and t in on_path:
            on.append((f, t))
        else:
            return None  # chord between path compartments
    if len(off) != 1 or len(on) != 1 or not _weakly_connected(rest, internal):
        return None
    (pi, s), (t, pj) = off[0], on[0]
    detour = Detour(path.index(pi) + 1, path.index(pj) + 1, s, t, frozenset(rest))
    return SkeletalPathWitness(path, "detour", m.leaks, detour)


def match_skeletal_path(m: ModelSpec) -> SkeletalPathWitness:
    """Find the input-to-output backbone and classify what hangs off it.

    Compartments with no edges, no leak and no input/output role are
    ignored.  Supported shapes: a bare path, a path with leaks, a path with
    a terminal cycle, and a path with a single detour.
    """
    if len(m.inputs) != 1 or len(m.outputs) != 1:
        raise SkeletalMatchError("pattern not supported", "a single input and a single output are required")
    (src,), (dst,) = tuple(m.inputs), tuple(m.outputs)
    if src == dst:
        raise SkeletalMatchError("pattern not supported", "input and output coincide")
    active = {v for e in m.edges for v in e} | set(m.leaks) | {src, dst}
    found_path = False
    for path in _simple_paths(m.successors(), src, dst):
        found_path = True
        w = _classify(m, path, active)
        if w is not None:
            return w
    if not found_path:
        raise SkeletalMatchError("no spanning skeleton", f"no path from {src} to {dst}")
    raise SkeletalMatchError("pattern not supported")


# ---------------------------------------------------------------------------
# Leak moves and terminal cycles


def _path_edge(w: SkeletalPathWitness, k: int) -> Param:
    """Parameter of the path edge leaving position ``k``."""
    return Param.edge(w.at(k), w.at(k + 1))


def move_leak(m: ModelSpec, i: int, j: int, *, certify: bool = True) -> tuple[ModelSpec, ParamBijection]:
    """Move the single leak of a path model from compartment ``i`` to ``j``."""
    w = match_skeletal_path(m)
    if w.kind != "leaks" or w.leaks != {i}:
        raise TransformError(f"move_leak needs a path model whose only leak is at {i}")
    for label, v in (("i", i), ("j", j)):
        if v not in w.path:
            raise TransformError(f"{label}={v} is not on the path")
        if v == w.path[-1]:
            raise TransformError(f"{label}={v} is the output; the leak must stay before it ({label} < n)")
    target = m.replace(leaks=frozenset({j}))
    if i == j:
        return target, ParamBijection.identity(m.params())
    ei, ej = _path_edge(w, w.position(i)), _path_edge(w, w.position(j))
    mapping = {p: p for p in m.params()}
    mapping.update({Param.leak(i): Param.leak(j), ei: ej, ej: ei})
    phi = ParamBijection(mapping)
    if certify:
        _certify(m, target, phi, "move_leak")
    return target, phi


def leak_to_terminal_cycle(m: ModelSpec, *, certify: bool = True) -> tuple[ModelSpec, ParamBijection]:
    """Trade a leak at the second-to-last path compartment for an edge back
    from the output into it."""
    w = match_skeletal_path(m)
    if w.kind != "leaks" or len(w.path) < 2 or w.leaks != {w.path[-2]}:
        raise TransformError("leak_to_terminal_cycle needs a path model whose only leak is at position n-1")
    last, before = w.path[-1], w.path[-2]
    target = m.replace(edges=m.edges | {(last, before)}, leaks=frozenset())
    mapping = {p: p for p in m.params()}
    del mapping[Param.leak(before)]
    mapping[Param.leak(before)] = Param.edge(last, before)
    phi = ParamBijection(mapping)
    if certify:
        _certify(m, target, phi, "leak_to_terminal_cycle")
    return target, phi


def terminal_cycle_to_leak(m: ModelSpec, *, certify: bool = True) -> tuple[ModelSpec, ParamBijection]:
    """Inverse of :func:`leak_to_terminal_cycle`."""
    w = match_skeletal_path(m)
    if w.kind != "terminal_cycle":
        raise TransformError("terminal_cycle_to_leak needs a path model with a terminal cycle")
    source = m.replace(edges=m.edges - {(w.path[-1], w.path[-2])}, leaks=frozenset({w.path[-2]}))
    back, phi = leak_to_terminal_cycle(source, certify=certify)
    assert back == m
    return source, phi.inverse()


# ---------------------------------------------------------------------------
# Detours


def _rewire(m: ModelSpec, w: SkeletalPathWitness, i: int, j: int) -> ModelSpec:
    d = w.detour
    edges = set(m.edges)
    edges -= {(w.at(d.i), d.s), (d.t, w.at(d.j))}
    edges |= {(w.at(i), d.s), (d.t, w.at(j))}
    return m.replace(edges=frozenset(edges))


def shift_detour(m: ModelSpec, w: SkeletalPathWitness | None = None, *, certify: bool = True
                 ) -> tuple[ModelSpec, ParamBijection]:
    """Move a detour one position down the path.

    Off-ramp ``i -> s`` becomes ``(i+1) -> s`` and on-ramp ``t -> j`` becomes
    ``t -> (j+1)``.  Path edges rotate by one position (the last one wraps
    to the first); detour-internal parameters are fixed.
    """
    if w is None:
        w = match_skeletal_path(m)
    if w.kind != "detour" or w.detour is None:
        raise TransformError("shift_detour needs a skeletal path model with one detour")
    d, n = w.detour, w.n
    if not 1 <= d.i <= d.j <= n - 1:
        raise TransformError(f"detour positions must satisfy 1 <= i <= j <= n-1, got i={d.i}, j={d.j}, n={n}")
    if d.i >= n - 1:
        raise TransformError(
            f"exchange detour at i=j=n-1={n - 1}: the shifted model is not indistinguishable"
        )
    if not w.leaks <= d.vertices:
        raise TransformError(
            f"leaks {sorted(w.leaks - d.vertices)} sit on the path; only detour compartments may leak"
        )
    target = _rewire(m, w, d.i + 1, d.j + 1)
    mapping = {p: p for p in m.params()}
    for k in range(1, n - 1):
        mapping[_path_edge(w, k)] = _path_edge(w, k + 1)
    mapping[_path_edge(w, n - 1)] = _path_edge(w, 1)
    mapping[Param.edge(w.at(d.i), d.s)] = Param.edge(w.at(d.i + 1), d.s)
    mapping[Param.edge(d.t, w.at(d.j))] = Param.edge(d.t, w.at(d.j + 1))
    phi = ParamBijection(mapping)
    if certify:
        _certify(m, target, phi, "shift_detour")
    return target, phi


def unshift_detour(m: ModelSpec, w: SkeletalPathWitness | None = None, *, certify: bool = True
                   ) -> tuple[ModelSpec, ParamBijection]:
    """Move a detour one position back up the path (inverse of :func:`shift_detour`)."""
    if w is None:
        w = match_skeletal_path(m)
    if w.kind != "detour" or w.detour is None:
        raise TransformError("unshift_detour needs a skeletal path model with one detour")
    d = w.detour
    if d.i < 2 or d.j < 2 or d.i > d.j:
        raise TransformError(f"detour at i={d.i}, j={d.j} has no predecessor position")
    source = _rewire(m, w, d.i - 1, d.j - 1)
    back, phi = shift_detour(source, certify=certify)
    if back != m:
        raise TransformError("detour predecessor does not shift back onto the model")
    return source, phi.inverse()


# ---------------------------------------------------------------------------
# Sink and source gluing


def branch_submodel(m: ModelSpec, vertices: Iterable[int]) -> ModelSpec:
    """The part of ``m`` living inside ``vertices``: internal edges, and the
    inputs, outputs and leaks that fall inside."""
    vs = frozenset(vertices)
    return m.replace(
        edges=frozenset(e for e in m.edges if e[0] in vs and e[1] in vs),
        inputs=m.inputs & vs,
        outputs=m.outputs & vs,
        leaks=m.leaks & vs,
    )


def _outside(m: ModelSpec, vs: frozenset[int]) -> tuple:
    return (
        frozenset(e for e in m.edges if not (e[0] in vs and e[1] in vs)),
        m.inputs - vs,
        m.outputs - vs,
        m.leaks - vs,
    )


def _glue(a, b, branch, inner, shared_role, certify) -> ParamBijection:
    va, vb = (frozenset(x) for x in branch)
    if a.n != b.n:
        raise TransformError("models have different compartment counts")
    shared = getattr(a, shared_role)
    if len(shared) != 1 or shared != getattr(b, shared_role):
        raise TransformError(f"both models need the same single {shared_role[:-1]}")
    (hub,) = tuple(shared)
    if hub not in va or hub not in vb:
        raise TransformError(f"branch must contain the shared {shared_role[:-1]} {hub}")
    if _outside(a, va) != _outside(b, vb):
        raise TransformError("models differ outside the designated branch")
    sub_a, sub_b = branch_submodel(a, va), branch_submodel(b, vb)
    try:
        ok = is_permutation_certificate(sub_a, sub_b, inner)
    except (BijectionError, ModelError) as exc:
        raise TransformError(f"branch bijection invalid: {exc}") from None
    if not ok:
        raise TransformError("branch bijection invalid: it does not certify the branch submodels")
    outside = [p for p in a.params() if p not in frozenset(sub_a.params())]
    phi = inner.union(ParamBijection.identity(outside))
    if certify:
        _certify(a, b, phi, f"compose ({shared_role[:-1]} gluing)")
    return phi


def compose_sink(a: ModelSpec, b: ModelSpec, branch: tuple[Iterable[int], Iterable[int]],
                 inner: ParamBijection, *, certify: bool = True) -> ParamBijection:
    """Extend a branch certificate to two sink models sharing their output.

    ``branch`` gives the vertex sets of the differing branch in ``a`` and
    ``b``; everything else must coincide.
    """
    return _glue(a, b, branch, inner, "outputs", certify)


def compose_source(a: ModelSpec, b: ModelSpec, branch: tuple[Iterable[int], Iterable[int]],
                   inner: ParamBijection, *, certify: bool = True) -> ParamBijection:
    """Extend a branch certificate to two source models sharing their input.

    The gluing is done directly on the source models and then certified;
    reversing arrows does not preserve coefficient maps in general, so the
    reduction to sink models is not used.
    """
    return _glue(a, b, branch, inner, "inputs", certify)


# ---------------------------------------------------------------------------
# Family enumeration


def _neighbours(m: ModelSpec, certify: bool):
    try:
        w = match_skeletal_path(m)
    except SkeletalMatchError:
        return
    if w.kind == "leaks" and len(w.leaks) == 1:
        (i,) = tuple(w.leaks)
        if i != w.path[-1]:
            for j in w.path[:-1]:
                if j != i:
                    yield move_leak(m, i, j, certify=certify)
            if i == w.path[-2]:
                yield leak_to_terminal_cycle(m, certify=certify)
    elif w.kind == "terminal_cycle":
        yield terminal_cycle_to_leak(m, certify=certify)
    elif w.kind == "detour":
        for step in (shift_detour, unshift_detour):
            try:
                yield step(m, w, certify=certify)
            except CertificationError:
                raise
            except TransformError:
                pass


def enumerate_family(m: ModelSpec, depth: int, *, certify: bool = True) -> list[tuple[ModelSpec, ParamBijection]]:
    """Breadth-first closure of ``m`` under the constructive transforms.

    Every entry carries the composed renaming from ``m``.  Models equal up to
    :func:`canonical_form` are reported once, at their first discovery.
    """
    w = match_skeletal_path(m)
    supported = (w.kind == "leaks" and len(w.leaks) == 1) or w.kind in ("terminal_cycle", "detour", "path")
    if not supported:
        raise SkeletalMatchError("pattern not supported", "several leaks on the path")
    family = [(m, ParamBijection.identity(m.params()))]
    seen = {canonical_form(m)}
    frontier = list(family)
    for _ in range(depth):
        nxt = []
        for model, phi in frontier:
            for child, step in _neighbours(model, certify):
                key = canonical_form(child)
                if key in seen:
                    continue
                seen.add(key)
                entry = (child, phi.then(step))
                family.append(entry)
                nxt.append(entry)
        frontier = nxt
        if not frontier:
            break
    return family
