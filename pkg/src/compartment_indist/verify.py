"""Certify and search parameter renamings, test identifiability, and find
algebraic relations among coefficients."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from . import groebner
from .ioeq import CoefficientMap, coefficient_map, io_equations, structure_signature
from .model import ModelError, ModelSpec, Param
from .poly import MPoly, grevlex_key
from .rules import RuleReport, godfrey_rules
from .transforms import ParamBijection, is_permutation_certificate

__all__ = [
    "DEFAULT_SEED",
    "SEARCH_CAP",
    "SearchRefused",
    "RelationsRefused",
    "CoeffSymbol",
    "Distinguishable",
    "PermutationIndistinguishable",
    "Inconclusive",
    "IdentifiabilityResult",
    "verify_permutation",
    "search_permutation",
    "compare",
    "jacobian",
    "local_identifiability",
    "coefficient_relations",
    "relation_violations",
]

DEFAULT_SEED = 1729
SEARCH_CAP = 12
RELATION_PARAM_CAP = 6
RELATION_COEFF_CAP = 8
SAMPLE_RANGE = (1, 10**6)

MANUAL_ROUTE = (
    "no parameter renaming found; to settle indistinguishability, solve the "
    "coefficient equations c(p) = c'(p') for p' (e.g. with a Groebner basis) "
    "and check whether positive solutions exist"
)


class SearchRefused(ModelError):
    pass


class RelationsRefused(ModelError):
    pass


class CoeffSymbol(NamedTuple):
    """Fresh symbol ``c<k>`` standing for the k-th coefficient."""

    index: int

    @property
    def symbol(self) -> str:
        return f"c{self.index}"

    def __str__(self) -> str:
        return self.symbol


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Distinguishable:
    reason: str  # "structure", "rule" or "relation"
    witness: dict = field(default_factory=dict)
    kind = "Distinguishable"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "reason": self.reason, "witness": self.witness}


@dataclass(frozen=True)
class PermutationIndistinguishable:
    phi: ParamBijection
    kind = "PermutationIndistinguishable"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phi": self.phi.to_pairs()}


@dataclass(frozen=True)
class Inconclusive:
    notes: tuple[str, ...] = ()
    kind = "Inconclusive"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "notes": list(self.notes)}


@dataclass(frozen=True)
class IdentifiabilityResult:
    verdict: str  # "generically-locally-identifiable" or "unidentifiable"
    rank: int
    param_count: int
    sample_points_used: int
    ranks: tuple[int, ...] = ()

    @property
    def identifiable(self) -> bool:
        return self.verdict == "generically-locally-identifiable"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "rank": self.rank,
            "param_count": self.param_count,
            "sample_points_used": self.sample_points_used,
            "ranks": list(self.ranks),
        }


# ---------------------------------------------------------------------------
# Permutations


def verify_permutation(a: ModelSpec, b: ModelSpec, phi: ParamBijection) -> bool:
    return is_permutation_certificate(a, b, phi)


def _profile(c: CoefficientMap, p: Param) -> tuple:
    """Renaming-invariant fingerprint of how ``p`` enters each coefficient."""
    out = []
    for _, _, poly in c:
        shape = []
        for mono, coeff in poly.terms.items():
            e = mono.count(p)
            if e:
                shape.append((e, len(mono), len(set(mono)), coeff))
        out.append(tuple(sorted(shape)))
    return tuple(out)


def search_permutation(a: ModelSpec, b: ModelSpec, cap: int = SEARCH_CAP) -> ParamBijection | None:
    """Backtracking search for a renaming of a's parameters onto b's.

    Returns ``None`` when none exists.  That says nothing about
    indistinguishability beyond renamings.
    """
    pa, pb = a.params(), b.params()
    if len(pa) != len(pb):
        return None
    if len(pa) > cap:
        raise SearchRefused(f"search refused: {len(pa)} parameters exceed the cap of {cap}")
    ea, eb = io_equations(a), io_equations(b)
    if structure_signature(a, ea) != structure_signature(b, eb):
        return None
    ca, cb = coefficient_map(a, ea), coefficient_map(b, eb)
    if ca.keys() != cb.keys():
        return None

    prof_b = {q: _profile(cb, q) for q in pb}
    cands = {}
    for p in pa:
        fp = _profile(ca, p)
        cands[p] = [q for q in pb if prof_b[q] == fp]
        if not cands[p]:
            return None
    order = sorted(pa, key=lambda p: (len(cands[p]), p))
    rank = {p: k for k, p in enumerate(order)}
    # check each coefficient as soon as its last variable gets assigned
    due: dict[Param, list[int]] = {p: [] for p in pa}
    for k, poly in enumerate(ca.values()):
        vs = poly.variables()
        if vs:
            due[max(vs, key=rank.__getitem__)].append(k)
    va, vb = ca.values(), cb.values()
    assign: dict[Param, Param] = {}
    used: set[Param] = set()

    def consistent(p):
        return all(va[k].rename(assign) == vb[k] for k in due[p])

    def go(depth):
        if depth == len(order):
            return True
        p = order[depth]
        for q in cands[p]:
            if q in used:
                continue
            assign[p] = q
            used.add(q)
            if consistent(p) and go(depth + 1):
                return True
            used.discard(q)
            del assign[p]
        return False

    if not go(0):
        return None
    phi = ParamBijection(assign)
    assert is_permutation_certificate(a, b, phi)
    return phi


# ---------------------------------------------------------------------------
# Identifiability


def jacobian(m: ModelSpec) -> tuple[list[Param], list[list[MPoly]]]:
    params = list(m.params())
    c = coefficient_map(m)
    return params, [[poly.diff(p) for p in params] for poly in c.values()]


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank, ncols = 0, len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pv = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            f = rows[r][col]
            if f:
                f /= pv
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def local_identifiability(m: ModelSpec, samples: int = 3, rng: random.Random | None = None) -> IdentifiabilityResult:
    """Generic rank of the coefficient map's Jacobian at random positive
    integer points, evaluated exactly."""
    if rng is None:
        rng = random.Random(DEFAULT_SEED)
    samples = max(samples, 3)
    params, J = jacobian(m)
    ranks = []
    for _ in range(samples):
        point = {p: Fraction(rng.randint(*SAMPLE_RANGE)) for p in params}
        rows = [[entry.evaluate(point) for entry in row] for row in J]
        ranks.append(_rank(rows) if rows and params else 0)
    r = max(ranks)
    verdict = "generically-locally-identifiable" if r == len(params) else "unidentifiable"
    return IdentifiabilityResult(verdict, r, len(params), samples, tuple(ranks))


# ---------------------------------------------------------------------------
# Coefficient relations


def coefficient_relations(m: ModelSpec, max_params: int = RELATION_PARAM_CAP,
                          max_coeffs: int = RELATION_COEFF_CAP) -> list[MPoly]:
    """Generators of the ideal of relations among the coefficients.

    The coefficients are named ``c1..ck`` in coefficient-map order.  The
    result is the reduced, monic Groebner basis of the elimination ideal
    under grevlex ``c1 > c2 > ...``, sorted by leading monomial ascending.
    """
    params = list(m.params())
    cmap = coefficient_map(m)
    k = len(cmap)
    if len(params) > max_params or k > max_coeffs:
        raise RelationsRefused(
            f"relations refused: {len(params)} parameters / {k} coefficients exceed the caps "
            f"({max_params} / {max_coeffs})"
        )
    nvars = len(params) + k
    pos = {p: i for i, p in enumerate(params)}
    gens = []
    for idx, poly in enumerate(cmap.values()):
        g = {}
        for mono, coeff in poly.terms.items():
            e = [0] * nvars
            for v in mono:
                e[pos[v]] += 1
            g[tuple(e)] = g.get(tuple(e), 0) - coeff
        e = [0] * nvars
        e[len(params) + idx] = 1
        g[tuple(e)] = Fraction(1)
        gens.append({m_: c for m_, c in g.items() if c})
    syms = [CoeffSymbol(i + 1) for i in range(k)]
    out = []
    for f in groebner.eliminate(gens, nvars, len(params)):
        terms = {}
        for e, c in f.items():
            mono = tuple(s for s, x in zip(syms, e[len(params):]) for _ in range(x))
            terms[mono] = c
        out.append(MPoly(terms))
    order = syms
    out.sort(key=lambda p: grevlex_key(p.leading_term(order)[0], order))
    return out


def relation_violations(relations: list[MPoly], cmap: CoefficientMap) -> list[MPoly]:
    """Relations that do not vanish after substituting ``cmap``'s coefficients."""
    values = {CoeffSymbol(i + 1): poly for i, poly in enumerate(cmap.values())}
    return [r for r in relations if not r.substitute(values).is_zero()]


# ---------------------------------------------------------------------------
# Decision pipeline


def _structure_witness(a, b, sa, sb):
    def enc(sig):
        return sorted(f"eq y{j}: {mono}" for j, mono in sig)

    return {"only_in_a": enc(sa - sb), "only_in_b": enc(sb - sa)}


def compare(a: ModelSpec, b: ModelSpec, cap: int = SEARCH_CAP):
    """Structure, then Godfrey-Chapman rules, then coefficient relations,
    then renaming search.  Returns a verdict object."""
    ea, eb = io_equations(a), io_equations(b)
    sa, sb = structure_signature(a, ea), structure_signature(b, eb)
    if sa != sb:
        return Distinguishable("structure", _structure_witness(a, b, sa, sb))
    ca, cb = coefficient_map(a, ea), coefficient_map(b, eb)
    if ca.keys() != cb.keys():
        return Distinguishable("structure", {
            "coefficient_keys_a": [f"eq y{j}: {mono}" for j, mono in ca.keys()],
            "coefficient_keys_b": [f"eq y{j}: {mono}" for j, mono in cb.keys()],
        })
    report: RuleReport = godfrey_rules(a, b)
    if not report.passed:
        return Distinguishable("rule", report.to_dict())
    notes = []
    try:
        for model, rels, other in (("a", coefficient_relations(a), cb), ("b", coefficient_relations(b), ca)):
            bad = relation_violations(rels, other)
            if bad:
                return Distinguishable("relation", {
                    "relations_of": model,
                    "violated": [r.render() for r in bad],
                })
    except RelationsRefused as exc:
        notes.append(str(exc))
    try:
        phi = search_permutation(a, b, cap)
    except SearchRefused as exc:
        notes.append(str(exc))
        return Inconclusive(tuple(notes))
    if phi is not None:
        return PermutationIndistinguishable(phi)
    notes.append(MANUAL_ROUTE)
    return Inconclusive(tuple(notes))
