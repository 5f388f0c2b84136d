"""Buchberger's algorithm on dense exponent vectors.

Polynomials are dicts ``{exponent tuple: Fraction}`` over a fixed variable
list.  The monomial order is a product of grevlex blocks: the first block is
compared first, so with ``blocks=(k, rest)`` the first ``k`` variables are
eliminated.  Pairs are pruned with the Gebauer-Moeller criteria and picked
by the sugar strategy.  Only what elimination needs is here.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from functools import lru_cache

__all__ = ["BlockOrder", "groebner_basis", "reduce", "eliminate"]


class BlockOrder:
    def __init__(self, blocks: tuple[int, ...]):
        self.blocks = tuple(blocks)
        bounds, start = [], 0
        for size in self.blocks:
            bounds.append((start, start + size))
            start += size
        self._bounds = tuple(bounds)
        self.key = lru_cache(maxsize=None)(self._key)

    def _key(self, e: tuple) -> tuple:
        out = []
        for lo, hi in self._bounds:
            part = e[lo:hi]
            out.append(sum(part))
            out.extend(-x for x in reversed(part))
        return tuple(out)


def _lead(f: dict, order: BlockOrder) -> tuple:
    return max(f, key=order.key)


def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def _lcm(a: tuple, b: tuple) -> tuple:
    return tuple(max(x, y) for x, y in zip(a, b))


def _coprime(a: tuple, b: tuple) -> bool:
    return all(not (x and y) for x, y in zip(a, b))


def _monic(f: dict, lm: tuple) -> dict:
    c = f[lm]
    if c == 1:
        return f
    return {m: v / c for m, v in f.items()}


class _Work:
    """A polynomial under reduction with a lazy max-heap of its monomials."""

    __slots__ = ("terms", "heap", "key")

    def __init__(self, f: dict, order: BlockOrder):
        self.terms = dict(f)
        self.key = order.key
        self.heap = [(_neg(self.key(m)), m) for m in self.terms]
        heapq.heapify(self.heap)

    def lead(self):
        heap, terms = self.heap, self.terms
        while heap:
            m = heap[0][1]
            if m in terms:
                return m
            heapq.heappop(heap)
        return None

    def pop(self, m):
        heapq.heappop(self.heap)
        return self.terms.pop(m)

    def sub_scaled(self, g: dict, shift: tuple, scale: Fraction):
        """``self -= scale * x^shift * g``."""
        terms, heap, key = self.terms, self.heap, self.key
        for m, c in g.items():
            mm = tuple(x + y for x, y in zip(m, shift))
            old = terms.get(mm)
            if old is None:
                terms[mm] = -scale * c
                heapq.heappush(heap, (_neg(key(mm)), mm))
            else:
                v = old - scale * c
                if v:
                    terms[mm] = v
                else:
                    del terms[mm]


def _neg(key: tuple) -> tuple:
    return tuple(-x for x in key)


def reduce(f: dict, basis: list[tuple[tuple, dict]], order: BlockOrder) -> dict:
    """Full reduction of ``f`` by monic ``basis`` entries ``(lead, poly)``."""
    work = _Work(f, order)
    rem = {}
    while True:
        lm = work.lead()
        if lm is None:
            return rem
        c = work.terms[lm]
        for glm, g in basis:
            if _divides(glm, lm):
                work.sub_scaled(g, _sub(lm, glm), c)
                break
        else:
            rem[lm] = work.pop(lm)


def _sugar_of(f: dict) -> int:
    return max(sum(m) for m in f)


def groebner_basis(polys: list[dict], order: BlockOrder) -> list[dict]:
    """Reduced Groebner basis, monic, sorted by leading monomial descending."""
    polys_ = []  # every basis element ever created: (lead, poly, sugar)
    active: list[int] = []
    pairs: list[tuple[int, int]] = []

    def pair_info(i, j):
        li, lj = polys_[i][0], polys_[j][0]
        lcm = _lcm(li, lj)
        d = sum(lcm)
        sugar = max(polys_[i][2] + d - sum(li), polys_[j][2] + d - sum(lj))
        return sugar, order.key(lcm), lcm

    def update(h):
        nonlocal active, pairs
        lh = polys_[h][0]
        cand = [(g, _lcm(lh, polys_[g][0])) for g in active]
        keep = []
        for idx, (g, lcm_g) in enumerate(cand):
            if _coprime(lh, polys_[g][0]):
                keep.append((g, lcm_g))
                continue
            others = [c for k, c in enumerate(cand) if k != idx] + keep
            # chain criterion: drop if another new pair's lcm strictly divides
            redundant = False
            for g2, lcm2 in others:
                if g2 != g and _divides(lcm2, lcm_g) and (lcm2 != lcm_g or g2 < g):
                    redundant = True
                    break
            if not redundant:
                keep.append((g, lcm_g))
        new_pairs = [(g, h) for g, _ in keep if not _coprime(lh, polys_[g][0])]
        old = []
        for i, j in pairs:
            lij = _lcm(polys_[i][0], polys_[j][0])
            if (_divides(lh, lij) and _lcm(polys_[i][0], lh) != lij and _lcm(lh, polys_[j][0]) != lij):
                continue
            old.append((i, j))
        pairs = old + new_pairs
        active = [g for g in active if not _divides(lh, polys_[g][0])] + [h]

    def add(f):
        lm = _lead(f, order)
        f = _monic(f, lm)
        polys_.append((lm, f, _sugar_of(f)))
        update(len(polys_) - 1)

    def basis():
        return [(polys_[g][0], polys_[g][1]) for g in active]

    for p in polys:
        if p:
            r = reduce(p, basis(), order)
            if r:
                add(r)
    while pairs:
        best = min(range(len(pairs)), key=lambda k: (pair_info(*pairs[k])[:2], pairs[k]))
        i, j = pairs.pop(best)
        (li, fi, _), (lj, fj, _) = polys_[i], polys_[j]
        lcm = _lcm(li, lj)
        work = _Work({tuple(x + y for x, y in zip(m, _sub(lcm, li))): c for m, c in fi.items()}, order)
        work.sub_scaled(fj, _sub(lcm, lj), Fraction(1))
        r = reduce(work.terms, basis(), order)
        if r:
            add(r)
    return _interreduce(basis(), order)


def _interreduce(basis, order):
    # drop elements whose leading monomial is divisible by another's
    keep = []
    for idx, (lm, f) in enumerate(basis):
        redundant = any(
            _divides(other, lm) and (other != lm or jdx < idx)
            for jdx, (other, _) in enumerate(basis)
            if jdx != idx
        )
        if not redundant:
            keep.append((lm, f))
    out = []
    for idx, (lm, f) in enumerate(keep):
        others = [b for jdx, b in enumerate(keep) if jdx != idx]
        tail = {m: c for m, c in f.items() if m != lm}
        r = reduce(tail, others, order)
        r[lm] = Fraction(1)
        out.append((lm, r))
    out.sort(key=lambda t: order.key(t[0]), reverse=True)
    return [f for _, f in out]


def eliminate(polys: list[dict], nvars: int, k: int) -> list[dict]:
    """Generators of the ideal intersected with the ring in the last
    ``nvars - k`` variables, as a reduced Groebner basis of that ideal."""
    order = BlockOrder((k, nvars - k))
    gb = groebner_basis(polys, order)
    return [f for f in gb if all(not any(m[:k]) for m in f)]
