"""Input-output equations via determinants of ``D*I - A_H``.

For output ``j`` let H be the set of compartments with a path to ``j``.  The
state of H evolves on its own (no edge enters H from outside), driven by the
principal submatrix ``A[H, H]`` of the full compartmental matrix.  Flow out
of H towards compartments that cannot reach ``j`` therefore stays on the
diagonal, exactly like a leak.  Cramer's rule then gives

    det(D*I - A_H) y_j = sum_i (-1)^(p_i + p_j) det((D*I - A_H)^(i,j)) u_i

with ``p_i``, ``p_j`` the 1-based positions of compartments ``i``, ``j``
inside H (ascending original label).
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
from typing import NamedTuple

from .model import ModelError, ModelSpec, compartmental_matrix, reaching
from .poly import MPoly, OperatorPoly, OpMatrix, minor, operator_det

__all__ = [
    "DiffMonomial",
    "IoEquation",
    "CoefficientMap",
    "NoInputReachesOutput",
    "operator_matrix",
    "io_equation",
    "io_equations",
    "coefficient_map",
    "structure_signature",
]


class NoInputReachesOutput(ModelError):
    pass


class DiffMonomial(NamedTuple):
    """``kind`` is ``'y'`` or ``'u'``; ``order`` is the derivative order."""

    kind: str
    index: int
    order: int

    def __str__(self) -> str:
        base = f"{self.kind}{self.index}"
        if self.order == 0:
            return base
        return f"D{'' if self.order == 1 else '^' + str(self.order)} {base}"


@dataclass(frozen=True)
class IoEquation:
    output: int
    vertices: tuple[int, ...]
    lhs: OperatorPoly
    rhs: dict[int, OperatorPoly]

    def terms(self) -> Iterator[tuple[DiffMonomial, MPoly]]:
        """All nonzero terms in canonical order, monic ones included."""
        for k in range(self.lhs.degree, -1, -1):
            c = self.lhs.coeff(k)
            if not c.is_zero():
                yield DiffMonomial("y", self.output, k), c
        for i in sorted(self.rhs):
            op = self.rhs[i]
            for k in range(op.degree, -1, -1):
                c = op.coeff(k)
                if not c.is_zero():
                    yield DiffMonomial("u", i, k), c

    def render(self) -> str:
        left = _render_side(self.lhs, f"y{self.output}")
        right = " + ".join(
            _render_side(self.rhs[i], f"u{i}") for i in sorted(self.rhs) if not self.rhs[i].is_zero()
        )
        return f"{left} = {right or '0'}"

    def __str__(self) -> str:
        return self.render()


def _render_side(op: OperatorPoly, var: str) -> str:
    parts = []
    for k in range(op.degree, -1, -1):
        c = op.coeff(k)
        if c.is_zero():
            continue
        d = "" if k == 0 else ("D " if k == 1 else f"D^{k} ")
        if c == 1:
            parts.append(f"{d}{var}")
        else:
            parts.append(f"({c.render()}) {d}{var}")
    return " + ".join(parts) if parts else "0"


def operator_matrix(m: ModelSpec, vertices) -> OpMatrix:
    """``D*I - A[V, V]`` for the principal submatrix on ``vertices``."""
    A = compartmental_matrix(m).principal(vertices)
    rows = []
    for r in range(A.n):
        row = []
        for c in range(A.n):
            neg = -A.entries[r][c].to_mpoly()
            row.append(OperatorPoly([neg, 1]) if r == c else OperatorPoly([neg]))
        rows.append(row)
    return OpMatrix(rows)


def io_equation(m: ModelSpec, out: int) -> IoEquation:
    if out not in m.outputs:
        raise ModelError(f"compartment {out} is not an output")
    H = sorted(reaching(m, out))
    ins = [i for i in sorted(m.inputs) if i in H]
    if not ins:
        raise NoInputReachesOutput(f"no input reaches output {out}")
    M = operator_matrix(m, H)
    pos = {v: k for k, v in enumerate(H, 1)}
    lhs = operator_det(M)
    rhs = {}
    pj = pos[out]
    for i in ins:
        pi = pos[i]
        d = operator_det(minor(M, pi, pj))
        rhs[i] = -d if (pi + pj) % 2 else d
    return IoEquation(out, tuple(H), lhs, rhs)


def io_equations(m: ModelSpec) -> list[IoEquation]:
    m.require_io()
    return [io_equation(m, j) for j in sorted(m.outputs)]


@dataclass(frozen=True)
class CoefficientMap:
    """Nonzero, non-monic coefficients keyed by (equation output, monomial).

    Order: by output, then y-derivatives descending, then inputs ascending
    with u-derivatives descending.  Positions are what gets compared between
    models, so duplicates across equations are kept.
    """

    entries: tuple[tuple[int, DiffMonomial, MPoly], ...]

    def keys(self) -> list[tuple[int, DiffMonomial]]:
        return [(j, mono) for j, mono, _ in self.entries]

    def values(self) -> list[MPoly]:
        return [p for _, _, p in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def variables(self) -> frozenset:
        out = frozenset()
        for p in self.values():
            out |= p.variables()
        return out

    def rename(self, mapping) -> CoefficientMap:
        return CoefficientMap(tuple((j, mono, p.rename(mapping)) for j, mono, p in self.entries))

    def to_list(self) -> list[dict]:
        return [
            {"equation": j, "monomial": str(mono), "coefficient": p.render()}
            for j, mono, p in self.entries
        ]


def _is_monic(p: MPoly) -> bool:
    return p == 1


def coefficient_map(m: ModelSpec, equations: list[IoEquation] | None = None) -> CoefficientMap:
    eqs = equations if equations is not None else io_equations(m)
    entries = []
    for eq in eqs:
        for mono, c in eq.terms():
            if mono.kind == "y" and mono.order == eq.lhs.degree:
                continue  # the monic leading term
            if _is_monic(c):
                continue
            entries.append((eq.output, mono, c))
    return CoefficientMap(tuple(entries))


def structure_signature(m: ModelSpec, equations: list[IoEquation] | None = None) -> frozenset:
    """Every (equation output, differential monomial) with a nonzero coefficient."""
    eqs = equations if equations is not None else io_equations(m)
    return frozenset((eq.output, mono) for eq in eqs for mono, _ in eq.terms())
