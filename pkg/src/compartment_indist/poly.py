"""Exact symbolic arithmetic for compartmental models.

Three layers live here:

* :class:`MPoly` -- sparse multivariate polynomials with rational
  coefficients.  A monomial is a sorted tuple of variables with repetition,
  so ``a01*a12^2`` is ``(a01, a12, a12)``.  Variables only need to be
  hashable and mutually orderable (model parameters are small named tuples).
* :class:`OperatorPoly` -- polynomials in the differential operator ``D``
  whose coefficients are :class:`MPoly`.
* :class:`OpMatrix` -- square grids of operator polynomials, with an exact
  determinant by sparsity-guided cofactor expansion.

Everything is immutable and exact; there is no floating point on any path.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Mapping, Sequence
from fractions import Fraction
from typing import Any

__all__ = [
    "MPoly",
    "OperatorPoly",
    "OpMatrix",
    "NotDivisible",
    "operator_det",
    "det_oracle",
    "bareiss_det",
    "minor",
    "grevlex_key",
]


class NotDivisible(ArithmeticError):
    """Raised by exact division when the divisor does not divide."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not polynomial coefficients")
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


def grevlex_key(mono: tuple, order: Sequence) -> tuple:
    """Sort key for graded reverse lexicographic order.

    ``order`` lists the variables from greatest to smallest.  Larger keys
    mean larger monomials.
    """
    counts = {}
    for v in mono:
        counts[v] = counts.get(v, 0) + 1
    return (len(mono), tuple(-counts.get(v, 0) for v in reversed(order)))


def _render_var(v) -> str:
    name = getattr(v, "symbol", None)
    return name if name is not None else str(v)


class MPoly:
    """Multivariate polynomial over the rationals.

    Instances are immutable.  Zero coefficients are never stored, so two
    polynomials are equal exactly when their term dictionaries are equal.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Any] | None = None):
        clean = {}
        if terms:
            for mono, coeff in terms.items():
                c = _as_fraction(coeff)
                if c:
                    mono = tuple(sorted(mono))
                    c = clean.get(mono, 0) + c
                    if c:
                        clean[mono] = c
                    else:
                        clean.pop(mono, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> MPoly:
        # terms already canonical: sorted monomials, nonzero Fractions
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, value) -> MPoly:
        c = _as_fraction(value)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, v) -> MPoly:
        return cls._raw({(v,): Fraction(1)})

    @classmethod
    def zero(cls) -> MPoly:
        return cls._raw({})

    @classmethod
    def one(cls) -> MPoly:
        return cls._raw({(): Fraction(1)})

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> Mapping[tuple, Fraction]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        """The value of a constant polynomial; raises for non-constants."""
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._terms.get((), Fraction(0))

    def variables(self) -> frozenset:
        return frozenset(v for mono in self._terms for v in mono)

    def degree(self) -> int:
        return max((len(m) for m in self._terms), default=-1)

    def degree_in(self, v) -> int:
        return max((m.count(v) for m in self._terms), default=-1)

    def __len__(self) -> int:
        return len(self._terms)

    def sorted_terms(self, order: Sequence | None = None) -> list[tuple[tuple, Fraction]]:
        """Terms in decreasing graded reverse lexicographic order."""
        if order is None:
            order = sorted(self.variables())
        return sorted(self._terms.items(), key=lambda t: grevlex_key(t[0], order), reverse=True)

    def leading_term(self, order: Sequence | None = None) -> tuple[tuple, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        if order is None:
            order = sorted(self.variables())
        return max(self._terms.items(), key=lambda t: grevlex_key(t[0], order))

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(other) -> MPoly:
        if isinstance(other, MPoly):
            return other
        return MPoly.const(other)

    def __add__(self, other) -> MPoly:
        other = self._coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                del out[mono]
        return MPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> MPoly:
        return MPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> MPoly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> MPoly:
        return self._coerce(other) - self

    def __mul__(self, other) -> MPoly:
        other = self._coerce(other)
        a, b = self._terms, other._terms
        if not a or not b:
            return MPoly._raw({})
        if len(b) == 1 and () in b:
            k = b[()]
            return MPoly._raw({m: c * k for m, c in a.items()})
        if len(a) == 1 and () in a:
            k = a[()]
            return MPoly._raw({m: c * k for m, c in b.items()})
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                mono = tuple(sorted(m1 + m2)) if m1 and m2 else (m1 or m2)
                s = out.get(mono, 0) + c1 * c2
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        return MPoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> MPoly:
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MPoly.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def exact_div(self, other: MPoly) -> MPoly:
        """Quotient ``self / other``; raises :class:`NotDivisible` otherwise.

        Uses the division algorithm with one divisor.  When the divisor
        divides exactly, every intermediate leading term is divisible, so a
        non-divisible leading term proves non-divisibility.
        """
        other = self._coerce(other)
        if not other._terms:
            raise ZeroDivisionError("division by the zero polynomial")
        order = sorted(self.variables() | other.variables())
        lead_m, lead_c = other.leading_term(order)
        quotient: dict = {}
        rem = self
        while rem._terms:
            m, c = rem.leading_term(order)
            q_mono = _mono_div(m, lead_m)
            if q_mono is None:
                raise NotDivisible(f"{other} does not divide {self}")
            q_c = c / lead_c
            quotient[q_mono] = quotient.get(q_mono, 0) + q_c
            rem = rem - other * MPoly._raw({q_mono: q_c})
        return MPoly(quotient)

    def divides(self, other: MPoly) -> bool:
        try:
            other.exact_div(self)
        except NotDivisible:
            return False
        return True

    # -- substitution and calculus ---------------------------------------

    def rename(self, mapping: Mapping | Callable) -> MPoly:
        """Substitute variables by variables (a renaming)."""
        get = mapping if callable(mapping) else mapping.__getitem__
        cache: dict = {}
        out: dict = {}
        for mono, c in self._terms.items():
            new = []
            for v in mono:
                if v not in cache:
                    cache[v] = get(v)
                new.append(cache[v])
            key = tuple(sorted(new))
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                del out[key]
        return MPoly._raw(out)

    def substitute(self, values: Mapping) -> MPoly:
        """Replace variables by polynomials or numbers; unmapped ones stay."""
        result = MPoly.zero()
        for mono, c in self._terms.items():
            term = MPoly.const(c)
            kept = []
            for v in mono:
                if v in values:
                    val = values[v]
                    if not isinstance(val, MPoly):
                        val = MPoly.const(val)
                    term = term * val
                else:
                    kept.append(v)
            if kept:
                term = term * MPoly._raw({tuple(kept): Fraction(1)})
            result = result + term
        return result

    def evaluate(self, point: Mapping) -> Fraction:
        """Exact value at a point; every variable must be assigned."""
        total = Fraction(0)
        for mono, c in self._terms.items():
            val = c
            for v in mono:
                val *= point[v]
            total += val
        return total

    def diff(self, v) -> MPoly:
        out: dict = {}
        for mono, c in self._terms.items():
            k = mono.count(v)
            if not k:
                continue
            idx = mono.index(v)
            new = mono[:idx] + mono[idx + 1:]
            s = out.get(new, 0) + c * k
            if s:
                out[new] = s
            else:
                del out[new]
        return MPoly._raw(out)

    # -- comparison and rendering ----------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, MPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._terms == MPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"MPoly({self.render()!r})"

    def render(self, mul: str = "*") -> str:
        if not self._terms:
            return "0"
        order = sorted(self.variables())
        pieces = []
        for mono, c in self.sorted_terms(order):
            factors = []
            for v, group in itertools.groupby(mono):
                e = len(list(group))
                name = _render_var(v)
                factors.append(name if e == 1 else f"{name}^{e}")
            body = mul.join(factors)
            mag = abs(c)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}{mul}{body}"
            pieces.append(("-" if c < 0 else "+", text))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in pieces[1:]:
            out += sign + text
        return out


def _mono_div(m: tuple, d: tuple) -> tuple | None:
    rest = list(m)
    for v in d:
        try:
            rest.remove(v)
        except ValueError:
            return None
    return tuple(rest)


# ---------------------------------------------------------------------------
# Operator polynomials


class OperatorPoly:
    """Polynomial ``c_0 + c_1 D + ... + c_d D^d`` with :class:`MPoly` coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [c if isinstance(c, MPoly) else MPoly.const(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs: tuple[MPoly, ...] = tuple(cs)

    @classmethod
    def const(cls, p) -> OperatorPoly:
        return cls([p])

    @classmethod
    def D(cls, power: int = 1) -> OperatorPoly:
        return cls([0] * power + [1])

    @classmethod
    def zero(cls) -> OperatorPoly:
        return cls()

    @classmethod
    def one(cls) -> OperatorPoly:
        return cls([1])

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> MPoly:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else MPoly.zero()

    def leading(self) -> MPoly:
        return self.coeffs[-1] if self.coeffs else MPoly.zero()

    def variables(self) -> frozenset:
        out = frozenset()
        for c in self.coeffs:
            out |= c.variables()
        return out

    def __add__(self, other) -> OperatorPoly:
        other = _op_coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return OperatorPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self) -> OperatorPoly:
        return OperatorPoly(-c for c in self.coeffs)

    def __sub__(self, other) -> OperatorPoly:
        return self + (-_op_coerce(other))

    def __mul__(self, other) -> OperatorPoly:
        other = _op_coerce(other)
        if not self.coeffs or not other.coeffs:
            return OperatorPoly()
        out = [MPoly.zero()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return OperatorPoly(out)

    __rmul__ = __mul__

    def exact_div(self, other: OperatorPoly) -> OperatorPoly:
        """Exact quotient in the ring of operator polynomials."""
        other = _op_coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero operator polynomial")
        rem = list(self.coeffs)
        dq = other.degree
        lead = other.leading()
        quotient = [MPoly.zero()] * max(len(rem) - dq, 0)
        for k in range(len(rem) - 1, dq - 1, -1):
            if rem[k].is_zero():
                continue
            q = rem[k].exact_div(lead)
            quotient[k - dq] = q
            for t, b in enumerate(other.coeffs):
                rem[k - dq + t] = rem[k - dq + t] - q * b
        if any(not r.is_zero() for r in rem):
            raise NotDivisible("operator polynomial division leaves a remainder")
        return OperatorPoly(quotient)

    def rename(self, mapping) -> OperatorPoly:
        return OperatorPoly(c.rename(mapping) for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, OperatorPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"OperatorPoly({self.render()!r})"

    def render(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c.is_zero():
                continue
            op = "" if k == 0 else ("D" if k == 1 else f"D^{k}")
            if c == 1 and op:
                parts.append(op)
            else:
                parts.append(f"({c.render()})" + (f" {op}" if op else ""))
        return " + ".join(parts)

    __str__ = render


def _op_coerce(x) -> OperatorPoly:
    if isinstance(x, OperatorPoly):
        return x
    return OperatorPoly([x])


# ---------------------------------------------------------------------------
# Operator matrices and determinants


class OpMatrix:
    """Square matrix of :class:`OperatorPoly` entries (dimension may be 0)."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        grid = tuple(tuple(_op_coerce(e) for e in row) for row in rows)
        n = len(grid)
        if any(len(r) != n for r in grid):
            raise ValueError("operator matrix must be square")
        self.rows = grid

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, idx) -> OperatorPoly:
        r, c = idx
        return self.rows[r][c]

    def __eq__(self, other) -> bool:
        if isinstance(other, OpMatrix):
            return self.rows == other.rows
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        body = "; ".join(", ".join(e.render() for e in row) for row in self.rows)
        return f"OpMatrix([{body}])"


def minor(M: OpMatrix, i: int, j: int) -> OpMatrix:
    """Delete row ``i`` and column ``j`` (both 1-based)."""
    n = M.size
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"minor ({i}, {j}) out of range for a {n}x{n} matrix")
    return OpMatrix(
        [[e for c, e in enumerate(row, 1) if c != j] for r, row in enumerate(M.rows, 1) if r != i]
    )


def operator_det(M: OpMatrix) -> OperatorPoly:
    """Exact determinant by cofactor expansion along the sparsest line.

    Sub-determinants are memoized on their (row set, column set); the memo
    lives only for this call.
    """
    grid = M.rows
    memo: dict = {}

    def det(rows: tuple, cols: tuple) -> OperatorPoly:
        if not rows:
            return OperatorPoly.one()
        if len(rows) == 1:
            return grid[rows[0]][cols[0]]
        key = (rows, cols)
        hit = memo.get(key)
        if hit is not None:
            return hit
        best = None
        for p, r in enumerate(rows):
            nz = [q for q, c in enumerate(cols) if not grid[r][c].is_zero()]
            if not nz:
                memo[key] = OperatorPoly.zero()
                return memo[key]
            if best is None or len(nz) < len(best[2]):
                best = ("row", p, nz)
        for q, c in enumerate(cols):
            nz = [p for p, r in enumerate(rows) if not grid[r][c].is_zero()]
            if not nz:
                memo[key] = OperatorPoly.zero()
                return memo[key]
            if len(nz) < len(best[2]):
                best = ("col", q, nz)
        axis, fixed, hits = best
        total = OperatorPoly.zero()
        for other in hits:
            p, q = (fixed, other) if axis == "row" else (other, fixed)
            entry = grid[rows[p]][cols[q]]
            sub = det(rows[:p] + rows[p + 1:], cols[:q] + cols[q + 1:])
            term = entry * sub
            total = total - term if (p + q) % 2 else total + term
        memo[key] = total
        return total

    idx = tuple(range(M.size))
    return det(idx, idx)


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


DET_ORACLE_CAP = 8


def det_oracle(M: OpMatrix) -> OperatorPoly:
    """Leibniz-formula determinant.  Factorial cost; meant for testing."""
    n = M.size
    if n > DET_ORACLE_CAP:
        raise ValueError(f"det_oracle is capped at dimension {DET_ORACLE_CAP}, got {n}")
    total = OperatorPoly.zero()
    for perm in itertools.permutations(range(n)):
        term = OperatorPoly.one()
        for r, c in enumerate(perm):
            e = M.rows[r][c]
            if e.is_zero():
                term = None
                break
            term = term * e
        if term is None:
            continue
        total = total + term if _permutation_sign(perm) > 0 else total - term
    return total


def bareiss_det(M: OpMatrix) -> OperatorPoly:
    """Fraction-free (Bareiss) elimination determinant.

    An independent backend to :func:`operator_det`; relies on exact division
    of operator polynomials.
    """
    n = M.size
    if n == 0:
        return OperatorPoly.one()
    a = [list(row) for row in M.rows]
    sign = 1
    prev = OperatorPoly.one()
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((r for r in range(k + 1, n) if not a[r][k].is_zero()), None)
            if swap is None:
                return OperatorPoly.zero()
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = num.exact_div(prev)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return det if sign > 0 else -det
