"""Shared fixtures: worked-example models, golden equations, an independent
sympy route to input-output equations, and random model generators."""

from __future__ import annotations

import random

import sympy

from compartment_indist.model import ModelSpec, Param, reaching
from compartment_indist.poly import MPoly


def M(n, edges, inputs, outputs, leaks=(), name=None) -> ModelSpec:
    return ModelSpec(n, frozenset(map(tuple, edges)), frozenset(inputs), frozenset(outputs), frozenset(leaks), name)


def P(n, leaks=(), extra=()) -> ModelSpec:
    """Path 1 -> 2 -> ... -> n, input 1, output n."""
    return M(n, [(k, k + 1) for k in range(1, n)] + list(extra), [1], [n], leaks)


def phi_of(pairs):
    from compartment_indist.transforms import ParamBijection

    return ParamBijection({Param.parse(a): Param.parse(b) for a, b in pairs})


# --- worked examples --------------------------------------------------------

FIRST = M(2, [(1, 2), (2, 1)], [1], [2], [1])  # also nonpermute M
NONPERM_1 = M(2, [(1, 2), (2, 1)], [1], [2], [2])
NONPERM_2 = M(2, [(1, 2)], [1], [2], [1, 2])

PERMUTE = P(3, [1])
PERMUTE_1 = P(3, [2])
PERMUTE_2 = P(3, extra=[(3, 2)])
MOVING_LEAK = P(3, [3])

SMALL2 = M(2, [(2, 1)], [1], [1], [1])
SMALL2_1 = M(2, [(2, 1)], [1], [1], [2])

TWOIN = M(3, [(1, 2), (2, 3)], [1, 2], [3], [1])
TWOIN_1 = M(3, [(1, 2), (2, 3)], [1, 2], [3], [2])

DETOUR = M(5, [(1, 2), (2, 3), (3, 4), (2, 5), (5, 3)], [1], [4])
DETOUR_1 = M(5, [(1, 2), (2, 3), (3, 4), (3, 5), (5, 4)], [1], [4])

SINK = M(5, [(1, 2), (1, 4), (4, 2), (2, 3), (5, 3)], [1, 5], [3])
SINK_1 = M(5, [(1, 2), (2, 4), (4, 3), (2, 3), (5, 3)], [1, 5], [3])
SINK_BRANCH = {1, 2, 3, 4}


# Reference equations, with D for the derivative.  (lhs, {input: rhs})
GOLDEN = {
    "first example": (FIRST, 2, "(D + a01 + a21)*(D + a12) - a12*a21", {1: "a21"}),
    "permute M": (PERMUTE, 3, "D**3 + (a32+a01+a21)*D**2 + (a01*a32+a21*a32)*D", {1: "a21*a32"}),
    "permute M'": (PERMUTE_1, 3, "D**3 + (a21+a02+a32)*D**2 + (a02*a21+a32*a21)*D", {1: "a32*a21"}),
    "permute M''": (PERMUTE_2, 3, "D**3 + (a21+a23+a32)*D**2 + (a23*a21+a32*a21)*D", {1: "a32*a21"}),
    "small2 M": (SMALL2, 1, "D**2 + (a01+a12)*D + a01*a12", {1: "D + a12"}),
    "small2 M'": (SMALL2_1, 1, "D**2 + (a02+a12)*D", {1: "D + (a02+a12)"}),
    "twoinputdist M": (TWOIN, 3, "D**3 + (a32+a01+a21)*D**2 + (a01*a32+a21*a32)*D",
                       {1: "a21*a32", 2: "a32*D + (a01*a32+a21*a32)"}),
    "twoinputdist M'": (TWOIN_1, 3, "D**3 + (a32+a02+a21)*D**2 + (a02*a21+a21*a32)*D",
                        {1: "a21*a32", 2: "a32*D + a21*a32"}),
    "movingleaknonindist": (MOVING_LEAK, 3,
                            "D**3 + (a21+a32+a03)*D**2 + (a03*a32+a32*a21)*D + a21*a32*a03",
                            {1: "a32*a21"}),
    "detour M": (DETOUR, 4, "(D + a21)*(D + a32 + a52)*(D + a43)*D*(D + a35)",
                 {1: "-a21*a32*a43*(D + a35) - a21*a35*a43*a52"}),
    "detour M'": (DETOUR_1, 4, "(D + a21)*(D + a32)*(D + a43 + a53)*D*(D + a45)",
                  {1: "-a21*a32*a43*(D + a45) - a32*a45*a21*a53"}),
    "sink M": (SINK, 3, "(D + a21 + a41)*(D + a32)*D*(D + a24)*(D + a35)",
               {1: "-a21*a32*(D + a24)*(D + a35) + a41*a35*a32*a24",
                5: "(D + a21 + a41)*(D + a32)*a35*a24"}),
    "sink M'": (SINK_1, 3, "(D + a21)*(D + a32 + a42)*D*(D + a34)*(D + a35)",
                {1: "-a21*a32*(D + a34)*(D + a35) + a42*a35*a21*a34",
                 5: "(D + a21)*(D + a32 + a42)*a35*a34"}),
}

Dsym = sympy.Symbol("D")


def to_sympy(p: MPoly):
    return sympy.sympify(p.render().replace("^", "**")) if not p.is_zero() else sympy.Integer(0)


def sympy_op_coeffs(expr) -> list:
    """Coefficients of D^0, D^1, ... of an expression in D."""
    poly = sympy.Poly(sympy.expand(sympy.sympify(expr)), Dsym)
    return [sympy.expand(c) for c in reversed(poly.all_coeffs())]


def op_coeffs(op) -> list:
    return [sympy.expand(to_sympy(op.coeff(k))) for k in range(op.degree + 1)]


def sympy_io_equation(m: ModelSpec, out: int):
    """Independent route: sympy matrices and adjugate entries."""
    H = sorted(reaching(m, out))
    sym = {p: sympy.Symbol(p.symbol) for p in m.params()}
    n = len(H)
    A = sympy.zeros(n, n)
    idx = {v: k for k, v in enumerate(H)}
    for f, t in m.edges:
        if f not in idx:
            continue
        a = sym[Param.edge(f, t)]
        A[idx[f], idx[f]] -= a
        if t in idx:
            A[idx[t], idx[f]] += a
    for v in m.leaks:
        if v in idx:
            A[idx[v], idx[v]] -= sym[Param.leak(v)]
    N = Dsym * sympy.eye(n) - A
    lhs = sympy.expand(N.det(method="berkowitz"))
    rhs = {}
    j = idx[out]
    for i in sorted(m.inputs):
        if i in idx:
            # adjugate entry (j, i) is the (i, j) cofactor
            minor = N.minor_submatrix(idx[i], j)
            sign = -1 if (idx[i] + j) % 2 else 1
            rhs[i] = sympy.expand(sign * (minor.det(method="berkowitz") if n > 1 else 1))
    return lhs, rhs


# --- random generators ------------------------------------------------------


def random_output_connectable(rng: random.Random, n_max=6, n_min=1, max_inputs=2, max_outputs=2):
    """Random model in which every compartment reaches some output."""
    while True:
        n = rng.randint(n_min, n_max)
        vs = list(range(1, n + 1))
        edges = set()
        for _ in range(rng.randint(0, n * (n - 1))):
            f, t = rng.sample(vs, 2) if n > 1 else (1, 1)
            if f != t:
                edges.add((f, t))
        inputs = rng.sample(vs, rng.randint(1, min(max_inputs, n)))
        outputs = rng.sample(vs, rng.randint(1, min(max_outputs, n)))
        leaks = [v for v in vs if rng.random() < 0.3]
        m = M(n, edges, inputs, outputs, leaks)
        reach = set()
        for o in m.outputs:
            reach |= reaching(m, o)
        if reach == set(vs) and all(m.inputs & reaching(m, o) for o in m.outputs):
            return m


def random_detour_model(rng: random.Random, n: int, dsize: int, allow_last=False):
    """Skeletal path 1..n with a weakly connected detour on n+1..n+dsize."""
    D = list(range(n + 1, n + dsize + 1))
    edges = {(k, k + 1) for k in range(1, n)}
    for k in range(1, dsize):
        u, v = D[k], rng.choice(D[:k])
        edges.add((u, v) if rng.random() < 0.5 else (v, u))
    for _ in range(rng.randint(0, dsize)):
        if dsize > 1:
            edges.add(tuple(rng.sample(D, 2)))
    hi = n - 1 if allow_last else n - 2
    i = rng.randint(1, hi)
    j = rng.randint(i, n - 1)
    s, t = rng.choice(D), rng.choice(D)
    edges |= {(i, s), (t, j)}
    leaks = rng.sample(D, rng.randint(0, dsize))
    return M(n + dsize, edges, [1], [n], leaks)


def random_sink_model(rng: random.Random, n_max=7):
    """Two or more skeletal paths (some with a leak) sharing one output."""
    while True:
        n = rng.randint(3, n_max)
        out = n
        others = list(range(1, n))
        rng.shuffle(others)
        edges, inputs, leaks = set(), set(), set()
        k = 0
        branches = 0
        while k < len(others):
            size = rng.randint(1, min(3, len(others) - k))
            chain = others[k:k + size] + [out]
            k += size
            for a, b in zip(chain, chain[1:]):
                edges.add((a, b))
            inputs.add(chain[0])
            if rng.random() < 0.5:
                leaks.add(rng.choice(chain[:-1]))
            branches += 1
        if branches >= 2:
            return M(n, edges, inputs, [out], leaks)
