"""Independent reference implementations used only by the tests.

Nothing here imports the package's algebra: polynomials are plain dicts
keyed by tuples of (name, parity) pairs, and bosonic kernel products are
expanded with sympy."""

from __future__ import annotations

import itertools
from math import factorial

import sympy


def grassmann_normalise(factors, coeff):
    """Bubble-sort a word of (name, parity) letters by name, tracking the sign
    of every odd-odd swap; repeated odd letters give zero."""
    word = list(factors)
    sign = 1
    for i in range(len(word)):
        for j in range(len(word) - 1 - i):
            a, b = word[j], word[j + 1]
            if a[0] > b[0]:
                if a[1] and b[1]:
                    sign = -sign
                word[j], word[j + 1] = b, a
    for a, b in zip(word, word[1:]):
        if a == b and a[1]:
            return None, 0
    return tuple(word), sign * coeff


def grassmann_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            mono, c = grassmann_normalise(ma + mb, ca * cb)
            if mono is None or c == 0:
                continue
            out[mono] = sympy.expand(out.get(mono, 0) + c)
            if out[mono] == 0:
                del out[mono]
    return out


def grassmann_left_derivative(p: dict, letter) -> dict:
    """Move each occurrence of ``letter`` to the front, then strip it."""
    out: dict = {}
    for mono, c in p.items():
        for pos, x in enumerate(mono):
            if x != letter:
                continue
            odd_before = sum(1 for y in mono[:pos] if y[1])
            sign = -1 if (letter[1] and odd_before % 2) else 1
            rest = mono[:pos] + mono[pos + 1 :]
            key, val = grassmann_normalise(rest, sign * c)
            if key is None:
                continue
            out[key] = out.get(key, 0) + val
            if out[key] == 0:
                del out[key]
            if letter[1]:
                break
    return out


def from_package(poly) -> dict:
    """Convert a package polynomial to the oracle representation."""
    from bvlab.expr.variables import registry

    out = {}
    for mono, c in poly.terms.items():
        word = tuple((registry.by_id[v].text, registry.by_id[v].parity) for v in mono)
        key, val = grassmann_normalise(word, _sympy_coefficient(c))
        out[key] = out.get(key, 0) + val
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------------------
# bosonic Wick products


HBAR = sympy.Symbol("hbar")


def wick_product(f, g, symbols, kernel):
    """``sum_k (i hbar)^k / k! K_{a1 b1}..K_{ak bk} d_a f d_b g`` for even
    variables; ``kernel[a][b]`` are rationals, ``f`` and ``g`` sympy
    expressions."""
    n = len(symbols)
    total = f * g
    deg = int(sympy.Poly(f, *symbols).total_degree()) if f.free_symbols & set(symbols) else 0
    for k in range(1, deg + 1):
        term = 0
        for left in itertools.product(range(n), repeat=k):
            df = f
            for a in left:
                df = sympy.diff(df, symbols[a])
            if df == 0:
                continue
            for right in itertools.product(range(n), repeat=k):
                weight = 1
                for a, b in zip(left, right):
                    weight *= kernel[a][b]
                if weight == 0:
                    continue
                dg = g
                for b in right:
                    dg = sympy.diff(dg, symbols[b])
                term += weight * df * dg
        total += (sympy.I * HBAR) ** k / factorial(k) * term
    return sympy.expand(total)


def to_sympy_series(series, symbols_by_text):
    """Package HbarSeries (or polynomial) -> sympy expression in hbar."""
    from bvlab.expr.polynomial import Polynomial
    from bvlab.expr.series import HbarSeries
    from bvlab.expr.variables import registry

    if isinstance(series, Polynomial):
        series = HbarSeries.classical(series, None)
    expr = 0
    for k, poly in series.coeffs.items():
        for mono, c in poly.terms.items():
            term = _sympy_coefficient(c) * HBAR**k
            for v in mono:
                term *= symbols_by_text[registry.by_id[v].text]
            expr += term
    return sympy.expand(expr)


def _sympy_coefficient(c):
    if hasattr(c, "im"):
        return sympy.Rational(str(c.re)) + sympy.I * sympy.Rational(str(c.im))
    return sympy.Rational(str(c))


# ---------------------------------------------------------------------------
# variational calculus through sympy (bosonic fields only)


SPACETIME = sympy.symbols("x0:4")


def sympy_density(poly, dim):
    """Package density -> sympy expression with fields as functions of x."""
    from bvlab.expr.variables import registry

    coords = SPACETIME[:dim]
    funcs = {}

    def image(v):
        root = v.base if v.base is not None else v
        fn = funcs.setdefault(root.text, sympy.Function(root.text.replace("(", "_").replace(")", "_"))(*coords))
        expr = fn
        for mu in v.derivs:
            expr = sympy.diff(expr, coords[mu])
        return expr

    expr = 0
    for mono, c in poly.terms.items():
        term = _sympy_coefficient(c)
        for vid in mono:
            term *= image(registry.by_id[vid])
        expr += term
    return expr, funcs, coords


def sympy_euler_lagrange(poly, field_text, dim, max_order=3):
    """``sum_alpha (-D)^alpha dL/d(phi_alpha)`` with sympy differentiating
    with respect to derivative objects."""
    expr, funcs, coords = sympy_density(poly, dim)
    fn = funcs.get(field_text)
    if fn is None:
        return sympy.Integer(0), funcs, coords
    total = 0
    for order in range(max_order + 1):
        for alpha in itertools.combinations_with_replacement(range(dim), order):
            target = fn
            for mu in alpha:
                target = sympy.diff(target, coords[mu])
            partial = sympy.diff(expr, target)
            for mu in alpha:
                partial = -sympy.diff(partial, coords[mu])
            total += partial
    return sympy.expand(total), funcs, coords


# ---------------------------------------------------------------------------
# classical retarded products from the perturbed solution (bosonic modes)


def retarded_solution_products(f, g, symbols, gret, max_n):
    """``R_n(F^n; G) = d^n/dlam^n G(phi_lam)`` at ``lam = 0``, where
    ``phi_lam = phi - lam Gret dF(phi_lam)`` is solved by fixed-point
    iteration as a power series in ``lam``."""
    lam = sympy.Symbol("lam")
    n = len(symbols)
    grad = [sympy.diff(f, s) for s in symbols]
    current = list(symbols)
    for _ in range(max_n + 1):
        sub = dict(zip(symbols, current))
        forces = [gr.xreplace(sub) for gr in grad]
        current = [
            sympy.expand(symbols[a] - lam * sum(gret[a][b] * forces[b] for b in range(n)))
            for a in range(n)
        ]
        current = [_truncate_in(c, lam, max_n) for c in current]
    composed = sympy.expand(g.xreplace(dict(zip(symbols, current))))
    return [sympy.expand(factorial(k) * composed.coeff(lam, k)) for k in range(max_n + 1)]


def _truncate_in(expr, lam, top):
    return sum(expr.coeff(lam, k) * lam**k for k in range(top + 1))
