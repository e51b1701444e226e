"""Programmatic builders for the shipped theories.

These construct the actions directly from component formulas, independent
of the theory-file parser, so the two routes can be compared.
"""

from __future__ import annotations

from itertools import product

from gmpy2 import mpq

from ..expr.coefficients import I
from ..expr.polynomial import Polynomial, poly_sum
from ..expr.variables import parameter
from ..local.functional import LocalFunctional
from ..local.jets import JetSpace, component, component_antifield, jet
from .theory import TheorySpec, gauge_fix, nonminimal_extend, split_action

__all__ = [
    "levi_civita",
    "scalar_theory",
    "structure_constants_jacobi",
    "yang_mills_fields",
    "yang_mills_minimal",
    "yang_mills_gauge_fixed",
    "yang_mills_expanded_total",
]


def levi_civita(n: int = 3) -> dict[tuple[int, ...], int]:
    """Nonzero entries of the totally antisymmetric symbol (su(2) uses n=3)."""
    out = {}
    for perm in product(range(n), repeat=n):
        if len(set(perm)) != n:
            continue
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        out[perm] = -1 if inv % 2 else 1
    return out


def structure_constants_jacobi(f: dict, n: int) -> dict[tuple[int, int, int, int], int]:
    """Nonzero entries of ``f_abs f_cds - f_acs f_bds + f_ads f_bcs``."""
    bad = {}
    for a, b, c, d in product(range(n), repeat=4):
        total = 0
        for s in range(n):
            total += f.get((a, b, s), 0) * f.get((c, d, s), 0)
            total -= f.get((a, c, s), 0) * f.get((b, d, s), 0)
            total += f.get((a, d, s), 0) * f.get((b, c, s), 0)
        if total:
            bad[(a, b, c, d)] = total
    return bad


def _v(x) -> Polynomial:
    return Polynomial.var(x)


def _d(x, *mus) -> Polynomial:
    return Polynomial.var(jet(x, mus))


# ---------------------------------------------------------------------------
# scalar field


def scalar_theory(space: JetSpace | None = None, interaction: bool = True) -> TheorySpec:
    """``-1/2 (∂phi)^2 - m^2/2 phi^2 - lam/6 phi^3`` with ``S_tot = S``."""
    space = space or JetSpace()
    phi = component("phi")
    component_antifield(phi)
    m = parameter("m")
    lam = parameter("lam")
    kinetic = poly_sum(_d(phi, mu) * _d(phi, mu) * space.eta_inverse(mu) for mu in space.directions())
    S0 = kinetic * mpq(-1, 2) - _v(m) ** 2 * _v(phi) ** 2 * mpq(1, 2)
    Sint = (_v(lam) * _v(phi) ** 3 * mpq(-1, 6)) if interaction else Polynomial()
    s0, sint, _ = split_action(S0 + Sint)
    return TheorySpec(
        name="scalar",
        space=space,
        fields=(phi,),
        S0=LocalFunctional.of(s0, space),
        Sint=LocalFunctional.of(sint, space),
        Sext=LocalFunctional.of(Polynomial(), space),
        couplings=(m, lam),
    )


# ---------------------------------------------------------------------------
# Yang-Mills


def yang_mills_fields(n_colours: int = 3, space: JetSpace | None = None):
    space = space or JetSpace()
    A = {(a, mu): component("A", (a, mu)) for a in range(n_colours) for mu in space.directions()}
    c = {a: component("c", (a,), 1, 1, 0, "ghost") for a in range(n_colours)}
    cbar = {a: component("cbar", (a,), 1, -1, 0, "antighost") for a in range(n_colours)}
    B = {a: component("B", (a,), 0, 0, 0, "auxiliary") for a in range(n_colours)}
    for table in (A, c, cbar, B):
        for v in table.values():
            component_antifield(v)
    return A, c, cbar, B


def _field_strength(A, f, g, space, n, a, mu, nu) -> Polynomial:
    out = _d(A[a, nu], mu) - _d(A[a, mu], nu)
    quad = []
    for b in range(n):
        for cc in range(n):
            fabc = f.get((a, b, cc), 0)
            if fabc:
                quad.append(_v(A[b, mu]) * _v(A[cc, nu]) * fabc)
    if quad:
        out = out + poly_sum(quad) * _v(g) * I
    return out


def _covariant_ghost(A, c, f, g, n, a, mu) -> Polynomial:
    out = _d(c[a], mu)
    quad = []
    for b in range(n):
        for cc in range(n):
            fabc = f.get((a, b, cc), 0)
            if fabc:
                quad.append(_v(A[b, mu]) * _v(c[cc]) * fabc)
    if quad:
        out = out + poly_sum(quad) * _v(g) * I
    return out


def yang_mills_minimal(space: JetSpace | None = None, drop_quartic: bool = False) -> TheorySpec:
    """su(2) Yang-Mills with its minimal extension plus the trivial pairs
    declared (but not yet coupled)."""
    space = space or JetSpace()
    n = 3
    f = levi_civita(3)
    g = parameter("g")
    A, c, cbar, B = yang_mills_fields(n, space)
    dims = list(space.directions())
    strengths = {
        (a, mu, nu): _field_strength(A, f, g, space, n, a, mu, nu) for a in range(n) for mu in dims for nu in dims
    }
    pieces = []
    for a in range(n):
        for mu in dims:
            for nu in dims:
                Fmn = strengths[a, mu, nu]
                pieces.append(Fmn * Fmn * (space.eta_inverse(mu) * space.eta_inverse(nu)))
    S = poly_sum(pieces) * mpq(-1, 4)
    if drop_quartic:
        S = S.filter(lambda m: sum(1 for v in m if v == g.order_key) < 2)
    ext = []
    for a in range(n):
        for mu in dims:
            ext.append(-(_covariant_ghost(A, c, f, g, n, a, mu) * _v(component_antifield(A[a, mu]))))
    ghost_term = []
    for (a, b, cc), fabc in f.items():
        ghost_term.append(_v(c[b]) * _v(c[cc]) * _v(component_antifield(c[a])) * fabc)
    ext.append(poly_sum(ghost_term) * _v(g) * (I / 2))
    s0, sint, _ = split_action(S)
    fields = tuple(A.values()) + tuple(c.values()) + tuple(cbar.values()) + tuple(B.values())
    K = {c[a]: poly_sum(_v(c[b]) * _v(c[cc]) * f.get((a, b, cc), 0) for b in range(n) for cc in range(n)) * _v(g) * (-I / 2) for a in range(n)}
    return TheorySpec(
        name="yang-mills-su2",
        space=space,
        fields=fields,
        S0=LocalFunctional.of(s0, space),
        Sint=LocalFunctional.of(sint, space),
        Sext=LocalFunctional.of(poly_sum(ext), space),
        couplings=(g,),
        k_map=K,
        structure_constants=f,
    )


def yang_mills_gauge_fermion(space: JetSpace, xi=None) -> Polynomial:
    """``Psi = cbar_a (xi/2 B_a - ∂^mu A_mu^a)``."""
    n = 3
    A, c, cbar, B = yang_mills_fields(n, space)
    xi_poly = Polynomial.var(parameter("xi")) if xi is None else Polynomial.constant(xi)
    pieces = []
    for a in range(n):
        div = poly_sum(_d(A[a, mu], mu) * space.eta_inverse(mu) for mu in space.directions())
        pieces.append(_v(cbar[a]) * (xi_poly * _v(B[a]) * mpq(1, 2) - div))
    return poly_sum(pieces)


def yang_mills_gauge_fixed(space: JetSpace | None = None, xi=None, drop_quartic: bool = False) -> TheorySpec:
    space = space or JetSpace()
    spec = nonminimal_extend(yang_mills_minimal(space, drop_quartic=drop_quartic))
    return gauge_fix(spec, yang_mills_gauge_fermion(space, xi))


def yang_mills_expanded_total(space: JetSpace, xi) -> Polynomial:
    """The gauge-fixed total action written out term by term (flat space,
    numeric ``xi``); an oracle for :func:`yang_mills_gauge_fixed`."""
    n = 3
    f = levi_civita(3)
    g = _v(parameter("g"))
    A, c, cbar, B = yang_mills_fields(n, space)
    xi = mpq(xi)
    dims = list(space.directions())
    up = space.eta_inverse
    pieces = []
    for a in range(n):
        # 1/2 A_mu (g^{mu nu} box - (xi-1)/xi ∂^mu ∂^nu) A_nu
        for mu in dims:
            for rho in dims:
                pieces.append(_v(A[a, mu]) * _d(A[a, mu], rho, rho) * (up(mu) * up(rho) / 2))
            for nu in dims:
                pieces.append(_v(A[a, mu]) * _d(A[a, nu], mu, nu) * (-(xi - 1) / xi * up(mu) * up(nu) / 2))
        # cbar box c
        for rho in dims:
            pieces.append(_v(cbar[a]) * _d(c[a], rho, rho) * up(rho))
        # xi/2 (B - ∂A/xi)^2
        div = poly_sum(_d(A[a, mu], mu) * up(mu) for mu in dims)
        shifted = _v(B[a]) - div * (1 / xi)
        pieces.append(shifted * shifted * (xi / 2))
    cubic = []
    for (a, b, cc), fabc in f.items():
        for mu in dims:
            for nu in dims:
                cubic.append(_v(A[b, mu]) * _v(A[cc, nu]) * _d(A[a, nu], mu) * (fabc * up(mu) * up(nu)))
            cubic.append(_d(cbar[a], mu) * _v(A[b, mu]) * _v(c[cc]) * (fabc * up(mu)))
    quartic = []
    for (a, b, cc), fabc in f.items():
        for (a2, d, e), fade in f.items():
            if a2 != a:
                continue
            for mu in dims:
                for nu in dims:
                    quartic.append(
                        _v(A[b, mu]) * _v(A[cc, nu]) * _v(A[d, mu]) * _v(A[e, nu]) * (fabc * fade * up(mu) * up(nu))
                    )
    bracket = poly_sum(cubic) + poly_sum(quartic) * g * (I / 4)
    pieces.append(bracket * g * (-I))
    # antifield terms
    for a in range(n):
        for mu in dims:
            pieces.append(-(_covariant_ghost(A, c, f, parameter("g"), n, a, mu) * _v(component_antifield(A[a, mu]))))
        pieces.append(-(_v(B[a]) * _v(component_antifield(cbar[a]))))
    ghost_term = [
        _v(c[b]) * _v(c[cc]) * _v(component_antifield(c[a])) * fabc for (a, b, cc), fabc in f.items()
    ]
    pieces.append(poly_sum(ghost_term) * g * (I / 2))
    return poly_sum(pieces)
