"""Classical retarded products on a mode system.

``R_n(F^n; G)`` is the n-th derivative at zero coupling of the retarded
(perturbatively solved) wave map applied to ``G``.  It is built from the
recursion

    R_0(;G) = G
    R_{n+1}(F^{n+1}; G) = - sum_k C(n,k) R_{n-k}(F^{n-k}; dF Dadv(k) dG)

where ``Dadv(k)`` is the k-th field derivative of the advanced propagator
perturbed by ``d_L d_R F``.  Everything is polynomial; no hbar appears.
"""

from __future__ import annotations

from math import comb

from gmpy2 import mpq

from ..expr.polynomial import Polynomial, deriv_left, deriv_right, poly_sum
from ..expr.variables import parameter
from .modes import ModeSystem

__all__ = [
    "factorisation_residual",
    "field_independence_residual",
    "glz_residual",
    "linear_argument_residual",
    "linearity_residual",
    "rcl",
    "rcl_polarised",
]

NU_EVEN = parameter("%nu")
NU_ODD = parameter("%nu*", 1)


class _Classical:
    def __init__(self, system: ModeSystem) -> None:
        self.system = system
        self.modes = system.modes
        self.n = system.size
        self.gadv = system.matrix("gadv")
        self._memo: dict = {}

    def right_gradient(self, f: Polynomial) -> list[Polynomial]:
        return [deriv_right(f, m) for m in self.modes]

    def left_gradient(self, g: Polynomial) -> list[Polynomial]:
        return [deriv_left(g, m) for m in self.modes]

    def delta_adv(self, f: Polynomial, k: int) -> list[list[Polynomial]]:
        """Propagator derivative ``Dadv(k)`` as a matrix of polynomials."""
        key = (f, k)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        n = self.n
        if k == 0:
            out = [[Polynomial.constant(self.gadv[a][b]) for b in range(n)] for a in range(n)]
        else:
            prev = self.delta_adv(f, k - 1)
            grad = self.right_gradient(f)
            hess = [[deriv_left(grad[b], self.modes[a]) for b in range(n)] for a in range(n)]
            # middle[M][L] = sum_N hess[M][N] Gadv[N][L]
            middle = [
                [poly_sum(hess[m][nn].scale(self.gadv[nn][l]) for nn in range(n) if self.gadv[nn][l]) for l in range(n)]
                for m in range(n)
            ]
            out = [
                [poly_sum(prev[a][m] * middle[m][l] for m in range(n)).scale(-k) for l in range(n)]
                for a in range(n)
            ]
        self._memo[key] = out
        return out

    def pair(self, f: Polynomial, kernel: list[list[Polynomial]], g: Polynomial) -> Polynomial:
        left = self.right_gradient(f)
        right = self.left_gradient(g)
        terms = []
        for a in range(self.n):
            if not left[a]:
                continue
            for b in range(self.n):
                if right[b] and kernel[a][b]:
                    terms.append(left[a] * kernel[a][b] * right[b])
        return poly_sum(terms)

    def rcl(self, n: int, f: Polynomial, g: Polynomial) -> Polynomial:
        if n == 0:
            return g
        key = ("r", n, f, g)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        m = n - 1
        terms = []
        for k in range(m + 1):
            inner = self.pair(f, self.delta_adv(f, k), g)
            if inner:
                terms.append(self.rcl(m - k, f, inner).scale(comb(m, k)))
        out = -poly_sum(terms)
        self._memo[key] = out
        return out


_ENGINES: dict[int, _Classical] = {}


def _engine(system: ModeSystem) -> _Classical:
    eng = _ENGINES.get(id(system))
    if eng is None or eng.system is not system:
        eng = _Classical(system)
        _ENGINES[id(system)] = eng
    return eng


def rcl(system: ModeSystem, n: int, f, g) -> Polynomial:
    """``R_n(F^n; G)`` with ``F`` even."""
    f, g = Polynomial.coerce(f), Polynomial.coerce(g)
    if f.parity():
        raise ValueError("the interaction argument of a retarded product must be even")
    return _engine(system).rcl(n, f, g)


def rcl_polarised(system: ModeSystem, n: int, f, x, g) -> Polynomial:
    """``R_n(F^{n-1} (x) X; G)`` by polarisation in an auxiliary parameter."""
    if n < 1:
        raise ValueError("polarisation needs n >= 1")
    f, x, g = Polynomial.coerce(f), Polynomial.coerce(x), Polynomial.coerce(g)
    nu = NU_ODD if x.parity() else NU_EVEN
    shifted = f + Polynomial.var(nu) * x
    full = _Classical(system).rcl(n, shifted, g)
    first = deriv_left(full, nu).filter(lambda mono: nu.order_key not in mono)
    return first.scale(mpq(1, n))


def glz_residual(system: ModeSystem, n: int, f, g, h) -> Polynomial:
    """``R(F^n (x) G; H) - (-1)^{gh} R(F^n (x) H; G) - sum_k C(n,k) {R_k(F^k;G), R_{n-k}(F^{n-k};H)}``."""
    from .products import FockAlgebra

    f, g, h = Polynomial.coerce(f), Polynomial.coerce(g), Polynomial.coerce(h)
    alg = FockAlgebra(system)
    sign = -1 if (g.parity() and h.parity()) else 1
    lhs = rcl_polarised(system, n + 1, f, g, h) - rcl_polarised(system, n + 1, f, h, g).scale(sign)
    rhs = poly_sum(
        alg.poisson(rcl(system, k, f, g), rcl(system, n - k, f, h)).scale(comb(n, k)) for k in range(n + 1)
    )
    return lhs - rhs


def factorisation_residual(system: ModeSystem, n: int, f, g, h) -> Polynomial:
    """``R_n(F^n; GH) - sum_k C(n,k) R_k(F^k;G) R_{n-k}(F^{n-k};H)``."""
    f, g, h = Polynomial.coerce(f), Polynomial.coerce(g), Polynomial.coerce(h)
    lhs = rcl(system, n, f, g * h)
    rhs = poly_sum((rcl(system, k, f, g) * rcl(system, n - k, f, h)).scale(comb(n, k)) for k in range(n + 1))
    return lhs - rhs


def field_independence_residual(system: ModeSystem, n: int, f, g) -> list[Polynomial]:
    """For each mode ``M``:
    ``d_L R_n(F^n;G)/dphi_M - R_n(F^n; d_L G/dphi_M) - n R_n(F^{n-1} (x) d_L F/dphi_M; G)``."""
    f, g = Polynomial.coerce(f), Polynomial.coerce(g)
    out = []
    for mode in system.modes:
        lhs = deriv_left(rcl(system, n, f, g), mode)
        rhs = rcl(system, n, f, deriv_left(g, mode))
        if n:
            df = deriv_left(f, mode)
            if df:
                rhs = rhs + rcl_polarised(system, n, f, df, g).scale(n)
        out.append(lhs - rhs)
    return out


def linearity_residual(system: ModeSystem, n: int, f, g, h, a=2, b=3) -> Polynomial:
    """``R_n(F^n; aG + bH) - a R_n(F^n;G) - b R_n(F^n;H)``."""
    f, g, h = Polynomial.coerce(f), Polynomial.coerce(g), Polynomial.coerce(h)
    lhs = rcl(system, n, f, g.scale(a) + h.scale(b))
    return lhs - rcl(system, n, f, g).scale(a) - rcl(system, n, f, h).scale(b)


def linear_argument_residual(system: ModeSystem, n: int, f, g) -> Polynomial:
    """For ``G`` linear in the modes:
    ``R_{n+1}(F^{n+1}; G) - (n+1) R_n(F^n; R_1(F; G))``."""
    f, g = Polynomial.coerce(f), Polynomial.coerce(g)
    if any(len(m) != 1 for m in g.terms):
        raise ValueError("the linear relation needs G linear in the modes")
    return rcl(system, n + 1, f, g) - rcl(system, n, f, rcl(system, 1, f, g)).scale(n + 1)
