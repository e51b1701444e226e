"""Star, time-ordered, connected, interacting and retarded products.

Algebra elements are represented by their ``Gplus``-normal-ordered symbols:
hbar-series whose coefficients are polynomials in modes, antifields and
formal parameters.  Every product here is an exponential of a constant
bidifferential operator

    A *_K B = sum_k (i hbar)^k / k!  K_{M1N1}...K_{MkNk}
              (A d_R/dphi_M1 ... d_R/dphi_Mk)(d_L/dphi_Nk ... d_L/dphi_N1 B)

contracting dynamical modes only.  With ``K = Gplus`` this is the star
product; with the Feynman kernel ``GF = Gplus + Gadv`` it is the
time-ordered product, which is graded-commutative because ``GF`` is
graded-symmetric.

Generating functionals are truncated power series in formal even
parameters (``lambda`` counts powers of ``F``).  A :class:`Truncation`
bounds the degree in each such parameter, which makes every exponential,
logarithm and inverse a finite sum.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from math import factorial

from gmpy2 import mpq

from ..expr.coefficients import I
from ..expr.polynomial import Polynomial, _mono_mul, canonical_monomial, deriv_left, poly_sum
from ..expr.series import HbarSeries, series_sum
from ..expr.variables import GradedVariable, parameter, registry
from .modes import ModeSystem

__all__ = [
    "FockAlgebra",
    "Truncation",
    "coefficient_of",
    "commutator",
    "connected",
    "connected_by_partitions",
    "interacting",
    "left_coefficient",
    "poisson",
    "retarded",
    "star",
    "tproduct",
]

NEG_I = -I

# formal expansion parameters used internally; never contracted
LAMBDA = parameter("%lambda")
KAPPA = parameter("%kappa")
MU_EVEN = parameter("%mu")
MU_ODD = parameter("%mu*", 1)


def _as_series(x) -> HbarSeries:
    if isinstance(x, HbarSeries):
        return x if x.order is None else HbarSeries(x.coeffs, None)
    if isinstance(x, GradedVariable):
        return HbarSeries({0: Polynomial.var(x)}, None)
    return HbarSeries({0: Polynomial.coerce(x)}, None)


@dataclass(frozen=True)
class Truncation:
    """Maximal degree per formal parameter (by variable id)."""

    caps: Mapping[int, int] = field(default_factory=dict)

    @staticmethod
    def of(pairs: Mapping | None = None) -> "Truncation":
        caps = {}
        for k, v in (pairs or {}).items():
            caps[k.order_key if isinstance(k, GradedVariable) else int(k)] = int(v)
        return Truncation(caps)

    def merged(self, other: Mapping) -> "Truncation":
        out = dict(self.caps)
        for k, v in Truncation.of(other).caps.items():
            out[k] = min(out.get(k, v), v)
        return Truncation(out)

    def allows(self, mono: tuple) -> bool:
        caps = self.caps
        if not caps:
            return True
        counts: dict[int, int] = {}
        for x in mono:
            if x in caps:
                c = counts.get(x, 0) + 1
                if c > caps[x]:
                    return False
                counts[x] = c
        return True

    def apply(self, p: Polynomial) -> Polynomial:
        if not self.caps:
            return p
        return p.filter(self.allows)

    def apply_series(self, s: HbarSeries) -> HbarSeries:
        if not self.caps:
            return s
        return HbarSeries({k: self.apply(p) for k, p in s.coeffs.items()}, s.order)

    def is_nilpotent(self, p: Polynomial) -> bool:
        """True when every monomial carries a capped parameter."""
        return all(any(x in self.caps for x in m) for m in p.terms)


_DERIV_CACHE: dict = {}


def _mono_deriv(mono: tuple, vid: int, right: bool):
    """``(rest, factor)`` of the one-sided derivative of a monomial."""
    key = (mono, vid, right)
    hit = _DERIV_CACHE.get(key)
    if hit is not None:
        return hit
    odd = registry.parity
    pos = mono.index(vid)
    if odd[vid]:
        if right:
            n = sum(odd[x] for x in mono[pos + 1 :])
        else:
            n = sum(odd[x] for x in mono[:pos])
        factor = -1 if n & 1 else 1
    else:
        factor = mono.count(vid)
    res = (mono[:pos] + mono[pos + 1 :], factor)
    if len(_DERIV_CACHE) > 1 << 20:
        _DERIV_CACHE.clear()
    _DERIV_CACHE[key] = res
    return res


def _contract(a: Polynomial, b: Polynomial, rows: dict, trunc: Truncation) -> dict[int, Polynomial]:
    """``{k: coefficient of (i hbar)^k}`` of ``a *_K b`` (without the ``i^k``)."""
    pairs: dict = {}
    allows = trunc.allows
    check = bool(trunc.caps)
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            if check and not allows(ma + mb):
                continue
            pairs[(ma, mb)] = ca * cb
    out: dict[int, Polynomial] = {}
    k = 0
    while pairs:
        acc: dict = {}
        for (ma, mb), c in pairs.items():
            r = _mono_mul(ma, mb)
            if r is None:
                continue
            mono, sign = r
            v = c if sign > 0 else -c
            prev = acc.get(mono)
            if prev is None:
                acc[mono] = v
            else:
                s = prev + v
                if s:
                    acc[mono] = s
                else:
                    del acc[mono]
        if acc:
            poly = Polynomial(acc, _trusted=True)
            out[k] = poly.scale(mpq(1, factorial(k))) if k > 1 else poly
        # next contraction level
        nxt: dict = {}
        for (ma, mb), c in pairs.items():
            if not ma or not mb:
                continue
            mb_ids = set(mb)
            for M in set(ma):
                row = rows.get(M)
                if row is None:
                    continue
                ra, fa = _mono_deriv(ma, M, True)
                for N, kval in row:
                    if N not in mb_ids:
                        continue
                    rb, fb = _mono_deriv(mb, N, False)
                    key = (ra, rb)
                    v = c * (fa * fb) * kval
                    prev = nxt.get(key)
                    if prev is None:
                        nxt[key] = v
                    else:
                        s = prev + v
                        if s:
                            nxt[key] = s
                        else:
                            del nxt[key]
        pairs = nxt
        k += 1
    return out


_I_POWERS = [mpq(1), I, mpq(-1), NEG_I]


class FockAlgebra:
    """Products on symbols for one mode system and one truncation."""

    def __init__(self, system: ModeSystem, truncation: Truncation | Mapping | None = None) -> None:
        self.system = system
        if truncation is None:
            truncation = Truncation()
        elif not isinstance(truncation, Truncation):
            truncation = Truncation.of(truncation)
        self.truncation = truncation
        self._rows = {name: system.kernel(name) for name in ("gplus", "gfeyn", "delta", "gadv", "gret")}

    def with_caps(self, caps: Mapping) -> "FockAlgebra":
        return FockAlgebra(self.system, self.truncation.merged(caps))

    # kernel products ------------------------------------------------------
    def kernel_product(self, a, b, kernel: str) -> HbarSeries:
        sa, sb = _as_series(a), _as_series(b)
        rows = self._rows[kernel]
        buckets: dict[int, list[Polynomial]] = {}
        for pa, ca in sa.coeffs.items():
            for pb, cb in sb.coeffs.items():
                for k, poly in _contract(ca, cb, rows, self.truncation).items():
                    if k % 4:
                        poly = poly.scale(_I_POWERS[k % 4])
                    buckets.setdefault(pa + pb + k, []).append(poly)
        return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, None)

    def star(self, a, b) -> HbarSeries:
        return self.kernel_product(a, b, "gplus")

    def tprod(self, a, b) -> HbarSeries:
        return self.kernel_product(a, b, "gfeyn")

    def star_many(self, factors: Iterable) -> HbarSeries:
        out = _as_series(1)
        for f in factors:
            out = self.star(out, f)
        return out

    def tproduct(self, factors: Iterable) -> HbarSeries:
        out = _as_series(1)
        for f in factors:
            out = self.tprod(out, f)
        return out

    def commutator(self, a, b) -> HbarSeries:
        """Graded commutator, splitting inhomogeneous arguments by parity."""
        sa, sb = _as_series(a), _as_series(b)
        pieces = []
        for xa in _parity_parts(sa):
            for xb in _parity_parts(sb):
                ea, eb = _series_parity(xa), _series_parity(xb)
                left = self.star(xa, xb)
                right = self.star(xb, xa)
                pieces.append(left - right if not (ea and eb) else left + right)
        return series_sum(pieces, None)

    def poisson(self, f, g) -> Polynomial:
        """``{F, G} = d_R F/dphi_M Delta_MN d_L G/dphi_N``."""
        return _contract(Polynomial.coerce(f), Polynomial.coerce(g), self._rows["delta"], Truncation()).get(
            1, Polynomial()
        )

    def pairing(self, f, g, kernel: str) -> Polynomial:
        """Single contraction ``d_R F K d_L G`` with a named kernel."""
        return _contract(Polynomial.coerce(f), Polynomial.coerce(g), self._rows[kernel], Truncation()).get(
            1, Polynomial()
        )

    # exponentials ---------------------------------------------------------
    def _nilpotent_check(self, x: HbarSeries, what: str) -> None:
        for p in x.coeffs.values():
            if not self.truncation.is_nilpotent(p):
                raise ValueError(f"{what} must carry a truncated formal parameter in every term")

    def _limit(self) -> int:
        return sum(self.truncation.caps.values()) + 1

    def exp(self, x, product) -> HbarSeries:
        x = self.truncation.apply_series(_as_series(x))
        self._nilpotent_check(x, "exponent")
        total = [_as_series(1)]
        term = _as_series(1)
        for k in range(1, self._limit() + 1):
            term = product(term, x).scale(mpq(1, k))
            if term.is_zero():
                break
            total.append(term)
        return series_sum(total, None)

    def log(self, e, product) -> HbarSeries:
        """``log(1 + X)`` for ``X = e - 1`` nilpotent."""
        x = _as_series(e) - _as_series(1)
        self._nilpotent_check(x, "log argument minus one")
        total = []
        power = _as_series(1)
        for k in range(1, self._limit() + 1):
            power = product(power, x)
            if power.is_zero():
                break
            total.append(power.scale(mpq(1 if k % 2 else -1, k)))
        return series_sum(total, None)

    def inverse(self, e, product) -> HbarSeries:
        """``(1 + X)^{-1} = sum (-X)^k``."""
        x = _as_series(e) - _as_series(1)
        self._nilpotent_check(x, "inverse argument minus one")
        minus_x = -x
        total = [_as_series(1)]
        power = _as_series(1)
        for _ in range(self._limit()):
            power = product(power, minus_x)
            if power.is_zero():
                break
            total.append(power)
        return series_sum(total, None)

    def texp(self, f) -> HbarSeries:
        """``T[exp(i F / hbar)] = exp_{*F}(i F / hbar)``."""
        return self.exp(HbarSeries({-1: Polynomial.coerce(f).scale(I)}, None) if not isinstance(f, HbarSeries) else f.shift(-1).scale(I), self.tprod)


def _series_parity(s: HbarSeries) -> int:
    for p in s.coeffs.values():
        return p.parity()
    return 0


def _parity_parts(s: HbarSeries) -> list[HbarSeries]:
    even: dict[int, Polynomial] = {}
    odd: dict[int, Polynomial] = {}
    for k, p in s.coeffs.items():
        e, o = p.split_parity()
        if e:
            even[k] = e
        if o:
            odd[k] = o
    out = []
    if even:
        out.append(HbarSeries(even, None))
    if odd:
        out.append(HbarSeries(odd, None))
    return out


def coefficient_of(x, param: GradedVariable, k: int):
    """Coefficient of ``param^k`` with ``param`` taken out on the left."""
    pid = param.order_key

    def take(p: Polynomial) -> Polynomial:
        q = p.filter(lambda m: m.count(pid) == k)
        for _ in range(k):
            q = deriv_left(q, pid)
        return q.scale(mpq(1, factorial(k))) if k > 1 else q

    if isinstance(x, HbarSeries):
        return x.map(take)
    return take(Polynomial.coerce(x))


def left_coefficient(x, params) -> Polynomial | HbarSeries:
    """``C`` with ``x = p_1 ... p_k C + (terms without exactly these factors)``.

    ``params`` is an ordered sequence of distinct parameters; each must occur
    exactly once in a contributing monomial."""
    ids = [v.order_key if isinstance(v, GradedVariable) else int(v) for v in params]
    wanted = set(ids)

    def take(p: Polynomial) -> Polynomial:
        acc: dict = {}
        for mono, c in p.terms.items():
            picked = [v for v in mono if v in wanted]
            if len(picked) != len(ids) or set(picked) != wanted:
                continue
            rest = tuple(v for v in mono if v not in wanted)
            _, sign = canonical_monomial(ids + list(rest))
            v = c if sign > 0 else -c
            acc[rest] = acc.get(rest, 0) + v
        return Polynomial({m: c for m, c in acc.items() if c})

    if isinstance(x, HbarSeries):
        return x.map(take)
    return take(Polynomial.coerce(x))


def _finish(s: HbarSeries, what: str, order: int | None) -> HbarSeries:
    s.check_nonnegative(what)
    return s.truncate(order)


# ---------------------------------------------------------------------------
# module-level conveniences


def star(system: ModeSystem, a, b) -> HbarSeries:
    return FockAlgebra(system).star(a, b)


def commutator(system: ModeSystem, a, b) -> HbarSeries:
    return FockAlgebra(system).commutator(a, b)


def poisson(system: ModeSystem, f, g) -> Polynomial:
    return FockAlgebra(system).poisson(f, g)


def tproduct(system: ModeSystem, factors: Iterable) -> HbarSeries:
    return FockAlgebra(system).tproduct(factors)


def _scaled_by_hbar_over_i(s: HbarSeries, n: int) -> HbarSeries:
    """Multiply by ``(hbar/i)^n``."""
    return s.shift(n).scale(NEG_I**n if n % 4 else 1) if n else s


def connected(system: ModeSystem, f, max_n: int, order: int | None = 6, caps: Mapping | None = None) -> list[HbarSeries]:
    """``[T^c_1(F), ..., T^c_max_n(F^n)]`` from ``(hbar/i) log_* T[exp(i lambda F/hbar)]``."""
    alg = FockAlgebra(system, Truncation.of(caps).merged({LAMBDA: max_n}))
    e = alg.texp(Polynomial.var(LAMBDA) * Polynomial.coerce(f))
    gen = _scaled_by_hbar_over_i(alg.log(e, alg.star), 1)
    out = []
    for n in range(1, max_n + 1):
        tc = coefficient_of(gen, LAMBDA, n).scale(factorial(n))
        out.append(_finish(tc, f"connected product T^c_{n}", order))
    return out


def _compositions(n: int):
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


def connected_by_partitions(system: ModeSystem, f, n: int, order: int | None = 6) -> HbarSeries:
    """``T^c_n(F^n)`` from the sum over ordered set partitions.

    For equal arguments, the ordered partitions with block sizes
    ``(s_1..s_k)`` number ``n!/prod s_i!``."""
    alg = FockAlgebra(system)
    fp = Polynomial.coerce(f)
    powers = {0: _as_series(1)}
    for s in range(1, n + 1):
        powers[s] = alg.tprod(powers[s - 1], fp)
    pieces = []
    for comp in _compositions(n):
        k = len(comp)
        weight = mpq(factorial(n))
        for s in comp:
            weight /= factorial(s)
        weight *= mpq(1 if k % 2 else -1, k)
        pieces.append(alg.star_many(powers[s] for s in comp).scale(weight))
    total = series_sum(pieces, None)
    # (i/hbar)^(n-1)
    total = total.shift(-(n - 1)).scale(I ** (n - 1) if (n - 1) % 4 else 1)
    return _finish(total, f"connected product T^c_{n}", order)


def interacting(
    system: ModeSystem,
    interaction,
    g,
    max_n: int,
    coupling: GradedVariable,
    coupling_order: int,
    order: int | None = 6,
) -> list[HbarSeries]:
    """``[T_{L,1}(G), ..., T_{L,max_n}(G^n)]`` for ``L`` proportional to ``coupling``.

    ``T_L[exp(iG/hbar)] = T[exp(iL/hbar)]^{*-1} * T[exp(i(L+G)/hbar)]``, the
    coupling truncated at ``coupling_order``."""
    alg = FockAlgebra(system, Truncation.of({coupling: coupling_order, LAMBDA: max_n}))
    lp = Polynomial.coerce(interaction)
    if not alg.truncation.is_nilpotent(lp):
        raise ValueError("every term of the interaction must carry the coupling")
    e_l = alg.texp(lp)
    e_lg = alg.texp(lp + Polynomial.var(LAMBDA) * Polynomial.coerce(g))
    gen = alg.star(alg.inverse(e_l, alg.star), e_lg)
    out = []
    for n in range(1, max_n + 1):
        tn = _scaled_by_hbar_over_i(coefficient_of(gen, LAMBDA, n).scale(factorial(n)), n)
        out.append(_finish(tn, f"interacting product T_L,{n}", order))
    return out


def retarded(system: ModeSystem, f, g, max_n: int, order: int | None = 6, caps: Mapping | None = None) -> list[HbarSeries]:
    """``[R_0(;G), ..., R_max_n(F^n; G)]`` from
    ``T[exp(i lambda F/hbar)]^{*-1} * T[exp(i lambda F/hbar) (x) G]``."""
    alg = FockAlgebra(system, Truncation.of(caps).merged({LAMBDA: max_n}))
    e = alg.texp(Polynomial.var(LAMBDA) * Polynomial.coerce(f))
    gen = alg.star(alg.inverse(e, alg.star), alg.tprod(e, g))
    out = []
    for n in range(0, max_n + 1):
        rn = coefficient_of(gen, LAMBDA, n).scale(factorial(n))
        out.append(_finish(rn, f"retarded product R_{n}", order))
    return out
