"""Quantum brackets assembled from a differential, an antibracket and an
anomaly, and the checks that they form an L-infinity algebra.

For arguments of parities ``e_1 .. e_k``::

    [F]       = s F + (-1)^e A[F (x) e^L]
    [F1,F2]   = (-1)^e1 (F1,F2) + (-1)^(e1+e2) A[F1 (x) F2 (x) e^L]
    [F1..Fk]  = (-1)^(e1+..+ek) A[F1 (x) .. (x) Fk (x) e^L]      k >= 3

Arguments may carry powers of hbar; all results are truncated at the
family's hbar order.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping, Sequence
from math import comb, factorial

from gmpy2 import mpq

from ..expr.polynomial import Polynomial, poly_sum
from ..expr.series import HbarSeries, series_sum
from ..expr.variables import GradedVariable, parameter

__all__ = [
    "BracketFamily",
    "ModeAnomaly",
    "SupportViolation",
    "TransportedAnomaly",
    "anomaly_as_generating_map",
    "check_linfty",
    "check_linfty_polarised",
    "locality_tags",
    "mode_brackets",
    "quantum_cohomology_step",
    "theory_brackets",
]

Anomaly = Callable[[Sequence[HbarSeries]], HbarSeries]


class SupportViolation(ValueError):
    """A bracket of arguments with disjoint locality tags is nonzero."""


def _series(x, order: int | None) -> HbarSeries:
    if isinstance(x, HbarSeries):
        return HbarSeries(x.coeffs, order)
    return HbarSeries.classical(Polynomial.coerce(x), order)


def _parity(s: HbarSeries) -> int:
    p = None
    for c in s.coeffs.values():
        q = c.parity()
        if p is None:
            p = q
        elif p != q:
            raise ValueError("bracket arguments must have a definite parity")
    return p or 0


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


class BracketFamily:
    """The n-ary quantum brackets of one theory.

    ``differential`` and ``antibracket`` act on hbar-free polynomials and are
    extended hbar-linearly; ``anomaly`` maps a list of argument series to
    ``A[args (x) e^L]`` (``None`` means the anomaly vanishes).  ``is_zero``
    decides when a residual counts as zero (plain polynomial equality for
    mode systems, vanishing as a local functional for theories)."""

    def __init__(
        self,
        differential: Callable[[Polynomial], Polynomial],
        antibracket: Callable[[Polynomial, Polynomial], Polynomial],
        anomaly: Anomaly | None = None,
        order: int = 6,
        is_zero: Callable[[Polynomial], bool] | None = None,
        name: str = "brackets",
    ) -> None:
        self.differential = differential
        self.antibracket = antibracket
        self.anomaly = anomaly
        self.order = order
        self.name = name
        self._is_zero = is_zero or (lambda p: not p)

    # ------------------------------------------------------------------
    def zero_series(self, s: HbarSeries) -> bool:
        return all(self._is_zero(p) for k, p in s.coeffs.items() if k <= self.order)

    def _classical_unary(self, s: HbarSeries) -> HbarSeries:
        return s.map(lambda p: Polynomial.coerce(self.differential(p))).truncate(self.order)

    def _classical_binary(self, a: HbarSeries, b: HbarSeries) -> HbarSeries:
        buckets: dict[int, list[Polynomial]] = {}
        for i, p in a.coeffs.items():
            for j, q in b.coeffs.items():
                if i + j <= self.order:
                    val = self.antibracket(p, q)
                    if val:
                        buckets.setdefault(i + j, []).append(val)
        return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, self.order)

    def anomaly_of(self, args: Sequence) -> HbarSeries:
        """``A[args (x) e^L]``."""
        if self.anomaly is None:
            return HbarSeries({}, self.order)
        series = [_series(x, self.order) for x in args]
        if any(not s for s in series):
            return HbarSeries({}, self.order)
        return _series(self.anomaly(series), self.order)

    def bracket(self, *args) -> HbarSeries:
        series = [_series(x, self.order) for x in args]
        k = len(series)
        if k == 0 or any(not s for s in series):
            return HbarSeries({}, self.order)
        eps = [_parity(s) for s in series]
        total = sum(eps)
        anomalous = self.anomaly_of(series).scale(_sign(total))
        if k == 1:
            return self._classical_unary(series[0]) + anomalous
        if k == 2:
            return self._classical_binary(series[0], series[1]).scale(_sign(eps[0])) + anomalous
        return anomalous

    def q(self, x) -> HbarSeries:
        """Quantum BRST differential."""
        return self.bracket(x)

    def quantum_antibracket(self, f, g) -> HbarSeries:
        fs = _series(f, self.order)
        return self.bracket(fs, g).scale(_sign(_parity(fs)))

    def q_layer(self, m: int) -> Callable[[Polynomial], Polynomial]:
        """``q^(m)``: the hbar^m coefficient of ``q`` on hbar-free input."""

        def op(p: Polynomial) -> Polynomial:
            return self.q(Polynomial.coerce(p))[m]

        return op

    def q_layers(self, top: int) -> list[Callable[[Polynomial], Polynomial]]:
        return [self.q_layer(m) for m in range(top + 1)]

    # ------------------------------------------------------------------
    def table(
        self,
        basis: Sequence,
        arity: int,
        tags: Sequence[frozenset] | None = None,
    ) -> dict[tuple[int, ...], HbarSeries]:
        """Brackets of all sorted index tuples of the basis.

        With locality tags, tuples whose tag sets have empty common
        intersection are recorded as zero after checking that the computed
        bracket vanishes."""
        out = {}
        for idx in itertools.combinations_with_replacement(range(len(basis)), arity):
            args = [basis[i] for i in idx]
            val = self.bracket(*args)
            if tags is not None:
                common = frozenset.intersection(*(tags[i] for i in idx))
                if not common:
                    if not self.zero_series(val):
                        raise SupportViolation(f"arguments {idx} have disjoint support but bracket {val}")
                    continue
            if val:
                out[idx] = val
        return out


# ---------------------------------------------------------------------------
# L-infinity relations


def check_linfty(family: BracketFamily, n: int, f) -> HbarSeries:
    """``sum_{l=1..n} C(n,l) [F^(n-l), [F^l]]`` for an even ``F``."""
    fs = _series(f, family.order)
    if fs and _parity(fs):
        raise ValueError("check_linfty needs an even argument; use check_linfty_polarised")
    pieces = []
    for ell in range(1, n + 1):
        inner = family.bracket(*([fs] * ell))
        if not inner:
            continue
        pieces.append(family.bracket(*([fs] * (n - ell) + [inner])).scale(comb(n, ell)))
    return series_sum(pieces, family.order)


def _polarisation_parameter(i: int, parity: int) -> GradedVariable:
    return parameter(f"%alpha{i}:{parity}", parity)


def check_linfty_polarised(family: BracketFamily, n: int, functionals: Sequence) -> HbarSeries:
    """The relation for ``F = sum_i alpha_i F_i`` with ``alpha_i`` of the
    parity of ``F_i``; every polarised relation is a coefficient of the
    result in the ``alpha``."""
    total = HbarSeries({}, family.order)
    for i, g in enumerate(functionals):
        gs = _series(g, family.order)
        if not gs:
            continue
        alpha = Polynomial.var(_polarisation_parameter(i, _parity(gs)))
        total = total + gs.map(lambda p, a=alpha: a * p)
    return check_linfty(family, n, total)


def quantum_cohomology_step(family: BracketFamily, f, g, x=None) -> dict:
    """Compatibility of ``q`` with the quantum antibracket,

        q (F,G)_h - (qF,G)_h + (-1)^eF (F,qG)_h,

    and, when ``x`` is given, the change of representative
    ``(F + qX, G)_h - (F,G)_h - q (X,G)_h`` (zero whenever ``qG = 0``)."""
    fs, gs = _series(f, family.order), _series(g, family.order)
    eps_f = _parity(fs) if fs else 0
    q = family.q
    ab = family.quantum_antibracket
    compat = q(ab(fs, gs)) - ab(q(fs), gs) + ab(fs, q(gs)).scale(_sign(eps_f))
    report = {
        "compatibility": compat.truncate(family.order),
        "passed": family.zero_series(compat),
    }
    if x is not None:
        xs = _series(x, family.order)
        if xs and fs and _parity(xs) == eps_f:
            raise ValueError("the shift X must have the opposite parity of F so that qX can be added to F")
        change = ab(fs + q(xs), gs) - ab(fs, gs) - q(ab(xs, gs))
        qg = q(gs)
        report["representative_change"] = change.truncate(family.order)
        report["g_closed"] = family.zero_series(qg)
        report["passed"] = report["passed"] and (not report["g_closed"] or family.zero_series(change))
    return report


# ---------------------------------------------------------------------------
# anomaly sources


class ModeAnomaly:
    """``A[args (x) e^L]`` computed from the anomalous Ward identity of the
    free BRST derivation of a mode system."""

    def __init__(self, system, generator: Polynomial | None = None, interaction=None, max_interaction: int = 2, order: int = 6) -> None:
        from ..fock.ward import AnomalyMap, GeneratorDerivation

        self.system = system
        self.generator = generator if generator is not None else system.free_action()
        self.interaction = Polynomial.coerce(interaction) if interaction is not None else Polynomial()
        self.derivation = GeneratorDerivation(system, self.generator)
        self.map = AnomalyMap(self.derivation, max_interaction if self.interaction else 0, order)
        self.order = order

    def __call__(self, args: Sequence[HbarSeries]) -> HbarSeries:
        from ..fock.products import LAMBDA

        raw = self.map(list(args), self.interaction)
        one = {LAMBDA.order_key: Polynomial.one()}
        # the Ward-identity module lets the derivation act on the arguments
        # directly; the bracket convention carries an explicit (-1)^(sum eps)
        sign = _sign(sum(_parity(a) for a in args if a))
        return raw.map(lambda p: p.substitute(one)).scale(sign)


def _apply_power(op, p: Polynomial, k: int) -> Polynomial:
    for _ in range(k):
        if not p:
            break
        p = Polynomial.coerce(op(p))
    return p


class TransportedAnomaly:
    """Anomaly of the brackets transported along ``phi = exp(hbar M)``.

    ``[F_1..F_k]' = phi^{-1} [phi F_1, .., phi F_k]`` is again an
    L-infinity structure whenever the original one is; ``M`` is an even
    linear operator preserving ghost number.  The anomaly is read off from
    the transported brackets by undoing the classical terms."""

    def __init__(self, base: BracketFamily, operator: Callable[[Polynomial], Polynomial]) -> None:
        self.base = base
        self.operator = operator
        self.order = base.order

    def _phi(self, s: HbarSeries, sign: int) -> HbarSeries:
        buckets: dict[int, list[Polynomial]] = {}
        for j, p in s.coeffs.items():
            for a in range(0, self.order - j + 1):
                img = _apply_power(self.operator, p, a)
                if img:
                    c = mpq(sign**a, factorial(a))
                    buckets.setdefault(j + a, []).append(img.scale(c))
        return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, self.order)

    def transported_bracket(self, args: Sequence[HbarSeries]) -> HbarSeries:
        inner = self.base.bracket(*[self._phi(_series(a, self.order), 1) for a in args])
        return self._phi(inner, -1)

    def __call__(self, args: Sequence[HbarSeries]) -> HbarSeries:
        args = [_series(a, self.order) for a in args]
        eps = [_parity(a) for a in args]
        new = self.transported_bracket(args)
        k = len(args)
        if k == 1:
            classical = self.base._classical_unary(args[0])
        elif k == 2:
            classical = self.base._classical_binary(args[0], args[1]).scale(_sign(eps[0]))
        else:
            classical = HbarSeries({}, self.order)
        return (new - classical).scale(_sign(sum(eps)))


def anomaly_as_generating_map(anomaly: Anomaly, max_n: int, order: int = 6):
    """Adapter ``(args, F) -> sum_n lambda^n/n! A[args (x) F^n]`` for the
    consistency check of the Ward-identity module, converted back to that
    module's sign convention (no ``(-1)^(sum eps)``)."""
    from ..fock.products import LAMBDA

    lam = Polynomial.var(LAMBDA)

    def amap(args, f) -> HbarSeries:
        f = Polynomial.coerce(f)
        pieces = []
        for n in range(max_n + 1):
            full = list(args) + [f] * n
            if not full:
                continue
            if n and not f:
                break
            series = [_series(a, order) for a in full]
            sign = _sign(sum(_parity(a) for a in series if a))
            val = _series(anomaly(series), order).scale(sign)
            if val:
                pieces.append(val.map(lambda p, n=n: (lam**n * p).scale(mpq(1, factorial(n)))))
        return series_sum(pieces, order)

    return amap


# ---------------------------------------------------------------------------
# ready-made families


def mode_brackets(
    system,
    anomaly: str | Anomaly = "computed",
    interaction=None,
    order: int = 6,
    max_interaction: int = 2,
    transport: Callable[[Polynomial], Polynomial] | None = None,
) -> BracketFamily:
    """Brackets on a mode system with ``s = (S0 + L, .)``.

    ``anomaly`` is ``"zero"``, ``"computed"`` (from the free BRST Ward
    identity) or a callable.  ``transport`` replaces the anomaly by the one
    obtained by transporting the family along ``exp(hbar M)``."""
    from ..fock.ward import antibracket_modes

    s0 = system.free_action()
    lint = Polynomial.coerce(interaction) if interaction is not None else Polynomial()
    total = s0 + lint

    def differential(p: Polynomial) -> Polynomial:
        return antibracket_modes(system, total, p)

    def antibracket(a: Polynomial, b: Polynomial) -> Polynomial:
        return antibracket_modes(system, a, b)

    if anomaly == "zero":
        source = None
    elif anomaly == "computed":
        source = ModeAnomaly(system, s0, lint if lint else None, max_interaction, order)
    elif callable(anomaly):
        source = anomaly
    else:
        raise ValueError(f"unknown anomaly source {anomaly!r}")
    family = BracketFamily(differential, antibracket, source, order, name=f"{system.name}:{anomaly if isinstance(anomaly, str) else 'custom'}")
    if transport is not None:
        family = BracketFamily(differential, antibracket, TransportedAnomaly(family, transport), order, name=family.name + "+transport")
    return family


def theory_brackets(spec, order: int = 6, anomaly: Anomaly | None = None) -> BracketFamily:
    """Brackets on local functionals of a theory; residuals are compared
    as functionals (modulo total derivatives)."""
    from ..bv.antibracket import antibracket_poly
    from ..local.functional import is_zero_functional

    total = spec.total.poly

    def differential(p: Polynomial) -> Polynomial:
        return antibracket_poly(total, p)

    def is_zero(p: Polynomial) -> bool:
        return is_zero_functional(p).is_zero

    return BracketFamily(differential, antibracket_poly, anomaly, order, is_zero, name=spec.name)


def locality_tags(system_sites: Mapping[int, str], functionals: Sequence) -> list[frozenset]:
    """Tag each functional with the sites of the variables it contains."""
    out = []
    for f in functionals:
        s = _series(f, None)
        sites = set()
        for p in s.coeffs.values():
            for vid in p.variables():
                site = system_sites.get(vid)
                if site is not None:
                    sites.add(site)
        out.append(frozenset(sites))
    return out

