"""Theory specifications and the BRST machinery built on them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..expr.polynomial import MIXED, MixedGrading, Polynomial, poly_sum
from ..expr.variables import GradedVariable, registry
from ..local.functional import (
    LocalFunctional,
    ZeroReport,
    _root_id,
    euler_lagrange_poly,
    is_zero_functional,
    total_derivative_poly,
)
from ..local.jets import JetSpace, component_antifield, has_jets
from .antibracket import antibracket_poly, evolutionary, generator_images

__all__ = [
    "BrstLayer",
    "MasterReport",
    "SpecError",
    "TheorySpec",
    "antifield_layers",
    "apply_layer",
    "apply_layer_density",
    "brst",
    "brst_density",
    "brst_squared_on_generators",
    "check_master_equation",
    "gauge_fix",
    "layer_identity_residuals",
    "nonminimal_extend",
    "split_action",
    "verify_k_condition",
]

DYNAMICAL_ROLES = ("field", "ghost", "antighost", "auxiliary", "constant-ghost")


class SpecError(ValueError):
    """A theory specification violates a grading or shape requirement."""


@dataclass(frozen=True)
class TheorySpec:
    """Fields with antifield partners and the three pieces of the total action."""

    name: str
    space: JetSpace
    fields: tuple[GradedVariable, ...]
    S0: LocalFunctional
    Sint: LocalFunctional
    Sext: LocalFunctional
    couplings: tuple[GradedVariable, ...] = ()
    psi: LocalFunctional | None = None
    k_map: dict = field(default_factory=dict)
    gauge_transformations: dict = field(default_factory=dict)
    structure_constants: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for fld in self.fields:
            if fld.role not in DYNAMICAL_ROLES:
                raise SpecError(f"{fld.name} has role {fld.role!r}, not a field role")
            if fld.derivs:
                raise SpecError(f"{fld.name} is a jet coordinate, not a field")
            component_antifield(fld)
        for label, part in (("S0", self.S0), ("Sint", self.Sint), ("Sext", self.Sext)):
            g = part.poly.grading()
            if g is MIXED or g[0] != 0 or g[1] != 0:
                raise SpecError(f"{label} must be bosonic with ghost number 0, got {g}")

    # assembled actions ----------------------------------------------------
    @property
    def antifields(self) -> tuple[GradedVariable, ...]:
        return tuple(component_antifield(f) for f in self.fields)

    @property
    def action(self) -> LocalFunctional:
        return self.S0 + self.Sint

    @property
    def total(self) -> LocalFunctional:
        return self.S0 + self.Sint + self.Sext

    def roots(self) -> tuple[GradedVariable, ...]:
        return self.fields + self.antifields

    def generators(self) -> list[GradedVariable]:
        return list(self.roots())

    def with_parts(self, S_tot: Polynomial, **changes) -> "TheorySpec":
        S0, Sint, Sext = split_action(S_tot)
        return replace(
            self,
            S0=LocalFunctional.of(S0, self.space),
            Sint=LocalFunctional.of(Sint, self.space),
            Sext=LocalFunctional.of(Sext, self.space),
            **changes,
        )


def split_action(S_tot: Polynomial) -> tuple[Polynomial, Polynomial, Polynomial]:
    """``(S0, Sint, Sext)``: quadratic antifield-free part, the remaining
    antifield-free part, and everything carrying antifields."""
    af = registry.antifield
    by_id = registry.by_id
    s0, sint, sext = {}, {}, {}
    for mono, c in S_tot.terms.items():
        if any(af[v] for v in mono):
            sext[mono] = c
            continue
        local_deg = sum(1 for v in mono if has_jets(by_id[v]))
        coupling_deg = len(mono) - local_deg
        (s0 if local_deg <= 2 and coupling_deg == 0 else sint)[mono] = c
    return (
        Polynomial(s0, _trusted=True),
        Polynomial(sint, _trusted=True),
        Polynomial(sext, _trusted=True),
    )


# ---------------------------------------------------------------------------
# BRST differential


def brst(F, spec: TheorySpec) -> LocalFunctional:
    """``s F = (S_tot, F)`` on functionals (result modulo divergences)."""
    pf = F.poly if isinstance(F, LocalFunctional) else Polynomial.coerce(F)
    return LocalFunctional.of(antibracket_poly(spec.total.poly, pf), spec.space)


def _images(spec: TheorySpec, S: Polynomial) -> dict[int, Polynomial]:
    return generator_images(S, spec.roots())


def brst_density(X, spec: TheorySpec, _images_cache: dict | None = None) -> Polynomial:
    """Exact density-level ``s X`` (no integration by parts)."""
    px = X.poly if isinstance(X, LocalFunctional) else Polynomial.coerce(X)
    if isinstance(X, GradedVariable):
        px = Polynomial.var(X)
    images = _images_cache if _images_cache is not None else _images(spec, spec.total.poly)
    return evolutionary(images, px)


def brst_squared_on_generators(spec: TheorySpec) -> dict[str, Polynomial]:
    """Nonzero ``s(s Phi)`` for every field and antifield (empty if nilpotent)."""
    images = _images(spec, spec.total.poly)
    out: dict[str, Polynomial] = {}
    for v in spec.roots():
        once = images.get(v.order_key, Polynomial())
        twice = evolutionary(images, once)
        if twice:
            out[v.text] = twice
    return out


@dataclass
class MasterReport:
    passed: bool
    bracket: Polynomial
    zero: ZeroReport

    @property
    def residual(self) -> dict[str, Polynomial]:
        out = dict(self.zero.residual)
        if self.zero.constant:
            out["<constant>"] = self.zero.constant
        return out


def check_master_equation(spec: TheorySpec) -> MasterReport:
    S = spec.total.poly
    bracket = antibracket_poly(S, S)
    zero = is_zero_functional(bracket)
    return MasterReport(zero.is_zero, bracket, zero)


# ---------------------------------------------------------------------------
# antifield-number layers


@dataclass(frozen=True)
class BrstLayer:
    k: int
    generator: LocalFunctional


def _antifield_part(p: Polynomial, n: int) -> Polynomial:
    af = registry.antifield
    return p.filter(lambda m: sum(af[v] for v in m) == n)


def antifield_layers(spec: TheorySpec) -> list[BrstLayer]:
    """``s^(k) = (S^(k+1), .)`` for ``k = -1 .. max antifield number - 1``."""
    S = spec.total.poly
    af = registry.antifield
    top = max((sum(af[v] for v in m) for m in S.terms), default=0)
    return [BrstLayer(k, LocalFunctional.of(_antifield_part(S, k + 1), spec.space)) for k in range(-1, top)]


def _layer_generator(spec: TheorySpec, k: int) -> Polynomial:
    return _antifield_part(spec.total.poly, k + 1)


def apply_layer(k: int, F, spec: TheorySpec) -> LocalFunctional:
    pf = F.poly if isinstance(F, LocalFunctional) else Polynomial.coerce(F)
    return LocalFunctional.of(antibracket_poly(_layer_generator(spec, k), pf), spec.space)


def apply_layer_density(k: int, X, spec: TheorySpec) -> Polynomial:
    px = X.poly if isinstance(X, LocalFunctional) else Polynomial.coerce(X)
    return evolutionary(_images(spec, _layer_generator(spec, k)), px)


def layer_identity_residuals(spec: TheorySpec, ks=(-1, 0, 1)) -> dict[int, dict[str, Polynomial]]:
    """Nonzero values of ``sum_l s^(l) s^(k-l-1)`` on generators, per ``k``."""
    cache: dict[int, dict] = {}

    def images(level: int) -> dict:
        if level not in cache:
            cache[level] = _images(spec, _layer_generator(spec, level))
        return cache[level]

    out: dict[int, dict[str, Polynomial]] = {}
    for k in ks:
        bad: dict[str, Polynomial] = {}
        for v in spec.roots():
            pieces = []
            for ell in range(-1, k + 1):
                inner = images(k - ell - 1).get(v.order_key)
                if inner is None:
                    continue
                pieces.append(evolutionary(images(ell), inner))
            total = poly_sum(pieces)
            if total:
                bad[v.text] = total
        out[k] = bad
    return out


# ---------------------------------------------------------------------------
# non-minimal sector and gauge fixing


def _nonminimal_pairs(spec: TheorySpec) -> list[tuple[GradedVariable, GradedVariable]]:
    """Match antighost and auxiliary components by their index tuples."""
    antighosts = [f for f in spec.fields if f.role == "antighost"]
    aux = {f.meta.get("components", ()): f for f in spec.fields if f.role == "auxiliary"}
    pairs = []
    for cbar in antighosts:
        comps = cbar.meta.get("components", ())
        B = aux.get(comps)
        if B is None:
            raise SpecError(f"antighost {cbar.text} has no auxiliary partner")
        pairs.append((cbar, B))
    return pairs


def nonminimal_extend(spec: TheorySpec) -> TheorySpec:
    """Add ``-∫ B c̄‡`` for every trivial pair not already present."""
    pairs = _nonminimal_pairs(spec)
    ext = spec.Sext.poly
    present = {_root_id(v) for v in ext.variables()}
    extra = []
    for cbar, B in pairs:
        cbar_af = component_antifield(cbar)
        if cbar_af.order_key in present:
            continue
        extra.append(-(Polynomial.var(B) * Polynomial.var(cbar_af)))
    if not extra:
        return spec
    new_ext = ext + poly_sum(extra)
    return replace(spec, Sext=LocalFunctional.of(new_ext, spec.space))


class GaugeFermionError(SpecError):
    pass


def gauge_fix(spec: TheorySpec, psi) -> TheorySpec:
    """Canonical transformation ``Phi‡ -> Phi‡ - δ_R Psi/δPhi``."""
    p = psi.poly if isinstance(psi, LocalFunctional) else Polynomial.coerce(psi)
    if not p:
        return spec
    g = p.grading()
    if g is MIXED:
        raise MixedGrading("gauge fermion has mixed grading")
    if g[0] != 1 or g[1] != -1:
        raise GaugeFermionError(f"gauge fermion must be odd with ghost number -1, got {g}")
    if g[2] != 0 or any(registry.antifield[v] for v in p.variables()):
        raise GaugeFermionError("gauge fermion must not depend on antifields")
    shifts: dict[int, Polynomial] = {}
    for fld in spec.fields:
        d = euler_lagrange_poly(p, fld, "R")
        if d:
            shifts[component_antifield(fld).order_key] = d
    S = spec.total.poly
    mapping: dict[int, Polynomial] = {}
    for vid in S.variables():
        v = registry.by_id[vid]
        root = _root_id(vid)
        d = shifts.get(root)
        if d is None:
            continue
        img = d
        for mu in v.derivs:
            img = total_derivative_poly(img, mu)
        mapping[vid] = Polynomial.var(vid) - img
    new_total = S.substitute(mapping)
    return spec.with_parts(new_total, psi=LocalFunctional.of(p, spec.space))


# ---------------------------------------------------------------------------
# structure functions


def _gauge_transformations(spec: TheorySpec) -> dict[int, Polynomial]:
    """``δ_c phi`` for the original fields; defaults to the antifield-free
    part of ``-δ_R S_ext/δphi‡``."""
    if spec.gauge_transformations:
        return {_vid(k): Polynomial.coerce(v) for k, v in spec.gauge_transformations.items()}
    af = registry.antifield
    ext1 = spec.Sext.poly.filter(lambda m: sum(af[v] for v in m) == 1)
    out = {}
    for fld in spec.fields:
        if fld.role != "field":
            continue
        img = -euler_lagrange_poly(ext1, component_antifield(fld), "R")
        if img:
            out[fld.order_key] = img
    return out


def _vid(k) -> int:
    return k.order_key if isinstance(k, GradedVariable) else int(k)


def verify_k_condition(spec: TheorySpec, K: dict | None = None) -> dict[str, Polynomial]:
    """``(δ_c + ∫K_M δ_L/δc_M) δ_c phi_N`` for every original field; the
    map is empty when every component vanishes identically."""
    K = spec.k_map if K is None else K
    delta = _gauge_transformations(spec)
    values = dict(delta)
    for ghost, val in K.items():
        values[_vid(ghost)] = Polynomial.coerce(val)
    residual: dict[str, Polynomial] = {}
    for fid, img in sorted(delta.items()):
        r = evolutionary(values, img)
        if r:
            residual[registry.by_id[fid].text] = r
    return residual

