"""Command line entry point: ``bvlab COMMAND FILE [options]``.

Every command builds a :class:`Report`; the exit status is 0 exactly when
all of its checks pass.  Files are looked up as given and, failing that,
among the example files shipped with the package."""

from __future__ import annotations

import itertools
import sys
import time
from pathlib import Path

import click

from ..expr.polynomial import Polynomial
from ..expr.series import HbarSeries
from .dsl import DSLError, mode_context, parse_expression
from .report import Report

DATA_DIR = Path(__file__).parent / "data"


# ---------------------------------------------------------------------------
# shared plumbing


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    shipped = DATA_DIR / path
    if shipped.exists():
        return shipped
    raise click.BadParameter(f"no such file: {path}")


def _theory(ctx_obj: dict, path: str):
    from .theoryfile import load_theory

    p = _resolve(path)
    return p, load_theory(p, ctx_obj["dim"], ctx_obj["jet_order"])


def _modes(path: str):
    from ..fock.modes import load_modes

    p = _resolve(path)
    return p, load_modes(p)


def _mode_exprs(system, texts) -> list[Polynomial]:
    ctx = mode_context(system)
    return [parse_expression(t, ctx) for t in texts]


def _even_basis(system, max_degree: int) -> list[Polynomial]:
    """Even monomials in the modes of degree 1..max_degree."""
    out = []
    gens = list(system.modes)
    for deg in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(gens, deg):
            p = Polynomial.product(combo)
            if p and p.parity() == 0:
                out.append(p)
    return out


def _finish(ctx_obj: dict, report: Report, started: float) -> None:
    if ctx_obj["timing"]:
        report.config["seconds"] = round(time.perf_counter() - started, 3)
    if ctx_obj["json"]:
        Path(ctx_obj["json"]).write_text(report.to_json(), encoding="utf-8")
    click.echo(report.to_text(), nl=False)
    sys.exit(0 if report.passed else 1)


def _new_report(ctx_obj: dict, command: str, path: Path, **config) -> Report:
    cfg = {k: ctx_obj[k] for k in ("hbar_order", "jet_order", "dim", "max_n")}
    cfg.update(config)
    report = Report(command, cfg)
    report.add_input(path)
    return report


@click.group()
@click.option("--hbar-order", default=6, show_default=True, help="Truncation order in hbar.")
@click.option("--jet-order", default=None, type=int, help="Jet truncation (file setting, else 3).")
@click.option("--dim", default=None, type=int, help="Spacetime dimension (file setting, else 4).")
@click.option("--json", "json_path", default=None, type=click.Path(dir_okay=False), help="Write the report as JSON.")
@click.option("--max-n", default=4, show_default=True, help="Highest arity for product and bracket checks.")
@click.option("--timing", is_flag=True, help="Record wall-clock time in the report.")
@click.version_option(package_name="artifact")
@click.pass_context
def main(ctx, hbar_order, jet_order, dim, json_path, max_n, timing):
    """Exact BV-BRST checks and the finite-dimensional Ward laboratory."""
    if hbar_order < 0 or max_n < 1:
        raise click.BadParameter("--hbar-order must be >= 0 and --max-n >= 1")
    ctx.obj = {
        "hbar_order": hbar_order,
        "jet_order": jet_order,
        "dim": dim,
        "json": json_path,
        "max_n": max_n,
        "timing": timing,
    }


# ---------------------------------------------------------------------------
# classical BV commands


@main.command("check-master")
@click.argument("theory")
@click.pass_obj
def check_master(obj, theory):
    """Master equation, nilpotency on generators and layer identities."""
    from ..bv.theory import brst_squared_on_generators, check_master_equation, layer_identity_residuals

    t0 = time.perf_counter()
    path, tf = _theory(obj, theory)
    report = _new_report(obj, "check-master", path, theory=tf.name)
    master = check_master_equation(tf.spec)
    report.check("master-equation", master.passed, master.residual)
    report.check("brst-squared-on-generators", residual=brst_squared_on_generators(tf.spec))
    for k, res in layer_identity_residuals(tf.spec).items():
        report.check(f"layer-identity[{k}]", residual=res)
    _finish(obj, report, t0)


@main.command("brst-apply")
@click.argument("theory")
@click.option("--expr", "exprs", multiple=True, required=True, help="Density to act on.")
@click.pass_obj
def brst_apply(obj, theory, exprs):
    """Apply the BRST differential to densities and check s^2 = 0 on them."""
    from ..bv.theory import brst
    from ..local.functional import is_zero_functional

    t0 = time.perf_counter()
    path, tf = _theory(obj, theory)
    report = _new_report(obj, "brst-apply", path, theory=tf.name, exprs=list(exprs))
    for i, text in enumerate(exprs):
        x = parse_expression(text, tf.context)
        sx = brst(x, tf.spec)
        report.value(f"s[{i}]", sx.poly)
        ssx = brst(sx, tf.spec)
        report.check(f"s-squared[{i}]", is_zero_functional(ssx).is_zero, ssx.poly)
    _finish(obj, report, t0)


@main.command("layers")
@click.argument("theory")
@click.pass_obj
def layers(obj, theory):
    """Antifield-number layers of s and their nilpotency relations."""
    from ..bv.theory import antifield_layers, layer_identity_residuals

    t0 = time.perf_counter()
    path, tf = _theory(obj, theory)
    report = _new_report(obj, "layers", path, theory=tf.name)
    for layer in antifield_layers(tf.spec):
        report.value(f"generator[{layer.k}]", layer.generator.poly)
    for k, res in layer_identity_residuals(tf.spec).items():
        report.check(f"layer-identity[{k}]", residual=res)
    _finish(obj, report, t0)


@main.command("gauge-fix")
@click.argument("theory")
@click.option("--fermion", default=None, help="Gauge-fixing fermion (overrides the file).")
@click.pass_obj
def gauge_fix_cmd(obj, theory, fermion):
    """Gauge-fixed total action and the master equation before and after."""
    from ..bv.theory import check_master_equation, gauge_fix, nonminimal_extend

    t0 = time.perf_counter()
    path, tf = _theory(obj, theory)
    report = _new_report(obj, "gauge-fix", path, theory=tf.name)
    spec = tf.spec
    if fermion is not None:
        psi = parse_expression(fermion, tf.context)
        base = tf.minimal
        if not any(v.role == "antighost" for v in base.fields):
            base = nonminimal_extend(base)
        spec = gauge_fix(base, psi)
    m0 = check_master_equation(tf.minimal)
    report.check("master-equation[minimal]", m0.passed, m0.residual)
    m1 = check_master_equation(spec)
    report.check("master-equation[gauge-fixed]", m1.passed, m1.residual)
    report.value("total-action", spec.total.poly)
    _finish(obj, report, t0)


# ---------------------------------------------------------------------------
# homotopy commands


def _split_for(obj, target: str):
    from ..homotopy import mode_split, theory_split

    if target.endswith(".modes"):
        path, system = _modes(target)
        return path, mode_split(system), system
    path, tf = _theory(obj, target)
    return path, theory_split(tf), tf


@main.command("homotopy-verify")
@click.argument("target")
@click.option("--max-degree", default=4, show_default=True)
@click.option("--perturb", is_flag=True, help="Also check the hbar-perturbed homotopy of a mode system.")
@click.pass_obj
def homotopy_verify(obj, target, max_degree, perturb):
    """Exhaustive check of D0 h0 + h0 D0 = 1 on monomials with N > 0."""
    t0 = time.perf_counter()
    path, split, source = _split_for(obj, target)
    report = _new_report(obj, "homotopy-verify", path, max_degree=max_degree)
    failures = split.verify_exhaustive(max_degree)
    report.value("split", split.describe())
    report.check("base-identity", residual=failures)
    if perturb:
        if not target.endswith(".modes"):
            raise click.BadParameter("--perturb needs a mode system")
        from ..homotopy import build_h0, perturbative_homotopy
        from ..linfty import mode_brackets

        family = mode_brackets(source, "computed", order=obj["hbar_order"])
        ph = perturbative_homotopy(build_h0(split), family.q_layers(obj["hbar_order"])[1:], obj["hbar_order"], family.q_layer(0))
        top = min(obj["hbar_order"], 4)
        for k in range(top + 1):
            bad = []
            for mono in split.monomials(max_degree, positive_only=True, min_degree=1):
                r = ph.condition_residual(k, split.from_split(mono))
                if r:
                    bad.append(r)
            report.check(f"hbar-condition[{k}]", residual=bad)
    _finish(obj, report, t0)


@main.command("extend")
@click.argument("target")
@click.option("--expr", "text", required=True, help="Classical observable.")
@click.option("--coupling", default=None, help="Theory files: expand in this parameter.")
@click.option("--exact", is_flag=True, help="Start from q0 applied to the expression.")
@click.pass_obj
def extend(obj, target, text, coupling, exact):
    """Extend a closed observable order by order with the homotopy."""
    from ..homotopy import build_h0, extend_observable

    t0 = time.perf_counter()
    path, split, source = _split_for(obj, target)
    order = obj["hbar_order"]
    report = _new_report(obj, "extend", path, expr=text)
    h0 = build_h0(split)
    if target.endswith(".modes"):
        from ..linfty import mode_brackets

        family = mode_brackets(source, "computed", order=order)
        f0 = _mode_exprs(source, [text])[0]
        layers = family.q_layers(order)
        if exact:
            f0 = layers[0](f0)
        result = extend_observable(f0, layers, h0, order)
        closure = family.q(result)
    else:
        if coupling is None:
            raise click.BadParameter("theory files need --coupling NAME to define the expansion")
        layers, closure_fn = _coupling_layers(source, coupling, order)
        f0 = parse_expression(text, source.context)
        if exact:
            f0 = layers[0](f0)
        result = extend_observable(f0, layers, h0, order)
        closure = closure_fn(result)
    report.value("observable", result)
    report.check("closed", residual=closure)
    _finish(obj, report, t0)


def _coupling_layers(tf, name: str, order: int):
    """Layers of s = (S_tot, .) by degree in one coupling parameter."""
    from ..bv.antibracket import evolutionary, generator_images

    param = tf.context.parameters.get(name)
    if param is None:
        raise click.BadParameter(f"unknown parameter {name!r}")
    total = tf.spec.total.poly
    pid = param.order_key
    roots = tf.spec.roots()
    layers = []
    for k in range(order + 1):
        part = total.filter(lambda m, k=k: m.count(pid) == k)
        stripped = Polynomial({tuple(v for v in m if v != pid): c for m, c in part.terms.items()})
        images = generator_images(stripped, roots)
        layers.append(lambda p, images=images: evolutionary(images, Polynomial.coerce(p)))

    def closure(series: HbarSeries) -> HbarSeries:
        buckets: dict[int, list[Polynomial]] = {}
        for j, p in series.coeffs.items():
            for k, layer in enumerate(layers):
                if j + k <= order:
                    buckets.setdefault(j + k, []).append(layer(p))
        from ..expr.polynomial import poly_sum

        return HbarSeries({k: poly_sum(v) for k, v in buckets.items()}, order)

    return layers, closure


# ---------------------------------------------------------------------------
# Ward laboratory commands


@main.command("ward")
@click.argument("modes")
@click.option("--generator", required=True, help="Generator Q of the derivation.")
@click.option("--kind", type=click.Choice(["inner", "generator"]), default="inner", show_default=True)
@click.option("--expr", "exprs", multiple=True, help="Even functionals (default: even monomials of degree <= 3).")
@click.pass_obj
def ward(obj, modes, generator, kind, exprs):
    """Classical parts and anomalies of the anomalous Ward identity."""
    from ..fock.ward import GeneratorDerivation, InnerDerivation, classical_second_order, ward_extract, ward_identity_residual

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "ward", path, generator=generator, kind=kind)
    q = _mode_exprs(system, [generator])[0]
    der = InnerDerivation(system, q) if kind == "inner" else GeneratorDerivation(system, q)
    functionals = _mode_exprs(system, exprs) if exprs else _even_basis(system, 3)
    max_n = obj["max_n"]
    for i, f in enumerate(functionals):
        tag = f.to_text()
        tables = ward_extract(der, f, max_n=max_n, order=obj["hbar_order"])
        report.check(f"D1[{tag}]", residual=tables.classical[1] - der.classical(f))
        if max_n >= 2:
            kernel_form, retarded_form = classical_second_order(der, f)
            report.check(f"D2-kernel[{tag}]", residual=tables.classical[2] - kernel_form)
            report.check(f"D2-retarded[{tag}]", residual=tables.classical[2] - retarded_form)
        if kind == "inner":
            for n in range(3, max_n + 1):
                report.check(f"D{n}=0[{tag}]", residual=tables.classical[n])
        for n in range(1, min(max_n, 3) + 1):
            report.check(f"identity[n={n}][{tag}]", residual=ward_identity_residual(der, f, tables, n))
        report.value(f"anomaly[{tag}]", tables.anomaly)
    _finish(obj, report, t0)


@main.command("free-brst-ward")
@click.argument("modes")
@click.option("--expr", "exprs", multiple=True, required=True)
@click.pass_obj
def free_brst_ward_cmd(obj, modes, exprs):
    """Second-order classical parts for the free BRST layers."""
    from ..fock.ward import free_brst_ward

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "free-brst-ward", path)
    for f in _mode_exprs(system, exprs):
        out = free_brst_ward(system, f, obj["hbar_order"])
        for name, row in out.items():
            report.check(f"{name}[{f.to_text()}]", row["passed"], row["residual"])
    _finish(obj, report, t0)


@main.command("rcl")
@click.argument("modes")
@click.option("--f", "f_text", required=True)
@click.option("--g", "g_text", required=True)
@click.option("--h", "h_text", default=None, help="Third functional for the factorisation check.")
@click.pass_obj
def rcl_cmd(obj, modes, f_text, g_text, h_text):
    """Classical retarded products and their structural properties."""
    from ..fock.rcl import factorisation_residual, field_independence_residual, linear_argument_residual, linearity_residual, rcl

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "rcl", path)
    f, g = _mode_exprs(system, [f_text, g_text])
    h = _mode_exprs(system, [h_text])[0] if h_text else g
    for n in range(0, min(obj["max_n"], 3) + 1):
        report.value(f"R{n}", rcl(system, n, f, g))
        report.check(f"linearity[n={n}]", residual=linearity_residual(system, n, f, g, h))
        report.check(f"field-independence[n={n}]", residual=field_independence_residual(system, n, f, g))
        report.check(f"factorisation[n={n}]", residual=factorisation_residual(system, n, f, g, h))
        if g and all(len(m) == 1 for m in g.terms):
            report.check(f"linear-argument[n={n}]", residual=linear_argument_residual(system, n, f, g))
    _finish(obj, report, t0)


@main.command("glz")
@click.argument("modes")
@click.option("--f", "f_text", required=True)
@click.option("--g", "g_text", required=True)
@click.option("--h", "h_text", required=True)
@click.pass_obj
def glz(obj, modes, f_text, g_text, h_text):
    """The GLZ relation for classical retarded products."""
    from ..fock.rcl import glz_residual

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "glz", path)
    f, g, h = _mode_exprs(system, [f_text, g_text, h_text])
    for n in range(0, min(obj["max_n"], 3) + 1):
        report.check(f"glz[n={n}]", residual=glz_residual(system, n, f, g, h))
    _finish(obj, report, t0)


@main.command("pa-check")
@click.argument("modes")
@click.option("--expr", "text", required=True)
@click.option("--mode", "label", required=True, help="Label of the linear factor.")
@click.pass_obj
def pa_check_cmd(obj, modes, text, label):
    """Perturbative-agreement identities for a linear factor."""
    from ..fock.ward import pa_check

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "pa-check", path, mode=label)
    f = _mode_exprs(system, [text])[0]
    for n in range(1, obj["max_n"] + 1):
        out = pa_check(system, f, n, label, obj["hbar_order"])
        report.check(f"advanced[n={n}]", residual=out["advanced"])
        report.check(f"retarded[n={n}]", residual=out["retarded"])
    _finish(obj, report, t0)


@main.command("consistency")
@click.argument("modes")
@click.option("--expr", "text", required=True)
@click.option("--layer", type=click.Choice(["koszul-tate", "full"]), default="full", show_default=True)
@click.pass_obj
def consistency(obj, modes, text, layer):
    """Consistency condition of the anomaly, order by order in F."""
    from ..fock.ward import consistency_check

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "consistency", path, layer=layer)
    f = _mode_exprs(system, [text])[0]
    out = consistency_check(system, f, obj["max_n"], obj["hbar_order"], layer=layer)
    for n, res in out["by_order"].items():
        report.check(f"order[{n}]", residual=res)
    report.value("anomaly", out["anomaly"])
    _finish(obj, report, t0)


# ---------------------------------------------------------------------------
# quantum brackets


def _family(obj, system, anomaly: str, interaction: Polynomial | None):
    from ..linfty import mode_brackets

    order = obj["hbar_order"]
    if anomaly == "transport":
        first = system.modes[0]
        return mode_brackets(system, "zero", interaction, order, transport=lambda p: Polynomial.var(first) * p)
    return mode_brackets(system, anomaly, interaction, order)


@main.command("linfty")
@click.argument("modes")
@click.option("--anomaly", type=click.Choice(["zero", "computed", "transport"]), default="computed", show_default=True)
@click.option("--expr", "exprs", multiple=True, required=True, help="Functionals (odd ones are polarised).")
@click.option("--interaction", default=None, help="Interaction L in s = (S0 + L, .).")
@click.pass_obj
def linfty(obj, modes, anomaly, exprs, interaction):
    """L-infinity relations, q^2 = 0 and compatibility with the antibracket."""
    from ..linfty import check_linfty, check_linfty_polarised, quantum_cohomology_step

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "linfty", path, anomaly=anomaly)
    inter = _mode_exprs(system, [interaction])[0] if interaction else None
    family = _family(obj, system, anomaly, inter)
    fs = _mode_exprs(system, exprs)
    for f in fs:
        report.check(f"q-squared[{f.to_text()}]", residual=family.q(family.q(f)))
    all_even = all(f.parity() == 0 for f in fs)
    for n in range(1, obj["max_n"] + 1):
        if all_even and len(fs) == 1:
            res = check_linfty(family, n, fs[0])
        else:
            res = check_linfty_polarised(family, n, fs)
        report.check(f"linfty[n={n}]", residual=res)
    for a, b in itertools.combinations_with_replacement(range(len(fs)), 2):
        step = quantum_cohomology_step(family, fs[a], fs[b])
        report.check(f"antibracket-compatibility[{a},{b}]", step["passed"], step["compatibility"])
    _finish(obj, report, t0)


@main.command("contact")
@click.argument("modes")
@click.option("--anomaly", type=click.Choice(["zero", "computed", "transport"]), default="computed", show_default=True)
@click.option("--expr", "text", required=True, help="q-closed even observable F.")
@click.option("--shift", "shift_text", default=None, help="G for the representative change F -> F + qG.")
@click.option("--exact", is_flag=True, help="Interpret --expr as X and use F = qX.")
@click.pass_obj
def contact(obj, modes, anomaly, text, shift_text, exact):
    """Contact terms C_n = h K_n and the representative-change identity."""
    from ..homotopy import mode_split
    from ..linfty import quantum_homotopy, representative_shift, solve_contact_terms

    t0 = time.perf_counter()
    path, system = _modes(modes)
    report = _new_report(obj, "contact", path, anomaly=anomaly, exact=exact)
    family = _family(obj, system, anomaly, None)
    f = _mode_exprs(system, [text])[0]
    if exact:
        f = family.q(f)
    h = quantum_homotopy(family, mode_split(system))
    max_n = obj["max_n"]
    terms = solve_contact_terms(family, f, h, max_n)
    report.value("F", f)
    for n in range(2, max_n + 1):
        report.value(f"C{n}", terms[n])
    for n in range(1, max_n + 1):
        report.check(f"maurer-cartan[n={n}]", residual=terms.maurer_cartan_residual(n))
    if shift_text:
        g = _mode_exprs(system, [shift_text])[0]
        shift = representative_shift(family, f, g, h, max_n - 1)
        for n, row in shift["orders"].items():
            report.check(f"shift-identity[n={n}]", row["passed"], row["residual"] - row["cohomology_part"])
            report.check(f"shift-after-redefinition[n={n}]", row["identity_after_shift"])
    _finish(obj, report, t0)


def run() -> None:
    """Console entry: input and algebra errors become a one-line message and exit status 2."""
    try:
        main(standalone_mode=True)
    except (DSLError, ValueError, ArithmeticError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":  # pragma: no cover
    run()
