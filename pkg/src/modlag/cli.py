"""Command-line front end.

Subcommands:

* ``derive`` — run the symbolic pipeline and emit a derivation report.
* ``check``  — verify the main theorem, cross-validate the two derivation
  routes, and (optionally) compare against a golden report file.
* ``study``  — run numerical studies and write CSV files plus PNG figures.

Exit codes: 0 success, 1 check failure, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .catalog import METHODS, build_discrete_lagrangian, discrete_EL
from .grammar import ParseError, parse, parse_scalar, print_expr
from .modeq import SingularMassError, cross_validate, mesh_route
from .modlagrangian import (
    classical_modified_lagrangian,
    legendre_transform,
    verify_theorem,
)
from .presets import PRESET_NAMES, get_preset
from .report import (
    DerivationReport,
    parse_report,
    write_comparison_csv,
    write_order_study_csv,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class SpecError(Exception):
    """Problem-spec file error, reported with a line number."""


def parse_spec_file(path) -> dict:
    """Flat line-oriented key-value format with [sections].

    Keys and values are separated by '='; '#' starts a comment; keys
    outside any section land in section ''.
    """
    sections: dict[str, dict[str, str]] = {"": {}}
    current = sections[""]
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip(), {})
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecError(f"{path}:{lineno}: expected 'key = value', "
                            f"got {raw!r}")
        current[key.strip()] = value.strip()
    return sections


def _floats(text: str) -> list:
    return [float(tok) for tok in text.replace(",", " ").split()]


class Problem:
    """Resolved problem: Lagrangian, method, order, numeric parameters."""

    def __init__(self, preset_name, lagrangian_text, method, order, numeric):
        if preset_name is not None:
            self.preset = get_preset(preset_name)
            self.lagrangian = self.preset.lagrangian
            self.name = preset_name
        elif lagrangian_text is not None:
            self.preset = None
            self.lagrangian = parse_scalar(lagrangian_text)
            self.name = "custom"
        else:
            raise SpecError("either a preset or a lagrangian is required")
        if method not in METHODS:
            raise SpecError(
                f"unknown method {method!r}; available: {', '.join(METHODS)}")
        self.method = method
        if order < 0:
            raise SpecError("order must be nonnegative")
        self.order = order
        self.numeric = numeric

    @property
    def dim(self):
        return self.preset.dim if self.preset else None

    @property
    def env(self):
        return dict(self.preset.env) if self.preset else {}

    @property
    def potential(self):
        return self.preset.potential if self.preset else None


def resolve_problem(args) -> Problem:
    spec = {"": {}}
    if args.spec:
        spec = parse_spec_file(args.spec)
    top = spec[""]
    preset = args.preset or top.get("preset")
    lagrangian = top.get("lagrangian")
    method = args.method or top.get("method") or "stormer_verlet"
    if args.order is not None:
        order = args.order
    elif "order" in top:
        try:
            order = int(top["order"])
        except ValueError:
            raise SpecError(f"order is not an integer: {top['order']!r}")
    else:
        order = 2
    numeric = spec.get("study", {})
    problem = Problem(preset, lagrangian if preset is None else None,
                      method, order, numeric)
    problem.spec_sections = spec
    return problem


# ---------------------------------------------------------------------------
# derive

def build_report(problem: Problem, with_hamiltonian: bool = True) -> DerivationReport:
    k = problem.order
    rep = DerivationReport()
    rep.meta("problem", problem.name)
    rep.meta("method", problem.method)
    rep.meta("order", k)
    rep.meta("lagrangian", print_expr(problem.lagrangian))

    Ld = build_discrete_lagrangian(problem.method, problem.lagrangian)
    rep.exprs_section("discrete_lagrangian", [("expr", Ld.expr)])

    Ldisc, mesh, residual, modeq, closure = mesh_route(Ld, k)
    rep.note(f"L_disc expanded about the midpoint, truncated at order {k} "
             f"(O(h^{k + 1}) discarded)")
    rep.series_section("ldisc_series", Ldisc)
    rep.note(f"Euler-Maclaurin correction summed through h^{2 * (k // 2)}, "
             f"truncated at order {k}")
    rep.series_section("mesh_lagrangian", mesh)
    rep.series_section("el_residual", residual)
    rep.note(f"modified equation solved order-by-order up to h^{k} "
             f"(O(h^{k + 1}) remainder)")
    rows = rep.section("modified_equation")
    for j, c in enumerate(modeq.coeffs):
        rows.append((f"f{j}", print_expr(c)))

    Lmod = classical_modified_lagrangian(mesh, closure, k)
    rep.note(f"closure substituted into L_mesh, truncated at order {k}")
    rep.series_section("modified_lagrangian", Lmod.series)

    if with_hamiltonian:
        try:
            H = legendre_transform(Lmod, k)
            rep.note("Legendre transform by series reversion, "
                     f"truncated at order {k}")
            rep.series_section("modified_hamiltonian", H.series)
        except (SingularMassError, ValueError) as exc:
            rep.note(f"modified Hamiltonian skipped: {exc}")
    return rep


def cmd_derive(args) -> int:
    problem = resolve_problem(args)
    rep = build_report(problem)
    text = rep.render()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"derive_{problem.name}_{problem.method}_k{problem.order}.txt"
        path.write_text(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# check

def cmd_check(args) -> int:
    problem = resolve_problem(args)
    k = problem.order
    failures = []
    Ld = build_discrete_lagrangian(problem.method, problem.lagrangian)
    _, mesh, _, modeq, closure = mesh_route(Ld, k)

    Lmod = classical_modified_lagrangian(mesh, closure, k)
    vt = verify_theorem(Lmod, modeq)
    print(f"verify_theorem (k={k}): {'pass' if vt['equal'] else 'FAIL'}")
    if not vt["equal"]:
        failures.append("verify_theorem")
        for j in vt["mismatch_orders"]:
            print(f"  h^{j} lagrangian side: "
                  f"{print_expr(vt['lagrangian_side'].coeffs[j])}")
            print(f"  h^{j} equation side:   "
                  f"{print_expr(vt['equation_side'].coeffs[j])}")

    cv = cross_validate(Ld, k)
    print(f"cross_validate (k={k}): {'pass' if cv['equal'] else 'FAIL'}")
    if not cv["equal"]:
        failures.append("cross_validate")
        for j in cv["mismatch_orders"]:
            print(f"  h^{j} direct:     {print_expr(cv['direct'].coeffs[j])}")
            print(f"  h^{j} lagrangian: "
                  f"{print_expr(cv['lagrangian'].coeffs[j])}")

    golden = getattr(args, "golden", None)
    if golden is None and args.spec:
        golden = parse_spec_file(args.spec)[""].get("golden")
    if golden:
        ok = _check_golden(problem, golden, modeq, Lmod)
        print(f"golden comparison: {'pass' if ok else 'FAIL'}")
        if not ok:
            failures.append("golden")

    return EXIT_CHECK_FAILED if failures else EXIT_OK


def _check_golden(problem, golden_path, modeq, Lmod) -> bool:
    sections = parse_report(Path(golden_path).read_text())
    ok = True
    for sect, series in (("modified_equation", modeq),
                         ("modified_lagrangian", Lmod.series)):
        if sect not in sections:
            continue
        for key, text in sections[sect].items():
            j = int(key.lstrip("fh^"))
            if j > series.order:
                continue
            got = series.coeffs[j]
            got_zero = not (got.items if hasattr(got, "items") else got.terms)
            if text == "0":
                if got_zero:
                    continue
                expected = None
            else:
                expected = parse(text)
            if expected != got:
                ok = False
                print(f"  {sect} {key} differs:")
                print(f"    expected: {text}")
                print(f"    derived:  {print_expr(got)}")
    return ok


# ---------------------------------------------------------------------------
# study

def cmd_study(args) -> int:
    import numpy as np

    from . import lab
    problem = resolve_problem(args)
    if problem.dim is None:
        raise SpecError(
            f"problem {problem.name!r} is symbolic-only; numerical studies "
            f"need a concrete preset (harmonic or kepler)")
    params = problem.numeric
    k = problem.order
    out = Path(args.out or "study_out")
    out.mkdir(parents=True, exist_ok=True)

    h = float(params.get("h", 0.5))
    T = float(params.get("T", 100.0))
    tol = float(params.get("tol", 1e-12))
    x0 = np.array(_floats(params["x0"])) if "x0" in params else None
    v0 = np.array(_floats(params["v0"])) if "v0" in params else None
    if x0 is None or v0 is None:
        raise SpecError("study section needs x0 and v0")
    if x0.shape != (problem.dim,) or v0.shape != (problem.dim,):
        raise SpecError(f"x0/v0 must have dimension {problem.dim}")

    Ld = build_discrete_lagrangian(problem.method, problem.lagrangian)
    De = discrete_EL(Ld)
    _, _, _, modeq, _ = mesh_route(Ld, k)
    env = problem.env
    stem = f"{problem.name}_{problem.method}_k{k}"
    written = []

    # trajectories: discrete map (x1 from the reference flow of the
    # original equation at time h) and the k-truncated modified equation
    n_steps = int(round(T / h))
    ref = lab.integrate_modeq(modeq, 0, x0, v0, h, h, tol=tol, env_extra=env)
    disc = lab.run_discrete(De, x0, ref.states[-1], h, n_steps, env_extra=env)
    cont = lab.integrate_modeq(modeq, k, x0, v0, h, T, tol=tol, env_extra=env)

    obs_d, obs_c = {}, {}
    if problem.potential is not None:
        obs_d["energy"] = lab.energy_series(disc, problem.potential)
        obs_c["energy"] = lab.energy_series(cont, problem.potential)
    path = out / f"trajectory_discrete_{stem}.csv"
    write_trajectory_csv(path, disc, obs_d)
    written.append(path)
    path = out / f"trajectory_modeq_{stem}.csv"
    write_trajectory_csv(path, cont, obs_c)
    written.append(path)

    comparison = lab.meshpoint_comparison(disc, cont)
    path = out / f"comparison_{stem}.csv"
    write_comparison_csv(path, comparison)
    written.append(path)

    study = None
    if "ladder" in params:
        ladder = _floats(params["ladder"])
        window = float(params.get("window", 10.0))
        # symmetric methods have vanishing odd coefficients, so the first
        # neglected term after an even k sits two orders up
        symmetric = problem.method in ("midpoint", "stormer_verlet")
        expected = float(k + 2 if symmetric and k % 2 == 0 else k + 1)
        study = lab.defect_order_study(De, modeq, k, ladder, window, x0, v0,
                                       tol=min(tol, 1e-13), env_extra=env,
                                       expected=expected)
        path = out / f"order_study_{stem}.csv"
        write_order_study_csv(path, study)
        written.append(path)

    if not args.no_plots:
        from . import plots
        path = out / f"trajectories_{stem}.png"
        plots.plot_trajectories(path, [disc, cont],
                                ["discrete", f"modified equation k={k}"],
                                title=f"{problem.name} ({problem.method})")
        written.append(path)
        path = out / f"comparison_{stem}.png"
        plots.plot_comparison(path, comparison)
        written.append(path)
        if study is not None:
            path = out / f"order_study_{stem}.png"
            plots.plot_order_study(path, study)
            written.append(path)

    for p in written:
        print(f"wrote {p}")
    if study is not None:
        print(f"defect order study: slope {study.slope:.3f} "
              f"(expected {study.expected:g})")
    print(f"mesh-point sup deviation: {comparison['sup']:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="modlag",
        description="modified equations and modified Lagrangians of "
                    "variational integrators")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", help="problem spec file")
        p.add_argument("--preset", choices=PRESET_NAMES,
                       help="named example problem")
        p.add_argument("--method", choices=METHODS,
                       help="discretization method")
        p.add_argument("--order", type=int, help="truncation order k")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("derive", help="emit a derivation report")
    common(p)
    p = sub.add_parser("check", help="verify theorem/goldens")
    common(p)
    p.add_argument("--golden", help="golden report file to compare against")
    p = sub.add_parser("study", help="numerical studies (CSV + PNG)")
    common(p)
    p.add_argument("--no-plots", action="store_true",
                   help="skip PNG rendering")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    handlers = {"derive": cmd_derive, "check": cmd_check, "study": cmd_study}
    try:
        return handlers[args.command](args)
    except (SpecError, ParseError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
