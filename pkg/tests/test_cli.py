"""CLI: spec parsing, report round-trips, exit codes, study outputs."""

from __future__ import annotations

import pytest

from modlag.cli import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    SpecError,
    main,
    parse_spec_file,
)
from modlag.grammar import parse, print_expr
from modlag.report import parse_report


def test_parse_spec_file(tmp_path):
    spec = tmp_path / "problem.spec"
    spec.write_text(
        "# comment line\n"
        "preset = harmonic   # trailing comment\n"
        "method = stormer_verlet\n"
        "order = 4\n"
        "\n"
        "[study]\n"
        "h = 0.5\n"
        "x0 = 1.0\n"
        "v0 = 0.0\n")
    sections = parse_spec_file(spec)
    assert sections[""] == {"preset": "harmonic",
                            "method": "stormer_verlet", "order": "4"}
    assert sections["study"] == {"h": "0.5", "x0": "1.0", "v0": "0.0"}


def test_parse_spec_file_rejects_bad_line(tmp_path):
    spec = tmp_path / "bad.spec"
    spec.write_text("this line has no equals sign\n")
    with pytest.raises(SpecError):
        parse_spec_file(spec)


def test_derive_is_deterministic_and_round_trips(tmp_path, capsys):
    args = ["derive", "--preset", "mechanical-with-U",
            "--method", "stormer_verlet", "--order", "4"]
    assert main(args) == EXIT_OK
    first = capsys.readouterr().out
    assert main(args) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second  # byte-identical reports

    sections = parse_report(first)
    assert sections[""]["method"] == "stormer_verlet"
    assert sections["modified_equation"]["f0"] == "-U(1)"
    assert sections["modified_equation"]["f2"] == \
        "-1/12*U(2; U(1)) + 1/12*U(3; xd, xd)"
    # every printed expression re-parses to an equal canonical form
    for sect in ("modified_equation", "mesh_lagrangian",
                 "modified_lagrangian", "modified_hamiltonian"):
        for text in sections[sect].values():
            names = ("p",) if sect == "modified_hamiltonian" else ("x",)
            expr = parse(text, vector_names=names) if text != "0" else None
            if expr is not None:
                assert print_expr(expr) == text
    assert "truncation_log" in sections


def test_derive_writes_file(tmp_path):
    out = tmp_path / "reports"
    rc = main(["derive", "--preset", "harmonic", "--order", "2",
               "--out", str(out)])
    assert rc == EXIT_OK
    path = out / "derive_harmonic_stormer_verlet_k2.txt"
    assert path.exists()
    sections = parse_report(path.read_text())
    assert sections["modified_equation"]["f2"] == "-1/12*x"


def test_check_pass_and_golden_negative_control(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["derive", "--preset", "harmonic", "--order", "4",
                 "--out", str(out)]) == EXIT_OK
    golden = out / "derive_harmonic_stormer_verlet_k4.txt"

    rc = main(["check", "--preset", "harmonic", "--order", "4",
               "--golden", str(golden)])
    assert rc == EXIT_OK
    assert "golden comparison: pass" in capsys.readouterr().out

    # perturb one golden coefficient: check must fail with a diff
    perturbed = out / "perturbed.txt"
    perturbed.write_text(golden.read_text().replace(
        "f2: -1/12*x", "f2: -1/6*x"))
    rc = main(["check", "--preset", "harmonic", "--order", "4",
               "--golden", str(perturbed)])
    captured = capsys.readouterr().out
    assert rc == EXIT_CHECK_FAILED
    assert "golden comparison: FAIL" in captured
    assert "expected: -1/6*x" in captured
    assert "derived:  -1/12*x" in captured


def test_check_via_spec_file(tmp_path):
    spec = tmp_path / "p.spec"
    spec.write_text("preset = kepler\nmethod = midpoint\norder = 2\n")
    assert main(["check", "--spec", str(spec)]) == EXIT_OK


def test_study_outputs(tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text(
        "preset = harmonic\n"
        "order = 2\n"
        "[study]\n"
        "h = 0.5\n"
        "T = 20\n"
        "x0 = 1.0\n"
        "v0 = 0.0\n"
        "ladder = 0.4 0.2 0.1 0.05\n"
        "window = 6.0\n")
    out = tmp_path / "study"
    rc = main(["study", "--spec", str(spec), "--out", str(out)])
    assert rc == EXIT_OK
    stem = "harmonic_stormer_verlet_k2"
    for name in (f"trajectory_discrete_{stem}.csv",
                 f"trajectory_modeq_{stem}.csv",
                 f"comparison_{stem}.csv",
                 f"order_study_{stem}.csv",
                 f"trajectories_{stem}.png",
                 f"comparison_{stem}.png",
                 f"order_study_{stem}.png"):
        assert (out / name).exists(), name
    # CSV sanity: header plus the right columns
    lines = (out / f"trajectory_modeq_{stem}.csv").read_text().splitlines()
    assert lines[0] == "t,x0,v0,energy"
    assert len(lines) == 42  # header + T/h + 1 samples
    study_lines = (out / f"order_study_{stem}.csv").read_text().splitlines()
    assert study_lines[0] == "h,defect"
    assert study_lines[-1].startswith("expected,4.0")


def test_study_no_plots(tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text(
        "preset = harmonic\norder = 2\n"
        "[study]\nh = 1.0\nT = 10\nx0 = 1.0\nv0 = 0.0\n")
    out = tmp_path / "study"
    rc = main(["study", "--spec", str(spec), "--out", str(out), "--no-plots"])
    assert rc == EXIT_OK
    assert not list(out.glob("*.png"))
    assert len(list(out.glob("*.csv"))) == 3


def test_usage_errors(tmp_path, capsys):
    # missing spec file
    assert main(["derive", "--spec", str(tmp_path / "nope.spec")]) == EXIT_USAGE
    # no preset and no lagrangian
    assert main(["derive"]) == EXIT_USAGE
    # malformed spec file
    bad = tmp_path / "bad.spec"
    bad.write_text("no equals here\n")
    assert main(["check", "--spec", str(bad)]) == EXIT_USAGE
    # study without x0/v0
    spec = tmp_path / "s.spec"
    spec.write_text("preset = harmonic\n")
    assert main(["study", "--spec", str(spec), "--out",
                 str(tmp_path / "o")]) == EXIT_USAGE
    # study on a symbolic-only preset
    spec2 = tmp_path / "s2.spec"
    spec2.write_text("preset = mechanical-with-U\n[study]\nx0 = 1\nv0 = 0\n")
    assert main(["study", "--spec", str(spec2), "--out",
                 str(tmp_path / "o2")]) == EXIT_USAGE
    capsys.readouterr()


def test_custom_lagrangian_via_spec(tmp_path, capsys):
    spec = tmp_path / "c.spec"
    spec.write_text(
        "lagrangian = 1/2*norm2(xd) - 1/4*pow(norm2(x), 2)\n"
        "method = midpoint\norder = 2\n")
    assert main(["derive", "--spec", str(spec)]) == EXIT_OK
    sections = parse_report(capsys.readouterr().out)
    assert sections[""]["problem"] == "custom"
    assert sections["modified_equation"]["f0"] == "(-norm2(x))*x"
