import csv
import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfresource.errors import DomainError, ResourceError, UsageError
from tfresource.lab.cli import main
from tfresource.lab.fit import fit_power_law
from tfresource.lab.plot import AxesSpec, emit_plot
from tfresource.lab.sweep import (
    MemoryGate,
    format_table,
    parse_float_list,
    parse_int_list,
    parse_plan,
    run_sweep,
)
from tfresource.lab.tasks import (
    COLUMNS,
    Caps,
    Quantity,
    TaskOptions,
    compute_row,
    ground_representative,
    spectrum_rows,
    validate_point,
)
from tfresource.lab.verify import run_suite
from tfresource.model import ModelSpec


# -- fitting -----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.01, 100.0),
    st.floats(-3.0, 3.0),
    st.lists(st.integers(2, 200), min_size=3, max_size=8, unique=True),
)
def test_fit_recovers_exact_power_law(amplitude, exponent, ns):
    fit = fit_power_law([(n, amplitude * n**exponent) for n in ns])
    assert fit.exponent == pytest.approx(exponent, abs=1e-9)
    assert fit.amplitude == pytest.approx(amplitude, rel=1e-9)
    assert fit.exponent_stderr < 1e-7


def test_fit_stderr_and_r2():
    fit = fit_power_law([(1, 1.0), (2, 0.55), (4, 0.24), (8, 0.13)])
    assert -1.1 < fit.exponent < -0.8
    assert 0.0 < fit.exponent_stderr < 0.1
    assert 0.98 < fit.r_squared <= 1.0
    assert fit.predict([1, 2]).shape == (2,)
    assert json.dumps(fit.to_dict())


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, 0), (3, 1)], [(1, 1), (1, 2), (1, 3)]])
def test_fit_rejects(pts):
    with pytest.raises(DomainError):
        fit_power_law(pts)


# -- parsing and tables ------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [("5, 7, 9", [5, 7, 9]), ("9:19:2", [9, 11, 13, 15, 17, 19]), ("3:5", [3, 4, 5]), ("5,9:13:4", [5, 9, 13])],
)
def test_parse_int_list(text, expected):
    assert parse_int_list(text) == expected


def test_parse_lists_reject():
    with pytest.raises(UsageError):
        parse_int_list("1:5:0")
    with pytest.raises(UsageError):
        parse_int_list("1:2:3:4")
    assert parse_float_list("0.1, 0.2,") == [0.1, 0.2]


def test_parse_plan():
    plan = parse_plan(
        "quantity = sre\ngrid.n = 5, 7\ngrid.n = 9\ngrid.j = 1, 0.1, 0\ngrid.j = -1, 0.1, 0\n"
        "grid.h = 0.2\nq = 2\nseed = 3\nthreads = 2\n"
    )
    assert plan.quantity is Quantity.SRE
    assert plan.grid_n == (5, 7, 9)
    assert plan.grid_j == ((1.0, 0.1, 0.0), (-1.0, 0.1, 0.0))
    assert plan.seed == 3 and plan.threads == 2
    assert len(plan.points()) == 6


@pytest.mark.parametrize(
    "text",
    [
        "grid.n = 5\n",
        "quantity = sre\n",
        "quantity = bogus\ngrid.n = 5\n",
        "quantity = sre\ngrid.n = 5\ngrid.j = 1, 0\n",
        "quantity = sre\ngrid.n = 5\ngrid.x = 1\n",
        "quantity = sre\ngrid.n = 5\njunk line\n",
        "quantity = sre\ngrid.n = 5\nq = two\n",
    ],
)
def test_parse_plan_rejects(text):
    with pytest.raises(UsageError):
        parse_plan(text)


def test_plan_validation_lists_bad_points():
    plan = parse_plan("quantity = dee\ngrid.n = 9, 11\npreset = fig4\n")
    with pytest.raises(UsageError, match="N=11"):
        plan.validate()
    plan = parse_plan("quantity = sre\ngrid.n = 15\n")
    with pytest.raises(UsageError):
        plan.validate()


def test_plan_normalizes_negative_field():
    plan = parse_plan("quantity = sre\ngrid.n = 5\ngrid.h = -0.3\n")
    assert plan.points()[0].h == 0.3


def test_memory_gate():
    gate = MemoryGate(100)
    gate.acquire(60)
    gate.release(60)
    gate.acquire(100)
    assert gate.peak == 100
    gate.release(100)
    with pytest.raises(ResourceError):
        gate.acquire(101)


def test_format_table_csv_and_json():
    rows = [{"N": 5, "value": 0.1, "ok": True, "note": None}]
    text = format_table(rows, "csv", timestamp=False)
    assert text == "N,value,ok,note\n5,0.1,true,\n"
    assert format_table(rows, "csv", timestamp=True).startswith("# generated ")
    doc = json.loads(format_table(rows, "json", timestamp=False, meta={"seed": 7}))
    assert doc["rows"] == rows and doc["meta"] == {"seed": 7}
    with pytest.raises(UsageError):
        format_table(rows, "xml")


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 99), st.floats(allow_nan=False, allow_infinity=False)), max_size=5))
def test_csv_deterministic_and_roundtrips(pairs):
    rows = [{"N": n, "value": v} for n, v in pairs]
    a = format_table(rows, "csv", timestamp=False, columns=["N", "value"])
    b = format_table(rows, "csv", timestamp=False, columns=["N", "value"])
    assert a == b
    back = list(csv.DictReader(io.StringIO(a)))
    assert [float(r["value"]) for r in back] == [v for _, v in pairs]


# -- tasks -------------------------------------------------------------------


def test_validate_point():
    opts = TaskOptions()
    with pytest.raises(DomainError):
        validate_point(Quantity.SRE, ModelSpec(14), opts, Caps())
    with pytest.raises(DomainError):
        validate_point(Quantity.TRANSITION, ModelSpec(7, 1.0, 0.1, -0.5), opts)
    with pytest.raises(DomainError):
        validate_point(Quantity.DEE, ModelSpec(11), opts)
    validate_point(Quantity.DEE, ModelSpec(11), TaskOptions(allow_rounding=True))


def test_ground_representative_prefers_positive_momentum():
    state, ell = ground_representative(ModelSpec(7, 1.0, 0.1, 0.0, 0.1), TaskOptions())
    assert ell > 0
    assert abs(state.norm() - 1) < 1e-12


def test_ee_row_omega():
    row = compute_row(Quantity.EE, ModelSpec(9), TaskOptions(state="omega"))
    assert list(row) == list(COLUMNS[Quantity.EE])
    # block of floor(9 / 2) = 4 sites against the thermodynamic value at m = 1/2
    assert row["oracle"] == 2.0
    assert 0 < row["delta"] < 0.5
    assert row["delta"] == pytest.approx(row["oracle"] - row["value"])


def test_dee_row_classical_point():
    row = compute_row(Quantity.DEE, ModelSpec(9), TaskOptions())
    assert row["oracle"] == pytest.approx(0.6114347120823473)
    assert row["normalized"] == pytest.approx(row["value"] / row["oracle"])


def test_sre_row_w_state_matches_oracle():
    row = compute_row(Quantity.SRE, ModelSpec(5), TaskOptions(state="w", ell=1, timing=False))
    assert row["sre_bits"] == pytest.approx(math.log2(125 / 24))
    assert row["wall_time_s"] is None


def test_r2_row():
    row = compute_row(Quantity.R2, ModelSpec(7, 1.0, 0.0, 0.0, 0.4), TaskOptions())
    assert row["r2"] == pytest.approx(0.8573, abs=1e-3)


def test_spectrum_rows():
    rows = spectrum_rows(ModelSpec(5, 1.0), TaskOptions(k=12))
    energies = [r["energy"] for r in rows]
    assert energies[:10] == pytest.approx([-3.0] * 10)
    assert energies[10] > -3.0 + 1e-6


# -- sweeps ------------------------------------------------------------------

_PLAN = "quantity = sre\ngrid.n = 4, 5\ngrid.j = 1, 0, 0\ngrid.j = -1, 0, 0\ngrid.h = 0.2, 0.4\nno_timestamp = true\n"


def test_sweep_deterministic_across_threads():
    outs = []
    for threads in (1, 3):
        buf = io.StringIO()
        run_sweep(parse_plan(_PLAN, threads=threads), stream=buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0])))
    assert len(rows) == 8 and all(r["status"] == "ok" for r in rows)
    assert [int(r["N"]) for r in rows] == [4, 4, 4, 4, 5, 5, 5, 5]


def test_sweep_records_failures():
    plan = parse_plan(_PLAN, mem_budget=10)
    rows = run_sweep(plan, stream=io.StringIO())
    assert all(r["status"] == "resource" for r in rows)


# -- verify ------------------------------------------------------------------


def test_verify_suites_pass_and_repeat():
    a = run_suite("all", seed=7, timestamp=False)
    b = run_suite("all", seed=7, timestamp=False)
    assert a["pass"] and a == b
    assert "generated" not in a
    with pytest.raises(UsageError):
        run_suite("nope")


# -- plotting ----------------------------------------------------------------


def test_emit_plot():
    rows = [{"N": n, "v": 1.0 / n, "g": "a" if n % 2 else "b"} for n in range(3, 9)]
    svg = emit_plot(rows, AxesSpec("N", "v", group="g", log_y=True, hlines=((0.2, "ref"),)))
    assert "<svg" in svg and svg.count("<polyline") == 2
    assert svg == emit_plot(rows, AxesSpec("N", "v", group="g", log_y=True, hlines=((0.2, "ref"),)))
    assert "</svg>" in emit_plot([], AxesSpec("N", "v"))
    with pytest.raises(UsageError):
        emit_plot(rows, AxesSpec("N", "missing"))


# -- command line ------------------------------------------------------------


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_spectrum(capsys):
    code, out, _ = run_cli(capsys, "spectrum", "--n", "5", "--jx", "1", "--k", "3", "--no-timestamp")
    assert code == 0
    assert out.splitlines()[0].startswith("N,")


def test_cli_states_json_and_tfsv(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "states", "w", "--n", "3", "--ell", "1")
    assert code == 0 and json.loads(out)["n_sites"] == 3
    path = tmp_path / "s.tfsv"
    assert main(["states", "ghz", "--n", "3", "--state-format", "tfsv", "--out", str(path)]) == 0
    assert path.read_bytes()[:4] == b"TFSV"
    code, out, _ = run_cli(capsys, "states", "circuit", "--n", "5")
    assert json.loads(out)["n_sites"] == 5


def test_cli_sre_row(capsys):
    code, out, _ = run_cli(capsys, "sre", "--n", "5", "--state", "w", "--ell", "2", "--no-timestamp")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(row["sre_bits"]) == pytest.approx(math.log2(125 / 24))


def test_cli_subcommand_flag_not_abbreviation(capsys):
    # --m belongs to ee and must not be read as a prefix of --mem-budget
    code, out, _ = run_cli(capsys, "ee", "--n", "7", "--state", "omega", "--m", "0.25", "--no-timestamp")
    assert code == 0
    assert float(next(csv.DictReader(io.StringIO(out)))["m"]) == 0.25


def test_cli_negative_field_warns(capsys):
    with pytest.warns(UserWarning, match="normalized"):
        code, out, _ = run_cli(capsys, "sre", "--n", "4", "--h=-0.3", "--no-timestamp")
    assert code == 0
    assert float(next(csv.DictReader(ln for ln in io.StringIO(out) if not ln.startswith("#")))["h"]) == 0.3


def test_cli_sweep_and_plot(tmp_path, capsys):
    plan = tmp_path / "p.plan"
    plan.write_text(_PLAN)
    out = tmp_path / "out.csv"
    assert main(["sweep", str(plan), "--out", str(out)]) == 0
    svg = tmp_path / "p.svg"
    assert main(["plot", str(out), "--x", "N", "--y", "sre_bits", "--group", "jx", "--out", str(svg)]) == 0
    assert "<svg" in svg.read_text()
    assert main(["plot", str(out), "--x", "N", "--y", "nope"]) == 1


@pytest.mark.parametrize(
    "argv,code",
    [
        (["sre", "--n", "16"], 1),
        (["dee", "--n", "11"], 1),
        (["ee", "--n", "5", "--m", "1.5"], 1),
        (["bogus"], 1),
        (["sre"], 1),
        (["sre", "--n", "4", "--out", "/nonexistent/dir/x.csv"], 2),
    ],
)
def test_cli_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_cli_verify_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "all", "--seed", "7", "--no-timestamp", "--out", str(a)]) == 0
    assert main(["verify", "all", "--seed", "7", "--no-timestamp", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
