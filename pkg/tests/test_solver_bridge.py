import math
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import flat_dataset, needs_cbc, needs_highs
from rdtp.artifact import INF, ModelArtifact
from rdtp.copl_model import build_model
from rdtp.instance import PlanningConfig
from rdtp.solver_bridge import (SolverError, check_feasibility, invoke_solver, mps_text, parse_solution, read_mps,
                                read_varmap, recomputed_objective, solve_model, write_mps, write_varmap)

GOLDEN = Path(__file__).parent / "golden"


def tiny():
    m = ModelArtifact(name="TINY")
    x = m.add_var("x[a]", 0.0, 4.0)
    m.add_row("cap[a]", [(x, 2.0)], "L", 3.0)
    m.add_objective(x, -1.0)
    return m


def mixed():
    m = ModelArtifact(name="MIXED")
    x = m.add_var("x", -INF, INF)
    y = m.add_var("y", -INF, 3.5)
    z = m.add_var("z", binary=True)
    w = m.add_var("w", 1.25, 1.25)
    v = m.add_var("v", 2.0, 9.0)
    m.add_row("r1", [(x, 1.0), (y, -2.5), (z, 1e-7)], "G", -1.0)
    m.add_row("r2", [(x, 1.0), (v, 1.0 / 3.0)], "E", 2.0)
    m.add_row("r3", [(z, 4.0), (w, 1.0), (y, 1.0)], "L", 8.0)
    m.add_objective(x, 0.1)
    m.add_objective(z, 3.0)
    m.add_objective(v, 1.0)
    m.objective_offset = 12.5
    return m


def test_golden_mps(tmp_path):
    write_mps(tiny(), tmp_path / "t.mps", tmp_path / "t.csv")
    assert (tmp_path / "t.mps").read_bytes() == (GOLDEN / "tiny.mps").read_bytes()
    assert (tmp_path / "t.csv").read_bytes() == (GOLDEN / "tiny.varmap.csv").read_bytes()


def test_mps_deterministic(toy):
    ds = flat_dataset(2)
    assert mps_text(build_model(toy, PlanningConfig(), ds)) == mps_text(build_model(toy, PlanningConfig(), ds))


def test_free_variable_bound_line():
    assert " FR BND       x0000000" in mps_text(mixed())
    assert " MI BND       x0000001" in mps_text(mixed())
    assert " BV BND       x0000002" in mps_text(mixed())


def test_roundtrip_recovers_model(tmp_path):
    m = mixed()
    write_mps(m, tmp_path / "m.mps")
    back = read_mps(tmp_path / "m.mps")
    assert (back.matrix() != m.matrix()).nnz == 0
    assert np.array_equal(back.objective_vector(), m.objective_vector())
    assert back.objective_offset == m.objective_offset
    assert back.row_senses == m.row_senses
    assert list(back.row_rhs) == list(m.row_rhs)
    for a, b in zip(back.bounds(), m.bounds()):
        assert np.array_equal(a, b)
    assert np.array_equal(back.binary_mask(), m.binary_mask())


def test_roundtrip_toy_model(tmp_path, toy):
    m = build_model(toy, PlanningConfig(), flat_dataset(2))
    write_mps(m, tmp_path / "m.mps")
    back = read_mps(tmp_path / "m.mps")
    assert (back.matrix() != m.matrix()).nnz == 0
    assert np.array_equal(back.objective_vector(), m.objective_vector())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0), min_size=1, max_size=6))
def test_numbers_roundtrip_exactly(coefs):
    m = ModelArtifact()
    idx = [m.add_var(f"v{i}", -INF, INF) for i in range(len(coefs))]
    m.add_row("r", list(zip(idx, coefs)), "L", coefs[0])
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        write_mps(m, Path(d) / "m.mps")
        back = read_mps(Path(d) / "m.mps")
    assert back.matrix().toarray().ravel().tolist() == list(coefs)
    assert back.row_rhs[0] == coefs[0]


def test_model_name_and_row_errors():
    m = ModelArtifact()
    m.add_var("x")
    with pytest.raises(IndexError):
        m.add_row("r", [(3, 1.0)], "L", 0)
    with pytest.raises(ValueError):
        m.add_row("r", [(0, 1.0)], "Q", 0)
    with pytest.raises(ValueError):
        m.add_var("x")


# -- parsing -------------------------------------------------------------------------------


def test_two_line_value_file(tmp_path):
    p = tmp_path / "s.sol"
    p.write_text("x0000000 1.5\nx0000001 -2\n")
    rec = parse_solution(p)
    assert rec.values == {"x0000000": 1.5, "x0000001": -2.0}


def test_varmap_restores_names(tmp_path):
    write_varmap(tiny(), tmp_path / "vm.csv")
    (tmp_path / "s.sol").write_text("# status optimal\n# objective -1.5\nx0000000 1.5\n")
    rec = parse_solution(tmp_path / "s.sol", read_varmap(tmp_path / "vm.csv"))
    assert rec.values == {"x[a]": 1.5}
    assert rec.objective == -1.5


def test_binary_tolerance_and_missing(tmp_path):
    m = mixed()
    (tmp_path / "s.sol").write_text("# status optimal\nx 0.5\nz 0.9999995\n")
    rec = parse_solution(tmp_path / "s.sol", model=m)
    assert rec.values["z"] == 1.0
    assert rec.missing == 3 and rec.values["w"] == 0.0
    (tmp_path / "t.sol").write_text("# status optimal\nz 0.99\n")
    assert parse_solution(tmp_path / "t.sol", model=m).values["z"] == 0.99


@pytest.mark.parametrize("text", ["x 1 2\n", "x abc\n", "# status weird\n"])
def test_malformed_generic(tmp_path, text):
    (tmp_path / "bad.sol").write_text(text)
    with pytest.raises(SolverError):
        parse_solution(tmp_path / "bad.sol")


def test_cbc_format_parse(tmp_path):
    (tmp_path / "c.sol").write_text(
        "Optimal - objective value -1.50000000\n"
        "      0 x0000000               1.5                    -1\n"
        "      1 x0000001                 0                     0\n")
    rec = parse_solution(tmp_path / "c.sol", output_format="cbc")
    assert rec.status == "optimal" and rec.objective == -1.5
    assert rec.values == {"x0000000": 1.5, "x0000001": 0.0}
    (tmp_path / "i.sol").write_text("Infeasible - objective value 0.00000000\n")
    assert parse_solution(tmp_path / "i.sol", output_format="cbc").status == "infeasible"
    (tmp_path / "e.sol").write_text("")
    with pytest.raises(SolverError):
        parse_solution(tmp_path / "e.sol", output_format="cbc")


# -- invocation ------------------------------------------------------------------------------


@needs_highs
def test_feasible_lp_optimal(tmp_path):
    rec = solve_model(tiny(), tmp_path)
    assert rec.status == "optimal"
    assert rec.values["x[a]"] == pytest.approx(1.5)
    assert rec.objective == pytest.approx(-1.5)
    assert Path(rec.log_path).exists()


@needs_highs
def test_objective_offset_and_binaries(tmp_path):
    m = mixed()
    rec = solve_model(m, tmp_path)
    assert rec.status == "optimal"
    assert check_feasibility(m, rec) == []
    assert recomputed_objective(m, rec) == pytest.approx(rec.objective, rel=1e-6)


@needs_highs
def test_contradictory_bounds_infeasible(tmp_path):
    m = ModelArtifact()
    x = m.add_var("x", 0.0, 1.0)
    m.add_row("lo", [(x, 1.0)], "G", 2.0)
    assert solve_model(m, tmp_path).status == "infeasible"


@needs_highs
def test_timeout_never_hangs(tmp_path, toy):
    from rdtp.synthetic import synthetic_dataset

    ds = synthetic_dataset(n_days=60, seed=1, peak_days={"south": 20}, peak_boost=0.7)
    m = build_model(toy, PlanningConfig(investment_scale=60 / 365), ds)
    write_mps(m, tmp_path / "big.mps")
    t0 = time.perf_counter()
    raw = invoke_solver(tmp_path / "big.mps", "highs", 1e-9, timeout=1.0, grace=20.0)
    rec = parse_solution(raw, model=m)
    assert time.perf_counter() - t0 < 25.0
    assert rec.status in ("feasible-gap", "error", "optimal")
    if rec.status == "feasible-gap":
        assert math.isfinite(rec.objective)


def test_missing_binary(tmp_path, monkeypatch):
    write_mps(tiny(), tmp_path / "t.mps")
    monkeypatch.setenv("RDTP_HIGHS_BIN", str(tmp_path / "no-such-solver"))
    with pytest.raises(SolverError, match="not found"):
        invoke_solver(tmp_path / "t.mps", "highs")


def test_unknown_profile(tmp_path):
    write_mps(tiny(), tmp_path / "t.mps")
    with pytest.raises(SolverError):
        invoke_solver(tmp_path / "t.mps", "gurobi-9")


def test_nonzero_exit_is_error(tmp_path):
    write_mps(tiny(), tmp_path / "t.mps")
    prof = {"name": "false", "command": ["{bin}", "-c", "import sys; sys.exit(3)"], "binary": "python3"}
    rec = parse_solution(invoke_solver(tmp_path / "t.mps", prof))
    assert rec.status == "error" and "3" in rec.message


@needs_cbc
def test_cbc_profile_small_milp(tmp_path):
    m = mixed()
    rec = solve_model(m, tmp_path, profile="cbc")
    assert rec.status == "optimal"
    assert rec.objective == pytest.approx(solve_model(m, tmp_path / "h").objective, rel=1e-6)
    assert check_feasibility(m, rec, tol=1e-6) == []
