"""Acceptance criteria 1-10.

Each test records one ``criterion N: PASS|FAIL`` line (shown in the pytest
terminal summary) before asserting.
"""

import csv
import io
import itertools
import shutil
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, needs_highs
from oracles import brute_force_breakpoints
from rdtp.cli import main
from rdtp.copl_model import build_model, cost_breakdown, envelope_interval_cost, exact_interval_cost, investment_values
from rdtp.data_ingest import slice_days
from rdtp.evaluate import ErrorReport, cost_error, fix_and_resolve
from rdtp.instance import PlanningConfig
from rdtp.rd_select import cluster_days, find_extreme_days, map_slds
from rdtp.rtp_select import allocate_rtps, optimal_breakpoints, rtp_milp
from rdtp.solver_bridge import check_feasibility, solve_model
from rdtp.synthetic import synthetic_dataset

GAP = 1e-4
SOLVED: list[tuple[str, object, object]] = []  # (label, model, record) for the feasibility re-check


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def solve(model, workdir, label, gap=GAP, **kw):
    rec = solve_model(model, workdir, gap=gap, stem=label.replace(" ", "_"), **kw)
    assert rec.ok, f"{label}: {rec.status} {rec.message}"
    SOLVED.append((label, model, rec))
    return rec


# -- 1 --------------------------------------------------------------------------


@needs_highs
def test_c1_dp_matches_external_milp(tmp_path):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, n_solves = 0.0, 0
    for k in range(25):
        T = int(rng.integers(3, 13))
        y = rng.random((2, T))
        for r in range(2, T + 1):
            m = rtp_milp(y, r)
            rec = solve(m, tmp_path, f"rtp{k}_{r}", gap=0.0)
            worst = max(worst, abs(rec.objective - optimal_breakpoints(y, r).objective))
            n_solves += 1
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-6 and dt < 120, f"{n_solves} MILP solves, max |DP - MILP| = {worst:.2e}, {dt:.1f} s")


# -- 2 --------------------------------------------------------------------------


def test_c2_dp_matches_brute_force():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    mismatches, cases = 0, 0
    for k in range(100):
        T = 2 + k % 9
        shape = (int(rng.integers(1, 4)), T)
        # every third instance on a coarse integer grid so that ties actually occur
        y = rng.integers(0, 3, shape).astype(float) if k % 3 == 0 else rng.random(shape)
        for r in range(2, T + 1):
            sel = optimal_breakpoints(y, r)
            best, J = brute_force_breakpoints(y, r)
            cases += 1
            mismatches += abs(sel.objective - best) > 1e-9 or sel.J != J
    dt = time.perf_counter() - t0
    record(2, mismatches == 0 and dt < 60, f"{cases} (instance, r) pairs, {mismatches} mismatches, {dt:.1f} s")


# -- 3 --------------------------------------------------------------------------


def test_c3_greedy_minimax():
    rng = np.random.default_rng(3)
    failures = []
    for k in range(50):
        n_days = int(rng.integers(1, 10))
        r_avg = int(rng.integers(4, 14))
        days = [rng.random((int(rng.integers(1, 4)), 25)) for _ in range(n_days)]
        ad = allocate_rtps(days, r_avg, 4)
        eq = allocate_rtps(days, r_avg, 4, mode="equal")
        trace = ad.max_error_trace
        ok = (sum(ad.counts) == sum(eq.counts)
              and max(ad.objectives) <= max(eq.objectives) + 1e-12
              and all(b <= a + 1e-12 for a, b in zip(trace, trace[1:])))
        if not ok:
            failures.append(k)
    record(3, not failures, f"50 random RD sets, failing sets: {failures}")


# -- 4 --------------------------------------------------------------------------


def test_c4_cost_envelope():
    cg1, cg2 = envelope_interval_cost(2, 0, 10, 5, 0, 10, 1)
    example = abs(cg1 + cg2 - 100 / 3)
    rng = np.random.default_rng(4)
    above = 0
    for _ in range(1000):
        a, b, pmax = rng.uniform(0.001, 1), rng.uniform(0, 50), rng.uniform(1, 500)
        p0, p1 = rng.uniform(0, pmax, 2)
        K, delta = int(rng.integers(2, 10)), rng.uniform(0.25, 3)
        exact = exact_interval_cost(a, b, p0, p1, delta)
        above += sum(envelope_interval_cost(a, b, pmax, K, p0, p1, delta)) > exact + 1e-9 * max(1.0, exact)
    # gap over a fixed grid of endpoint pairs, mean and max, must shrink as K grows
    grid = list(itertools.product(np.linspace(0, 1, 5), repeat=2))
    non_monotone = 0
    for _ in range(1000):
        a, b, pmax, delta = rng.uniform(0.001, 1), rng.uniform(0, 50), rng.uniform(1, 500), rng.uniform(0.25, 3)
        stats = []
        for K in range(2, 10):
            gaps = [exact_interval_cost(a, b, u * pmax, v * pmax, delta)
                    - sum(envelope_interval_cost(a, b, pmax, K, u * pmax, v * pmax, delta)) for u, v in grid]
            stats.append((np.mean(gaps), np.max(gaps)))
        tol = 1e-9 * max(1.0, stats[0][1])
        non_monotone += any(s1[0] > s0[0] + tol or s1[1] > s0[1] + tol for s0, s1 in zip(stats, stats[1:]))
    ok = example <= 1e-9 and above == 0 and non_monotone == 0
    record(4, ok, f"|envelope - 100/3| = {example:.1e}; envelope above exact in {above}/1000; "
                  f"gap non-monotone in K for {non_monotone}/1000")


# -- 5 --------------------------------------------------------------------------


def _interval_energy_change(vals, s, label, t, dt):
    pc = vals[f"PC[{s.name},{label},{t}]"] + vals[f"PC[{s.name},{label},{t + 1}]"]
    pd = vals[f"PD[{s.name},{label},{t}]"] + vals[f"PD[{s.name},{label},{t + 1}]"]
    return dt / 2 * (s.eta_c * pc - pd / s.eta_d)


@needs_highs
def test_c5_storage_closure(tmp_path, toy, week):
    fixed = {"Ecap[s2]": 120.0, "Ccap[s2]": 30.0}
    cfg = PlanningConfig(investment_scale=7 / 365)
    rdset = cluster_days(slice_days(week), 2)
    slds = map_slds(rdset)
    m = build_model(toy, cfg.replace(variant="RD"), week, rdset, slds, fixed=fixed)
    v = solve(m, tmp_path, "c5 rd", gap=1e-6).values
    worst_rd, throughput = 0.0, 0.0
    for s in toy.storage:
        for i in range(rdset.n_rd):
            lab = f"rd{i}"
            for t in range(24):
                step = _interval_energy_change(v, s, lab, t, 1.0)
                throughput += abs(step)
                worst_rd = max(worst_rd, abs(v[f"E[{s.name},{lab},{t + 1}]"] - v[f"E[{s.name},{lab},{t}]"] - step))
            worst_rd = max(worst_rd, abs(v[f"Etot[{s.name},{lab}]"] - v[f"E[{s.name},{lab},24]"]))
        le = [v[f"LE[{s.name},{k}]"] for k in range(len(slds.blocks))]
        for k, (rd, n_b) in enumerate(slds.blocks):  # the last block wraps to the first
            nxt = le[(k + 1) % len(le)]
            worst_rd = max(worst_rd, abs(nxt - le[k] - n_b * v[f"Etot[{s.name},rd{rd}]"]))
    ref = build_model(toy, cfg, week, fixed=fixed)
    vr = solve(ref, tmp_path, "c5 ref", gap=1e-6).values
    balance = sum(_interval_energy_change(vr, s, f"d{d}", t, 1.0)
                  for s in toy.storage for d in range(week.year_length_days) for t in range(24))
    ok = worst_rd <= 1e-6 and abs(balance) <= 1e-6 and throughput > 1.0
    record(5, ok, f"RD recursion/wrap residual {worst_rd:.1e} (storage throughput {throughput:.0f} MWh); "
                  f"REF annual balance {balance:.1e}")


# -- 6 --------------------------------------------------------------------------


@needs_highs
def test_c6_full_resolution_rdtp_equals_rd(tmp_path, toy, week):
    cfg = PlanningConfig(investment_scale=7 / 365)
    rdset = cluster_days(slice_days(week), 3, find_extreme_days(week, toy))
    slds = map_slds(rdset)
    sels = allocate_rtps(rdset, 25, 25).selections
    assert all(s.r == 25 for s in sels)
    rd = solve(build_model(toy, cfg.replace(variant="RD"), week, rdset, slds), tmp_path, "c6 rd", gap=1e-6)
    tp = solve(build_model(toy, cfg.replace(variant="RDTP"), week, rdset, slds, sels), tmp_path, "c6 rdtp", gap=1e-6)
    rel = abs(tp.objective - rd.objective) / abs(rd.objective)
    record(6, rel <= GAP, f"RD {rd.objective:.6g} vs RDTP(r=25) {tp.objective:.6g}, relative difference {rel:.1e}")


# -- 7 --------------------------------------------------------------------------


def _reduced_error(toy, cfg, ds, star, workdir, extreme, variant="RD", r_avg=8):
    rdset = cluster_days(slice_days(ds), 4, find_extreme_days(ds, toy) if extreme else set())
    slds = map_slds(rdset)
    sels = allocate_rtps(rdset, r_avg, 4).selections if variant == "RDTP" else None
    m = build_model(toy, cfg.replace(variant=variant), ds, rdset, slds, sels)
    rec = solve(m, workdir, f"{variant} {extreme}")
    rec_fix, hat = fix_and_resolve(toy, cfg, ds, investment_values(m, rec.values), workdir, gap=GAP)
    SOLVED.append((f"{variant} fixed", None, rec_fix))
    return ErrorReport.from_costs(variant, hat, star).total_error


@needs_highs
@pytest.mark.slow
def test_c7_error_pipeline(tmp_path, toy):
    gap_pct = 100 * GAP
    cfg = PlanningConfig(investment_scale=14 / 365)
    # part 1: the toy year (14 days with a southern peak)
    ds = synthetic_dataset(n_days=14, seed=3, peak_days={"south": 6}, peak_boost=0.7)
    ref = build_model(toy, cfg, ds)
    rr = solve(ref, tmp_path, "c7 ref")
    star = cost_breakdown(ref, rr.vector(ref))
    _, same = fix_and_resolve(toy, cfg, ds, investment_values(ref, rr.values), tmp_path, gap=GAP)
    ref_err = ErrorReport.from_costs("REF", same, star).total_error
    reduced = {v: _reduced_error(toy, cfg, ds, star, tmp_path, True, v) for v in ("RD", "RDTP")}
    part1 = abs(ref_err) <= gap_pct and all(e >= -gap_pct for e in reduced.values())
    # part 2: extreme-day preservation against plain clustering on 10 peaked datasets
    order = []
    for seed in range(10):
        ds = synthetic_dataset(n_days=14, seed=seed, peak_days={"south": 3 + seed % 8}, peak_boost=0.7)
        ref = build_model(toy, cfg, ds)
        rr = solve(ref, tmp_path, f"c7 ref{seed}")
        star = cost_breakdown(ref, rr.vector(ref))
        with_ext = _reduced_error(toy, cfg, ds, star, tmp_path, True)
        without = _reduced_error(toy, cfg, ds, star, tmp_path, False)
        order.append((round(with_ext, 3), round(without, 3)))
    n_ok = sum(a <= b + gap_pct for a, b in order)
    record(7, part1 and n_ok == 10,
           f"REF error {ref_err:.1e}%, RD {reduced['RD']:.3f}%, RDTP {reduced['RDTP']:.3f}%; "
           f"extreme <= no-extreme on {n_ok}/10 datasets {order}")


# -- 8 --------------------------------------------------------------------------


def test_c8_cost_error_arithmetic():
    e = cost_error(2807.53e6, 2797.8e6)
    record(8, abs(e - 0.348) <= 0.001, f"cost_error(2807.53e6, 2797.8e6) = {e:.4f}%")


# -- 9 --------------------------------------------------------------------------


@needs_highs
def test_c9_feasibility_recheck(tmp_path, toy, week):
    # solve a fresh set so the criterion also stands alone, then include everything solved above
    cfg = PlanningConfig(investment_scale=7 / 365)
    rdset = cluster_days(slice_days(week), 3, find_extreme_days(week, toy))
    slds = map_slds(rdset)
    sels = allocate_rtps(rdset, 6, 4).selections
    for label, m in (("c9 ref", build_model(toy, cfg, week)),
                     ("c9 rdtp", build_model(toy, cfg.replace(variant="RDTP"), week, rdset, slds, sels)),
                     ("c9 pwc", build_model(toy, cfg.replace(formulation="PWC"), week)),
                     ("c9 rtp", rtp_milp(np.random.default_rng(9).random((2, 12)), 5))):
        solve(m, tmp_path, label)
    checked, bad = 0, []
    for label, model, rec in SOLVED:
        if model is None:
            continue
        checked += 1
        viol = check_feasibility(model, rec, 1e-6)
        if viol:
            bad.append((label, viol[:3]))
    record(9, not bad, f"{checked} parsed solutions re-checked against their rows and bounds, violations: {bad}")


# -- 10 -------------------------------------------------------------------------

VOLATILE = {"timings.json"}


def _artifact_bytes(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.suffix == ".log" or p.name in VOLATILE:
            continue
        data = p.read_bytes()
        if p.name == "report.csv":  # cpu_s is wall-clock measured; mask that column only
            rows = list(csv.reader(io.StringIO(data.decode())))
            k = rows[0].index("cpu_s")
            for row in rows[1:]:
                row[k] = "*"
            data = "\n".join(",".join(r) for r in rows).encode()
        out[str(p.relative_to(root))] = data
    return out


@needs_highs
def test_c10_determinism(tmp_path):
    runs = []
    for name in ("a", "b"):
        wd = tmp_path / name
        assert main(["--workdir", str(wd), "run", "all"]) == 0
        runs.append(_artifact_bytes(wd))
    diff = sorted(k for k in runs[0].keys() | runs[1].keys() if runs[0].get(k) != runs[1].get(k))
    record(10, not diff and len(runs[0]) > 10, f"{len(runs[0])} artifacts compared, differing: {diff}")
    shutil.rmtree(tmp_path)
