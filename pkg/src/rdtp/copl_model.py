"""Transmission / storage / wind co-planning MILP.

Operations are written either with piecewise-linear (PWL) semantics, where
power variables live at time points and intervals interpolate linearly
between them, or piecewise-constant (PWC), where each interval carries one
power level. Three chronology variants share the same per-day block:

* ``REF``  -- every calendar day in sequence, hourly points, days coupled
  at midnight and wrapped around the year;
* ``RD``   -- representative days, storage tracked relative to the start of
  each day plus a long-term level per sequential block of days;
* ``RDTP`` -- as ``RD`` with a reduced, unequally spaced set of points per day.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .artifact import INF, ModelArtifact
from .data_ingest import DataError, HourlyDataset, slice_days
from .instance import InstanceError, PlanningConfig, PlanningInstance

# families coupled across midnight in the reference model
BOUNDARY_FAMILIES = ("PG", "PR", "PS", "PX", "PC", "PD", "E", "theta")
INVESTMENT_FAMILIES = ("Y", "Ecap", "Ccap", "W")


class ModelError(ValueError):
    pass


# -- small formulas --------------------------------------------------------------


def tangent_points(pmax: float, K: int) -> np.ndarray:
    """Evenly spaced tangent levels ``(k-1)/(K-1) * pmax`` for k = 1..K."""
    if K < 2:
        raise ValueError("K must be >= 2")
    return np.arange(K) / (K - 1) * pmax


def interval_energy(p0: float, p1: float, delta: float) -> float:
    """Energy of a linear power ramp from ``p0`` to ``p1`` over ``delta`` hours."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return 0.5 * delta * (p0 + p1)


def exact_interval_cost(a: float, b: float, p0: float, p1: float, delta: float) -> float:
    """Integral of ``a/2 P^2 + b P`` along the linear ramp ``p0 -> p1``."""
    m = 0.5 * (p0 + p1)
    return delta * (0.5 * a * m * m + b * m) + a * delta / 24.0 * (p0 - p1) ** 2


def envelope_interval_cost(a: float, b: float, pmax: float, K: int, p0: float, p1: float,
                           delta: float) -> tuple[float, float]:
    """Smallest ``(CG1, CG2)`` allowed by the tangent rows for fixed endpoint powers."""
    pi = tangent_points(pmax, K)
    m = 0.5 * (p0 + p1)
    cg1 = delta * np.max((a * pi + b) * m - 0.5 * a * pi**2)
    ramp = abs(p0 - p1)
    cg2 = delta * np.max(a * pi / 12.0 * ramp - a * pi**2 / 24.0)
    return float(cg1), float(cg2)


# -- input blocks ----------------------------------------------------------------


@dataclass(frozen=True)
class DayBlock:
    """Factor data of one modelled day, areas in instance order.

    ``load``/``wind`` have shape ``(n_areas, n_points)``; ``deltas`` holds the
    ``n_points - 1`` interval durations in hours.
    """

    label: str
    load: np.ndarray
    wind: np.ndarray
    deltas: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        n = self.load.shape[1]
        if self.wind.shape != self.load.shape or len(self.deltas) != n - 1 or n < 2:
            raise DataError(f"day {self.label}: inconsistent block shapes")
        if np.any(np.asarray(self.deltas) <= 0):
            raise DataError(f"day {self.label}: non-positive interval duration")

    @property
    def n_points(self) -> int:
        return self.load.shape[1]


def _area_rows(instance: PlanningInstance, areas) -> list[int]:
    areas = list(areas)
    try:
        return [areas.index(a) for a in instance.area_names]
    except ValueError:
        missing = [a for a in instance.area_names if a not in areas]
        raise DataError(f"missing factor data for areas {missing}") from None


def block_from_points(instance, areas, features, points, label, J=None, deltas=None, weight=1.0) -> DayBlock:
    rows = _area_rows(instance, areas)
    fl, fw = list(features).index("load"), list(features).index("wind")
    J = np.arange(points.shape[-1]) if J is None else np.asarray(J)
    if deltas is None:
        deltas = np.diff(J).astype(float)
    return DayBlock(label, points[rows, fl][:, J], points[rows, fw][:, J], np.asarray(deltas, float), weight)


def reference_blocks(instance: PlanningInstance, ds: HourlyDataset) -> list[DayBlock]:
    return [block_from_points(instance, ds.areas, ds.features, d.points, f"d{d.day_index}")
            for d in slice_days(ds)]


def rd_blocks(instance: PlanningInstance, rdset, areas, features, selections=None) -> list[DayBlock]:
    out = []
    for i, rd in enumerate(rdset.rds):
        J = deltas = None
        if selections is not None:
            sel = selections[i]
            if sel.rd_index != i:
                raise ModelError(f"selection order mismatch at rd {i}")
            J, deltas = sel.J, sel.deltas
        out.append(block_from_points(instance, areas, features, rd.points, f"rd{i}", J, deltas,
                                     float(rdset.weights[i])))
    return out


# -- builders ----------------------------------------------------------------------


def build_investment(model: ModelArtifact, inst: PlanningInstance, cfg: PlanningConfig,
                     fixed: dict[str, float] | None = None) -> None:
    """Investment variables, their bounds and the investment cost in the objective."""
    total_load = sum(l.peak_mw for l in inst.loads)
    if sum(w.wmax for w in inst.wind) < cfg.wind_portfolio * total_load - 1e-9:
        raise InstanceError("wind portfolio target exceeds total candidate wind capacity")
    k = cfg.investment_scale
    for nl in inst.candidate_lines:
        y = model.add_var(f"Y[{nl.name}]", binary=True)
        model.add_objective(y, k * nl.cost_per_km * nl.length_km)
    for s in inst.storage:
        e = model.add_var(f"Ecap[{s.name}]", 0.0, s.emax)
        c = model.add_var(f"Ccap[{s.name}]", 0.0, s.cmax)
        model.add_objective(e, k * s.cost_energy)
        model.add_objective(c, k * s.cost_power)
        model.add_row(f"ratio[{s.name}]", [(c, s.phi), (e, -1.0)], "L", 0.0)
    wvars = []
    for w in inst.wind:
        wv = model.add_var(f"W[{w.name}]", 0.0, w.wmax)
        model.add_objective(wv, k * w.cost)
        wvars.append(wv)
    model.add_row("portfolio", [(wv, 1.0) for wv in wvars], "G", cfg.wind_portfolio * total_load)
    if fixed:
        for name, val in fixed.items():
            if not model.has_var(name):
                raise ModelError(f"fixed value for unknown investment variable {name!r}")
            v = model.variables[model.var(name)]
            val = float(round(val)) if v.kind == "B" else float(np.clip(val, v.lb, v.ub))
            model.fix(name, val)


def build_gen_cost_block(model: ModelArtifact, g, label: str, t: int, delta: float, K: int,
                         pg0: int, pg1: int, weight: float = 1.0) -> tuple[int, int]:
    """Tangent rows bounding the PWL interval cost of generator ``g`` from below.

    ``CG1`` covers the cost at the interval's average power, ``CG2`` the
    extra cost of the ramp within the interval; both enter the objective
    with ``weight``.
    """
    key = f"{g.name},{label},{t}"
    cg1 = model.add_var(f"CG1[{key}]", -INF, INF)
    cg2 = model.add_var(f"CG2[{key}]", -INF, INF)
    model.add_objective(cg1, weight)
    model.add_objective(cg2, weight)
    for k, pi in enumerate(tangent_points(g.pmax, K)):
        slope = g.a * pi + g.b
        model.add_row(f"cg1[{key},{k}]", [(cg1, 1.0 / delta), (pg0, -slope / 2), (pg1, -slope / 2)],
                      "G", -0.5 * g.a * pi * pi)
        r = g.a * pi / 12.0
        model.add_row(f"cg2u[{key},{k}]", [(cg2, 1.0 / delta), (pg0, -r), (pg1, r)], "G", -g.a * pi * pi / 24.0)
        model.add_row(f"cg2d[{key},{k}]", [(cg2, 1.0 / delta), (pg0, r), (pg1, -r)], "G", -g.a * pi * pi / 24.0)
    return cg1, cg2


def _incidence(inst: PlanningInstance):
    return {ln.name: (ln.from_bus, ln.to_bus) for ln in (*inst.lines, *inst.candidate_lines)}


def _add_snapshot(model, inst, cfg, label, t, fl, fw, inv) -> dict:
    """Variables and rows that live at one snapshot (PWL point or PWC interval)."""
    key = f"{label},{t}"
    V: dict = {}
    area_of = {b: a for a, buses in inst.areas.items() for b in buses}
    a_idx = {a: i for i, a in enumerate(inst.area_names)}
    # demand and shedding
    for l in inst.loads:
        pl = model.add_var(f"PL[{l.name},{key}]", -INF, INF)
        ps = model.add_var(f"PS[{l.name},{key}]")
        model.add_row(f"load[{l.name},{key}]", [(pl, 1.0)], "E", fl[a_idx[area_of[l.bus]]] * l.peak_mw)
        model.add_row(f"shed[{l.name},{key}]", [(ps, 1.0), (pl, -cfg.shed_cap)], "L", 0.0)
        V["PL", l.name], V["PS", l.name] = pl, ps
    # thermal dispatch and reserve
    for g in inst.generators:
        pg = model.add_var(f"PG[{g.name},{key}]")
        pr = model.add_var(f"PR[{g.name},{key}]")
        model.add_row(f"gmin[{g.name},{key}]", [(pr, 1.0), (pg, -1.0)], "L", 0.0)
        model.add_row(f"gmax[{g.name},{key}]", [(pg, 1.0), (pr, 1.0)], "L", g.pmax)
        V["PG", g.name], V["PR", g.name] = pg, pr
    # wind dispatch and curtailment
    for w in inst.wind:
        pw = model.add_var(f"PW[{w.name},{key}]")
        px = model.add_var(f"PX[{w.name},{key}]")
        avail = fw[a_idx[area_of[w.bus]]]
        model.add_row(f"wind[{w.name},{key}]", [(pw, 1.0), (px, 1.0), (inv["W", w.name], -avail)], "E", 0.0)
        model.add_row(f"curt[{w.name},{key}]", [(px, 1.0), (inv["W", w.name], -avail)], "L", 0.0)
        V["PW", w.name], V["PX", w.name] = pw, px
    # storage power, complementarity and energy level
    for s in inst.storage:
        pc = model.add_var(f"PC[{s.name},{key}]")
        pd = model.add_var(f"PD[{s.name},{key}]")
        u = model.add_var(f"U[{s.name},{key}]", binary=True)
        ccap = inv["Ccap", s.name]
        model.add_row(f"chg[{s.name},{key}]", [(pc, s.eta_c), (ccap, -1.0)], "L", 0.0)
        model.add_row(f"dis[{s.name},{key}]", [(pd, 1.0 / s.eta_d), (ccap, -1.0)], "L", 0.0)
        model.add_row(f"cmpc[{s.name},{key}]", [(pc, s.eta_c), (u, -s.cmax)], "L", 0.0)
        model.add_row(f"cmpd[{s.name},{key}]", [(pd, 1.0 / s.eta_d), (u, s.cmax)], "L", s.cmax)
        V["PC", s.name], V["PD", s.name], V["U", s.name] = pc, pd, u
    # network
    for i, b in enumerate(inst.buses):
        bound = 0.0 if i == 0 else cfg.theta_bound
        V["theta", b] = model.add_var(f"theta[{b},{key}]", -bound, bound)
    for ln in inst.lines:
        fe = model.add_var(f"FE[{ln.name},{key}]", -ln.fmax, ln.fmax)
        model.add_row(f"flow[{ln.name},{key}]",
                      [(fe, 1.0), (V["theta", ln.from_bus], -ln.susceptance), (V["theta", ln.to_bus], ln.susceptance)],
                      "E", 0.0)
        V["FE", ln.name] = fe
    for nl in inst.candidate_lines:
        fn = model.add_var(f"FN[{nl.name},{key}]", -INF, INF)
        y = inv["Y", nl.name]
        M = inst.big_m(nl, cfg.theta_bound)
        ang = [(fn, 1.0), (V["theta", nl.from_bus], -nl.susceptance), (V["theta", nl.to_bus], nl.susceptance)]
        model.add_row(f"candu[{nl.name},{key}]", ang + [(y, M)], "L", M)
        model.add_row(f"candl[{nl.name},{key}]", ang + [(y, -M)], "G", -M)
        model.add_row(f"capu[{nl.name},{key}]", [(fn, 1.0), (y, -nl.fmax)], "L", 0.0)
        model.add_row(f"capl[{nl.name},{key}]", [(fn, 1.0), (y, nl.fmax)], "G", 0.0)
        V["FN", nl.name] = fn
    inc = _incidence(inst)
    for b in inst.buses:
        pn = model.add_var(f"PN[{b},{key}]", -INF, INF)
        terms = [(pn, 1.0)]
        for ln in inst.lines:
            f, to = inc[ln.name]
            if b in (f, to):
                terms.append((V["FE", ln.name], -1.0 if b == f else 1.0))
        for nl in inst.candidate_lines:
            f, to = inc[nl.name]
            if b in (f, to):
                terms.append((V["FN", nl.name], -1.0 if b == f else 1.0))
        model.add_row(f"net[{b},{key}]", terms, "E", 0.0)
        V["PN", b] = pn
    for b in inst.buses:
        terms = [(V["PN", b], -1.0)]
        terms += [(V["PL", l.name], 1.0) for l in inst.loads if l.bus == b]
        terms += [(V["PS", l.name], -1.0) for l in inst.loads if l.bus == b]
        terms += [(V["PC", s.name], 1.0) for s in inst.storage if s.bus == b]
        terms += [(V["PD", s.name], -1.0) for s in inst.storage if s.bus == b]
        terms += [(V["PG", g.name], -1.0) for g in inst.generators if g.bus == b]
        terms += [(V["PW", w.name], -1.0) for w in inst.wind if w.bus == b]
        model.add_row(f"bal[{b},{key}]", terms, "E", 0.0)
    terms = [(V["PR", g.name], 1.0) for g in inst.generators]
    terms += [(V["PL", l.name], -cfg.reserve_load) for l in inst.loads]
    terms += [(V["PW", w.name], -cfg.reserve_wind) for w in inst.wind]
    model.add_row(f"reserve[{key}]", terms, "E", 0.0)
    return V


def _add_energy_states(model, inst, label, n_states, storage_mode, inv) -> dict:
    E = {}
    for s in inst.storage:
        idx = []
        for t in range(n_states):
            if storage_mode == "absolute":
                e = model.add_var(f"E[{s.name},{label},{t}]")
                model.add_row(f"ecap[{s.name},{label},{t}]", [(e, 1.0), (inv["Ecap", s.name], -1.0)], "L", 0.0)
            else:
                bound = 0.0 if t == 0 else INF
                e = model.add_var(f"E[{s.name},{label},{t}]", -bound, bound)
            idx.append(e)
        E[s.name] = idx
        if storage_mode == "relative":
            tot = model.add_var(f"Etot[{s.name},{label}]", -INF, INF)
            lo = model.add_var(f"Elow[{s.name},{label}]", -INF, INF)
            hi = model.add_var(f"Ehigh[{s.name},{label}]", -INF, INF)
            model.add_row(f"etot[{s.name},{label}]", [(tot, 1.0), (idx[-1], -1.0)], "E", 0.0)
            for t, e in enumerate(idx):
                model.add_row(f"elow[{s.name},{label},{t}]", [(e, 1.0), (lo, -1.0)], "G", 0.0)
                model.add_row(f"ehigh[{s.name},{label},{t}]", [(e, 1.0), (hi, -1.0)], "L", 0.0)
            inv["Etot", s.name, label], inv["Elow", s.name, label], inv["Ehigh", s.name, label] = tot, lo, hi
    return E


def _ramp_rows(model, g, name, pg0, pg1, pr0, pr1, dt, tau):
    for which, pr in (("s", pr0), ("e", pr1)):
        model.add_row(f"ramp{which}u[{name}]", [(pg1, 1.0 / dt), (pg0, -1.0 / dt), (pr, 1.0 / tau)], "L", g.ramp)
        model.add_row(f"ramp{which}d[{name}]", [(pg1, -1.0 / dt), (pg0, 1.0 / dt), (pr, 1.0 / tau)], "L", g.ramp)


def build_operations_day(model: ModelArtifact, inst: PlanningInstance, cfg: PlanningConfig, block: DayBlock,
                         inv: dict, storage_mode: str = "absolute") -> dict:
    """All operational variables and rows of one day; returns the per-snapshot variable maps."""
    if cfg.formulation == "PWC":
        return _operations_day_pwc(model, inst, cfg, block, inv, storage_mode)
    lbl, n, w = block.label, block.n_points, block.weight
    snaps = [_add_snapshot(model, inst, cfg, lbl, t, block.load[:, t], block.wind[:, t], inv)
             for t in range(n)]
    E = _add_energy_states(model, inst, lbl, n, storage_mode, inv)
    for t in range(n - 1):
        dt = float(block.deltas[t])
        a, b = snaps[t], snaps[t + 1]
        for g in inst.generators:
            build_gen_cost_block(model, g, lbl, t, dt, cfg.tangents, a["PG", g.name], b["PG", g.name], w)
            _ramp_rows(model, g, f"{g.name},{lbl},{t}", a["PG", g.name], b["PG", g.name],
                       a["PR", g.name], b["PR", g.name], dt, cfg.tau)
        for l in inst.loads:
            model.add_objective(a["PS", l.name], w * cfg.voll / 2 * dt)
            model.add_objective(b["PS", l.name], w * cfg.voll / 2 * dt)
        for s in inst.storage:
            e0, e1 = E[s.name][t], E[s.name][t + 1]
            model.add_row(f"soc[{s.name},{lbl},{t}]", [
                (e1, 1.0), (e0, -1.0),
                (a["PC", s.name], -dt * s.eta_c / 2), (b["PC", s.name], -dt * s.eta_c / 2),
                (a["PD", s.name], dt / s.eta_d / 2), (b["PD", s.name], dt / s.eta_d / 2),
            ], "E", 0.0)
    for t, snap in enumerate(snaps):
        for s in inst.storage:
            snap["E", s.name] = E[s.name][t]
    return {"snaps": snaps, "E": E, "block": block}


def _operations_day_pwc(model, inst, cfg, block, inv, storage_mode):
    lbl, n, w = block.label, block.n_points, block.weight
    fl = 0.5 * (block.load[:, :-1] + block.load[:, 1:])
    fw = 0.5 * (block.wind[:, :-1] + block.wind[:, 1:])
    snaps = [_add_snapshot(model, inst, cfg, lbl, k, fl[:, k], fw[:, k], inv) for k in range(n - 1)]
    E = _add_energy_states(model, inst, lbl, n, storage_mode, inv)
    for k, snap in enumerate(snaps):
        dt = float(block.deltas[k])
        for g in inst.generators:
            key = f"{g.name},{lbl},{k}"
            cg = model.add_var(f"CG1[{key}]", -INF, INF)
            model.add_objective(cg, w)
            for j, pi in enumerate(tangent_points(g.pmax, cfg.tangents)):
                model.add_row(f"cg1[{key},{j}]", [(cg, 1.0 / dt), (snap["PG", g.name], -(g.a * pi + g.b))],
                              "G", -0.5 * g.a * pi * pi)
        for l in inst.loads:
            model.add_objective(snap["PS", l.name], w * cfg.voll * dt)
        for s in inst.storage:
            model.add_row(f"soc[{s.name},{lbl},{k}]", [
                (E[s.name][k + 1], 1.0), (E[s.name][k], -1.0),
                (snap["PC", s.name], -dt * s.eta_c), (snap["PD", s.name], dt / s.eta_d),
            ], "E", 0.0)
    for k in range(n - 2):
        dt = 0.5 * float(block.deltas[k] + block.deltas[k + 1])
        a, b = snaps[k], snaps[k + 1]
        for g in inst.generators:
            _ramp_rows(model, g, f"{g.name},{lbl},{k}", a["PG", g.name], b["PG", g.name],
                       a["PR", g.name], b["PR", g.name], dt, cfg.tau)
    return {"snaps": snaps, "E": E, "block": block}


def _couple_days(model, inst, cfg, prev, nxt, tag):
    """Reference-model continuity between the end of ``prev`` and the start of ``nxt``."""
    if cfg.formulation == "PWL":
        last, first = prev["snaps"][-1], nxt["snaps"][0]
        for (fam, ent), idx in last.items():
            if fam in BOUNDARY_FAMILIES:
                model.add_row(f"bnd[{fam},{ent},{tag}]", [(first[fam, ent], 1.0), (idx, -1.0)], "E", 0.0)
        return
    for s in inst.storage:
        model.add_row(f"bnd[E,{s.name},{tag}]", [(nxt["E"][s.name][0], 1.0), (prev["E"][s.name][-1], -1.0)], "E", 0.0)
    a, b = prev["snaps"][-1], nxt["snaps"][0]
    dt = 0.5 * float(prev["block"].deltas[-1] + nxt["block"].deltas[0])
    for g in inst.generators:
        _ramp_rows(model, g, f"{g.name},x,{tag}", a["PG", g.name], b["PG", g.name],
                   a["PR", g.name], b["PR", g.name], dt, cfg.tau)


def _add_sld_tracking(model, inst, inv, slds, labels):
    nb = len(slds.blocks)
    for s in inst.storage:
        le = [model.add_var(f"LE[{s.name},{k}]", -INF, INF) for k in range(nb)]
        ecap = inv["Ecap", s.name]
        for k, (rd, n_b) in enumerate(slds.blocks):
            lab = labels[rd]
            tot, lo, hi = inv["Etot", s.name, lab], inv["Elow", s.name, lab], inv["Ehigh", s.name, lab]
            nxt = (k + 1) % nb
            model.add_row(f"le[{s.name},{k}]", [(le[nxt], 1.0), (le[k], -1.0), (tot, -float(n_b))], "E", 0.0)
            model.add_row(f"lelo[{s.name},{k}]", [(le[k], 1.0), (lo, 1.0)], "G", 0.0)
            model.add_row(f"lelon[{s.name},{k}]", [(le[k], 1.0), (tot, float(n_b - 1)), (lo, 1.0)], "G", 0.0)
            model.add_row(f"lehi[{s.name},{k}]", [(ecap, 1.0), (le[k], -1.0), (hi, -1.0)], "G", 0.0)
            model.add_row(f"lehin[{s.name},{k}]", [(ecap, 1.0), (le[k], -1.0), (hi, -1.0), (tot, -float(n_b - 1))],
                          "G", 0.0)


def build_model(instance: PlanningInstance, config: PlanningConfig, dataset: HourlyDataset | None = None,
                rdset=None, slds=None, selections=None, fixed: dict[str, float] | None = None,
                blocks: list[DayBlock] | None = None) -> ModelArtifact:
    """Generate the co-planning MILP for ``config.variant``.

    ``REF`` needs ``dataset`` (or explicit ``blocks``); ``RD`` needs ``rdset``
    and ``slds``; ``RDTP`` additionally ``selections``. ``fixed`` pins
    investment variables to given values.
    """
    variant = config.variant
    if blocks is None:
        if variant == "REF":
            if dataset is None:
                raise ModelError("REF variant requires the hourly dataset")
            blocks = reference_blocks(instance, dataset)
        else:
            if rdset is None or slds is None:
                raise ModelError(f"{variant} variant requires representative days and SLDs")
            if variant == "RDTP" and selections is None:
                raise ModelError("RDTP variant requires time-point selections")
            if dataset is None:
                raise ModelError(f"{variant} variant requires area/feature labels from the dataset")
            blocks = rd_blocks(instance, rdset, dataset.areas, dataset.features,
                               selections if variant == "RDTP" else None)
    if variant == "RD" and any(b.n_points != 25 or np.any(b.deltas != 1) for b in blocks):
        raise ModelError("RD variant uses 25 hourly points per day")
    if variant != "REF":
        if slds is None:
            raise ModelError(f"{variant} variant requires SLDs")
        bad = [rd for rd, _ in slds.blocks if not 0 <= rd < len(blocks)]
        if bad:
            raise ModelError(f"SLD references representative day(s) {sorted(set(bad))} absent from the set")

    model = ModelArtifact(name=f"{variant}{config.formulation}")
    build_investment(model, instance, config, fixed)
    inv = {}
    for nl in instance.candidate_lines:
        inv["Y", nl.name] = model.var(f"Y[{nl.name}]")
    for s in instance.storage:
        inv["Ecap", s.name] = model.var(f"Ecap[{s.name}]")
        inv["Ccap", s.name] = model.var(f"Ccap[{s.name}]")
    for w in instance.wind:
        inv["W", w.name] = model.var(f"W[{w.name}]")
    n_invest = model.n_vars

    mode = "absolute" if variant == "REF" else "relative"
    days = [build_operations_day(model, instance, config, b, inv, mode) for b in blocks]
    if variant == "REF":
        for i in range(len(days)):
            _couple_days(model, instance, config, days[i], days[(i + 1) % len(days)], blocks[i].label)
    else:
        _add_sld_tracking(model, instance, inv, slds, [b.label for b in blocks])

    model.metadata = {
        "variant": variant,
        "formulation": config.formulation,
        "config": config.to_dict(),
        "instance": instance.name,
        "n_days": len(blocks),
        "points_per_day": [b.n_points for b in blocks],
        "weights": [b.weight for b in blocks],
        "n_slds": len(slds.blocks) if (slds is not None and variant != "REF") else None,
        "investment_vars": [v.name for v in model.variables[:n_invest]],
    }
    return model


def cost_breakdown(model: ModelArtifact, x) -> dict[str, float]:
    """Split the objective at ``x`` into investment (CI) and operation (TCO) parts."""
    x = np.asarray(x, dtype=float)
    c = model.objective_vector()
    n_inv = len(model.metadata["investment_vars"])
    ci = float(c[:n_inv] @ x[:n_inv])
    total = float(c @ x) + model.objective_offset
    return {"investment": ci, "operation": total - ci, "total": total}


def investment_values(model: ModelArtifact, values: dict[str, float]) -> dict[str, float]:
    return {name: float(values[name]) for name in model.metadata["investment_vars"]}
