"""Reduction quality: fixed-investment cost errors, reconstruction and reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .copl_model import build_model, cost_breakdown
from .data_ingest import HOURS_PER_DAY, HourlyDataset
from .instance import PlanningConfig, PlanningInstance
from .solver_bridge import SolutionRecord, SolverError, solve_model


class EvaluationError(ValueError):
    pass


def cost_error(fhat: float, fstar: float) -> float:
    """Relative cost increase in percent: ``100 (fhat - fstar) / fstar``."""
    if not fstar > 0:
        raise EvaluationError(f"reference cost must be positive, got {fstar}")
    return 100.0 * (fhat - fstar) / fstar


def _error_or_nan(fhat: float, fstar: float) -> float:
    # a zero reference component (e.g. no investment at all) has no relative error
    try:
        return cost_error(fhat, fstar)
    except EvaluationError:
        return math.nan


@dataclass(frozen=True)
class ErrorReport:
    case: str
    operation_error: float
    investment_error: float
    total_error: float
    cpu_s: float
    costs_hat: dict
    costs_star: dict

    @classmethod
    def from_costs(cls, case: str, hat: dict, star: dict, cpu_s: float = 0.0) -> "ErrorReport":
        for c in (hat, star):
            if not math.isclose(c["total"], c["investment"] + c["operation"], rel_tol=1e-12, abs_tol=1e-6):
                raise EvaluationError("total cost must equal investment + operation")
        return cls(case, _error_or_nan(hat["operation"], star["operation"]),
                   _error_or_nan(hat["investment"], star["investment"]),
                   cost_error(hat["total"], star["total"]), cpu_s, dict(hat), dict(star))


def fix_and_resolve(instance: PlanningInstance, config: PlanningConfig, dataset: HourlyDataset,
                    investments: dict[str, float], workdir, profile="highs", gap: float = 1e-4,
                    timeout: float = 3600.0, stem: str = "fixed") -> tuple[SolutionRecord, dict]:
    """Re-optimise the hourly reference operations with investments pinned.

    ``investments`` maps canonical investment names (``Y[..]``, ``Ecap[..]``,
    ``Ccap[..]``, ``W[..]``) to values. Returns the solution record and its
    cost breakdown under the reference model.
    """
    ref_cfg = config.replace(variant="REF")
    probe = build_model(instance, ref_cfg, dataset)
    need = probe.metadata["investment_vars"]
    missing = [n for n in need if n not in investments]
    if missing:
        raise EvaluationError(f"reduced solution lacks investment variables {missing}")
    model = build_model(instance, ref_cfg, dataset, fixed={n: investments[n] for n in need})
    rec = solve_model(model, workdir, profile, gap, timeout, stem)
    if rec.status == "infeasible":
        raise EvaluationError("fixed investments are infeasible in the reference model")
    if not rec.ok:
        raise SolverError(f"reference re-solve failed: {rec.status} {rec.message}")
    return rec, cost_breakdown(model, rec.vector(model))


def reconstruction_series(rdset, n_days: int | None = None, selections=None) -> np.ndarray:
    """Full-horizon factor array ``(area, feature, hour)`` with every day replaced by its RD.

    With ``selections`` each RD is first reduced to its kept points and
    linearly re-interpolated, i.e. the profile the sparse model sees.
    """
    membership = np.asarray(rdset.membership)
    if n_days is not None and n_days != len(membership):
        raise EvaluationError("membership length does not match the horizon")
    days = []
    for i, rd in enumerate(rdset.rds):
        pts = np.asarray(rd.points, dtype=float)
        if selections is not None:
            J = np.asarray(selections[i].J)
            t = np.arange(pts.shape[-1])
            pts = np.stack([[np.interp(t, J, pts[a, f, J]) for f in range(pts.shape[1])]
                            for a in range(pts.shape[0])])
        days.append(pts[:, :, :HOURS_PER_DAY])
    return np.concatenate([days[m] for m in membership], axis=2)


def net_load_mw(values: np.ndarray, instance: PlanningInstance, areas, features) -> np.ndarray:
    """Net load per area (MW) from a factor array ``(area, feature, hour)``."""
    fl, fw = list(features).index("load"), list(features).index("wind")
    out = np.empty((len(areas), values.shape[-1]))
    for a, area in enumerate(areas):
        out[a] = (values[a, fl] * instance.area_peak_load(area)
                  - values[a, fw] * instance.area_wind_max(area))
    return out


def atae(selections) -> float:
    """Mean per-day approximation error over the representative days."""
    sels = list(selections)
    if not sels:
        raise EvaluationError("no selections")
    return float(np.mean([s.objective for s in sels]))


# -- files -------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "operation_error", "investment_error", "total_error", "cpu_s"])
        for r in reports:
            w.writerow([r.case, _fmt(r.operation_error), _fmt(r.investment_error),
                        _fmt(r.total_error), f"{r.cpu_s:.3f}"])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (v if k == "case" else float(v)) for k, v in r.items()} for r in csv.DictReader(fh)]


def write_reconstruction_csv(original: np.ndarray, reconstructed: np.ndarray, areas, path) -> None:
    """Long-format net-load comparison (MW), one row per area and hour."""
    if original.shape != reconstructed.shape:
        raise EvaluationError("original and reconstruction differ in shape")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["area", "hour", "original", "reconstructed"])
        for a, area in enumerate(areas):
            for h in range(original.shape[1]):
                w.writerow([area, h, repr(float(original[a, h])), repr(float(reconstructed[a, h]))])


def rmse(original: np.ndarray, reconstructed: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(original) - np.asarray(reconstructed)) ** 2)))
