"""Representative time points: sparse piecewise-linear day approximation.

For a fixed set of kept points the best approximation of the dropped points
is the chord between the kept neighbours, so choosing ``r`` points is a
shortest-path problem over segments, solved exactly by dynamic programming.
:func:`rtp_milp` writes the equivalent big-M MILP for cross-checking.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .artifact import INF, ModelArtifact


MAX_POINTS = 25
TIE_TOL = 1e-9


@dataclass(frozen=True)
class SparseDaySelection:
    rd_index: int
    J: tuple[int, ...]
    objective: float
    deltas: tuple[int, ...] = ()
    requested: int | None = None

    @property
    def r(self) -> int:
        return len(self.J)


def _values(day) -> np.ndarray:
    """Day data as a 2-D array ``(series, t)``; accepts a DayMatrix or an array."""
    pts = getattr(day, "points", day)
    pts = np.asarray(pts, dtype=float)
    return pts.reshape(-1, pts.shape[-1])


def segment_cost(day, i: int, j: int) -> float:
    """Absolute error of replacing points strictly between ``i`` and ``j`` by their chord."""
    if not i < j:
        raise ValueError(f"segment needs i < j, got ({i}, {j})")
    y = _values(day)
    if j - i < 2:
        return 0.0
    t = np.arange(i + 1, j)
    frac = (t - i) / (j - i)
    chord = y[:, [i]] + (y[:, [j]] - y[:, [i]]) * frac
    return float(np.abs(y[:, i + 1:j] - chord).sum())


def segment_costs(day) -> np.ndarray:
    """Matrix ``C[i, j]`` of :func:`segment_cost` for all ``i < j`` (``inf`` elsewhere)."""
    y = _values(day)
    n = y.shape[1]
    C = np.full((n, n), np.inf)
    for i in range(n - 1):
        C[i, i + 1] = 0.0
        for j in range(i + 2, n):
            frac = np.arange(1, j - i) / (j - i)
            chord = y[:, [i]] + (y[:, [j]] - y[:, [i]]) * frac
            C[i, j] = np.abs(y[:, i + 1:j] - chord).sum()
    return C


class BreakpointTable:
    """Optimal objectives and selections of one day for every point count.

    ``cost_to_go[k, i]`` is the least error of reaching the last point from
    kept point ``i`` using exactly ``k`` more segments.
    """

    def __init__(self, day):
        self.C = segment_costs(day)
        n = self.C.shape[0]
        self.n = n
        G = np.full((n, n), np.inf)
        G[0, n - 1] = 0.0
        for k in range(1, n):
            for i in range(n - 1):
                G[k, i] = np.min(self.C[i, i + 1:] + G[k - 1, i + 1:])
        self.cost_to_go = G

    def objective(self, r: int) -> float:
        self._check(r)
        return float(self.cost_to_go[r - 1, 0])

    def selection(self, r: int) -> tuple[int, ...]:
        """Lexicographically smallest optimal index set with ``r`` points."""
        self._check(r)
        G, C, n = self.cost_to_go, self.C, self.n
        J = [0]
        i = 0
        for k in range(r - 1, 0, -1):
            target = G[k, i]
            tol = TIE_TOL * max(1.0, abs(target))
            for j in range(i + 1, n):
                if C[i, j] + G[k - 1, j] <= target + tol:
                    break
            J.append(j)
            i = j
        return tuple(J)

    def _check(self, r):
        if not 2 <= r <= self.n:
            raise ValueError(f"number of points must lie in [2, {self.n}], got {r}")


def optimal_breakpoints(day, r: int, rd_index: int = 0) -> SparseDaySelection:
    """Exact minimum-error selection of ``r`` points including both ends."""
    table = BreakpointTable(day)
    J = table.selection(r)
    obj = sum(table.C[a, b] for a, b in zip(J, J[1:]))
    return finalize_selection(SparseDaySelection(rd_index, J, float(obj), requested=r))


def finalize_selection(sel: SparseDaySelection) -> SparseDaySelection:
    """Attach interval durations (hours between consecutive kept points)."""
    J = np.asarray(sel.J)
    if len(J) < 2 or np.any(np.diff(J) <= 0):
        raise ValueError("selection must be strictly increasing with at least two points")
    return replace(sel, deltas=tuple(int(d) for d in np.diff(J)))


@dataclass
class Allocation:
    selections: list[SparseDaySelection]
    counts: list[int]
    max_error_trace: list[float] = field(default_factory=list)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.selections])


def allocate_rtps(days, r_avg: int, r_min: int = 4, mode: str = "adaptive") -> Allocation:
    """Distribute ``len(days) * r_avg`` points over days.

    ``equal`` gives every day ``r_avg`` points. ``adaptive`` starts from
    ``r_min`` and repeatedly adds a point to the day with the largest optimal
    error (lowest index on ties) until the budget is spent.
    """
    days = list(getattr(days, "rds", days))
    n_pts = _values(days[0]).shape[1] if days else MAX_POINTS
    if not 2 <= r_min <= r_avg <= n_pts:
        raise ValueError(f"need 2 <= r_min <= r_avg <= {n_pts}, got r_min={r_min}, r_avg={r_avg}")
    budget = len(days) * r_avg
    if budget > n_pts * len(days):
        raise ValueError("point budget exceeds the available points")
    tables = [BreakpointTable(d) for d in days]
    if mode == "equal":
        counts = [r_avg] * len(days)
        trace = [max((t.objective(r_avg) for t in tables), default=0.0)]
    elif mode == "adaptive":
        counts = [r_min] * len(days)
        errs = [t.objective(r_min) for t in tables]
        trace = [max(errs, default=0.0)]
        while sum(counts) < budget:
            open_days = [d for d in range(len(days)) if counts[d] < tables[d].n]
            worst = max(errs[d] for d in open_days)
            d = next(d for d in open_days if errs[d] == worst)
            counts[d] += 1
            errs[d] = tables[d].objective(counts[d])
            trace.append(max(errs))
    else:
        raise ValueError(f"mode must be 'equal' or 'adaptive', got {mode!r}")
    sels = []
    for i, (t, r) in enumerate(zip(tables, counts)):
        J = t.selection(r)
        obj = float(sum(t.C[a, b] for a, b in zip(J, J[1:])))
        sels.append(finalize_selection(SparseDaySelection(i, J, obj, requested=r)))
    return Allocation(sels, counts, trace)


# -- MILP cross-check ------------------------------------------------------------------


def rtp_milp(day, r: int, big_m: float = 10.0) -> ModelArtifact:
    """Big-M MILP selecting ``r`` points; its optimum equals :func:`optimal_breakpoints`."""
    y = _values(day)
    n_series, n = y.shape
    if not 2 <= r <= n:
        raise ValueError(f"number of points must lie in [2, {n}]")
    ymax = float(np.abs(y).max()) if y.size else 0.0
    if big_m < 2 * ymax:
        warnings.warn(f"big-M {big_m} below 2*max|y| = {2 * ymax}; MILP may cut off the optimum", stacklevel=2)
    m = ModelArtifact(name="RTP")
    I = [m.add_var(f"I[{t}]", binary=True) for t in range(n)]
    Z = [[m.add_var(f"Z[{s},{t}]", -INF, INF) for t in range(n)] for s in range(n_series)]
    for s in range(n_series):
        for t in range(n):
            ep = m.add_var(f"ERp[{s},{t}]")
            em = m.add_var(f"ERm[{s},{t}]")
            m.add_objective(ep, 1.0)
            m.add_objective(em, 1.0)
            m.add_row(f"err[{s},{t}]", [(ep, 1.0), (em, -1.0), (Z[s][t], 1.0)], "E", y[s, t])
            m.add_row(f"keepu[{s},{t}]", [(Z[s][t], 1.0), (I[t], big_m)], "L", y[s, t] + big_m)
            m.add_row(f"keepl[{s},{t}]", [(Z[s][t], 1.0), (I[t], -big_m)], "G", y[s, t] - big_m)
            if 0 < t < n - 1:
                mid = [(Z[s][t], 1.0), (Z[s][t - 1], -0.5), (Z[s][t + 1], -0.5)]
                m.add_row(f"midu[{s},{t}]", mid + [(I[t], -big_m)], "L", 0.0)
                m.add_row(f"midl[{s},{t}]", mid + [(I[t], big_m)], "G", 0.0)
    m.add_row("count", [(i, 1.0) for i in I], "E", r)
    m.add_row("first", [(I[0], 1.0)], "E", 1.0)
    m.add_row("last", [(I[-1], 1.0)], "E", 1.0)
    m.metadata = {"kind": "rtp", "r": r, "big_m": big_m}
    return m


def emit_rtp_milp(day, r: int, path, big_m: float = 10.0):
    from .solver_bridge import write_mps

    model = rtp_milp(day, r, big_m)
    write_mps(model, path)
    return model


# -- files ------------------------------------------------------------------------------


def write_rtps_csv(selections, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rd_index", "k", "J", "delta"])
        for s in selections:
            for k, j in enumerate(s.J):
                w.writerow([s.rd_index, k, j, s.deltas[k] if k < len(s.deltas) else ""])


def write_rtp_errors_csv(selections, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rd_index", "r_d", "objective"])
        for s in selections:
            w.writerow([s.rd_index, s.r, repr(float(s.objective))])


def read_selections(rtps_path, errors_path) -> list[SparseDaySelection]:
    J: dict[int, list] = {}
    with open(rtps_path, newline="") as fh:
        for r in csv.DictReader(fh):
            J.setdefault(int(r["rd_index"]), []).append((int(r["k"]), int(r["J"])))
    obj = {}
    with open(errors_path, newline="") as fh:
        for r in csv.DictReader(fh):
            obj[int(r["rd_index"])] = float(r["objective"])
    out = []
    for i in sorted(J):
        idx = tuple(j for _, j in sorted(J[i]))
        out.append(finalize_selection(SparseDaySelection(i, idx, obj[i], requested=len(idx))))
    return out
