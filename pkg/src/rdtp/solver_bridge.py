"""MPS persistence, external MILP solver invocation and solution parsing.

Solvers run as subprocesses described by a :class:`SolverProfile`: a command
template plus the name of the adapter that reads the solution file back.
Two adapters ship: ``generic`` (``name value`` per line, ``#`` headers) and
``cbc`` (the solution file written by CBC's ``solu`` command).
"""

from __future__ import annotations

import csv
import logging
import math
import os
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .artifact import INF, ModelArtifact

log = logging.getLogger(__name__)

STATUSES = ("optimal", "feasible-gap", "infeasible", "error")
BINARY_TOL = 1e-6
_NAME_DIGITS = 7  # 1-letter prefix + 7 digits = 8 characters


class SolverError(RuntimeError):
    pass


# -- MPS ---------------------------------------------------------------------


def short_col(i: int) -> str:
    return f"x{i:0{_NAME_DIGITS}d}"


def short_row(i: int) -> str:
    return f"c{i:0{_NAME_DIGITS}d}"


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def varmap_rows(model: ModelArtifact) -> list[tuple[str, str, str]]:
    """(kind, short name, canonical name) for every column and row."""
    rows = [("col", short_col(i), v.name) for i, v in enumerate(model.variables)]
    rows += [("row", short_row(r), n) for r, n in enumerate(model.row_names)]
    return rows


def write_varmap(model: ModelArtifact, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "short", "name"])
        w.writerows(varmap_rows(model))


def read_varmap(path) -> dict[str, str]:
    """Short column name -> canonical variable name."""
    with open(path, newline="") as fh:
        return {r["short"]: r["name"] for r in csv.DictReader(fh) if r["kind"] == "col"}


def mps_text(model: ModelArtifact) -> str:
    """Deterministic MPS with 8-character names; numbers use round-trip precision."""
    if model.n_vars >= 10**_NAME_DIGITS or model.n_rows >= 10**_NAME_DIGITS:
        raise ValueError("model too large for 8-character names")
    model.validate()
    A = model.matrix().tocsc()
    A.sort_indices()
    c = model.objective_vector()
    out = [f"NAME          {model.name[:8] or 'MODEL'}", "ROWS", " N  OBJ"]
    out += [f" {s}  {short_row(r)}" for r, s in enumerate(model.row_senses)]
    out.append("COLUMNS")
    in_int = False
    for j, v in enumerate(model.variables):
        is_bin = v.kind == "B"
        if is_bin and not in_int:
            out.append("    MARKER                 'MARKER'                 'INTORG'")
            in_int = True
        elif not is_bin and in_int:
            out.append("    MARKER                 'MARKER'                 'INTEND'")
            in_int = False
        name = short_col(j)
        entries = []
        if c[j] != 0.0:
            entries.append(("OBJ", c[j]))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        entries += [(short_row(int(r)), A.data[k]) for k, r in zip(range(lo, hi), A.indices[lo:hi])]
        if not entries:
            entries = [("OBJ", 0.0)]
        out += [f"    {name:<8}  {row:<8}  {_num(val)}" for row, val in entries]
    if in_int:
        out.append("    MARKER                 'MARKER'                 'INTEND'")
    out.append("RHS")
    if model.objective_offset:
        out.append(f"    RHS       {'OBJ':<8}  {_num(-model.objective_offset)}")
    for r, rhs in enumerate(model.row_rhs):
        if rhs != 0.0:
            out.append(f"    RHS       {short_row(r):<8}  {_num(rhs)}")
    out.append("BOUNDS")
    for j, v in enumerate(model.variables):
        name = short_col(j)
        if v.lb == v.ub:
            out.append(f" FX BND       {name:<8}  {_num(v.lb)}")
        elif v.kind == "B" and (v.lb, v.ub) == (0.0, 1.0):
            out.append(f" BV BND       {name:<8}")
        elif v.lb == -INF and v.ub == INF:
            out.append(f" FR BND       {name:<8}")
        else:
            if v.lb == -INF:
                out.append(f" MI BND       {name:<8}")
            elif v.lb != 0.0 or v.kind == "B":
                out.append(f" LO BND       {name:<8}  {_num(v.lb)}")
            if v.ub != INF:
                out.append(f" UP BND       {name:<8}  {_num(v.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(model: ModelArtifact, path, varmap_path=None) -> Path:
    path = Path(path)
    path.write_text(mps_text(model))
    if varmap_path is not None:
        write_varmap(model, varmap_path)
    return path


def read_mps(path) -> ModelArtifact:
    """Parse a (free-format) MPS file into a :class:`ModelArtifact` with the file's names."""
    rows: dict[str, int] = {}
    senses: list[str] = []
    names: list[str] = []
    obj_row = None
    cols: dict[str, int] = {}
    kinds: list[str] = []
    entries: list[tuple[int, int, float]] = []
    objective: dict[int, float] = {}
    rhs: dict[int, float] = {}
    offset = 0.0
    bounds: dict[int, list] = {}
    section = None
    integer = False
    title = "MODEL"
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("*"):
                continue
            tok = line.split()
            if not line[0].isspace():
                section = tok[0]
                if section == "NAME" and len(tok) > 1:
                    title = tok[1]
                continue
            if section == "ROWS":
                sense, rname = tok
                if sense == "N":
                    obj_row = rname
                else:
                    rows[rname] = len(senses)
                    senses.append(sense)
                    names.append(rname)
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    integer = tok[2] == "'INTORG'"
                    continue
                cname = tok[0]
                if cname not in cols:
                    cols[cname] = len(kinds)
                    kinds.append("B" if integer else "C")
                j = cols[cname]
                for rname, val in zip(tok[1::2], tok[2::2]):
                    if rname == obj_row:
                        objective[j] = objective.get(j, 0.0) + float(val)
                    else:
                        entries.append((rows[rname], j, float(val)))
            elif section == "RHS":
                for rname, val in zip(tok[1::2], tok[2::2]):
                    if rname == obj_row:
                        offset = -float(val)
                    else:
                        rhs[rows[rname]] = float(val)
            elif section == "BOUNDS":
                btype, cname = tok[0], tok[2]
                j = cols[cname]
                b = bounds.setdefault(j, [None, None])
                val = float(tok[3]) if len(tok) > 3 else None
                if btype == "UP":
                    b[1] = val
                elif btype == "LO":
                    b[0] = val
                elif btype == "FX":
                    b[0] = b[1] = val
                elif btype == "FR":
                    b[0], b[1] = -INF, INF
                elif btype == "MI":
                    b[0] = -INF
                elif btype == "PL":
                    b[1] = INF
                elif btype == "BV":
                    b[0], b[1] = 0.0, 1.0
                    kinds[j] = "B"
                else:
                    raise ValueError(f"{path}:{lineno}: unsupported bound type {btype}")
            elif section == "ENDATA":
                break
    model = ModelArtifact(name=title)
    for cname, j in cols.items():
        lo, hi = bounds.get(j, [None, None])
        if kinds[j] == "B":
            lo = 0.0 if lo is None else lo
            hi = 1.0 if hi is None else hi
        model.add_var(cname, 0.0 if lo is None else lo, INF if hi is None else hi)
        model.variables[j].kind = kinds[j]
    by_row: dict[int, list] = {}
    for r, j, val in entries:
        by_row.setdefault(r, []).append((j, val))
    for r, rname in enumerate(names):
        model.add_row(rname, by_row.get(r, []), senses[r], rhs.get(r, 0.0))
    for j, val in objective.items():
        model.add_objective(j, val)
    model.objective_offset = offset
    return model


# -- solver profiles -----------------------------------------------------------


@dataclass(frozen=True)
class SolverProfile:
    name: str
    command: tuple[str, ...]
    output_format: str  # "generic" or "cbc"
    binary: str | None = None  # default executable substituted for {bin}

    @property
    def env_var(self) -> str:
        return f"RDTP_{self.name.upper()}_BIN"

    def executable(self) -> str:
        env = os.environ.get(self.env_var)
        if env:
            return env
        if self.binary is None:
            raise SolverError(f"no executable configured for profile {self.name!r}")
        return self.binary

    def argv(self, mps, sol, gap: float, timeout: float) -> list[str]:
        subst = {"mps": str(mps), "sol": str(sol), "gap": repr(float(gap)), "timeout": repr(float(timeout))}
        argv = []
        for tok in self.command:
            if tok == "{bin}":
                argv.append(self.executable())
            else:
                argv.append(tok.format(**subst))
        return argv


def _find_cbc() -> str | None:
    found = shutil.which("cbc")
    if found:
        return found
    try:
        import pulp  # noqa: F401  (only used to locate its bundled CBC binary)
    except ImportError:
        return None
    base = Path(pulp.__file__).parent / "solverdir" / "cbc" / "linux"
    for arch in ("i64", "arm64"):
        cand = base / arch / "cbc"
        if cand.exists() and os.access(cand, os.X_OK):
            return str(cand)
    return None


def builtin_profiles() -> dict[str, SolverProfile]:
    return {
        "highs": SolverProfile(
            "highs",
            ("{bin}", "-m", "rdtp.highs_cli", "{mps}", "{sol}", "--gap", "{gap}", "--timeout", "{timeout}"),
            "generic",
            sys.executable,
        ),
        "cbc": SolverProfile(
            "cbc",
            ("{bin}", "{mps}", "ratio", "{gap}", "sec", "{timeout}", "solve", "solu", "{sol}"),
            "cbc",
            _find_cbc(),
        ),
    }


def get_profile(profile) -> SolverProfile:
    if isinstance(profile, SolverProfile):
        return profile
    if isinstance(profile, dict):
        return SolverProfile(profile["name"], tuple(profile["command"]), profile.get("format", "generic"),
                             profile.get("binary"))
    profiles = builtin_profiles()
    if profile not in profiles:
        raise SolverError(f"unknown solver profile {profile!r}; known: {sorted(profiles)}")
    return profiles[profile]


def solver_available(profile) -> bool:
    try:
        p = get_profile(profile)
        exe = p.executable()
    except SolverError:
        return False
    return exe is not None and (shutil.which(exe) is not None or Path(exe).exists())


@dataclass
class RawSolution:
    path: Path
    output_format: str
    returncode: int | None
    wall_time: float
    log_path: Path | None
    timed_out: bool = False


def invoke_solver(mps_path, profile="highs", gap: float = 1e-4, timeout: float = 3600.0,
                  sol_path=None, log_path=None, grace: float = 10.0) -> RawSolution:
    """Run the profile's solver on ``mps_path`` and return the raw solution file handle.

    The solver receives its own time limit; the subprocess is additionally
    killed ``grace`` seconds after it, so a call never hangs.
    """
    prof = get_profile(profile)
    mps_path = Path(mps_path)
    if not mps_path.exists():
        raise FileNotFoundError(mps_path)
    sol_path = Path(sol_path) if sol_path else mps_path.with_suffix(".sol")
    log_path = Path(log_path) if log_path else mps_path.with_suffix(".log")
    if sol_path.exists():
        sol_path.unlink()
    argv = prof.argv(mps_path, sol_path, gap, timeout)
    if shutil.which(argv[0]) is None and not Path(argv[0]).exists():
        raise SolverError(f"solver binary not found: {argv[0]!r} (set {prof.env_var})")
    env = dict(os.environ)
    src = str(Path(__file__).resolve().parent.parent)
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    t0 = time.perf_counter()
    timed_out = False
    with open(log_path, "w") as logf:
        try:
            proc = subprocess.run(argv, stdout=logf, stderr=subprocess.STDOUT, timeout=timeout + grace, env=env)
            rc = proc.returncode
        except subprocess.TimeoutExpired:
            timed_out, rc = True, None
    wall = time.perf_counter() - t0
    return RawSolution(sol_path, prof.output_format, rc, wall, log_path, timed_out)


# -- solutions -----------------------------------------------------------------


@dataclass
class SolutionRecord:
    status: str
    objective: float = math.nan
    values: dict[str, float] = field(default_factory=dict)
    log_path: str | None = None
    wall_time: float = 0.0
    missing: int = 0
    message: str = ""

    def vector(self, model: ModelArtifact) -> np.ndarray:
        return np.array([self.values.get(v.name, 0.0) for v in model.variables])

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible-gap")


def _parse_generic(path) -> tuple[str, float, dict[str, float], str]:
    status, objective, message = "optimal", math.nan, ""
    values: dict[str, float] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                tok = line[1:].split(None, 1)
                if len(tok) == 2 and tok[0] == "status":
                    status = tok[1].strip()
                elif len(tok) == 2 and tok[0] == "objective":
                    objective = float(tok[1])
                elif len(tok) == 2 and tok[0] == "message":
                    message = tok[1].strip()
                continue
            tok = line.split()
            if len(tok) != 2:
                raise SolverError(f"{path}:{lineno}: expected 'name value', got {line!r}")
            try:
                values[tok[0]] = float(tok[1])
            except ValueError:
                raise SolverError(f"{path}:{lineno}: non-numeric value {tok[1]!r}") from None
    if status not in STATUSES:
        raise SolverError(f"{path}: unknown status {status!r}")
    return status, objective, values, message


def _parse_cbc(path) -> tuple[str, float, dict[str, float], str]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SolverError(f"{path}: empty CBC solution file")
    head = lines[0].strip()
    objective = math.nan
    if "objective value" in head:
        try:
            objective = float(head.rsplit("objective value", 1)[1].split()[0])
        except (IndexError, ValueError):
            raise SolverError(f"{path}: malformed header {head!r}") from None
    low = head.lower()
    if low.startswith("optimal"):
        status = "optimal"
    elif "infeasible" in low:
        status = "infeasible"
    elif low.startswith("stopped") and "no integer solution" not in low and math.isfinite(objective):
        status = "feasible-gap"
    else:
        status = "error"
    values = {}
    for lineno, line in enumerate(lines[1:], 2):
        tok = line.replace("**", " ").split()
        if not tok:
            continue
        if len(tok) < 3:
            raise SolverError(f"{path}:{lineno}: malformed CBC line {line!r}")
        try:
            values[tok[1]] = float(tok[2])
        except ValueError:
            raise SolverError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
    return status, objective, values, head


ADAPTERS = {"generic": _parse_generic, "cbc": _parse_cbc}


def parse_solution(raw, varmap: dict[str, str] | None = None, model: ModelArtifact | None = None,
                   output_format: str | None = None) -> SolutionRecord:
    """Read a raw solution file into a :class:`SolutionRecord` with canonical names.

    ``raw`` is a :class:`RawSolution` or a path. With ``model`` given, binary
    values within 1e-6 of an integer are snapped and variables absent from the
    file are set to 0 and counted in ``missing``.
    """
    if isinstance(raw, RawSolution):
        if raw.timed_out:
            return SolutionRecord("error", log_path=str(raw.log_path), wall_time=raw.wall_time,
                                  message="solver killed after timeout")
        if raw.returncode != 0 or not raw.path.exists():
            return SolutionRecord("error", log_path=str(raw.log_path), wall_time=raw.wall_time,
                                  message=f"solver exited with code {raw.returncode}")
        path, fmt, wall, logp = raw.path, raw.output_format, raw.wall_time, str(raw.log_path)
    else:
        path, fmt, wall, logp = Path(raw), output_format or "generic", 0.0, None
    if fmt not in ADAPTERS:
        raise SolverError(f"unknown solution format {fmt!r}")
    status, objective, values, message = ADAPTERS[fmt](path)
    if varmap:
        values = {varmap.get(k, k): v for k, v in values.items()}
    rec = SolutionRecord(status, objective, values, logp, wall, 0, message)
    if model is not None and rec.ok:
        missing = 0
        for v in model.variables:
            if v.name not in rec.values:
                rec.values[v.name] = 0.0
                missing += 1
            elif v.kind == "B":
                x = rec.values[v.name]
                if abs(x - round(x)) <= BINARY_TOL:
                    rec.values[v.name] = float(round(x))
        if missing:
            log.warning("%d variables missing from solution; set to 0", missing)
        rec.missing = missing
    return rec


def write_solution_csv(rec: SolutionRecord, model: ModelArtifact, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "value"])
        for v in model.variables:
            w.writerow([v.name, repr(float(rec.values.get(v.name, 0.0)))])


def read_solution_csv(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        return {r["name"]: float(r["value"]) for r in csv.DictReader(fh)}


def check_feasibility(model: ModelArtifact, rec: SolutionRecord, tol: float = 1e-6) -> list[tuple[str, float]]:
    """Independent re-check: every row, bound and integrality within ``tol``."""
    return model.violations(rec.vector(model), tol)


def recomputed_objective(model: ModelArtifact, rec: SolutionRecord) -> float:
    return model.objective_value(rec.vector(model))


def solve_model(model: ModelArtifact, workdir, profile="highs", gap: float = 1e-4,
                timeout: float = 3600.0, stem: str = "model") -> SolutionRecord:
    """Write ``model`` to ``workdir``, solve it and return a record keyed by canonical names."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    mps = write_mps(model, workdir / f"{stem}.mps", workdir / f"{stem}.varmap.csv")
    raw = invoke_solver(mps, profile, gap, timeout, workdir / f"{stem}.sol", workdir / f"{stem}.log")
    varmap = {short_col(i): v.name for i, v in enumerate(model.variables)}
    return parse_solution(raw, varmap, model)
