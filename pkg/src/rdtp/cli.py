"""Command-line pipeline: ingest -> select-days -> select-points -> build-model -> solve -> evaluate.

Stages talk to each other only through files in the work directory.
``manifest.json`` records, per stage, a hash of everything the stage read
(config subset, stage version, input files); a stage whose hash is unchanged
and whose outputs exist is skipped.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from . import __version__
from .copl_model import build_model, cost_breakdown
from .data_ingest import load_hourly_csv, read_capacity_table, read_factors_csv, slice_days, write_factors_csv
from .evaluate import (ErrorReport, fix_and_resolve, net_load_mw, reconstruction_series, write_reconstruction_csv,
                       write_report_csv)
from .instance import FORMULATIONS, VARIANTS, PlanningConfig, PlanningInstance, toy_instance
from .rd_select import cluster_days, find_extreme_days, map_slds, read_rdset, write_rds_csv, write_slds_csv
from .rtp_select import allocate_rtps, read_selections, write_rtp_errors_csv, write_rtps_csv
from .solver_bridge import (check_feasibility, get_profile, invoke_solver, parse_solution, read_mps,
                            SolverError, read_solution_csv, read_varmap, solve_model, write_mps, write_varmap)

STAGES = ("ingest", "select-days", "select-points", "build-model", "solve", "evaluate")
STAGE_VERSIONS = {s: 1 for s in STAGES}
MODES = ("equal", "adaptive")


class ConfigError(ValueError):
    pass


class DependencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    profile: str = "highs"
    gap: float = 1e-4
    timeout: float = 3600.0


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline run depends on. Relative paths resolve against ``base_dir``."""

    data: str | None = None  # hourly CSV, or None for a seeded synthetic year
    instance: str | None = None  # instance JSON, None = bundled 3-bus toy
    wind_capacity: str | None = None
    workdir: str = "work"
    n_days: int = 365
    n_rd: int = 21
    extreme_days: bool = True
    r_avg: int = 8
    r_min: int = 4
    mode: str = "adaptive"
    variant: str = "RDTP"
    formulation: str = "PWL"
    solver: SolverSettings = field(default_factory=SolverSettings)
    planning: dict = field(default_factory=dict)
    synthetic: dict = field(default_factory=dict)
    seed: int = 0
    base_dir: str = "."

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if self.n_days < 1 or self.n_rd < 1:
            raise ConfigError("n_days and n_rd must be positive")
        if not 2 <= self.r_min <= self.r_avg <= 25:
            raise ConfigError("need 2 <= r_min <= r_avg <= 25")
        for key in ("data", "instance", "wind_capacity"):
            p = self.path(key)
            if p is not None and not p.exists():
                raise ConfigError(f"{key}: file not found: {p}")
        try:
            self.planning_config()
            get_profile(self.solver.profile)
        except (TypeError, ValueError, SolverError) as exc:
            raise ConfigError(str(exc)) from None

    def path(self, key: str) -> Path | None:
        v = getattr(self, key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def planning_config(self) -> PlanningConfig:
        return PlanningConfig(**{**self.planning, "variant": self.variant, "formulation": self.formulation})

    def load_instance(self) -> PlanningInstance:
        p = self.path("instance")
        return toy_instance() if p is None else PlanningInstance.load(p)

    @property
    def case(self) -> str:
        if self.variant == "RDTP":
            return f"RDTP-{'ad' if self.mode == 'adaptive' else 'eq'}"
        return self.variant

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d = dict(d)
        solver = d.pop("solver", {}) or {}
        if isinstance(solver, str):
            solver = {"profile": solver}
        try:
            solver = SolverSettings(**solver)
        except TypeError as exc:
            raise ConfigError(f"solver: {exc}") from None
        d.setdefault("base_dir", str(base_dir))
        return cls(solver=solver, **d)

    @classmethod
    def load(cls, path, **overrides) -> "PipelineConfig":
        path = Path(path)
        try:
            d = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a mapping")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d, base_dir=path.resolve().parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


# -- helpers --------------------------------------------------------------------------


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


@contextlib.contextmanager
def atomic_path(path: Path):
    """Yield a temporary sibling path; move it over ``path`` only on success."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def atomic_text(path: Path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text)


class Pipeline:
    def __init__(self, cfg: PipelineConfig, workdir=None, out=print):
        self.cfg = cfg
        # the work directory is relative to the caller, not to the config file
        self.workdir = Path(workdir if workdir is not None else cfg.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.out = out

    def f(self, name: str) -> Path:
        return self.workdir / name

    # -- manifest ---------------------------------------------------------------------

    def _manifest(self) -> dict:
        p = self.f("manifest.json")
        if p.exists():
            return json.loads(p.read_text())
        return {"stages": {}}

    def _save_manifest(self, m: dict) -> None:
        m["config_hash"] = _json_hash(self.cfg.to_dict())
        m["version"] = __version__
        atomic_text(self.f("manifest.json"), json.dumps(m, indent=2, sort_keys=True) + "\n")

    def _stage_spec(self, stage: str) -> tuple[dict, list[Path], list[str]]:
        """(config subset, input files, output names) of a stage."""
        c = self.cfg
        inst = [c.path("instance")] if c.instance else []
        if stage == "ingest":
            keys = {"n_days": c.n_days}
            if c.data is None:
                keys.update(seed=c.seed, synthetic=c.synthetic)
            inputs = [p for p in (c.path("data"), c.path("wind_capacity")) if p is not None]
            return keys, inputs, ["factors.csv"]
        if stage == "select-days":
            return ({"n_rd": c.n_rd, "extreme_days": c.extreme_days}, [self.f("factors.csv"), *inst],
                    ["rds.csv", "slds.csv"])
        if stage == "select-points":
            return ({"r_avg": c.r_avg, "r_min": c.r_min, "mode": c.mode}, [self.f("rds.csv")],
                    ["rtps.csv", "rtp_errors.csv"])
        if stage == "build-model":
            inputs = [self.f("factors.csv"), *inst]
            if c.variant != "REF":
                inputs += [self.f("rds.csv"), self.f("slds.csv")]
            if c.variant == "RDTP":
                inputs += [self.f("rtps.csv"), self.f("rtp_errors.csv")]
            return ({"planning": c.planning_config().to_dict()}, inputs,
                    ["model.mps", "varmap.csv", "model_summary.json"])
        if stage == "solve":
            return ({"solver": asdict(c.solver)}, [self.f("model.mps"), self.f("varmap.csv")],
                    ["solution.sol", "solution.csv", "solution.json"])
        if stage == "evaluate":
            inputs = [self.f("factors.csv"), self.f("model_summary.json"), self.f("solution.csv"),
                      self.f("solution.json"), *inst]
            if c.variant != "REF":
                inputs += [self.f("rds.csv"), self.f("slds.csv")]
            if c.variant == "RDTP":
                inputs += [self.f("rtps.csv"), self.f("rtp_errors.csv")]
            return ({"planning": c.planning_config().to_dict(), "solver": asdict(c.solver), "case": c.case},
                    inputs, ["report.csv", "reconstruction.csv"])
        raise ConfigError(f"unknown stage {stage!r}")

    def run_stage(self, stage: str, force: bool = False) -> bool:
        """Run ``stage`` unless up to date. Returns True if it ran."""
        keys, inputs, outputs = self._stage_spec(stage)
        missing = [p for p in inputs if not p.exists()]
        if missing:
            names = ", ".join(str(p.name) for p in missing)
            raise DependencyError(f"{stage}: missing upstream artifact(s) {names}; run the earlier stages first")
        digest = _json_hash({"stage": stage, "version": STAGE_VERSIONS[stage], "keys": keys,
                             "inputs": {p.name: file_hash(p) for p in inputs}})
        manifest = self._manifest()
        entry = manifest["stages"].get(stage)
        if (not force and entry and entry.get("inputs_hash") == digest
                and all(self.f(o).exists() for o in outputs)):
            self.out(f"{stage}: up to date")
            return False
        getattr(self, "_" + stage.replace("-", "_"))()
        manifest = self._manifest()
        manifest["stages"][stage] = {"version": STAGE_VERSIONS[stage], "inputs_hash": digest,
                                     "outputs": outputs}
        self._save_manifest(manifest)
        self.out(f"{stage}: done")
        return True

    def run(self, stage: str = "all", force: bool = False) -> None:
        for s in (STAGES if stage == "all" else (stage,)):
            self.run_stage(s, force)

    # -- stages ------------------------------------------------------------------------

    def _dataset(self):
        return read_factors_csv(self.f("factors.csv"))

    def _ingest(self):
        c = self.cfg
        if c.data is None:
            from .synthetic import synthetic_dataset

            inst = c.load_instance()
            syn = {"areas": list(inst.area_names), **c.synthetic}
            ds = synthetic_dataset(n_days=c.n_days, seed=c.seed, **syn)
        else:
            caps = read_capacity_table(c.path("wind_capacity")) if c.wind_capacity else None
            ds = load_hourly_csv(c.path("data"), wind_capacity=caps, n_days=c.n_days)
        with atomic_path(self.f("factors.csv")) as tmp:
            write_factors_csv(ds, tmp)

    def _select_days(self):
        ds = self._dataset()
        inst = self.cfg.load_instance()
        extreme = find_extreme_days(ds, inst) if self.cfg.extreme_days else set()
        rdset = cluster_days(slice_days(ds), self.cfg.n_rd, extreme)
        with atomic_path(self.f("rds.csv")) as tmp:
            write_rds_csv(rdset, ds.areas, ds.features, tmp)
        with atomic_path(self.f("slds.csv")) as tmp:
            write_slds_csv(map_slds(rdset), tmp)

    def _rdset(self):
        ds = self._dataset()
        return read_rdset(self.f("rds.csv"), self.f("slds.csv"), ds.areas, ds.features)

    def _select_points(self):
        rdset, _ = self._rdset()
        alloc = allocate_rtps(rdset, self.cfg.r_avg, self.cfg.r_min, self.cfg.mode)
        with atomic_path(self.f("rtps.csv")) as tmp:
            write_rtps_csv(alloc.selections, tmp)
        with atomic_path(self.f("rtp_errors.csv")) as tmp:
            write_rtp_errors_csv(alloc.selections, tmp)

    def _selections(self):
        return read_selections(self.f("rtps.csv"), self.f("rtp_errors.csv"))

    def _build_model(self):
        c = self.cfg
        ds = self._dataset()
        rdset = slds = sels = None
        if c.variant != "REF":
            rdset, slds = self._rdset()
        if c.variant == "RDTP":
            sels = self._selections()
        model = build_model(c.load_instance(), c.planning_config(), ds, rdset, slds, sels)
        with atomic_path(self.f("model.mps")) as tmp:
            write_mps(model, tmp)
        with atomic_path(self.f("varmap.csv")) as tmp:
            write_varmap(model, tmp)
        atomic_text(self.f("model_summary.json"), json.dumps(model.summary(), indent=2, sort_keys=True) + "\n")

    def _solve(self, mps=None):
        s = self.cfg.solver
        mps = Path(mps) if mps else self.f("model.mps")
        varmap_path = mps.parent / "varmap.csv"
        varmap = read_varmap(varmap_path) if varmap_path.exists() else None
        file_model = read_mps(mps)
        with atomic_path(self.f("solution.sol")) as tmp:
            raw = invoke_solver(mps, s.profile, s.gap, s.timeout, tmp, self.f("solve.log"))
            rec = parse_solution(raw, None, file_model)
        violations = check_feasibility(file_model, rec) if rec.ok else []
        if varmap:
            rec.values = {varmap.get(k, k): v for k, v in rec.values.items()}
        names = [varmap.get(v.name, v.name) if varmap else v.name for v in file_model.variables]
        with atomic_path(self.f("solution.csv")) as tmp:
            with open(tmp, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["name", "value"])
                w.writerows([n, repr(float(rec.values.get(n, 0.0)))] for n in names)
        info = {"status": rec.status, "objective": rec.objective, "missing": rec.missing,
                "message": rec.message, "violations": len(violations),
                "max_violation": max((v for _, v in violations), default=0.0)}
        atomic_text(self.f("solution.json"), json.dumps(info, indent=2, sort_keys=True) + "\n")
        atomic_text(self.f("timings.json"), json.dumps({"solve_wall_s": rec.wall_time}) + "\n")
        if not rec.ok:
            raise RuntimeError(f"solve: solver status {rec.status} ({rec.message})")
        if violations:
            raise RuntimeError(f"solve: {len(violations)} constraint violations above 1e-6, worst {violations[0]}")
        self.out(f"solve: {rec.status}, objective {rec.objective:.6g}")

    def _evaluate(self):
        c = self.cfg
        ds = self._dataset()
        inst = c.load_instance()
        pcfg = c.planning_config()
        values = read_solution_csv(self.f("solution.csv"))
        inv_names = json.loads(self.f("model_summary.json").read_text())["metadata"]["investment_vars"]
        investments = {n: values[n] for n in inv_names}
        evaldir = self.workdir / "evaluate"
        s = c.solver
        if c.variant == "REF":
            ref_model = build_model(inst, pcfg, ds)
            x = [values.get(v.name, 0.0) for v in ref_model.variables]
            star = cost_breakdown(ref_model, x)
        else:
            ref_model = build_model(inst, pcfg.replace(variant="REF"), ds)
            rec = solve_model(ref_model, evaldir, s.profile, s.gap, s.timeout, "reference")
            if not rec.ok:
                raise RuntimeError(f"evaluate: reference solve failed ({rec.status})")
            star = cost_breakdown(ref_model, rec.vector(ref_model))
        _, hat = fix_and_resolve(inst, pcfg, ds, investments, evaldir, s.profile, s.gap, s.timeout)
        timing = self.f("timings.json")
        cpu = json.loads(timing.read_text())["solve_wall_s"] if timing.exists() else 0.0
        report = ErrorReport.from_costs(c.case, hat, star, cpu)
        with atomic_path(self.f("report.csv")) as tmp:
            write_report_csv([report], tmp)

        original = net_load_mw(ds.values, inst, ds.areas, ds.features)
        if c.variant == "REF":
            recon = original
        else:
            rdset, _ = self._rdset()
            sels = self._selections() if c.variant == "RDTP" else None
            recon = net_load_mw(reconstruction_series(rdset, ds.year_length_days, sels), inst, ds.areas,
                                ds.features)
        with atomic_path(self.f("reconstruction.csv")) as tmp:
            write_reconstruction_csv(original, recon, ds.areas, tmp)
        self.out(f"evaluate: {report.case} total error {report.total_error:.4f}% "
                 f"(operation {report.operation_error:.4f}%, investment {report.investment_error:.4f}%)")


# -- entry point ----------------------------------------------------------------------------


def bundled_toy_config() -> Path:
    return Path(__file__).parent / "data" / "toy3bus" / "config.yaml"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdtp", description="Representative-day / time-point co-planning pipeline.")
    p.add_argument("--config", help="pipeline YAML (default: bundled 3-bus toy)")
    p.add_argument("--workdir", help="artifact directory (overrides the config)")
    p.add_argument("--seed", type=int, help="seed for synthetic input data")
    p.add_argument("--force", action="store_true", help="rerun even if up to date")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for s in STAGES:
        sp = sub.add_parser(s)
        if s == "select-points":
            sp.add_argument("--r-avg", type=int)
            sp.add_argument("--r-min", type=int)
            sp.add_argument("--mode", choices=MODES)
        if s == "solve":
            sp.add_argument("--mps", help="solve this MPS file instead of the workdir model")
            sp.add_argument("--profile")
            sp.add_argument("--gap", type=float)
            sp.add_argument("--timeout", type=float)
    rp = sub.add_parser("run")
    rp.add_argument("stage", nargs="?", default="all", choices=("all", *STAGES))
    return p


def _load_config(args) -> PipelineConfig:
    path = Path(args.config) if args.config else bundled_toy_config()
    over = {"seed": args.seed}
    for key in ("r_avg", "r_min", "mode"):
        over[key] = getattr(args, key, None)
    raw = yaml.safe_load(path.read_text()) if path.exists() else {}
    solver = dict((raw or {}).get("solver") or {})
    for key in ("profile", "gap", "timeout"):
        if getattr(args, key, None) is not None:
            solver[key] = getattr(args, key)
    if solver:
        over["solver"] = solver
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    return PipelineConfig.load(path, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _load_config(args)
        workdir = Path(args.workdir) if args.workdir else None
        pipe = Pipeline(cfg, workdir)
        if args.command == "run":
            pipe.run(args.stage, args.force)
        elif args.command == "solve" and args.mps:
            pipe._solve(args.mps)
        else:
            pipe.run_stage(args.command, args.force)
    except (ConfigError, DependencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  (report and fail without a traceback)
        if args.verbose:
            raise
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
