"""Solver-agnostic container for a mixed-integer linear program.

Variables and rows are stored in insertion order; rows are kept as COO
triplets so that year-long reference models stay cheap to build.
"""

from __future__ import annotations

import json
import math
from array import array
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

INF = math.inf

SENSES = ("L", "G", "E")


@dataclass
class Variable:
    name: str
    kind: str = "C"  # "C" continuous or "B" binary
    lb: float = 0.0
    ub: float = INF


def family(name: str) -> str:
    """Family prefix of a canonical name, e.g. ``PG`` for ``PG[g1,d0,3]``."""
    return name.split("[", 1)[0]


@dataclass
class ModelArtifact:
    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    row_senses: list[str] = field(default_factory=list)
    row_rhs: array = field(default_factory=lambda: array("d"))
    objective: dict[int, float] = field(default_factory=dict)
    objective_offset: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index: dict[str, int] = {v.name: i for i, v in enumerate(self.variables)}
        self._rows = array("l")
        self._cols = array("l")
        self._vals = array("d")
        self._matrix = None

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, binary: bool = False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self.variables)
        self.variables.append(Variable(name, "B" if binary else "C", float(lb), float(ub)))
        self._index[name] = idx
        return idx

    def var(self, name: str) -> int:
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    def add_row(self, name: str, terms, sense: str, rhs: float) -> int:
        """Add ``sum(coef * x[idx]) <sense> rhs``; ``terms`` is an iterable of (idx, coef).

        Repeated indices are summed; exact zeros are dropped.
        """
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        merged: dict[int, float] = {}
        n = len(self.variables)
        for idx, coef in terms:
            if not 0 <= idx < n:
                raise IndexError(f"row {name!r} references undeclared column {idx}")
            merged[idx] = merged.get(idx, 0.0) + float(coef)
        r = len(self.row_names)
        self.row_names.append(name)
        self.row_senses.append(sense)
        self.row_rhs.append(float(rhs))
        for idx, coef in merged.items():
            if coef != 0.0:
                self._rows.append(r)
                self._cols.append(idx)
                self._vals.append(coef)
        self._matrix = None
        return r

    def add_objective(self, idx: int, coef: float) -> None:
        if coef:
            self.objective[idx] = self.objective.get(idx, 0.0) + float(coef)

    def fix(self, name: str, value: float) -> None:
        v = self.variables[self._index[name]]
        v.lb = v.ub = float(value)

    # -- views ------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            self._matrix = sp.csr_matrix(
                (np.frombuffer(self._vals, dtype=float),
                 (np.frombuffer(self._rows, dtype=np.int64), np.frombuffer(self._cols, dtype=np.int64))),
                shape=(self.n_rows, self.n_vars),
            )
        return self._matrix

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for idx, coef in self.objective.items():
            c[idx] = coef
        return c

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return lb, ub

    def binary_mask(self) -> np.ndarray:
        return np.array([v.kind == "B" for v in self.variables], dtype=bool)

    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def row_families(self) -> Counter:
        return Counter(family(n) for n in self.row_names)

    def var_families(self) -> Counter:
        return Counter(family(v.name) for v in self.variables)

    def validate(self) -> None:
        """Structural checks: senses, bounds, finite coefficients."""
        for v in self.variables:
            if v.kind not in ("C", "B"):
                raise ValueError(f"variable {v.name!r} has unknown kind {v.kind!r}")
            if v.lb > v.ub:
                raise ValueError(f"variable {v.name!r} has lb > ub")
        if not np.all(np.isfinite(np.frombuffer(self._vals, dtype=float))):
            raise ValueError("non-finite constraint coefficient")
        if not np.all(np.isfinite(np.frombuffer(self.row_rhs, dtype=float))):
            raise ValueError("non-finite right-hand side")
        if len(set(self.row_names)) != self.n_rows:
            raise ValueError("duplicate row names")

    def summary(self) -> dict:
        """JSON-friendly structural summary (counts per family)."""
        return {
            "name": self.name,
            "n_vars": self.n_vars,
            "n_binary": int(self.binary_mask().sum()),
            "n_rows": self.n_rows,
            "n_nonzeros": len(self._vals),
            "variables": dict(sorted(self.var_families().items())),
            "constraints": dict(sorted(self.row_families().items())),
            "metadata": self.metadata,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    # -- evaluation -------------------------------------------------------

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective_vector() @ x) + self.objective_offset

    def violations(self, x: np.ndarray, tol: float = 1e-6) -> list[tuple[str, float]]:
        """Rows, bounds and integrality violated by more than ``tol`` (absolute)."""
        x = np.asarray(x, dtype=float)
        resid = self.matrix() @ x - np.frombuffer(self.row_rhs, dtype=float)
        senses = np.array(self.row_senses)
        gap = np.where(senses == "L", resid, np.where(senses == "G", -resid, np.abs(resid)))
        out = [(self.row_names[r], float(gap[r])) for r in np.flatnonzero(gap > tol)]
        lb, ub = self.bounds()
        with np.errstate(invalid="ignore"):
            bgap = np.maximum(np.maximum(lb - x, x - ub), 0.0)
        binary = self.binary_mask()
        bgap[binary] = np.maximum(bgap[binary], np.abs(x[binary] - np.round(x[binary])))
        out += [(self.variables[i].name, float(bgap[i])) for i in np.flatnonzero(bgap > tol)]
        return out
