"""Representative days: extreme-day detection, Ward clustering and SLD mapping."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data_ingest import HOURS_PER_DAY, DayMatrix, HourlyDataset, net_load_series


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class RepresentativeDaySet:
    """Unordered representative days with weights and calendar membership.

    ``rds[i]`` is the real day chosen for cluster ``i``; ``membership[d]``
    gives the representative index of calendar day ``d``.
    """

    rds: tuple[DayMatrix, ...]
    weights: np.ndarray
    extreme_flags: np.ndarray
    membership: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        m = np.asarray(self.membership)
        if len(w) != len(self.rds) or len(self.extreme_flags) != len(self.rds):
            raise SelectionError("weights/flags do not match the number of representatives")
        if np.any(w <= 0):
            raise SelectionError("weights must be positive")
        if not np.array_equal(np.bincount(m, minlength=len(self.rds)), w):
            raise SelectionError("weights must equal the number of days mapped to each representative")

    @property
    def n_rd(self) -> int:
        return len(self.rds)

    @property
    def source_days(self) -> np.ndarray:
        return np.array([rd.day_index for rd in self.rds])


@dataclass(frozen=True)
class SLDSequence:
    """Run-length encoded calendar of representative-day labels."""

    blocks: tuple[tuple[int, int], ...]
    n_rd: int

    def __post_init__(self):
        for (a, _), (b, _) in zip(self.blocks, self.blocks[1:]):
            if a == b:
                raise SelectionError("adjacent SLD blocks must reference different representatives")
        if any(n <= 0 for _, n in self.blocks):
            raise SelectionError("block repetition counts must be positive")

    @property
    def association(self) -> np.ndarray:
        """One-hot matrix ``D[sd, d]``."""
        D = np.zeros((len(self.blocks), self.n_rd), dtype=int)
        for k, (rd, _) in enumerate(self.blocks):
            D[k, rd] = 1
        return D

    @property
    def counts(self) -> np.ndarray:
        return np.array([n for _, n in self.blocks])

    def decode(self) -> np.ndarray:
        return np.concatenate([np.full(n, rd) for rd, n in self.blocks])


def find_extreme_days(ds: HourlyDataset, instance) -> set[int]:
    """Days holding each area's annual net-load maximum (earliest hour on ties)."""
    out = set()
    for area in ds.areas:
        series = net_load_series(ds, instance, area)
        out.add(int(np.argmax(series)) // HOURS_PER_DAY)
    return out


def ward_clusters(X: np.ndarray, k: int) -> np.ndarray:
    """Agglomerative Ward clustering of the rows of ``X`` into ``k`` clusters.

    Returns a label per row: the smallest row index in its cluster. The
    closest pair is merged first; exact ties go to the lowest (i, j).
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if not 1 <= k <= n:
        raise SelectionError(f"cannot form {k} clusters from {n} days")
    sq = np.einsum("ij,ij->i", X, X)
    D = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    D[np.diag_indices(n)] = np.inf
    size = np.ones(n)
    label = np.arange(n)
    alive = np.ones(n, dtype=bool)
    for _ in range(n - k):
        flat = int(np.argmin(np.triu(D, 1) + np.tril(np.full((n, n), np.inf))))
        i, j = divmod(flat, n)
        # Lance-Williams update for Ward on squared distances; j merges into i
        ni, nj = size[i], size[j]
        nk = size
        new = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * D[i, j]) / (ni + nj + nk)
        D[i, :], D[:, i] = new, new
        D[i, i] = np.inf
        D[j, :], D[:, j] = np.inf, np.inf
        D[~alive, :] = np.inf
        D[:, ~alive] = np.inf
        size[i] += nj
        alive[j] = False
        label[label == j] = i
    return label


def medoid(X: np.ndarray, members: np.ndarray) -> int:
    """Member minimising summed Euclidean distance to the others (lowest index on ties)."""
    sub = X[members]
    dist = np.sqrt(np.maximum(((sub[:, None, :] - sub[None, :, :]) ** 2).sum(-1), 0.0))
    return int(members[int(np.argmin(dist.sum(1)))])


def cluster_days(days: list[DayMatrix], n_rd: int, extreme: set[int] = frozenset()) -> RepresentativeDaySet:
    """Preserve extreme days as singletons and Ward-cluster the rest into representatives."""
    n = len(days)
    extreme = set(int(d) for d in extreme)
    if n_rd < len(extreme) + 1:
        raise SelectionError(f"n_rd={n_rd} must exceed the number of extreme days ({len(extreme)})")
    if n_rd > n:
        raise SelectionError(f"n_rd={n_rd} exceeds the number of days ({n})")
    if any(not 0 <= d < n for d in extreme):
        raise SelectionError("extreme day index out of range")
    X = np.stack([d.points.ravel() for d in days])
    pool = np.array([d for d in range(n) if d not in extreme])
    labels = ward_clusters(X[pool], n_rd - len(extreme))
    clusters = [pool[labels == lab] for lab in np.unique(labels)]
    reps = [(medoid(X, members), members, False) for members in clusters]
    reps += [(d, np.array([d]), True) for d in sorted(extreme)]
    reps.sort(key=lambda r: r[0])
    membership = np.empty(n, dtype=int)
    for i, (_, members, _) in enumerate(reps):
        membership[members] = i
    return RepresentativeDaySet(
        rds=tuple(days[r[0]] for r in reps),
        weights=np.array([len(r[1]) for r in reps]),
        extreme_flags=np.array([r[2] for r in reps]),
        membership=membership,
    )


def map_slds(rdset: RepresentativeDaySet) -> SLDSequence:
    """Run-length encode the calendar sequence of representative labels."""
    labels = np.asarray(rdset.membership)
    if labels.size == 0:
        raise SelectionError("empty membership")
    blocks = []
    start = 0
    for d in range(1, len(labels) + 1):
        if d == len(labels) or labels[d] != labels[start]:
            blocks.append((int(labels[start]), d - start))
            start = d
    return SLDSequence(tuple(blocks), rdset.n_rd)


# -- files ---------------------------------------------------------------------------


def write_rds_csv(rdset: RepresentativeDaySet, areas, features, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rd_index", "source_day", "weight", "extreme_flag", "area", "feature", "t", "value"])
        for i, rd in enumerate(rdset.rds):
            for a, area in enumerate(areas):
                for f, feat in enumerate(features):
                    for t in range(rd.n_points):
                        w.writerow([i, rd.day_index, int(rdset.weights[i]), int(rdset.extreme_flags[i]),
                                    area, feat, t, repr(float(rd.points[a, f, t]))])


def write_slds_csv(slds: SLDSequence, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block_index", "rd_index", "n_b"])
        for k, (rd, n) in enumerate(slds.blocks):
            w.writerow([k, rd, n])


def read_slds_csv(path, n_rd: int) -> SLDSequence:
    with open(path, newline="") as fh:
        blocks = tuple((int(r["rd_index"]), int(r["n_b"])) for r in csv.DictReader(fh))
    return SLDSequence(blocks, n_rd)


def read_rdset(rds_path, slds_path, areas, features) -> tuple[RepresentativeDaySet, SLDSequence]:
    """Rebuild the representative set from ``rds.csv`` and ``slds.csv`` (membership comes from the SLDs)."""
    a_idx = {a: i for i, a in enumerate(areas)}
    f_idx = {f: i for i, f in enumerate(features)}
    meta: dict[int, tuple] = {}
    vals: dict[int, dict] = {}
    with open(rds_path, newline="") as fh:
        for r in csv.DictReader(fh):
            i = int(r["rd_index"])
            meta[i] = (int(r["source_day"]), int(r["weight"]), bool(int(r["extreme_flag"])))
            vals.setdefault(i, {})[a_idx[r["area"]], f_idx[r["feature"]], int(r["t"])] = float(r["value"])
    n_rd = len(meta)
    rds = []
    for i in range(n_rd):
        n_t = 1 + max(t for _, _, t in vals[i])
        pts = np.empty((len(areas), len(features), n_t))
        for (a, f, t), v in vals[i].items():
            pts[a, f, t] = v
        pts.setflags(write=False)
        rds.append(DayMatrix(meta[i][0], pts))
    slds = read_slds_csv(slds_path, n_rd)
    rdset = RepresentativeDaySet(
        tuple(rds),
        np.array([meta[i][1] for i in range(n_rd)]),
        np.array([meta[i][2] for i in range(n_rd)]),
        slds.decode(),
    )
    return rdset, slds
