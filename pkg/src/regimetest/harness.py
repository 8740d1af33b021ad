"""Experiment harness: data ingestion, size/power studies, the empirical
application pipeline, and coefficient-table regeneration.

All stochastic work is keyed on a master seed through documented derivation
paths (see ``_seeding``), and study replications are independent tasks whose
results are reduced in replication order, so numeric outputs are identical
for any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ._seeding import DOMAIN_CELL, DOMAIN_DGP, DOMAIN_TABLE, derive_seed, substream
from .chp import chp_bootstrap_test
from .linearity import lmc_test, mmc_test
from .mctest import STATISTICS, LogisticCoeffTable, fit_logistic_cdf
from .moments import quartet_matrix
from .msar import MSARSpec, RegimeParams, TransitionMatrix, simulate_msar

logger = logging.getLogger(__name__)

STUDY_METHODS = ("LMC_min", "LMC_prod", "MMC_min", "MMC_prod", "supTS", "expTS")

#: The desk profile trades replication counts for runtime; the full profile
#: uses the reference experiment sizes.
PROFILES = {
    "desk": {"replications": 500, "N": 100, "B": 200, "chp_draws": 200},
    "full": {"replications": 1000, "N": 100, "B": 500, "chp_draws": 200},
}


@dataclass(frozen=True)
class SeriesDataset:
    """An ingested series with period labels."""

    labels: tuple[str, ...]
    values: np.ndarray
    transformation: str = "none"


@dataclass(frozen=True)
class ExperimentConfig:
    """One study cell: a data-generating process and test settings."""

    dgp: MSARSpec
    T: int
    replications: int
    N: int = 100
    alpha: float = 0.05
    methods: tuple[str, ...] = STUDY_METHODS
    master_seed: int = 0
    label: str = ""
    output_path: str | None = None
    B: int = 200
    chp_draws: int = 200
    mmc_points: int = 41

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        unknown = set(self.methods) - set(STUDY_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass
class StudyRow:
    """One (cell, method) result row."""

    label: str
    method: str
    T: int
    replications: int
    reject_rate: float
    mc_se: float
    wall_time_s: float
    failed: bool = False
    error: str = ""


def ingest_series(path: str | Path, transformation: str = "none") -> SeriesDataset:
    """Read a single- or two-column (period, value) comma-separated file.

    ``logdiff100`` maps levels to 100 times the first difference of logs,
    dropping the first period.  Missing values, non-numeric fields and
    non-increasing period labels are rejected with the offending line number.
    """
    if transformation not in ("none", "logdiff100"):
        raise ValueError(f"unknown transformation {transformation!r}")
    path = Path(path)
    labels: list[str] = []
    values: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) == 1:
                label, raw = str(lineno), row[0]
            elif len(row) == 2:
                label, raw = row[0].strip(), row[1]
            else:
                raise ValueError(f"{path}:{lineno}: expected 1 or 2 columns, got {len(row)}")
            raw = raw.strip()
            if lineno == 1 and not _is_number(raw):
                continue  # header line
            if raw == "":
                raise ValueError(f"{path}:{lineno}: missing value")
            if not _is_number(raw):
                raise ValueError(f"{path}:{lineno}: could not parse value {raw!r}")
            labels.append(label)
            values.append(float(raw))
    if labels != sorted(labels) or len(set(labels)) != len(labels):
        raise ValueError(f"{path}: period labels must be strictly increasing")
    data = np.asarray(values)
    if transformation == "logdiff100":
        if len(data) < 2:
            raise ValueError(f"{path}: need at least 2 rows for logdiff100")
        if np.any(data <= 0.0):
            bad = int(np.nonzero(data <= 0.0)[0][0])
            raise ValueError(f"{path}: non-positive level {data[bad]} at {labels[bad]}")
        data = 100.0 * np.diff(np.log(data))
        labels = labels[1:]
    return SeriesDataset(labels=tuple(labels), values=data, transformation=transformation)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _study_rep(args: tuple) -> dict[str, float]:
    """One study replication: simulate the DGP, run every requested method,
    return p-values keyed by method.  Top level so process pools can pick it."""
    (cell_seed, cell_index, rep, dgp, T, N, methods, B, chp_draws, mmc_points) = args
    rng = substream(cell_seed, DOMAIN_DGP, cell_index, rep)
    y = simulate_msar(dgp, T, rng)
    rep_seed = derive_seed(cell_seed, DOMAIN_CELL, cell_index, rep)
    out: dict[str, float] = {}
    for method in methods:
        if method.startswith("LMC_"):
            out[method] = lmc_test(y, dgp.r, N=N, method=method[4:], master_seed=rep_seed).p_value
        elif method.startswith("MMC_"):
            out[method] = mmc_test(
                y, dgp.r, N=N, method=method[4:], master_seed=rep_seed,
                points_per_dim=mmc_points,
            ).p_value
    if "supTS" in methods or "expTS" in methods:
        report = chp_bootstrap_test(y, B=B, draws=chp_draws, master_seed=rep_seed)
        out["supTS"] = report.bootstrap_p_sup
        out["expTS"] = report.bootstrap_p_exp
    return out


def _parallel_map(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Map preserving task order; workers == 1 avoids any pool."""
    if workers <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def run_size_power_study(
    configs: Sequence[ExperimentConfig],
    workers: int = 1,
) -> list[StudyRow]:
    """Run every cell of a study grid.

    Each cell emits one row per method with the rejection frequency at the
    cell's level, its binomial Monte Carlo standard error, and the cell wall
    time.  A failing cell is reported as failed without aborting the study.
    """
    rows: list[StudyRow] = []
    for cell_index, cfg in enumerate(configs):
        start = time.perf_counter()
        tasks = [
            (
                cfg.master_seed, cell_index, rep, cfg.dgp, cfg.T, cfg.N,
                tuple(cfg.methods), cfg.B, cfg.chp_draws, cfg.mmc_points,
            )
            for rep in range(cfg.replications)
        ]
        try:
            results = _parallel_map(_study_rep, tasks, workers)
        except Exception as exc:  # cell must not poison its neighbours
            logger.exception("study cell %s failed", cfg.label or cell_index)
            elapsed = time.perf_counter() - start
            for method in cfg.methods:
                rows.append(
                    StudyRow(cfg.label, method, cfg.T, cfg.replications,
                             float("nan"), float("nan"), elapsed,
                             failed=True, error=f"{type(exc).__name__}: {exc}")
                )
            continue
        elapsed = time.perf_counter() - start
        for method in cfg.methods:
            rejects = sum(1 for res in results if res[method] <= cfg.alpha)
            rate = rejects / cfg.replications
            # 0/1 outcomes with a single replication get SE 0 by convention
            se = float(np.sqrt(rate * (1.0 - rate) / cfg.replications))
            rows.append(
                StudyRow(cfg.label, method, cfg.T, cfg.replications, rate, se, elapsed)
            )
    return rows


def default_study_grid(
    profile: str = "desk",
    master_seed: int = 0,
    methods: tuple[str, ...] = STUDY_METHODS,
) -> list[ExperimentConfig]:
    """The full experiment design: a linear null plus nine switching
    alternatives, for phi in {0.1, 0.9} and T in {100, 200}."""
    prof = PROFILES[profile]
    configs: list[ExperimentConfig] = []
    separations = [(2.0, 0.0), (0.0, 1.0), (2.0, 1.0)]
    chains = [(0.9, 0.9), (0.9, 0.5), (0.9, 0.1)]
    for phi in (0.1, 0.9):
        for T in (100, 200):
            null_dgp = MSARSpec(
                regimes=RegimeParams(0.0, 0.0, 1.0, 1.0),
                transition=TransitionMatrix(0.9, 0.9),
                phi=(phi,),
            )
            configs.append(
                ExperimentConfig(
                    dgp=null_dgp, T=T, replications=prof["replications"], N=prof["N"],
                    methods=methods, master_seed=master_seed, B=prof["B"],
                    chp_draws=prof["chp_draws"],
                    label=f"null,phi={phi},T={T}",
                )
            )
            for dmu, dsig in separations:
                for p11, p22 in chains:
                    dgp = MSARSpec(
                        regimes=RegimeParams(0.0, dmu, 1.0, 1.0 + dsig),
                        transition=TransitionMatrix(p11, p22),
                        phi=(phi,),
                    )
                    configs.append(
                        ExperimentConfig(
                            dgp=dgp, T=T, replications=prof["replications"], N=prof["N"],
                            methods=methods, master_seed=master_seed, B=prof["B"],
                            chp_draws=prof["chp_draws"],
                            label=f"dmu={dmu},dsig={dsig},p=({p11},{p22}),phi={phi},T={T}",
                        )
                    )
    return configs


@dataclass
class EmpiricalRow:
    """One line of the empirical report."""

    method: str
    p_value: float
    phi: np.ndarray
    min_root_modulus: float
    N: int
    seed: int
    grid_points: int


def run_empirical(
    series: SeriesDataset | np.ndarray,
    r: int = 4,
    N: int = 100,
    methods: Sequence[str] = ("LMC_min", "LMC_prod", "MMC_min", "MMC_prod"),
    master_seed: int = 0,
    grid_points: int | None = None,
) -> list[EmpiricalRow]:
    """Linearity-test report for a single series: one row per method with the
    p-value, the coefficients at the report point, and the smallest root
    modulus of the AR polynomial."""
    y = series.values if isinstance(series, SeriesDataset) else np.asarray(series, float)
    rows: list[EmpiricalRow] = []
    for method in methods:
        kind, _, combine = method.partition("_")
        if kind == "LMC":
            rep = lmc_test(y, r, N=N, method=combine, master_seed=master_seed)
        elif kind == "MMC":
            rep = mmc_test(
                y, r, N=N, method=combine, master_seed=master_seed,
                points_per_dim=grid_points,
            )
        else:
            raise ValueError(f"unknown method {method!r}")
        rows.append(
            EmpiricalRow(
                method=method,
                p_value=rep.p_value,
                phi=rep.phi_at_report,
                min_root_modulus=rep.min_root_modulus,
                N=N,
                seed=master_seed,
                grid_points=rep.grid_points_evaluated,
            )
        )
    return rows


def regenerate_coeff_table(
    T_list: Sequence[int],
    draws: int = 1_000_000,
    master_seed: int = 0,
    batch: int = 50_000,
) -> LogisticCoeffTable:
    """Refit the logistic coefficient table from simulated null statistics.

    For each sample size, ``draws`` standard-normal vectors are reduced to
    their statistic quartets in batches, and each statistic's empirical
    distribution is fitted by non-linear least squares.
    """
    if draws < 10_000:
        raise ValueError("need at least 10^4 draws per sample size")
    entries = {}
    for T in T_list:
        rng = substream(master_seed, DOMAIN_TABLE, T)
        Q = np.empty((draws, 4))
        done = 0
        while done < draws:
            m = min(batch, draws - done)
            Q[done : done + m] = quartet_matrix(rng.standard_normal((m, T)))
            done += m
        if np.isnan(Q).any():  # degenerate draws are impossible in practice
            Q = Q[~np.isnan(Q).any(axis=1)]
        for j, stat in enumerate(STATISTICS):
            entries[(stat, int(T))] = fit_logistic_cdf(Q[:, j], statistic=stat, T=int(T))
        logger.info("fitted coefficient rows for T=%d", T)
    return LogisticCoeffTable(entries)


def config_digest(pairs: Iterable[tuple[str, object]]) -> str:
    """Short stable hash of configuration key-value pairs."""
    text = ";".join(f"{k}={v}" for k, v in sorted(pairs, key=lambda kv: kv[0]))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def write_study_csv(rows: Sequence[StudyRow], path: str | Path, header_meta: str = "") -> None:
    """Write study rows; a leading comment line records run metadata."""
    with open(path, "w", newline="") as fh:
        if header_meta:
            fh.write(f"# {header_meta}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["label", "method", "T", "replications", "reject_rate", "mc_se",
             "wall_time_s", "failed", "error"]
        )
        for row in rows:
            writer.writerow(
                [row.label, row.method, row.T, row.replications,
                 repr(row.reject_rate), repr(row.mc_se), f"{row.wall_time_s:.3f}",
                 int(row.failed), row.error]
            )


def read_study_csv(path: str | Path) -> list[StudyRow]:
    """Parse a study CSV back into rows (exactly as printed)."""
    rows: list[StudyRow] = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for rec in csv.DictReader(lines):
        rows.append(
            StudyRow(
                label=rec["label"], method=rec["method"], T=int(rec["T"]),
                replications=int(rec["replications"]),
                reject_rate=float(rec["reject_rate"]), mc_se=float(rec["mc_se"]),
                wall_time_s=float(rec["wall_time_s"]),
                failed=bool(int(rec["failed"])), error=rec["error"],
            )
        )
    return rows


def write_empirical_csv(rows: Sequence[EmpiricalRow], path: str | Path, header_meta: str = "") -> None:
    """Write an empirical report: method, p-value, phi_1..phi_r, |z|."""
    r = max((len(row.phi) for row in rows), default=0)
    with open(path, "w", newline="") as fh:
        if header_meta:
            fh.write(f"# {header_meta}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "p_value"] + [f"phi_{k+1}" for k in range(r)]
            + ["min_root_modulus", "N", "seed", "grid_points"]
        )
        for row in rows:
            writer.writerow(
                [row.method, repr(row.p_value)]
                + [repr(float(p)) for p in row.phi]
                + [repr(row.min_root_modulus), row.N, row.seed, row.grid_points]
            )
