"""Per-run statistics, stability verdicts, λ sweeps and CSV output."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import store as S
from .core import SimConfig, Variant, validate_config

CSV_COLUMNS = (
    "experiment", "variant", "C", "N", "lambda", "seed", "slots", "warmup",
    "admitted", "delivered", "mean_delay", "mean_Q", "mean_U", "mean_D",
    "transmissions", "duplicate_transmissions", "growth_slope", "stable",
)
NA = "NA"


@dataclass(frozen=True)
class MetricsReport:
    experiment: str
    variant: Variant
    cells: int
    nodes: int
    arrival_rate: float
    seed: int
    slots: int
    warmup: int
    admitted: int
    delivered: int
    mean_delay: float | None  # None when nothing admitted after warmup was delivered
    mean_Q: float
    mean_U: float
    mean_D: float
    transmissions: int
    duplicate_transmissions: int
    growth_slope: float
    stable: bool
    duplications: int = 0
    removed_originals: int = 0
    removed_duplicates: int = 0
    expired: int = 0
    redundant_deliveries: int = 0
    timeout: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def original_transmissions(self) -> int:
        return self.transmissions - self.duplicate_transmissions

    @property
    def delivery_rate(self) -> float:
        return self.delivered / self.slots

    def row(self) -> list[str]:
        return [
            self.experiment, self.variant.label, str(self.cells), str(self.nodes),
            _num(self.arrival_rate), str(self.seed), str(self.slots), str(self.warmup),
            str(self.admitted), str(self.delivered),
            NA if self.mean_delay is None else _num(self.mean_delay),
            _num(self.mean_Q), _num(self.mean_U), _num(self.mean_D),
            str(self.transmissions), str(self.duplicate_transmissions),
            _num(self.growth_slope), "true" if self.stable else "false",
        ]


def _num(x: float) -> str:
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def growth_slope(series: np.ndarray, stride: int, slots: int) -> float:
    """Least-squares slope (packets per slot) of an occupancy series over the last half of the run."""
    n = len(series)
    if n < 2:
        return 0.0
    x = np.arange(n, dtype=float) * stride
    keep = x >= slots / 2
    if keep.sum() < 2:
        keep = np.ones(n, dtype=bool)
    x = x[keep]
    y = np.asarray(series, dtype=float)[keep]
    xc = x - x.mean()
    den = float(xc @ xc)
    if den == 0.0:
        return 0.0
    return float(xc @ (y - y.mean()) / den)


def finalize(sim) -> MetricsReport:
    cfg = sim.cfg
    ctr = sim.store.ctr
    T = int(ctr[S.SLOT])
    if T == 0:
        raise ValueError("run has not advanced")
    ns = int(ctr[S.NSAMPLES])
    slope = growth_slope(sim.series[0, :ns], cfg.sample_stride, T)
    n_delay = int(ctr[S.DELAY_CNT])
    return MetricsReport(
        experiment=cfg.experiment,
        variant=cfg.variant,
        cells=cfg.cells,
        nodes=cfg.nodes,
        arrival_rate=float(cfg.arrival_rate),
        seed=cfg.seed,
        slots=T,
        warmup=cfg.warmup,
        admitted=int(ctr[S.ADMITTED]),
        delivered=int(ctr[S.DELIVERED]),
        mean_delay=(int(ctr[S.DELAY_SUM]) / n_delay) if n_delay else None,
        mean_Q=int(ctr[S.SUMQ]) / T,
        mean_U=int(ctr[S.SUMU]) / T,
        mean_D=int(ctr[S.SUMD]) / T,
        transmissions=int(ctr[S.TX]),
        duplicate_transmissions=int(ctr[S.DUPTX]),
        growth_slope=slope,
        stable=slope < cfg.slope_tol,
        duplications=int(ctr[S.DUPEVENTS]),
        removed_originals=int(ctr[S.REM_MAIN]),
        removed_duplicates=int(ctr[S.REM_DUP]),
        expired=int(ctr[S.TIMEOUTS]),
        redundant_deliveries=int(ctr[S.REDELIVER]),
        timeout=cfg.timeout_slots if cfg.variant is Variant.BWAR_TD else None,
    )


def _run_one(cfg: SimConfig) -> MetricsReport:
    from .engine import Simulation

    return Simulation(cfg).run()


def default_workers() -> int:
    env = os.environ.get("BWAR_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_many(cfgs, workers: int | None = None) -> list[MetricsReport]:
    """Run independent configurations, results in input order."""
    cfgs = [validate_config(c) for c in cfgs]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(cfgs) <= 1:
        return [_run_one(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as pool:
        return list(pool.map(_run_one, cfgs))


@dataclass(frozen=True)
class SweepResult:
    grid: list[tuple[float, MetricsReport]]
    threshold_estimate: float | None
    flag: str  # "ok", "all-stable", "all-unstable"
    monotone: bool

    @property
    def lambdas(self) -> list[float]:
        return [lam for lam, _ in self.grid]

    @property
    def reports(self) -> list[MetricsReport]:
        return [r for _, r in self.grid]


def threshold_from_verdicts(lambdas, stable) -> tuple[float | None, str, bool]:
    """Midpoint between the last stable and the first unstable grid point.

    Stability is assumed monotone in λ; a stable point above the first
    unstable one is reported through ``monotone=False`` and ignored.
    """
    lambdas = list(lambdas)
    stable = list(stable)
    if all(stable):
        return None, "all-stable", True
    first_bad = stable.index(False)
    monotone = not any(stable[first_bad:])
    if first_bad == 0:
        return None, "all-unstable", monotone
    return (lambdas[first_bad - 1] + lambdas[first_bad]) / 2, "ok", monotone


def lambda_grid(lo: float, hi: float, points: int) -> list[float]:
    if not lo < hi:
        raise ValueError("need lambda_lo < lambda_hi")
    if points < 2:
        raise ValueError("need at least two grid points")
    return [round(float(x), 10) for x in np.linspace(lo, hi, points)]


def estimate_stability_threshold(template: SimConfig, lambda_lo: float, lambda_hi: float,
                                 points: int, slots_per_point: int,
                                 workers: int | None = None) -> SweepResult:
    lams = lambda_grid(lambda_lo, lambda_hi, points)
    cfgs = [template.with_(arrival_rate=lam, slots=slots_per_point,
                           warmup=min(template.warmup, slots_per_point - 1)) for lam in lams]
    reports = run_many(cfgs, workers)
    thr, flag, mono = threshold_from_verdicts(lams, [r.stable for r in reports])
    return SweepResult(list(zip(lams, reports)), thr, flag, mono)


def sort_reports(reports) -> list[MetricsReport]:
    return sorted(reports, key=lambda r: (r.arrival_rate, r.seed))


def _rows(reports):
    if isinstance(reports, SweepResult):
        return reports.reports
    if isinstance(reports, MetricsReport):
        return [reports]
    return list(reports)


def write_rows(reports, fh) -> int:
    rows = _rows(reports)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.row())
    return len(rows)


def write_csv(reports, path) -> int:
    """Write one row per report. Accepts a list of reports or a :class:`SweepResult`."""
    try:
        with open(path, "w", newline="") as fh:
            return write_rows(reports, fh)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def littles_law_delay(report: MetricsReport) -> float:
    """Delay predicted from occupancy and throughput."""
    if report.delivered == 0:
        return math.nan
    return report.mean_U / report.delivery_rate
