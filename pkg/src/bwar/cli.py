"""Command-line front end: presets, seeds, CSV output."""
from __future__ import annotations

import sys
from dataclasses import dataclass

import click

from .core import (REFERENCE_NODE_COUNTS, VARIANT_NAMES, ConfigError, SimConfig, Variant,
                   recommended_nodes, validate_config)
from .metrics import run_many, threshold_from_verdicts, write_csv, write_rows

PRESETS = ("fig1a", "fig1b", "fig3", "fig4", "fig5", "custom")
BP_VARIANTS = (Variant.RB, Variant.RB_DA, Variant.BWAR_IM, Variant.BWAR_ID, Variant.BWAR_TD)
LOAD_GRID = (0.001, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14)
FIG5_LAMBDAS = (0.001, 0.016, 0.064, 0.128)
FIG5_TIMEOUT_MULTIPLES = (1, 2, 4, 8, 16)
DEFAULT_SLOTS = 100_000


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    configs: tuple[SimConfig, ...]

    def __len__(self):
        return len(self.configs)


def expand_preset(name: str, *, slots: int = DEFAULT_SLOTS, seed: int = 0, seeds: int = 1,
                  warmup: int = 0, custom: SimConfig | None = None) -> ExperimentPreset:
    """List every (config, seed) of a preset, seeds innermost."""
    if name not in PRESETS:
        raise click.UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    base = []
    if name == "fig1a":
        for cells, nodes in sorted(REFERENCE_NODE_COUNTS.items()):
            for v in Variant:
                base.append(SimConfig(cells, nodes, 0.001, v))
    elif name == "fig1b":
        for lam in LOAD_GRID:
            for v in BP_VARIANTS:
                base.append(SimConfig(25, 44, lam, v))
    elif name == "fig3":
        for lam in LOAD_GRID + (0.16,):
            for v in (Variant.SNW, Variant.BWAR_ID, Variant.BWAR_TD):
                base.append(SimConfig(25, 44, lam, v))
    elif name == "fig4":
        for lam in LOAD_GRID:
            for v in Variant:
                base.append(SimConfig(25, 44, lam, v))
    elif name == "fig5":
        for lam in FIG5_LAMBDAS:
            base.append(SimConfig(25, 44, lam, Variant.BWAR_ID))
            for m in FIG5_TIMEOUT_MULTIPLES:
                base.append(SimConfig(25, 44, lam, Variant.BWAR_TD, timeout=25 * m))
    else:
        if custom is None:
            raise click.UsageError("custom runs need --variant")
        base.append(custom)
    out = []
    for cfg in base:
        for k in range(seeds):
            out.append(cfg.with_(slots=slots, seed=seed + k, experiment=name,
                                 warmup=cfg.warmup if name == "custom" else warmup))
    return ExperimentPreset(name, tuple(out))


def _variant(ctx, param, value):
    if value is None:
        return None
    try:
        return Variant.parse(value)
    except ConfigError as exc:
        raise click.BadParameter(str(exc)) from exc


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--preset", type=str, default=None, help=f"One of {', '.join(PRESETS)}.")
@click.option("--variant", callback=_variant, default=None, help=f"One of {', '.join(VARIANT_NAMES)}.")
@click.option("--cells", type=int, default=25, show_default=True)
@click.option("--nodes", type=int, default=None, help="Defaults to the throughput-optimal count for --cells.")
@click.option("--lambda", "lam", type=float, default=0.001, show_default=True, help="Arrival probability per node per slot.")
@click.option("--lambdas", type=str, default=None, help="Comma-separated λ list (custom runs only).")
@click.option("--slots", type=int, default=DEFAULT_SLOTS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--seeds", type=int, default=1, show_default=True, help="Run seeds seed..seed+K-1.")
@click.option("--timeout", type=int, default=None, help="BWAR-TD timeout P in slots (default: number of cells).")
@click.option("--snw-copies", type=int, default=None, help="Spray and Wait copy budget L (default: ceil(N/10)).")
@click.option("--warmup", type=int, default=0, show_default=True)
@click.option("--random-tiebreak", is_flag=True, help="Seeded random residual tie-break.")
@click.option("--workers", type=int, default=None, help="Worker processes (env BWAR_WORKERS).")
@click.option("--estimate-threshold", is_flag=True, help="Print the stability threshold of a λ sweep.")
@click.option("--out", type=click.Path(dir_okay=False), default="-", show_default=True)
def main(preset, variant, cells, nodes, lam, lambdas, slots, seed, seeds, timeout, snw_copies,
         warmup, random_tiebreak, workers, estimate_threshold, out):
    """Simulate backpressure variants on the cell-partitioned model and write CSV."""
    if seeds < 1:
        raise click.BadParameter("must be >= 1", param_hint="--seeds")
    if preset is None:
        preset = "custom"
    if preset == "custom" and variant is None:
        raise click.UsageError("give --preset or --variant")
    try:
        custom = None
        runs = []
        if preset == "custom":
            n = recommended_nodes(cells) if nodes is None else nodes
            lams = [lam] if lambdas is None else [float(x) for x in lambdas.split(",") if x.strip()]
            for lv in lams:
                custom = SimConfig(cells, n, lv, variant, slots=slots, seed=seed, warmup=warmup,
                                   timeout=timeout, snw_copies=snw_copies,
                                   random_tiebreak=random_tiebreak)
                validate_config(custom)
                runs.extend(expand_preset("custom", slots=slots, seed=seed, seeds=seeds,
                                          custom=custom).configs)
        else:
            runs = list(expand_preset(preset, slots=slots, seed=seed, seeds=seeds, warmup=warmup).configs)
        for cfg in runs:
            validate_config(cfg)
    except ConfigError as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        sys.exit(2)
    except ValueError as exc:
        click.echo(f"invalid value: {exc}", err=True)
        sys.exit(2)

    reports = run_many(runs, workers)
    try:
        if out == "-":
            write_rows(reports, sys.stdout)
        else:
            write_csv(reports, out)
    except OSError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)

    if estimate_threshold:
        by_lam = {}
        for r in reports:
            by_lam.setdefault(r.arrival_rate, []).append(r.stable)
        grid = sorted(by_lam)
        verdicts = [sum(v) * 2 > len(v) for v in (by_lam[x] for x in grid)]
        thr, flag, mono = threshold_from_verdicts(grid, verdicts)
        msg = f"threshold: {thr:.4g}" if thr is not None else "threshold: none"
        click.echo(f"{msg} ({flag}{'' if mono else ', non-monotone'})", err=True)


if __name__ == "__main__":  # pragma: no cover
    main()
