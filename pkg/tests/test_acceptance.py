"""End-to-end acceptance checks at the full experiment scale.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion. The λ sweeps dominate the runtime (tens of
minutes on one core).
"""
import os
import subprocess
import sys

import numpy as np
import pytest

from bwar import SimConfig, Variant
from bwar.audit import audited_run
from bwar.metrics import estimate_stability_threshold, littles_law_delay, run_many
from bwar.policy import brute_force_select, select_cell_transmission

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

C, N = 25, 44
SWEEP = dict(lambda_lo=0.02, lambda_hi=0.20, points=10, slots_per_point=200_000)
SEED = 0
GRID_STEP = 0.02
BWAR = [Variant.BWAR_IM, Variant.BWAR_ID, Variant.BWAR_TD]


@pytest.fixture(scope="session")
def sweeps():
    return {v: estimate_stability_threshold(SimConfig(C, N, 0.02, v, seed=SEED), **SWEEP)
            for v in Variant}


@pytest.fixture(scope="session")
def low_load():
    seeds = range(5)
    cfgs = [SimConfig(C, N, 0.001, v, slots=100_000, seed=s) for v in Variant for s in seeds]
    reps = run_many(cfgs)
    return {v: [r for c, r in zip(cfgs, reps) if c.variant is v] for v in Variant}


def _fmt(thr):
    return "none" if thr is None else f"{thr:.3f}"


def test_capacity_edge(sweeps, record_criterion):
    got = {v: sweeps[v].threshold_estimate for v in [Variant.RB] + BWAR}
    ok = all(t is not None and abs(t - 0.14) <= 0.02 + 1e-9 for t in got.values())
    detail = ", ".join(f"{v.label}={_fmt(t)}" for v, t in got.items())
    detail += f" (RB-DA={_fmt(sweeps[Variant.RB_DA].threshold_estimate)}); target 0.14 ± 0.02"
    assert record_criterion(1, "capacity edge", ok, detail)


def test_redundancy_keeps_throughput(sweeps, record_criterion):
    rb = sweeps[Variant.RB].threshold_estimate
    ok = rb is not None
    parts = []
    for v in (Variant.BWAR_ID, Variant.BWAR_TD):
        t = sweeps[v].threshold_estimate
        ok = ok and t is not None and t >= rb - GRID_STEP - 1e-9
        parts.append(f"{v.label}={_fmt(t)}")
    assert record_criterion(2, "throughput preserved", ok, ", ".join(parts) + f" vs RB={_fmt(rb)} - 0.02")


def test_spray_and_wait_capacity_gap(sweeps, record_criterion):
    ti = sweeps[Variant.BWAR_ID].threshold_estimate
    ts = sweeps[Variant.SNW].threshold_estimate
    ratio = None if not ti or not ts else ti / ts
    ok = ratio is not None and ratio >= 1.5
    assert record_criterion(3, "gap to spray and wait", ok,
                            f"BWAR-ID={_fmt(ti)} / SNW={_fmt(ts)} = {ratio and round(ratio, 3)} (need >= 1.5)")


def test_low_load_delay_order(low_load, record_criterion):
    d = {v: np.array([r.mean_delay for r in low_load[v]], dtype=float) for v in Variant}
    checks = {"RB > RB-DA": d[Variant.RB] > d[Variant.RB_DA]}
    for v in BWAR:
        checks[f"RB-DA > {v.label}"] = d[Variant.RB_DA] > d[v]
        checks[f"{v.label} <= 1.1 SNW"] = d[v] <= 1.1 * d[Variant.SNW]
    wins = {k: int(x.sum()) for k, x in checks.items()}
    ok = all(w >= 3 for w in wins.values())
    means = ", ".join(f"{v.label}={d[v].mean():.2f}" for v in Variant)
    worst = min(wins, key=wins.get)
    assert record_criterion(4, "low-load delay order", ok,
                            f"mean delays {means}; weakest check {worst} holds on {wins[worst]}/5 seeds")


def test_high_load_im_id_divergence(sweeps, record_criterion):
    im, idd = sweeps[Variant.BWAR_IM], sweeps[Variant.BWAR_ID]
    pts = [(lam, a.mean_delay, b.mean_delay) for (lam, a), (_, b) in zip(im.grid, idd.grid)
           if a.stable and b.stable and a.mean_delay and b.mean_delay]
    better = [b <= 0.9 * a for _, a, b in pts]
    # a grid load at and above which every stable comparison favours BWAR-ID by 10%
    starts = [pts[i][0] for i in range(len(pts)) if all(better[i:])]
    ok = bool(starts)
    table = ", ".join(f"{lam:g}: {b:.0f}/{a:.0f}" for lam, a, b in pts)
    assert record_criterion(5, "IM/ID divergence", ok,
                            f"from λ={starts[0]:g}" if ok else f"no such λ; ID/IM delays {table}")


def test_low_load_energy(low_load, record_criterion):
    tx = {v: sum(r.transmissions for r in low_load[v]) for v in Variant}
    ok = tx[Variant.BWAR_IM] <= tx[Variant.RB_DA] and tx[Variant.SNW] == min(tx.values())
    detail = ", ".join(f"{v.label}={tx[v]}" for v in Variant)
    assert record_criterion(6, "low-load transmissions", ok, f"totals over 5 seeds {detail}")


def test_scheduler_matches_oracle(record_criterion):
    rng = np.random.default_rng(2024)
    total = mismatches = 0
    for v in Variant:
        if not v.is_backpressure:
            continue
        for _ in range(10_000):
            n = 4
            members = sorted(rng.choice(n, size=int(rng.integers(0, n + 1)), replace=False).tolist())
            Q = rng.integers(0, 4, size=(n, n)).astype(np.int32)
            D = rng.integers(0, 4, size=(n, n)).astype(np.int32)
            np.fill_diagonal(Q, 0)
            np.fill_diagonal(D, 0)
            got = select_cell_transmission(v, members, Q, D)
            got = None if got is None else (got.sender, got.receiver, got.commodity)
            mismatches += got != brute_force_select(v, members, Q, D)
            total += 1
    assert record_criterion(7, "scheduler oracle", mismatches == 0, f"{mismatches} mismatches in {total} instances")


def test_invariants_hold(record_criterion):
    found = {}
    for v in Variant:
        _, bad = audited_run(SimConfig(9, 16, 0.06, v, slots=10_000, seed=SEED))
        found[v.label] = bad
    n_bad = sum(map(len, found.values()))
    first = next((f"{k}: slot {b[0][0]} {b[0][1]}" for k, b in found.items() if b), "")
    assert record_criterion(8, "invariant audit", n_bad == 0,
                            f"{n_bad} violations over 6 x 10^4 audited slots" + (f"; first {first}" if first else ""))


def _cli_bytes():
    cmd = [sys.executable, "-m", "bwar.cli", "--preset", "fig4", "--slots", "3000", "--seed", "5",
           "--seeds", "2", "--workers", "1"]
    return subprocess.run(cmd, capture_output=True, check=True, env=dict(os.environ)).stdout


def test_determinism(record_criterion):
    a, b = _cli_bytes(), _cli_bytes()
    rows = a.count(b"\n") - 1
    assert record_criterion(9, "determinism", a == b and rows == 108, f"{rows} CSV rows, identical={a == b}")


def test_littles_law(sweeps, record_criterion):
    worst = (0.0, "")
    n = 0
    for v, res in sweeps.items():
        for lam, r in res.grid:
            if not r.stable or not r.delivered or r.mean_delay is None:
                continue
            err = abs(r.mean_delay / littles_law_delay(r) - 1)
            n += 1
            if err > worst[0]:
                worst = (err, f"{v.label} λ={lam:g}")
    ok = n > 0 and worst[0] <= 0.15
    assert record_criterion(10, "Little's law", ok,
                            f"{n} stable runs, largest relative gap {worst[0]:.3f} at {worst[1]} (limit 0.15)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
