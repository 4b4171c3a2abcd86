"""Debug-mode invariant audit, run between slots."""
from __future__ import annotations

import numpy as np

from . import store as S
from .core import SimConfig, Variant
from .engine import Simulation


def audit(sim: Simulation, slot_log: np.ndarray | None = None, prev_ctr: np.ndarray | None = None) -> list[str]:
    """Check every storage invariant; returns human-readable violations (empty when clean)."""
    cfg = sim.cfg
    st = sim.store
    n = cfg.nodes
    t = sim.t - 1
    out: list[str] = []
    rows = st.live_rows()
    cp = st.cp[rows]
    pkt = cp[:, S.PKT].astype(np.int64)
    node = cp[:, S.NODE].astype(np.int64)
    kind = cp[:, S.KIND]
    npk = int(st.ctr[S.NPKT])
    pk = st.pk[:npk]
    dst = pk[pkt, S.DST].astype(np.int64) if rows.size else np.zeros(0, dtype=np.int64)

    if rows.size and (node.min() < 0 or node.max() >= n):
        out.append("copy stored at an invalid node")
        return out

    main = kind == S.ORIGINAL
    Q = np.zeros((n, n), dtype=np.int64)
    D = np.zeros((n, n), dtype=np.int64)
    np.add.at(Q, (node[main], dst[main]), 1)
    np.add.at(D, (node[~main], dst[~main]), 1)
    if not np.array_equal(Q, st.qs[S.QCNT]):
        out.append("main-queue counts disagree with stored copies")
    if not np.array_equal(D, st.qs[S.DCNT]):
        out.append("duplicate-buffer counts disagree with stored copies")
    if np.any(np.diag(Q)) or np.any(np.diag(D)):
        out.append("a node stores packets addressed to itself")
    if cfg.variant.is_backpressure and D.max(initial=0) > cfg.d_max:
        out.append(f"duplicate buffer above D_max={cfg.d_max}")
    if int(Q.sum()) != int(st.ctr[S.TOTQ]) or int(D.sum()) != int(st.ctr[S.TOTD]):
        out.append("occupancy totals drifted")
    if rows.size and np.unique(node * npk + pkt).size != rows.size:
        out.append("a node holds two copies of the same packet")

    delivered = pk[:, S.DELIV] >= 0
    stale = int(np.count_nonzero(main & delivered[pkt])) if rows.size else 0
    if stale != int(st.ctr[S.STALE]):
        out.append("stale-original count drifted")

    v = cfg.variant
    if v in (Variant.RB, Variant.RB_DA) and (np.any(~main) or st.ctr[S.DUPTX] != 0):
        out.append("plain backpressure produced duplicates")
    if v in (Variant.BWAR_IM, Variant.BWAR_ID) and rows.size and np.any(delivered[pkt]):
        out.append("copy of a delivered packet survived the ideal purge")
    if v is Variant.BWAR_TD and rows.size:
        age = t - pk[pkt, S.ADMIT]
        if np.any((kind == S.DUPLICATE) & (age >= cfg.timeout_slots)):
            out.append("unflagged duplicate outlived the timeout")

    durable = np.zeros(npk, dtype=bool)
    if rows.size:
        durable[pkt[(kind == S.ORIGINAL) | (kind == S.FLAGGED)]] = True
    undelivered = ~delivered
    if int(st.ctr[S.ADMITTED]) != int(st.ctr[S.DELIVERED]) + int(undelivered.sum()):
        out.append("admitted != delivered + undelivered")
    if np.any(undelivered & ~durable):
        out.append("an undelivered packet lost its last durable copy")
    got = pk[delivered]
    if got.size and np.any(got[:, S.DELIV] - got[:, S.ADMIT] < 1):
        out.append("delivery delay below one slot")

    if prev_ctr is not None:
        for name in ("ADMITTED", "DELIVERED", "TX", "DUPTX", "DUPEVENTS"):
            i = getattr(S, name)
            if st.ctr[i] < prev_ctr[i]:
                out.append(f"counter {name} decreased")

    if slot_log is not None and len(slot_log):
        cells = slot_log[:, 1]
        if np.unique(cells).size != cells.size:
            out.append("more than one transmission in a cell")
        cell_of = sim.placement
        for rec in slot_log:
            _, cell, a, b, c, k, qa, _ = (int(x) for x in rec)
            if a == b:
                out.append("node transmitted to itself")
            if cell_of[a] != cell or cell_of[b] != cell:
                out.append("transmission between nodes in different cells")
            if v.is_backpressure:
                if k != S.ORIGINAL and qa != 0:
                    out.append("duplicate served while main queue non-empty")
                if k == S.ORIGINAL and qa == 0:
                    out.append("original served from an empty queue")
    return out


def audited_run(cfg: SimConfig, slots: int | None = None) -> tuple[Simulation, list[tuple[int, str]]]:
    """Step slot by slot with the audit after each; returns the simulation and (slot, violation) pairs."""
    sim = Simulation(cfg, log=True)
    horizon = cfg.slots if slots is None else min(slots, cfg.slots)
    found: list[tuple[int, str]] = []
    seen = 0
    prev = sim.store.ctr.copy()
    while sim.t < horizon:
        sim.step()
        n_log = int(sim.logn[0])
        for msg in audit(sim, sim.log[seen:n_log], prev):
            found.append((sim.t - 1, msg))
        seen = n_log
        prev = sim.store.ctr.copy()
    return sim, found
