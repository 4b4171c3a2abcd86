"""The slot loop.

Within slot ``t`` the order is: placement, flagged-original resolution (TD),
one scheduling decision per cell, commit, end-of-slot removals, then the
exogenous arrivals stamped ``t``. Service therefore sees the queues as they
stood at the start of the slot, and a packet admitted at ``t`` is first
eligible at ``t + 1``.
"""
from __future__ import annotations

import numpy as np

from . import store as S
from ._jit import njit
from .core import Kind, SimConfig, Variant, partner, validate_config
from .duplicates import expire_range, purge_packet, resolve_flagged, snw_ack_head
from .mobility import group_by_cell
from .policy import select_bp, select_snw

RNG_BLOCK = 1024  # slots of randomness drawn per generator call
LOG_COLS = 8  # slot, cell, sender, receiver, commodity, served kind, sender Q before commit, delivered

RB, RB_DA, IM, ID, TD, SNW = 0, 1, 2, 3, 4, 5


@njit
def _deliver(cp, pk, ctr, p, t, warmup):
    if pk[p, S.DELIV] >= 0:
        ctr[S.REDELIVER] += 1
        return False
    pk[p, S.DELIV] = t
    ctr[S.DELIVERED] += 1
    admit = pk[p, S.ADMIT]
    if admit >= warmup:
        ctr[S.DELAY_SUM] += t - admit
        ctr[S.DELAY_CNT] += 1
    r = pk[p, S.CHEAD]
    while r >= 0:
        if cp[r, S.KIND] == S.ORIGINAL:
            ctr[S.STALE] += 1
        r = cp[r, S.PNEXT]
    return True


@njit
def _receive_original(cp, qs, pk, ctr, r, b):
    """Store the original ``r`` (already out of any queue) at ``b``.

    A duplicate or flagged copy of the same packet at ``b`` is superseded; if
    ``b`` already queues the original, the arriving copy is dropped.
    """
    p = cp[r, S.PKT]
    cp[r, S.NODE] = -1
    old = S.find_copy(cp, pk, p, b)
    if old >= 0:
        if cp[old, S.KIND] == S.ORIGINAL:
            S.chain_remove(cp, pk, r)
            S.release(cp, ctr, r)
            ctr[S.DISCARDED] += 1
            return
        S.destroy(cp, qs, pk, ctr, old)
    S.main_push(cp, qs, pk, ctr, r, b)


@njit
def _commit_bp(variant, t, a, b, c, q_th, d_max, P, warmup, cp, pk, qs, ctr):
    """Carry out one scheduled transmission. Returns (served kind, delivered packet or -1)."""
    ctr[S.TX] += 1
    qa = qs[S.QCNT, a, c]
    if qa > 0:
        r = qs[S.MHEAD, a, c]
        p = cp[r, S.PKT]
        if b == c:
            S.destroy(cp, qs, pk, ctr, r)
            if _deliver(cp, pk, ctr, p, t, warmup):
                return S.ORIGINAL, p
            return S.ORIGINAL, -1
        trig = variant >= IM and qa - 1 < q_th and qs[S.DCNT, a, c] < d_max
        if trig and variant == IM:
            if qs[S.DCNT, b, c] < d_max and S.find_copy(cp, pk, p, b) < 0:
                rr = S.alloc(cp, ctr)
                S.chain_add(cp, pk, rr, p)
                S.dup_push(cp, qs, pk, ctr, rr, b, S.DUPLICATE)
                ctr[S.DUPEVENTS] += 1
                return S.ORIGINAL, -1
        elif trig:
            S.main_unlink(cp, qs, pk, ctr, r)
            S.dup_push(cp, qs, pk, ctr, r, a, S.FLAGGED)
            rr = S.alloc(cp, ctr)
            S.chain_add(cp, pk, rr, p)
            _receive_original(cp, qs, pk, ctr, rr, b)
            ctr[S.DUPEVENTS] += 1
            return S.ORIGINAL, -1
        S.main_unlink(cp, qs, pk, ctr, r)
        _receive_original(cp, qs, pk, ctr, r, b)
        return S.ORIGINAL, -1

    # strictly lower priority: only reached with the main queue empty
    ctr[S.DUPTX] += 1
    r = qs[S.DHEAD, a, c]
    p = cp[r, S.PKT]
    kind = cp[r, S.KIND]
    if qs[S.DCNT, a, c] > 1:
        # round-robin among buffered copies; the served copy stays put
        S.dup_unlink(cp, qs, pk, ctr, r)
        S.dup_push(cp, qs, pk, ctr, r, a, kind)
    if b == c:
        if _deliver(cp, pk, ctr, p, t, warmup):
            return kind, p
        return kind, -1
    if (S.find_copy(cp, pk, p, b) < 0 and qs[S.DCNT, b, c] < d_max
            and not (variant == TD and t - pk[p, S.ADMIT] >= P)):
        rr = S.alloc(cp, ctr)
        S.chain_add(cp, pk, rr, p)
        S.dup_push(cp, qs, pk, ctr, rr, b, S.DUPLICATE)
    else:
        ctr[S.DISCARDED] += 1
    return kind, -1


@njit
def _snw_destroy(cp, qs, pk, ctr, sp, r):
    if cp[r, S.TOK] > 1:
        S.spray_unlink(cp, sp, r, cp[r, S.NODE])
    S.destroy(cp, qs, pk, ctr, r)


@njit
def _log(log, logn, t, cell, a, b, c, kind, qa, dlv):
    i = logn[0]
    if i < log.shape[0]:
        log[i, 0] = t
        log[i, 1] = cell
        log[i, 2] = a
        log[i, 3] = b
        log[i, 4] = c
        log[i, 5] = kind
        log[i, 6] = qa
        log[i, 7] = dlv
    logn[0] = i + 1


@njit
def run_slots(variant, t0, nslots, cells_blk, arr_blk, tie_blk, ncells,
              q_th, d_max, P, copies, warmup, random_tie,
              cp, pk, qs, sp, ctr, first_pid, series, stride,
              log, logn, log_on):
    """Advance the network by ``nslots`` slots starting at slot ``t0``.

    Row ``k`` of the random blocks belongs to slot ``t0 + k``.
    """
    n = qs.shape[1]
    order = np.empty(n, dtype=np.int64)
    start = np.empty(ncells + 1, dtype=np.int64)
    dlv = np.empty(ncells, dtype=np.int64)
    Q = qs[S.QCNT]
    D = qs[S.DCNT]
    for k in range(nslots):
        t = t0 + k
        group_by_cell(cells_blk[k], ncells, order, start)
        ndel = 0

        if variant == TD:
            for l in range(ncells):
                for ia in range(start[l], start[l + 1]):
                    a = order[ia]
                    for ib in range(start[l], start[l + 1]):
                        b = order[ib]
                        if b != a and qs[S.DCNT, a, b] > 0:
                            resolve_flagged(cp, qs, pk, ctr, a, b)

        for l in range(ncells):
            lo = start[l]
            hi = start[l + 1]
            if hi - lo < 2:
                continue
            if variant == SNW:
                for ia in range(lo, hi):
                    a = order[ia]
                    for ib in range(lo, hi):
                        b = order[ib]
                        if b != a and qs[S.MHEAD, a, b] >= 0:
                            snw_ack_head(cp, qs, pk, ctr, sp, a, b)
                mode, a, b, r = select_snw(order, lo, hi, cp, pk, qs, sp)
                if mode == 0:
                    continue
                p = cp[r, S.PKT]
                c = pk[p, S.DST]
                ctr[S.TX] += 1
                qa = qs[S.QCNT, a, c]
                got = -1
                if mode == 1:
                    _snw_destroy(cp, qs, pk, ctr, sp, r)
                    if _deliver(cp, pk, ctr, p, t, warmup):
                        got = p
                    kind = S.ORIGINAL
                else:
                    ctr[S.DUPTX] += 1
                    ctr[S.DUPEVENTS] += 1
                    give = cp[r, S.TOK] // 2
                    cp[r, S.TOK] -= give
                    if cp[r, S.TOK] <= 1:
                        S.spray_unlink(cp, sp, r, a)
                    rr = S.alloc(cp, ctr)
                    S.chain_add(cp, pk, rr, p)
                    cp[rr, S.TOK] = give
                    S.main_insert_sorted(cp, qs, pk, ctr, rr, b)
                    if give > 1:
                        S.spray_insert(cp, sp, rr, b)
                    kind = S.DUPLICATE
                if log_on:
                    _log(log, logn, t, l, a, b, c, kind, qa, got)
                continue

            a, b, c = select_bp(variant, order, lo, hi, Q, D, tie_blk[k, l], random_tie)
            if a < 0:
                continue
            qa = qs[S.QCNT, a, c]
            kind, got = _commit_bp(variant, t, a, b, c, q_th, d_max, P, warmup, cp, pk, qs, ctr)
            if got >= 0:
                dlv[ndel] = got
                ndel += 1
            if log_on:
                _log(log, logn, t, l, a, b, c, kind, qa, got)

        if variant == IM or variant == ID:
            for i in range(ndel):
                purge_packet(cp, qs, pk, ctr, dlv[i])
        elif variant == TD and t - P >= 0:
            expire_range(cp, qs, pk, ctr, first_pid[t - P], first_pid[t - P + 1])

        first_pid[t] = ctr[S.NPKT]
        arr = arr_blk[k]
        for src in range(n):
            if arr[src]:
                p = S.new_packet(pk, ctr, t, src, src ^ 1)
                r = S.alloc(cp, ctr)
                S.chain_add(cp, pk, r, p)
                if variant == SNW:
                    cp[r, S.TOK] = copies
                    S.main_push(cp, qs, pk, ctr, r, src)
                    if copies > 1:
                        S.spray_insert(cp, sp, r, src)
                else:
                    S.main_push(cp, qs, pk, ctr, r, src)
        first_pid[t + 1] = ctr[S.NPKT]

        q_tot = ctr[S.TOTQ]
        if variant == SNW:
            u_tot = ctr[S.ADMITTED] - ctr[S.DELIVERED]
        else:
            u_tot = q_tot - ctr[S.STALE]
        ctr[S.SUMQ] += q_tot
        ctr[S.SUMU] += u_tot
        ctr[S.SUMD] += ctr[S.TOTD]
        if t % stride == 0:
            i = t // stride
            series[0, i] = q_tot
            series[1, i] = u_tot
            series[2, i] = ctr[S.TOTD]
            ctr[S.NSAMPLES] = i + 1
        ctr[S.SLOT] = t + 1


class Simulation:
    """Mutable state of one run.

    Randomness comes from three independent PCG64 streams spawned from the
    seed: mobility, arrivals and residual tie-breaks, in that order.
    """

    def __init__(self, cfg: SimConfig, *, log: bool = False):
        self.cfg = validate_config(cfg)
        n = cfg.nodes
        mob, arr, tie = np.random.SeedSequence(cfg.seed).spawn(3)
        self._rng_mob = np.random.Generator(np.random.PCG64(mob))
        self._rng_arr = np.random.Generator(np.random.PCG64(arr))
        self._rng_tie = np.random.Generator(np.random.PCG64(tie))
        expected = int(cfg.arrival_rate * n * min(cfg.slots, 20_000)) + 4 * n * n + 1024
        self.store = S.Store(n, copies_hint=expected, packets_hint=expected)
        self.first_pid = np.zeros(cfg.slots + 2, dtype=np.int32)
        self.series = np.zeros((3, cfg.slots // cfg.sample_stride + 2), dtype=np.int64)
        self.t = 0
        self.log_on = log
        self.log = np.zeros((0 if not log else 4096, LOG_COLS), dtype=np.int64)
        self.logn = np.zeros(1, dtype=np.int64)
        self._blk_start = 0
        self._blk_len = 0
        self._cells = self._arr = self._ties = None
        self.placement: np.ndarray | None = None

    @property
    def variant(self) -> Variant:
        return self.cfg.variant

    @property
    def done(self) -> bool:
        return self.t >= self.cfg.slots

    def _draw_block(self):
        cfg = self.cfg
        b = RNG_BLOCK
        self._cells = self._rng_mob.integers(0, cfg.cells, size=(b, cfg.nodes))
        self._arr = self._rng_arr.random((b, cfg.nodes)) < cfg.arrival_rate
        if cfg.random_tiebreak:
            self._ties = self._rng_tie.random((b, cfg.cells))
        else:
            self._ties = np.zeros((b, cfg.cells))
        self._blk_start = self.t
        self._blk_len = b

    def script(self, cells, arrivals=None) -> "Simulation":
        """Replace the random draws of the next slots with fixed placements (and arrivals).

        Used by tests and worked examples; the generators are left untouched.
        """
        cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
        k, n = cells.shape
        if n != self.cfg.nodes or cells.min() < 0 or cells.max() >= self.cfg.cells:
            raise ValueError("placement rows must list a valid cell for every node")
        arr = np.zeros((k, n), dtype=bool) if arrivals is None else np.atleast_2d(np.asarray(arrivals, dtype=bool))
        if arr.shape != (k, n):
            raise ValueError("arrival rows must match placement rows")
        self._cells, self._arr = cells, arr
        self._ties = np.zeros((k, self.cfg.cells))
        self._blk_start, self._blk_len = self.t, k
        return self

    def advance(self, k: int) -> "Simulation":
        """Run ``k`` more slots (capped at the configured horizon)."""
        cfg = self.cfg
        k = min(k, cfg.slots - self.t)
        while k > 0:
            if self.t >= self._blk_start + self._blk_len:
                self._draw_block()
            off = self.t - self._blk_start
            m = min(k, self._blk_len - off)
            st = self.store
            st.ensure(m * (cfg.nodes + cfg.cells), m * cfg.nodes)
            if self.log_on:
                need = int(self.logn[0]) + m * cfg.cells
                if need > self.log.shape[0]:
                    self.log = np.concatenate(
                        [self.log, np.zeros((max(need, 2 * self.log.shape[0]) - self.log.shape[0], LOG_COLS),
                                            dtype=np.int64)])
            run_slots(int(cfg.variant), self.t, m,
                      self._cells[off:off + m], self._arr[off:off + m], self._ties[off:off + m],
                      cfg.cells, cfg.q_th, cfg.d_max, cfg.timeout_slots, cfg.copies, cfg.warmup,
                      cfg.random_tiebreak,
                      st.cp, st.pk, st.qs, st.sp, st.ctr, self.first_pid, self.series,
                      cfg.sample_stride, self.log, self.logn, self.log_on)
            self.placement = self._cells[off + m - 1]
            self.t += m
            k -= m
        return self

    def step(self) -> "Simulation":
        return self.advance(1)

    def run(self):
        from .metrics import finalize

        self.advance(self.cfg.slots - self.t)
        return finalize(self)

    # inspection helpers

    def counter(self, slot: int) -> int:
        return int(self.store.ctr[slot])

    def transmissions_log(self) -> np.ndarray:
        return self.log[: int(self.logn[0])].copy()

    def packet(self, pid: int, kind: Kind = Kind.ORIGINAL):
        from .core import Packet

        pk = self.store.pk
        return Packet(pid, int(pk[pid, S.SRC]), int(pk[pid, S.DST]), int(pk[pid, S.ADMIT]), kind)

    def node_state(self, node: int):
        """Materialize one node's storage as a :class:`~bwar.core.NodeState`."""
        from .core import NodeState

        st = self.store
        ns = NodeState(node, partner(node))
        for c in range(self.cfg.nodes):
            for head, target in ((S.MHEAD, ns.main_queues), (S.DHEAD, ns.dup_buffers)):
                r = int(st.qs[head, node, c])
                items = []
                while r >= 0:
                    items.append(self.packet(int(st.cp[r, S.PKT]), Kind(int(st.cp[r, S.KIND]))))
                    r = int(st.cp[r, S.NEXT])
                if items:
                    target[c] = items
        return ns

    def queue_counts(self):
        return self.store.qs[S.QCNT].copy(), self.store.qs[S.DCNT].copy()

    def delays(self) -> np.ndarray:
        """Per-packet delay of every delivered packet, in admission order."""
        pk = self.store.pk[: int(self.store.ctr[S.NPKT])]
        got = pk[:, S.DELIV] >= 0
        return (pk[got, S.DELIV] - pk[got, S.ADMIT]).astype(np.int64)


def step(sim: Simulation) -> Simulation:
    return sim.step()


def run(cfg: SimConfig):
    """Run one configuration to completion and return its :class:`~bwar.metrics.MetricsReport`."""
    return Simulation(cfg).run()
