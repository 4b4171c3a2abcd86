"""Link weights and per-cell scheduling decisions.

Backpressure variants rank every candidate (sender, receiver, commodity) in a
cell by the key ``(q_diff, dest_flag, dup_diff)`` compared lexicographically:
queue differential first, then the destination advantage, then the duplicate
buffer differential. Remaining ties go to the smallest ``(a, b, c)`` or, when
requested, to a seeded uniform pick.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import store as S
from ._jit import njit
from .core import Kind, Variant

NEG = -(2**62)


@dataclass(frozen=True)
class LinkWeight:
    scaled_weight: int  # 4 * d_max * (Q_i - Q_j + dest/2 + (D_i - D_j) / (4 d_max))
    q_diff: int
    dest_flag: bool
    dup_diff: int

    @property
    def value(self) -> float:
        return self.scaled_weight / 4.0

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.q_diff, int(self.dest_flag), self.dup_diff)


@dataclass(frozen=True)
class ScheduledTransmission:
    cell: int
    sender: int
    receiver: int
    commodity: int
    served_kind: Kind | None = None


def rb_weight(q_i: int, q_j: int) -> int:
    return q_i - q_j


def bwar_weight(q_i, q_j, d_i, d_j, j_is_dest, d_max=1) -> LinkWeight:
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    flag = bool(j_is_dest) and (q_i + d_i) > 0
    qd = q_i - q_j
    dd = d_i - d_j
    return LinkWeight(4 * d_max * qd + 2 * d_max * int(flag) + dd, qd, flag, dd)


@njit
def _key(variant, a, b, c, Q, D):
    qa = Q[a, c]
    qd = qa - Q[b, c]
    if variant == 0:
        return qd, 0, 0
    if variant == 1:
        return qd, 1 if (c == b and qa > 0) else 0, 0
    da = D[a, c]
    f = 1 if (c == b and qa + da > 0) else 0
    return qd, f, da - D[b, c]


@njit
def _better(q1, f1, d1, q2, f2, d2):
    if q1 != q2:
        return q1 > q2
    if f1 != f2:
        return f1 > f2
    return d1 > d2


@njit
def select_bp(variant, order, lo, hi, Q, D, tie_u, random_tie):
    """Best (a, b, c) in the cell ``order[lo:hi]`` or (-1, -1, -1) when idle."""
    n = Q.shape[1]
    bq = NEG
    bf = 0
    bd = 0
    ba = -1
    bb = -1
    bc = -1
    bwar = variant >= 2
    for ia in range(lo, hi):
        a = order[ia]
        for c in range(n):
            own = Q[a, c]
            if bwar:
                own += D[a, c]
            if own == 0:
                # nothing to send: key <= (0, 0, 0), never transmitted
                continue
            for ib in range(lo, hi):
                b = order[ib]
                if b == a:
                    continue
                q, f, d = _key(variant, a, b, c, Q, D)
                if ba < 0 or _better(q, f, d, bq, bf, bd):
                    bq, bf, bd, ba, bb, bc = q, f, d, a, b, c
                elif q == bq and f == bf and d == bd:
                    if a < ba or (a == ba and (b < bb or (b == bb and c < bc))):
                        ba, bb, bc = a, b, c
    if ba < 0:
        return -1, -1, -1
    if not (bq > 0 or (bq == 0 and (bf == 1 or bd > 0))):
        return -1, -1, -1
    if random_tie:
        ties = 0
        for ia in range(lo, hi):
            a = order[ia]
            for ib in range(lo, hi):
                b = order[ib]
                if b == a:
                    continue
                for c in range(n):
                    q, f, d = _key(variant, a, b, c, Q, D)
                    if q == bq and f == bf and d == bd:
                        ties += 1
        k = int(tie_u * ties)
        if k >= ties:
            k = ties - 1
        for ia in range(lo, hi):
            a = order[ia]
            for ib in range(lo, hi):
                b = order[ib]
                if b == a:
                    continue
                for c in range(n):
                    q, f, d = _key(variant, a, b, c, Q, D)
                    if q == bq and f == bf and d == bd:
                        if k == 0:
                            return a, b, c
                        k -= 1
    return ba, bb, bc


@njit
def select_snw(order, lo, hi, cp, pk, qs, sp):
    """Spray and Wait decision for one cell.

    Returns ``(mode, a, b, row)``: mode 1 delivers copy ``row`` from ``a`` to
    its destination ``b``; mode 2 sprays ``row`` from ``a`` to ``b``; mode 0 is
    idle.
    """
    best = 2**31
    ba = -1
    bb = -1
    br = -1
    for ia in range(lo, hi):
        a = order[ia]
        for ib in range(lo, hi):
            b = order[ib]
            if b == a:
                continue
            r = qs[S.MHEAD, a, b]
            if r >= 0 and cp[r, S.PKT] < best:
                best = cp[r, S.PKT]
                ba, bb, br = a, b, r
    if ba >= 0:
        return 1, ba, bb, br
    for ia in range(lo, hi):
        a = order[ia]
        r = sp[S.SHEAD, a]
        while r >= 0:
            p = cp[r, S.PKT]
            if p >= best:
                break
            mate = -1
            for ib in range(lo, hi):
                b = order[ib]
                if b != a and S.find_copy(cp, pk, p, b) < 0:
                    mate = b
                    break
            if mate >= 0:
                best = p
                ba, bb, br = a, mate, r
                break
            r = cp[r, S.SNEXT]
    if ba >= 0:
        return 2, ba, bb, br
    return 0, -1, -1, -1


def _counts(states, n):
    Q = np.zeros((n, n), dtype=np.int32)
    D = np.zeros((n, n), dtype=np.int32)
    for st in states:
        for c, q in st.main_queues.items():
            Q[st.node, c] = len(q)
        for c, d in st.dup_buffers.items():
            D[st.node, c] = len(d)
    return Q, D


def select_cell_transmission(variant, members, Q, D=None, *, cell=0, tie_u=None):
    """Schedule one transmission in a cell.

    ``Q`` and ``D`` are (N, N) occupancy arrays indexed ``[node, commodity]``;
    a sequence of :class:`~bwar.core.NodeState` is accepted in place of ``Q``.
    ``tie_u`` in [0, 1) switches the residual tie-break to a uniform pick.
    """
    variant = Variant.parse(variant)
    if variant is Variant.SNW:
        raise ValueError("use snw_select_cell_transmission for Spray and Wait")
    if not isinstance(Q, np.ndarray):
        states = list(Q)
        Q, D = _counts(states, len(states))
    Q = np.ascontiguousarray(Q, dtype=np.int32)
    D = np.zeros_like(Q) if D is None else np.ascontiguousarray(D, dtype=np.int32)
    order = np.asarray(sorted(members), dtype=np.int64)
    a, b, c = select_bp(int(variant), order, 0, order.size, Q, D,
                        0.0 if tie_u is None else float(tie_u), tie_u is not None)
    if a < 0:
        return None
    return ScheduledTransmission(cell, int(a), int(b), int(c))


def snw_select_cell_transmission(members, store, *, cell=0):
    """Spray and Wait decision over a live :class:`~bwar.store.Store`."""
    order = np.asarray(sorted(members), dtype=np.int64)
    mode, a, b, r = select_snw(order, 0, order.size, store.cp, store.pk, store.qs, store.sp)
    if mode == 0:
        return None
    kind = Kind.ORIGINAL if mode == 1 else Kind.DUPLICATE
    p = int(store.cp[r, S.PKT])
    return ScheduledTransmission(cell, int(a), int(b), int(store.pk[p, S.DST]), kind)


def brute_force_select(variant, members, Q, D):
    """Reference decision: filter every ordered (a, b, c) through the per-cell rules in turn.

    Kept deliberately naive and independent of :func:`select_bp`.
    """
    variant = Variant.parse(variant)
    n = Q.shape[0]
    cands = [(a, b, c) for a, b in itertools.permutations(sorted(members), 2) for c in range(n)]
    if not cands:
        return None

    def qd(x):
        a, b, c = x
        return int(Q[a, c]) - int(Q[b, c])

    top = max(qd(x) for x in cands)
    pool = [x for x in cands if qd(x) == top]
    if variant is not Variant.RB:
        use_d = variant.is_bwar

        def has_payload(x):
            a, _, c = x
            return Q[a, c] + (D[a, c] if use_d else 0) > 0

        dest = [x for x in pool if x[2] == x[1] and has_payload(x)]
        if dest:
            pool = dest
    dd = 0
    if variant.is_bwar:
        def total_diff(x):
            a, b, c = x
            return int(Q[a, c] + D[a, c]) - int(Q[b, c] + D[b, c])

        best = max(total_diff(x) for x in pool)
        pool = [x for x in pool if total_diff(x) == best]
        dd = best - top
    choice = min(pool)
    if top > 0 or (variant.is_bwar and top == 0 and dd > 0):
        return choice
    return None
