"""Array-backed packet storage.

Every stored copy is one row of the ``cp`` pool. Rows are threaded on three
doubly linked lists: the node's queue or duplicate buffer for the copy's
commodity, the chain of all copies of the same packet, and (Spray and Wait
only) the node's spray list. Free rows are chained through ``NEXT``.
"""
import numpy as np

from ._jit import njit

# cp columns
PKT = 0
NODE = 1
KIND = 2
PREV = 3
NEXT = 4
PPREV = 5
PNEXT = 6
TOK = 7
SPREV = 8
SNEXT = 9
CP_COLS = 10

# pk columns
ADMIT = 0
SRC = 1
DST = 2
DELIV = 3
CHEAD = 4
PK_COLS = 5

# qs planes, each (N, N) indexed [node, commodity]
MHEAD = 0
MTAIL = 1
DHEAD = 2
DTAIL = 3
QCNT = 4
DCNT = 5
QS_PLANES = 6

# sp planes, each (N,)
SHEAD = 0
STAIL = 1

# ctr slots
FREE = 0
NPKT = 1
ADMITTED = 2
DELIVERED = 3
TX = 4
DUPTX = 5
DUPEVENTS = 6
REM_MAIN = 7
REM_DUP = 8
STALE = 9
TOTQ = 10
TOTD = 11
DELAY_SUM = 12
DELAY_CNT = 13
SUMQ = 14
SUMU = 15
SUMD = 16
ACKS = 17
DISCARDED = 18
LIVE = 19
SLOT = 20
NSAMPLES = 21
REDELIVER = 22
TIMEOUTS = 23
CTR_LEN = 24

ORIGINAL = 0
DUPLICATE = 1
FLAGGED = 2
FREE_KIND = -1


class Store:
    """Owns the arrays and grows them between kernel calls."""

    def __init__(self, nodes, copies_hint=1024, packets_hint=1024):
        n = nodes
        self.nodes = n
        self.cp = np.zeros((0, CP_COLS), dtype=np.int32)
        self.pk = np.zeros((0, PK_COLS), dtype=np.int32)
        self.qs = np.full((QS_PLANES, n, n), -1, dtype=np.int32)
        self.qs[QCNT] = 0
        self.qs[DCNT] = 0
        self.sp = np.full((2, n), -1, dtype=np.int32)
        self.ctr = np.zeros(CTR_LEN, dtype=np.int64)
        self.ctr[FREE] = -1
        self.free_rows = 0
        self.ensure(copies_hint, packets_hint)

    def ensure(self, new_copies, new_packets):
        """Guarantee room for ``new_copies`` more copies and ``new_packets`` more packets."""
        live = int(self.ctr[LIVE])
        free = self.cp.shape[0] - live
        if free < new_copies:
            old = self.cp.shape[0]
            grow = max(new_copies - free, old // 2, 1024)
            rows = np.zeros((grow, CP_COLS), dtype=np.int32)
            rows[:, KIND] = FREE_KIND
            rows[:, NEXT] = np.arange(old + 1, old + grow + 1, dtype=np.int32)
            rows[-1, NEXT] = self.ctr[FREE]
            self.cp = np.concatenate([self.cp, rows])
            self.ctr[FREE] = old
        used = int(self.ctr[NPKT])
        if self.pk.shape[0] - used < new_packets:
            old = self.pk.shape[0]
            grow = max(new_packets - (old - used), old // 2, 1024)
            rows = np.full((grow, PK_COLS), -1, dtype=np.int32)
            self.pk = np.concatenate([self.pk, rows])
        if self.cp.shape[0] >= 2**31 - 1 or self.pk.shape[0] >= 2**31 - 1:
            raise MemoryError("packet store exceeds int32 indexing")

    def live_rows(self):
        return np.flatnonzero(self.cp[:, KIND] != FREE_KIND)


@njit
def alloc(cp, ctr):
    r = ctr[FREE]
    if r < 0:
        raise RuntimeError("copy pool exhausted")
    ctr[FREE] = cp[r, NEXT]
    cp[r, PREV] = -1
    cp[r, NEXT] = -1
    cp[r, PPREV] = -1
    cp[r, PNEXT] = -1
    cp[r, SPREV] = -1
    cp[r, SNEXT] = -1
    cp[r, TOK] = 0
    ctr[LIVE] += 1
    return r


@njit
def release(cp, ctr, r):
    cp[r, KIND] = FREE_KIND
    cp[r, NEXT] = ctr[FREE]
    ctr[FREE] = r
    ctr[LIVE] -= 1


@njit
def new_packet(pk, ctr, t, src, dst):
    p = ctr[NPKT]
    ctr[NPKT] = p + 1
    ctr[ADMITTED] += 1
    pk[p, ADMIT] = t
    pk[p, SRC] = src
    pk[p, DST] = dst
    pk[p, DELIV] = -1
    pk[p, CHEAD] = -1
    return p


@njit
def chain_add(cp, pk, r, p):
    cp[r, PKT] = p
    h = pk[p, CHEAD]
    cp[r, PPREV] = -1
    cp[r, PNEXT] = h
    if h >= 0:
        cp[h, PPREV] = r
    pk[p, CHEAD] = r


@njit
def chain_remove(cp, pk, r):
    p = cp[r, PKT]
    a = cp[r, PPREV]
    b = cp[r, PNEXT]
    if a >= 0:
        cp[a, PNEXT] = b
    else:
        pk[p, CHEAD] = b
    if b >= 0:
        cp[b, PPREV] = a
    cp[r, PPREV] = -1
    cp[r, PNEXT] = -1


@njit
def find_copy(cp, pk, p, node):
    """Row of the copy of packet ``p`` held by ``node``, or -1."""
    r = pk[p, CHEAD]
    while r >= 0:
        if cp[r, NODE] == node:
            return r
        r = cp[r, PNEXT]
    return -1


@njit
def _link_tail(cp, qs, hplane, tplane, r, n, c):
    t = qs[tplane, n, c]
    cp[r, PREV] = t
    cp[r, NEXT] = -1
    if t >= 0:
        cp[t, NEXT] = r
    else:
        qs[hplane, n, c] = r
    qs[tplane, n, c] = r


@njit
def _unlink(cp, qs, hplane, tplane, r, n, c):
    a = cp[r, PREV]
    b = cp[r, NEXT]
    if a >= 0:
        cp[a, NEXT] = b
    else:
        qs[hplane, n, c] = b
    if b >= 0:
        cp[b, PREV] = a
    else:
        qs[tplane, n, c] = a
    cp[r, PREV] = -1
    cp[r, NEXT] = -1


@njit
def main_push(cp, qs, pk, ctr, r, n):
    p = cp[r, PKT]
    c = pk[p, DST]
    cp[r, NODE] = n
    cp[r, KIND] = ORIGINAL
    _link_tail(cp, qs, MHEAD, MTAIL, r, n, c)
    qs[QCNT, n, c] += 1
    ctr[TOTQ] += 1
    if pk[p, DELIV] >= 0:
        ctr[STALE] += 1


@njit
def main_insert_sorted(cp, qs, pk, ctr, r, n):
    """Insert keeping the queue ordered by packet id (oldest first)."""
    p = cp[r, PKT]
    c = pk[p, DST]
    t = qs[MTAIL, n, c]
    if t < 0 or cp[t, PKT] < p:
        main_push(cp, qs, pk, ctr, r, n)
        return
    cp[r, NODE] = n
    cp[r, KIND] = ORIGINAL
    s = qs[MHEAD, n, c]
    while cp[s, PKT] < p:
        s = cp[s, NEXT]
    a = cp[s, PREV]
    cp[r, PREV] = a
    cp[r, NEXT] = s
    cp[s, PREV] = r
    if a >= 0:
        cp[a, NEXT] = r
    else:
        qs[MHEAD, n, c] = r
    qs[QCNT, n, c] += 1
    ctr[TOTQ] += 1
    if pk[p, DELIV] >= 0:
        ctr[STALE] += 1


@njit
def main_unlink(cp, qs, pk, ctr, r):
    p = cp[r, PKT]
    n = cp[r, NODE]
    c = pk[p, DST]
    _unlink(cp, qs, MHEAD, MTAIL, r, n, c)
    qs[QCNT, n, c] -= 1
    ctr[TOTQ] -= 1
    if pk[p, DELIV] >= 0:
        ctr[STALE] -= 1


@njit
def dup_push(cp, qs, pk, ctr, r, n, kind):
    p = cp[r, PKT]
    c = pk[p, DST]
    cp[r, NODE] = n
    cp[r, KIND] = kind
    _link_tail(cp, qs, DHEAD, DTAIL, r, n, c)
    qs[DCNT, n, c] += 1
    ctr[TOTD] += 1


@njit
def dup_unlink(cp, qs, pk, ctr, r):
    p = cp[r, PKT]
    n = cp[r, NODE]
    c = pk[p, DST]
    _unlink(cp, qs, DHEAD, DTAIL, r, n, c)
    qs[DCNT, n, c] -= 1
    ctr[TOTD] -= 1


@njit
def unlink_any(cp, qs, pk, ctr, r):
    if cp[r, KIND] == ORIGINAL:
        main_unlink(cp, qs, pk, ctr, r)
    else:
        dup_unlink(cp, qs, pk, ctr, r)


@njit
def spray_insert(cp, sp, r, n):
    """Insert into node ``n``'s spray list, ordered by packet id."""
    p = cp[r, PKT]
    t = sp[STAIL, n]
    if t < 0 or cp[t, PKT] < p:
        cp[r, SPREV] = t
        cp[r, SNEXT] = -1
        if t >= 0:
            cp[t, SNEXT] = r
        else:
            sp[SHEAD, n] = r
        sp[STAIL, n] = r
        return
    s = sp[SHEAD, n]
    while cp[s, PKT] < p:
        s = cp[s, SNEXT]
    a = cp[s, SPREV]
    cp[r, SPREV] = a
    cp[r, SNEXT] = s
    cp[s, SPREV] = r
    if a >= 0:
        cp[a, SNEXT] = r
    else:
        sp[SHEAD, n] = r


@njit
def spray_unlink(cp, sp, r, n):
    a = cp[r, SPREV]
    b = cp[r, SNEXT]
    if a >= 0:
        cp[a, SNEXT] = b
    else:
        sp[SHEAD, n] = b
    if b >= 0:
        cp[b, SPREV] = a
    else:
        sp[STAIL, n] = a
    cp[r, SPREV] = -1
    cp[r, SNEXT] = -1


@njit
def destroy(cp, qs, pk, ctr, r):
    """Remove a stored copy from its queue and packet chain, then free the row."""
    unlink_any(cp, qs, pk, ctr, r)
    chain_remove(cp, pk, r)
    release(cp, ctr, r)
