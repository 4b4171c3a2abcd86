"""Duplicate creation and the three removal regimes.

IM and ID remove every copy of a packet at the end of the slot in which any
copy reaches the destination. TD removes unflagged duplicates once the packet
is ``P`` slots old, and resolves flagged originals only through a direct
encounter with the destination.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import store as S
from ._jit import njit
from .core import Kind, Variant

IM = 2
ID = 3
TD = 4


@dataclass(frozen=True)
class DuplicationEvent:
    packet: int
    creator: int
    slot: int
    kind_at_creator: Kind  # what the creator holds after the event


@dataclass
class RemovalLedger:
    removed_originals: int = 0  # main-queue copies of delivered packets
    removed_duplicates: int = 0  # duplicate-buffer copies of delivered packets
    expired: int = 0  # duplicates dropped by the timeout

    def __add__(self, other: "RemovalLedger") -> "RemovalLedger":
        return RemovalLedger(
            self.removed_originals + other.removed_originals,
            self.removed_duplicates + other.removed_duplicates,
            self.expired + other.expired,
        )

    @property
    def total(self) -> int:
        return self.removed_originals + self.removed_duplicates + self.expired


@njit
def duplication_triggered(post_q, post_d, q_th, d_max):
    """Low-occupancy rule: the sender's queue fell below q_th and its buffer has room.

    With q_th = d_max = 1 this is exactly ``post_q + post_d == 0``.
    """
    return post_q < q_th and post_d < d_max


def maybe_duplicate(variant, sender, commodity, packet, post_tx_q, post_tx_d,
                    q_th=1, d_max=1, *, target_room=True, slot=0):
    """Decide whether transmitting ``packet`` from ``sender`` creates a duplicate.

    ``target_room`` is whether the buffer that would take the copy has space:
    the receiver's buffer for BWAR-IM, the sender's own for BWAR-ID/TD.
    """
    variant = Variant.parse(variant)
    if not variant.is_bwar:
        return None
    if not duplication_triggered(post_tx_q, post_tx_d, q_th, d_max) or not target_room:
        return None
    pid = packet.id if hasattr(packet, "id") else int(packet)
    kind = Kind.ORIGINAL if variant is Variant.BWAR_IM else Kind.FLAGGED
    return DuplicationEvent(pid, int(sender), int(slot), kind)


@njit
def purge_packet(cp, qs, pk, ctr, p):
    """Remove every copy of packet ``p``; returns (originals, duplicates) removed."""
    n_main = 0
    n_dup = 0
    r = pk[p, S.CHEAD]
    while r >= 0:
        nxt = cp[r, S.PNEXT]
        if cp[r, S.KIND] == S.ORIGINAL:
            n_main += 1
        else:
            n_dup += 1
        S.destroy(cp, qs, pk, ctr, r)
        r = nxt
    ctr[S.REM_MAIN] += n_main
    ctr[S.REM_DUP] += n_dup
    return n_main, n_dup


@njit
def expire_packet(cp, qs, pk, ctr, p):
    """Drop the unflagged duplicates of packet ``p``."""
    n = 0
    r = pk[p, S.CHEAD]
    while r >= 0:
        nxt = cp[r, S.PNEXT]
        if cp[r, S.KIND] == S.DUPLICATE:
            S.destroy(cp, qs, pk, ctr, r)
            n += 1
        r = nxt
    ctr[S.TIMEOUTS] += n
    return n


@njit
def expire_range(cp, qs, pk, ctr, p_lo, p_hi):
    n = 0
    for p in range(p_lo, p_hi):
        if pk[p, S.CHEAD] >= 0:
            n += expire_packet(cp, qs, pk, ctr, p)
    return n


@njit
def sweep_all(cp, qs, pk, ctr, t, P):
    """Full scan: drop every unflagged duplicate whose packet is at least ``P`` slots old."""
    n = 0
    for r in range(cp.shape[0]):
        if cp[r, S.KIND] == S.DUPLICATE:
            p = cp[r, S.PKT]
            if t - pk[p, S.ADMIT] >= P:
                S.destroy(cp, qs, pk, ctr, r)
                n += 1
    ctr[S.TIMEOUTS] += n
    return n


@njit
def resolve_flagged(cp, qs, pk, ctr, holder, dest):
    """Flagged originals for ``dest`` held by ``holder`` while the two share a cell.

    Already delivered: deleted on the direct acknowledgement. Otherwise moved
    back to the holder's main queue. Returns (deleted, returned).
    """
    deleted = 0
    returned = 0
    r = qs[S.DHEAD, holder, dest]
    while r >= 0:
        nxt = cp[r, S.NEXT]
        if cp[r, S.KIND] == S.FLAGGED:
            p = cp[r, S.PKT]
            if pk[p, S.DELIV] >= 0:
                S.destroy(cp, qs, pk, ctr, r)
                deleted += 1
            else:
                S.dup_unlink(cp, qs, pk, ctr, r)
                S.main_push(cp, qs, pk, ctr, r, holder)
                returned += 1
        r = nxt
    ctr[S.ACKS] += deleted
    ctr[S.REM_DUP] += deleted
    return deleted, returned


@njit
def snw_ack_head(cp, qs, pk, ctr, sp, holder, dest):
    """Spray and Wait: drop already-delivered copies at the head of ``holder``'s queue for ``dest``."""
    n = 0
    r = qs[S.MHEAD, holder, dest]
    while r >= 0 and pk[cp[r, S.PKT], S.DELIV] >= 0:
        nxt = cp[r, S.NEXT]
        if cp[r, S.TOK] > 1:
            S.spray_unlink(cp, sp, r, holder)
        S.destroy(cp, qs, pk, ctr, r)
        n += 1
        r = nxt
    ctr[S.ACKS] += n
    ctr[S.REM_MAIN] += n
    return n


def _ledger_delta(ctr, before):
    return RemovalLedger(
        int(ctr[S.REM_MAIN] - before[S.REM_MAIN]),
        int(ctr[S.REM_DUP] - before[S.REM_DUP]),
        int(ctr[S.TIMEOUTS] - before[S.TIMEOUTS]),
    )


def ideal_purge(sim, packet_id: int) -> RemovalLedger:
    """Remove every copy of a delivered packet from the whole network."""
    st = sim.store
    before = st.ctr.copy()
    purge_packet(st.cp, st.qs, st.pk, st.ctr, int(packet_id))
    return _ledger_delta(st.ctr, before)


def timeout_sweep(sim, t: int, P: int) -> RemovalLedger:
    """Drop every unflagged duplicate with ``t - admit_time >= P``."""
    st = sim.store
    before = st.ctr.copy()
    sweep_all(st.cp, st.qs, st.pk, st.ctr, int(t), int(P))
    return _ledger_delta(st.ctr, before)


def flagged_encounter_resolution(sim, holder: int, destination: int) -> tuple[int, int]:
    """Apply the direct-ack rule if ``holder`` and ``destination`` share a cell.

    Returns ``(deleted, returned)``; ``(0, 0)`` when they are apart.
    """
    cell_of = sim.placement
    if cell_of is None or cell_of[holder] != cell_of[destination]:
        return 0, 0
    st = sim.store
    d, r = resolve_flagged(st.cp, st.qs, st.pk, st.ctr, int(holder), int(destination))
    return int(d), int(r)


def copies_of(sim, packet_id: int) -> list[tuple[int, Kind]]:
    """(node, kind) of every stored copy of a packet."""
    st = sim.store
    out = []
    r = int(st.pk[packet_id, S.CHEAD])
    while r >= 0:
        out.append((int(st.cp[r, S.NODE]), Kind(int(st.cp[r, S.KIND]))))
        r = int(st.cp[r, S.PNEXT])
    return sorted(out)


__all__ = [
    "DuplicationEvent", "RemovalLedger", "duplication_triggered", "maybe_duplicate",
    "ideal_purge", "timeout_sweep", "flagged_encounter_resolution", "copies_of",
]
