import numpy as np
import pytest

from bwar import Kind, Variant
from bwar import store as S
from bwar.core import Packet
from bwar.duplicates import (RemovalLedger, copies_of, flagged_encounter_resolution, ideal_purge,
                             maybe_duplicate, timeout_sweep)

from conftest import add_packet, make_sim, put

O, DUP, F = Kind.ORIGINAL, Kind.DUPLICATE, Kind.FLAGGED


def test_trigger_rules():
    pkt = Packet(7, 0, 1, 0)
    ev = maybe_duplicate("BWAR-ID", 2, 1, pkt, 0, 0)
    assert ev.packet == 7 and ev.creator == 2 and ev.kind_at_creator is F
    assert maybe_duplicate("BWAR-TD", 2, 1, pkt, 0, 0).kind_at_creator is F
    assert maybe_duplicate("BWAR-IM", 2, 1, pkt, 0, 0).kind_at_creator is O
    assert maybe_duplicate("BWAR-ID", 2, 1, pkt, 1, 0) is None
    assert maybe_duplicate("BWAR-ID", 2, 1, pkt, 0, 1) is None
    assert maybe_duplicate("BWAR-ID", 2, 1, pkt, 0, 0, target_room=False) is None
    assert maybe_duplicate("RB-DA", 2, 1, pkt, 0, 0) is None
    assert maybe_duplicate("SNW", 2, 1, pkt, 0, 0) is None


def test_larger_threshold_allows_more():
    assert maybe_duplicate("BWAR-ID", 0, 1, 3, 2, 1, q_th=3, d_max=2) is not None
    assert maybe_duplicate("BWAR-ID", 0, 1, 3, 3, 0, q_th=3, d_max=2) is None


def test_ideal_purge_counts_and_idempotence():
    sim = make_sim("BWAR-ID")
    p = add_packet(sim, 0)
    put(sim, p, 2, S.ORIGINAL)
    put(sim, p, 3, S.DUPLICATE)
    put(sim, p, 4, S.FLAGGED)
    assert ideal_purge(sim, p) == RemovalLedger(1, 2, 0)
    assert copies_of(sim, p) == []
    assert ideal_purge(sim, p) == RemovalLedger(0, 0, 0)
    Q, D = sim.queue_counts()
    assert Q.sum() == 0 and D.sum() == 0


def test_ledger_arithmetic():
    a = RemovalLedger(1, 2, 3) + RemovalLedger(4, 5, 6)
    assert a == RemovalLedger(5, 7, 9) and a.total == 21


@pytest.mark.parametrize("age, survives", [(24, True), (25, False), (26, False)])
def test_timeout_boundary(sim_td, age, survives):
    P = 25
    p = add_packet(sim_td, 0, admit=100)
    put(sim_td, p, 3, S.DUPLICATE)
    delta = timeout_sweep(sim_td, 100 + age, P)
    assert delta.expired == (0 if survives else 1)
    assert copies_of(sim_td, p) == ([(3, DUP)] if survives else [])


def test_flagged_copy_ignores_timeout(sim_td):
    p = add_packet(sim_td, 0, admit=0)
    put(sim_td, p, 2, S.FLAGGED)
    put(sim_td, p, 4, S.DUPLICATE)
    assert timeout_sweep(sim_td, 50, 25).expired == 1
    assert copies_of(sim_td, p) == [(2, F)]


def test_flagged_resolution_after_delivery(sim_td):
    p = add_packet(sim_td, 0)
    put(sim_td, p, 2, S.FLAGGED)
    sim_td.store.pk[p, S.DELIV] = 5
    sim_td.placement = np.zeros(6, dtype=np.int64)
    assert flagged_encounter_resolution(sim_td, 2, 1) == (1, 0)
    assert copies_of(sim_td, p) == []
    assert sim_td.counter(S.ACKS) == 1


def test_flagged_resolution_before_delivery(sim_td):
    p = add_packet(sim_td, 0)
    q = add_packet(sim_td, 4, dst=1)
    put(sim_td, q, 2, S.ORIGINAL)
    put(sim_td, p, 2, S.FLAGGED)
    sim_td.placement = np.zeros(6, dtype=np.int64)
    assert flagged_encounter_resolution(sim_td, 2, 1) == (0, 1)
    assert copies_of(sim_td, p) == [(2, O)]
    # returned copy joins the tail of the main queue
    assert [x.id for x in sim_td.node_state(2).main_queues[1]] == [q, p]


def test_flagged_resolution_needs_encounter(sim_td):
    p = add_packet(sim_td, 0)
    put(sim_td, p, 2, S.FLAGGED)
    sim_td.placement = np.array([0, 1, 0, 0, 0, 0])
    assert flagged_encounter_resolution(sim_td, 2, 1) == (0, 0)
    assert copies_of(sim_td, p) == [(2, F)]


# engine-level duplication, scripted placements; nodes 0..5, cells 0 and 1

def _lone_packet(variant, cells=2, **kw):
    sim = make_sim(variant, cells=cells, **kw)
    p = add_packet(sim, 0)
    put(sim, p, 0, S.ORIGINAL)
    return sim, p


def test_im_keeps_original_and_sends_duplicate():
    sim, p = _lone_packet("BWAR-IM")
    sim.script([[0, 1, 0, 1, 1, 1]]).step()
    assert copies_of(sim, p) == [(0, O), (2, DUP)]
    assert sim.counter(S.DUPEVENTS) == 1 and sim.counter(S.DUPTX) == 0


@pytest.mark.parametrize("variant", ["BWAR-ID", "BWAR-TD"])
def test_id_td_flag_the_sender_copy(variant):
    sim, p = _lone_packet(variant)
    sim.script([[0, 1, 0, 1, 1, 1]]).step()
    assert copies_of(sim, p) == [(0, F), (2, O)]


@pytest.mark.parametrize("variant", ["RB", "RB-DA"])
def test_plain_backpressure_moves_the_packet(variant):
    sim, p = _lone_packet(variant)
    sim.script([[0, 1, 0, 1, 1, 1]]).step()
    assert copies_of(sim, p) == [(2, O)]


def test_no_duplication_when_queue_stays_busy():
    sim, p = _lone_packet("BWAR-ID")
    q = add_packet(sim, 0)
    put(sim, q, 0, S.ORIGINAL)
    sim.script([[0, 1, 0, 1, 1, 1]]).step()
    assert copies_of(sim, p) == [(2, O)]
    assert copies_of(sim, q) == [(0, O)]
    assert sim.counter(S.DUPEVENTS) == 0


def test_arriving_original_supersedes_flagged_copy():
    sim, p = _lone_packet("BWAR-ID")
    sim.script([[0, 1, 0, 1, 1, 1], [0, 1, 0, 1, 1, 1]]).advance(2)
    # slot 2: 2 holds the original, 0 the flagged copy; pushing back overwrites it
    assert copies_of(sim, p) == [(0, O), (2, F)]
    Q, D = sim.queue_counts()
    assert D.max() <= 1


def test_duplicate_served_only_from_idle_main_queue():
    sim, p = _lone_packet("BWAR-IM")
    sim.script([[0, 1, 0, 1, 1, 1], [0, 1, 1, 1, 1, 1], [1, 0, 1, 0, 1, 1]]).advance(3)
    # slot 2: 0 and 1 meet, delivery purges every copy
    assert copies_of(sim, p) == []
    assert sim.counter(S.DELIVERED) == 1
    sim, p = _lone_packet("BWAR-IM", cells=3)
    sim.script([[0, 1, 0, 1, 1, 1], [1, 2, 0, 0, 2, 2]]).advance(2)
    # slot 2: node 2 only holds a duplicate and meets 3
    assert copies_of(sim, p) == [(0, O), (2, DUP), (3, DUP)]
    assert sim.counter(S.DUPTX) == 1


def test_td_flagged_returns_and_delivers_on_encounter():
    sim, p = _lone_packet("BWAR-TD")
    sim.script([[0, 1, 0, 1, 1, 1], [0, 0, 0, 1, 1, 1]]).advance(2)
    # the flagged copy rejoins 0's main queue and wins the lexicographic tie against 2
    assert sim.counter(S.DELIVERED) == 1
    assert sim.store.pk[p, S.DELIV] == 1
    assert copies_of(sim, p) == [(2, O)]


def test_td_flagged_deleted_by_ack_after_delivery():
    sim, p = _lone_packet("BWAR-TD", timeout=100)
    sim.script([[0, 1, 0, 1, 1, 1], [1, 0, 0, 1, 1, 1], [0, 0, 1, 1, 1, 1]]).advance(3)
    # slot 2: 2 delivers while 0 serves its flagged copy to 3 as a plain duplicate
    assert sim.counter(S.DELIVERED) == 1
    assert sim.counter(S.ACKS) == 1
    assert all(k is DUP for _, k in copies_of(sim, p))


def test_td_duplicate_expires_after_timeout():
    P = 3
    sim = make_sim("BWAR-TD", cells=3, timeout=P)
    rows = [[2] * 6, [0, 1, 0, 1, 1, 1]] + [[0, 1, 2, 1, 0, 1]] * 3
    arr = [[1, 0, 0, 0, 0, 0]] + [[0] * 6] * 4  # one packet at 0 for 1, admitted at slot 0
    sim.script(rows, arr).advance(3)
    # slot 1: 0 -> 2 flags at 0; slot 2: 0 serves its flagged copy to 4
    assert copies_of(sim, 0) == [(0, F), (2, O), (4, DUP)]
    sim.advance(1)  # end of slot 3, age P
    assert copies_of(sim, 0) == [(0, F), (2, O)]
    assert sim.counter(S.TIMEOUTS) == 1
