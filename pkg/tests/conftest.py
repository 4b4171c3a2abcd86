import numpy as np
import pytest
from hypothesis import settings

from bwar import SimConfig, Simulation
from bwar import store as S

# first calls pay the JIT compile
settings.register_profile("bwar", deadline=None)
settings.load_profile("bwar")


def make_sim(variant="BWAR-TD", nodes=6, cells=1, **kw):
    kw.setdefault("slots", 1000)
    cfg = SimConfig(cells, nodes, 0.0, variant, **kw)
    sim = Simulation(cfg)
    sim.store.ensure(256, 256)
    return sim


def add_packet(sim, src, admit=0, dst=None):
    st = sim.store
    dst = src ^ 1 if dst is None else dst
    return int(S.new_packet(st.pk, st.ctr, admit, src, dst))


def put(sim, pid, node, kind=S.ORIGINAL):
    """Store a copy of ``pid`` at ``node``; returns the pool row."""
    st = sim.store
    r = S.alloc(st.cp, st.ctr)
    S.chain_add(st.cp, st.pk, r, pid)
    if kind == S.ORIGINAL:
        S.main_push(st.cp, st.qs, st.pk, st.ctr, r, node)
    else:
        S.dup_push(st.cp, st.qs, st.pk, st.ctr, r, node, kind)
    return int(r)


@pytest.fixture
def sim_td():
    return make_sim("BWAR-TD")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
_ACCEPT = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPT] = []
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")


@pytest.fixture
def record_criterion(request):
    def rec(num, title, ok, detail):
        line = f"criterion {num:>2}  {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        request.config.stash[_ACCEPT].append((num, line))
        print(line)
        return ok
    return rec


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
