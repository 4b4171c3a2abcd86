import os
import subprocess
import sys

import pytest

VARIANTS = ["RB", "RB-DA", "BWAR-IM", "BWAR-ID", "BWAR-TD", "SNW"]


def _cli(variant, *, disable):
    env = dict(os.environ, BWAR_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, "-m", "bwar.cli", "--variant", variant, "--cells", "5", "--nodes", "10",
           "--lambdas", "0.02,0.3", "--slots", "400", "--seed", "6", "--timeout", "4",
           "--random-tiebreak", "--workers", "1"]
    return subprocess.run(cmd, env=env, capture_output=True, check=True).stdout


@pytest.mark.parametrize("variant", VARIANTS)
def test_fallback_matches_compiled(variant):
    assert _cli(variant, disable=True) == _cli(variant, disable=False)


def test_flag_selects_backend():
    code = "from bwar._jit import backend_name; print(backend_name())"
    for flag, want in (("1", "python"), ("0", "numba")):
        env = dict(os.environ, BWAR_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == want
