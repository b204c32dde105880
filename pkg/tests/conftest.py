import numpy as np
import pytest

from tpbs import scheme as tp
from tpbs.core import get_preset, make_rng


def seed_bytes(tag: str) -> bytes:
    return tag.encode().ljust(32, b"\0")[:32]


@pytest.fixture
def rng():
    return make_rng(seed_bytes("tests"), "rng")


@pytest.fixture(scope="session")
def toy():
    """(pp, msk, mdk, trapdoor) at the toy preset."""
    return tp.sim_setup(get_preset("toy"), make_rng(seed_bytes("toy"), "setup"))


@pytest.fixture(scope="session")
def compact():
    return tp.sim_setup(get_preset("compact"), make_rng(seed_bytes("compact"), "setup"))


def random_bits(rng, n):
    return rng.integers(0, 2, n).astype(np.uint8)


def honest_signature(pp, msk, rng, ident=None, policy=None):
    p = pp.params
    ident = random_bits(rng, p.l1) if ident is None else ident
    policy = random_bits(rng, p.l2) if policy is None else policy
    usk = tp.keygen(pp, msk, ident, [policy], rng)
    msg, pcw = tp.random_message_for(pp, policy, rng)
    return usk, msg, pcw, tp.sign_traced(pp, usk, msg, pcw, rng)


# ---------------------------------------------------------- acceptance log

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
