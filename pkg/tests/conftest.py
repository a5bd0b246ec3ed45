import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kstab.io import load_family  # noqa: E402
from kstab.kfun import PLConcave  # noqa: E402

GALLERY = ["quadric_blowup", "reflexive_triangle", "offcenter_quadrilateral", "centered_square"]

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def family(name):
    return load_family(f"gallery:{name}")[0]


def datum(name, s=None, chi=None):
    return family(name).instantiate(s, chi)


def random_pl(rng: random.Random, r: int = 2, lo: int = 2, hi: int = 5, bound: int = 10) -> PLConcave:
    def q():
        return Fraction(rng.randint(-bound, bound), rng.randint(1, 4))

    return PLConcave(tuple((tuple(q() for _ in range(r)), q()) for _ in range(rng.randint(lo, hi))))


@pytest.fixture(scope="session")
def quadric():
    return datum("quadric_blowup", Fraction(2))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
