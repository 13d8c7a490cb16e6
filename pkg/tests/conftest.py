from pathlib import Path

import numpy as np
import pytest

from reflexia import fixtures
from reflexia.model import as_black_box, build_model

DATA = Path(__file__).resolve().parents[1] / "src" / "reflexia" / "data"
CONFIGS = DATA / "configs"

POSITIVE_PAIRS = {"so3": fixtures.so3_pair, "sl2": fixtures.sl2_pair}


def series_exp(A, terms=30):
    """Truncated power series; the independent oracle for mat_exp."""
    A = np.asarray(A, dtype=float)
    out = np.eye(A.shape[-1])
    term = np.eye(A.shape[-1])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


@pytest.fixture(scope="session")
def models():
    """Homogeneous models of the two positive fixtures at rho = 0.3."""
    return {name: build_model(*pair()) for name, pair in POSITIVE_PAIRS.items()}


@pytest.fixture(scope="session")
def wide_models():
    """Same pairs at rho = 0.6, room for flows of length 2t = 0.3."""
    return {name: build_model(*pair(), trust_radius=0.6) for name, pair in POSITIVE_PAIRS.items()}


@pytest.fixture(scope="session")
def black_boxes(models):
    return {name: as_black_box(m) for name, m in models.items()}


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    """One line per criterion; lettered parts are folded into their number."""
    if not ACCEPTANCE:
        return
    grouped = {}
    for key in sorted(ACCEPTANCE):
        grouped.setdefault(int(key.rstrip("ab")), []).append(key)
    terminalreporter.section("acceptance criteria")
    for number in sorted(grouped):
        parts = grouped[number]
        ok = all(ACCEPTANCE[k][0] for k in parts)
        if len(parts) == 1:
            detail = ACCEPTANCE[parts[0]][1]
        else:
            detail = "; ".join(f"({k[-1]}) {'pass' if ACCEPTANCE[k][0] else 'fail'}: "
                               f"{ACCEPTANCE[k][1]}" for k in parts)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
