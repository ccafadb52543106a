import os
from pathlib import Path

import numpy as np
import pytest

from incfm.fm import SparseVector, fm_init

ROOT = Path(__file__).resolve().parents[1]
ML100K_DIR = Path(os.environ.get("INCFM_ML100K_DIR", ROOT / "data" / "ml-100k"))

# (criterion number, title, passed, detail) lines collected by the acceptance tests
ACCEPTANCE_LINES = []


def ml100k_available():
    return all((ML100K_DIR / name).exists() for name in ("u.data", "u.user", "u.item"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ml100k_dir():
    if not ml100k_available():
        pytest.skip(f"MovieLens 100k files not found in {ML100K_DIR} "
                    "(see scripts/materialize_ml100k.py)")
    return ML100K_DIR


def random_fm(rng, d=None, k=None, sigma=0.3):
    """Random model with nonzero bias/weights plus a random sparse input."""
    d = int(rng.integers(1, 21)) if d is None else d
    k = int(rng.integers(1, 9)) if k is None else k
    model = fm_init(d, k, 0.01, (0.1, 0.2, rng.uniform(0, 0.5, k)), sigma, int(rng.integers(1000)))
    model.w0 = float(rng.normal())
    model.w = rng.normal(size=d)
    nnz = int(rng.integers(1, d + 1))
    idx = np.sort(rng.choice(d, size=nnz, replace=False))
    return model, SparseVector(d, idx, rng.uniform(-1.5, 1.5, size=nnz))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {status}: {title} | {detail}")
