import re

import numpy as np
import pytest

from qnls.grid import RadialGrid, UniformGrid
from qnls.fields import pair_from_arrays
from qnls.ground_state import petviashvili_solve, solve_periodic_profile


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", nodeid)
            if m and getattr(rep, "when", "call") == "call":
                rows.append((int(m.group(1)), verdict, m.group(2)))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for num, verdict, label in sorted(rows):
            terminalreporter.write_line(f"criterion {num:02d} {verdict}  {label}")


@pytest.fixture(scope="session")
def gs_fine():
    """Acceptance-resolution 5-D ground state (m = 2048, r_max = 30)."""
    return petviashvili_solve(RadialGrid(2048, 30.0), kappa=0.5, tol=1e-10)


@pytest.fixture(scope="session")
def gs_mid():
    """Cheaper converged ground state for tests that only need constants."""
    return petviashvili_solve(RadialGrid(1024, 24.0), kappa=0.5, tol=1e-8)


@pytest.fixture(scope="session")
def soliton_1d():
    grid = UniformGrid(1, 256, 40.0)
    return solve_periodic_profile(grid, kappa=0.5, tol=1e-12)


@pytest.fixture(scope="session")
def soliton_2d():
    grid = UniformGrid(2, 64, 16.0)
    return solve_periodic_profile(grid, kappa=0.5, tol=1e-12)


def random_envelope_pair(grid, rng, kappa=0.5, nmodes=6, amp=1.0, sigma=None, kmax=5):
    """Random band-limited pair under a Gaussian envelope that vanishes at
    the box edge (so boosts by arbitrary xi stay spectrally clean)."""
    if sigma is None:
        sigma = grid.L / 16.0
    c = grid.L / 2.0
    coords = grid.coords()
    env = np.exp(-sum((x - c) ** 2 for x in coords) / (2.0 * sigma**2))

    def one():
        out = np.zeros(grid.shape, dtype=complex)
        for _ in range(nmodes):
            ks = 2.0 * np.pi * rng.integers(-kmax, kmax + 1, size=grid.d) / grid.L
            phase = sum(k * x for k, x in zip(ks, coords))
            out += (rng.normal() + 1j * rng.normal()) * np.exp(1j * phase)
        return amp * env * out

    return pair_from_arrays(grid, one(), one(), kappa)


def random_radial_pair(grid, rng, kappa=0.5, amp_scale=1.0):
    """Random smooth decaying radial pair on a RadialGrid."""
    r = grid.nodes()
    wu = rng.uniform(0.5, 3.0)
    wv = rng.uniform(0.5, 3.0)
    u = amp_scale * rng.uniform(0.2, 2.0) * np.exp(-((r / wu) ** 2)) * (
        1.0 + rng.uniform(-0.5, 0.5) * np.cos(rng.uniform(1.0, 3.0) * r)
    )
    v = amp_scale * rng.uniform(0.2, 2.0) * np.exp(-((r / wv) ** 2)) * (
        1.0 + rng.uniform(-0.5, 0.5) * np.sin(rng.uniform(1.0, 3.0) * r)
    )
    return pair_from_arrays(grid, u.astype(complex), v.astype(complex), kappa)
