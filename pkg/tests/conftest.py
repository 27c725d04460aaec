"""Shared fixtures and the acceptance-criteria summary hook."""

import matplotlib

matplotlib.use("Agg")  # before any pyplot import; tests never open windows

import pytest

from logpen import (
    PotentialSpec,
    Region,
    SplitParams,
    build_grid,
    build_penalty,
    gausson_reference,
)
from logpen.energy import ProblemContext

# Criterion results are collected here by tests/test_acceptance.py and
# rendered as one line per criterion at the end of the run.
_criterion_lines: list[tuple[int, str]] = []


def record_criterion(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    _criterion_lines.append((num, line))
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_criterion_lines):
        terminalreporter.line(line)


def make_constant_ctx(dim=1, h=0.05, half=8.0, v0=0.0, eps=1.0):
    """Constant-potential context with the region covering the whole box.

    The penalization is inactive (every cell center lies inside the open
    region), so the penalized and plain functionals coincide; this is the
    setting where the closed-form Gaussian profile is the exact solution.
    """
    grid = build_grid(dim, (-half,) * dim, (half,) * dim, h)
    pot = PotentialSpec(kind="constant", v0=v0)
    region = Region((-half,) * dim, (half,) * dim)
    penalty = build_penalty(SplitParams(0.1), region, eps, v0)
    return ProblemContext(grid, pot, eps, penalty)


@pytest.fixture(scope="session")
def const_ctx_1d():
    # 320 cells; coarse enough to keep the suite fast
    return make_constant_ctx(dim=1, h=0.05, half=8.0)


@pytest.fixture(scope="session")
def gausson_1d():
    return gausson_reference(1, 0.0)
