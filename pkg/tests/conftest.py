"""Shared fixtures: cached meshes and operators, hypothesis profile."""

from __future__ import annotations

import math
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from curvatura.discretize import AssemblyConfig, assemble, mesh_patch
from curvatura.spaceform import SpaceForm, ball_geometry
from curvatura.surface.catalog import cap_in_ball

settings.register_profile(
    "curvatura",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("curvatura")


@lru_cache(maxsize=None)
def cap_ops(c: float, R: float, r: float, resolution: int, theta: float = math.pi / 2):
    """Mesh and assembled operators of a cap in a ball (cached across tests)."""
    sf = SpaceForm(c)
    patch = cap_in_ball(sf, R, r, theta)
    mesh = mesh_patch(patch, resolution)
    ops = assemble(mesh, sf, AssemblyConfig(theta=theta, support=ball_geometry(sf, R)))
    return ops


@pytest.fixture(scope="session")
def unit_cap_ops():
    return cap_ops(0.0, 1.0, 1.0, 32)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
