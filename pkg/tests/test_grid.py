import math

import numpy as np
import pytest

from ates_mpc import (GeometryError, ParameterError, build_grid,
                      effective_heat_capacity, radial_velocity, split_state,
                      stack_state, validate_state)


def test_standard_grid_spacing_and_cells():
    grid = build_grid(0.4, 60.0, 20, 38.0)
    assert grid.dr == pytest.approx(2.98)
    assert grid.nu == 20
    assert grid.edges[0] == 0.4
    assert grid.edges[-1] == 60.0
    assert np.all(np.diff(grid.edges) > 0)


def test_single_cell_geometry():
    grid = build_grid(1.0, 2.0, 1, 1.0)
    assert grid.midpoints[0] == pytest.approx(1.5)
    assert grid.volumes[0] == pytest.approx(math.pi * 3.0)


def test_volume_closure():
    grid = build_grid(0.4, 60.0, 20, 38.0)
    total = math.pi * (60.0**2 - 0.4**2) * 38.0
    assert grid.volumes.sum() == pytest.approx(total, rel=1e-12)
    assert total == pytest.approx(4.2975e5, rel=1e-3)


def test_midpoints_are_edge_means():
    grid = build_grid(0.4, 60.0, 20, 38.0)
    assert np.allclose(grid.midpoints, 0.5 * (grid.edges[:-1] + grid.edges[1:]))


def test_n_states():
    assert build_grid(0.4, 60.0, 20, 38.0).n_states == 42


@pytest.mark.parametrize("args", [(0.0, 60.0, 20, 38.0), (60.0, 0.4, 20, 38.0),
                                  (0.4, 60.0, 0, 38.0), (0.4, 60.0, 20, 0.0)])
def test_bad_geometry_rejected(args):
    with pytest.raises(GeometryError):
        build_grid(*args)


def test_effective_heat_capacity_mix():
    assert effective_heat_capacity(0.3, 4.2e6, 4.575e6) == pytest.approx(4.4625e6)


def test_effective_heat_capacity_limits():
    assert effective_heat_capacity(1.0, 4.2e6, 99.0) == 4.2e6
    assert effective_heat_capacity(0.0, 99.0, 4.575e6) == 4.575e6


def test_effective_heat_capacity_bad_porosity():
    with pytest.raises(ParameterError):
        effective_heat_capacity(1.5, 4.2e6, 4.575e6)


def test_radial_velocity_value():
    assert radial_velocity(0.0277, 0.4, 38.0) == pytest.approx(2.9004e-4, rel=1e-4)


def test_radial_velocity_zero_and_odd():
    assert radial_velocity(0.0, 3.0, 38.0) == 0.0
    assert radial_velocity(-0.0277, 0.4, 38.0) == pytest.approx(-2.9004e-4, rel=1e-4)
    assert radial_velocity(-0.0277, 0.4, 38.0) == -radial_velocity(0.0277, 0.4, 38.0)


def test_radial_velocity_decreasing_in_r():
    radii = np.linspace(0.4, 60.0, 50)
    v = [radial_velocity(0.0277, r, 38.0) for r in radii]
    assert np.all(np.diff(v) < 0)


def test_radial_velocity_singularity():
    with pytest.raises(GeometryError):
        radial_velocity(0.1, 0.0, 38.0)


def test_stack_split_round_trip():
    warm = np.linspace(285.0, 290.0, 21)
    cold = np.linspace(280.0, 284.0, 21)
    x = stack_state(warm, cold)
    w, c = split_state(x)
    assert np.array_equal(w, warm)
    assert np.array_equal(c, cold)


def test_validate_state():
    x = np.full(42, 284.85)
    assert validate_state(x, 20) is not None
    with pytest.raises(ParameterError):
        validate_state(x[:-1], 20)
    bad = x.copy()
    bad[3] = np.nan
    with pytest.raises(ParameterError):
        validate_state(bad, 20)
