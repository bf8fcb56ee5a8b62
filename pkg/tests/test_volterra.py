import math

import numpy as np
import pytest

from sgd_volterra.spectral import InvalidParameterError, SpectralMeasure, mp_measure, point_mass
from sgd_volterra.volterra import (GridTooCoarseError, VolterraGrid, forcing_z, kernel_K, read_solution,
                                   solve, write_solution)

from oracles import delta1_psi, mp_integral

DELTA0 = SpectralMeasure(atom_zero_mass=1.0, name="delta(0)")


def test_forcing_at_zero():
    mu = mp_measure(1.5)
    assert forcing_z(mu, 2.0, 0.6, 1.5, 0.3, 0.0) == pytest.approx(1.0 + 0.3, abs=1e-13)


def test_forcing_delta1():
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(forcing_z(point_mass(1.0), 1.0, 0.0, 1.0, 0.4, t), 0.5 * np.exp(-0.8 * t),
                               rtol=1e-15)


def test_forcing_mp2_noise_limit():
    # the atom of mass 1/2 at zero cancels 1 - r
    assert forcing_z(mp_measure(2.0), 0.0, 1.0, 2.0, 0.5, 1e4) == pytest.approx(0.0, abs=1e-12)


def test_kernel_examples():
    t = np.linspace(0, 2, 5)
    np.testing.assert_array_equal(kernel_K(DELTA0, 1.0, 0.5, t), 0.0)
    np.testing.assert_allclose(kernel_K(point_mass(1.0), 2.0, 0.5, t), 0.25 * 2.0 * np.exp(-t), rtol=1e-15)


@pytest.mark.parametrize("r", [0.5, 1.5])
def test_kernel_mass_identity(r):
    # int_0^inf K dt = (gamma r / 2) m1, integrated in closed form per atom/node
    gamma = 0.4
    mu = mp_measure(r)
    total = gamma * gamma * r * mp_integral(lambda x: x * x / (2 * gamma * x) if x > 0 else 0.0, r)
    assert total == pytest.approx(gamma * r / 2 * mu.moment(1), rel=1e-9)


def test_delta0_gives_forcing():
    sol = solve(DELTA0, 1.0, 1.0, 0.5, 0.7, VolterraGrid(2.0, 0.01))
    np.testing.assert_allclose(sol.psi, forcing_z(DELTA0, 1.0, 1.0, 0.5, 0.7, sol.t), rtol=1e-15)


@pytest.mark.parametrize("gamma,r", [(0.5, 1.0), (1.0, 1.0), (0.3, 2.0)])
def test_delta1_oracle_and_second_order(gamma, r):
    errs = []
    for dt in (2e-3, 1e-3):
        sol = solve(point_mass(1.0), 1.0, 0.0, r, gamma, VolterraGrid(5.0, dt))
        ref = delta1_psi(gamma, r, sol.t)
        errs.append(np.max(np.abs(sol.psi - ref) / ref))
    assert errs[1] < 1e-5
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_initial_value_and_positivity():
    mu = mp_measure(1.2)
    sol = solve(mu, 1.0, 0.5, 1.2, 0.8, VolterraGrid(5.0, 1e-2))
    assert sol.psi[0] == pytest.approx(0.5 + 0.25, abs=1e-13)  # R/2 + R_tilde/2
    assert np.all(sol.psi >= 0)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarseError):
        solve(point_mass(100.0), 1.0, 0.0, 1.0, 1.0, VolterraGrid(1.0, 0.5))


def test_bad_inputs():
    with pytest.raises(InvalidParameterError):
        VolterraGrid(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        VolterraGrid(1e4, 1e-4)
    with pytest.raises(InvalidParameterError):
        solve(mp_measure(1), 1, 0, 1, -1.0)


def test_long_time_limit_improves():
    mu = mp_measure(0.5)
    gaps = [abs(solve(mu, 1.0, 1.0, 0.5, 1.0, VolterraGrid(T, 1e-2)).psi[-1] - 1 / 3) for T in (5, 10, 20)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_divergent_flag():
    mu = mp_measure(1.0)
    sol = solve(mu, 1.0, 0.0, 1.0, 2.1, VolterraGrid(1.0, 1e-2))
    assert sol.divergent and math.isinf(sol.psi_inf)


def test_csv_roundtrip(tmp_path):
    sol = solve(mp_measure(1.5), 1.0, 0.2, 1.5, 0.5, VolterraGrid(1.0, 0.05))
    path = write_solution(sol, tmp_path / "volterra.csv")
    assert path.read_text().splitlines()[0] == "t,psi"
    back = read_solution(path)
    np.testing.assert_array_equal(back.psi, sol.psi)
    assert back.psi_inf == sol.psi_inf
    assert back.params["gamma"] == 0.5
