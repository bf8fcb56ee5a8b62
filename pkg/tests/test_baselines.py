import math

import numpy as np
import pytest

from sgd_volterra.baselines import DiffusionConfig, run_sde, run_sme, sme_covariance, sme_noise
from sgd_volterra.datagen import Isotropic, gen_instance, instance_from_matrix
from sgd_volterra.sgd import f_value
from sgd_volterra.spectral import InvalidParameterError

from oracles import gradient_flow_f


def euler_gf(inst, gamma, dt, steps):
    x = inst.x0.copy()
    out = [f_value(inst, x)]
    for _ in range(steps):
        x = x - gamma * dt * inst.A.T @ (inst.A @ x - inst.b) / inst.n
        out.append(f_value(inst, x))
    return np.array(out)


@pytest.fixture(scope="module")
def inst():
    return gen_instance(Isotropic(40, 20), 1.0, 0.3, seed=2)


def test_sde_without_noise_is_euler_gradient_flow(inst):
    cfg = DiffusionConfig(gamma=0.7, dt=1e-2, epochs=1.0, sigma2=0.0, record_every=1e-2)
    tr = run_sde(inst, cfg)
    np.testing.assert_allclose(tr.values, euler_gf(inst, 0.7, 1e-2, 100), rtol=1e-12)


def test_sme_noise_vanishes_for_identical_samples():
    # equal rows and targets: every per-sample gradient equals the mean
    A = np.tile(np.array([[1.0, -2.0, 0.5]]), (6, 1))
    base = instance_from_matrix(A, 1.0, 0.0, seed=0)
    cfg = DiffusionConfig(gamma=0.9, dt=1e-2, epochs=0.5, record_every=1e-2)
    tr = run_sme(base, cfg)
    np.testing.assert_allclose(tr.values, euler_gf(base, 0.9, 1e-2, 50), rtol=1e-10, atol=1e-15)


def test_gradient_flow_discretisation_is_first_order(inst):
    errs = []
    for dt in (1e-2, 5e-3):
        tr = run_sde(inst, DiffusionConfig(gamma=0.7, dt=dt, epochs=2.0, sigma2=0.0, record_every=0.5))
        errs.append(np.max(np.abs(tr.values - gradient_flow_f(inst.A, inst.b, inst.x0, 0.7, tr.times))))
    assert errs[1] < errs[0] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)


def test_sme_covariance_by_hand():
    A = np.array([[1.0], [2.0]])
    res = np.array([1.0, 3.0])
    # per-sample gradients 1 and 6, mean 3.5
    assert sme_covariance(A, res)[0, 0] == pytest.approx(6.25)


def test_sme_noise_has_the_covariance():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((7, 3))
    res = rng.standard_normal(7)
    # sme_noise is linear in xi: its matrix L must satisfy L L^T = Sigma
    L = np.column_stack([sme_noise(A, res, e) for e in np.eye(7)])
    S = sme_covariance(A, res)
    np.testing.assert_allclose(L @ L.T, S, atol=1e-13)
    assert np.all(np.linalg.eigvalsh(S) > -1e-13)


def test_noise_makes_runs_seed_dependent(inst):
    a = run_sme(inst, DiffusionConfig(gamma=0.5, dt=1e-2, epochs=0.5, seed=0))
    b = run_sme(inst, DiffusionConfig(gamma=0.5, dt=1e-2, epochs=0.5, seed=1))
    assert not np.array_equal(a.values, b.values)
    c = run_sde(inst, DiffusionConfig(gamma=0.5, dt=1e-2, epochs=0.5, seed=0))
    assert np.array_equal(c.values, run_sde(inst, DiffusionConfig(gamma=0.5, dt=1e-2, epochs=0.5, seed=0)).values)


def test_record_grid_and_tags(inst):
    tr = run_sde(inst, DiffusionConfig(gamma=0.5, dt=1e-3, epochs=1.0, record_every=0.25))
    np.testing.assert_allclose(tr.times, [0, 0.25, 0.5, 0.75, 1.0])
    assert tr.model == "sde" and run_sme(inst, DiffusionConfig(gamma=0.5, dt=1e-2, epochs=0.1)).model == "sme"


def test_divergence_truncates(inst):
    tr = run_sme(inst, DiffusionConfig(gamma=400.0, dt=1e-2, epochs=5.0, record_every=1e-2))
    assert tr.truncated and tr.times[-1] < 5.0


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        DiffusionConfig(gamma=1.0, dt=0.1)
    with pytest.raises(InvalidParameterError):
        DiffusionConfig(gamma=-1.0)
    with pytest.raises(InvalidParameterError):
        DiffusionConfig(gamma=1.0, sigma2=-1)
    assert math.isclose(DiffusionConfig(gamma=1.0, dt=1e-3, epochs=2.0).steps, 2000)
