"""Smoke tests of the python bindings (run against the CMake-built module)."""

import math

import numpy as np

import bnppca


def test_directional():
    rng = bnppca.Rng(7)
    p = bnppca.sample_uniform_stiefel(5, 3, rng)
    assert np.allclose(p.T @ p, np.eye(3), atol=1e-10)
    assert math.isclose(bnppca.stiefel_log_volume(2, 1), math.log(2 * math.pi), rel_tol=1e-12)

    mu = np.array([1.0, 0.0, 0.0])
    x = bnppca.sample_vmf_sphere(mu, 25.0, rng)
    assert math.isclose(np.linalg.norm(x), 1.0, abs_tol=1e-10)
    assert mu @ x > 0.5
    assert bnppca.vmf_log_density(mu, mu, 0.0) == 0.0

    lam = np.diag([8.0, 0.0, 0.0])
    b = bnppca.sample_bingham_sphere(lam, rng)
    assert math.isclose(np.linalg.norm(b), 1.0, abs_tol=1e-10)

    assert bnppca.sample_sig(1.0, 0.1, rng) > 0.0


def test_ibp():
    rng = bnppca.Rng(3)
    z = bnppca.sample_ibp(1.5, 6, rng)
    assert z.shape[1] == 6 or z.shape[0] == 0
    lp = bnppca.ibp_log_prob(np.array([[1]], dtype=np.int32), 1, 0.7)
    assert math.isclose(lp, math.log(0.7) - 0.7, rel_tol=1e-12)


def test_chain_and_estimators():
    Y, gt = bnppca.generate_preset("fig1a", seed=11)
    assert Y.shape == (16, 100)
    h = bnppca.Hyperparams()
    h.n_burn = 30
    h.n_iter = 120
    h.seed = 11
    trace = bnppca.run_chain(Y, h)
    assert trace.n_samples == 120
    k = bnppca.k_mmap(trace)
    assert 0 <= k <= 16
    kks, rows = bnppca.k_ks(trace, Y, 0.05, 5)
    assert 0 <= kks <= 16
    assert rows[0]["K"] == 0
    p_hat = bnppca.conditional_mmse_P(trace, k)
    assert p_hat.shape == (16, k)
    if k > 0:
        assert np.allclose(p_hat.T @ p_hat, np.eye(k), atol=1e-9)
    assert math.isclose(bnppca.projection_cdf(0.5, 3), 0.5, rel_tol=1e-9)


def test_determinism():
    Y1, _ = bnppca.generate_preset("fig1a", seed=5)
    Y2, _ = bnppca.generate_preset("fig1a", seed=5)
    assert np.array_equal(Y1, Y2)
    h = bnppca.Hyperparams()
    h.n_burn = 5
    h.n_iter = 20
    h.seed = 9
    t1 = bnppca.run_chain(Y1, h)
    t2 = bnppca.run_chain(Y2, h)
    assert t1.k_values == t2.k_values
    assert np.array_equal(t1.basis(19), t2.basis(19))


if __name__ == "__main__":
    test_directional()
    test_ibp()
    test_chain_and_estimators()
    test_determinism()
    print("python smoke tests passed")
