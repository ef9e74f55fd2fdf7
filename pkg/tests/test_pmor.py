import numpy as np
import pytest

from lrmor import (BenchConfig, ParametricSystem, SolverError, TrainingSet,
                   bspline2_coefficients, chebyshev_samples,
                   gen_thermal_block_mini, interpolatory_assemble,
                   lagrange_coefficients, log_samples, piecewise_assemble,
                   rom_transfer_eval, stability_check, train, transfer_eval)


@pytest.fixture(scope="module")
def thermal12():
    return gen_thermal_block_mini(BenchConfig(grid_size=12))


@pytest.fixture(scope="module")
def ts_bt(thermal12):
    mus = log_samples(*thermal12.domain, 5)
    return train(thermal12, mus, "bt-tol", tol=1e-4,
                 sampling_rule="log_equispaced")


def scalar_psys():
    return ParametricSystem(a_fn=lambda mu: [[-mu]],
                            b_fn=lambda mu: [[1.0]],
                            c_fn=lambda mu: [[1.0]],
                            domain=(1e-2, 1e2))


def constant_psys(sys_):
    return ParametricSystem(a_fn=lambda mu: sys_.a,
                            b_fn=lambda mu: sys_.b,
                            c_fn=lambda mu: sys_.c,
                            domain=(1e-2, 1e2))


class TestSampling:
    def test_log_samples_constant_ratio(self):
        mus = log_samples(1e-6, 1e2, 10)
        ratios = mus[1:] / mus[:-1]
        assert np.abs(ratios / ratios[0] - 1.0).max() <= 1e-12

    def test_chebyshev_samples(self):
        mus = chebyshev_samples(1e-6, 1e2, 10)
        assert len(mus) == 10
        assert (np.diff(mus) > 0).all()
        assert mus[0] >= 1e-6 and mus[-1] <= 1e2


class TestTrain:
    def test_single_sample(self, thermal12):
        ts = train(thermal12, [1.0], "bt-tol", tol=1e-4)
        assert len(ts.roms) == 1
        assert ts.local_orders[0] >= 1

    def test_bt_orders_recorded(self, ts_bt):
        assert len(ts_bt.local_orders) == 5
        assert all(r >= 1 for r in ts_bt.local_orders)

    def test_irka_fixed_orders(self, thermal12):
        ts = train(thermal12, log_samples(*thermal12.domain, 3), "irka",
                   order=6)
        assert ts.local_orders == [6, 6, 6]

    def test_unknown_method(self, thermal12):
        with pytest.raises(ValueError, match="method"):
            train(thermal12, [1.0], "pod")

    def test_samples_must_increase(self, thermal12):
        ts = train(thermal12, [1.0], "bt-tol")
        with pytest.raises(ValueError, match="strictly increasing"):
            TrainingSet(thermal12, [1.0, 1.0], ts.roms * 2, ts.infos * 2,
                        "bt-tol")

    def test_failure_reports_sample_index(self):
        bad = ParametricSystem(a_fn=lambda mu: [[1.0]],  # unstable
                               b_fn=lambda mu: [[1.0]],
                               c_fn=lambda mu: [[1.0]],
                               domain=(1e-2, 1e2))
        with pytest.raises(SolverError, match="sample 0"):
            train(bad, [1.0], "bt-tol")


class TestPiecewise:
    def test_single_sample_reproduces_local(self, thermal12):
        ts = train(thermal12, [1.0], "bt-tol", tol=1e-4)
        prom = piecewise_assemble(ts)
        local = ts.roms[0]
        for w in (1e-2, 1.0, 1e3):
            np.testing.assert_allclose(prom.transfer(1.0, 1j * w),
                                       local.transfer(1j * w), atol=1e-9)

    def test_scalar_piecewise_exact(self):
        psys = scalar_psys()
        ts = train(psys, [1.0], "bt-fixed", order=1)
        prom = piecewise_assemble(ts)
        for mu in (0.1, 1.0, 50.0):
            np.testing.assert_allclose(
                rom_transfer_eval(prom, mu, 1j),
                transfer_eval(psys.instantiate(mu), 1j), atol=1e-12)

    def test_duplicate_basis_rank_unchanged(self, thermal12, ts_bt):
        single = train(thermal12, [1.0], "bt-tol", tol=1e-4)
        doubled = TrainingSet(thermal12, np.array([0.5, 1.0]),
                              [single.roms[0], single.roms[0]],
                              [single.infos[0], single.infos[0]], "bt-tol")
        prom_1 = piecewise_assemble(single, truncation_tol=1e-10)
        prom_2 = piecewise_assemble(doubled, truncation_tol=1e-10)
        assert prom_1.order == prom_2.order

    def test_two_sided_error_at_training_points(self, thermal12, ts_bt):
        prom = piecewise_assemble(ts_bt)  # machine-eps truncation
        omegas = np.logspace(-3, 3, 12)
        for i, mu in enumerate(ts_bt.samples):
            bound = ts_bt.infos[i].error_bound
            local = ts_bt.roms[i]
            for w in omegas:
                diff = np.linalg.norm(
                    prom.transfer(mu, 1j * w) - local.transfer(1j * w), 2)
                assert diff <= bound + 1e-8

    def test_one_sided_stability(self, thermal12, ts_bt, rng):
        prom = piecewise_assemble(ts_bt, one_sided=True)
        for mu in 10.0 ** rng.uniform(-6, 2, 20):
            rom = prom.reduce(mu)
            stable, _ = stability_check(rom.e, rom.a)
            assert stable

    def test_orthonormal_bases(self, ts_bt):
        prom = piecewise_assemble(ts_bt, one_sided=True)
        gram = prom.v.T @ prom.v
        assert np.abs(gram - np.eye(prom.order)).max() <= 1e-12

    def test_truncation_reduces_order(self, ts_bt):
        loose = piecewise_assemble(ts_bt, truncation_tol=1e-2)
        tight = piecewise_assemble(ts_bt)
        assert loose.order <= tight.order
        assert tight.concatenated_columns == sum(ts_bt.local_orders)

    def test_parameter_outside_domain(self, ts_bt):
        prom = piecewise_assemble(ts_bt)
        with pytest.raises(ValueError, match="outside domain"):
            prom.transfer(1e5, 1j)


class TestCoefficients:
    def test_lagrange_cardinality(self):
        nodes = np.array([-2.0, 0.0, 1.0, 3.0])
        for i, x in enumerate(nodes):
            ell = lagrange_coefficients(nodes, x)
            expect = np.zeros(4)
            expect[i] = 1.0
            np.testing.assert_allclose(ell, expect, atol=1e-12)

    def test_bspline_partition_of_unity(self, rng):
        nodes = np.sort(rng.uniform(-3, 3, 7))
        for x in rng.uniform(-3, 3, 50):
            ell = bspline2_coefficients(nodes, x)
            assert (ell >= -1e-15).all() and (ell <= 1 + 1e-15).all()
            assert abs(ell.sum() - 1.0) <= 1e-12

    def test_bspline_clamped_outside(self):
        nodes = np.array([0.0, 1.0, 2.0])
        assert bspline2_coefficients(nodes, -5.0)[0] == 1.0
        assert bspline2_coefficients(nodes, 9.0)[-1] == 1.0


class TestInterpolatory:
    def test_lagrange_node_reproduction(self, thermal12):
        mus = chebyshev_samples(*thermal12.domain, 5)
        ts = train(thermal12, mus, "bt-tol", tol=1e-4,
                   sampling_rule="chebyshev")
        prom = interpolatory_assemble(ts, "lagrange")
        for i, mu in enumerate(mus):
            for w in np.logspace(-3, 3, 10):
                np.testing.assert_allclose(
                    prom.transfer(mu, 1j * w),
                    ts.roms[i].transfer(1j * w), atol=1e-12)

    def test_parameter_independent_system(self, rng):
        from conftest import random_stable_system
        sys_ = random_stable_system(rng, 10, m=2, p=2, symmetric=True)
        psys = constant_psys(sys_)
        mus = chebyshev_samples(*psys.domain, 4)
        ts = train(psys, mus, "bt-fixed", order=4, sampling_rule="chebyshev")
        for kind in ("lagrange", "bspline2"):
            prom = interpolatory_assemble(ts, kind)
            for mu in (0.05, 0.7, 30.0):
                np.testing.assert_allclose(
                    prom.transfer(mu, 2j), ts.roms[0].transfer(2j),
                    atol=1e-9)

    def test_order_is_sum_of_locals(self, ts_bt):
        prom = interpolatory_assemble(ts_bt, "lagrange")
        assert prom.order == sum(ts_bt.local_orders)

    def test_bspline_needs_three_nodes(self, thermal12):
        ts = train(thermal12, log_samples(*thermal12.domain, 2), "bt-tol",
                   tol=1e-4)
        with pytest.raises(ValueError, match="at least 3"):
            interpolatory_assemble(ts, "bspline2")

    def test_near_coincident_nodes_rejected(self, thermal12):
        ts = train(thermal12, [1.0, 2.0], "bt-tol", tol=1e-4)
        ts.samples = np.array([1.0, 1.0 + 1e-15])
        with pytest.raises(ValueError, match="coincident"):
            interpolatory_assemble(ts, "lagrange")

    def test_unknown_basis(self, ts_bt):
        with pytest.raises(ValueError, match="basis"):
            interpolatory_assemble(ts_bt, "sinc")

    def test_blended_d_terms(self, rng):
        from conftest import random_stable_system
        sys_ = random_stable_system(rng, 8, m=2, p=2, symmetric=True)
        sys_.d[:] = rng.standard_normal(sys_.d.shape)
        psys = ParametricSystem(a_fn=lambda mu: sys_.a,
                                b_fn=lambda mu: sys_.b,
                                c_fn=lambda mu: sys_.c,
                                d_fn=lambda mu: sys_.d,
                                domain=(1e-2, 1e2))
        ts = train(psys, chebyshev_samples(1e-2, 1e2, 3), "bt-fixed",
                   order=3, sampling_rule="chebyshev")
        prom = interpolatory_assemble(ts, "lagrange")
        h = prom.transfer(1.0, 1j * 1e6)  # ~ D at high frequency
        np.testing.assert_allclose(h, sys_.d, atol=1e-3)
