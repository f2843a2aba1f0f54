import math

import numpy as np
import pytest

from pathcap.measures import (
    DegenerateNetworkError,
    InputWeighting,
    build_chain,
    enumerate_paths_oracle,
    input_weights,
    marginal,
    path_complexity,
    path_measures,
    path_norm_phi,
    product_abs,
    renyi_half_exp,
    variation,
    variation_bounds,
)
from pathcap.network import Dataset, Network
from pathcap.theory import random_dataset, random_network


class TestInputWeights:
    def test_q1_max_rule(self, s_a):
        np.testing.assert_allclose(input_weights(s_a, 1).w0, [1.0, 1.0])

    def test_q2(self, s_a):
        np.testing.assert_allclose(
            input_weights(s_a, 2).w0, [math.sqrt(2 / 3)] * 2, rtol=1e-10
        )

    def test_single_point(self):
        ds = Dataset(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(input_weights(ds, 2).w0, [3.0, 4.0])

    def test_q_inf_mean_rule(self, s_a):
        np.testing.assert_allclose(input_weights(s_a, math.inf).w0, [2 / 3, 2 / 3])

    def test_rejects_bad_q(self, s_a):
        with pytest.raises(ValueError):
            input_weights(s_a, 0.5)


class TestChain:
    def test_net_a_values(self, net_a):
        chain = build_chain(net_a, InputWeighting.ones(2))
        np.testing.assert_allclose(chain.a[1].to_floats(), [3.0, 7.0])
        assert chain.V.to_float() == pytest.approx(10.0)

    def test_chain_net(self, chain_net):
        chain = build_chain(chain_net, InputWeighting.ones(1))
        assert chain.V.to_float() == pytest.approx(6.0)

    def test_zero_network_degenerate(self):
        net = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        chain = build_chain(net, InputWeighting.ones(2))
        assert chain.degenerate and chain.V.is_zero

    def test_consistency_every_layer(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            net = random_network(rng, max_width=8)
            S = random_dataset(rng, 5, net.d)
            chain = build_chain(net, input_weights(S, 1))
            V = chain.V
            for ell in range(net.depth + 1):
                dot = chain.layer_dot(ell)
                assert dot.ratio_to(V) == pytest.approx(1.0, rel=1e-10)

    def test_deep_network_no_overflow(self):
        rng = np.random.default_rng(4)
        layers = [rng.standard_normal((6, 6)) * 3.0 for _ in range(1000)]
        net = Network(tuple([np.abs(layers[0])] + layers[1:]))
        chain = build_chain(net, InputWeighting.ones(6))
        assert not chain.degenerate
        assert np.isfinite(chain.V.log2)
        with pytest.raises(OverflowError):
            chain.V.to_float()


class TestVariation:
    def test_net_a(self, net_a, s_a):
        assert variation(net_a, s_a, 1).to_float() == pytest.approx(10.0)
        assert variation(net_a, s_a, 2).to_float() == pytest.approx(
            10.0 * math.sqrt(2 / 3), rel=1e-10
        )

    def test_chain_net(self, chain_net):
        S = Dataset(np.array([[1.0]]))
        assert variation(chain_net, S, 1).to_float() == pytest.approx(6.0)


class TestMarginal:
    def test_collapsed_net_a(self, net_a):
        p = marginal(net_a, InputWeighting.ones(2), 1, "collapsed")
        np.testing.assert_allclose(p, [0.3, 0.7], rtol=1e-12)

    def test_doubled_net_a(self, net_a):
        p = marginal(net_a, InputWeighting.ones(2), 1, "doubled")
        np.testing.assert_allclose(p, [0.3, 0.7, 0.0, 0.0], rtol=1e-12)

    def test_all_ones_symmetry(self):
        net = Network((np.ones((2, 2)), np.ones((1, 2))))
        p = marginal(net, InputWeighting.ones(2), 1, "collapsed")
        np.testing.assert_allclose(p, [0.5, 0.5])

    def test_bad_layer_and_degenerate(self, net_a):
        with pytest.raises(ValueError):
            marginal(net_a, InputWeighting.ones(2), 2, "collapsed")
        zero = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        with pytest.raises(DegenerateNetworkError):
            marginal(zero, InputWeighting.ones(2), 1, "collapsed")

    def test_doubled_splits_collapsed(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            net = random_network(rng, max_width=6)
            w = InputWeighting.ones(net.d)
            for ell in range(1, net.depth):
                c = marginal(net, w, ell, "collapsed")
                d = marginal(net, w, ell, "doubled")
                half = len(d) // 2
                np.testing.assert_allclose(d[:half] + d[half:], c, rtol=1e-9, atol=1e-12)


class TestRenyi:
    def test_values(self):
        assert renyi_half_exp(np.array([1.0])) == pytest.approx(1.0)
        assert renyi_half_exp(np.array([0.5, 0.5])) == pytest.approx(math.sqrt(2.0))
        assert renyi_half_exp(np.array([0.3, 0.7])) == pytest.approx(1.3843825841)

    def test_requires_distribution(self):
        with pytest.raises(ValueError):
            renyi_half_exp(np.array([0.5, 0.4]))


class TestPathComplexity:
    def test_net_a(self, net_a, s_a):
        assert path_complexity(net_a, s_a, 1, "doubled") == pytest.approx(
            (1.0 + 1.3843825841) / 2, rel=1e-9
        )

    def test_chain_net_attains_floor(self, chain_net):
        S = Dataset(np.array([[1.0]]))
        assert path_complexity(chain_net, S, 1, "doubled") == pytest.approx(1.0)

    def test_uniform_width4(self):
        net = Network((np.ones((4, 2)), np.ones((1, 4))))
        S = Dataset(np.array([[1.0, 1.0]]))
        assert path_complexity(net, S, 1, "collapsed") == pytest.approx(1.5)

    def test_bounds_and_mode_ordering(self):
        rng = np.random.default_rng(31)
        for _ in range(15):
            net = random_network(rng, max_width=8)
            S = random_dataset(rng, 4, net.d)
            for q in (1, 2):
                zc = path_complexity(net, S, q, "collapsed")
                zd = path_complexity(net, S, q, "doubled")
                assert zd >= zc - 1e-12  # splitting mass cannot lower sum sqrt(p)
                widths = net.dims[1:-1]
                cap = (1.0 + sum(math.sqrt(2 * w) for w in widths)) / net.depth
                assert 1.0 - 1e-12 <= zd <= cap + 1e-12


class TestProductAbs:
    def test_net_a(self, net_a):
        np.testing.assert_allclose(product_abs(net_a), [[4.0, 6.0]])

    def test_identity_and_zero(self):
        ident = Network((np.eye(3), np.eye(3)))
        np.testing.assert_allclose(product_abs(ident), np.eye(3))
        zero = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        np.testing.assert_allclose(product_abs(zero), np.zeros((1, 2)))

    def test_overflow_guard(self):
        layers = tuple(np.full((2, 2), 1e200) for _ in range(3))
        net = Network(layers)
        with pytest.raises(OverflowError):
            product_abs(net)
        assert np.all(np.isinf(product_abs(net, strict=False)))


class TestPathNormPhi:
    def test_net_a(self, net_a):
        _, total2 = path_norm_phi(net_a, 2)
        assert total2 == pytest.approx(math.sqrt(30.0), rel=1e-10)
        _, total1 = path_norm_phi(net_a, 1)
        assert total1 == pytest.approx(10.0, rel=1e-10)

    def test_chain_net_p3(self, chain_net):
        _, total = path_norm_phi(chain_net, 3)
        assert total == pytest.approx(6.0, rel=1e-10)

    def test_phi1_equals_v1_with_unit_weights(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            net = random_network(rng, max_width=7)
            chain = build_chain(net, InputWeighting.ones(net.d))
            _, total = path_norm_phi(net, 1)
            assert total == pytest.approx(chain.V.to_float(), rel=1e-12)


class TestVariationBounds:
    def test_net_a_reference(self, net_a, s_a):
        b1 = variation_bounds(net_a, s_a, 1)
        assert b1[0] == pytest.approx(10.0, abs=1e-3)
        assert b1[1] == pytest.approx(10.0, abs=1e-3)
        b2 = variation_bounds(net_a, s_a, 2)
        assert b2[0] == pytest.approx(math.sqrt(2) * math.sqrt(52), abs=1e-3)
        assert b2[1] == pytest.approx(math.sqrt(2) * 10.0, abs=1e-3)

    def test_dominate_variation_single_output(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            net = random_network(rng, max_width=8, k=1)
            S = random_dataset(rng, 5, net.d)
            for q in (1, 2):
                v = variation(net, S, q).to_float()
                for b in variation_bounds(net, S, q):
                    assert b >= v * (1 - 1e-9)

    def test_row_oriented_bound_multi_output(self):
        # The proof-faithful row orientation dominates for any output count.
        from pathcap.norms import group_norm_q1

        rng = np.random.default_rng(19)
        for _ in range(50):
            net = random_network(rng, max_width=8)
            S = random_dataset(rng, 5, net.d)
            P = product_abs(net)
            for q in (1, 2):
                qs = math.inf if q == 1 else 2
                r = max(np.linalg.norm(S.X, ord=qs, axis=1))
                v = variation(net, S, q).to_float()
                assert r * group_norm_q1(P, q) >= v * (1 - 1e-9)

    def test_zero_net(self, s_a):
        zero = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        assert variation_bounds(zero, s_a, 1) == (0.0, 0.0)

    def test_rejects_unsupported_q(self, net_a, s_a):
        with pytest.raises(ValueError):
            variation_bounds(net_a, s_a, 1.5)


class TestOracleEquivalence:
    def test_net_a_oracle(self, net_a):
        o = enumerate_paths_oracle(net_a, InputWeighting.ones(2))
        assert o.V == pytest.approx(10.0)
        np.testing.assert_allclose(o.marginals[0], [0.3, 0.7])
        weights = dict(o.paths())
        assert weights[(0, 0, 0)] == pytest.approx(1.0)
        assert weights[(1, 1, 0)] == pytest.approx(4.0)

    def test_guard(self):
        rng = np.random.default_rng(23)
        layers = tuple(rng.standard_normal((8, 8)) for _ in range(10))
        net = Network(layers)
        with pytest.raises(ValueError):
            enumerate_paths_oracle(net, InputWeighting.ones(8))

    def test_chain_matches_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            net = random_network(rng, max_width=6)
            S = random_dataset(rng, 4, net.d)
            for q in (1, 2):
                w = input_weights(S, q)
                o = enumerate_paths_oracle(net, w)
                pm_c = path_measures(net, S, q, mode="collapsed")
                pm_d = path_measures(net, S, q, mode="doubled")
                assert pm_c.V.to_float() == pytest.approx(o.V, rel=1e-10)
                for ell in range(1, net.depth):
                    np.testing.assert_allclose(
                        pm_c.marginals[ell - 1], o.marginals[ell - 1], rtol=1e-10, atol=1e-14
                    )
                    np.testing.assert_allclose(
                        pm_d.marginals[ell - 1],
                        o.marginals_doubled[ell - 1],
                        rtol=1e-10,
                        atol=1e-14,
                    )

    def test_phi_matches_oracle(self):
        rng = np.random.default_rng(37)
        for _ in range(15):
            net = random_network(rng, max_width=6)
            o = enumerate_paths_oracle(net, InputWeighting.ones(net.d))
            for p in (1.0, 2.0, 3.0):
                per, total = path_norm_phi(net, p)
                oper, ototal = o.phi(p)
                np.testing.assert_allclose(per, oper, rtol=1e-10)
                assert total == pytest.approx(ototal, rel=1e-10)


class TestEntrywiseNormFacts:
    def test_product_submultiplicative_inf(self):
        from pathcap.norms import induced_norm

        rng = np.random.default_rng(41)
        for _ in range(100):
            net = random_network(rng, max_width=8)
            P = product_abs(net)
            prod = 1.0
            for w in net.layers:
                prod *= induced_norm(w, math.inf)
            assert induced_norm(P, math.inf) <= prod * (1 + 1e-12)

    def test_phi2_below_frobenius_product_single_output(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            net = random_network(rng, max_width=8, k=1)
            _, phi2 = path_norm_phi(net, 2)
            prod = 1.0
            for w in net.layers:
                prod *= float(np.linalg.norm(w))
            assert phi2 <= prod * (1 + 1e-12)
