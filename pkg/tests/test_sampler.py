import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats

from pathcap.logscaled import LogScaled
from pathcap.measures import (
    DegenerateNetworkError,
    InputWeighting,
    enumerate_paths_oracle,
    input_weights,
)
from pathcap.network import Dataset, Network, forward_batch
from pathcap.sampling import (
    HAVE_COMPILED,
    build_sampler,
    compression_stats,
    derive_seed,
    empirical_markov,
    reconstruct,
    sample_paths,
    set_backend,
)
from pathcap.sampling.core import PathCounts
from pathcap.sampling.tables import ALIAS_THRESHOLD, LayerTable, build_alias
from pathcap.theory import mc_error, lower_bound_instance, random_dataset, random_network


@pytest.fixture
def sampler_a(net_a, s_a):
    return build_sampler(net_a, s_a, 1)


class TestConditionalSampler:
    def test_closed_form_rows(self, sampler_a):
        np.testing.assert_allclose(sampler_a.top_probabilities(), [1.0])
        np.testing.assert_allclose(
            sampler_a.conditional_probabilities(1), [[0.3, 0.7]], rtol=1e-12
        )
        np.testing.assert_allclose(
            sampler_a.conditional_probabilities(0),
            [[1 / 3, 2 / 3], [3 / 7, 4 / 7]],
            rtol=1e-12,
        )

    def test_rows_match_oracle_conditionals(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            net = random_network(rng, max_width=5)
            S = random_dataset(rng, 4, net.d)
            cs = build_sampler(net, S, 2)
            o = enumerate_paths_oracle(net, input_weights(S, 2))
            T = o.tensor  # axes (j_L, ..., j_0)
            L = net.depth
            for e in range(L):
                rows = cs.conditional_probabilities(e)
                # joint over (j_{e+1}, j_e) from the oracle tensor
                keep = tuple(i for i in range(T.ndim) if i not in (L - e - 1, L - e))
                J = T.sum(axis=keep)
                denom = J.sum(axis=1, keepdims=True)
                expect = np.divide(J, denom, out=np.zeros_like(J), where=denom > 0)
                np.testing.assert_allclose(rows, expect, rtol=1e-9, atol=1e-12)

    def test_row_sums_and_support(self, sampler_a):
        for e in (0, 1):
            tbl = sampler_a.tables[e]
            W = sampler_a.net.layers[e]
            for t in range(W.shape[0]):
                tbl.ensure(np.array([t]), sampler_a._row(e))
                sup, p = tbl.row_probabilities(t)
                assert abs(p.sum() - 1.0) <= 1e-12
                assert set(sup).issubset(set(np.nonzero(np.abs(W[t]) > 0)[0]))

    def test_degenerate_rejected(self, s_a):
        zero = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        with pytest.raises(DegenerateNetworkError):
            build_sampler(zero, s_a, 1)

    def test_single_support_rows(self, chain_net):
        cs = build_sampler(chain_net, Dataset(np.array([[1.0]])), 1)
        np.testing.assert_allclose(cs.conditional_probabilities(0), [[1.0]])
        np.testing.assert_allclose(cs.conditional_probabilities(1), [[1.0]])


class TestAliasTable:
    def test_alias_reproduces_distribution_exactly(self):
        rng = np.random.default_rng(11)
        p = rng.dirichlet(np.ones(12))
        prob, alias = build_alias(p)
        # total mass assigned to each outcome across all slots equals p
        mass = np.zeros(12)
        m = len(p)
        for slot in range(m):
            mass[slot] += prob[slot] / m
            mass[alias[slot]] += (1.0 - prob[slot]) / m
        np.testing.assert_allclose(mass, p, rtol=1e-12, atol=1e-15)

    def test_threshold_split(self, net_a, s_a):
        wide = Network((np.ones((ALIAS_THRESHOLD + 2, 2)), np.ones((1, ALIAS_THRESHOLD + 2))))
        cs = build_sampler(wide, s_a, 1)
        counts = sample_paths(cs, 500, seed=5)
        assert counts.pairs[0].sum() == 500  # mixes alias (wide row) and cdf rows


class TestSamplePaths:
    def test_determinism(self, sampler_a):
        c1 = sample_paths(sampler_a, 2000, seed=42, keep_paths=True)
        c2 = sample_paths(sampler_a, 2000, seed=42, keep_paths=True)
        for a, b in zip(c1.pairs, c2.pairs):
            np.testing.assert_array_equal(a, b)
        assert c1.path_counts == c2.path_counts

    @pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel unavailable")
    def test_backends_bit_identical(self, net_a, s_a):
        rng = np.random.default_rng(17)
        for trial in range(5):
            net = random_network(rng, max_width=12)
            S = random_dataset(rng, 4, net.d)
            results = []
            for name in ("compiled", "python"):
                set_backend(name)
                try:
                    cs = build_sampler(net, S, 1)
                    results.append(sample_paths(cs, 3000, seed=trial))
                finally:
                    set_backend(None)
            for a, b in zip(results[0].pairs, results[1].pairs):
                np.testing.assert_array_equal(a, b)

    def test_flow_conservation(self, sampler_a):
        counts = sample_paths(sampler_a, 1500, seed=9)
        for arr in counts.pairs:
            assert arr.sum() == 1500
        for v in range(1, counts.depth):
            np.testing.assert_array_equal(
                counts.node_counts(v), counts.node_counts_source(v)
            )

    def test_single_path_degenerate(self, chain_net):
        cs = build_sampler(chain_net, Dataset(np.array([[1.0]])), 1)
        counts = sample_paths(cs, 77, seed=123, keep_paths=True)
        assert counts.path_counts == {(0, 0, 0): 77}

    def test_pair_frequencies_within_binomial_ci(self, sampler_a):
        M = 100_000
        counts = sample_paths(sampler_a, M, seed=31)
        pair0 = counts.pairs[0].sum(axis=(1, 3))
        exact = np.array([[0.1, 0.2], [0.3, 0.4]]).T  # p(j0, j1) = w_{j0 j1}/V
        for s in range(2):
            for t in range(2):
                p = exact[s, t]
                sd = math.sqrt(M * p * (1 - p))
                assert abs(pair0[s, t] - M * p) <= 4.0 * sd

    def test_unbiased_pair_estimates(self, net_a, s_a):
        # mean of p~ pairwise entries over resamples tracks the exact pair law
        cs = build_sampler(net_a, s_a, 1)
        R, M = 2000, 50
        acc = np.zeros((2, 2))
        for r in range(R):
            counts = sample_paths(cs, M, seed=derive_seed(77, r))
            acc += counts.pairs[0].sum(axis=(1, 3)) / M
        mean = acc / R
        exact = np.array([[0.1, 0.3], [0.2, 0.4]])
        se = np.sqrt(exact * (1 - exact) / (R * M))
        assert np.all(np.abs(mean - exact) <= 5.0 * se)

    def test_worker_partition_determinism_and_merge(self, sampler_a):
        c1 = sample_paths(sampler_a, 10_000, seed=3, workers=4)
        c2 = sample_paths(sampler_a, 10_000, seed=3, workers=4)
        for a, b in zip(c1.pairs, c2.pairs):
            np.testing.assert_array_equal(a, b)
        # explicit merge by addition matches the internal partitioning
        assert c1.M == 10_000
        merged = sample_paths(sampler_a, 4_000, seed=3) + sample_paths(
            sampler_a, 6_000, seed=4
        )
        assert merged.M == 10_000
        assert merged.pairs[0].sum() == 10_000

    def test_partition_plans_same_law(self, sampler_a):
        # 100 runs per plan; chi-square homogeneity on pooled pair categories
        M = 200
        totals = {1: np.zeros(4), 3: np.zeros(4)}
        for plan in (1, 3):
            for run in range(100):
                counts = sample_paths(sampler_a, M, seed=derive_seed(11, plan, run), workers=plan)
                totals[plan] += counts.pairs[0].sum(axis=(1, 3)).ravel()
        table = np.stack([totals[1], totals[3]])
        _, pvalue, _, _ = scipy.stats.chi2_contingency(table)
        assert pvalue > 0.001

    def test_rejects_bad_args(self, sampler_a):
        with pytest.raises(ValueError):
            sample_paths(sampler_a, 0, seed=1)
        with pytest.raises(ValueError):
            sample_paths(sampler_a, 10, seed=1, workers=0)


class TestEmpiricalMarkov:
    def _manual_counts(self, net_a):
        """The reference M=4 outcome: 1 path (0,0,0), 3 paths (1,1,0)."""
        dims = tuple(net_a.dims)
        pairs = [np.zeros((dims[e], 2, dims[e + 1], 2), dtype=np.int64) for e in range(2)]
        # layer 0 edges carry the sign of W1 and the outgoing sign at j1 (W2 >= 0: +)
        pairs[0][0, 0, 0, 0] = 1  # edge 0->0, W1[0,0] = 1 > 0
        pairs[0][1, 0, 1, 0] = 3  # edge 1->1, W1[1,1] = 4 > 0
        pairs[1][0, 0, 0, 0] = 1  # top edges, W2 positive
        pairs[1][1, 0, 0, 0] = 3
        return PathCounts(tuple(pairs), 4, dims, 0, 1, net_a.activation)

    def test_reference_ratios(self, net_a):
        em = empirical_markov(self._manual_counts(net_a))
        np.testing.assert_allclose(em.top_joint()[:, 0, 0], [0.25, 0.75])
        cond = em.conditional(0)
        assert cond[0, 0, 0, 0] == 1.0 and cond[1, 0, 0, 0] == 0.0
        assert cond[1, 0, 1, 0] == 1.0 and cond[0, 0, 1, 0] == 0.0

    def test_unvisited_rows_zero(self, net_a):
        counts = self._manual_counts(net_a)
        em = empirical_markov(counts)
        cond = em.conditional(0)
        # the (j1=0, -) and (j1=1, -) copies were never visited: all-zero rows
        assert np.all(cond[:, :, 0, 1] == 0.0)
        assert np.all(cond[:, :, 1, 1] == 0.0)

    def test_probabilities_are_multiples_of_inverse_M(self, sampler_a):
        counts = sample_paths(sampler_a, 137, seed=5)
        em = empirical_markov(counts)
        M = counts.M
        for e in range(counts.depth):
            for val in counts.pairs[e].ravel():
                assert Fraction(int(val), M).denominator <= M
        top = em.top_joint()
        np.testing.assert_array_equal(top * M, np.round(top * M))

    def test_rows_sum_exactly_one_in_rationals(self, sampler_a):
        counts = sample_paths(sampler_a, 997, seed=8)
        for e in range(counts.depth - 1):
            K = counts.node_counts(e + 1)
            for t in range(K.shape[0]):
                for tau in range(2):
                    if K[t, tau] == 0:
                        continue
                    total = sum(
                        Fraction(int(c), int(K[t, tau]))
                        for c in counts.pairs[e][:, :, t, tau].ravel()
                    )
                    assert total == 1

    def test_nnz_bound_and_stats(self, sampler_a):
        for M in (1, 10, 100, 1000):
            counts = sample_paths(sampler_a, M, seed=M)
            em = empirical_markov(counts)
            stats = compression_stats(em, M)
            assert stats["nnz"] <= stats["nnz_bound"] == counts.depth * M
            assert stats["precision_digits"] == pytest.approx(math.log10(M))

    def test_chain_net_stats(self, chain_net):
        cs = build_sampler(chain_net, Dataset(np.array([[1.0]])), 1)
        em = empirical_markov(sample_paths(cs, 1000, seed=1))
        assert em.nnz == 2
        assert compression_stats(em, 1000)["visited_per_layer"] == [1, 1, 1]


class TestReconstruction:
    def test_reference_hand_computation(self, net_a):
        counts = TestEmpiricalMarkov()._manual_counts(net_a)
        em = empirical_markov(counts)
        rec = reconstruct(em, LogScaled.from_float(10.0), InputWeighting.ones(2))
        # f~([1,0]) = 10 * 0.25 * phi(1) = 2.5; f~([0,1]) = 10 * 0.75 * phi(1) = 7.5
        np.testing.assert_allclose(rec.evaluate(np.array([[1.0, 0.0]])), [[2.5]])
        np.testing.assert_allclose(rec.evaluate(np.array([[0.0, 1.0]])), [[7.5]])

    def test_chain_net_exact_any_M(self, chain_net):
        cs = build_sampler(chain_net, Dataset(np.array([[1.0]])), 1)
        for M in (1, 7, 100):
            rec = reconstruct(
                empirical_markov(sample_paths(cs, M, seed=M)), cs.V, cs.w
            )
            X = np.array([[0.5], [-2.0], [3.0]])
            np.testing.assert_allclose(
                rec.evaluate(X), forward_batch(chain_net, X), atol=1e-12
            )

    def test_single_draw_sign_reapplication(self):
        net = Network((np.array([[-2.0]]), np.array([[3.0]])))
        S = Dataset(np.array([[-1.0]]))
        cs = build_sampler(net, S, 1)
        rec = reconstruct(empirical_markov(sample_paths(cs, 1, seed=2)), cs.V, cs.w)
        assert rec.evaluate(np.array([[-1.0]]))[0, 0] == pytest.approx(6.0)

    def test_as_network_matches_evaluate(self):
        rng = np.random.default_rng(51)
        for trial in range(8):
            net = random_network(rng, max_width=6)
            S = random_dataset(rng, 4, net.d)
            q = (1, 2)[trial % 2]
            cs = build_sampler(net, S, q)
            counts = sample_paths(cs, 50, seed=trial)
            rec = reconstruct(empirical_markov(counts), cs.V, cs.w)
            compact = rec.as_network()
            X = rng.standard_normal((6, net.d))
            np.testing.assert_allclose(
                forward_batch(compact, X), rec.evaluate(X), rtol=1e-9, atol=1e-9
            )
            total_nnz = sum(np.count_nonzero(w) for w in compact.layers)
            assert total_nnz <= net.depth * counts.M

    def test_zero_weight_coordinate_maps_to_zero(self, net_a):
        w0 = InputWeighting(1.0, np.array([1.0, 0.0]))
        cs_counts = TestEmpiricalMarkov()._manual_counts(net_a)
        rec = reconstruct(empirical_markov(cs_counts), LogScaled.from_float(10.0), w0)
        out_with_junk = rec.evaluate(np.array([[1.0, 555.0]]))
        out_clean = rec.evaluate(np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(out_with_junk, out_clean)

    def test_large_M_converges(self, net_a, s_a):
        cs = build_sampler(net_a, s_a, 1)
        rec = reconstruct(
            empirical_markov(sample_paths(cs, 1_000_000, seed=99)), cs.V, cs.w
        )
        out = rec.evaluate(np.array([[1.0, 0.0]]))[0, 0]
        assert abs(out - 1.0) < 0.1

    def test_mse_decreases_with_M(self):
        inst = lower_bound_instance(8, 8)
        S = inst.dataset
        estimates = [
            mc_error(inst.net, S, 1, M, R=200, seed=1234) for M in (100, 1000, 10_000)
        ]
        for small, big in zip(estimates[:-1], estimates[1:]):
            assert big.mean < small.mean
            assert big.ci95[1] < small.ci95[0]  # non-overlapping 95% CIs


class TestLayerTableConcurrency:
    def test_at_most_once_publication(self, net_a, s_a):
        cs = build_sampler(net_a, s_a, 1)
        tbl = LayerTable(2)
        builder = cs._row(0)
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda _: tbl.ensure(np.array([0, 1]), builder), range(64)))
        assert tbl.n_rows == 2
        assert sorted(tbl.slot_of.tolist()) == [0, 1]

    def test_concurrent_sampling_consistent(self, sampler_a):
        def run(seed):
            return sample_paths(sampler_a, 500, seed=seed)

        with ThreadPoolExecutor(max_workers=4) as pool:
            out = list(pool.map(run, [7] * 8))
        for counts in out[1:]:
            for a, b in zip(out[0].pairs, counts.pairs):
                np.testing.assert_array_equal(a, b)

    def test_cold_cache_thread_stress(self):
        # Regression: packed-row views must swap atomically; concurrent
        # sampling on a fresh sampler used to read torn table generations.
        rng = np.random.default_rng(123)
        for round_ in range(6):
            net = random_network(rng, L=3, max_width=64)
            S = random_dataset(rng, 4, net.d)
            cs = build_sampler(net, S, 1)

            def run(seed):
                return sample_paths(cs, 400, seed=seed).pairs[0].sum()

            with ThreadPoolExecutor(max_workers=8) as pool:
                totals = list(pool.map(run, range(16)))
            assert totals == [400] * 16


class TestCountsCsv:
    def test_rows_cover_all_pairs(self, sampler_a):
        counts = sample_paths(sampler_a, 500, seed=2)
        rows = list(counts.csv_rows())
        assert sum(r[-1] for r in rows) == 500 * counts.depth
        layers = {r[0] for r in rows}
        assert layers == {0, 1}
        signs = {r[2] for r in rows} | {r[4] for r in rows}
        assert signs.issubset({"+", "-"})
