import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discrim_embed import (
    EvalReport,
    MethodSpec,
    SolverConfig,
    SplitPlan,
    default_lambda1_grid,
    default_lambda2_grid,
    gen_tetra,
    make_report,
    nn_classify,
    pca_preprocess,
    run_protocol,
    stratified_split,
    sweep_dimension,
    sweep_params,
    transform,
)
from discrim_embed.harness import TETRA_EDGE, _prepare_split, fit_method, projection_of

from conftest import make_blobs

FAST = SolverConfig(max_iter=15)


@pytest.fixture(scope="module")
def tetra7():
    return gen_tetra(100, 100, seed=7)


def brute_nn(train, labels, test):
    out = []
    for j in range(test.shape[1]):
        dists = np.sum((train - test[:, [j]]) ** 2, axis=0)
        best, lab = math.inf, None
        for k, dist in enumerate(dists):
            if dist < best:
                best, lab = dist, labels[k]
        out.append(lab)
    return np.array(out)


class TestTetra:
    def test_counts(self, tetra7):
        assert tetra7.n_samples == 400 and tetra7.d == 100 and tetra7.n_classes == 4
        np.testing.assert_array_equal(tetra7.class_counts, [100] * 4)

    def test_one_per_class(self):
        data = gen_tetra(1, 5, seed=0)
        assert data.n_samples == 4
        np.testing.assert_array_equal(np.sort(data.labels), [0, 1, 2, 3])

    def test_rank_three(self, tetra7):
        sv = np.linalg.svd(tetra7.samples, compute_uv=False)
        assert np.all(sv[3:] < 1e-8 * sv[0])

    def test_geometry(self):
        data = gen_tetra(400, 3, seed=1)
        means = np.stack([data.class_block(i).mean(axis=1) for i in range(4)], axis=1)
        # lifting is an isometry, so sample class means sit near the tetrahedron vertices
        dists = [np.linalg.norm(means[:, a] - means[:, b]) for a in range(4) for b in range(a)]
        np.testing.assert_allclose(dists, TETRA_EDGE, atol=0.15)
        for i in range(4):
            xi = data.class_block(i)
            radius = np.linalg.norm(xi - means[:, [i]], axis=0)
            assert radius.max() <= 1.0 + 0.15

    def test_seeded(self):
        np.testing.assert_array_equal(gen_tetra(5, 10, 3).samples, gen_tetra(5, 10, 3).samples)
        assert not np.array_equal(gen_tetra(5, 10, 3).samples, gen_tetra(5, 10, 4).samples)

    def test_rejects_low_dim(self):
        with pytest.raises(ValueError):
            gen_tetra(5, 2)


class TestNearestNeighbor:
    def test_exact_match(self):
        train = np.array([[0.0, 5.0, 9.0]])
        assert nn_classify(train, [2, 1, 0], np.array([[5.0]]))[0] == 1

    def test_tie_lowest_index(self):
        train = np.array([[-1.0, 1.0]])
        assert nn_classify(train, [3, 4], np.array([[0.0]]))[0] == 3
        assert nn_classify(train, [4, 3], np.array([[0.0]]))[0] == 4

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        train, test = rng.standard_normal((3, 40)), rng.standard_normal((3, 25))
        labels = rng.integers(0, 4, 40)
        np.testing.assert_array_equal(nn_classify(train, labels, test),
                                      brute_nn(train, labels, test))

    def test_empty_train(self):
        with pytest.raises(ValueError):
            nn_classify(np.zeros((2, 0)), [], np.zeros((2, 1)))


class TestSplits:
    def test_stratified(self):
        data = make_blobs(n=60, c=3)
        for seed in range(5):
            train, test = stratified_split(data, 7, seed)
            np.testing.assert_array_equal(np.bincount(data.labels[train]), [7, 7, 7])
            assert np.intersect1d(train, test).size == 0
            assert train.size + test.size == 60

    def test_plan_validation(self):
        data = make_blobs(n=40, c=4)
        with pytest.raises(ValueError):
            SplitPlan(10).validate(data)
        with pytest.raises(ValueError):
            run_protocol(data, MethodSpec("identity"), SplitPlan(10))
        with pytest.raises(ValueError):
            SplitPlan(0)

    def test_no_leakage(self, tetra7):
        plan = SplitPlan(20, 1, 3)
        train_idx, test_idx = stratified_split(tetra7, 20, 3)
        train_p, test_x, test_y = _prepare_split(tetra7, plan, 0)
        basis, _ = pca_preprocess(tetra7.subset(train_idx))
        raw = tetra7.samples[:, test_idx]
        np.testing.assert_array_equal(test_x, basis.apply(raw))
        # changing test samples must not alter the train-side projection
        poisoned = tetra7.samples.copy()
        poisoned[:, test_idx] += 50.0
        train_q, _, _ = _prepare_split(tetra7.with_samples(poisoned), plan, 0)
        np.testing.assert_array_equal(train_q.samples, train_p.samples)


class TestProtocol:
    def test_identity_matches_raw_nn(self, tetra7):
        plan = SplitPlan(50, 10, 0)
        rep = run_protocol(tetra7, MethodSpec("identity"), plan)
        want = []
        for r in range(10):
            tr, te = stratified_split(tetra7, 50, r)
            x = tetra7.samples
            pred = brute_nn(x[:, tr], tetra7.labels[tr], x[:, te])
            want.append(100.0 * np.mean(pred == tetra7.labels[te]))
        np.testing.assert_array_equal(rep.per_split, want)
        assert rep.mean == pytest.approx(np.mean(want), abs=1e-12)

    def test_single_repeat_std(self, blobs):
        rep = run_protocol(blobs, MethodSpec("lda"), SplitPlan(5, 1, 2))
        assert rep.std == 0.0 and len(rep.per_split) == 1

    @pytest.mark.parametrize("method", ["lda", "rslda", "sda-g-1"])
    def test_rerun_bitwise(self, blobs, method):
        spec, plan = MethodSpec(method, FAST), SplitPlan(5, 3, 1)
        assert run_protocol(blobs, spec, plan) == run_protocol(blobs, spec, plan)

    def test_parallel_equals_serial(self, blobs):
        spec, plan = MethodSpec("rslda", FAST), SplitPlan(5, 4, 0)
        assert run_protocol(blobs, spec, plan, jobs=3) == run_protocol(blobs, spec, plan)

    def test_report_invariants(self, blobs):
        rep = run_protocol(blobs, MethodSpec("ics-dlsr", FAST), SplitPlan(5, 4, 0))
        assert all(0 <= a <= 100 for a in rep.per_split)
        assert abs(rep.mean - math.fsum(rep.per_split) / 4) <= 1e-12
        assert EvalReport.from_dict(rep.to_dict()) == rep

    @pytest.mark.parametrize("method", ["identity", "lda", "rslda", "sda-g-2"])
    def test_self_accuracy(self, method):
        data = make_blobs(d=5, n=30, c=3, seed=6)
        _, proj = pca_preprocess(data)
        spec = MethodSpec(method, FAST, m=proj.d if method == "lda" else None)
        w = projection_of(fit_method(spec, proj))
        z = transform(w, proj.samples)
        # distinct training points stay distinct under a full-rank embedding
        assert np.linalg.matrix_rank(w) == proj.d
        assert np.all(nn_classify(z, proj.labels, z) == proj.labels)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0, 100), min_size=1, max_size=12), st.randoms())
    def test_aggregation_permutation_invariant(self, acc, rnd):
        shuffled = list(acc)
        rnd.shuffle(shuffled)
        a = make_report("m", "d", SplitPlan(1), acc)
        b = make_report("m", "d", SplitPlan(1), shuffled)
        assert a.mean == b.mean and a.std == b.std


class TestSweeps:
    def test_full_dim_equals_protocol(self, blobs):
        plan = SplitPlan(5, 3, 0)
        spec = MethodSpec("rslda", FAST)
        (rep,) = sweep_dimension(blobs, spec, plan, [blobs.d])
        full = run_protocol(blobs, spec, plan)
        assert rep.per_split == full.per_split and rep.dim == blobs.d

    def test_sorted_and_warning(self, blobs):
        with pytest.warns(UserWarning, match="exceeds"):
            reps = sweep_dimension(blobs, MethodSpec("lda"), SplitPlan(5, 2, 0), [4, 1, 99, 2])
        assert [r.dim for r in reps] == [1, 2, 4, 99]
        assert reps[-1].warning and math.isnan(reps[-1].mean) and reps[-1].per_split == ()
        assert all(r.warning is None for r in reps[:-1])

    def test_tetra_lda_dim3_beats_dim1(self, tetra7):
        reps = sweep_dimension(tetra7, MethodSpec("lda"), SplitPlan(50, 10, 0), [1, 3])
        assert reps[1].mean >= reps[0].mean

    def test_default_grids(self):
        np.testing.assert_allclose(default_lambda1_grid(), [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1])
        np.testing.assert_allclose(default_lambda2_grid(), [1e-3, 1e-2, 1e-1, 1, 10])

    def test_single_cell(self, blobs):
        spec, plan = MethodSpec("rslda", FAST), SplitPlan(5, 2, 0)
        grid = sweep_params(blobs, spec, plan, [0.3], [0.2])
        cell = grid["cells"][0][0]
        rep = run_protocol(blobs, spec.with_config(lambda1=0.3, lambda2=0.2), plan)
        assert cell.per_split == rep.per_split
        assert cell.params == {"lambda1": 0.3, "lambda2": 0.2}

    def test_sub_grid_bitwise(self, blobs):
        spec, plan = MethodSpec("rslda", FAST), SplitPlan(5, 2, 0)
        full = sweep_params(blobs, spec, plan, [1e-3, 1e-1], [1e-2, 1.0, 10.0])
        sub = sweep_params(blobs, spec, plan, [1e-1], [1.0, 10.0])
        assert full["lambda1_grid"] == [1e-3, 1e-1]
        assert sub["cells"][0] == full["cells"][1][1:]

    def test_empty_grid(self, blobs):
        with pytest.raises(ValueError):
            sweep_params(blobs, MethodSpec("rslda"), SplitPlan(5, 1), [], [1.0])


def test_method_spec_validation():
    with pytest.raises(ValueError, match="unknown method"):
        MethodSpec("pca")
