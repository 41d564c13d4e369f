import math
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gradient_errors, numeric_gradient, random_gradient_case
from wireless_dpsgd.consensus import Connectivity, averaging_weights, complete, ring
from wireless_dpsgd.dpsgd import (
    ConstantCompute,
    Dataset,
    MeasuredCompute,
    ModelSpec,
    NumericalError,
    TrainingAborted,
    TrainingConfig,
    build_model,
    dpsgd_step,
    evaluate,
    gaussian_clusters,
    initialize,
    load_csv,
    local_gradient,
    partition,
    split,
    train,
)
from wireless_dpsgd.optimizer import OptimizerConfig, RateAssignment, optimize_rates
from wireless_dpsgd.propagation import RadioParams, build_channel_matrix, six_node_layout

SPECS = ["logistic_regression", "mlp(8)", "mlp(6,5)"]


# --- models -----------------------------------------------------------------


def test_model_spec_parse_roundtrip():
    for text in SPECS:
        assert str(ModelSpec.parse(text)) == text
    assert ModelSpec.parse(" mlp( 4 , 3 ) ").hidden == (4, 3)
    with pytest.raises(ValueError):
        ModelSpec.parse("cnn")
    with pytest.raises(ValueError):
        ModelSpec("mlp")
    with pytest.raises(ValueError):
        ModelSpec("logistic_regression", (3,))


def test_parameter_count():
    assert build_model(ModelSpec(), 20, 10).size == 20 * 10 + 10
    assert build_model(ModelSpec.parse("mlp(8)"), 5, 3).size == 5 * 8 + 8 + 8 * 3 + 3


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("loss", ["cross_entropy", "squared_error"])
def test_gradient_matches_finite_differences(spec, loss):
    rng = np.random.default_rng(zlib.crc32(f"{spec}/{loss}".encode()))
    worst = 0.0
    for _ in range(100):
        model, p, x, y = random_gradient_case(spec, rng)
        ga = local_gradient(model, p, x, y, loss)
        gn = numeric_gradient(lambda q: model.loss(q, x, y, loss), p)
        per, norm = gradient_errors(ga, gn)
        worst = max(worst, per, norm)
    assert worst <= 1e-5


def test_gradient_check_detects_a_wrong_gradient():
    rng = np.random.default_rng(3)
    model, p, x, y = random_gradient_case("mlp(8)", rng)
    ga = local_gradient(model, p, x, y, "cross_entropy")
    gn = numeric_gradient(lambda q: model.loss(q, x, y, "cross_entropy"), p)
    bad = ga.copy()
    bad[: 5 * 8] *= 1.01  # first-layer weights off by 1%
    assert max(gradient_errors(bad, gn)) > 1e-5


@pytest.mark.parametrize("loss", ["cross_entropy", "squared_error"])
def test_minibatch_gradient_is_mean_of_sample_gradients(loss, rng):
    model, p, x, y = random_gradient_case("mlp(4)", rng, batch=7)
    g = local_gradient(model, p, x, y, loss)
    each = [local_gradient(model, p, x[k : k + 1], y[k : k + 1], loss) for k in range(7)]
    np.testing.assert_allclose(g, np.mean(each, axis=0), rtol=1e-12, atol=1e-15)


def test_squared_error_linear_single_output_closed_form(rng):
    # one output, real-valued target: d/dw (w.x + b - y)^2 = 2 (w.x + b - y) [x, 1]
    model = build_model(ModelSpec(), 4, 1)
    p = rng.normal(size=model.size)
    x = rng.normal(size=(1, 4))
    y = np.array([[0.7]])
    w, b = p[:4], p[4]
    r = float(x[0] @ w + b - 0.7)
    g = local_gradient(model, p, x, y, "squared_error")
    np.testing.assert_allclose(g, 2.0 * r * np.append(x[0], 1.0), rtol=1e-13)


def test_zero_weight_logreg_bias_gradient_vanishes_on_balanced_batch():
    model = build_model(ModelSpec(), 3, 2)
    x = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0]])
    y = np.array([0, 1])
    g = local_gradient(model, np.zeros(model.size), x, y, "cross_entropy")
    np.testing.assert_array_equal(g[-2:], 0.0)


def test_non_finite_gradient_raises_with_iteration():
    model = build_model(ModelSpec(), 2, 2)
    x = np.array([[np.inf, 1.0]])
    with pytest.raises(NumericalError, match="iteration 17"):
        local_gradient(model, np.ones(model.size), x, np.array([0]), "squared_error", 17)


def test_unknown_loss_rejected():
    model = build_model(ModelSpec(), 2, 2)
    with pytest.raises(ValueError, match="unknown loss"):
        model.loss(np.zeros(model.size), np.ones((1, 2)), np.array([0]), "hinge")


# --- initialization and step --------------------------------------------------


def test_initialize_identical_rows_and_seeded():
    model = build_model(ModelSpec.parse("mlp(8)"), 5, 3)
    x = initialize(TrainingConfig(seed=4), 6, model)
    assert x.shape == (6, model.size)
    assert all(np.array_equal(x[0], row) for row in x)
    assert np.array_equal(x, initialize(TrainingConfig(seed=4), 6, model))


def test_initialize_differs_across_seeds():
    model = build_model(ModelSpec(), 20, 10)
    x0s = [initialize(TrainingConfig(seed=s), 1, model)[0] for s in range(10)]
    for a in range(10):
        for b in range(a + 1, 10):
            assert not np.array_equal(x0s[a], x0s[b])


def test_step_identity_is_independent_sgd(rng):
    x = rng.normal(size=(4, 7))
    g = rng.normal(size=(4, 7))
    np.testing.assert_array_equal(dpsgd_step(x, np.eye(4), g, 0.1), x - 0.1 * g)


def test_step_uniform_averaging_with_identical_gradients_keeps_models_equal(rng):
    row = rng.normal(size=9)
    x = np.tile(row, (5, 1))
    g = np.tile(rng.normal(size=9), (5, 1))
    out = dpsgd_step(x, np.full((5, 5), 0.2), g, 0.05)
    assert all(np.array_equal(out[0], r) for r in out)


def test_step_zero_gradient_is_pure_consensus(rng):
    w = averaging_weights(ring(5))
    x = rng.normal(size=(5, 3))
    np.testing.assert_array_equal(dpsgd_step(x, w, np.zeros_like(x), 0.3), w @ x)


def test_step_dimension_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        dpsgd_step(np.zeros((3, 2)), np.eye(4), np.zeros((3, 2)), 0.1)
    with pytest.raises(ValueError):
        dpsgd_step(np.zeros((3, 2)), np.eye(3), np.zeros((3, 3)), 0.1)


def test_reduction_to_single_node_sgd(rng):
    # W = ones/n, identical batches: the shared trajectory is SGD with the mean gradient
    n = 4
    model = build_model(ModelSpec.parse("mlp(5)"), 6, 3)
    data = gaussian_clusters(50, 6, 3, seed=2)
    x = initialize(TrainingConfig(seed=1), n, model)
    ref = x[0].copy()
    w = averaging_weights(complete(n))
    for _ in range(20):
        idx = rng.integers(0, 50, size=2)
        g = np.stack([local_gradient(model, r, data.features[idx], data.labels[idx], "cross_entropy") for r in x])
        x = dpsgd_step(x, w, g, 0.1)
        gref = local_gradient(model, ref, data.features[idx], data.labels[idx], "cross_entropy")
        ref = (w @ np.tile(ref, (n, 1)))[0] - 0.1 * gref
        assert all(np.array_equal(x[0], r) for r in x)
        np.testing.assert_array_equal(x[0], ref)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7))
def test_zero_gradient_preserves_mean(seed, n):
    rng = np.random.default_rng(seed)
    a = (rng.random((n, n)) < 0.5).astype(np.uint8)
    a = a | a.T
    w = averaging_weights(Connectivity(a))
    x = rng.normal(size=(n, 3))
    # symmetric adjacency with unequal degrees gives a non-doubly-stochastic W;
    # the degree-weighted mean is what is conserved
    deg = a.astype(float).sum(axis=1) + (1 - np.diag(a))
    pi = deg / deg.sum()
    np.testing.assert_allclose(pi @ dpsgd_step(x, w, np.zeros_like(x), 0.1), pi @ x, atol=1e-12)


# --- data -------------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(m=st.integers(1, 500), n=st.integers(1, 12), seed=st.integers(0, 2**63 - 1))
def test_partition_disjoint_covering_near_equal(m, n, seed):
    parts = partition(m, n, seed)
    assert len(parts) == n
    flat = np.concatenate(parts)
    assert sorted(flat.tolist()) == list(range(m))
    sizes = [len(p) for p in parts]
    assert max(sizes) - min(sizes) <= 1


def test_partition_seeded():
    assert all(np.array_equal(a, b) for a, b in zip(partition(100, 3, 5), partition(100, 3, 5)))
    assert not all(np.array_equal(a, b) for a, b in zip(partition(100, 3, 5), partition(100, 3, 6)))


def test_gaussian_clusters_seeded_and_shaped():
    a = gaussian_clusters(300, 7, 4, seed=9)
    b = gaussian_clusters(300, 7, 4, seed=9)
    assert a.features.shape == (300, 7) and a.n_classes == 4
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert set(a.labels.tolist()) <= set(range(4))


def test_split_disjoint():
    d = gaussian_clusters(100, 3, 2, seed=0)
    tr, te = split(d, 0.25, seed=1)
    assert len(tr) == 75 and len(te) == 25


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("f0,label,f1\n1.5,2,3\n-1,0,0.25\n")
    d = load_csv(p)
    np.testing.assert_array_equal(d.features, [[1.5, 3.0], [-1.0, 0.25]])
    np.testing.assert_array_equal(d.labels, [2, 0])
    assert d.n_classes == 3
    assert load_csv(p, n_classes=5).n_classes == 5


def test_load_csv_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,label\n1,0\nx,1\n")
    with pytest.raises(ValueError, match=r"d.csv:3"):
        load_csv(p)
    with pytest.raises(ValueError, match="no label column"):
        load_csv(p, label_column="y")


# --- evaluate -----------------------------------------------------------------------


def test_random_labels_give_chance_accuracy():
    rng = np.random.default_rng(0)
    data = Dataset(rng.normal(size=(10_000, 20)), rng.integers(0, 10, size=10_000), 10)
    model = build_model(ModelSpec(), 20, 10)
    x = initialize(TrainingConfig(seed=0), 3, model)
    acc, loss = evaluate(model, x, data, "cross_entropy")
    assert np.all(np.abs(acc - 0.1) <= 0.03)
    assert np.all(acc == acc[0]) and np.all(np.isfinite(loss))


def test_memorizing_model_scores_one():
    # one-hot features, identity weights: the model returns its input
    data = Dataset(np.eye(4), np.arange(4), 4)
    model = build_model(ModelSpec(), 4, 4)
    params = np.concatenate([np.eye(4).ravel(), np.zeros(4)])
    acc, _ = evaluate(model, params[None, :], data, "cross_entropy")
    assert acc[0] == 1.0


# --- train -----------------------------------------------------------------------------


def _single_node(bits=1.0):
    return RateAssignment((math.inf,), Connectivity(np.ones((1, 1))), 0.0, 0.0, bits)


def test_single_node_equals_plain_sgd():
    data = gaussian_clusters(40, 5, 3, seed=3)
    cfg = TrainingConfig(learning_rate=0.1, batch_size=2, epochs=3, seed=11)
    trace = train(None, _single_node(), cfg, data)

    model = build_model(cfg.model, 5, 3)
    (part,) = partition(40, 1, cfg.seed)
    brng = np.random.default_rng(cfg.seed ^ 0)
    x = initialize(cfg, 1, model)[0]
    accs = [evaluate(model, x[None, :], data, cfg.loss)[0][0]]
    for _ in range(3):
        for _ in range(20):
            b = part[brng.integers(0, 40, size=2)]
            x = x - 0.1 * local_gradient(model, x, data.features[b], data.labels[b], cfg.loss)
        accs.append(evaluate(model, x[None, :], data, cfg.loss)[0][0])
    assert [r.accuracy for r in trace.node(0)] == accs
    assert trace.iterations_per_epoch == 20


@pytest.fixture(scope="module")
def small_run():
    layout = six_node_layout()
    ch = build_channel_matrix(layout, RadioParams(path_loss_index=5.0))
    data = gaussian_clusters(6 * 60, 8, 4, seed=1)
    cfg = TrainingConfig(learning_rate=0.05, epochs=3, seed=7)
    bits = 32.0 * build_model(cfg.model, 8, 4).size
    a = optimize_rates(ch, OptimizerConfig(0.5, bits))
    return layout, a, cfg, data


def test_trace_accounting(small_run):
    layout, a, cfg, data = small_run
    trace = train(layout, a, cfg, data)
    assert trace.iterations_per_epoch == 60
    assert trace.broadcast_order == layout.broadcast_order()
    for i in range(6):
        recs = trace.node(i)
        assert [r.epoch for r in recs] == [0, 1, 2, 3]
        assert recs[0].compute_s == 0.0 and recs[0].comm_s == 0.0
        for prev, cur in zip(recs, recs[1:]):
            assert cur.compute_s >= prev.compute_s and cur.comm_s >= prev.comm_s
            assert cur.comm_s - prev.comm_s == pytest.approx(60 * a.t_com, rel=1e-12)
            assert cur.compute_s - prev.compute_s == pytest.approx(60 * 1e-3, rel=1e-12)
        assert all(math.isfinite(r.loss) for r in recs)
        assert math.isnan(recs[0].test_accuracy)


def test_train_deterministic(small_run):
    layout, a, cfg, data = small_run
    assert train(layout, a, cfg, data).records == train(layout, a, cfg, data).records


def test_train_learns(small_run):
    layout, a, cfg, data = small_run
    trace = train(layout, a, cfg, data)
    assert trace.node(0)[-1].accuracy > trace.node(0)[0].accuracy + 0.2


def test_train_with_test_split_and_measured_compute(small_run):
    layout, a, cfg, data = small_run
    tr, te = split(data, 0.2, seed=0)
    trace = train(layout, a, cfg, tr, compute_model=MeasuredCompute(6), test=te)
    last = trace.node(0)[-1]
    assert 0.0 <= last.test_accuracy <= 1.0 and last.compute_s > 0


def test_train_rejects_size_mismatch(small_run):
    layout, a, cfg, data = small_run
    with pytest.raises(ValueError, match="layout has"):
        train(layout, _single_node(), cfg, data)
    with pytest.raises(ValueError, match="too small"):
        train(layout, a, cfg, gaussian_clusters(4, 8, 4, seed=0))


def test_train_abort_keeps_partial_trace(small_run):
    layout, a, cfg, data = small_run
    bad = Dataset(data.features.copy(), data.labels, data.n_classes)
    bad.features[:] = 1e300
    with pytest.raises(TrainingAborted) as info, np.errstate(over="ignore", invalid="ignore"):
        train(layout, a, TrainingConfig(learning_rate=1.0, loss="squared_error", epochs=2), bad)
    assert len(info.value.trace.records) >= 6


def test_constant_compute_runs_callable():
    calls = []
    assert ConstantCompute(0.5).run(lambda: calls.append(1)) == 0.5
    assert calls == [1]


def test_training_config_validation():
    for kw in ({"learning_rate": 0}, {"batch_size": 0}, {"epochs": 0}, {"iterations_per_epoch": 0}):
        with pytest.raises(ValueError):
            TrainingConfig(**kw)
