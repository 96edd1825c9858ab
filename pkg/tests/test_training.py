import math

import numpy as np
import pytest

import morphlab as ml
from morphlab import nn
from morphlab.errors import ConfigurationError
from morphlab.memorization import PredictionHistory
from morphlab.rng import substream
from morphlab.safe_set import init_safe_set
from morphlab.training import (TrainConfig, phase2_step, ramp_weight,
                               run_default, run_morph, run_small_loss)


def tiny_cfg(**kw):
    base = dict(epochs=12, batch_size=32, lr0=0.1, q=5, ramp_epochs=4,
                warmup_epochs_min=3, hidden_dims=(16,), seed=1,
                jitter_std=0.05)
    base.update(kw)
    return TrainConfig(**base)


def tiny_data(seed=1, tau=0.4, noise_type="symmetric"):
    return ml.make_benchmark_pair(k=3, n_train_per_class=60,
                                  n_test_per_class=30, dim=2,
                                  center_spread=5.0, cluster_std=1.0,
                                  noise_type=noise_type, tau=tau, seed=seed)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=5, warmup_epochs_min=5).validate()
    with pytest.raises(ConfigurationError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ConfigurationError):
        TrainConfig(w_max=-1.0).validate()


def test_ramp_weight_endpoints():
    cfg = tiny_cfg(w_max=5.0, ramp_epochs=10)
    assert ramp_weight(0, cfg) == pytest.approx(5.0 * math.exp(-5.0))
    assert ramp_weight(10, cfg) == pytest.approx(5.0)
    assert ramp_weight(25, cfg) == pytest.approx(5.0)


def test_ramp_weight_nondecreasing():
    cfg = tiny_cfg(w_max=5.0, ramp_epochs=10)
    vals = [ramp_weight(e, cfg) for e in range(15)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_phase2_combined_gradient_matches_finite_differences():
    # hand-built 6-sample batch, 3 in the safe set; finite differences on the
    # combined supervised + consistency objective
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 2))
    noisy = np.array([0, 1, 2, 0, 1, 2])
    model = nn.mlp_init([2, 8, 3], seed=5)
    safe_members = np.array([0, 2, 4])
    w = 1.7
    jitter = 0.3
    X_hat = X + substream(9, "probe").normal(0.0, jitter, size=X.shape)

    def objective():
        res = nn.forward(model, X[safe_members], noisy[safe_members])
        sup = float(res.per_sample_loss.mean())
        z = nn.forward(model, X).probabilities
        zh = nn.forward(model, X_hat).probabilities
        cons = float(np.sum((z - zh) ** 2) / X.shape[0])
        return sup + w * cons

    sup_grads, _ = nn.loss_gradients(model, X[safe_members],
                                     noisy[safe_members])
    from morphlab.training import _consistency_gradients
    cons_grads = _consistency_gradients(model, X, X_hat)
    total = nn.add_grads(sup_grads, cons_grads, scale=w)

    h = 1e-5
    max_err = 0.0
    for arr, grad in zip(model.weights + model.biases,
                         [g for g, _ in total] + [g for _, g in total]):
        flat_idx = [0, arr.size // 2, arr.size - 1]
        for fi in flat_idx:
            idx = np.unravel_index(fi, arr.shape)
            orig = arr[idx]
            arr[idx] = orig + h
            lp = objective()
            arr[idx] = orig - h
            lm = objective()
            arr[idx] = orig
            numeric = (lp - lm) / (2 * h)
            analytic = grad[idx]
            denom = max(abs(numeric), abs(analytic), 1e-8)
            max_err = max(max_err, abs(numeric - analytic) / denom)
    assert max_err < 1e-4


def test_phase2_zero_jitter_reduces_to_safe_update():
    train, _ = tiny_data()
    cfg = tiny_cfg(jitter_std=0.0)
    n = train.n
    model_a = nn.mlp_init([2, 16, 3], seed=2)
    model_b = model_a.copy()
    opt_a = nn.sgd_init(model_a, 0.1)
    opt_b = nn.sgd_init(model_b, 0.1)
    hist_a = PredictionHistory(n, 3, 5)
    hist_b = PredictionHistory(n, 3, 5)
    preds = nn.forward(model_a, train.features).predicted_labels
    hist_a.record_epoch(preds)
    hist_b.record_epoch(preds)
    safe_a = init_safe_set(np.arange(0, n, 2), 0, n)
    safe_b = init_safe_set(np.arange(0, n, 2), 0, n)
    batch = np.arange(40)
    jr = substream(1, "jitter")
    phase2_step(model_a, opt_a, safe_a, batch, train.features,
                train.noisy_labels, cfg, 3.0, jr, hist_a)
    # pure safe update: supervised only over batch members of the safe set
    members = batch[safe_b.member_mask(batch)]
    nn.backward_and_step(model_b, opt_b, train.features[members],
                         train.noisy_labels[members])
    for wa, wb in zip(model_a.weights, model_b.weights):
        assert np.allclose(wa, wb, atol=1e-12)


def test_phase2_empty_intersection_never_crashes():
    train, _ = tiny_data()
    cfg = tiny_cfg(jitter_std=0.0)  # regularization inert -> skip update
    n = train.n
    model = nn.mlp_init([2, 16, 3], seed=2)
    before = [w.copy() for w in model.weights]
    opt = nn.sgd_init(model, 0.1)
    hist = PredictionHistory(n, 3, 5)
    hist.record_epoch(nn.forward(model, train.features).predicted_labels)
    safe = init_safe_set([], 0, n)
    sup_loss, c, r = phase2_step(model, opt, safe, np.arange(10),
                                 train.features, train.noisy_labels, cfg,
                                 2.0, substream(1, "jitter"), hist)
    assert sup_loss is None
    for w, b in zip(model.weights, before):
        assert np.array_equal(w, b)


def test_phase2_empty_intersection_regularization_only():
    train, _ = tiny_data()
    cfg = tiny_cfg(jitter_std=0.5)
    n = train.n
    model = nn.mlp_init([2, 16, 3], seed=2)
    before = [w.copy() for w in model.weights]
    opt = nn.sgd_init(model, 0.1)
    hist = PredictionHistory(n, 3, 5)
    hist.record_epoch(nn.forward(model, train.features).predicted_labels)
    safe = init_safe_set([], 0, n)
    sup_loss, _, _ = phase2_step(model, opt, safe, np.arange(10),
                                 train.features, train.noisy_labels, cfg,
                                 2.0, substream(1, "jitter"), hist)
    assert sup_loss is None
    changed = any(not np.array_equal(w, b)
                  for w, b in zip(model.weights, before))
    assert changed


def test_transition_threshold_arithmetic():
    # tau_hat = 0.4, alpha = 0, N = 1000 -> fires exactly at |M| >= 600
    n, tau = 1000, 0.4
    assert (1.0 - (tau + 0.0)) * n == pytest.approx(600.0)
    assert not 599 >= (1.0 - tau) * n
    assert 600 >= (1.0 - tau) * n


def test_morph_transition_condition_and_phase_discipline():
    train, test = tiny_data()
    cfg = tiny_cfg()
    r = run_morph(train, test, cfg)
    assert r.transitioned
    t_tr = r.t_tr_epoch
    for m in r.metrics:
        if m.epoch <= t_tr:
            assert m.phase == "seeding"
            assert m.safe_size is None
            assert m.tau_hat is not None
        else:
            assert m.phase == "evolution"
            assert m.safe_size is not None
            assert m.tau_hat is None  # no re-estimation after transition
    # condition true at t_tr, false at earlier checked epochs
    rows = {m.epoch: m for m in r.metrics}
    row = rows[t_tr]
    thresh = (1.0 - (row.tau_hat + cfg.transition_offset)) * train.n
    assert row.mem_size >= thresh
    for e in range(cfg.warmup_epochs_min + 1, t_tr):
        m = rows[e]
        assert m.mem_size < (1.0 - (m.tau_hat + cfg.transition_offset)) * train.n


def test_morph_prefix_equals_default():
    train, test = tiny_data()
    cfg = tiny_cfg()
    rm = run_morph(train, test, cfg)
    rd = run_default(train, test, cfg)
    assert rm.transitioned
    for a, b in zip(rm.metrics[:rm.t_tr_epoch], rd.metrics[:rm.t_tr_epoch]):
        assert a.test_error == b.test_error
        assert a.train_loss == b.train_loss
        assert a.mem_size == b.mem_size


def test_morph_no_transition_flagged():
    train, test = tiny_data()
    # impossible threshold: negative offset far beyond reach
    cfg = tiny_cfg(transition_offset=-2.0)
    r = run_morph(train, test, cfg)
    assert not r.transitioned
    assert r.safe_set is None
    assert all(m.phase == "seeding" for m in r.metrics)


def test_morph_clean_data_estimates_near_zero():
    train, test = tiny_data(tau=0.0, noise_type="none")
    cfg = tiny_cfg()
    r = run_morph(train, test, cfg)
    taus = [m.tau_hat for m in r.metrics if m.tau_hat is not None]
    assert taus[-1] < 0.05
    assert r.transitioned


def test_default_clean_low_error():
    train, test = tiny_data(tau=0.0, noise_type="none")
    r = run_default(train, test, tiny_cfg())
    assert r.best_test_error <= 0.05


def test_best_test_error_is_min():
    train, test = tiny_data()
    r = run_default(train, test, tiny_cfg())
    assert r.best_test_error == min(m.test_error for m in r.metrics)


def test_small_loss_keep_one_equals_default():
    train, test = tiny_data()
    cfg = tiny_cfg()
    rs = run_small_loss(train, test, cfg, keep_fraction=1.0)
    rd = run_default(train, test, cfg)
    for a, b in zip(rs.metrics, rd.metrics):
        assert a.test_error == b.test_error
    for wa, wb in zip(rs.model.weights, rd.model.weights):
        assert np.array_equal(wa, wb)


def test_small_loss_selection_count():
    train, test = tiny_data()
    cfg = tiny_cfg()
    r = run_small_loss(train, test, cfg, keep_fraction=0.6)
    assert r.final_selection.size == int(round(0.6 * train.n)) == 108
    post = [m for m in r.metrics if m.phase == "evolution"]
    assert post and all(m.lr is not None and m.lp is not None for m in post)


def test_morph_determinism_metrics_identical():
    train, test = tiny_data()
    cfg = tiny_cfg()
    a = run_morph(train, test, cfg)
    b = run_morph(train, test, cfg)
    from morphlab.runlog import format_row
    assert [format_row(m) for m in a.metrics] == [format_row(m) for m in b.metrics]
