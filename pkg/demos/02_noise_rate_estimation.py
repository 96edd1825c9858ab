"""Estimate the label-noise rate from accumulated training losses.

During early training, samples with flipped labels resist fitting: their
per-sample cross-entropy stays high while clean samples' losses drop. Summing
each sample's loss over the first epochs (area under the loss curve) therefore
produces a bimodal distribution. A two-component 1-D Gaussian mixture fit via
EM separates the modes, and the mean posterior of the larger-mean component
estimates the noise rate tau.

Run:  python3 demos/02_noise_rate_estimation.py
"""

import numpy as np

import morphlab as ml
from morphlab import nn
from morphlab.noise_estimator import (AulAccumulator, estimate_tau,
                                      gmm_fit_em)

TRUE_TAU = 0.4
train, _ = ml.make_benchmark_pair(
    k=3, n_train_per_class=1000, n_test_per_class=100, dim=2,
    center_spread=5.0, noise_type="symmetric", tau=TRUE_TAU, seed=0)

model = nn.mlp_init([2, 64, 64, 3], seed=0)
opt = nn.sgd_init(model, learning_rate=0.1)
rng = np.random.default_rng(0)
aul = AulAccumulator(train.n)

print(f"true tau = {TRUE_TAU}")
print(f"{'epoch':>5} {'tau_hat':>8} {'low mean':>9} {'high mean':>9}")
for epoch in range(1, 13):
    order = rng.permutation(train.n)
    for start in range(0, train.n, 128):
        batch = order[start:start + 128]
        nn.backward_and_step(model, opt, train.features[batch],
                             train.noisy_labels[batch])
    losses = nn.forward(model, train.features, train.noisy_labels)
    aul.accumulate(losses.per_sample_loss)
    fit = gmm_fit_em(aul.values)
    tau_hat = estimate_tau(fit, aul.values)
    print(f"{epoch:>5} {tau_hat:>8.3f} {fit.means[1]:>9.2f} "
          f"{fit.means[0]:>9.2f}")

flipped = train.noisy_labels != train.true_labels
print()
print(f"mean accumulated loss, clean samples:   {aul.values[~flipped].mean():7.2f}")
print(f"mean accumulated loss, flipped samples: {aul.values[flipped].mean():7.2f}")
print(f"final estimate {tau_hat:.3f} vs true {TRUE_TAU}")
