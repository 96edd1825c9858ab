"""Synthetic blob datasets, label-noise injection through transition matrices,
jitter augmentation, and CSV round-trip I/O.

`true_labels` exist for evaluation only; training code must consume
`features` and `noisy_labels` exclusively.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DatasetParseError
from .rng import substream


@dataclass
class NoisyDataset:
    features: np.ndarray      # (N, d)
    noisy_labels: np.ndarray  # (N,) int
    true_labels: np.ndarray   # (N,) int, evaluator-only
    num_classes: int
    split: str = "train"

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def is_clean(self):
        return bool(np.array_equal(self.noisy_labels, self.true_labels))


@dataclass
class TransitionMatrix:
    entries: np.ndarray  # (k, k) row-stochastic
    noise_rate: float

    @property
    def num_classes(self):
        return self.entries.shape[0]


def make_blobs(k, n_per_class, dim, center_spread, cluster_std, seed,
               split="train"):
    """Class-balanced Gaussian clusters, clean labels.

    Cluster centers depend only on (k, dim, center_spread, seed), so train and
    test splits generated with the same seed share the same geometry.
    """
    if k < 2:
        raise ConfigurationError("need at least 2 classes")
    if n_per_class < 1 or dim < 1:
        raise ConfigurationError("n_per_class and dim must be >= 1")
    if cluster_std <= 0:
        raise ConfigurationError("cluster_std must be positive")
    center_rng = substream(seed, "data-centers")
    centers = center_rng.normal(0.0, center_spread, size=(k, dim))
    sample_rng = substream(seed, f"data-samples-{split}")
    feats = np.empty((k * n_per_class, dim))
    labels = np.empty(k * n_per_class, dtype=int)
    for c in range(k):
        lo, hi = c * n_per_class, (c + 1) * n_per_class
        feats[lo:hi] = centers[c] + sample_rng.normal(
            0.0, cluster_std, size=(n_per_class, dim))
        labels[lo:hi] = c
    return NoisyDataset(feats, labels.copy(), labels.copy(), k, split)


def symmetric_matrix(k, tau):
    """Uniform flips: diagonal 1 - tau, off-diagonal tau / (k - 1)."""
    if k < 2:
        raise ConfigurationError("need at least 2 classes")
    if not 0.0 <= tau < 1.0:
        raise ConfigurationError("tau must be in [0, 1)")
    T = np.full((k, k), tau / (k - 1))
    np.fill_diagonal(T, 1.0 - tau)
    return TransitionMatrix(T, tau)


def asymmetric_matrix(k, tau, target_map=None):
    """Pair flips: class i goes to target_map[i] with probability tau.

    Default map is the cyclic shift i -> (i + 1) mod k.
    """
    if k < 2:
        raise ConfigurationError("need at least 2 classes")
    if not 0.0 <= tau < 1.0:
        raise ConfigurationError("tau must be in [0, 1)")
    if target_map is None:
        target_map = {i: (i + 1) % k for i in range(k)}
    if sorted(target_map) != list(range(k)):
        raise ConfigurationError("target_map must cover every class")
    T = np.zeros((k, k))
    for i in range(k):
        j = int(target_map[i])
        if j == i or not 0 <= j < k:
            raise ConfigurationError(f"target_map({i}) = {j} is invalid")
        T[i, i] = 1.0 - tau
        T[i, j] = tau
    return TransitionMatrix(T, tau)


def inject_noise(ds, T, seed):
    """Resample each noisy label from row true_label of T. Features and true
    labels are untouched; deterministic per seed."""
    if not ds.is_clean:
        raise ConfigurationError("inject_noise expects a clean dataset")
    if T.num_classes != ds.num_classes:
        raise ConfigurationError(
            f"transition matrix is {T.num_classes}-class, dataset is "
            f"{ds.num_classes}-class")
    rng = substream(seed, "noise")
    cum = np.cumsum(T.entries, axis=1)
    u = rng.random(ds.n)
    noisy = (u[:, None] > cum[ds.true_labels]).sum(axis=1)
    noisy = np.minimum(noisy, ds.num_classes - 1)
    return NoisyDataset(ds.features.copy(), noisy.astype(int),
                        ds.true_labels.copy(), ds.num_classes, ds.split)


def augment(X, jitter_std, rng):
    """Gaussian input jitter; the desk-scale analog of crop/flip augmentation."""
    if jitter_std < 0:
        raise ConfigurationError("jitter_std must be nonnegative")
    X = np.asarray(X, dtype=float)
    if jitter_std == 0:
        return X.copy()
    return X + rng.normal(0.0, jitter_std, size=X.shape)


def make_benchmark_pair(k=3, n_train_per_class=1000, n_test_per_class=334,
                        dim=2, center_spread=5.0, cluster_std=1.0,
                        noise_type="symmetric", tau=0.4, seed=0):
    """Train/test blob pair sharing cluster geometry; noise is injected into
    the training split only. noise_type is one of none/symmetric/asymmetric."""
    train = make_blobs(k, n_train_per_class, dim, center_spread, cluster_std,
                       seed, split="train")
    test = make_blobs(k, n_test_per_class, dim, center_spread, cluster_std,
                      seed, split="test")
    if noise_type == "none" or tau == 0.0:
        return train, test
    if noise_type == "symmetric":
        T = symmetric_matrix(k, tau)
    elif noise_type == "asymmetric":
        T = asymmetric_matrix(k, tau)
    else:
        raise ConfigurationError(f"unknown noise type {noise_type!r}")
    return inject_noise(train, T, seed), test


def save_csv(ds, path):
    """Header f0..f{d-1},noisy_label,true_label; floats at 9 significant digits."""
    d = ds.dim
    header = ",".join([f"f{i}" for i in range(d)] + ["noisy_label", "true_label"])
    lines = [header]
    for i in range(ds.n):
        feats = ",".join(f"{v:.9g}" for v in ds.features[i])
        lines.append(f"{feats},{ds.noisy_labels[i]},{ds.true_labels[i]}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path, num_classes=None, split="train"):
    """Inverse of save_csv. num_classes, when given, bounds label validation;
    otherwise it is inferred as max label + 1."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetParseError("empty file", 1)
    header = lines[0].split(",")
    if len(header) < 3 or header[-2:] != ["noisy_label", "true_label"]:
        raise DatasetParseError("bad header (want f0..fd,noisy_label,true_label)", 1)
    d = len(header) - 2
    if header[:d] != [f"f{i}" for i in range(d)]:
        raise DatasetParseError("bad feature column names", 1)
    feats, noisy, true = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != d + 2:
            raise DatasetParseError(
                f"expected {d + 2} columns, got {len(parts)}", lineno)
        try:
            feats.append([float(v) for v in parts[:d]])
            noisy.append(int(parts[d]))
            true.append(int(parts[d + 1]))
        except ValueError as exc:
            raise DatasetParseError(str(exc), lineno) from exc
        k = num_classes if num_classes is not None else None
        for lab in (noisy[-1], true[-1]):
            if lab < 0 or (k is not None and lab >= k):
                raise DatasetParseError(f"label {lab} out of range", lineno)
    noisy = np.asarray(noisy, dtype=int)
    true = np.asarray(true, dtype=int)
    k = num_classes if num_classes is not None else int(max(noisy.max(), true.max())) + 1
    return NoisyDataset(np.asarray(feats), noisy, true, k, split)
