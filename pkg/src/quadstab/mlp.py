"""From-scratch MLP classifier: logistic layers, Adam, BCE + L2 loss.

Architecture is fixed at four hidden layers of 50 units with logistic
activations throughout, a single logistic output giving P(unstable),
and a z-score feature standardizer stored inside the model so inference
is self-contained. Training is plain minibatch Adam on binary
cross-entropy plus an (l2/2)*sum ||W||^2 penalty on weights (not
biases), with an internal 10% validation holdout for early stopping.
Everything is float64 and deterministic for a given seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MODEL_FORMAT = "quadstab-mlp"
MODEL_VERSION = 1

HIDDEN_LAYERS = (50, 50, 50, 50)

# feature count contract per topology tag
N_FEATURES = {"triple": 6, "quad_2p2": 11, "quad_3p1": 11}


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 1000
    l2: float = 1e-4
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 500
    patience: int = 20
    val_fraction: float = 0.1

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size, "l2": self.l2, "lr": self.lr,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "max_epochs": self.max_epochs, "patience": self.patience,
            "val_fraction": self.val_fraction,
        }


def _logistic(z: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def featurize(params) -> np.ndarray:
    """Ordered feature vector of a sampled parameter set.

    Mass ratios, axis ratios, eccentricities, then mutual inclinations;
    raw orientation angles beyond the mutual inclinations never enter.
    """
    return params.feature_vector()


@dataclass
class MLPModel:
    layer_sizes: tuple
    weights: list  # weights[k]: (layer_sizes[k], layer_sizes[k+1])
    biases: list
    feature_means: np.ndarray
    feature_stds: np.ndarray
    hyperparams: Hyperparams
    topology: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.layer_sizes[0]

    def validate(self):
        if self.layer_sizes[-1] != 1:
            raise ValueError("model must end in a single output unit")
        if self.topology is not None:
            want = N_FEATURES.get(self.topology)
            if want is not None and want != self.n_features:
                raise ValueError(
                    f"{self.topology} model needs {want} features, "
                    f"layer_sizes start at {self.n_features}"
                )
        for w in self.weights:
            if not np.all(np.isfinite(w)):
                raise ValueError("non-finite weight")
        if np.any(self.feature_stds <= 0.0):
            raise ValueError("feature_stds must be positive")
        return self

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.feature_means) / self.feature_stds

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """P(unstable) per row of X; accepts a single vector too."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None]
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        a = self.standardize(X)
        for w, b in zip(self.weights, self.biases):
            a = _logistic(a @ w + b)
        p = a[:, 0]
        return float(p[0]) if single else p

    def predict_unstable(self, X: np.ndarray):
        """Decision at the fixed 0.5 threshold."""
        return self.predict_proba(X) >= 0.5


def forward(model: MLPModel, x) -> float:
    """Probability that a single system is unstable."""
    return model.predict_proba(np.asarray(x, dtype=np.float64))


def _init_params(layer_sizes, rng):
    # the 4x logistic gain matters: unit-gain Glorot leaves four stacked
    # sigmoid layers signal-starved and L2 decay pins them at output 0.5
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        lim = 4.0 * math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward_pass(weights, biases, a0):
    acts = [a0]
    for w, b in zip(weights, biases):
        acts.append(_logistic(acts[-1] @ w + b))
    return acts


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def loss_value(weights, biases, a0, y, l2) -> float:
    """Full training objective: mean BCE plus (l2/2) * sum ||W||^2."""
    p = _forward_pass(weights, biases, a0)[-1][:, 0]
    penalty = 0.5 * l2 * sum(float(np.sum(w * w)) for w in weights)
    return _bce(p, y) + penalty


def _gradients(weights, biases, a0, y, l2):
    """Analytic gradients of loss_value w.r.t. every weight and bias.

    With a logistic output and BCE the output-layer error is exactly
    (p - y)/n, so no clipped logs appear anywhere in the backward pass.
    """
    acts = _forward_pass(weights, biases, a0)
    n = a0.shape[0]
    delta = (acts[-1] - y[:, None]) / n
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta + l2 * weights[k]
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * acts[k] * (1.0 - acts[k])
    return gw, gb


def train(
    X: np.ndarray,
    y: np.ndarray,
    hyper: Hyperparams | None = None,
    seed: int = 0,
    topology: str | None = None,
) -> MLPModel:
    """Fit the classifier; deterministic for a given seed.

    y holds 1 for unstable, 0 for stable; both classes must appear.
    A 10% validation holdout (seeded shuffle) drives early stopping on
    plain BCE with the configured patience; the best-epoch parameters
    are restored at the end.
    """
    if hyper is None:
        hyper = Hyperparams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, features) aligned with y")
    classes = np.unique(y)
    if not np.isin(classes, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 (stable) or 1 (unstable)")
    if classes.size < 2:
        raise ValueError("training set needs both classes present")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0.0] = 1.0  # constant features pass through as zeros
    Xs = (X - means) / stds

    rng = np.random.default_rng(seed)
    layer_sizes = (X.shape[1], *HIDDEN_LAYERS, 1)
    weights, biases = _init_params(layer_sizes, rng)

    n_val = int(round(hyper.val_fraction * len(y)))
    order = rng.permutation(len(y))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size == 0:
        raise ValueError("validation split left no training rows")
    Xtr, ytr = Xs[train_idx], y[train_idx]
    Xval, yval = Xs[val_idx], y[val_idx]

    mw = [np.zeros_like(w) for w in weights]
    vw = [np.zeros_like(w) for w in weights]
    mb = [np.zeros_like(b) for b in biases]
    vb = [np.zeros_like(b) for b in biases]
    t = 0

    def adam_step(params, grads, m, v):
        nonlocal t  # shared step count: weights and biases update together
        for k in range(len(params)):
            m[k] += (1.0 - hyper.beta1) * (grads[k] - m[k])
            v[k] += (1.0 - hyper.beta2) * (grads[k] ** 2 - v[k])
            mhat = m[k] / (1.0 - hyper.beta1**t)
            vhat = v[k] / (1.0 - hyper.beta2**t)
            params[k] -= hyper.lr * mhat / (np.sqrt(vhat) + hyper.eps)

    best_val = math.inf
    best_snapshot = None
    best_epoch = 0
    epochs_run = 0
    for epoch in range(1, hyper.max_epochs + 1):
        epochs_run = epoch
        perm = rng.permutation(len(ytr))
        for lo in range(0, len(perm), hyper.batch_size):
            batch = perm[lo : lo + hyper.batch_size]
            gw, gb = _gradients(weights, biases, Xtr[batch], ytr[batch], hyper.l2)
            t += 1
            adam_step(weights, gw, mw, vw)
            adam_step(biases, gb, mb, vb)

        if n_val:
            p_val = _forward_pass(weights, biases, Xval)[-1][:, 0]
            val_loss = _bce(p_val, yval)
        else:
            p_tr = _forward_pass(weights, biases, Xtr)[-1][:, 0]
            val_loss = _bce(p_tr, ytr)
        if val_loss < best_val:
            best_val = val_loss
            best_snapshot = ([w.copy() for w in weights], [b.copy() for b in biases])
            best_epoch = epoch
        elif epoch - best_epoch >= hyper.patience:
            break

    if best_snapshot is not None:
        weights, biases = best_snapshot

    model = MLPModel(
        layer_sizes=layer_sizes,
        weights=weights,
        biases=biases,
        feature_means=means,
        feature_stds=stds,
        hyperparams=hyper,
        topology=topology,
        metadata={"seed": seed, "epochs_run": epochs_run,
                  "best_epoch": best_epoch, "best_val_loss": best_val},
    )
    p = model.predict_proba(X)
    model.metadata["train_score"] = float(np.mean((p >= 0.5) == (y == 1.0)))
    return model.validate()


def gradient_check(
    model: MLPModel,
    X: np.ndarray,
    y: np.ndarray,
    n_checks: int = 100,
    step: float = 1e-6,
    seed: int = 0,
) -> float:
    """Max relative error of backprop vs central differences.

    Probes n_checks randomly chosen parameters (weights and biases) of
    the full objective including the L2 penalty.  Errors are measured
    relative to the largest probed gradient magnitude: with a fixed
    step the finite difference carries absolute roundoff noise around
    eps*loss/step, so a per-coordinate relative error on entries far
    below that scale would report noise, not backprop defects.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(X) == 0:
        raise ValueError("gradient check needs a nonempty batch")
    a0 = model.standardize(X)
    l2 = model.hyperparams.l2
    gw, gb = _gradients(model.weights, model.biases, a0, y, l2)
    rng = np.random.default_rng(seed)
    arrays = list(zip(model.weights, gw)) + list(zip(model.biases, gb))
    probes = []
    for _ in range(n_checks):
        arr, grad = arrays[rng.integers(len(arrays))]
        idx = tuple(rng.integers(s) for s in arr.shape)
        keep = arr[idx]
        arr[idx] = keep + step
        up = loss_value(model.weights, model.biases, a0, y, l2)
        arr[idx] = keep - step
        down = loss_value(model.weights, model.biases, a0, y, l2)
        arr[idx] = keep
        fd = (up - down) / (2.0 * step)
        probes.append((grad[idx], fd))
    scale = max(max(abs(an), abs(fd)) for an, fd in probes)
    scale = max(scale, 1e-8)
    return max(abs(an - fd) / max(abs(an), abs(fd), scale) for an, fd in probes)


def save(model: MLPModel, path: str | Path):
    """Write the model as versioned JSON; floats round-trip bitwise."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "topology": model.topology,
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.tolist() for w in model.weights],  # row-major
        "biases": [b.tolist() for b in model.biases],
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "hyperparams": model.hyperparams.to_dict(),
        "metadata": model.metadata,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load(path: str | Path) -> MLPModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as ex:
        raise ValueError(f"corrupt model file {path}: {ex}") from ex
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path} is not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(
            f"unsupported model version {doc.get('version')} "
            f"(expected {MODEL_VERSION})"
        )
    model = MLPModel(
        layer_sizes=tuple(doc["layer_sizes"]),
        weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
        feature_stds=np.asarray(doc["feature_stds"], dtype=np.float64),
        hyperparams=Hyperparams(**doc["hyperparams"]),
        topology=doc.get("topology"),
        metadata=doc.get("metadata", {}),
    )
    shapes_ok = all(
        w.shape == (model.layer_sizes[k], model.layer_sizes[k + 1])
        and model.biases[k].shape == (model.layer_sizes[k + 1],)
        for k, w in enumerate(model.weights)
    ) and len(model.weights) == len(model.layer_sizes) - 1
    if not shapes_ok:
        raise ValueError(f"corrupt model file {path}: shape mismatch")
    return model.validate()
