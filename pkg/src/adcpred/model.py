"""Classifier head and training loop.

Architecture: two fully connected layers with LeakyReLU between them
and a sigmoid on the single output logit. Training is mini-batch Adam
on binary cross-entropy, with validation-AUC early stopping: the best
parameters are snapshotted whenever the score strictly improves and
training halts after `patience` consecutive non-improving epochs.

Everything is plain numpy and deterministic per seed. Sample order is
canonicalized by content digest before the seeded shuffle, so feeding
the same set in a different order cannot change the result.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .embeddings import DarScaler, DimensionMismatch
from .errors import AdcpredError
from .metrics import roc_auc


class SingleClassValidation(AdcpredError):
    pass


EPS_CLAMP = 1e-7


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    hidden_dim: int = 256
    l2_penalty: float = 0.0
    max_epochs: int = 200
    patience: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be non-negative")

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "hidden_dim": self.hidden_dim,
            "l2_penalty": self.l2_penalty,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
        }


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray     # (out_dim,)

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise DimensionMismatch("dense layer shapes")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionMismatch("bias length must match output dim")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("non-finite parameters")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpClassifier:
    hidden: DenseLayer
    output: DenseLayer
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.hidden.out_dim != self.output.in_dim:
            raise DimensionMismatch("hidden out_dim must equal output in_dim")
        if self.output.out_dim != 1:
            raise DimensionMismatch("output layer must have a single unit")

    @property
    def in_dim(self) -> int:
        return self.hidden.in_dim

    def parameters(self) -> list[np.ndarray]:
        return [self.hidden.weights, self.hidden.bias,
                self.output.weights, self.output.bias]

    def copy(self) -> "MlpClassifier":
        return MlpClassifier(
            hidden=DenseLayer(self.hidden.weights.copy(), self.hidden.bias.copy()),
            output=DenseLayer(self.output.weights.copy(), self.output.bias.copy()),
            leaky_slope=self.leaky_slope,
        )


def init_classifier(in_dim: int, hidden_dim: int, seed: int,
                    leaky_slope: float = 0.01) -> MlpClassifier:
    """Seeded uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)

    def glorot(out_dim, fan_in):
        limit = np.sqrt(6.0 / (fan_in + out_dim))
        return rng.uniform(-limit, limit, size=(out_dim, fan_in))

    return MlpClassifier(
        hidden=DenseLayer(glorot(hidden_dim, in_dim), np.zeros(hidden_dim)),
        output=DenseLayer(glorot(1, hidden_dim), np.zeros(1)),
        leaky_slope=leaky_slope,
    )


def _as_matrix(x, in_dim: int) -> np.ndarray:
    arr = getattr(x, "x", x)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != in_dim:
        raise DimensionMismatch(f"expected {in_dim} features, got shape {arr.shape}")
    return arr


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0, z, slope * z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(m: MlpClassifier, x) -> float:
    """Probability for one feature vector."""
    return float(forward_batch(m, x)[0])


def forward_batch(m: MlpClassifier, x) -> np.ndarray:
    xm = _as_matrix(x, m.in_dim)
    h = _leaky(xm @ m.hidden.weights.T + m.hidden.bias, m.leaky_slope)
    logits = h @ m.output.weights.T + m.output.bias
    return _sigmoid(logits[:, 0])


def loss_and_gradients(m: MlpClassifier, x, labels,
                       l2_penalty: float = 0.0) -> tuple[float, list[np.ndarray]]:
    """Mean clamped BCE plus l2 * ||W||^2, with backprop gradients
    ordered like m.parameters()."""
    xm = _as_matrix(x, m.in_dim)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.shape[0] != xm.shape[0]:
        raise DimensionMismatch(f"{xm.shape[0]} samples vs {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    n = xm.shape[0]

    pre = xm @ m.hidden.weights.T + m.hidden.bias
    h = _leaky(pre, m.leaky_slope)
    logits = (h @ m.output.weights.T + m.output.bias)[:, 0]
    p = _sigmoid(logits)
    p_hat = np.clip(p, EPS_CLAMP, 1.0 - EPS_CLAMP)

    bce = -np.mean(y * np.log(p_hat) + (1.0 - y) * np.log(1.0 - p_hat))
    penalty = l2_penalty * (
        float(np.sum(m.hidden.weights**2)) + float(np.sum(m.output.weights**2))
    )
    loss = float(bce + penalty)

    # d(bce)/d(logit) is (p - y)/n except where the clamp flattened it.
    clamped = (p < EPS_CLAMP) | (p > 1.0 - EPS_CLAMP)
    grad_logit = np.where(clamped, 0.0, p - y) / n

    grad_w2 = grad_logit[None, :] @ h + 2.0 * l2_penalty * m.output.weights
    grad_b2 = np.array([grad_logit.sum()])
    grad_h = grad_logit[:, None] @ m.output.weights
    grad_pre = grad_h * np.where(pre >= 0, 1.0, m.leaky_slope)
    grad_w1 = grad_pre.T @ xm + 2.0 * l2_penalty * m.hidden.weights
    grad_b1 = grad_pre.sum(axis=0)

    return loss, [grad_w1, grad_b1, grad_w2, grad_b2]


class Adam:
    """Adaptive-moment gradient steps (beta1 0.9, beta2 0.999, eps 1e-8)."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]):
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class ArrayDataset:
    x: np.ndarray  # (n, dim)
    y: np.ndarray  # (n,) of {0, 1}

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise DimensionMismatch("feature matrix and labels disagree")
        if self.x.shape[0] == 0:
            raise ValueError("empty dataset")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class Checkpoint:
    model: MlpClassifier
    config: TrainConfig
    layout: tuple[tuple[str, int, int], ...] | None = None
    dar_scaler: DarScaler | None = None
    history: list[dict] = field(default_factory=list)
    version: int = 1

    @property
    def best_val_auc(self) -> float | None:
        best = None
        for row in self.history:
            if row.get("is_best") and (best is None or row["val_auc"] > best):
                best = row["val_auc"]
        return best


def _canonical_order(ds: ArrayDataset) -> np.ndarray:
    """Order samples by a content digest so that the input ordering of
    equal sets never influences shuffling or batching."""
    digests = []
    for i in range(len(ds)):
        h = hashlib.sha256(ds.x[i].tobytes())
        h.update(bytes([int(ds.y[i])]))
        digests.append(h.digest())
    return np.array(sorted(range(len(ds)), key=lambda i: (digests[i], i)))


def train(train_set: ArrayDataset, val_set: ArrayDataset, config: TrainConfig,
          layout=None, dar_scaler: DarScaler | None = None) -> tuple[Checkpoint, list[dict]]:
    """Mini-batch training with AUC-monitored early stopping.

    Snapshots parameters whenever validation AUC strictly improves;
    stops after `patience` consecutive epochs without improvement, or
    at max_epochs. Returns the snapshot, never the final weights.
    """
    if len(set(val_set.y.tolist())) < 2:
        raise SingleClassValidation("validation set must contain both classes")

    order = _canonical_order(train_set)
    x = train_set.x[order]
    y = train_set.y[order]
    n = x.shape[0]

    model = init_classifier(x.shape[1], config.hidden_dim, config.seed)
    optimizer = Adam(model.parameters(), config.learning_rate)
    rng = np.random.default_rng(config.seed)

    best_model = model.copy()
    best_auc = -np.inf
    stale = 0
    history: list[dict] = []

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            loss, grads = loss_and_gradients(
                model, x[batch], y[batch], config.l2_penalty
            )
            optimizer.step(grads)
            losses.append(loss)

        val_auc = roc_auc(forward_batch(model, val_set.x), val_set.y)
        improved = val_auc > best_auc
        if improved:
            best_auc = val_auc
            best_model = model.copy()
            stale = 0
        else:
            stale += 1
        history.append({
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_auc": float(val_auc),
            "is_best": bool(improved),
        })
        if stale >= config.patience:
            break

    checkpoint = Checkpoint(
        model=best_model,
        config=config,
        layout=tuple(layout) if layout is not None else None,
        dar_scaler=dar_scaler,
        history=history,
    )
    return checkpoint, history


SEARCH_SPACE_DEFAULT: dict[str, tuple] = {
    "hidden_dim": (64, 128, 256, 512),
    "learning_rate": (1e-4, 3e-4, 1e-3),
    "batch_size": (16, 32, 64),
    "l2_penalty": (0.0, 1e-5, 1e-4),
}


def random_sampler(space: dict[str, tuple], n_trials: int, rng: np.random.Generator):
    """Default search strategy: independent uniform draws per axis."""
    keys = sorted(space)
    for _ in range(n_trials):
        yield {k: space[k][int(rng.integers(len(space[k])))] for k in keys}


@dataclass
class SearchResult:
    best_config: TrainConfig
    trials: list[dict]


def hyperparameter_search(train_set: ArrayDataset, val_set: ArrayDataset,
                          space: dict[str, tuple] | None = None,
                          n_trials: int = 30,
                          seeds: tuple[int, ...] = (0,),
                          base: TrainConfig | None = None,
                          master_seed: int = 0,
                          sampler=None) -> SearchResult:
    """Sampled search over the config space; repeated draws of an
    already-evaluated config are skipped, so a single-point space costs
    one training run. Score is the mean best val AUC across seeds."""
    if space is None:
        space = SEARCH_SPACE_DEFAULT
    if not space or any(len(v) == 0 for v in space.values()):
        raise ValueError("search space must be non-empty")
    base = base or TrainConfig()
    draw = sampler or random_sampler
    rng = np.random.default_rng(master_seed)

    trials: list[dict] = []
    evaluated: dict[tuple, float] = {}
    best_config = None
    best_score = -np.inf
    for index, assignment in enumerate(draw(space, n_trials, rng)):
        key = tuple(sorted(assignment.items()))
        if key in evaluated:
            continue
        scores = []
        for seed in seeds:
            config = replace(base, seed=seed, **assignment)
            checkpoint, _ = train(train_set, val_set, config)
            scores.append(checkpoint.best_val_auc or 0.0)
        score = float(np.mean(scores))
        evaluated[key] = score
        trials.append({"trial": index, "params": dict(assignment), "val_auc": score})
        if score > best_score:
            best_score = score
            best_config = replace(base, seed=seeds[0], **assignment)
    return SearchResult(best_config=best_config, trials=trials)
