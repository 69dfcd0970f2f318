"""Small dense classifiers trained with backpropagation in numpy.

A `Network` is a stack of affine layers with tanh or ReLU hidden
activations and either a softmax output (k classes) or a single sigmoid unit
(binary membership attack models). Logistic regression is the network with
no hidden layer.
"""

from __future__ import annotations

import dataclasses
import enum
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from infaudit.datasets import LabeledDataset

CONFIDENCE_FLOOR = 1e-12
CHECKPOINT_MAGIC = b"INFA1"


class Activation(str, enum.Enum):
    TANH = "tanh"
    RELU = "relu"


class Optimizer(str, enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


class TrainingError(RuntimeError):
    pass


class TrainingDiverged(TrainingError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became NaN/inf at epoch {epoch}")
        self.epoch = epoch


_BLOCK = 1024  # rows per forward-pass block on large batches


@dataclasses.dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple[int, ...] = (128,)
    activation: Activation = Activation.TANH
    epochs: int = 100
    batch_size: int | None = 64  # None trains full-batch
    learning_rate: float = 1e-3
    optimizer: Optimizer = Optimizer.ADAM
    seed: int = 0
    l2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def replace(self, **changes) -> MlpConfig:
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True, eq=False)
class Network:
    weights: tuple[np.ndarray, ...]  # (fan_in, fan_out) per layer
    biases: tuple[np.ndarray, ...]
    activation: Activation = Activation.TANH
    output: str = "softmax"  # or "sigmoid"
    train_loss: float = 0.0

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def k(self) -> int:
        """Number of classes (2 for a sigmoid unit)."""
        width = self.weights[-1].shape[1]
        return 2 if self.output == "sigmoid" else width

    def _hidden(self, z: np.ndarray) -> np.ndarray:
        return np.tanh(z) if self.activation is Activation.TANH else np.maximum(z, 0.0)

    def _finish(self, z: np.ndarray) -> np.ndarray:
        """Runs the network from the first layer's pre-activation `z`."""
        for W, b in zip(self.weights[1:], self.biases[1:]):
            z = self._hidden(z) @ W + b
        return z

    def logits(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} features, got {X.shape[1]}")
        if X.shape[0] <= _BLOCK:
            return self._finish(X @ self.weights[0] + self.biases[0])
        # cache-sized row blocks; rows are independent
        return np.vstack([
            self._finish(X[s : s + _BLOCK] @ self.weights[0] + self.biases[0])
            for s in range(0, X.shape[0], _BLOCK)
        ])

    def _probabilities(self, z: np.ndarray) -> np.ndarray:
        if self.output == "sigmoid":
            return _sigmoid(z[:, 0])
        return softmax(z)

    def predict_proba(self, X) -> np.ndarray:
        """Class confidences, shape (n, k); a sigmoid network returns shape (n,)."""
        return self._probabilities(self.logits(X))

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        if self.output == "sigmoid":
            return (p >= 0.5).astype(np.int64)
        return np.argmax(p, axis=1)

    def predict_proba_completions(self, known, unknown: Sequence[int], assignments) -> np.ndarray:
        """Confidences for every completion of a partially known vector.

        `known` holds the vector with zeros at `unknown`; each row of
        `assignments` supplies the values for the unknown slots. Only the
        unknown columns of the first layer are recomputed per completion.
        """
        known = np.asarray(known, dtype=float)
        assignments = np.asarray(assignments, dtype=float)
        base = known @ self.weights[0] + self.biases[0]
        W_s = self.weights[0][list(unknown)]
        out = []
        for start in range(0, assignments.shape[0], _BLOCK):
            z = assignments[start : start + _BLOCK] @ W_s
            z += base
            out.append(self._finish(z))
        return self._probabilities(np.vstack(out))

    def zeros_like(self) -> Network:
        return dataclasses.replace(
            self,
            weights=tuple(np.zeros_like(W) for W in self.weights),
            biases=tuple(np.zeros_like(b) for b in self.biases),
        )


@dataclasses.dataclass(frozen=True)
class TrainReport:
    train_accuracy: float
    train_loss: float
    epochs_run: int
    seed: int
    test_accuracy: float | None = None
    test_loss: float | None = None
    generalization_error: float | None = None
    eq1_loss_difference: float | None = None  # train loss - test loss (cross-entropy)
    loss_history: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("loss_history")
        return d


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cross_entropy_loss(confidences, true_label) -> np.ndarray | float:
    """-log of the true-label confidence, floored at 1e-12.

    Works on one confidence vector with an integer label, or on a batch of
    shape (n, k) with n labels.
    """
    p = np.asarray(confidences, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    y = np.atleast_1d(np.asarray(true_label, dtype=np.int64))
    if y.shape[0] != p.shape[0]:
        raise ValueError("one label per confidence vector is required")
    if np.any(y < 0) or np.any(y >= p.shape[1]):
        raise ValueError(f"label out of range for {p.shape[1]} classes")
    loss = -np.log(np.maximum(p[np.arange(p.shape[0]), y], CONFIDENCE_FLOOR))
    return float(loss[0]) if single else loss


def predict_proba(model: Network, x) -> np.ndarray:
    return model.predict_proba(x)


# ---------------------------------------------------------------- training


def init_network(
    layer_sizes: Sequence[int],
    activation: Activation,
    rng: np.random.Generator,
    output: str = "softmax",
) -> Network:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Network(tuple(weights), tuple(biases), Activation(activation), output)


def loss_and_grads(net: Network, X: np.ndarray, targets: np.ndarray, l2: float = 0.0):
    """Mean loss over the batch and its gradient for every weight and bias.

    `targets` are class indices for softmax networks and 0/1 values for a
    sigmoid network.
    """
    acts = [X]
    pre = []
    h = X
    last = len(net.weights) - 1
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        pre.append(z)
        if i < last:
            h = net._hidden(z)
            acts.append(h)
    n = X.shape[0]
    z = pre[-1]
    if net.output == "sigmoid":
        t = targets.astype(float).reshape(-1, 1)
        # stable BCE with logits: softplus(z) - t z
        loss = float(np.mean(np.logaddexp(0.0, z) - t * z))
        delta = (_sigmoid(z[:, 0])[:, None] - t) / n
    else:
        p = softmax(z)
        rows = np.arange(n)
        loss = float(np.mean(-np.log(np.maximum(p[rows, targets], 1e-300))))
        delta = p
        delta[rows, targets] -= 1.0
        delta /= n
    if l2:
        loss += 0.5 * l2 * sum(float((W**2).sum()) for W in net.weights)
    gW = [None] * len(net.weights)
    gb = [None] * len(net.weights)
    for i in range(last, -1, -1):
        gW[i] = acts[i].T @ delta + (l2 * net.weights[i] if l2 else 0.0)
        gb[i] = delta.sum(axis=0)
        if i > 0:
            back = delta @ net.weights[i].T
            if net.activation is Activation.TANH:
                delta = back * (1.0 - acts[i] ** 2)
            else:
                delta = back * (pre[i - 1] > 0)
    return loss, gW, gb


def fit_network(
    net: Network,
    X: np.ndarray,
    targets: np.ndarray,
    cfg: MlpConfig,
    rng: np.random.Generator,
) -> tuple[Network, list[float]]:
    """Trains a copy of `net`; returns it with the per-epoch mean loss."""
    W = [w.copy() for w in net.weights]
    B = [b.copy() for b in net.biases]
    params = W + B
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    n = X.shape[0]
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    history = []
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = np.arange(n) if cfg.batch_size is None else rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            cur = dataclasses.replace(net, weights=tuple(W), biases=tuple(B))
            loss, gW, gb = loss_and_grads(cur, X[idx], targets[idx], cfg.l2)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            total += loss * len(idx)
            step += 1
            grads = gW + gb
            for j, (p, g) in enumerate(zip(params, grads)):
                if cfg.optimizer is Optimizer.ADAM:
                    m1[j] = beta1 * m1[j] + (1 - beta1) * g
                    m2[j] = beta2 * m2[j] + (1 - beta2) * g * g
                    mhat = m1[j] / (1 - beta1**step)
                    vhat = m2[j] / (1 - beta2**step)
                    p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
                else:
                    p -= cfg.learning_rate * g
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(epoch)
        history.append(epoch_loss)
    return dataclasses.replace(net, weights=tuple(W), biases=tuple(B)), history


def _check_training_set(train: LabeledDataset, k: int) -> None:
    if len(train) == 0:
        raise TrainingError("training set is empty")
    if k < 2:
        raise TrainingError(f"classification needs at least 2 classes, got k={k}")
    if train.y.min() < 0 or train.y.max() >= k:
        raise TrainingError(f"labels must lie in [0, {k})")


def _train(
    train: LabeledDataset, k: int, cfg: MlpConfig, hidden: tuple[int, ...], test=None
) -> tuple[Network, TrainReport]:
    _check_training_set(train, k)
    rng = np.random.default_rng(cfg.seed)
    net = init_network([train.m, *hidden, k], cfg.activation, rng)
    net, history = fit_network(net, train.X, train.y, cfg, rng)
    train_loss = float(np.mean(cross_entropy_loss(net.predict_proba(train.X), train.y)))
    net = dataclasses.replace(net, train_loss=train_loss)
    train_acc = accuracy(net, train)
    fields = dict(
        train_accuracy=train_acc,
        train_loss=train_loss,
        epochs_run=len(history),
        seed=cfg.seed,
        loss_history=tuple(history),
    )
    if test is not None and len(test):
        test_loss = float(np.mean(cross_entropy_loss(net.predict_proba(test.X), test.y)))
        test_acc = accuracy(net, test)
        fields.update(
            test_accuracy=test_acc,
            test_loss=test_loss,
            generalization_error=train_acc - test_acc,
            eq1_loss_difference=train_loss - test_loss,
        )
    return net, TrainReport(**fields)


def train_mlp(
    train: LabeledDataset, k: int, cfg: MlpConfig = MlpConfig(), test: LabeledDataset | None = None
) -> tuple[Network, TrainReport]:
    """Trains a multilayer perceptron with softmax output on `train`."""
    return _train(train, k, cfg, cfg.hidden_layers, test)


def train_logistic(
    train: LabeledDataset, k: int, cfg: MlpConfig = MlpConfig(), test: LabeledDataset | None = None
) -> tuple[Network, TrainReport]:
    """Multinomial logistic regression: the same loop without hidden layers."""
    return _train(train, k, cfg, (), test)


def accuracy(model: Network, data: LabeledDataset) -> float:
    return float(np.mean(model.predict(data.X) == data.y))


def generalization_error(model: Network, train: LabeledDataset, test: LabeledDataset) -> float:
    """Train accuracy minus test accuracy (0-1 loss gap)."""
    if len(train) == 0 or len(test) == 0:
        raise ValueError("train and test sets must be non-empty")
    return accuracy(model, train) - accuracy(model, test)


def eq1_loss_difference(model: Network, train: LabeledDataset, test: LabeledDataset) -> float:
    """Mean cross-entropy on train minus mean cross-entropy on test."""
    tr = np.mean(cross_entropy_loss(model.predict_proba(train.X), train.y))
    te = np.mean(cross_entropy_loss(model.predict_proba(test.X), test.y))
    return float(tr - te)


# ---------------------------------------------------------------- checkpoints

_ACTIVATIONS = [Activation.TANH, Activation.RELU]
_OUTPUTS = ["softmax", "sigmoid"]


def _pack_network(net: Network) -> bytes:
    parts = [
        struct.pack(
            "<IIId",
            _ACTIVATIONS.index(net.activation),
            _OUTPUTS.index(net.output),
            len(net.weights),
            net.train_loss,
        )
    ]
    for W, b in zip(net.weights, net.biases):
        rows, cols = W.shape
        parts.append(struct.pack("<II", rows, cols))
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack_network(buf: memoryview, offset: int) -> tuple[Network, int]:
    act, out, n_layers, train_loss = struct.unpack_from("<IIId", buf, offset)
    offset += struct.calcsize("<IIId")
    weights, biases = [], []
    for _ in range(n_layers):
        rows, cols = struct.unpack_from("<II", buf, offset)
        offset += 8
        W = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += 8 * rows * cols
        b = np.frombuffer(buf, dtype="<f8", count=cols, offset=offset)
        offset += 8 * cols
        weights.append(W.astype(float))
        biases.append(b.astype(float))
    net = Network(tuple(weights), tuple(biases), _ACTIVATIONS[act], _OUTPUTS[out], train_loss)
    return net, offset


def dumps_checkpoint(networks: Sequence[Network], kind: int = 0, extra: bytes = b"") -> bytes:
    """Serialises networks: magic, kind, count, then each network's blocks.

    `kind` 0 marks a target model, 1 a shadow attack model. `extra` is an
    opaque trailer (length-prefixed) for owner metadata.
    """
    body = b"".join(_pack_network(n) for n in networks)
    head = CHECKPOINT_MAGIC + struct.pack("<II", kind, len(networks))
    return head + body + struct.pack("<I", len(extra)) + extra


def loads_checkpoint(data: bytes) -> tuple[int, list[Network], bytes]:
    if data[:5] != CHECKPOINT_MAGIC:
        raise ValueError("not an INFA1 checkpoint")
    buf = memoryview(data)
    kind, count = struct.unpack_from("<II", buf, 5)
    offset = 13
    nets = []
    for _ in range(count):
        net, offset = _unpack_network(buf, offset)
        nets.append(net)
    (n_extra,) = struct.unpack_from("<I", buf, offset)
    extra = bytes(buf[offset + 4 : offset + 4 + n_extra])
    return kind, nets, extra


def save_model(model: Network, path: str | Path) -> None:
    Path(path).write_bytes(dumps_checkpoint([model], kind=0))


def load_model(path: str | Path) -> Network:
    kind, nets, _ = loads_checkpoint(Path(path).read_bytes())
    if kind != 0 or len(nets) != 1:
        raise ValueError(f"{path} does not hold a single target model")
    return nets[0]
