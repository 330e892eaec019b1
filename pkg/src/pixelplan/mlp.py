"""Minimal fully-connected network with hand-rolled backpropagation and Adam,
used to predict joint displacements from concatenated image-state pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDivergedError, ValidationError
from .pairs import PairSample
from .types import ImageState


def _tanh(x):
    return np.tanh(x)


def _tanh_grad(activated):
    return 1.0 - activated ** 2


ACTIVATIONS = {"tanh": (_tanh, _tanh_grad)}


@dataclass(frozen=True)
class MlpSpec:
    """Network shape: layer sizes input-first, smooth hidden nonlinearity,
    identity output."""

    layer_sizes: tuple[int, ...]
    activation: str = "tanh"
    seed: int = 0

    def validate(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ValidationError("need at least input and output layers")
        if any(s < 1 for s in self.layer_sizes):
            raise ValidationError("layer sizes must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Adam training hyperparameters (mean squared error loss)."""

    learning_rate: float = 0.005
    batch_size: int = 32
    epochs: int = 400
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shuffle_seed: int = 0

    def validate(self) -> None:
        if min(self.learning_rate, self.batch_size, self.epochs) < 0:
            raise ValidationError("hyperparameters must be nonnegative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("batch_size and epochs must be >= 1")


class Mlp:
    """Plain numpy MLP; weights[i] has shape (fan_in, fan_out)."""

    def __init__(self, spec: MlpSpec):
        spec.validate()
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(spec.layer_sizes, spec.layer_sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._act, self._act_grad = ACTIVATIONS[spec.activation]

    @property
    def input_size(self) -> int:
        return self.spec.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.spec.layer_sizes[-1]

    def forward(self, x) -> np.ndarray:
        """Batch (B, in) -> (B, out); a single vector maps to a vector."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.input_size:
            raise ValidationError(
                f"input width {h.shape[1]} does not match network input {self.input_size}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = self._act(h)
        return h[0] if single else h

    def _forward_cached(self, x):
        """Forward pass keeping post-activation values for backprop."""
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = self._act(h)
            acts.append(h)
        return acts

    def backward(self, x, y) -> tuple[list[np.ndarray], list[np.ndarray], float]:
        """Gradients of the batch MSE loss w.r.t. every weight and bias.

        Loss = mean over batch elements and output dims of squared error.
        Returns (weight grads, bias grads, loss).
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if x.shape[0] == 0:
            raise ValidationError("batch must be nonempty")
        acts = self._forward_cached(x)
        pred = acts[-1]
        resid = pred - y
        loss = float(np.mean(resid ** 2))

        grad_w = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        delta = 2.0 * resid / resid.size
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = acts[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * self._act_grad(acts[i])
        return grad_w, grad_b, loss

    def parameters(self):
        return self.weights + self.biases

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.spec.layer_sizes),
            "activation": self.spec.activation,
            "seed": self.spec.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @staticmethod
    def from_dict(data) -> "Mlp":
        net = Mlp(MlpSpec(tuple(int(s) for s in data["layer_sizes"]),
                          str(data["activation"]), int(data["seed"])))
        net.weights = [np.asarray(w, dtype=float) for w in data["weights"]]
        net.biases = [np.asarray(b, dtype=float) for b in data["biases"]]
        return net


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = c.beta1 * self.m[i] + (1 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1 - c.beta2) * g ** 2
            m_hat = self.m[i] / (1 - c.beta1 ** self.t)
            v_hat = self.v[i] / (1 - c.beta2 ** self.t)
            p -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def train(net: Mlp, x, y, cfg: TrainConfig) -> list[float]:
    """Minibatch Adam on MSE; mutates `net` and returns the per-epoch loss
    history (mean of batch losses).  Deterministic for a fixed shuffle seed."""
    cfg.validate()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0:
        raise ValidationError("training set must be nonempty")
    rng = np.random.default_rng(cfg.shuffle_seed)
    opt = _Adam(net.parameters(), cfg)
    history = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(x.shape[0])
        total, count = 0.0, 0
        for start in range(0, x.shape[0], cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            gw, gb, loss = net.backward(x[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    "training loss is not finite; try a lower learning_rate")
            opt.step(net.weights + net.biases, gw + gb)
            total += loss * len(idx)
            count += len(idx)
        history.append(total / count)
    return history


@dataclass(frozen=True)
class EvalMetrics:
    """rmse/mae over all outputs; r2 averaged per output dimension, None when
    every target dimension has zero variance."""

    rmse: float
    mae: float
    r2: float | None

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "r2": self.r2}


def evaluate(net: Mlp, x, y) -> EvalMetrics:
    """Standard regression metrics of net predictions against targets."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0:
        raise ValidationError("evaluation set must be nonempty")
    pred = net.forward(x)
    resid = pred - y
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    mae = float(np.mean(np.abs(resid)))
    ss_res = np.sum(resid ** 2, axis=0)
    ss_tot = np.sum((y - y.mean(axis=0)) ** 2, axis=0)
    defined = ss_tot > 1e-12
    r2 = float(np.mean(1.0 - ss_res[defined] / ss_tot[defined])) if defined.any() else None
    return EvalMetrics(rmse, mae, r2)


@dataclass
class DisplacementModel:
    """Trained displacement predictor with its input standardization.

    Inputs are the two flattened image states concatenated (4N values),
    standardized per-dimension with statistics from the training split.
    The true displacement is antisymmetric under swapping the two states, so
    prediction uses (f(a,b) - f(b,a)) / 2 by default, which pins the
    displacement between identical states to exactly zero.
    """

    net: Mlp
    input_mean: np.ndarray
    input_std: np.ndarray
    antisymmetrize: bool = True

    @property
    def n_keypoints(self) -> int:
        return self.net.input_size // 4

    @property
    def m_joints(self) -> int:
        return self.net.output_size

    def _raw(self, raw_inputs) -> np.ndarray:
        raw = np.atleast_2d(np.asarray(raw_inputs, dtype=float))
        return self.net.forward((raw - self.input_mean) / self.input_std)

    def predict_batch(self, raw_inputs) -> np.ndarray:
        """(B, 4N) raw pixel inputs -> (B, M) displacement predictions."""
        raw = np.atleast_2d(np.asarray(raw_inputs, dtype=float))
        if not self.antisymmetrize:
            return self._raw(raw)
        half = raw.shape[1] // 2
        swapped = np.hstack([raw[:, half:], raw[:, :half]])
        return 0.5 * (self._raw(raw) - self._raw(swapped))

    def predict_pair(self, a: ImageState, b: ImageState) -> np.ndarray:
        return self.predict_batch(np.concatenate([a.flatten(), b.flatten()]))[0]

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(),
                "input_mean": self.input_mean.tolist(),
                "input_std": self.input_std.tolist(),
                "antisymmetrize": self.antisymmetrize}

    @staticmethod
    def from_dict(data) -> "DisplacementModel":
        return DisplacementModel(Mlp.from_dict(data["net"]),
                                 np.asarray(data["input_mean"], dtype=float),
                                 np.asarray(data["input_std"], dtype=float),
                                 bool(data.get("antisymmetrize", True)))


def pairs_to_arrays(samples: list[PairSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack PairSamples into (inputs, targets) arrays."""
    x = np.array([np.concatenate([s.k_start.flatten(), s.k_end.flatten()])
                  for s in samples])
    y = np.array([s.dq for s in samples])
    return x, y


def train_displacement_model(train_pairs: list[PairSample],
                             val_pairs: list[PairSample],
                             cfg: TrainConfig,
                             hidden: tuple[int, ...] = (64, 64),
                             seed: int = 0):
    """Train the displacement predictor on pair samples.

    Returns (model, loss_history, validation EvalMetrics or None).
    """
    x_train, y_train = pairs_to_arrays(train_pairs)
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)

    spec = MlpSpec((x_train.shape[1],) + tuple(hidden) + (y_train.shape[1],),
                   seed=seed)
    net = Mlp(spec)
    history = train(net, (x_train - mean) / std, y_train, cfg)
    model = DisplacementModel(net, mean, std)

    val_metrics = None
    if val_pairs:
        x_val, y_val = pairs_to_arrays(val_pairs)
        val_metrics = evaluate(net, (x_val - mean) / std, y_val)
    return model, history, val_metrics
