"""Dense tanh autoencoder trained with Adam, written directly on numpy.

The network has three encoder and three decoder layers, all as wide as the
number of items. Training reconstructs each binary row from itself and
stops once the epoch-to-epoch loss change falls below a threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import BinaryMatrix

N_LAYERS = 6


@dataclass
class LayerParams:
    weights: np.ndarray  # [out_dim, in_dim]
    biases: np.ndarray  # [out_dim]

    def copy(self) -> "LayerParams":
        return LayerParams(self.weights.copy(), self.biases.copy())


@dataclass
class AEModel:
    layers: list[LayerParams]
    seed: int | None = None

    def __post_init__(self):
        width = self.layers[0].weights.shape[1]
        for layer in self.layers:
            if layer.weights.shape != (width, width) or layer.biases.shape != (width,):
                raise ValueError("all layers must be square with the same width")

    @property
    def width(self) -> int:
        return self.layers[0].weights.shape[1]

    def copy(self) -> "AEModel":
        return AEModel([layer.copy() for layer in self.layers], self.seed)

    def parameters(self) -> list[np.ndarray]:
        """Flat list of parameter arrays in (W0, b0, W1, b1, ...) order."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def equals(self, other: "AEModel") -> bool:
        return len(self.layers) == len(other.layers) and all(
            np.array_equal(a, b) for a, b in zip(self.parameters(), other.parameters())
        )

    def save(self, path) -> None:
        payload = {
            "seed": self.seed,
            "layers": [
                {
                    "shape": list(layer.weights.shape),
                    "weights": layer.weights.ravel().tolist(),
                    "biases": layer.biases.tolist(),
                }
                for layer in self.layers
            ],
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path) -> "AEModel":
        payload = json.loads(Path(path).read_text())
        layers = [
            LayerParams(
                np.asarray(entry["weights"], dtype=np.float64).reshape(entry["shape"]),
                np.asarray(entry["biases"], dtype=np.float64),
            )
            for entry in payload["layers"]
        ]
        return cls(layers, payload.get("seed"))


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 100
    loss_delta_threshold: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be at least 1")
        if self.loss_delta_threshold < 0:
            raise ValueError("loss_delta_threshold must be non-negative")


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros_like(cls, model: AEModel) -> "AdamState":
        params = model.parameters()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def init_model(item_count: int, seed: int) -> AEModel:
    """Six square layers, weights and biases uniform in +-1/sqrt(fan_in)."""
    if item_count < 2:
        raise ValueError("an autoencoder needs at least 2 items")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(item_count)
    layers = [
        LayerParams(
            rng.uniform(-bound, bound, size=(item_count, item_count)),
            rng.uniform(-bound, bound, size=item_count),
        )
        for _ in range(N_LAYERS)
    ]
    return AEModel(layers, seed)


def _forward_all(model: AEModel, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for layer in model.layers:
        acts.append(np.tanh(acts[-1] @ layer.weights.T + layer.biases))
    return acts


def forward(model: AEModel, inputs) -> np.ndarray:
    """Run one vector (or a batch of row vectors) through the network."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != model.width:
        raise ValueError(f"input width {x.shape[-1]} != model width {model.width}")
    return _forward_all(model, x)[-1]


def mse_loss(output, target) -> float:
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ValueError(f"shape mismatch {output.shape} vs {target.shape}")
    return float(np.mean((output - target) ** 2))


def loss_and_gradients(model: AEModel, x: np.ndarray, y: np.ndarray):
    """Mean squared error over all batch elements and its parameter gradients.

    Gradients come back in the order of :meth:`AEModel.parameters`.
    """
    acts = _forward_all(model, x)
    out = acts[-1]
    diff = out - y
    loss = float(np.mean(diff**2))
    grad_out = 2.0 * diff / diff.size
    grads: list[np.ndarray] = [None] * (2 * len(model.layers))
    for k in range(len(model.layers) - 1, -1, -1):
        delta = grad_out * (1.0 - acts[k + 1] ** 2)
        grads[2 * k] = delta.T @ acts[k]
        grads[2 * k + 1] = delta.sum(axis=0)
        grad_out = delta @ model.layers[k].weights
    return loss, grads


def adam_step(model: AEModel, adam: AdamState, grads, cfg: TrainConfig) -> None:
    adam.step_count += 1
    t = adam.step_count
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for p, g, m, v in zip(model.parameters(), grads, adam.first_moment, adam.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + cfg.adam_epsilon)


def evaluate_loss(model: AEModel, data: BinaryMatrix) -> float:
    x = data.cells.astype(np.float64)
    return mse_loss(forward(model, x), x)


def train_epoch(
    model: AEModel,
    adam: AdamState,
    data: BinaryMatrix,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> float:
    """One shuffled pass over the rows; returns the size-weighted mean batch loss."""
    if data.n_items != model.width:
        raise ValueError(f"data has {data.n_items} items, model width is {model.width}")
    x_all = data.cells.astype(np.float64)
    order = rng.permutation(data.n_rows)
    total = 0.0
    for start in range(0, data.n_rows, cfg.batch_size):
        batch = x_all[order[start:start + cfg.batch_size]]
        loss, grads = loss_and_gradients(model, batch, batch)
        adam_step(model, adam, grads, cfg)
        total += loss * batch.shape[0]
    return total / data.n_rows


class TrainResult(NamedTuple):
    model: AEModel
    epochs_run: int
    losses: list[float]


def train_until_plateau(data: BinaryMatrix, cfg: TrainConfig) -> TrainResult:
    """Train until the loss change between consecutive epochs is below threshold.

    ``losses[0]`` is the loss of the freshly initialised model. When epoch
    ``e`` triggers the stop, the parameters from before that epoch are
    returned and ``epochs_run`` is ``e``.
    """
    model = init_model(data.n_items, cfg.seed)
    adam = AdamState.zeros_like(model)
    # separate stream so shuffling does not depend on how init consumed its rng
    rng = np.random.default_rng([cfg.seed, 1])
    losses = [evaluate_loss(model, data)]
    for epoch in range(1, cfg.max_epochs + 1):
        snapshot = model.copy()
        losses.append(train_epoch(model, adam, data, cfg, rng))
        if abs(losses[-2] - losses[-1]) < cfg.loss_delta_threshold:
            return TrainResult(snapshot, epoch, losses)
    return TrainResult(model, cfg.max_epochs, losses)
