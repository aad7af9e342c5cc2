"""Feed-forward network mapping joint angles and tip deflections to the platform pose."""

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from flexpm.core.mechanism_config import PlatformPose
from flexpm.errors import ReportError, TrainingError, ValidationError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
INPUT_NAMES = ("q_a1", "q_a2", "q_a3", "w1", "w2", "w3")
OUTPUT_NAMES = ("x", "y", "theta")


@dataclass
class ObserverConfig:
    """Architecture, training and sampling settings of the observer.

    Attributes:
        hidden_layers: Neurons per hidden layer.
        learning_rate: Initial Adam step.
        lr_decay: Multiplicative step decay per epoch.
        batch_size: Mini-batch size.
        epochs: Training epochs.
        seed: Seed of initialization, shuffling and data generation.
        validation_fraction: Share of the training rows held out for best-so-far selection.
        train_count: Rows generated for training.
        test_count: Rows generated for testing.
        ranges: Sampling ranges, see :class:`flexpm.observer.training_data.ObserverRanges`.
        workers: Worker processes for data generation (1 runs in-process).
        chunk_size: Rows per independently seeded generation chunk.
        deflection_noise_std: Standard deviation of noise added to fed-back tip deflections (m).
        rate_cutoff: Cutoff of the closed-loop rate low-pass filter (Hz), or None for no filter.
        range_margin: Inputs beyond this multiple of the training half-range raise a warning.
    """

    hidden_layers: List[int] = field(default_factory=lambda: [30, 30, 30])
    learning_rate: float = 1e-3
    lr_decay: float = 0.998
    batch_size: int = 256
    epochs: int = 2000
    seed: int = 0
    validation_fraction: float = 0.1
    train_count: int = 10000
    test_count: int = 1000
    ranges: Dict[str, List[float]] = field(
        default_factory=lambda: {"x": [-0.15, 0.15], "y": [-0.15, 0.15], "theta": [-0.2, 0.2], "deflection": [-0.06, 0.06]}
    )
    workers: int = 1
    chunk_size: int = 1000
    deflection_noise_std: float = 0.0
    rate_cutoff: Optional[float] = 100.0
    range_margin: float = 1.2

    def validate(self):
        if len(self.hidden_layers) == 0 or min(self.hidden_layers) < 1:
            raise ValidationError("BadArchitecture", "Hidden layers must be non-empty and positive", str(self.hidden_layers))
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValidationError("BadTraining", "Learning rate, batch size and epochs must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValidationError("BadTraining", "Validation fraction must lie in [0, 1)")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ObserverConfig":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


def _affine(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


class ObserverNet:
    """Multilayer perceptron with tanh hidden layers and a linear output.

    Inputs and outputs are standardized with per-feature affine maps fitted on the training set
    and stored with the weights, so :meth:`predict` works in raw units.

    Parameters:
        sizes: Layer widths including input and output, e.g. ``[6, 30, 30, 30, 3]``.
        seed: Seed of the Glorot-uniform initialization.
    """

    def __init__(self, sizes: Sequence[int], seed: int = 0):
        if len(sizes) < 2:
            raise ValidationError("BadArchitecture", "A network needs input and output layers")
        self.sizes = [int(s) for s in sizes]
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.input_mean = np.zeros(self.sizes[0])
        self.input_scale = np.ones(self.sizes[0])
        self.output_mean = np.zeros(self.sizes[-1])
        self.output_scale = np.ones(self.sizes[-1])
        self.input_low = np.full(self.sizes[0], -np.inf)
        self.input_high = np.full(self.sizes[0], np.inf)
        self.metadata: Dict[str, Any] = {"seed": seed}

    @classmethod
    def for_observer(cls, config: ObserverConfig) -> "ObserverNet":
        return cls([len(INPUT_NAMES), *config.hidden_layers, len(OUTPUT_NAMES)], seed=config.seed)

    def fit_normalization(self, inputs: np.ndarray, targets: np.ndarray):
        """Set the affine maps and the input envelope from training data."""
        self.input_mean, self.input_scale = _affine(inputs)
        self.output_mean, self.output_scale = _affine(targets)
        self.input_low = inputs.min(axis=0)
        self.input_high = inputs.max(axis=0)

    def normalize_inputs(self, inputs) -> np.ndarray:
        return (np.asarray(inputs, dtype=float) - self.input_mean) / self.input_scale

    def normalize_outputs(self, outputs) -> np.ndarray:
        return (np.asarray(outputs, dtype=float) - self.output_mean) / self.output_scale

    def denormalize_outputs(self, outputs) -> np.ndarray:
        return np.asarray(outputs, dtype=float) * self.output_scale + self.output_mean

    def forward(self, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Normalized forward pass returning the output and the activations of every layer."""
        activations = [X]
        a = X
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = z if k == last else np.tanh(z)
            activations.append(a)
        return a, activations

    def loss_and_gradients(self, X: np.ndarray, Y: np.ndarray) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
        """Mean squared error over all outputs and its gradients by backpropagation.

        Parameters:
            X: Normalized inputs (N, inputs).
            Y: Normalized targets (N, outputs).

        Returns:
            tuple: ``(loss, weight_gradients, bias_gradients)``.
        """
        output, activations = self.forward(X)
        residual = output - Y
        loss = float(np.mean(residual**2))
        delta = 2.0 * residual / residual.size
        weight_grads: List[np.ndarray] = [np.empty(0)] * len(self.weights)
        bias_grads: List[np.ndarray] = [np.empty(0)] * len(self.biases)
        for k in range(len(self.weights) - 1, -1, -1):
            weight_grads[k] = activations[k].T @ delta
            bias_grads[k] = delta.sum(axis=0)
            if k:
                delta = (delta @ self.weights[k].T) * (1.0 - activations[k] ** 2)
        return loss, weight_grads, bias_grads

    def get_parameters(self) -> np.ndarray:
        """All weights and biases as one flat vector."""
        return np.concatenate([p.ravel() for pair in zip(self.weights, self.biases) for p in pair])

    def set_parameters(self, flat: np.ndarray):
        offset = 0
        for k in range(len(self.weights)):
            for target in (self.weights, self.biases):
                size = target[k].size
                target[k] = np.asarray(flat[offset : offset + size], dtype=float).reshape(target[k].shape).copy()
                offset += size

    def copy(self) -> "ObserverNet":
        clone = ObserverNet.__new__(ObserverNet)
        clone.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})
        clone.sizes = list(self.sizes)
        clone.weights = [W.copy() for W in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone.metadata = dict(self.metadata)
        return clone

    def predict(self, inputs) -> np.ndarray:
        """Poses in raw units for raw inputs of shape (N, 6) or (6,)."""
        inputs = np.asarray(inputs, dtype=float)
        single = inputs.ndim == 1
        output, _ = self.forward(self.normalize_inputs(np.atleast_2d(inputs)))
        poses = self.denormalize_outputs(output)
        return poses[0] if single else poses

    def outside_envelope(self, inputs, margin: float = 1.2) -> np.ndarray:
        """Mask of inputs beyond ``margin`` times the training half-range about its centre."""
        centre = 0.5 * (self.input_low + self.input_high)
        half = 0.5 * (self.input_high - self.input_low)
        return np.abs(np.asarray(inputs, dtype=float) - centre) > margin * half + 1e-15

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "sizes": self.sizes,
            "activation": "tanh",
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "normalization": {
                "input_mean": self.input_mean.tolist(),
                "input_scale": self.input_scale.tolist(),
                "output_mean": self.output_mean.tolist(),
                "output_scale": self.output_scale.tolist(),
                "input_low": self.input_low.tolist(),
                "input_high": self.input_high.tolist(),
            },
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ObserverNet":
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise ValidationError("BadModelFile", f"Unsupported model format version {version}")
        net = cls(payload["sizes"])
        net.weights = [np.array(W, dtype=float) for W in payload["weights"]]
        net.biases = [np.array(b, dtype=float) for b in payload["biases"]]
        norm = payload["normalization"]
        for key in ("input_mean", "input_scale", "output_mean", "output_scale", "input_low", "input_high"):
            setattr(net, key, np.array(norm[key], dtype=float))
        net.metadata = dict(payload.get("metadata", {}))
        return net

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as handle:
                json.dump(self.to_dict(), handle, indent=1)
        except OSError as ex:
            raise ReportError("WriteFailed", "Could not write model file", str(path)) from ex
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ObserverNet":
        try:
            with open(path) as handle:
                payload = json.load(handle)
        except OSError as ex:
            raise ReportError("ReadFailed", "Could not read model file", str(path)) from ex
        except json.JSONDecodeError as ex:
            raise ValidationError("BadModelFile", "Model file is not valid JSON", str(path)) from ex
        return cls.from_dict(payload)


@dataclass
class TrainingHistory:
    """Per-epoch losses of a training run (normalized units)."""

    train_loss: List[float] = field(default_factory=list)
    validation_loss: List[float] = field(default_factory=list)
    best_loss: float = float("inf")
    best_epoch: int = -1
    seconds: float = 0.0


def data_hash(inputs: np.ndarray, targets: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(inputs, dtype=float).tobytes())
    digest.update(np.ascontiguousarray(targets, dtype=float).tobytes())
    return digest.hexdigest()[:16]


def train(net: ObserverNet, inputs: np.ndarray, targets: np.ndarray, config: ObserverConfig) -> Tuple[ObserverNet, TrainingHistory]:
    """Fit the network by mini-batch Adam on normalized mean squared error.

    A seeded share of the rows is held out; the weights with the lowest held-out loss seen so far
    are returned. With no held-out rows the training loss is tracked instead.

    Parameters:
        net: Initialized network; it is not modified.
        inputs: Raw inputs (N, 6).
        targets: Raw targets (N, 3).
        config: Training settings.

    Returns:
        tuple: ``(trained network, history)``.

    Raises:
        ValidationError: If the data are empty or mis-shaped.
        TrainingError: If the loss becomes non-finite; ``checkpoint`` holds the best network so far.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.shape[0] == 0 or inputs.shape[0] != targets.shape[0]:
        raise ValidationError("BadTrainingData", "Training data are empty or inputs and targets differ in length")
    if inputs.shape[1] != net.sizes[0] or targets.shape[1] != net.sizes[-1]:
        raise ValidationError("BadTrainingData", "Data widths do not match the network")
    rng = np.random.default_rng(config.seed)
    net = net.copy()
    order = rng.permutation(inputs.shape[0])
    held = int(round(config.validation_fraction * inputs.shape[0]))
    validation, training = order[:held], order[held:]
    if training.size == 0:
        training, validation = validation, np.zeros(0, dtype=int)
    net.fit_normalization(inputs[training], targets[training])
    X = net.normalize_inputs(inputs)
    Y = net.normalize_outputs(targets)
    X_train, Y_train = X[training], Y[training]
    X_val, Y_val = (X[validation], Y[validation]) if validation.size else (X_train, Y_train)

    parameters = [p for pair in zip(net.weights, net.biases) for p in pair]
    first = [np.zeros_like(p) for p in parameters]
    second = [np.zeros_like(p) for p in parameters]
    beta1, beta2, epsilon = 0.9, 0.999, 1e-8
    step = 0
    history = TrainingHistory()
    best = net.copy()
    started = time.perf_counter()
    for epoch in range(config.epochs):
        rate = config.learning_rate * config.lr_decay**epoch
        shuffled = rng.permutation(X_train.shape[0])
        epoch_loss = 0.0
        for start in range(0, shuffled.size, config.batch_size):
            batch = shuffled[start : start + config.batch_size]
            loss, weight_grads, bias_grads = net.loss_and_gradients(X_train[batch], Y_train[batch])
            if not np.isfinite(loss):
                raise TrainingError("Diverged", f"Loss became non-finite in epoch {epoch}", checkpoint=best)
            epoch_loss += loss * batch.size
            step += 1
            gradients = [g for pair in zip(weight_grads, bias_grads) for g in pair]
            for p, g, m, v in zip(parameters, gradients, first, second):
                m *= beta1
                m += (1.0 - beta1) * g
                v *= beta2
                v += (1.0 - beta2) * g * g
                m_hat = m / (1.0 - beta1**step)
                v_hat = v / (1.0 - beta2**step)
                p -= rate * m_hat / (np.sqrt(v_hat) + epsilon)
        history.train_loss.append(epoch_loss / X_train.shape[0])
        validation_loss = float(np.mean((net.forward(X_val)[0] - Y_val) ** 2))
        if not np.isfinite(validation_loss):
            raise TrainingError("Diverged", f"Validation loss became non-finite in epoch {epoch}", checkpoint=best)
        history.validation_loss.append(validation_loss)
        if validation_loss < history.best_loss:
            history.best_loss = validation_loss
            history.best_epoch = epoch
            best = net.copy()
        if epoch % 100 == 0:
            logger.info(f"Epoch {epoch}: train {history.train_loss[-1]:.3e}, validation {validation_loss:.3e}")
    history.seconds = time.perf_counter() - started
    if config.epochs == 0:
        best = net
    best.metadata.update(
        {
            "seed": config.seed,
            "epochs": config.epochs,
            "best_epoch": history.best_epoch,
            "best_validation_loss": history.best_loss,
            "data_hash": data_hash(inputs, targets),
            "rows": int(inputs.shape[0]),
        }
    )
    return best, history


def predict_pose(net: ObserverNet, inputs, margin: float = 1.2) -> PlatformPose:
    """Estimated pose for one input ``(q_a1, q_a2, q_a3, w1, w2, w3)``.

    Logs a warning when an input lies beyond ``margin`` times the training half-range.
    """
    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    outside = net.outside_envelope(inputs, margin)
    if np.any(outside):
        names = [name for name, flag in zip(INPUT_NAMES, outside) if flag]
        logger.warning(f"Observer input outside the training envelope: {', '.join(names)}")
    return PlatformPose.from_array(net.predict(inputs))


@dataclass(frozen=True)
class ObserverEvaluation:
    """Test-set errors in raw units, per output axis.

    Attributes:
        max_abs_error: Largest absolute error per axis.
        mse: Mean squared error per axis.
        normalized_mse: Mean squared error in normalized units over all axes.
        rmse: Root mean squared error per axis.
    """

    max_abs_error: np.ndarray
    mse: np.ndarray
    normalized_mse: float
    rmse: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"axis": OUTPUT_NAMES, "max_abs_error": self.max_abs_error, "mse": self.mse, "rmse": self.rmse})


def evaluate_observer(net: ObserverNet, inputs: np.ndarray, targets: np.ndarray) -> ObserverEvaluation:
    """Per-axis error statistics of the network on held-out data."""
    predictions = net.predict(np.asarray(inputs, dtype=float))
    error = predictions - np.asarray(targets, dtype=float)
    mse = np.mean(error**2, axis=0)
    normalized = float(np.mean((error / net.output_scale) ** 2))
    return ObserverEvaluation(max_abs_error=np.max(np.abs(error), axis=0), mse=mse, normalized_mse=normalized, rmse=np.sqrt(mse))


def benchmark_predictions(net: ObserverNet, inputs: np.ndarray, count: int = 10000) -> float:
    """Seconds spent on ``count`` one-at-a-time predictions cycling through ``inputs``."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    started = time.perf_counter()
    for k in range(count):
        net.predict(inputs[k % inputs.shape[0]])
    return time.perf_counter() - started
