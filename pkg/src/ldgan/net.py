"""Small dense networks with hand-written backprop.

Forward passes record a tape (layer inputs and pre-activations) tagged
with the network's parameter version; ``backward`` refuses tapes made
before the last parameter update. Training uses RMSProp. Checkpoints
are a versioned JSON dump of shapes and row-major float64 values, which
round-trips exactly (JSON renders doubles shortest-round-trip).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidInput

CHECKPOINT_FORMAT = "mlp-checkpoint-v1"
LEAKY_SLOPE = 0.2


def _leaky(z):
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_grad(z):
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


_ACTIVATIONS = {
    "leaky_relu": (_leaky, _leaky_grad),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(float)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str


@dataclass
class Tape:
    version: int
    inputs: list  # per-layer input (N, in)
    pre_activations: list  # per-layer z (N, out)


class MlpNetwork:
    """Fully connected stack ``x -> act(W x + b) -> ...``.

    ``output_gain`` is a fixed (non-trained) multiplier on the final
    activation, used to widen a bounded output head (e.g. Tanh) onto a
    data range beyond [-1, 1].
    """

    def __init__(self, layers, output_gain: float = 1.0):
        for layer in layers:
            if layer.activation not in _ACTIVATIONS:
                raise InvalidInput(f"unknown activation {layer.activation!r}")
        if not np.isfinite(output_gain) or output_gain <= 0.0:
            raise InvalidInput("output_gain must be positive and finite")
        self.layers = list(layers)
        self.output_gain = float(output_gain)
        self.version = 0

    @classmethod
    def initialize(
        cls, sizes, hidden_activation, output_activation, rng, weight_scale=0.02, output_gain=1.0
    ):
        """Weights iid Normal(0, weight_scale), biases zero."""
        if len(sizes) < 2:
            raise InvalidInput("need at least input and output sizes")
        layers = []
        last = len(sizes) - 2
        for i in range(len(sizes) - 1):
            act = output_activation if i == last else hidden_activation
            weight = rng.normal(size=(sizes[i + 1], sizes[i]), scale=weight_scale)
            layers.append(Layer(weight=weight, bias=np.zeros(sizes[i + 1]), activation=act))
        return cls(layers, output_gain=output_gain)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def parameters(self):
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def mutated(self) -> None:
        """Invalidate outstanding tapes after any in-place parameter edit."""
        self.version += 1

    def forward(self, x):
        """Returns ``(output, tape)``; bitwise deterministic per inputs."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise InvalidInput(f"input must be (N, {self.input_dim}), got {x.shape}")
        inputs = []
        pres = []
        out = x
        for layer in self.layers:
            inputs.append(out)
            z = out @ layer.weight.T + layer.bias
            pres.append(z)
            out = _ACTIVATIONS[layer.activation][0](z)
        if self.output_gain != 1.0:
            out = out * self.output_gain
        return out, Tape(version=self.version, inputs=inputs, pre_activations=pres)

    def hidden_features(self, x) -> np.ndarray:
        """Activations feeding the final layer (the penultimate output)."""
        out = np.asarray(x, dtype=float)
        for layer in self.layers[:-1]:
            z = out @ layer.weight.T + layer.bias
            out = _ACTIVATIONS[layer.activation][0](z)
        return out

    def backward(self, tape: Tape, output_grad: np.ndarray):
        """Grad of ``sum(output * output_grad)`` w.r.t. params and input.

        Returns ``(param_grads, input_grad)`` where ``param_grads`` is a
        list of ``(d_weight, d_bias)`` aligned with ``self.layers``.

        Raises
        ------
        InvalidInput
            If the tape predates the last parameter update (stale tape).
        """
        if tape.version != self.version:
            raise InvalidInput("stale tape: parameters changed since forward")
        output_grad = np.asarray(output_grad, dtype=float)
        if output_grad.shape != tape.pre_activations[-1].shape:
            raise InvalidInput("output_grad shape mismatch")
        grad = output_grad
        if self.output_gain != 1.0:
            grad = grad * self.output_gain
        param_grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            dz = grad * _ACTIVATIONS[layer.activation][1](tape.pre_activations[i])
            param_grads[i] = (dz.T @ tape.inputs[i], dz.sum(axis=0))
            grad = dz @ layer.weight
        return param_grads, grad


class RmsProp:
    """theta <- theta - alpha * g / (sqrt(v) + stabilizer), v decayed by rho."""

    def __init__(self, alpha: float, rho: float = 0.9, stabilizer: float = 1e-8):
        if alpha <= 0.0 or not (0.0 <= rho < 1.0) or stabilizer <= 0.0:
            raise InvalidInput("bad optimizer settings")
        self.alpha = float(alpha)
        self.rho = float(rho)
        self.stabilizer = float(stabilizer)
        self._v = None

    def step(self, net: MlpNetwork, param_grads) -> None:
        flat = []
        for dw, db in param_grads:
            flat.append(dw)
            flat.append(db)
        params = net.parameters()
        if self._v is None:
            self._v = [np.zeros_like(p) for p in params]
        if len(flat) != len(params):
            raise InvalidInput("gradient structure does not match network")
        for p, g, v in zip(params, flat, self._v):
            v *= self.rho
            v += (1.0 - self.rho) * g * g
            p -= self.alpha * g / (np.sqrt(v) + self.stabilizer)
        net.mutated()


def save_checkpoint(net: MlpNetwork, path: str) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "output_gain": net.output_gain,
        "layers": [
            {
                "activation": layer.activation,
                "weight_shape": list(layer.weight.shape),
                "weight": [float(v) for v in layer.weight.ravel()],
                "bias": [float(v) for v in layer.bias],
            }
            for layer in net.layers
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> MlpNetwork:
    """Rebuild a network from :func:`save_checkpoint` output.

    Raises
    ------
    FormatError
        Unknown format tag, malformed JSON, or inconsistent shapes.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"checkpoint is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"unknown checkpoint format {payload.get('format')!r}")
    layers = []
    try:
        for entry in payload["layers"]:
            shape = tuple(entry["weight_shape"])
            weight = np.array(entry["weight"], dtype=float).reshape(shape)
            bias = np.array(entry["bias"], dtype=float)
            if bias.shape != (shape[0],):
                raise FormatError("bias length does not match weight rows")
            if entry["activation"] not in _ACTIVATIONS:
                raise FormatError(f"unknown activation {entry['activation']!r}")
            layers.append(Layer(weight=weight, bias=bias, activation=entry["activation"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed checkpoint payload: {exc}") from exc
    if not layers:
        raise FormatError("checkpoint holds no layers")
    gain = payload.get("output_gain", 1.0)
    if not isinstance(gain, (int, float)) or not np.isfinite(gain) or gain <= 0.0:
        raise FormatError(f"bad output_gain {gain!r}")
    return MlpNetwork(layers, output_gain=float(gain))
