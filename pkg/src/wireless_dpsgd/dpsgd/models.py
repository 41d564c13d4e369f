"""Small dense models over a flat parameter vector.

Logistic regression is the zero-hidden-layer case of the MLP. Hidden layers
use tanh so gradients are smooth enough for finite-difference checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOSSES = ("cross_entropy", "squared_error")


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "logistic_regression"
    hidden: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("logistic_regression", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "logistic_regression" and self.hidden:
            raise ValueError("logistic_regression takes no hidden layers")
        if self.kind == "mlp" and not self.hidden:
            raise ValueError("mlp needs at least one hidden layer size")

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """``logistic_regression`` or ``mlp(32,16)``."""
        text = text.strip().replace(" ", "")
        if text.startswith("mlp(") and text.endswith(")"):
            return cls("mlp", tuple(int(h) for h in text[4:-1].split(",") if h))
        return cls(text)

    def __str__(self):
        if self.kind == "mlp":
            return "mlp(" + ",".join(str(h) for h in self.hidden) + ")"
        return self.kind


class DenseModel:
    def __init__(self, spec: ModelSpec, n_features: int, n_outputs: int):
        self.spec = spec
        self.widths = (n_features, *spec.hidden, n_outputs)
        self.shapes = [(a, b) for a, b in zip(self.widths[:-1], self.widths[1:])]
        self.size = sum(a * b + b for a, b in self.shapes)

    @property
    def n_outputs(self) -> int:
        return self.widths[-1]

    def unpack(self, params: np.ndarray):
        layers, k = [], 0
        for a, b in self.shapes:
            w = params[k : k + a * b].reshape(a, b)
            k += a * b
            layers.append((w, params[k : k + b]))
            k += b
        return layers

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        parts = []
        for a, b in self.shapes:
            scale = 0.01 if len(self.shapes) == 1 else np.sqrt(1.0 / a)
            parts.append(rng.normal(0.0, scale, size=a * b))
            parts.append(np.zeros(b))
        return np.concatenate(parts)

    def outputs(self, params: np.ndarray, x: np.ndarray) -> np.ndarray:
        layers = self.unpack(params)
        a = x
        for l, (w, b) in enumerate(layers):
            a = a @ w + b
            if l < len(layers) - 1:
                a = np.tanh(a)
        return a

    def _targets(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        if y.ndim == 2:
            return y.astype(float)
        onehot = np.zeros((y.shape[0], self.n_outputs))
        onehot[np.arange(y.shape[0]), y.astype(int)] = 1.0
        return onehot

    def loss(self, params: np.ndarray, x: np.ndarray, y: np.ndarray, loss: str) -> float:
        out = self.outputs(params, x)
        return _loss_value(out, self._targets(y), loss)

    def loss_and_grad(self, params: np.ndarray, x: np.ndarray, y: np.ndarray, loss: str):
        """Mean loss over the batch and its gradient w.r.t. the flat params."""
        layers = self.unpack(params)
        acts = [x]
        a = x
        for l, (w, b) in enumerate(layers):
            a = a @ w + b
            if l < len(layers) - 1:
                a = np.tanh(a)
            acts.append(a)
        t = self._targets(y)
        m = x.shape[0]
        out = acts[-1]
        value = _loss_value(out, t, loss)
        if loss == "cross_entropy":
            delta = (_softmax(out) - t) / m
        else:
            delta = 2.0 * (out - t) / m

        grads = []
        for l in range(len(layers) - 1, -1, -1):
            w, _ = layers[l]
            prev = acts[l]
            grads.append(delta.sum(axis=0))
            grads.append((prev.T @ delta).ravel())
            if l > 0:
                delta = (delta @ w.T) * (1.0 - prev**2)
        return value, np.concatenate(grads[::-1])


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _loss_value(out: np.ndarray, t: np.ndarray, loss: str) -> float:
    if loss == "cross_entropy":
        z = out - out.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-(t * logp).sum(axis=1).mean())
    if loss == "squared_error":
        return float(((out - t) ** 2).sum(axis=1).mean())
    raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")


def build_model(spec: ModelSpec, n_features: int, n_outputs: int) -> DenseModel:
    return DenseModel(spec, n_features, n_outputs)
