"""Dense-matrix numeric core: MLP forward/backward, losses, Adam.

Everything here is plain float64 numpy with explicit reverse-mode gradient
routines for the fixed feed-forward topology (affine layers, ReLU on hidden
layers, identity output, inverted dropout after each hidden activation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Raised on dimension mismatches; message names the offending layer."""


class LossError(ValueError):
    """Raised on invalid loss configuration or targets."""


@dataclass
class MlpParams:
    """Weights/biases of a fully-connected ReLU network.

    weights[i] has shape (fan_in, fan_out); biases[i] has shape (fan_out,).
    Hidden layers use ReLU, the output layer is linear.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_width(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_mlp(widths: list[int], rng: np.random.Generator) -> MlpParams:
    """He-uniform weights, zero biases. `widths` includes input and output."""
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


@dataclass
class MlpTape:
    """Activation record from a forward pass, sufficient for backward."""

    inputs: list[np.ndarray]      # input to each affine layer, shape (n, fan_in)
    preacts: list[np.ndarray]     # pre-activation of each layer
    masks: list[np.ndarray | None]  # dropout mask (already scaled) per hidden layer
    squeeze: bool                 # True when the caller passed a 1-D vector


def mlp_forward(
    p: MlpParams,
    x: np.ndarray,
    dropout: float = 0.0,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, MlpTape]:
    """Run the network; returns (output, tape).

    Accepts a single vector (returns a vector) or a (n, fan_in) batch.
    In train mode, inverted dropout (kept units scaled by 1/(1-rate)) is
    applied after each hidden ReLU.
    """
    if not 0.0 <= dropout < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {dropout}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    use_dropout = mode == "train" and dropout > 0.0
    if mode == "train" and rng is None:
        raise ValueError("train mode requires an rng")

    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if a.shape[1] != p.input_width:
        raise ShapeError(
            f"layer 0 expects input width {p.input_width}, got {a.shape[1]}"
        )

    inputs, preacts, masks = [], [], []
    last = p.n_layers - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        if a.shape[1] != w.shape[0]:
            raise ShapeError(
                f"layer {i} expects input width {w.shape[0]}, got {a.shape[1]}"
            )
        inputs.append(a)
        z = a @ w + b
        preacts.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
            if use_dropout:
                keep = rng.random(a.shape) >= dropout
                mask = keep / (1.0 - dropout)
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
        else:
            a = z
    tape = MlpTape(inputs, preacts, masks, squeeze)
    return (a[0] if squeeze else a), tape


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def mlp_backward(
    p: MlpParams, tape: MlpTape, upstream: np.ndarray
) -> tuple[MlpGrads, np.ndarray]:
    """Reverse-mode gradients for the realized forward pass.

    `upstream` is d(loss)/d(output), shaped like the forward output.
    Returns (parameter gradients, gradient w.r.t. the input).
    """
    if len(tape.inputs) != p.n_layers:
        raise ShapeError(
            f"tape has {len(tape.inputs)} layers, params have {p.n_layers}"
        )
    g = np.asarray(upstream, dtype=np.float64)
    if tape.squeeze:
        g = g[None, :]
    if g.shape != tape.preacts[-1].shape:
        raise ShapeError(
            f"upstream shape {g.shape} does not match output shape "
            f"{tape.preacts[-1].shape}"
        )

    dws: list[np.ndarray] = [np.empty(0)] * p.n_layers
    dbs: list[np.ndarray] = [np.empty(0)] * p.n_layers
    delta = g
    for i in range(p.n_layers - 1, -1, -1):
        if i < p.n_layers - 1:
            # through dropout (if any) then ReLU
            if tape.masks[i] is not None:
                delta = delta * tape.masks[i]
            delta = delta * (tape.preacts[i] > 0.0)
        dws[i] = tape.inputs[i].T @ delta
        dbs[i] = delta.sum(axis=0)
        delta = delta @ p.weights[i].T
    dx = delta[0] if tape.squeeze else delta
    return MlpGrads(dws, dbs), dx


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossSpec:
    """kind is "truncated_square" (regression, cap B) or "bce" (binary logit)."""

    kind: str
    cap: float = 1.0

    def __post_init__(self):
        if self.kind not in ("truncated_square", "bce"):
            raise LossError(f"unknown loss kind {self.kind!r}")
        if self.kind == "truncated_square" and self.cap <= 0:
            raise LossError("truncated_square cap must be positive")


def loss_eval(spec: LossSpec, prediction, target) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise loss value and d(value)/d(prediction).

    truncated_square: min(|y - yhat|^2, B), sub-gradient 0 on the capped branch
    (ties go to the capped branch). bce: prediction is the logit s,
    l(s,0) = log(1+e^s), l(s,1) = log(1+e^-s), computed overflow-safe.
    """
    pred = np.asarray(prediction, dtype=np.float64)
    targ = np.asarray(target, dtype=np.float64)
    if spec.kind == "truncated_square":
        diff = pred - targ
        sq = diff * diff
        capped = sq >= spec.cap
        value = np.where(capped, spec.cap, sq)
        grad = np.where(capped, 0.0, 2.0 * diff)
        return value, grad
    # bce
    if not np.all((targ == 0.0) | (targ == 1.0)):
        raise LossError("bce targets must be 0 or 1")
    # l(s,t) = log(1+exp(s*(1-2t))) = max(m,0) + log1p(exp(-|m|)), m = s*(1-2t)
    m = pred * (1.0 - 2.0 * targ)
    value = np.maximum(m, 0.0) + np.log1p(np.exp(-np.abs(m)))
    sigma = 1.0 / (1.0 + np.exp(-np.abs(pred)))
    p_pos = np.where(pred >= 0, sigma, 1.0 - sigma)  # sigmoid(pred), stable
    grad = p_pos - targ
    return value, grad


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Bias-corrected Adam over a flat list of ndarrays."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]
) -> None:
    """One in-place Adam update on `params`; increments state.step."""
    if len(params) != len(grads):
        raise ShapeError("params/grads length mismatch")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise ShapeError("Adam state does not match parameter list")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
