"""SparXnet architecture.

Prediction: F(x) = beta + sum_k theta_k * f_k(<W_k, x>), where each row W_k is
a temperature-scaled softmax over d routing logits and each f_k is a small
scalar-to-scalar ReLU MLP. On saturation each softmax row is close to one-hot,
so every pathway reads (almost) a single input feature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import nncore
from .nncore import MlpGrads, MlpParams, MlpTape, ShapeError


@dataclass(frozen=True)
class TemperatureSchedule:
    """Geometric decay from tau0 down to floor_fraction * tau0 over T steps."""

    tau0: float
    total_iterations: int
    floor_fraction: float = 0.01

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if not 0 < self.floor_fraction <= 1:
            raise ValueError("floor_fraction must be in (0, 1]")
        if self.total_iterations < 1:
            raise ValueError("total_iterations must be >= 1")


@dataclass(frozen=True)
class ModelConfig:
    n_pathways: int
    n_features: int
    pathway_hidden: tuple[int, ...] = (128, 128, 128, 128, 128, 128)
    dropout: float = 0.1
    temperature: TemperatureSchedule = field(
        default_factory=lambda: TemperatureSchedule(10.0, 2000)
    )
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_pathways <= self.n_features:
            raise ValueError("need 1 <= n_pathways <= n_features")


@dataclass
class ModelParams:
    routing_logits: np.ndarray      # (K, d)
    pathways: list[MlpParams]       # K nets, each 1 -> ... -> 1
    theta: np.ndarray               # (K,)
    beta: float

    @property
    def n_pathways(self) -> int:
        return self.routing_logits.shape[0]

    @property
    def n_features(self) -> int:
        return self.routing_logits.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.routing_logits.copy(),
            [p.copy() for p in self.pathways],
            self.theta.copy(),
            float(self.beta),
        )

    def flat_arrays(self) -> list[np.ndarray]:
        """All trainable arrays in a fixed order (for the optimizer)."""
        arrays = [self.routing_logits]
        for p in self.pathways:
            arrays.extend(p.weights)
            arrays.extend(p.biases)
        arrays.append(self.theta)
        arrays.append(self._beta_box)
        return arrays

    @property
    def _beta_box(self) -> np.ndarray:
        # beta stored as a 1-element array so Adam can update it in place
        if not hasattr(self, "_beta_arr"):
            self._beta_arr = np.array([self.beta])
        return self._beta_arr

    def sync_beta(self) -> None:
        self.beta = float(self._beta_box[0])


@dataclass
class ModelGrads:
    routing_logits: np.ndarray
    pathways: list[MlpGrads]
    theta: np.ndarray
    beta: float

    def flat_arrays(self) -> list[np.ndarray]:
        arrays = [self.routing_logits]
        for p in self.pathways:
            arrays.extend(p.weights)
            arrays.extend(p.biases)
        arrays.append(self.theta)
        arrays.append(np.array([self.beta]))
        return arrays


def init_model(config: ModelConfig) -> ModelParams:
    """Zero routing logits (uniform softmax), He-uniform pathway nets,
    theta all ones, beta zero."""
    rng = np.random.Generator(np.random.Philox(config.seed))
    widths = [1, *config.pathway_hidden, 1]
    pathways = [nncore.init_mlp(widths, rng) for _ in range(config.n_pathways)]
    return ModelParams(
        routing_logits=np.zeros((config.n_pathways, config.n_features)),
        pathways=pathways,
        theta=np.ones(config.n_pathways),
        beta=0.0,
    )


def routing_softmax(logits: np.ndarray, tau: float) -> np.ndarray:
    """Max-shifted softmax of logits / tau along the last axis."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    z = np.asarray(logits, dtype=np.float64) / tau
    z = z - z.max(axis=-1, keepdims=True)
    # floor at the smallest normal double: rows stay strictly positive even
    # when a logit gap underflows exp()
    e = np.maximum(np.exp(z), np.finfo(np.float64).tiny)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class SparxTape:
    x: np.ndarray               # (n, d)
    W: np.ndarray               # (K, d) softmax rows
    tau: float
    pathway_inputs: np.ndarray  # (n, K)
    pathway_outputs: np.ndarray  # (n, K)
    pathway_tapes: list[MlpTape]
    squeeze: bool


def sparx_forward(
    params: ModelParams,
    x: np.ndarray,
    tau: float,
    dropout: float = 0.0,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, SparxTape]:
    """Returns (F(x), tape). x is a d-vector or an (n, d) batch.

    For binary tasks F(x) is the logit; callers map to a probability via
    exp(F) / (1 + exp(F)).
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    xb = x[None, :] if squeeze else x
    if xb.shape[1] != params.n_features:
        raise ShapeError(
            f"expected {params.n_features} features, got {xb.shape[1]}"
        )
    W = routing_softmax(params.routing_logits, tau)
    s = xb @ W.T  # (n, K)
    outs = np.empty_like(s)
    tapes = []
    for k, net in enumerate(params.pathways):
        yk, tk = nncore.mlp_forward(net, s[:, k : k + 1], dropout, mode, rng)
        outs[:, k] = yk[:, 0]
        tapes.append(tk)
    F = params.beta + outs @ params.theta
    tape = SparxTape(xb, W, tau, s, outs, tapes, squeeze)
    return (float(F[0]) if squeeze else F), tape


def sparx_backward(
    params: ModelParams, tape: SparxTape, dF: np.ndarray
) -> ModelGrads:
    """Exact gradients w.r.t. every parameter given d(loss)/dF per sample."""
    g = np.atleast_1d(np.asarray(dF, dtype=np.float64))
    if g.shape[0] != tape.x.shape[0]:
        raise ShapeError(
            f"upstream length {g.shape[0]} != batch size {tape.x.shape[0]}"
        )
    dtheta = tape.pathway_outputs.T @ g
    dbeta = float(g.sum())
    ds = np.empty_like(tape.pathway_inputs)
    pathway_grads = []
    for k, net in enumerate(params.pathways):
        upstream = (g * params.theta[k])[:, None]
        pg, dxk = nncore.mlp_backward(net, tape.pathway_tapes[k], upstream)
        pathway_grads.append(pg)
        ds[:, k] = dxk[:, 0]
    dW = ds.T @ tape.x  # (K, d)
    # softmax Jacobian per row: dW/dw_v = (delta_uv W_u - W_u W_v) / tau
    inner = (dW * tape.W).sum(axis=1, keepdims=True)
    dlogits = tape.W * (dW - inner) / tape.tau
    return ModelGrads(dlogits, pathway_grads, dtheta, dbeta)


@dataclass
class FeatureSelection:
    """Per-pathway argmax of the routing softmax (lowest index on ties)."""

    selected_index: list[int]
    weight: list[float]
    rows: np.ndarray  # (K, d) softmax rows


def selected_features(params: ModelParams, tau: float) -> FeatureSelection:
    W = routing_softmax(params.routing_logits, tau)
    idx = [int(np.argmax(row)) for row in W]
    return FeatureSelection(idx, [float(W[k, i]) for k, i in enumerate(idx)], W)


def saturation(params: ModelParams, tau: float) -> np.ndarray:
    """Max softmax weight per pathway; 1.0 means pure single-feature routing."""
    return routing_softmax(params.routing_logits, tau).max(axis=1)


def export_pathway_curves(
    params: ModelParams,
    tau: float,
    feature_ranges: list[tuple[float, float]],
    samples_per_curve: int,
) -> list[np.ndarray]:
    """Per pathway, an (samples, 2) array of (t, theta_k * f_k(t)) over the
    selected feature's observed range. feature_ranges is indexed by feature."""
    if samples_per_curve < 2:
        raise ValueError("samples_per_curve must be >= 2")
    sel = selected_features(params, tau)
    curves = []
    for k, net in enumerate(params.pathways):
        lo, hi = feature_ranges[sel.selected_index[k]]
        if not hi > lo:
            raise ValueError(
                f"empty range [{lo}, {hi}] for pathway {k}"
            )
        grid = np.linspace(lo, hi, samples_per_curve)
        y, _ = nncore.mlp_forward(net, grid[:, None])
        curves.append(np.column_stack([grid, params.theta[k] * y[:, 0]]))
    return curves


# ---------------------------------------------------------------------------
# Serialization (single JSON document, floats at 17 significant digits)
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isfinite(x):
            return format(x, ".17g")
        return json.dumps(x)  # will raise for inf/nan, which we want
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        items = ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in x.items())
        return "{" + items + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x)}")


def dumps_json(obj) -> str:
    """json.dumps clone that renders floats with 17 significant digits."""
    return _fmt(obj)


def model_to_document(
    config: ModelConfig, params: ModelParams, tau_final: float
) -> dict:
    return {
        "config": {
            "n_pathways": config.n_pathways,
            "n_features": config.n_features,
            "pathway_hidden": list(config.pathway_hidden),
            "dropout": config.dropout,
            "temperature": {
                "tau0": config.temperature.tau0,
                "total_iterations": config.temperature.total_iterations,
                "floor_fraction": config.temperature.floor_fraction,
            },
            "seed": config.seed,
        },
        "routing_logits": [list(map(float, row)) for row in params.routing_logits],
        "pathways": [
            {
                "layers": [
                    {
                        "weight": [list(map(float, r)) for r in w],
                        "bias": list(map(float, b)),
                    }
                    for w, b in zip(net.weights, net.biases)
                ]
            }
            for net in params.pathways
        ],
        "theta": list(map(float, params.theta)),
        "beta": float(params.beta),
        "tau_final": float(tau_final),
    }


def save_model(
    path, config: ModelConfig, params: ModelParams, tau_final: float
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(model_to_document(config, params, tau_final)))
        fh.write("\n")


def load_model(path) -> tuple[ModelConfig, ModelParams, float]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        c = doc["config"]
        config = ModelConfig(
            n_pathways=c["n_pathways"],
            n_features=c["n_features"],
            pathway_hidden=tuple(c["pathway_hidden"]),
            dropout=c["dropout"],
            temperature=TemperatureSchedule(
                c["temperature"]["tau0"],
                c["temperature"]["total_iterations"],
                c["temperature"]["floor_fraction"],
            ),
            seed=c["seed"],
        )
        pathways = []
        for p in doc["pathways"]:
            weights = [np.array(layer["weight"], dtype=np.float64) for layer in p["layers"]]
            biases = [np.array(layer["bias"], dtype=np.float64) for layer in p["layers"]]
            pathways.append(MlpParams(weights, biases))
        params = ModelParams(
            routing_logits=np.array(doc["routing_logits"], dtype=np.float64),
            pathways=pathways,
            theta=np.array(doc["theta"], dtype=np.float64),
            beta=float(doc["beta"]),
        )
        return config, params, float(doc["tau_final"])
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"corrupt model file {path}: {exc}") from exc
