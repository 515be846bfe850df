"""Classical comparison models: Lasso (cyclic coordinate descent), Ridge
(normal equations), logistic regression (full-batch gradient descent), and a
plain fully-connected network trained with the same loop as the main model."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import model as mdl, nncore
from .data import Dataset, SplitSpec, make_rng, split
from .nncore import AdamState, LossSpec, MlpParams
from .train import TrainConfig, TrainReport


@dataclass
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    regularization: str          # "lasso", "ridge", or "none"
    penalty: float = 0.0
    link: str = "identity"       # or "logistic"

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Linear score (the logit for logistic models)."""
        return np.asarray(X, dtype=np.float64) @ self.coefficients + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        s = self.predict(X)
        return 1.0 / (1.0 + np.exp(-s))

    def to_document(self) -> dict:
        return {
            "coefficients": list(map(float, self.coefficients)),
            "intercept": float(self.intercept),
            "regularization": self.regularization,
            "penalty": float(self.penalty),
            "link": self.link,
        }


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    max_sweeps: int = 1000,
    tol: float = 1e-8,
) -> LinearModel:
    """Cyclic coordinate descent on (1/2N)||y - X beta - b||^2 + lam ||beta||_1.

    The intercept is unpenalized (handled by centering). Stops when the
    largest coefficient change in a sweep falls below tol.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite inputs")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, d = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    col_sq = (Xc * Xc).sum(axis=0) / n
    beta = np.zeros(d)
    resid = yc.copy()
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (Xc[:, j] @ resid) / n + col_sq[j] * old
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != old:
                resid -= Xc[:, j] * (new - old)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < tol:
            break
    intercept = y_mean - x_mean @ beta
    return LinearModel(beta, float(intercept), "lasso", lam)


def lasso_fit_cv(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    grid: np.ndarray | None = None,
) -> LinearModel:
    """Pick lambda by validation MSE on a log grid (default 1e-4 .. 1, 20 pts)."""
    if grid is None:
        grid = np.logspace(-4, 0, 20)
    best, best_mse = None, math.inf
    for lam in grid:
        m = lasso_fit(X_train, y_train, float(lam))
        v = float(np.mean((m.predict(X_val) - y_val) ** 2))
        if v < best_mse:
            best, best_mse = m, v
    return best


def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float) -> LinearModel:
    """Solves (X'X/N + lam I) beta = X'y/N with a Cholesky factorization;
    intercept via centering."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, d = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    A = Xc.T @ Xc / n + lam * np.eye(d)
    b = Xc.T @ yc / n
    try:
        beta = linalg.cho_solve(linalg.cho_factor(A), b)
    except linalg.LinAlgError as exc:
        raise ValueError(f"singular system (lam={lam}): {exc}") from exc
    intercept = y_mean - x_mean @ beta
    return LinearModel(beta, float(intercept), "ridge", lam)


def logreg_fit(
    X: np.ndarray, y: np.ndarray, iterations: int = 2000, lr: float = 0.1
) -> LinearModel:
    """Full-batch gradient descent on mean binary cross-entropy."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("targets must be 0/1")
    n, d = X.shape
    beta = np.zeros(d)
    b = 0.0
    for _ in range(iterations):
        s = X @ beta + b
        p = np.where(s >= 0, 1.0 / (1.0 + np.exp(-s)), np.exp(s) / (1.0 + np.exp(s)))
        g = p - y
        beta -= lr * (X.T @ g) / n
        b -= lr * g.mean()
    return LinearModel(beta, float(b), "none", 0.0, link="logistic")


def fcn_fit(
    hidden_widths: tuple[int, ...],
    train_config: TrainConfig,
    dataset: Dataset,
    dropout: float = 0.0,
) -> tuple[MlpParams, TrainReport]:
    """Plain MLP (input width d, no routing) under the same mini-batch Adam
    loop and validation-based checkpointing as the main model."""
    started = time.perf_counter()
    expected = "binary" if train_config.loss.kind == "bce" else "regression"
    if dataset.task != expected:
        raise ValueError("dataset task does not match loss")
    train_ds, val_ds = split(
        dataset,
        SplitSpec(
            test_fraction=train_config.validation_fraction,
            stratified=dataset.task == "binary",
            seed=train_config.seed,
        ),
    )
    rng = make_rng(train_config.seed + 1)
    net = nncore.init_mlp([dataset.n_features, *hidden_widths, 1], rng)
    flat = [*net.weights, *net.biases]
    adam = AdamState(lr=train_config.learning_rate)
    n_train = train_ds.n_rows
    batch = min(train_config.batch_size, n_train)
    order = rng.permutation(n_train)
    cursor = 0
    best_val = math.inf
    best_net = net.copy()
    best_iter = 0
    trace: list[dict] = []

    def eval_loss(p: MlpParams, ds: Dataset) -> float:
        preds, _ = nncore.mlp_forward(p, ds.X)
        values, _ = nncore.loss_eval(train_config.loss, preds[:, 0], ds.y)
        return float(np.mean(values))

    T = train_config.iterations
    for t in range(T):
        if cursor + batch > n_train:
            order = rng.permutation(n_train)
            cursor = 0
        idx = order[cursor : cursor + batch]
        cursor += batch
        preds, tape = nncore.mlp_forward(net, train_ds.X[idx], dropout, "train", rng)
        values, dvalues = nncore.loss_eval(train_config.loss, preds[:, 0], train_ds.y[idx])
        loss = float(np.mean(values))
        if not math.isfinite(loss):
            raise RuntimeError(f"non-finite loss at iteration {t}")
        grads, _ = nncore.mlp_backward(net, tape, (dvalues / len(idx))[:, None])
        nncore.adam_step(adam, flat, [*grads.weights, *grads.biases])
        if t % train_config.eval_every == 0 or t == T - 1:
            tr_loss = eval_loss(net, train_ds)
            va_loss = eval_loss(net, val_ds)
            trace.append(
                {"iteration": t, "train_loss": tr_loss, "val_loss": va_loss, "tau": 0.0}
            )
            if va_loss < best_val:
                best_val = va_loss
                best_net = net.copy()
                best_iter = t

    report = TrainReport(
        trace=trace,
        best_iteration=best_iter,
        final_train_loss=eval_loss(best_net, train_ds),
        final_val_loss=eval_loss(best_net, val_ds),
        selected_indices=[],
        selected_weights=[],
        saturation=[],
        theta_l1=0.0,
        lipschitz=[],
        seed=train_config.seed,
        wall_clock=time.perf_counter() - started,
    )
    return best_net, report


def save_linear_model(path, m: LinearModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(mdl.dumps_json(m.to_document()))
        fh.write("\n")


def load_linear_model(path) -> LinearModel:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return LinearModel(
        np.array(doc["coefficients"], dtype=np.float64),
        float(doc["intercept"]),
        doc["regularization"],
        float(doc.get("penalty", 0.0)),
        doc.get("link", "identity"),
    )
