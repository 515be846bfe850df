"""Evaluators for the covering-number / Rademacher generalization formulas.

Logarithm bases are deliberately mixed and follow the source formulas
symbol-for-symbol: log2 where a formula counts covers in bits, natural log
elsewhere. Each evaluator documents its own bases.

Note on scope: the excess-risk formula bounds the gap between the empirical
risk of the trained predictor and the population risk of the class-optimal
one (the quantity the underlying proof controls), and the function class it
describes has no intercept term; an intercept is treated as absorbed into
the loss bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .model import ModelParams, routing_softmax, selected_features
from .nncore import LossSpec, mlp_forward


@dataclass(frozen=True)
class BoundInputs:
    """Every constant the excess-risk bound consumes.

    k: selected-feature (pathway) count; d: input features; n: samples;
    chi: max-norm bound on inputs; lip: Lipschitz bound on pathway functions;
    gamma: bound on sum |theta_k|; loss_lip: loss Lipschitz bound;
    loss_bound: loss sup bound; delta: failure probability.
    """

    k: int
    d: int
    n: int
    chi: float
    lip: float
    gamma: float
    loss_lip: float
    loss_bound: float
    delta: float

    def __post_init__(self):
        for name in ("k", "d", "n", "chi", "lip", "gamma", "loss_lip", "loss_bound"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.k > self.d:
            raise ValueError("need k <= d")


def lip_cover_log(C: float, L: float, eps: float) -> float:
    """Natural-log covering number bound for L-Lipschitz functions on [-C, C]:
    [2CL/eps + 2] * ln(4CL/eps + 2)."""
    if C <= 0 or eps <= 0:
        raise ValueError("C and eps must be positive")
    if L < 0:
        raise ValueError("L must be non-negative")
    r = C * L / eps
    return (2.0 * r + 2.0) * math.log(4.0 * r + 2.0)


def maurey_cover_log2(a: float, b: float, n: int, eps: float) -> float:
    """log2 covering number of {X alpha : ||alpha||_2 <= a} under sup norm,
    rows bounded by b: (36 a^2 b^2 / eps^2) * log2(8abN/eps + 6N + 1)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if a < 0 or b < 0 or n < 1:
        raise ValueError("need a, b >= 0 and n >= 1")
    if a == 0 or b == 0:
        return 0.0
    ab = a * b
    return (36.0 * ab * ab / (eps * eps)) * math.log2(8.0 * ab * n / eps + 6.0 * n + 1.0)


def class_cover_log(inputs: BoundInputs, eps: float) -> float:
    """log2 sup-norm covering number of the routed-pathway predictor class:
    [216 K chi^2 L^2 Gamma^2 / eps^2 + 3] * log2(12 chi Gamma L d N / eps + 6dN + 1).

    Uses the tighter form that keeps Gamma inside the logarithm.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    clg = inputs.chi * inputs.lip * inputs.gamma
    quad = 216.0 * inputs.k * clg * clg / (eps * eps)
    arg = 12.0 * clg * inputs.d * inputs.n / eps + 6.0 * inputs.d * inputs.n + 1.0
    return (quad + 3.0) * math.log2(arg)


def rademacher_bound(inputs: BoundInputs) -> float:
    """Closed-form Rademacher complexity bound for the predictor class:
    (12/sqrt(N)) [15 chi L Gamma sqrt(K) + 3] sqrt(log2(12 d N^2 [chi L Gamma + 1])) ln N.
    """
    if inputs.n < 2:
        raise ValueError("need n >= 2")
    clg = inputs.chi * inputs.lip * inputs.gamma
    n = inputs.n
    return (
        (12.0 / math.sqrt(n))
        * (15.0 * clg * math.sqrt(inputs.k) + 3.0)
        * math.sqrt(math.log2(12.0 * inputs.d * n * n * (clg + 1.0)))
        * math.log(n)
    )


def deviation_term(inputs: BoundInputs) -> float:
    """6 B sqrt(ln(2/delta) / (2N))."""
    return 6.0 * inputs.loss_bound * math.sqrt(
        math.log(2.0 / inputs.delta) / (2.0 * inputs.n)
    )


def excess_risk_bound(inputs: BoundInputs) -> float:
    """2 * loss_lip * rademacher_bound + deviation_term (exact composition)."""
    return 2.0 * inputs.loss_lip * rademacher_bound(inputs) + deviation_term(inputs)


def sample_complexity(inputs: BoundInputs, eps_target: float) -> int:
    """Smallest N >= 2 with excess_risk_bound <= eps_target (the N field of
    `inputs` is ignored). Bracketing: bound(max(2, N//2)) > eps_target
    whenever the result exceeds 2."""
    if eps_target <= 0:
        raise ValueError("eps_target must be positive")

    def bound(n: int) -> float:
        return excess_risk_bound(replace(inputs, n=n))

    # the bound is not monotone for tiny N (ln N / sqrt(N) rises until ~e^2),
    # so scan the head before switching to doubling + bisection
    for n in range(2, 17):
        if bound(n) <= eps_target:
            return n
    lo, hi = 16, 32
    while bound(hi) > eps_target:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) <= eps_target:
            hi = mid
        else:
            lo = mid
    return hi


def dudley_numeric(cover_log_fn, n: int, alpha: float | None = None) -> float:
    """Dudley entropy integral: 4*alpha + (12/sqrt(N)) * int_alpha^1
    sqrt(cover_log_fn(eps)) d(eps), adaptive quadrature at rel. tol 1e-6."""
    if n < 1:
        raise ValueError("need n >= 1")
    if alpha is None:
        alpha = 1.0 / n

    def integrand(eps: float) -> float:
        v = cover_log_fn(eps)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"cover_log_fn({eps}) = {v} is not admissible")
        return math.sqrt(v)

    if alpha >= 1.0:
        return 4.0 * alpha
    value, _ = integrate.quad(integrand, alpha, 1.0, epsrel=1e-6, limit=200)
    return 4.0 * alpha + (12.0 / math.sqrt(n)) * value


def l1_ball_cover_log(beta: float, d: int, eps: float) -> float:
    """ceil(beta^2/eps^2) * ln(2d); L2 cover of the L1 ball of radius beta."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if beta < 0 or d < 1:
        raise ValueError("need beta >= 0 and d >= 1")
    return math.ceil(beta * beta / (eps * eps)) * math.log(2.0 * d)


@dataclass
class EmpiricalRadEstimate:
    estimate: float
    draws: int
    function_count: int
    seed: int | None
    exhaustive: bool


def empirical_rademacher(
    values: np.ndarray,
    draws: int = 1000,
    seed: int = 0,
    exhaustive: bool = False,
) -> EmpiricalRadEstimate:
    """Monte-Carlo (or exhaustive) empirical Rademacher complexity.

    `values` is an (F, N) array: F predictors evaluated on the same N points.
    Estimates E_sigma max_f (1/N) sum_i sigma_i f(x_i); exhaustive mode
    (N <= 12) averages over all 2^N sign vectors exactly.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 2 or vals.shape[0] == 0:
        raise ValueError("values must be a non-empty (functions, points) array")
    n = vals.shape[1]
    if exhaustive:
        if n > 12:
            raise ValueError("exhaustive mode supports at most 12 points")
        total = 0.0
        for signs in itertools.product((-1.0, 1.0), repeat=n):
            total += (vals @ np.array(signs)).max()
        est = total / (2**n) / n
        return EmpiricalRadEstimate(float(est), 2**n, vals.shape[0], None, True)
    if draws < 1:
        raise ValueError("need draws >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    sigma = rng.integers(0, 2, size=(draws, n)) * 2.0 - 1.0
    est = (sigma @ vals.T).max(axis=1).mean() / n
    return EmpiricalRadEstimate(float(est), draws, vals.shape[0], seed, False)


def estimate_lipschitz(fn, lo: float, hi: float, grid_points: int = 10001) -> float:
    """Max adjacent-pair slope of `fn` on a uniform grid over [lo, hi].

    `fn` maps an array of inputs to an array of outputs.
    """
    if not hi > lo:
        raise ValueError(f"degenerate range [{lo}, {hi}]")
    if grid_points < 2:
        raise ValueError("need grid_points >= 2")
    t = np.linspace(lo, hi, grid_points)
    y = np.asarray(fn(t), dtype=np.float64).reshape(-1)
    dt = t[1] - t[0]
    return float(np.max(np.abs(np.diff(y))) / dt)


def bound_inputs_from_model(
    params: ModelParams,
    tau: float,
    X: np.ndarray,
    loss_spec: LossSpec,
    delta: float = 0.05,
    grid_points: int = 10001,
) -> BoundInputs:
    """Derive BoundInputs from a trained model and its (standardized) inputs.

    chi = max-abs input entry; lip = max pathway Lipschitz estimate over the
    observed pathway-input range; gamma = sum |theta_k|. For the truncated
    square loss loss_lip = 2 sqrt(B) and loss_bound = B; for cross-entropy
    loss_lip = 1 and loss_bound is the worst-case loss at the observed
    max-magnitude logit.
    """
    X = np.asarray(X, dtype=np.float64)
    chi = float(np.abs(X).max())
    W = routing_softmax(params.routing_logits, tau)
    s = X @ W.T
    lips = []
    for k, net in enumerate(params.pathways):
        lo, hi = float(s[:, k].min()), float(s[:, k].max())
        if not hi > lo:
            hi = lo + 1e-9
        lips.append(
            estimate_lipschitz(
                lambda t, net=net: mlp_forward(net, t[:, None])[0][:, 0],
                lo,
                hi,
                grid_points,
            )
        )
    lip = max(max(lips), 1e-12)
    gamma = max(float(np.abs(params.theta).sum()), 1e-12)
    if loss_spec.kind == "truncated_square":
        loss_lip = 2.0 * math.sqrt(loss_spec.cap)
        loss_bound = loss_spec.cap
    else:
        outs = np.array(
            [mlp_forward(net, s[:, k : k + 1])[0][:, 0] for k, net in enumerate(params.pathways)]
        ).T
        F = params.beta + outs @ params.theta
        loss_lip = 1.0
        loss_bound = float(np.log1p(np.exp(np.abs(F).max())))
    return BoundInputs(
        k=params.n_pathways,
        d=params.n_features,
        n=X.shape[0],
        chi=chi,
        lip=lip,
        gamma=gamma,
        loss_lip=loss_lip,
        loss_bound=loss_bound,
        delta=delta,
    )


def bound_report(inputs: BoundInputs) -> dict:
    """Every intermediate quantity of the bound chain as one JSON-able dict."""
    rad = rademacher_bound(inputs)
    dev = deviation_term(inputs)
    return {
        "inputs": {
            "k": inputs.k,
            "d": inputs.d,
            "n": inputs.n,
            "chi": inputs.chi,
            "lip": inputs.lip,
            "gamma": inputs.gamma,
            "loss_lip": inputs.loss_lip,
            "loss_bound": inputs.loss_bound,
            "delta": inputs.delta,
        },
        "class_cover_log_at_eps_1": class_cover_log(inputs, 1.0),
        "class_cover_log_at_eps_0.1": class_cover_log(inputs, 0.1),
        "lip_cover_log_at_eps_0.1": lip_cover_log(inputs.chi, inputs.lip, 0.1),
        "l1_ball_cover_log_at_eps_0.1": l1_ball_cover_log(inputs.gamma, inputs.k, 0.1),
        "dudley_numeric": dudley_numeric(
            lambda eps: class_cover_log(inputs, eps), inputs.n
        ),
        "rademacher_bound": rad,
        "deviation_term": dev,
        "excess_risk": 2.0 * inputs.loss_lip * rad + dev,
    }
