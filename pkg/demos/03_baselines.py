"""Classical baselines on the single-variable synthetic.

Lasso (cyclic coordinate descent with a validation-tuned penalty), Ridge,
and a plain fully-connected network share the task of demo 01. The linear
models cannot represent x^2 + 2 sin x, so their test MSE plateaus around the
variance the nonlinearity leaves behind; the FCN can fit it but sees all
three features at once.

Run: python demos/03_baselines.py
"""

import numpy as np

from sparxnet import (
    SplitSpec,
    TrainConfig,
    fcn_fit,
    gen_single_var,
    lasso_fit_cv,
    mse,
    ridge_fit,
    split,
)
from sparxnet.nncore import LossSpec, mlp_forward

dataset = gen_single_var(n=1000, noisy_count=2, noise_sigma=0.05, seed=0)
train_ds, test_ds = split(dataset, SplitSpec(test_fraction=0.2, seed=0))
fit_ds, val_ds = split(train_ds, SplitSpec(test_fraction=0.2, seed=1))

# --- Lasso: penalty chosen on the validation split --------------------------
lasso = lasso_fit_cv(fit_ds.X, fit_ds.y, val_ds.X, val_ds.y)
print(f"lasso: lambda={lasso.penalty:.2e}, "
      f"coefficients={np.array2string(lasso.coefficients, precision=3)}, "
      f"test MSE={mse(lasso.predict(test_ds.X), test_ds.y):.4f}")

# --- Ridge -------------------------------------------------------------------
ridge = ridge_fit(train_ds.X, train_ds.y, lam=0.1)
print(f"ridge: test MSE={mse(ridge.predict(test_ds.X), test_ds.y):.4f}")

# --- FCN: same Adam loop and validation checkpointing as SparXnet -----------
config = TrainConfig(iterations=800, learning_rate=0.009, seed=0,
                     loss=LossSpec("truncated_square", 100.0))
net, report = fcn_fit((64, 64, 64), config, train_ds)
preds, _ = mlp_forward(net, test_ds.X)
print(f"fcn:   test MSE={mse(preds[:, 0], test_ds.y):.4f} "
      f"(best checkpoint at iteration {report.best_iteration})")
