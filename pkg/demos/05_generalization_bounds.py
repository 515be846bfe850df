"""Generalization-bound calculators.

Every quantity in the excess-risk chain is a closed-form function of nine
inputs: K pathways, d features, N samples, the data bound chi, the pathway
Lipschitz constant L, the readout L1 bound Gamma, the loss Lipschitz
constant and bound, and the confidence delta. This script evaluates the
chain, checks it against a numeric Dudley integral, compares the theoretical
Rademacher bound to an exhaustive empirical estimate on a tiny function
family, and inverts the excess-risk bound into a sample-complexity estimate.

Run: python demos/05_generalization_bounds.py
"""

import numpy as np

from sparxnet.bounds import (
    BoundInputs,
    class_cover_log,
    deviation_term,
    dudley_numeric,
    empirical_rademacher,
    excess_risk_bound,
    rademacher_bound,
    sample_complexity,
)

inputs = BoundInputs(k=1, d=10, n=1000, chi=1.0, lip=1.0, gamma=1.0,
                     loss_lip=1.0, loss_bound=1.0, delta=0.05)

# --- the Theorem-1 chain ------------------------------------------------------
rad = rademacher_bound(inputs)
dev = deviation_term(inputs)
risk = excess_risk_bound(inputs)
print(f"Rademacher complexity bound: {rad:.4f}")
print(f"deviation term (delta={inputs.delta}): {dev:.4f}")
print(f"excess risk bound = 2*L_loss*rad + dev = {risk:.4f}")
assert risk == 2.0 * inputs.loss_lip * rad + dev  # exact structural identity

# --- Dudley's entropy integral never exceeds the closed form ----------------
dud = dudley_numeric(lambda eps: class_cover_log(inputs, eps), inputs.n)
print(f"numeric Dudley integral: {dud:.4f} <= {rad:.4f}")

# --- empirical Rademacher on an exhaustive sign set --------------------------
# Admissible predictors with chi = L = Gamma = 1 on 8 points in [-1, 1]:
# +/-x and +/-|x| are all 1-Lipschitz with unit readout.
x = np.linspace(-1.0, 1.0, 8)
values = np.stack([x, -x, np.abs(x), -np.abs(x)])  # four predictors, N = 8
est = empirical_rademacher(values, exhaustive=True)
small = BoundInputs(k=1, d=1, n=8, chi=1.0, lip=1.0, gamma=1.0,
                    loss_lip=1.0, loss_bound=1.0, delta=0.05)
print(f"empirical Rademacher (4 predictors, exhaustive over 2^8 signs): {est.estimate:.4f} "
      f"<= corollary bound {rademacher_bound(small):.4f}")

# --- how many samples for a target excess risk? ------------------------------
for eps in (2.0, 1.0, 0.5):
    n = sample_complexity(inputs, eps)
    print(f"samples needed for excess risk <= {eps}: N = {n}")
