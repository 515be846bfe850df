"""Binary classification on the bundled Breast Cancer Wisconsin table.

The raw CSV flows through the full ingestion pipeline: RFC-4180 parsing,
stratified train/test split on raw rows, then median imputation and
standardization fitted on the training rows only. SparXnet trains on the
binary cross-entropy loss (its output F(x) is the logit) with K = 8
pathways, so the final model reads at most eight of the thirty features.

Run: python demos/04_breast_cancer.py
"""

import sys

from sparxnet import (
    ModelConfig,
    SplitSpec,
    TemperatureSchedule,
    TrainConfig,
    auc,
    breast_cancer_path,
    breast_cancer_schema,
    ingest_csv,
    logreg_fit,
    sparx_forward,
    train,
)
from sparxnet.nncore import LossSpec

path = breast_cancer_path()
if path is None:
    sys.exit("bundled dataset not installed")

train_ds, test_ds = ingest_csv(
    path, breast_cancer_schema(), SplitSpec(test_fraction=0.2, stratified=True, seed=0)
)
print(f"train {train_ds.n_rows} rows / test {test_ds.n_rows} rows, "
      f"{train_ds.n_features} features, positives = malignant")

# --- logistic regression reference -------------------------------------------
logreg = logreg_fit(train_ds.X, train_ds.y)
print(f"logistic regression test AUC: {auc(logreg.predict(test_ds.X), test_ds.y):.4f}")

# --- SparXnet with 8 pathways ------------------------------------------------
iterations = 1000
model_config = ModelConfig(
    n_pathways=8,
    n_features=train_ds.n_features,
    pathway_hidden=(64, 64, 64),
    dropout=0.1,
    temperature=TemperatureSchedule(tau0=10.0, total_iterations=iterations),
    seed=0,
)
train_config = TrainConfig(iterations=iterations, learning_rate=0.003, seed=0,
                           loss=LossSpec("bce"))
params, tau, report = train(model_config, train_config, train_ds)

scores, _ = sparx_forward(params, test_ds.X, tau)
print(f"SparXnet test AUC: {auc(scores, test_ds.y):.4f}")
picked = sorted(set(report.selected_indices))
print("features the pathways routed to:")
for i in picked:
    print(f"  [{i}] {train_ds.feature_names[i]}")
