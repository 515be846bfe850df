"""SparXnet: sparse, interpretable neural additive models with softmax
feature routing, classical baselines, and generalization-bound calculators."""

__version__ = "0.1.0"

from .bounds import (
    BoundInputs,
    bound_inputs_from_model,
    bound_report,
    class_cover_log,
    dudley_numeric,
    empirical_rademacher,
    estimate_lipschitz,
    excess_risk_bound,
    l1_ball_cover_log,
    lip_cover_log,
    maurey_cover_log2,
    rademacher_bound,
    sample_complexity,
)
from .data import (
    CsvSchema,
    Dataset,
    SplitSpec,
    breast_cancer_path,
    breast_cancer_schema,
    gen_multi_var,
    gen_single_var,
    ingest_csv,
    load_csv,
    load_dataset,
    preprocess,
    save_dataset,
    split,
)
from .metrics import auc, mse, recovery_rate, results_table_csv, summarize
from .model import (
    ModelConfig,
    ModelParams,
    TemperatureSchedule,
    export_pathway_curves,
    init_model,
    load_model,
    routing_softmax,
    saturation,
    save_model,
    selected_features,
    sparx_backward,
    sparx_forward,
)
from .nncore import AdamState, LossSpec, MlpParams, adam_step, loss_eval, mlp_backward, mlp_forward
from .train import (
    HpoSpace,
    TrainConfig,
    TrainReport,
    random_search_hpo,
    temperature_at,
    train,
)
from .baselines import LinearModel, fcn_fit, lasso_fit, lasso_fit_cv, logreg_fit, ridge_fit

__all__ = [name for name in dir() if not name.startswith("_")]
