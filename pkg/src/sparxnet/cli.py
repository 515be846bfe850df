"""Command-line front end.

Subcommands: synth single|multi, train, hpo, eval, bound, export-curves,
saturation. Every run writes a JSON manifest next to its primary output.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, baselines, bounds, data, metrics
from . import model as mdl
from .nncore import LossSpec
from .train import HpoSpace, TrainConfig, random_search_hpo
from .train import train as train_model


class CliError(RuntimeError):
    pass


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command: str, config: dict, inputs: list[str], outputs: list[str],
                    seed: int | None, started: float) -> None:
    primary = outputs[0]
    manifest = {
        "command": command,
        "config": config,
        "input_hashes": {p: _sha256(p) for p in inputs},
        "outputs": outputs,
        "seed": seed,
        "tool_version": __version__,
        "wall_clock": time.perf_counter() - started,
    }
    path = primary + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(mdl.dumps_json(obj))
        fh.write("\n")


def _load_config_file(args: argparse.Namespace) -> dict:
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _opt(args, file_cfg: dict, name: str, default):
    """CLI flag > config file > default."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in file_cfg:
        return file_cfg[name]
    return default


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> list[str]:
    # single hides the true feature among 2 decoys by default, multi among 5
    noisy = args.noisy if args.noisy is not None else (2 if args.kind == "single" else 5)
    if args.kind == "single":
        ds = data.gen_single_var(
            n=args.n,
            noisy_count=noisy,
            noise_sigma=args.noise_sigma,
            true_position=args.position,
            seed=args.seed,
        )
    else:
        ds = data.gen_multi_var(n=args.n, noisy_count=noisy, seed=args.seed)
    data.save_dataset(args.out, ds)
    return [args.out, data._sidecar_path(args.out)]


def _loss_from_args(task: str, loss_kind: str | None, cap: float | None) -> LossSpec:
    if loss_kind is None:
        loss_kind = "bce" if task == "binary" else "truncated_square"
    return LossSpec(loss_kind, 4.0 if cap is None else cap)


def cmd_train(args, file_cfg: dict) -> list[str]:
    ds = data.load_dataset(args.data)
    outputs = [args.out]
    seed = _opt(args, file_cfg, "seed", 0)
    loss = _loss_from_args(ds.task, _opt(args, file_cfg, "loss", None),
                           _opt(args, file_cfg, "loss_bound", 4.0))
    if args.model == "sparxnet":
        iterations = _opt(args, file_cfg, "iterations", 2000)
        mc = mdl.ModelConfig(
            n_pathways=_opt(args, file_cfg, "pathways", 1),
            n_features=ds.n_features,
            pathway_hidden=tuple(file_cfg.get("pathway_hidden", (128,) * 6)),
            dropout=_opt(args, file_cfg, "dropout", 0.1),
            temperature=mdl.TemperatureSchedule(
                _opt(args, file_cfg, "tau0", 10.0), iterations
            ),
            seed=seed,
        )
        tc = TrainConfig(
            iterations=iterations,
            batch_size=_opt(args, file_cfg, "batch_size", 64),
            learning_rate=_opt(args, file_cfg, "learning_rate", 0.003),
            seed=seed,
            loss=loss,
        )
        params, tau, report = train_model(mc, tc, ds)
        mdl.save_model(args.out, mc, params, tau)
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
                fh.write("\n")
            outputs.append(args.report)
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write(report.trace_csv())
            outputs.append(args.trace)
    elif args.model == "fcn":
        tc = TrainConfig(
            iterations=_opt(args, file_cfg, "iterations", 2000),
            batch_size=_opt(args, file_cfg, "batch_size", 64),
            learning_rate=_opt(args, file_cfg, "learning_rate", 0.003),
            seed=seed,
            loss=loss,
        )
        hidden = tuple(file_cfg.get("pathway_hidden", (128,) * 6))
        net, report = baselines.fcn_fit(hidden, tc, ds, _opt(args, file_cfg, "dropout", 0.0))
        _write_json(args.out, {
            "kind": "fcn",
            "layers": [
                {"weight": [list(map(float, r)) for r in w], "bias": list(map(float, b))}
                for w, b in zip(net.weights, net.biases)
            ],
        })
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
                fh.write("\n")
            outputs.append(args.report)
    elif args.model in ("lasso", "ridge"):
        lam = _opt(args, file_cfg, "penalty", 0.01)
        fit = baselines.lasso_fit if args.model == "lasso" else baselines.ridge_fit
        m = fit(ds.X, ds.y, lam)
        baselines.save_linear_model(args.out, m)
    elif args.model == "logreg":
        m = baselines.logreg_fit(ds.X, ds.y)
        baselines.save_linear_model(args.out, m)
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown model {args.model!r}")
    return outputs


def cmd_hpo(args) -> list[str]:
    ds = data.load_dataset(args.data)
    loss = _loss_from_args(ds.task, args.loss, args.loss_bound)
    mc = mdl.ModelConfig(
        n_pathways=args.pathways, n_features=ds.n_features, seed=args.seed,
        temperature=mdl.TemperatureSchedule(10.0, args.iterations),
    )
    tc = TrainConfig(iterations=args.iterations, seed=args.seed, loss=loss)
    result = random_search_hpo(
        HpoSpace(trials=args.trials), mc, tc, ds, seed=args.seed
    )
    best = result.leaderboard[0]
    _write_json(args.out, {
        "best": best,
        "leaderboard": result.leaderboard,
    })
    return [args.out]


def _model_scores(path: str, ds: data.Dataset) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "routing_logits" in doc:
        _, params, tau = mdl.load_model(path)
        scores, _ = mdl.sparx_forward(params, ds.X, tau)
        return np.atleast_1d(scores)
    if doc.get("kind") == "fcn":
        from .nncore import MlpParams, mlp_forward

        weights = [np.array(l["weight"]) for l in doc["layers"]]
        biases = [np.array(l["bias"]) for l in doc["layers"]]
        out, _ = mlp_forward(MlpParams(weights, biases), ds.X)
        return out[:, 0]
    m = baselines.load_linear_model(path)
    return m.predict(ds.X)


def cmd_eval(args) -> list[str]:
    ds = data.load_dataset(args.data)
    scores = _model_scores(args.model, ds)
    result: dict = {"n": ds.n_rows, "task": ds.task}
    if ds.task == "binary":
        result["auc"] = metrics.auc(scores, ds.y)
    result["mse"] = metrics.mse(scores, ds.y)
    if ds.true_indices:
        try:
            _, params, tau = mdl.load_model(args.model)
            sel = mdl.selected_features(params, tau)
            result["recovery_rate"] = metrics.recovery_rate(
                sel.selected_index, ds.true_indices
            ).rate
        except (ValueError, KeyError):
            pass
    _write_json(args.out, result)
    return [args.out]


def cmd_bound(args) -> list[str]:
    if args.model:
        ds = data.load_dataset(args.data)
        _, params, tau = mdl.load_model(args.model)
        loss = _loss_from_args(ds.task, args.loss, args.loss_bound)
        inputs = bounds.bound_inputs_from_model(params, tau, ds.X, loss, args.delta)
    else:
        required = {"k": args.k, "d": args.d, "n": args.n, "chi": args.chi,
                    "lip": args.lip, "gamma": args.gamma,
                    "loss_lip": args.loss_lip, "loss_bound": args.loss_bound}
        missing = [k for k, v in required.items() if v is None]
        if missing:
            raise CliError(
                "missing flags (or use --model): " + ", ".join("--" + m for m in missing)
            )
        inputs = bounds.BoundInputs(delta=args.delta, **required)
    report = bounds.bound_report(inputs)
    report["sample_complexity_at_eps_1"] = bounds.sample_complexity(inputs, 1.0)
    _write_json(args.out, report)
    return [args.out]


def cmd_export_curves(args) -> list[str]:
    _, params, tau = mdl.load_model(args.model)
    ds = data.load_dataset(args.data)
    ranges = [(float(c.min()), float(c.max())) for c in ds.X.T]
    curves = mdl.export_pathway_curves(params, tau, ranges, args.samples)
    sel = mdl.selected_features(params, tau)
    lines = ["pathway,feature,t,value"]
    for k, curve in enumerate(curves):
        for t, v in curve:
            lines.append(f"{k},{sel.selected_index[k]},{t:.17g},{v:.17g}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return [args.out]


def cmd_saturation(args) -> list[str]:
    _, params, tau = mdl.load_model(args.model)
    W = mdl.routing_softmax(params.routing_logits, tau)
    lines = [",".join(f"f{j}" for j in range(W.shape[1]))]
    for row in W:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return [args.out]


# ---------------------------------------------------------------------------
# Parser / dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparxnet")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("kind", choices=["single", "multi"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noisy", type=int, default=None)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.05)
    p.add_argument("--position", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("--model", choices=["sparxnet", "fcn", "lasso", "ridge", "logreg"],
                   default="sparxnet")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--trace", default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--pathways", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--tau0", type=float, default=None)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--loss", choices=["truncated_square", "bce"], default=None)
    p.add_argument("--loss-bound", dest="loss_bound", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("hpo", help="random-search hyperparameter optimization")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--pathways", type=int, default=1)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--loss", choices=["truncated_square", "bce"], default=None)
    p.add_argument("--loss-bound", dest="loss_bound", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="score a trained model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bound", help="evaluate the generalization-bound formulas")
    p.add_argument("--model", default=None, help="derive inputs from a model file")
    p.add_argument("--data", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--chi", type=float, default=None)
    p.add_argument("--lip", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--loss-lip", dest="loss_lip", type=float, default=None)
    p.add_argument("--loss-bound", dest="loss_bound", type=float, default=None)
    p.add_argument("--loss", choices=["truncated_square", "bce"], default=None)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", default="bound.json")

    p = sub.add_parser("export-curves", help="emit per-pathway transformation curves")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", required=True)

    p = sub.add_parser("saturation", help="emit the post-softmax routing matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    started = time.perf_counter()
    try:
        inputs = [p for p in (getattr(args, "data", None), getattr(args, "config", None))
                  if p]
        if args.command == "synth":
            outputs = cmd_synth(args)
        elif args.command == "train":
            file_cfg = _load_config_file(args)
            outputs = cmd_train(args, file_cfg)
        elif args.command == "hpo":
            outputs = cmd_hpo(args)
        elif args.command == "eval":
            outputs = cmd_eval(args)
            inputs.append(args.model)
        elif args.command == "bound":
            outputs = cmd_bound(args)
            if args.model:
                inputs.append(args.model)
        elif args.command == "export-curves":
            outputs = cmd_export_curves(args)
            inputs.append(args.model)
        elif args.command == "saturation":
            outputs = cmd_saturation(args)
            inputs.append(args.model)
        else:  # pragma: no cover
            return 2
        resolved = {
            k: v for k, v in vars(args).items()
            if k != "command" and not callable(v)
        }
        _write_manifest(args.command, resolved, inputs,
                        outputs, getattr(args, "seed", None), started)
        return 0
    except (CliError, OSError, ValueError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
