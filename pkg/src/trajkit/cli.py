"""The ``trajkit`` command line: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 stage failure (machine-readable JSON on stderr),
2 usage error. Defaults resolve as CLI flag > config file > built-in; the
config file comes from ``--config`` or the ``TRAJKIT_CONFIG`` environment
variable. Subcommands never mutate their inputs and are deterministic for a
fixed seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .adams import QuadVelocityRegressor, predict_trajectory
from .dagsvm import DagSvmClassifier, evaluate_classifier
from .errors import ToolkitError
from .evaluation import trajectory_error
from .fusion import FlightState, feature_matrix, fuse, window_features
from .mlp import MlpRegressor, rollout, transition_dataset
from .pca import FeatureScaler, PrincipalComponents
from .pipeline import (
    PipelineConfig,
    derive_seed,
    load_config,
    resolve_gamma,
    run_reproduce,
    scenario_from_config,
    STAGE_NETWORKS,
)
from .plotting import comparison_series_rows, render_comparison_svg
from .simgen import FlightScenario, generate, generate_corpus
from .telemetry import preprocess

STATE_CODES = [s.value for s in FlightState]
STATE_NAMES = {
    "climb": "A",
    "level": "B",
    "turn": "C",
    "circle": "D",
    "descent": "E",
}
STATE_CHOICES = STATE_CODES + sorted(STATE_NAMES)


def _state_code(value: str) -> str:
    return STATE_NAMES.get(value, value)


def _config_from_args(args) -> PipelineConfig:
    path = getattr(args, "config", None) or os.environ.get("TRAJKIT_CONFIG")
    config = load_config(path) if path else PipelineConfig()
    for field in dataclasses.fields(PipelineConfig):
        value = getattr(args, field.name, None)
        if value is None:
            continue
        if field.name == "gamma" and isinstance(value, str) and value not in ("auto", "scale"):
            value = float(value)
        setattr(config, field.name, value)
    config.validate()
    return config


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (overrides built-in defaults)")


def _scenario(args, config: PipelineConfig) -> FlightScenario:
    base = scenario_from_config(config)
    return dataclasses.replace(
        base,
        state=FlightState(_state_code(args.state)),
        seed=config.seed if args.seed is None else args.seed,
    )


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    stream, truth = generate(_scenario(args, config))
    io.write_stream_csv(Path(args.out), stream)
    if args.truth:
        io.write_frames_csv(Path(args.truth), truth)
    return 0


def cmd_simulate_corpus(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = config.seed if args.seed is None else args.seed
    corpus = generate_corpus(
        per_state=config.per_state,
        seed=seed,
        window_len=config.window,
        stride=config.stride,
        base=scenario_from_config(config),
    )
    manifest = []
    indices: dict[str, int] = {}
    for flight in corpus:
        code = flight.state.value
        j = indices.get(code, 0)
        indices[code] = j + 1
        raw_name = f"raw_{code}_{j:03d}.csv"
        truth_name = f"truth_{code}_{j:03d}.csv"
        io.write_stream_csv(out_dir / raw_name, flight.stream)
        io.write_frames_csv(out_dir / truth_name, flight.truth)
        manifest.append(
            {
                "state": code,
                "raw": raw_name,
                "truth": truth_name,
                "seed": flight.scenario.seed,
            }
        )
    io.save_json(out_dir / "manifest.json", {"seed": seed, "flights": manifest})
    return 0


def cmd_preprocess(args) -> int:
    config = _config_from_args(args)
    stream = io.read_stream_csv(Path(args.infile))
    clean = preprocess(stream, sigma_k=config.sigma, smooth_m=config.smooth)
    io.write_stream_csv(Path(args.out), clean)
    if args.repair_log:
        io.write_repair_log_csv(Path(args.repair_log), clean)
    return 0


def cmd_features(args) -> int:
    config = _config_from_args(args)
    stream = io.read_stream_csv(Path(args.infile))
    theta0 = tuple(float(v) for v in args.theta0.split(","))
    if len(theta0) != 3:
        raise ToolkitError("theta0 must be three comma-separated numbers")
    frames = fuse(_as_clean(stream), theta0)
    label = FlightState(_state_code(args.label)) if args.label else None
    vectors = window_features(frames, config.window, config.stride, label=label)
    io.write_features_csv(Path(args.out), vectors)
    if args.frames_out:
        io.write_frames_csv(Path(args.frames_out), frames)
    return 0


def _as_clean(stream):
    from .telemetry import CleanStream

    return CleanStream(
        t=stream.t, channels=stream.channels, period_T=stream.period_T, repair_log=[]
    )


def cmd_pca_fit(args) -> int:
    config = _config_from_args(args)
    vectors = io.read_features_csv(Path(args.infile))
    X = feature_matrix(vectors)
    payload: dict = {}
    if config.standardize and not args.no_standardize:
        scaler = FeatureScaler().fit(X)
        X = scaler.transform(X)
        payload["scaler"] = scaler.to_dict()
    pca = PrincipalComponents(target_ratio=config.ratio).fit(X)
    payload.update(pca.to_dict())
    io.save_json(Path(args.out), payload)
    return 0


def _load_projection(path: Path):
    payload = io.load_json(path)
    pca = PrincipalComponents.from_dict(payload)
    scaler = (
        FeatureScaler.from_dict(payload["scaler"]) if "scaler" in payload else None
    )

    def project(X):
        if scaler is not None:
            X = scaler.transform(X)
        return pca.transform(X)

    return project, pca


def cmd_train_svm(args) -> int:
    config = _config_from_args(args)
    vectors = io.read_features_csv(Path(args.infile))
    labels = [v.label.value if v.label else "" for v in vectors]
    if any(not l for l in labels):
        raise ToolkitError("training features must carry labels")
    project, _ = _load_projection(Path(args.pca))
    X = project(feature_matrix(vectors))
    classifier = DagSvmClassifier(
        C=config.svm_c,
        kernel="rbf",
        gamma=resolve_gamma(config.gamma, X),
        tol=config.svm_tol,
        seed=config.seed if args.seed is None else args.seed,
    ).fit(X, labels)
    payload = classifier.to_dict()
    payload["pca_ref"] = str(args.pca)
    io.save_json(Path(args.out), payload)
    return 0


def cmd_classify(args) -> int:
    payload = io.load_json(Path(args.model))
    classifier = DagSvmClassifier.from_dict(payload)
    pca_path = Path(args.pca) if args.pca else Path(payload["pca_ref"])
    project, _ = _load_projection(pca_path)
    vectors = io.read_features_csv(Path(args.infile))
    X = project(feature_matrix(vectors))
    predicted = classifier.predict(X)
    io.write_states_csv(
        Path(args.out),
        [(v.window_start, str(p)) for v, p in zip(vectors, predicted)],
    )
    if args.report:
        truth = [v.label.value for v in vectors if v.label]
        if len(truth) == len(vectors):
            confusion, metrics = evaluate_classifier(
                truth, predicted, labels=STATE_CODES
            )
            accuracy = float(np.mean(np.asarray(truth) == np.asarray(predicted)))
            io.save_json(
                Path(args.report),
                {
                    "accuracy": accuracy,
                    "per_state": metrics,
                    "confusion": confusion.to_dict(),
                },
            )
        else:
            io.save_json(Path(args.report), {"note": "no labels in input"})
    return 0


def _paint_frame_labels(
    n_frames: int, states: list[tuple[int, str]], window_len: int
) -> list[str | None]:
    labels: list[str | None] = [None] * n_frames
    for start, state in states:
        for i in range(start, min(start + window_len, n_frames)):
            labels[i] = state
    return labels


def _grouped_frames(args, config, frames):
    """Frames per model key: per-state groups when labels are given."""
    groups: dict[str, list] = {"global": list(frames)}
    if args.states:
        states = io.read_states_csv(Path(args.states))
        labels = _paint_frame_labels(len(frames), states, config.window)
        for code in STATE_CODES:
            members = [f for f, l in zip(frames, labels) if l == code]
            if members:
                groups[code] = members
    return groups


def cmd_train_adams(args) -> int:
    config = _config_from_args(args)
    frames = io.read_frames_csv(Path(args.infile))
    models = {
        key: QuadVelocityRegressor().fit(group).to_dict()
        for key, group in _grouped_frames(args, config, frames).items()
    }
    io.save_json(Path(args.out), {"models": models})
    return 0


def cmd_train_mlp(args) -> int:
    config = _config_from_args(args)
    frames = io.read_frames_csv(Path(args.infile))
    seed0 = config.seed if args.seed is None else args.seed
    models = {}
    for idx, (key, group) in enumerate(sorted(_grouped_frames(args, config, frames).items())):
        X, Y = transition_dataset(group)
        models[key] = (
            MlpRegressor(
                hidden_units=config.hidden,
                learning_rate=config.lr,
                epochs=config.epochs,
                seed=derive_seed(seed0, STAGE_NETWORKS, idx),
            )
            .fit(X, Y)
            .to_dict()
        )
    io.save_json(Path(args.out), {"models": models})
    return 0


def cmd_predict(args) -> int:
    config = _config_from_args(args)
    frames = io.read_frames_csv(Path(args.start))
    start = frames[-1]
    payload = io.load_json(Path(args.model))
    key = _state_code(args.state) if args.state else "global"
    if key not in payload["models"]:
        raise ToolkitError(f"model file has no entry for state {key!r}")
    entry = payload["models"][key]
    if args.method == "adams":
        model = QuadVelocityRegressor.from_dict(entry)
        prediction = predict_trajectory(
            model,
            start.t,
            start.pos,
            h=config.h,
            steps=config.steps,
            with_confidence=args.confidence,
            coverage_multiplier=config.coverage,
            n_curve_samples=config.curve_samples,
        )
    else:
        model = MlpRegressor.from_dict(entry)
        prediction = rollout(model, start, config.steps, config.h)
    io.write_prediction_csv(Path(args.out), prediction)
    if args.curves:
        io.write_curves_csv(Path(args.curves), prediction)
    return 0


def cmd_eval(args) -> int:
    actual = io.read_track_csv(Path(args.actual))
    predicted = io.read_track_csv(Path(args.pred))
    n = min(actual.shape[0], predicted.shape[0]) if args.clip else actual.shape[0]
    report = trajectory_error(actual[:n], predicted[:n])
    io.save_json(
        Path(args.out),
        {
            "mu": report.mu,
            "n": int(report.distances.size),
            "max_distance": float(report.distances.max()),
            "distances": report.distances.tolist(),
        },
    )
    return 0


def cmd_plot(args) -> int:
    report = io.load_json(Path(args.report))
    svg = render_comparison_svg(report)
    out = Path(args.out)
    out.write_text(svg, encoding="utf-8", newline="\n")
    rows = comparison_series_rows(report)
    series = out.with_suffix(".csv")
    lines = ["method,recognition,state,mu,n"]
    lines += [f"{m},{a},{s},{mu!r},{n}" for m, a, s, mu, n in rows]
    series.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return 0


def cmd_reproduce(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report, _ = run_reproduce(config)
    io.save_json(out_dir / "report.json", report)
    svg = render_comparison_svg(report)
    (out_dir / "fig_comparison.svg").write_text(svg, encoding="utf-8", newline="\n")
    rows = comparison_series_rows(report)
    lines = ["method,recognition,state,mu,n"]
    lines += [f"{m},{a},{s},{mu!r},{n}" for m, a, s, mu, n in rows]
    (out_dir / "fig_comparison.csv").write_text(
        "\n".join(lines) + "\n", encoding="utf-8", newline="\n"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajkit",
        description="Flight-state recognition and trajectory prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one synthetic flight")
    _add_config_flag(p)
    p.add_argument("--state", required=True, choices=STATE_CHOICES)
    p.add_argument("--duration", type=float)
    p.add_argument("--period", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simulate-corpus", help="generate a labeled corpus")
    _add_config_flag(p)
    p.add_argument("--per-state", dest="per_state", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate_corpus)

    p = sub.add_parser("preprocess", help="clean a raw telemetry CSV")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--smooth", type=float)
    p.add_argument("--repair-log", dest="repair_log")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="fuse a clean stream and window it")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--label", choices=STATE_CHOICES)
    p.add_argument("--theta0", default="0,0,0")
    p.add_argument("--frames-out", dest="frames_out")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("pca-fit", help="fit the projection on a feature CSV")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratio", type=float)
    p.add_argument("--no-standardize", action="store_true")
    p.set_defaults(func=cmd_pca_fit)

    p = sub.add_parser("train-svm", help="train the DAG classifier")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--pca", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--C", dest="svm_c", type=float)
    p.add_argument("--gamma")
    p.add_argument("--tol", dest="svm_tol", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("classify", help="predict flight states for features")
    _add_config_flag(p)
    p.add_argument("--model", required=True)
    p.add_argument("--pca")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train-adams", help="fit velocity-field predictors")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--states", help="window states CSV enabling per-state models")
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_train_adams)

    p = sub.add_parser("train-mlp", help="train network predictors")
    _add_config_flag(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--states", help="window states CSV enabling per-state models")
    p.add_argument("--window", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_mlp)

    p = sub.add_parser("predict", help="integrate a trajectory forward")
    _add_config_flag(p)
    p.add_argument("--method", required=True, choices=["adams", "mlp"])
    p.add_argument("--model", required=True)
    p.add_argument("--start", required=True, help="frames CSV; last row is the start")
    p.add_argument("--state", choices=STATE_CHOICES + ["global"])
    p.add_argument("--h", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--confidence", action="store_true")
    p.add_argument("--curves", help="sidecar CSV for confidence-circle samples")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="error between actual and predicted tracks")
    _add_config_flag(p)
    p.add_argument("--actual", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--clip", action="store_true", help="truncate to common length")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render the comparison report as SVG")
    _add_config_flag(p)
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reproduce", help="run the full experiment end to end")
    _add_config_flag(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-state", dest="per_state", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ToolkitError, ValueError, OSError) as exc:
        error = {
            "error": type(exc).__name__,
            "stage": args.command,
            "message": str(exc),
        }
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
