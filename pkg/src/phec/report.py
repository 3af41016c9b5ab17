"""Machine-readable run reports with a fixed, diff-friendly key order."""

from __future__ import annotations

import json
from pathlib import Path

from .ensemble import ThresholdSearchResult
from .errors import DataError
from .evaluation import Metrics, confusion, metrics, per_category_tpr

REPORT_FORMAT = "phec-report"
REPORT_VERSION = 1


def _threshold_section(result: ThresholdSearchResult, include_curve: bool) -> dict:
    out = {
        "gamma_star": result.gamma_star,
        "feasible": result.feasible,
        "degenerate": result.degenerate,
        "u": result.u,
        "grid_size": result.grid_size,
        "tpr": result.tpr,
        "fpr": result.fpr,
    }
    if include_curve:
        out["curve"] = [
            {"gamma": g, "tpr": t, "fpr": f} for g, t, f in result.curve()
        ]
    return out


def _metrics_section(m: Metrics) -> dict:
    return m.as_dict()


def build_train_report(cfg, outcome) -> dict:
    """Report for a training run; includes per-round history for federated
    pipelines and the alpha search trace for noise-tolerant ones."""
    val = outcome.val_data
    predicted = (
        outcome.bundle.aggregate_scores(val.features) >= outcome.bundle.gamma_star
    ).astype(int)
    val_metrics = metrics(confusion(predicted, val.binary_label))
    report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "command": "train",
        "pipeline": cfg.pipeline,
        "config": cfg.echo(),
        "data": {
            "n_train": outcome.train_data.n,
            "n_val": val.n,
            "dim": outcome.train_data.dim,
            "noisy_labels": outcome.train_data.noisy_labels,
            "flipped_count": outcome.flipped_count,
        },
        "alpha_star": outcome.bundle.alpha_star,
        "threshold": _threshold_section(outcome.threshold, cfg.include_curve),
        "validation_metrics": _metrics_section(val_metrics),
    }
    if outcome.alpha_search is not None:
        report["alpha_search"] = [
            {
                "alpha": a,
                "gamma_star": r.gamma_star,
                "feasible": r.feasible,
                "tpr": r.tpr,
                "fpr": r.fpr,
            }
            for a, r in outcome.alpha_search.per_alpha
        ]
    if outcome.fed_state is not None:
        state = outcome.fed_state
        report["federated"] = {
            "rounds": state.rounds,
            "best_round": state.best_round,
            "stop_reason": state.stop_reason,
            "t_max": state.t_max,
            "bytes_uploaded_per_round": state.bytes_uploaded_per_round,
            "history": [
                {
                    "round": t + 1,
                    "gamma": state.gamma_history[t],
                    "tpr": state.tpr_history[t],
                    "fpr": state.fpr_history[t],
                    "feasible": state.feasible_history[t],
                }
                for t in range(state.rounds)
            ],
        }
    report["warnings"] = list(outcome.warnings)
    return report


def build_eval_report(
    bundle,
    test,
    model_path: str,
    test_path: str,
    timing_seconds: float | None = None,
) -> dict:
    predicted = bundle.predict(test.features)
    test_metrics = metrics(confusion(predicted, test.binary_label))
    report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "command": "eval",
        "pipeline": bundle.pipeline,
        "model": str(model_path),
        "test_data": str(test_path),
        "gamma_star": bundle.gamma_star,
        "alpha_star": bundle.alpha_star,
        "n_test": test.n,
        "metrics": _metrics_section(test_metrics),
    }
    if test.noisy_labels:
        report["per_category"] = None
    else:
        report["per_category"] = {
            cat: {
                "total": d.total,
                "detected": d.detected,
                "missed": d.missed,
                "tpr": d.tpr,
            }
            for cat, d in per_category_tpr(predicted, test.category).items()
        }
    if timing_seconds is not None:
        report["timing"] = {"seconds_per_instance": timing_seconds}
    report["warnings"] = list(test.warnings)
    return report


def emit_report(report: dict, path):
    """Write the report as indented JSON (keys keep construction order)."""
    try:
        Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write report to {path}: {exc}")


def load_report(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {path}: {exc}")
    if payload.get("format") != REPORT_FORMAT:
        raise DataError(f"{path}: not a {REPORT_FORMAT} file")
    return payload


def summarize_report(report: dict) -> str:
    """Short human-readable digest of a report file."""
    lines = [f"{report.get('command', '?')} report, pipeline {report.get('pipeline', '?')}"]
    if "threshold" in report:
        t = report["threshold"]
        lines.append(
            f"  gamma*={t['gamma_star']:.6g} feasible={t['feasible']} "
            f"tpr={t['tpr']:.4f} fpr={t['fpr']:.4f} (u={t['u']})"
        )
    for key in ("validation_metrics", "metrics"):
        if key in report:
            m = report[key]
            lines.append(
                f"  {key}: acc={m['accuracy']:.4f} tpr={m['tpr']:.4f} "
                f"fpr={m['fpr']:.4f} precision={m['precision']:.4f} f1={m['f1']:.4f}"
            )
    if report.get("federated"):
        f = report["federated"]
        lines.append(
            f"  federated: rounds={f['rounds']} best_round={f['best_round']} "
            f"stop={f['stop_reason']}"
        )
    if report.get("warnings"):
        for w in report["warnings"]:
            lines.append(f"  warning: {w}")
    return "\n".join(lines)
