"""Output files of the command-line surface.

Every table is written twice: a fixed-width text report rendered from a Jinja2
template, and a comma-separated file written with pandas. Both start with the
'#'-prefixed header block, so `pandas.read_csv(path, comment="#")` reads the
CSV files back directly.
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.core.models import EventSequence
from app.evaluation.models import EvaluationReport, StateRange
from app.learning.models import BicScan, TrainingTrace
from app.logging import get_logger
from app.regression.models import BeliefTrajectory, PredictiveDistribution

from .models import ReportHeader
from .templates import TemplateRenderer

logger = get_logger(__name__, component="reporting")

CSV_FLOAT_FORMAT = "%.10g"

_renderer: Optional[TemplateRenderer] = None


def _get_renderer() -> TemplateRenderer:
    global _renderer
    if _renderer is None:
        _renderer = TemplateRenderer()
    return _renderer


def _fmt(value: float, spec: str = ".3f") -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, spec)


def write_csv(path: Path, header: ReportHeader, table: pd.DataFrame) -> Path:
    """Write a header block followed by a CSV table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(header.render())
        table.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug(
        "Wrote table", extra={"event": "report.csv.written", "path": str(path), "rows": len(table)}
    )
    return path


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def trace_table(trace: TrainingTrace) -> pd.DataFrame:
    """One row per evaluated model: iteration, log-likelihood, relative improvement."""
    values = np.asarray(trace.log_likelihoods, dtype=float)
    improvement = np.full(values.shape, np.nan)
    if values.size > 1:
        improvement[1:] = np.diff(values) / np.abs(values[:-1])
    return pd.DataFrame(
        {
            "iteration": np.arange(values.size),
            "log_likelihood": values,
            "relative_improvement": improvement,
        }
    )


def write_trace(path: Path, header: ReportHeader, trace: TrainingTrace) -> Path:
    return write_csv(path, header, trace_table(trace))


def bic_table(scan: BicScan) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": scan.k_values,
            "n_params": scan.n_params,
            "log_likelihood": scan.log_likelihoods,
            "bic": scan.scores,
            "status": ["failed" if k in scan.failures else "ok" for k in scan.k_values],
        }
    )


def write_bic(directory: Path, header: ReportHeader, scan: BicScan, features: str) -> List[Path]:
    """Write bic.txt and bic.csv."""
    directory = Path(directory)
    rows = [
        {
            "k": k,
            "n_params": n_params,
            "log_likelihood": _fmt(ll, ".4f"),
            "score": _fmt(score, ".4f"),
            "marker": "*" if k == scan.best_k else ("failed" if k in scan.failures else ""),
        }
        for k, n_params, ll, score in zip(
            scan.k_values, scan.n_params, scan.log_likelihoods, scan.scores
        )
    ]
    text = _get_renderer().render(
        "bic.txt.j2",
        {"header": header.render(), "features": features, "rows": rows, "best_k": scan.best_k},
    )
    return [
        write_text(directory / "bic.txt", text),
        write_csv(directory / "bic.csv", header, bic_table(scan)),
    ]


def belief_table(event: EventSequence, trajectory: BeliefTrajectory) -> pd.DataFrame:
    """Per-frame h_k columns, 1-based dominant state and row sum."""
    table = pd.DataFrame({"frame": np.arange(trajectory.T), "timestamp_ms": event.timestamps})
    for k in range(trajectory.K):
        table[f"h_{k + 1}"] = trajectory.h[:, k]
    table["dominant_state"] = trajectory.dominant_state + 1
    table["row_sum"] = trajectory.h.sum(axis=1)
    table.insert(0, "event_id", event.event_id)
    return table


def prediction_table(
    event: EventSequence,
    trajectory: BeliefTrajectory,
    distribution: PredictiveDistribution,
    reference: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """Point estimate plus the full per-component mixture of every frame."""
    table = pd.DataFrame({"frame": np.arange(distribution.T), "timestamp_ms": event.timestamps})
    point = distribution.point_estimate
    for j, name in enumerate(distribution.output_names):
        if reference is not None:
            table[f"reference_{name}"] = reference[:, j]
        table[f"predicted_{name}"] = point[:, j]
    for k in range(trajectory.K):
        table[f"h_{k + 1}"] = distribution.weights[:, k]
        for j, name in enumerate(distribution.output_names):
            table[f"mean_{k + 1}_{name}"] = distribution.means[:, k, j]
            table[f"var_{k + 1}_{name}"] = distribution.covariances[k, j, j]
    table.insert(0, "event_id", event.event_id)
    return table


def _score_rows(reports: Sequence[EvaluationReport], label_of) -> List[Dict[str, Any]]:
    return [
        {
            "label": label_of(report),
            "mean_skill": _fmt(report.mean_skill),
            "mean_rmse": _fmt(report.mean_rmse),
            "n_scored": len(report.per_event),
            "n_excluded": len(report.excluded),
            "status": "failed: " + report.error.splitlines()[0] if report.failed else "ok",
        }
        for report in reports
    ]


def summary_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "features": report.descriptor.features_label,
                "approach": report.descriptor.approach,
                "init_method": report.descriptor.init_method,
                "gmm_source": report.descriptor.gmm_source or "",
                "k": report.descriptor.k,
                "mean_skill": report.mean_skill,
                "mean_rmse": report.mean_rmse,
                "n_scored": len(report.per_event),
                "n_excluded": len(report.excluded),
                "error": report.error or "",
            }
            for report in reports
        ]
    )


def per_event_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        for score in report.per_event:
            rows.append(
                {
                    "features": report.descriptor.features_label,
                    "approach": report.descriptor.approach,
                    "init_method": report.descriptor.init_method,
                    "event_id": score.event_id,
                    "mse": score.mse,
                    "mse_ref": score.mse_ref,
                    "skill": score.skill,
                    "rmse": score.rmse,
                }
            )
    columns = ["features", "approach", "init_method", "event_id", "mse", "mse_ref", "skill", "rmse"]
    return pd.DataFrame(rows, columns=columns)


def write_scores(
    directory: Path,
    stem: str,
    header: ReportHeader,
    reports: Sequence[EvaluationReport],
    title: str,
    by: str,
) -> List[Path]:
    """Write <stem>.txt, <stem>.csv and <stem>_events.csv.

    Args:
        by: "features" labels rows by input set, "approach" by approach and init
    """
    directory = Path(directory)
    if by == "features":
        heading, label_of = "input variables", lambda r: r.descriptor.features_label
    else:
        heading, label_of = "approach (initialization)", lambda r: r.descriptor.label
    notes = [
        f"excluded {event_id}: {reason}"
        for report in reports
        for event_id, reason in report.excluded.items()
    ]
    text = _get_renderer().render(
        "scores.txt.j2",
        {
            "header": header.render(),
            "title": title,
            "label_heading": heading,
            "rows": _score_rows(reports, label_of),
            "notes": sorted(set(notes)),
        },
    )
    return [
        write_text(directory / f"{stem}.txt", text),
        write_csv(directory / f"{stem}.csv", header, summary_table(reports)),
        write_csv(directory / f"{stem}_events.csv", header, per_event_table(reports)),
    ]


def state_range_table(ranges: Sequence[StateRange], names: Sequence[str]) -> pd.DataFrame:
    rows = []
    for state_range in ranges:
        row: Dict[str, Any] = {
            "state": state_range.state + 1,
            "n_frames": state_range.n_frames,
            "status": "visited" if state_range.visited else "unvisited",
        }
        for name in names:
            row[f"{name}_min"] = state_range.minimum.get(name, np.nan)
            row[f"{name}_max"] = state_range.maximum.get(name, np.nan)
        rows.append(row)
    return pd.DataFrame(rows)


def write_state_ranges(
    directory: Path,
    header: ReportHeader,
    ranges: Sequence[StateRange],
    names: Sequence[str],
    model_label: str,
) -> List[Path]:
    """Write state_ranges.txt and state_ranges.csv."""
    directory = Path(directory)
    states = []
    for state_range in ranges:
        if state_range.visited:
            cells = {
                name: f"[{state_range.minimum[name]:.2f}, {state_range.maximum[name]:.2f}]"
                for name in names
            }
            title = f"state {state_range.state + 1} (n={state_range.n_frames})"
        else:
            cells = {name: "unvisited" for name in names}
            title = f"state {state_range.state + 1}"
        states.append({"title": title, "cells": cells})
    text = _get_renderer().render(
        "state_ranges.txt.j2",
        {"header": header.render(), "model_label": model_label, "names": list(names), "states": states},
    )
    return [
        write_text(directory / "state_ranges.txt", text),
        write_csv(directory / "state_ranges.csv", header, state_range_table(ranges, names)),
    ]
