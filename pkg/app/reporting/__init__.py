"""Text and CSV outputs of the command-line surface."""

from .models import ReportError, ReportHeader, ReportTemplateError
from .templates import TemplateRenderer
from .writers import (
    belief_table,
    bic_table,
    per_event_table,
    prediction_table,
    state_range_table,
    summary_table,
    trace_table,
    write_bic,
    write_csv,
    write_scores,
    write_state_ranges,
    write_text,
    write_trace,
)

__all__ = [
    "ReportError",
    "ReportHeader",
    "ReportTemplateError",
    "TemplateRenderer",
    "belief_table",
    "bic_table",
    "per_event_table",
    "prediction_table",
    "state_range_table",
    "summary_table",
    "trace_table",
    "write_bic",
    "write_csv",
    "write_scores",
    "write_state_ranges",
    "write_text",
    "write_trace",
]
