"""
Report tables, grid-search score tables, prediction files and plot data.

CSV files keep full precision; the text table rounds half-up to three decimals.
"""

import json
import math
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pandas as pd

from .evaluation import METRIC_NAMES

REPORT_COLUMNS = ("model", "split", "target") + METRIC_NAMES
SCORE_COLUMNS = ("family", "config_json", "fold", "rmse_avg")
FAILED = "failed"
THOUSANDTH = Decimal("0.001")


def round_display(value):
    """Three-decimal half-up rounding of a float, ignoring binary representation noise past 12 digits."""
    return Decimal(f"{value:.12g}").quantize(THOUSANDTH, rounding=ROUND_HALF_UP)


def format_metric(name, value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    if math.isinf(value):
        return "inf"
    text = str(round_display(value))
    return f"{text}%" if name == "mape" else text


def report_rows(reports, failures=None):
    rows = []
    for report in reports:
        rows.extend(report.rows())
    for family, code in (failures or {}).items():
        rows.append({"model": family, "split": FAILED, "target": code, **{name: math.nan for name in METRIC_NAMES}})
    return rows


def report_frame(reports, failures=None):
    return pd.DataFrame(report_rows(reports, failures), columns=list(REPORT_COLUMNS))


def render_table(frame: pd.DataFrame):
    """Aligned plain-text table: text columns left-aligned, metric columns right-aligned."""
    header = list(REPORT_COLUMNS)
    body = []
    for record in frame.to_dict("records"):
        cells = [str(record["model"]), str(record["split"]), str(record["target"])]
        cells += [format_metric(name, record[name]) for name in METRIC_NAMES]
        body.append(cells)
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def line(cells):
        text = [cell.ljust(width) for cell, width in zip(cells[:3], widths[:3])]
        text += [cell.rjust(width) for cell, width in zip(cells[3:], widths[3:])]
        return "  ".join(text).rstrip()

    separator = "  ".join("-" * width for width in widths)
    return "\n".join([line(header), separator] + [line(row) for row in body]) + "\n"


def score_frame(result):
    return pd.DataFrame(
        [
            {"family": row.family, "config_json": json.dumps(row.config, sort_keys=True), "fold": row.fold, "rmse_avg": row.rmse_avg}
            for row in result.table
        ],
        columns=list(SCORE_COLUMNS),
    )


def predictions_frame(target_names, splits):
    """
    One row per evaluated hour.

    `splits` maps a split name to (timestamps, actual, predicted) with one column per target.
    """
    parts = []
    for split, (timestamps, actual, predicted) in splits.items():
        data = {"timestamp": pd.DatetimeIndex(timestamps).strftime("%Y-%m-%dT%H:%M:%S"), "split": split}
        for j, target in enumerate(target_names):
            data[f"{target}_actual"] = np.asarray(actual)[:, j]
            data[f"{target}_pred"] = np.asarray(predicted)[:, j]
        parts.append(pd.DataFrame(data))
    return pd.concat(parts, ignore_index=True)


def prediction_targets(frame: pd.DataFrame):
    return [column[: -len("_pred")] for column in frame.columns if column.endswith("_pred")]


def plot_frames(family, frame: pd.DataFrame, split="test"):
    """Time-series and 1:1 scatter tables per target for one split, keyed by file name."""
    rows = frame[frame["split"] == split]
    outputs = {}
    for target in prediction_targets(frame):
        series = pd.DataFrame(
            {"timestamp": rows["timestamp"], "actual": rows[f"{target}_actual"], "predicted": rows[f"{target}_pred"]}
        )
        outputs[f"{family}_{split}_{target}_series.csv"] = series.reset_index(drop=True)
        outputs[f"{family}_{split}_{target}_scatter.csv"] = series[["actual", "predicted"]].reset_index(drop=True)
    return outputs


def histogram_frame(edges, counts):
    return pd.DataFrame({"bin_start": edges[:-1], "bin_end": edges[1:], "count": counts})


def correlation_frame(correlation):
    return pd.DataFrame(correlation.values, columns=list(correlation.names))


def describe_frame(series):
    stats = series.frame.agg(["count", "mean", "std", "min", "max"]).T
    stats.index.name = "variable"
    return stats.reset_index()
