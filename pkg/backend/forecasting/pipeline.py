"""
End-to-end workflows behind the management commands: exploratory analysis, the
seven-family benchmark, artifact-based prediction and plot-data export.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .artifacts import ModelArtifact, load_artifact, save_artifact
from .evaluation import build_report, seasonal_naive
from .exceptions import ForecastError, InsufficientHistoryError, MissingRunOutputError
from .families import get_family
from .features import FeatureMatrix, assemble_matrix, histogram, pearson_correlation
from .model_core import SEQUENCE, final_fit_and_evaluate, grid_search
from .reporting import (
    correlation_frame,
    describe_frame,
    histogram_frame,
    plot_frames,
    predictions_frame,
    render_table,
    report_frame,
    score_frame,
)
from .sequence_models import SequenceBatch, build_windows
from .storage import RunStorage, atomic_write_text, read_csv, write_csv
from .timeseries_data import VARIABLES, chronological_split, load_series

logger = logging.getLogger(__name__)

BASELINE = "seasonal_naive"
SEASON = 24
HISTOGRAM_TARGETS = ("temp", "humidity")


def analyze(config, bin_count=30):
    """Histograms of the targets, the Pearson correlation matrix and per-variable statistics."""
    series, repaired = load_series(config.require_dataset(), config.bounds)
    storage = RunStorage(config.output_dir).ensure()
    written = []

    for target in HISTOGRAM_TARGETS:
        edges, counts = histogram(series.column(target), bin_count)
        written.append(write_csv(storage.analysis / f"{target}_histogram.csv", histogram_frame(edges, counts)))

    correlation = pearson_correlation(series.frame[list(VARIABLES)].to_numpy(dtype=float), VARIABLES)
    written.append(write_csv(storage.analysis / "correlation.csv", correlation_frame(correlation)))
    written.append(write_csv(storage.analysis / "describe.csv", describe_frame(series)))
    written.append(
        write_csv(storage.analysis / "summary.csv", pd.DataFrame([{"rows": len(series), "repaired_cells": repaired}]))
    )
    logger.info("Wrote %s analysis files to %s", len(written), storage.analysis)
    return written


@dataclass
class SplitData:
    X: np.ndarray
    Y: np.ndarray
    timestamps: pd.DatetimeIndex


@dataclass
class BenchmarkInputs:
    series: object
    target_names: tuple
    tabular: Dict[str, SplitData] = field(default_factory=dict)
    sequence: Dict[str, SplitData] = field(default_factory=dict)

    def for_kind(self, input_kind):
        return self.sequence if input_kind == SEQUENCE else self.tabular


def _split_data(part):
    if isinstance(part, FeatureMatrix):
        return SplitData(part.X, part.Y, part.row_timestamps)
    return SplitData(part.X, part.Y, part.origins)


def prepare_inputs(series, config, with_sequences=True) -> BenchmarkInputs:
    """
    Tabular feature rows and (optionally) sequence windows aligned on the same target hours.

    Both views are split at the same chronological cut, so every family is scored on identical rows.
    """
    matrix = assemble_matrix(series, config.feature_spec)
    windows: Optional[SequenceBatch] = None
    if with_sequences:
        windows = build_windows(series, config.sequence_window, targets=matrix.target_names)
        common = matrix.row_timestamps.intersection(windows.origins)
        if common.empty:
            raise InsufficientHistoryError("No target hour has both complete features and a full window")
        matrix = matrix[np.flatnonzero(matrix.row_timestamps.isin(common))]
        windows = windows.restrict(common)

    inputs = BenchmarkInputs(series, matrix.target_names)
    train, test = chronological_split(matrix, config.split_ratio)
    inputs.tabular = {"train": _split_data(train), "test": _split_data(test)}
    if windows is not None:
        train, test = chronological_split(windows, config.split_ratio)
        inputs.sequence = {"train": _split_data(train), "test": _split_data(test)}
    logger.info("Evaluation rows: %s train, %s test", len(inputs.tabular["train"].Y), len(inputs.tabular["test"].Y))
    return inputs


def baseline_report(inputs: BenchmarkInputs):
    """Seasonal-naive forecast (same hour one day earlier) on the shared evaluation rows."""
    timestamps = inputs.series.timestamps
    parts = {}
    for split in ("train", "test"):
        data = inputs.tabular[split]
        rows = timestamps.get_indexer(data.timestamps)
        predicted = np.column_stack(
            [seasonal_naive(inputs.series.column(target), rows, SEASON) for target in inputs.target_names]
        )
        parts[split] = (data.Y, predicted)
    return build_report(BASELINE, inputs.target_names, *parts["train"], *parts["test"])


def run_family(name, config, inputs: BenchmarkInputs, storage: RunStorage):
    family = get_family(name)
    data = inputs.for_kind(family.input_kind)
    train, test = data["train"], data["test"]

    result = grid_search(family, config.grid_for(name), train.X, train.Y, config.cv, config.seeds, n_jobs=config.jobs)
    write_csv(storage.scores_csv(name), score_frame(result))

    fit = final_fit_and_evaluate(
        family, result.best_config, (train.X, train.Y), (test.X, test.Y), inputs.target_names, config.seeds, result.best_index
    )
    frame = predictions_frame(
        inputs.target_names,
        {
            "train": (train.timestamps, train.Y, fit.train_predictions),
            "test": (test.timestamps, test.Y, fit.test_predictions),
        },
    )
    write_csv(storage.predictions_csv(name), frame)

    is_sequence = family.input_kind == SEQUENCE
    artifact = ModelArtifact(
        family=name,
        model=fit.model,
        base_seed=config.base_seed,
        best_config=result.best_config,
        target_names=inputs.target_names,
        bounds=config.bounds,
        feature_spec=None if is_sequence else config.feature_spec,
        window=config.sequence_window if is_sequence else None,
    )
    save_artifact(artifact, storage.artifact_path(name))
    return fit.report


def run_benchmark(config):
    """
    Grid search, final fit and evaluation for every requested family.

    A failing family is logged and reported as a failed row; the remaining families still run.
    """
    series, _ = load_series(config.require_dataset(), config.bounds)
    storage = RunStorage(config.output_dir).ensure()
    with_sequences = any(get_family(name).input_kind == SEQUENCE for name in config.models)
    inputs = prepare_inputs(series, config, with_sequences)

    reports: List = []
    failures: Dict[str, str] = {}
    for name in config.models:
        logger.info("Benchmarking %s", name)
        try:
            reports.append(run_family(name, config, inputs, storage))
        except Exception as exc:
            logger.exception("Family %s failed", name)
            failures[name] = exc.code if isinstance(exc, ForecastError) else type(exc).__name__

    try:
        reports.append(baseline_report(inputs))
    except InsufficientHistoryError as exc:
        logger.warning("Skipping seasonal-naive baseline: %s", exc)

    frame = report_frame(reports, failures)
    write_csv(storage.report_csv, frame)
    atomic_write_text(storage.report_text, render_table(frame))
    logger.info("Benchmark report written to %s", storage.report_csv)
    return frame


def predict(artifact_path, dataset_path, output_path):
    """Apply a saved model to every row of a dataset that has enough history."""
    artifact = load_artifact(artifact_path)
    series, _ = load_series(dataset_path, artifact.bounds)
    if artifact.feature_spec is not None:
        matrix = assemble_matrix(series, artifact.feature_spec)
        X, timestamps = matrix.X, matrix.row_timestamps
    else:
        windows = build_windows(series, artifact.window, targets=artifact.target_names)
        X, timestamps = windows.X, windows.origins

    predicted = artifact.model.predict(X)
    frame = pd.DataFrame({"timestamp": timestamps.strftime("%Y-%m-%dT%H:%M:%S")})
    for j, target in enumerate(artifact.target_names):
        frame[f"{target}_pred"] = predicted[:, j]
    write_csv(output_path, frame)
    logger.info("Wrote %s %s predictions to %s", len(frame), artifact.family, output_path)
    return frame


def write_plotdata(run_dir, family=None, split="test"):
    """Series and scatter tables for one family, or for every family with a predictions file."""
    storage = RunStorage(run_dir)
    if family:
        families = [family]
    else:
        families = sorted(path.name[: -len("_predictions.csv")] for path in storage.reports.glob("*_predictions.csv"))
        if not families:
            raise MissingRunOutputError(f"No prediction files under {storage.reports}; run the benchmark first")

    written = []
    for name in families:
        frame = read_csv(storage.require(storage.predictions_csv(name)))
        for filename, table in plot_frames(name, frame, split).items():
            written.append(write_csv(storage.plotdata / filename, table))
    logger.info("Wrote %s plot-data files to %s", len(written), storage.plotdata)
    return written
