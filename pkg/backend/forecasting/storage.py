"""
Run output directory layout and atomic file writes.

Every file is written to a temporary sibling first and moved into place, so an
interrupted run never leaves a partial report behind.
"""

import logging
import os
import tempfile
from pathlib import Path

import pandas as pd

from .exceptions import MissingRunOutputError

logger = logging.getLogger(__name__)

SUBDIRECTORIES = ("reports", "artifacts", "plotdata", "scores", "analysis")


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %s", path)
    return path


def write_csv(path, frame: pd.DataFrame):
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def read_csv(path):
    path = Path(path)
    if not path.is_file():
        raise MissingRunOutputError(f"Run output not found: {path}")
    return pd.read_csv(path, float_precision="round_trip")


class RunStorage:
    """Fixed layout under one run directory: reports/, artifacts/, plotdata/, scores/ and analysis/."""

    def __init__(self, root):
        self.root = Path(root)

    @property
    def reports(self):
        return self.root / "reports"

    @property
    def artifacts(self):
        return self.root / "artifacts"

    @property
    def plotdata(self):
        return self.root / "plotdata"

    @property
    def scores(self):
        return self.root / "scores"

    @property
    def analysis(self):
        return self.root / "analysis"

    def ensure(self):
        for name in SUBDIRECTORIES:
            (self.root / name).mkdir(parents=True, exist_ok=True)
        return self

    @property
    def report_csv(self):
        return self.reports / "report.csv"

    @property
    def report_text(self):
        return self.reports / "report.txt"

    def predictions_csv(self, family):
        return self.reports / f"{family}_predictions.csv"

    def scores_csv(self, family):
        return self.scores / f"{family}_scores.csv"

    def artifact_path(self, family):
        return self.artifacts / f"{family}.json"

    def require(self, path):
        path = Path(path)
        if not path.is_file():
            raise MissingRunOutputError(f"Run output not found: {path}; run the benchmark first")
        return path
