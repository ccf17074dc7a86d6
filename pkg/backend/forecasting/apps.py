import logging
import os
from pathlib import Path

from django.apps import AppConfig
from django.conf import settings

logger = logging.getLogger(__name__)


class ForecastingConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "forecasting"

    def ready(self):
        super().ready()
        from . import families  # noqa: F401  registers every estimator kind

        self._log_startup_diagnostics()

    def _log_startup_diagnostics(self):
        self._check_numeric_stack()
        self._check_output_dir()
        self._check_dataset()

    def _check_numeric_stack(self):
        try:
            import joblib
            import numpy
            import pandas

            logger.debug(
                "Startup check: numpy %s, pandas %s, joblib %s.",
                numpy.__version__,
                pandas.__version__,
                joblib.__version__,
            )
        except ImportError as exc:
            logger.error("Startup check: numerical stack incomplete: %s", exc)

    def _check_output_dir(self):
        output_dir = Path(getattr(settings, "FORECAST_OUTPUT_DIR", ""))
        probe = output_dir
        while not probe.exists() and probe != probe.parent:
            probe = probe.parent
        if not os.access(probe, os.W_OK):
            logger.warning("Startup check: output directory %s is not writable.", output_dir)

    def _check_dataset(self):
        dataset = getattr(settings, "FORECAST_DATASET", "")
        if dataset and not Path(dataset).is_file():
            logger.warning("Startup check: FORECAST_DATASET %s does not exist.", dataset)
