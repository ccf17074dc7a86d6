"""
Django settings for the meteocast forecasting benchmark.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# No HTTP surface is served; the key only satisfies Django's startup checks.
SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "django-insecure-dev-key-change-in-production")

DEBUG = os.getenv("DEBUG", "True") == "True"

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    # Third party
    "rest_framework",
    # Local apps
    "forecasting",
]

# Benchmarks keep all state on disk under the run output directory.
DATABASES = {}

TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = False

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Forecasting run defaults. Every value can be overridden by a config file, --set KEY=VALUE or a CLI flag.
FORECAST_DATASET = os.getenv("FORECAST_DATASET", "")
FORECAST_OUTPUT_DIR = os.getenv("FORECAST_OUTPUT_DIR", str(BASE_DIR / "runs" / "latest"))
FORECAST_MODELS = os.getenv("FORECAST_MODELS", "svr,mlp,rf,dt,lstm,cnn_lstm,xgb")
FORECAST_SPLIT_RATIO = float(os.getenv("FORECAST_SPLIT_RATIO", "0.8"))
FORECAST_CV_FOLDS = int(os.getenv("FORECAST_CV_FOLDS", "5"))
FORECAST_BASE_SEED = int(os.getenv("FORECAST_BASE_SEED", "42"))
FORECAST_JOBS = int(os.getenv("FORECAST_JOBS", "1"))
FORECAST_SEQUENCE_WINDOW = int(os.getenv("FORECAST_SEQUENCE_WINDOW", "24"))
FORECAST_LOG_LEVEL = os.getenv("FORECAST_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "forecasting": {
            "handlers": ["console"],
            "level": FORECAST_LOG_LEVEL,
            "propagate": True,
        },
    },
}
