"""
Seeded synthetic hourly weather in the ingestion schema, for smoke runs and tests.
"""

import logging

import numpy as np
import pandas as pd

from .exceptions import InvalidParameterError
from .storage import write_csv
from .timeseries_data import HOUR, INPUT_COLUMNS, TIMESTAMP_COLUMN

logger = logging.getLogger(__name__)

DEFAULT_START = "2023-01-01T00:00:00"


def _ar1(rng, n, phi, sigma):
    shocks = rng.normal(0.0, sigma, size=n)
    values = np.empty(n)
    values[0] = shocks[0]
    for t in range(1, n):
        values[t] = phi * values[t - 1] + shocks[t]
    return values


def synthesize(hours=2000, seed=42, start=DEFAULT_START) -> pd.DataFrame:
    """
    Diurnal and seasonal temperature cycle with a slow trend and AR(1) noise.

    Humidity and sea-level pressure move against temperature; rain bursts raise humidity
    and cloud cover; solar radiation follows the daylight hours and drops under cloud.
    """
    if hours < 2:
        raise InvalidParameterError(f"Need at least 2 hours, got {hours}")
    rng = np.random.default_rng(seed)
    t = np.arange(hours, dtype=float)
    hour_of_day = t % 24
    daily = np.sin(2.0 * np.pi * (hour_of_day - 9.0) / 24.0)
    seasonal = np.sin(2.0 * np.pi * t / (24.0 * 365.0))

    raining = rng.random(hours) < 0.06
    precip = np.where(raining, rng.exponential(1.5, size=hours), 0.0)
    cloudcover = np.clip(35.0 + 45.0 * raining + _ar1(rng, hours, 0.9, 6.0), 0.0, 100.0)
    temp = 16.0 + 6.0 * daily + 8.0 * seasonal + 0.0015 * t - 1.5 * raining + _ar1(rng, hours, 0.85, 0.4)
    humidity = np.clip(72.0 - 2.2 * (temp - 16.0) + 12.0 * raining + rng.normal(0.0, 1.5, size=hours), 5.0, 100.0)
    sealevelpressure = 1013.0 - 0.7 * (temp - 16.0) + _ar1(rng, hours, 0.95, 0.3)
    windspeed = np.abs(9.0 + 2.0 * raining + rng.normal(0.0, 3.0, size=hours))
    solarradiation = np.maximum(0.0, 750.0 * daily) * (1.0 - cloudcover / 200.0)

    timestamps = pd.date_range(start=start, periods=hours, freq=HOUR)
    frame = pd.DataFrame(
        {
            TIMESTAMP_COLUMN: timestamps.strftime("%Y-%m-%dT%H:%M:%S"),
            "temp": temp,
            "humidity": humidity,
            "precip": precip,
            "windspeed": windspeed,
            "sealevelpressure": sealevelpressure,
            "cloudcover": cloudcover,
            "solarradiation": solarradiation,
        }
    )
    return frame[list(INPUT_COLUMNS)].round(3)


def write_synthetic_dataset(path, hours=2000, seed=42, start=DEFAULT_START):
    frame = synthesize(hours, seed, start)
    write_csv(path, frame)
    logger.info("Wrote %s synthetic hours to %s", hours, path)
    return path
