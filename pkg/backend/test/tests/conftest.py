import pytest

from forecasting.synthetic import synthesize, write_synthetic_dataset
from forecasting.timeseries_data import parse_and_sort, prepare_series


def make_row(hour, **values):
    """Raw CSV row at 2024-01-01 + `hour` hours; unspecified variables get plausible constants."""
    row = {
        "datetime": f"2024-01-{1 + hour // 24:02d}T{hour % 24:02d}:00:00",
        "temp": "20.0",
        "humidity": "60.0",
        "precip": "0.0",
        "windspeed": "10.0",
        "sealevelpressure": "1013.0",
        "cloudcover": "40.0",
        "solarradiation": "100.0",
    }
    row.update({name: str(value) for name, value in values.items()})
    return row


@pytest.fixture
def row_factory():
    return make_row


@pytest.fixture
def series_of():
    """Parsed series of consecutive hours with the given temperatures and optional extra columns."""

    def build(temp, **columns):
        rows = [
            make_row(hour, temp=value, **{name: values[hour] for name, values in columns.items()})
            for hour, value in enumerate(temp)
        ]
        return parse_and_sort(rows)

    return build


@pytest.fixture(scope="session")
def synthetic_frame():
    return synthesize(hours=400, seed=7)


@pytest.fixture
def synthetic_series(synthetic_frame):
    series, _ = prepare_series(synthetic_frame.astype(str).to_dict("records"))
    return series


@pytest.fixture(scope="session")
def dataset_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "weather.csv"
    return write_synthetic_dataset(path, hours=2000, seed=11)
