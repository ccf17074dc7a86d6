"""
Run configuration: flat KEY=VALUE layers merged into one validated RunConfig.

Layers, lowest precedence first: settings defaults, the config file (.env format),
--set KEY=VALUE overrides, dedicated command-line flags.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import dotenv_values
from django.conf import settings
from rest_framework import serializers

from .exceptions import InvalidParameterError, UnknownFamilyError
from .families import FAMILIES, PARAMS_CLASSES
from .features import FeatureSpec
from .model_core import SEQUENCE, CvScheme, HyperGrid, SeedPlan
from .timeseries_data import VARIABLES, PhysicalBounds

logger = logging.getLogger(__name__)

SCALAR_KEYS = {
    "DATASET": "dataset",
    "OUTPUT_DIR": "output_dir",
    "SPLIT_RATIO": "split_ratio",
    "CV_FOLDS": "cv_folds",
    "BASE_SEED": "base_seed",
    "JOBS": "jobs",
    "SEQUENCE_WINDOW": "sequence_window",
}
LIST_KEYS = {
    "MODELS": "models",
    "LAG_HOURS": "lag_hours",
    "ROLL_WINDOWS": "roll_windows",
    "COVARIATES": "covariates",
}
BOUNDS_PREFIX = "BOUNDS_"
GRID_PREFIX = "GRID_"

FLAG_KEYS = {
    "data": "DATASET",
    "models": "MODELS",
    "seed": "BASE_SEED",
    "out": "OUTPUT_DIR",
    "jobs": "JOBS",
}


def default_values():
    return {
        "DATASET": settings.FORECAST_DATASET,
        "OUTPUT_DIR": settings.FORECAST_OUTPUT_DIR,
        "MODELS": settings.FORECAST_MODELS,
        "SPLIT_RATIO": str(settings.FORECAST_SPLIT_RATIO),
        "CV_FOLDS": str(settings.FORECAST_CV_FOLDS),
        "BASE_SEED": str(settings.FORECAST_BASE_SEED),
        "JOBS": str(settings.FORECAST_JOBS),
        "SEQUENCE_WINDOW": str(settings.FORECAST_SEQUENCE_WINDOW),
    }


def _split_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def _grid_key(key):
    """GRID_<FAMILY>_<PARAM> -> (family, param); family names may contain underscores."""
    rest = key[len(GRID_PREFIX) :]
    for name in sorted(FAMILIES, key=len, reverse=True):
        prefix = name.upper() + "_"
        if rest.startswith(prefix) and len(rest) > len(prefix):
            param = rest[len(prefix) :].lower()
            fields = {field.lower(): field for field in PARAMS_CLASSES[name].__dataclass_fields__}
            return name, fields.get(param, param)
    raise UnknownFamilyError(f"Unknown model family in {key!r}; valid names are: {', '.join(FAMILIES)}")


def parse_flat(values: Dict[str, str]) -> Dict[str, Any]:
    """Turn flat string values into the nested structure RunConfigSerializer validates."""
    data = {"bounds": {}, "grids": {}}
    for key, value in values.items():
        value = "" if value is None else str(value).strip()
        if key in SCALAR_KEYS:
            data[SCALAR_KEYS[key]] = value
        elif key in LIST_KEYS:
            data[LIST_KEYS[key]] = _split_list(value)
        elif key.startswith(BOUNDS_PREFIX):
            data["bounds"][key[len(BOUNDS_PREFIX) :].lower()] = _split_list(value)
        elif key.startswith(GRID_PREFIX):
            family, param = _grid_key(key)
            try:
                candidates = json.loads(value)
            except json.JSONDecodeError as exc:
                raise InvalidParameterError(f"{key} must be a JSON array: {exc}")
            data["grids"].setdefault(family, {})[param] = candidates
        else:
            raise InvalidParameterError(f"Unknown configuration key {key!r}")
    if "models" in data:
        data["models"] = [name.lower() for name in data["models"]]
    return data


class RunConfigSerializer(serializers.Serializer):
    dataset = serializers.CharField(required=False, allow_blank=True, default="")
    output_dir = serializers.CharField()
    models = serializers.ListField(child=serializers.CharField(), min_length=1)
    split_ratio = serializers.FloatField()
    cv_folds = serializers.IntegerField(min_value=2)
    base_seed = serializers.IntegerField(min_value=0)
    jobs = serializers.IntegerField()
    sequence_window = serializers.IntegerField(min_value=2)
    lag_hours = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1, required=False)
    roll_windows = serializers.ListField(child=serializers.IntegerField(min_value=2), min_length=1, required=False)
    covariates = serializers.ListField(child=serializers.ChoiceField(choices=VARIABLES), required=False)
    bounds = serializers.DictField(child=serializers.ListField(child=serializers.CharField()), required=False)
    grids = serializers.DictField(child=serializers.DictField(), required=False)

    def validate_models(self, value):
        unknown = [name for name in value if name not in FAMILIES]
        if unknown:
            raise serializers.ValidationError(
                f"Unknown model family {', '.join(unknown)}; valid names are: {', '.join(FAMILIES)}"
            )
        return list(dict.fromkeys(value))

    def validate_split_ratio(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("Split ratio must lie strictly between 0 and 1")
        return value

    def validate_jobs(self, value):
        if value == 0:
            raise serializers.ValidationError("jobs must be a positive count or a negative joblib value")
        return value

    def validate_bounds(self, value):
        parsed = {}
        for variable, pair in value.items():
            if variable not in VARIABLES:
                raise serializers.ValidationError(f"Unknown variable {variable!r}; expected one of {', '.join(VARIABLES)}")
            if len(pair) != 2:
                raise serializers.ValidationError(f"Bounds for {variable} need exactly two values: lower,upper")
            try:
                parsed[variable] = (float(pair[0]), float(pair[1]))
            except ValueError:
                raise serializers.ValidationError(f"Bounds for {variable} must be numbers, got {pair}")
        return parsed

    def validate_grids(self, value):
        for family, params in value.items():
            known = {f for f in PARAMS_CLASSES[family].__dataclass_fields__}
            for param, candidates in params.items():
                if param not in known:
                    raise serializers.ValidationError(
                        f"{family} has no parameter {param!r}; expected one of {', '.join(sorted(known))}"
                    )
                if FAMILIES[family].input_kind == SEQUENCE and param == "window":
                    raise serializers.ValidationError("Sequence window is set with SEQUENCE_WINDOW, not a grid")
                if not isinstance(candidates, list) or not candidates:
                    raise serializers.ValidationError(f"Grid values for {family}.{param} must be a non-empty JSON array")
        return value


@dataclass(frozen=True)
class RunConfig:
    dataset: Optional[Path]
    output_dir: Path
    models: Tuple[str, ...]
    split_ratio: float = 0.8
    cv_folds: int = 5
    base_seed: int = 42
    jobs: int = 1
    sequence_window: int = 24
    feature_spec: FeatureSpec = field(default_factory=FeatureSpec)
    bounds: PhysicalBounds = field(default_factory=PhysicalBounds)
    grids: Dict[str, Dict[str, List[Any]]] = field(default_factory=dict)

    @property
    def cv(self):
        return CvScheme(self.cv_folds)

    @property
    def seeds(self):
        return SeedPlan(self.base_seed)

    def grid_for(self, name) -> HyperGrid:
        family = FAMILIES[name]
        params = dict(family.default_grid)
        params.update(self.grids.get(name, {}))
        if family.input_kind == SEQUENCE:
            params["window"] = [self.sequence_window]
        return HyperGrid(params)

    def require_dataset(self):
        if self.dataset is None:
            raise InvalidParameterError("No dataset configured; pass --data or set DATASET")
        return self.dataset


def _raise_validation(errors):
    if "models" in errors:
        raise UnknownFamilyError("; ".join(str(message) for message in errors["models"]))
    raise InvalidParameterError(json.dumps(errors, sort_keys=True, default=str))


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        _raise_validation(serializer.errors)
    valid = serializer.validated_data

    spec_overrides = {name: tuple(valid[name]) for name in ("lag_hours", "roll_windows", "covariates") if name in valid}
    return RunConfig(
        dataset=Path(valid["dataset"]) if valid["dataset"] else None,
        output_dir=Path(valid["output_dir"]),
        models=tuple(valid["models"]),
        split_ratio=valid["split_ratio"],
        cv_folds=valid["cv_folds"],
        base_seed=valid["base_seed"],
        jobs=valid["jobs"],
        sequence_window=valid["sequence_window"],
        feature_spec=FeatureSpec(**spec_overrides),
        bounds=PhysicalBounds().with_overrides(valid.get("bounds", {})),
        grids=valid.get("grids", {}),
    )


def load_run_config(config_path=None, overrides=(), **flags) -> RunConfig:
    values = default_values()
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise InvalidParameterError(f"Config file not found: {path}")
        values.update({key.upper(): value for key, value in dotenv_values(path).items()})
        logger.info("Loaded configuration from %s", path)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InvalidParameterError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip().upper()] = value
    for name, value in flags.items():
        if value is not None:
            values[FLAG_KEYS[name]] = str(value)
    return build_run_config(parse_flat(values))
