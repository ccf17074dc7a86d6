"""
The seven benchmarked model families: their input kind, default search grids and builders.
"""

from dataclasses import fields

from .exceptions import InvalidParameterError, UnknownFamilyError
from .model_core import SEQUENCE, TABULAR, ModelFamily, MultiOutputRegressor, StandardizedRegressor
from .sequence_models import CnnLstmParams, CnnLstmRegressor, LstmParams, LstmRegressor
from .shallow_models import MlpModel, MlpParams, SvrModel, SvrParams
from .tree_models import DecisionTreeRegressor, DtParams, GbtParams, GradientBoostedRegressor, RandomForestRegressor, RfParams


def make_params(params_class, config):
    known = {f.name for f in fields(params_class)}
    unknown = sorted(set(config) - known)
    if unknown:
        raise InvalidParameterError(
            f"Unknown {params_class.__name__} parameters: {', '.join(unknown)}; expected some of {', '.join(sorted(known))}"
        )
    return params_class(**config)


def build_svr(config, seed):
    params = make_params(SvrParams, config)
    return StandardizedRegressor(MultiOutputRegressor(lambda target_seed: SvrModel(params, target_seed), seed))


def build_mlp(config, seed):
    return StandardizedRegressor(MlpModel(make_params(MlpParams, config), seed), scale_targets=True)


def build_rf(config, seed):
    return RandomForestRegressor(make_params(RfParams, config), seed)


def build_dt(config, seed):
    return DecisionTreeRegressor(make_params(DtParams, config), seed)


def build_lstm(config, seed):
    return LstmRegressor(make_params(LstmParams, config), seed)


def build_cnn_lstm(config, seed):
    return CnnLstmRegressor(make_params(CnnLstmParams, config), seed)


def build_xgb(config, seed):
    params = make_params(GbtParams, config)
    return MultiOutputRegressor(lambda target_seed: GradientBoostedRegressor(params, target_seed), seed)


FAMILIES = {
    family.name: family
    for family in (
        ModelFamily(
            name="svr",
            input_kind=TABULAR,
            native_multi_output=False,
            default_grid={"C": [0.1, 1, 10, 100], "gamma": [0.001, 0.01, 0.1, 1], "epsilon": [0.01, 0.1, 0.2]},
            build=build_svr,
        ),
        ModelFamily(
            name="mlp",
            input_kind=TABULAR,
            native_multi_output=True,
            default_grid={
                "hidden_layers": [[50], [100], [50, 50], [100, 100]],
                "alpha": [0.0005, 0.001, 0.002],
                "learning_rate": [0.001, 0.005, 0.01],
            },
            build=build_mlp,
        ),
        ModelFamily(
            name="rf",
            input_kind=TABULAR,
            native_multi_output=True,
            default_grid={
                "n_estimators": [10, 50, 100],
                "max_features": [0.3, 0.5, 0.7],
                "min_samples_leaf": [1, 2, 4],
                "bootstrap": [True, False],
            },
            build=build_rf,
        ),
        ModelFamily(
            name="dt",
            input_kind=TABULAR,
            native_multi_output=True,
            default_grid={
                "max_depth": [3, 5, 7, 10],
                "min_samples_leaf": [1, 2, 4],
                "criterion": ["squared_error", "friedman_mse"],
                "max_features": ["sqrt", "log2", "all"],
            },
            build=build_dt,
        ),
        ModelFamily(
            name="lstm",
            input_kind=SEQUENCE,
            native_multi_output=True,
            default_grid={"layers": [1, 2], "units": [50, 100]},
            build=build_lstm,
        ),
        ModelFamily(
            name="cnn_lstm",
            input_kind=SEQUENCE,
            native_multi_output=True,
            default_grid={"filters": [32], "kernel_size": [3], "units": [50]},
            build=build_cnn_lstm,
        ),
        ModelFamily(
            name="xgb",
            input_kind=TABULAR,
            native_multi_output=False,
            default_grid={
                "n_estimators": [10, 50, 100],
                "max_depth": [3, 5, 7],
                "learning_rate": [0.01, 0.1, 0.2],
                "subsample": [0.7, 0.9],
                "colsample_bytree": [0.7, 0.9],
                "gamma": [0, 0.1, 0.2],
            },
            build=build_xgb,
        ),
    )
}

PARAMS_CLASSES = {
    "svr": SvrParams,
    "mlp": MlpParams,
    "rf": RfParams,
    "dt": DtParams,
    "lstm": LstmParams,
    "cnn_lstm": CnnLstmParams,
    "xgb": GbtParams,
}


def get_family(name) -> ModelFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnknownFamilyError(f"Unknown model family {name!r}; valid names are: {', '.join(FAMILIES)}")
