from ...serializers import load_run_config


def add_run_arguments(parser):
    """Flags shared by every run-configured command."""
    parser.add_argument("--config", help="Flat KEY=VALUE config file (.env format)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key; repeatable",
    )
    parser.add_argument("--data", help="Hourly observations CSV")
    parser.add_argument("--models", help="Comma-separated model families")
    parser.add_argument("--seed", type=int, help="Base seed")
    parser.add_argument("--out", help="Run output directory")
    parser.add_argument("--jobs", type=int, help="Parallel grid cells (joblib n_jobs)")


def run_config_from(options):
    return load_run_config(
        options.get("config"),
        options.get("overrides") or (),
        data=options.get("data"),
        models=options.get("models"),
        seed=options.get("seed"),
        out=options.get("out"),
        jobs=options.get("jobs"),
    )
