from pathlib import Path

from django.core.management.base import BaseCommand

from ...exceptions import command_error
from ...pipeline import predict
from ...storage import RunStorage
from ._options import add_run_arguments, run_config_from


class Command(BaseCommand):
    help = "Apply a saved model artifact to a dataset and write timestamp,temp_pred,humidity_pred"

    def add_arguments(self, parser):
        parser.add_argument("artifact", help="Model artifact JSON written by the benchmark")
        add_run_arguments(parser)
        parser.add_argument("--output", help="Prediction CSV (default: <out>/reports/<artifact>_forecast.csv)")

    def handle(self, *args, **options):
        try:
            config = run_config_from(options)
            artifact = Path(options["artifact"])
            output = options["output"] or RunStorage(config.output_dir).reports / f"{artifact.stem}_forecast.csv"
            frame = predict(artifact, config.require_dataset(), output)
        except Exception as exc:
            raise command_error(exc)

        self.stdout.write(self.style.SUCCESS(f"Wrote {len(frame)} predictions to {output}"))
