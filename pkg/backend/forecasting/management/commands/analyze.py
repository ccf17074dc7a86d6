from django.core.management.base import BaseCommand

from ...exceptions import command_error
from ...pipeline import analyze
from ._options import add_run_arguments, run_config_from


class Command(BaseCommand):
    help = "Write target histograms, the correlation matrix and descriptive statistics for a dataset"

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--bins", type=int, default=30, help="Histogram bin count")

    def handle(self, *args, **options):
        try:
            config = run_config_from(options)
            written = analyze(config, options["bins"])
        except Exception as exc:
            raise command_error(exc)

        for path in written:
            self.stdout.write(str(path))
        self.stdout.write(self.style.SUCCESS(f"Analysis written to {config.output_dir}"))
