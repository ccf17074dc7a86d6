from django.core.management.base import BaseCommand

from ...exceptions import command_error
from ...pipeline import write_plotdata
from ._options import add_run_arguments, run_config_from


class Command(BaseCommand):
    help = "Export actual-vs-predicted series and scatter tables from a finished benchmark run"

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--family", help="Model family (default: every family in the run)")
        parser.add_argument("--split", choices=("train", "test"), default="test")

    def handle(self, *args, **options):
        try:
            config = run_config_from(options)
            written = write_plotdata(config.output_dir, options["family"], options["split"])
        except Exception as exc:
            raise command_error(exc)

        for path in written:
            self.stdout.write(str(path))
