from django.core.management.base import BaseCommand

from ...exceptions import command_error
from ...pipeline import run_benchmark
from ...reporting import FAILED, render_table
from ...storage import RunStorage
from ._options import add_run_arguments, run_config_from


class Command(BaseCommand):
    help = "Grid-search, fit and evaluate the configured model families and write reports and artifacts"

    def add_arguments(self, parser):
        add_run_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = run_config_from(options)
            frame = run_benchmark(config)
        except Exception as exc:
            raise command_error(exc)

        self.stdout.write(render_table(frame))
        failed = frame[frame["split"] == FAILED]
        if len(failed):
            self.stderr.write(self.style.WARNING(f"{len(failed)} families failed: {', '.join(failed['model'])}"))
        self.stdout.write(self.style.SUCCESS(f"Report written to {RunStorage(config.output_dir).report_csv}"))
