from django.core.management.base import BaseCommand

from ...exceptions import command_error
from ...synthetic import DEFAULT_START, write_synthetic_dataset


class Command(BaseCommand):
    help = "Write a seeded synthetic hourly weather dataset in the ingestion schema"

    def add_arguments(self, parser):
        parser.add_argument("path", help="Destination CSV")
        parser.add_argument("--hours", type=int, default=2000)
        parser.add_argument("--seed", type=int, default=42)
        parser.add_argument("--start", default=DEFAULT_START, help="First timestamp (ISO-8601)")

    def handle(self, *args, **options):
        try:
            path = write_synthetic_dataset(options["path"], options["hours"], options["seed"], options["start"])
        except Exception as exc:
            raise command_error(exc)

        self.stdout.write(self.style.SUCCESS(f"Wrote {options['hours']} hours to {path}"))
