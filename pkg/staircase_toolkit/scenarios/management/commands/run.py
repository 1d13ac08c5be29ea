from django.core.management.base import BaseCommand

from staircase_toolkit.scenarios.cli import add_override_arguments
from staircase_toolkit.scenarios.cli import overrides_from
from staircase_toolkit.scenarios.cli import report
from staircase_toolkit.scenarios.pipeline import run_scenario


class Command(BaseCommand):
    help = "Run the tasks of a scenario file and write CSV/JSON artifacts with a manifest."

    def add_arguments(self, parser):
        parser.add_argument("config", help="Scenario file in KEY = value form.")
        add_override_arguments(parser)

    def handle(self, *args, **options):
        manifest = run_scenario(options["config"], overrides_from(options))
        report(self, manifest)
