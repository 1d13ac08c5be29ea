from django.core.management.base import BaseCommand
from django.core.management.base import CommandError

from staircase_toolkit.exceptions import ToolkitError
from staircase_toolkit.scenarios.cli import add_override_arguments
from staircase_toolkit.scenarios.cli import overrides_from
from staircase_toolkit.scenarios.cli import report
from staircase_toolkit.scenarios.sweeps import parse_values
from staircase_toolkit.scenarios.sweeps import sweep_scenario


class Command(BaseCommand):
    help = "Run a scenario once per value of one parameter and aggregate the results in sweep.csv."

    def add_arguments(self, parser):
        parser.add_argument("config", help="Scenario file in KEY = value form.")
        parser.add_argument("--param", required=True, help="Scenario key to vary, e.g. TASK_TAU or tau.")
        parser.add_argument("--values", default="", help="Comma-separated values; may be empty.")
        add_override_arguments(parser)

    def handle(self, *args, **options):
        try:
            manifest = sweep_scenario(
                options["config"],
                options["param"],
                parse_values(options["values"]),
                overrides_from(options),
            )
        except ToolkitError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        for run in manifest.sweep["runs"]:
            self.stdout.write(f"{run['output_dir']}: exit code {run['exit_code']}")
        report(self, manifest)
