"""Options shared by the ``run`` and ``sweep`` management commands."""

from django.core.management.base import CommandError

from .models import RunManifest

OVERRIDE_OPTIONS = {
    "out": "OUTPUT_DIR",
    "modes": "TASK_MODES",
    "steps": "TASK_STEPS",
    "seed": "TASK_SEED",
}


def add_override_arguments(parser):
    parser.add_argument("--out", help="Output directory, replaces OUTPUT_DIR.")
    parser.add_argument("--modes", type=int, help="Highest spectral mode J, replaces TASK_MODES.")
    parser.add_argument("--steps", type=int, help="Time steps per control window, replaces TASK_STEPS.")
    parser.add_argument("--seed", type=int, help="Seed of random data, replaces TASK_SEED.")


def overrides_from(options: dict) -> dict[str, str]:
    return {
        key: str(options[name])
        for name, key in OVERRIDE_OPTIONS.items()
        if options.get(name) is not None
    }


def report(command, manifest: RunManifest):
    for record in manifest.tasks:
        line = f"{record.name}: {record.status}"
        if record.message:
            line = f"{line} ({record.message})"
        style = command.style.SUCCESS if record.exit_code == 0 else command.style.WARNING
        command.stdout.write(style(line))
    command.stdout.write(f"Artifacts in {manifest.output_dir}")
    if manifest.exit_code:
        msg = manifest.message or f"finished with exit code {manifest.exit_code}"
        raise CommandError(msg, returncode=manifest.exit_code)
