"""
Management command to run one experiment.
"""

from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from experiments.config_parser import load_config, load_config_file
from experiments.models import EXPERIMENT_KINDS
from experiments.services.runner import ExperimentRunner
from hilbert.exceptions import NumericalError

CONFIG_ERROR = 2
NUMERICAL_ERROR = 3


class Command(BaseCommand):
    help = 'Run an experiment and write records.jsonl, a CSV table and run.json'

    def add_arguments(self, parser):
        parser.add_argument(
            'kind',
            choices=[kind for kind, _ in EXPERIMENT_KINDS],
            help='Experiment to run',
        )
        parser.add_argument(
            '--config',
            type=str,
            help='Configuration file (key = value [unit] lines); defaults apply without one',
        )
        parser.add_argument(
            '--out',
            type=str,
            help='Output directory (default: EXPERIMENT_OUTPUT_DIR/<kind>-<config hash>)',
        )
        parser.add_argument(
            '--workers',
            type=int,
            help='Worker processes for independent sweep points (default: EXPERIMENT_WORKERS)',
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Seed for random initial states, overriding the config file',
        )

    def handle(self, *args, **options):
        kind = options['kind']
        try:
            if options.get('config'):
                config = load_config_file(options['config'], kind, options.get('seed'))
            else:
                config = load_config('', kind, options.get('seed'))
        except ValidationError as exc:
            details = '\n  '.join(exc.messages)
            raise CommandError(f'Invalid configuration:\n  {details}', returncode=CONFIG_ERROR)

        workers = options.get('workers') or settings.EXPERIMENT_WORKERS
        if workers < 1:
            raise CommandError(f'--workers must be at least 1, got {workers}.', returncode=CONFIG_ERROR)

        if options.get('out'):
            output_dir = Path(options['out'])
        else:
            output_dir = Path(settings.EXPERIMENT_OUTPUT_DIR) / f'{kind}-{config.config_hash[:12]}'

        self.stdout.write(f'Running {kind} (config {config.config_hash[:12]}) into {output_dir}...')
        try:
            outcome = ExperimentRunner(config, output_dir, workers).run()
        except (NumericalError, ValidationError) as exc:
            raise CommandError(f'Numerical failure: {exc}', returncode=NUMERICAL_ERROR)

        run = outcome.run
        if run.status == 'failed':
            raise CommandError(
                f'Every point failed; see {output_dir / "records.jsonl"}', returncode=NUMERICAL_ERROR
            )
        if outcome.failed_points:
            self.stdout.write(
                self.style.WARNING(
                    f'{outcome.failed_points} of {len(outcome.records)} points failed; the rest were written.'
                )
            )
        self.stdout.write(
            self.style.SUCCESS(f'Wrote {len(outcome.records)} records to {output_dir}')
        )
