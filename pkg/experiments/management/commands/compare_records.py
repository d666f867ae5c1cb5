"""
Management command to compare the records of two runs.
"""

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from experiments.services.comparison import compare_records, load_records


class Command(BaseCommand):
    help = 'Report the largest deviation per column between two runs of the same experiment'

    def add_arguments(self, parser):
        parser.add_argument('first', help='Run directory or records.jsonl')
        parser.add_argument('second', help='Run directory or records.jsonl')
        parser.add_argument(
            '--columns',
            type=str,
            help='Comma-separated columns to compare (default: every numeric column)',
        )
        parser.add_argument(
            '--tolerance',
            type=float,
            help='Fail (exit code 1) when any deviation exceeds this value',
        )

    def handle(self, *args, **options):
        columns = options.get('columns')
        columns = [name.strip() for name in columns.split(',') if name.strip()] if columns else None
        try:
            report = compare_records(
                load_records(options['first']), load_records(options['second']), columns
            )
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages), returncode=2)

        self.stdout.write(f'{report.kind}: {report.points} points')
        width = max((len(name) for name in report.deviations), default=6)
        for name, deviation in report.deviations.items():
            self.stdout.write(f'  {name.ljust(width)}  {deviation:.6e}')

        tolerance = options.get('tolerance')
        if tolerance is not None:
            exceeding = report.exceeding(tolerance)
            if exceeding:
                raise CommandError(
                    f'{len(exceeding)} column(s) exceed tolerance {tolerance:g}: {", ".join(exceeding)}',
                    returncode=1,
                )
            self.stdout.write(self.style.SUCCESS(f'All deviations within {tolerance:g}'))
