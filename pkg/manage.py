#!/usr/bin/env python
"""Command-line entry point for dissipative_lab (experiments, tests, admin)."""
import os
import sys


def main():
    """Dispatch to Django management commands, e.g. ``simulate g-sweep``."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dissipative_lab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Django is required to run dissipative_lab; install the packages "
            "listed in requirements.txt into the active environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
