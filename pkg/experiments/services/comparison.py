"""
Column-by-column comparison of two runs' record streams.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from .runner import RECORDS_FILE

logger = logging.getLogger(__name__)

IGNORED_COLUMNS = ('index', 'kind', 'config_hash')


@dataclass
class ComparisonReport:
    kind: str
    points: int
    deviations: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max(self.deviations.values(), default=0.0)

    def exceeding(self, tolerance):
        return {name: value for name, value in self.deviations.items() if value > tolerance}


def load_records(path):
    """
    Records of a run directory (its records.jsonl) or of a .jsonl file.
    """
    path = Path(path)
    if path.is_dir():
        path = path / RECORDS_FILE
    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except OSError as exc:
        raise ValidationError(f'Cannot read records from {path}: {exc.strerror}') from None
    records = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValidationError(f'{path} line {number}: {exc.msg}') from None
    if not records:
        raise ValidationError(f'{path} holds no records.')
    return records


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _numeric_columns(records):
    columns = set()
    for record in records:
        columns.update(
            key for key, value in record.items()
            if key not in IGNORED_COLUMNS and (_is_number(value) or key == 'eigenvalues')
        )
    return columns


def _deviation(first, second):
    if first is None and second is None:
        return 0.0
    if first is None or second is None:
        return math.inf
    if isinstance(first, list) or isinstance(second, list):
        a = np.array([complex(*pair) for pair in first or []])
        b = np.array([complex(*pair) for pair in second or []])
        if a.shape != b.shape:
            return math.inf
        return float(np.max(np.abs(a - b))) if a.size else 0.0
    return abs(float(first) - float(second))


def compare_records(first, second, columns=None):
    """
    Largest absolute deviation per numeric column between two record lists.

    Eigenvalue lists are compared entry by entry in the complex plane; a
    value present on one side only counts as an infinite deviation.

    Raises:
        ValidationError: different experiment kinds, point layouts or columns
    """
    kinds = {record.get('kind') for record in first} | {record.get('kind') for record in second}
    if len(kinds) != 1:
        raise ValidationError(f'Records come from different experiment kinds: {sorted(map(str, kinds))}.')
    if [record['index'] for record in first] != [record['index'] for record in second]:
        raise ValidationError(f'Point layouts differ ({len(first)} vs {len(second)} records).')
    available = _numeric_columns(first)
    if available != _numeric_columns(second):
        missing = sorted(available ^ _numeric_columns(second))
        raise ValidationError(f'Column sets differ: {", ".join(missing)}.')
    columns = sorted(available) if columns is None else list(columns)
    unknown = [name for name in columns if name not in available]
    if unknown:
        raise ValidationError(f'Unknown columns: {", ".join(unknown)}.')

    deviations = {
        name: max(_deviation(a.get(name), b.get(name)) for a, b in zip(first, second))
        for name in columns
    }
    report = ComparisonReport(kinds.pop(), len(first), deviations)
    logger.info(f'Compared {report.points} {report.kind} records: worst deviation {report.worst:.3e}')
    return report
