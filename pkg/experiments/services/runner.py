"""
Experiment Runner Service
Fans sweep points out to a worker pool and writes the run's records,
tabular output and metadata sidecar.
"""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.conf import settings

from experiments.models import ExperimentRun, ResultRecord

from .points import POINT_HANDLERS, SUMMARY_HANDLERS, meanfield_phase_records, run_task

logger = logging.getLogger(__name__)

RECORDS_FILE = 'records.jsonl'
SIDECAR_FILE = 'run.json'

COMMON_COLUMNS = [
    ('index', 'point index'),
    ('g', 'anisotropy (Jy - Jx) / (2 gamma)'),
    ('r', 'noise strength in units of gamma'),
]

# kind -> extra CSV columns; status closes every row
KIND_COLUMNS = {
    'steady-state': [
        ('M', 'magnetization <sigma^z> per site'),
        ('m', 'order parameter <sigma^x> per site'),
        ('M_oracle', 'M of the dense one-step channel fixed point (empty above 4 qubits)'),
        ('steps', 'Trotter steps taken'),
        ('residual', 'trace distance over the last probe window'),
        ('converged', 'steady state reached within max_time'),
    ],
    'g-sweep': [
        ('M', 'magnetization at the lowest boosted noise strength'),
        ('m', 'order parameter at the lowest boosted noise strength'),
        ('M_ex', 'zero-noise (Richardson) extrapolation of M'),
        ('M0', 'noiseless Trotter oracle (empty above 4 qubits)'),
        ('fit_residual', 'largest residual of the Richardson polynomial'),
        ('converged', 'every boosted run reached its steady state'),
    ],
    'r-sweep': [
        ('M', 'magnetization <sigma^z> per site'),
        ('m', 'order parameter <sigma^x> per site'),
        ('steps', 'Trotter steps taken'),
        ('converged', 'steady state reached within max_time'),
    ],
    'meanfield-phase': [
        ('M', 'mean-field <sigma^z>'),
        ('m', 'mean-field |<sigma^x>|'),
        ('sx', 'mean-field <sigma^x>'),
        ('sy', 'mean-field <sigma^y>'),
        ('phase', 'PM or FM'),
        ('stable', 'fixed point is linearly stable'),
        ('limit_cycle', 'integration ended on a limit cycle'),
    ],
    'spectroscopy': [
        ('gap', 'slowest decay rate -Re(lambda); r = 0 row is extrapolated'),
        ('n_modes', 'number of fitted or extrapolated modes'),
        ('fit_residual', 'relative matrix-pencil reconstruction error'),
        ('exact_gap', 'gap of the noiseless step generator (r = 0 row, small lattices)'),
    ],
    'mitigate-critical-point': [
        ('g_cri', 'fitted critical anisotropy; r = 0 row is extrapolated'),
        ('beta', 'fitted critical exponent'),
        ('fit_residual', 'relative residual of the scaling fit'),
        ('n_points', 'points inside the critical window'),
    ],
}

MODEL_FIELDS = {
    'index': 'index',
    'g': 'g',
    'r': 'r',
    'M': 'magnetization',
    'm': 'order_parameter',
    'gap': 'gap',
    'eigenvalues': 'eigenvalues',
    'status': 'status',
    'error': 'error_message',
}


def csv_columns(kind):
    return COMMON_COLUMNS + KIND_COLUMNS[kind] + [('status', 'ok or failed')]


def plain(value):
    """Numpy scalars, complex numbers and tuples as JSON-ready Python values."""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def format_cell(value):
    """Shortest round-trip text of a value, so reruns compare byte for byte."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunOutcome:
    run: ExperimentRun
    records: list
    output_dir: Path

    @property
    def failed_points(self):
        return sum(record['status'] == 'failed' for record in self.records)


class ExperimentRunner:
    """
    Run one validated experiment and persist its results.

    Point order is fixed by the sweep; ``workers`` only changes wall time.
    """

    def __init__(self, config, output_dir, workers=1):
        self.config = config
        self.output_dir = Path(output_dir)
        self.workers = max(1, int(workers))

    def tasks(self):
        config = self.config
        if config.kind == 'steady-state':
            values = [config.r0]
        elif config.kind == 'g-sweep':
            values = list(config.g_values)
        elif config.kind == 'r-sweep':
            values = list(config.r_values)
        else:
            values = list(config.boosted_rs)
        return [(config.kind, config, index, value) for index, value in enumerate(values)]

    def compute(self):
        kind = self.config.kind
        if kind == 'meanfield-phase':
            return meanfield_phase_records(self.config)
        if kind not in POINT_HANDLERS:
            raise ValueError(f'No handler for experiment kind {kind!r}')
        tasks = self.tasks()
        if self.workers == 1 or len(tasks) == 1:
            records = [run_task(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(tasks))) as pool:
                records = list(pool.map(run_task, tasks))
        if kind in SUMMARY_HANDLERS:
            records.append(SUMMARY_HANDLERS[kind](self.config, records))
        return records

    def run(self):
        config = self.config
        config_hash = config.config_hash
        run = ExperimentRun.objects.create(
            kind=config.kind,
            config_hash=config_hash,
            config_text=config.text,
            config_json=config.as_dict(),
            seed=config.seed,
            tool_version=settings.SIMULATOR_VERSION,
            output_dir=str(self.output_dir),
        )
        logger.info(
            f'Run {run.id}: {config.kind} config {config_hash[:12]} with {self.workers} worker(s) '
            f'into {self.output_dir}'
        )
        try:
            records = [plain(record) for record in self.compute()]
        except Exception as exc:
            run.finish(error_message=f'{type(exc).__name__}: {exc}')
            raise
        for record in records:
            record['kind'] = config.kind
            record['config_hash'] = config_hash

        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.write_records(records)
        self.write_table(records, config_hash)
        self.store_records(run, records)

        outcome = RunOutcome(run, records, self.output_dir)
        run.finish(outcome.failed_points, len(records))
        self.write_sidecar(run, records)
        logger.info(
            f'Run {run.id} {run.status}: {len(records)} records, {outcome.failed_points} failed'
        )
        return outcome

    def write_records(self, records):
        with open(self.output_dir / RECORDS_FILE, 'w', encoding='utf-8', newline='\n') as handle:
            for record in records:
                handle.write(json.dumps(record, sort_keys=True) + '\n')

    def write_table(self, records, config_hash):
        kind = self.config.kind
        columns = csv_columns(kind)
        with open(self.output_dir / f'{kind}.csv', 'w', encoding='utf-8', newline='') as handle:
            handle.write(f'# {kind} v{settings.SIMULATOR_VERSION} config {config_hash}\n')
            for name, description in columns:
                handle.write(f'# {name}: {description}\n')
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow([name for name, _ in columns])
            for record in records:
                writer.writerow([format_cell(record.get(name)) for name, _ in columns])

    def store_records(self, run, records):
        for record in records:
            fields = {MODEL_FIELDS[key]: value for key, value in record.items() if key in MODEL_FIELDS}
            diagnostics = {
                key: value for key, value in record.items()
                if key not in MODEL_FIELDS and key not in ('kind', 'config_hash')
            }
            ResultRecord.objects.create(run=run, diagnostics=diagnostics, **fields)

    def write_sidecar(self, run, records):
        sidecar = {
            'kind': run.kind,
            'config': self.config.as_dict(),
            'config_hash': run.config_hash,
            'config_text': self.config.text,
            'tool_version': run.tool_version,
            'seed': run.seed,
            'workers': self.workers,
            'status': run.status,
            'records': len(records),
            'failed': sum(record['status'] == 'failed' for record in records),
            'files': [RECORDS_FILE, f'{run.kind}.csv'],
            'started_at': run.started_at.isoformat(),
            'finished_at': run.finished_at.isoformat() if run.finished_at else None,
        }
        with open(self.output_dir / SIDECAR_FILE, 'w', encoding='utf-8') as handle:
            json.dump(sidecar, handle, indent=2, sort_keys=True)
            handle.write('\n')
