import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from hilbert.exceptions import DefectiveSpectrumError, RankCollapseError

from .config_parser import expand_range, load_config, parse_config
from .models import ExperimentRun, ResultRecord
from .services import points
from .services.comparison import compare_records, load_records

NOISELESS_G_CRI = 0.0695312

SINGLE_QUBIT = """
# one decaying qubit, no couplings
model.L = 1
model.jx = 0 [gamma]
model.jz = 0 [gamma]
model.g = 0
"""


def read_lines(path):
    return Path(path).read_text(encoding='utf-8').splitlines()


class ConfigParserTest(SimpleTestCase):
    """
    Line parsing, ranges, units and error diagnostics.
    """

    def test_ranges_include_stop(self):
        values = expand_range('0.025:0.25:0.025')
        self.assertEqual(len(values), 10)
        self.assertEqual(values[0], 0.025)
        self.assertEqual(values[-1], 0.25)
        self.assertEqual(expand_range('0:1:0.3'), [0.0, 0.3, 0.6, 0.9])

    def test_bad_ranges_rejected(self):
        for text in ('0:1', '0:1:0', '1:0:0.1', 'a:b:c'):
            with self.subTest(text=text):
                with self.assertRaises(ValidationError):
                    expand_range(text)

    def test_lines_comments_and_lists(self):
        parsed = parse_config(
            '# header\n'
            '\n'
            'model.L = 2   # trailing comment\n'
            'noise.boosts = 1, 1.5, 2\n'
            'evolution.tau = 0.005 [1/gamma]\n'
        )
        self.assertEqual(parsed.values['size'], '2')
        self.assertEqual(parsed.values['boosts'], ['1', '1.5', '2'])
        self.assertEqual(parsed.values['tau'], '0.005')
        self.assertEqual(parsed.describe('tau'), 'line 5 (evolution.tau)')

    def test_errors_name_the_line(self):
        cases = {
            'model.L = 2\nmodel.colour = red\n': 'line 2 (model.colour): unknown key',
            'model.L 2\n': 'line 1: expected',
            'model.L = 2\nmodel.L = 3\n': 'line 2 (model.L): repeated key, first set on line 1',
            'evolution.tau = 0.01 [gamma]\n': 'line 1 (evolution.tau): unit [gamma] not accepted',
            'model.L = 2 [gamma]\n': 'line 1 (model.L): unit [gamma] not accepted',
            'sweep.g = 0:1:0\n': 'line 1 (sweep.g)',
        }
        for text, expected in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(ValidationError) as cm:
                    parse_config(text)
                self.assertTrue(any(expected in message for message in cm.exception.messages))


class ExperimentConfigTest(SimpleTestCase):
    """
    Form validation, defaults and hashing of whole configurations.
    """

    def test_defaults_fill_every_field(self):
        config = load_config('', 'steady-state')
        self.assertEqual(config.size, 2)
        self.assertEqual(config.tau, 0.01)
        self.assertEqual(config.boosts, (1.0, 1.5, 2.0))
        self.assertEqual(config.noise_kind, 'depolarizing')
        self.assertTrue(config.normalize)
        self.assertEqual(config.observable, 'x+z')
        for boosted, expected in zip(config.boosted_rs, (0.01, 0.015, 0.02)):
            self.assertAlmostEqual(boosted, expected, places=15)

    def test_jy_sets_anisotropy(self):
        config = load_config('model.jx = 0.9\nmodel.jy = 1.1\n', 'steady-state')
        self.assertAlmostEqual(config.g, 0.1, places=12)
        spec = config.model_spec()
        self.assertAlmostEqual(spec.jy, 1.1, places=12)

    def test_typed_values(self):
        config = load_config(
            'noise.kind = random-pauli\nnoise.signed = true\nnoise.loosened = false\n'
            'noise.seed = 4\nspectroscopy.observable = X + Z\nsweep.r = 0:0.02:0.01 [gamma]\n',
            'r-sweep',
        )
        self.assertTrue(config.signed)
        self.assertFalse(config.loosened)
        self.assertEqual(config.noise_model().seed, 4)
        self.assertEqual(config.observable, 'x+z')
        self.assertEqual(config.r_values, (0.0, 0.01, 0.02))

    def test_invalid_configurations_rejected(self):
        cases = [
            ('g-sweep', 'model.L = 2\n', 'g-sweep needs this sweep'),
            ('g-sweep', 'sweep.g = 0.1\nnoise.r0 = 0\n', 'needs r0 > 0'),
            ('meanfield-phase', 'sweep.g = 0.1\nsweep.r = 0.01\n', 'exactly one'),
            ('steady-state', 'experiment.kind = r-sweep\n', "declares 'r-sweep'"),
            ('steady-state', 'evolution.tau = -0.01\n', 'line 1 (evolution.tau): Must be positive'),
            ('steady-state', 'model.L = 5\n', 'line 1 (model.L)'),
            ('steady-state', 'spectroscopy.observable = x+w\n', 'sum of x, y and z'),
            ('steady-state', 'model.L = 2\nspectroscopy.site = 4\n', 'outside the lattice'),
            ('steady-state', 'noise.boosts = 1, 1\n', 'distinct'),
            ('r-sweep', 'sweep.r = 0.02, 0.01, 0.03\n', 'monotone'),
            ('spectroscopy', 'noise.boosts = 1\n', 'needs 2 boost factors'),
            ('steady-state', 'noise.signed = true\n', 'random-Pauli'),
            ('steady-state', 'model.jx = 0.9\nmodel.jy = 1.1\nmodel.g = 0.3\n', 'contradicts'),
            ('steady-state', 'model.L = 2\nmodel.boundary = periodic\n',
             'line 2 (model.boundary): Periodic boundaries need L >= 3'),
        ]
        for kind, text, expected in cases:
            with self.subTest(kind=kind, text=text):
                with self.assertRaises(ValidationError) as cm:
                    load_config(text, kind)
                self.assertTrue(
                    any(expected in message for message in cm.exception.messages),
                    cm.exception.messages,
                )

    def test_hash_ignores_formatting(self):
        first = load_config('model.L = 2\nnoise.r0 = 0.01\n', 'steady-state')
        second = load_config('# same run\nnoise.r0=0.01 [gamma]\n\nmodel.L   =   2\n', 'steady-state')
        self.assertEqual(first.config_hash, second.config_hash)
        self.assertEqual(len(first.config_hash), 64)

    def test_hash_tracks_values_and_seed(self):
        base = load_config('noise.r0 = 0.01\n', 'steady-state')
        self.assertNotEqual(base.config_hash, load_config('noise.r0 = 0.02\n', 'steady-state').config_hash)
        self.assertNotEqual(base.config_hash, load_config('noise.r0 = 0.01\n', 'steady-state', seed=3).config_hash)
        self.assertNotEqual(base.config_hash, load_config('noise.r0 = 0.01\n', 'spectroscopy').config_hash)


class ExperimentModelTest(TestCase):

    def make_run(self, **overrides):
        values = {
            'kind': 'steady-state',
            'config_hash': 'a' * 64,
            'config_json': {'size': 1},
            'tool_version': '1.0.0',
            'output_dir': '/tmp/run',
        }
        values.update(overrides)
        return ExperimentRun.objects.create(**values)

    def test_hash_format_enforced(self):
        with self.assertRaises(ValidationError):
            self.make_run(config_hash='not-a-hash')

    def test_finish_statuses(self):
        run = self.make_run()
        run.finish(failed_points=0, total_points=3)
        self.assertEqual(run.status, 'completed')
        self.assertIsNotNone(run.duration)
        run.finish(failed_points=1, total_points=3)
        self.assertEqual(run.status, 'partial')
        run.finish(failed_points=3, total_points=3)
        self.assertEqual(run.status, 'failed')
        self.assertIn('All 3 points failed', run.error_message)

    def test_failed_record_needs_error(self):
        run = self.make_run()
        with self.assertRaises(ValidationError):
            ResultRecord.objects.create(run=run, index=0, status='failed')
        record = ResultRecord.objects.create(run=run, index=0, status='failed', error_message='boom')
        self.assertEqual(record.config_hash, 'a' * 64)


class SimulateCommandTest(TestCase):
    """
    End-to-end runs of the simulate command on one- and four-qubit lattices.
    """

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def write_config(self, text, name='experiment.cfg'):
        path = self.tmp / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def simulate(self, kind, text, out='out', workers=1, **options):
        stdout = StringIO()
        call_command(
            'simulate', kind, '--config', self.write_config(text), '--out', str(self.tmp / out),
            workers=workers, stdout=stdout, **options,
        )
        return load_records(self.tmp / out), stdout.getvalue()

    def test_single_qubit_steady_state(self):
        records, output = self.simulate('steady-state', SINGLE_QUBIT + 'noise.r0 = 0\n')
        self.assertEqual(len(records), 1)
        record = records[0]
        self.assertEqual(record['status'], 'ok')
        self.assertAlmostEqual(record['M'], -1.0, places=10)
        self.assertAlmostEqual(record['M_oracle'], -1.0, places=10)
        self.assertEqual(len(record['config_hash']), 64)
        self.assertIn('Wrote 1 records', output)

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'completed')
        self.assertEqual(run.config_hash, record['config_hash'])
        self.assertEqual(run.records.get().magnetization, record['M'])

        table = read_lines(self.tmp / 'out' / 'steady-state.csv')
        self.assertTrue(table[0].startswith('# steady-state v'))
        header = next(line for line in table if not line.startswith('#'))
        self.assertEqual(header, 'index,g,r,M,m,M_oracle,steps,residual,converged,status')
        sidecar = json.loads((self.tmp / 'out' / 'run.json').read_text())
        self.assertEqual(sidecar['config_hash'], run.config_hash)
        self.assertEqual(sidecar['status'], 'completed')

    def test_reruns_are_byte_identical(self):
        text = SINGLE_QUBIT + 'noise.r0 = 0.01\nsweep.r = 0:0.02:0.01\n'
        self.simulate('r-sweep', text, out='first')
        self.simulate('r-sweep', text, out='second')
        for name in ('r-sweep.csv', 'records.jsonl'):
            with self.subTest(file=name):
                self.assertEqual(
                    (self.tmp / 'first' / name).read_bytes(), (self.tmp / 'second' / name).read_bytes()
                )

    def test_workers_do_not_change_output(self):
        text = SINGLE_QUBIT + 'sweep.r = 0:0.03:0.01\n'
        self.simulate('r-sweep', text, out='serial', workers=1)
        self.simulate('r-sweep', text, out='parallel', workers=2)
        self.assertEqual(
            (self.tmp / 'serial' / 'r-sweep.csv').read_bytes(),
            (self.tmp / 'parallel' / 'r-sweep.csv').read_bytes(),
        )

    def test_default_output_directory(self):
        with override_settings(EXPERIMENT_OUTPUT_DIR=str(self.tmp / 'results')):
            call_command('simulate', 'steady-state', '--config',
                         self.write_config(SINGLE_QUBIT + 'noise.r0 = 0\n'), stdout=StringIO())
        run = ExperimentRun.objects.get()
        expected = self.tmp / 'results' / f'steady-state-{run.config_hash[:12]}'
        self.assertEqual(run.output_dir, str(expected))
        self.assertTrue((expected / 'records.jsonl').exists())

    def test_seed_flag_overrides_config(self):
        call_command('simulate', 'steady-state', '--config',
                     self.write_config(SINGLE_QUBIT + 'seed = 1\n'), '--out', str(self.tmp / 'a'),
                     '--seed', '7', stdout=StringIO())
        self.assertEqual(ExperimentRun.objects.get().seed, 7)

    def test_config_errors_exit_with_code_2(self):
        with self.assertRaises(CommandError) as cm:
            self.simulate('steady-state', 'model.L = 2\nmodel.spin = 1/2\n')
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn('line 2 (model.spin)', str(cm.exception))
        self.assertFalse(ExperimentRun.objects.exists())

        with self.assertRaises(CommandError) as cm:
            call_command('simulate', 'steady-state', '--config', str(self.tmp / 'missing.cfg'),
                         stdout=StringIO())
        self.assertEqual(cm.exception.returncode, 2)

    def test_small_periodic_lattice_is_a_config_error(self):
        with self.assertRaises(CommandError) as cm:
            self.simulate('r-sweep', 'model.L = 2\nmodel.boundary = periodic\nsweep.r = 0, 0.01\n')
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn('model.boundary', str(cm.exception))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_numerical_failure_exits_with_code_3(self):
        with mock.patch(
            'experiments.services.runner.ExperimentRunner.compute',
            side_effect=RankCollapseError('series carries no modes'),
        ):
            with self.assertRaises(CommandError) as cm:
                self.simulate('steady-state', SINGLE_QUBIT)
        self.assertEqual(cm.exception.returncode, 3)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertIn('RankCollapseError', run.error_message)

    def test_all_points_failing_exits_with_code_3(self):
        with mock.patch(
            'experiments.services.points.evolve_to_steady',
            side_effect=DefectiveSpectrumError('Jordan block'),
        ):
            with self.assertRaises(CommandError) as cm:
                self.simulate('steady-state', SINGLE_QUBIT)
        self.assertEqual(cm.exception.returncode, 3)
        records = load_records(self.tmp / 'out')
        self.assertEqual(records[0]['status'], 'failed')
        self.assertIn('Jordan block', records[0]['error'])

    def test_failed_points_do_not_stop_the_sweep(self):
        real = points.evolve_to_steady

        def flaky(rho, schedule, cfg, *args, **kwargs):
            if cfg.r == 0.01:
                raise DefectiveSpectrumError('unlucky point')
            return real(rho, schedule, cfg, *args, **kwargs)

        with mock.patch('experiments.services.points.evolve_to_steady', side_effect=flaky):
            records, output = self.simulate('r-sweep', SINGLE_QUBIT + 'sweep.r = 0, 0.01, 0.02\n')
        self.assertEqual([record['status'] for record in records], ['ok', 'failed', 'ok'])
        self.assertIn('1 of 3 points failed', output)
        self.assertEqual(ExperimentRun.objects.get().status, 'partial')
        table = read_lines(self.tmp / 'out' / 'r-sweep.csv')
        self.assertTrue(table[-2].endswith(',failed'))

    def test_g_sweep_extrapolation_beats_raw_value(self):
        text = SINGLE_QUBIT + 'noise.r0 = 0.01\nnoise.boosts = 1, 2\nsweep.g = 0, 0.1\n'
        records, _ = self.simulate('g-sweep', text)
        self.assertEqual(len(records), 2)
        for record in records:
            with self.subTest(g=record['g']):
                self.assertAlmostEqual(record['M0'], -1.0, places=8)
                self.assertEqual(len(record['M_boosted']), 2)
                self.assertLess(5 * abs(record['M_ex'] - record['M0']), abs(record['M'] - record['M0']))

    def test_lattice_g_sweep_extrapolation_beats_raw_value(self):
        text = (
            'model.L = 2\nnoise.r0 = 0.01\nnoise.boosts = 1, 2\nmitigation.order = 1\n'
            'sweep.g = 0.025, 0.25\nevolution.max_time = 100 [1/gamma]\n'
        )
        records, _ = self.simulate('g-sweep', text, workers=2)
        self.assertEqual([record['g'] for record in records], [0.025, 0.25])
        for record in records:
            with self.subTest(g=record['g']):
                self.assertEqual(record['status'], 'ok')
                self.assertTrue(record['converged'])
                self.assertLess(5 * abs(record['M_ex'] - record['M0']), abs(record['M'] - record['M0']))

    def test_magnetization_is_not_monotone_in_r_at_crossover(self):
        text = 'model.L = 2\nmodel.g = 0.1\nsweep.r = 0.01:0.1:0.01\nevolution.max_time = 100 [1/gamma]\n'
        records, _ = self.simulate('r-sweep', text, workers=2)
        self.assertEqual(len(records), 10)
        self.assertTrue(all(record['converged'] for record in records))
        magnetizations = [record['M'] for record in records]
        steps = np.diff(magnetizations)
        self.assertLess(steps.min(), -1e-6)
        self.assertGreater(steps.max(), 1e-6)

    def test_engine_matches_oracle_on_four_qubits(self):
        text = (
            'model.L = 2\nmodel.g = 0.1\nnoise.r0 = 0\n'
            'evolution.tolerance = 1e-9\nevolution.max_time = 200 [1/gamma]\n'
        )
        records, _ = self.simulate('steady-state', text)
        self.assertLess(abs(records[0]['M'] - records[0]['M_oracle']), 1e-4)

    def test_meanfield_phase(self):
        text = 'noise.r0 = 0\nsweep.g = 0, 0.05, 0.1, 0.15\nmodel.coordination = 4\n'
        records, _ = self.simulate('meanfield-phase', text)
        self.assertEqual([record['phase'] for record in records], ['PM', 'PM', 'FM', 'FM'])
        self.assertAlmostEqual(records[0]['M'], -1.0, places=8)
        self.assertGreater(records[-1]['m'], 1e-3)

    def test_spectroscopy_single_qubit_rates(self):
        text = SINGLE_QUBIT + (
            'noise.r0 = 0.01\nnoise.boosts = 1, 2\nevolution.max_time = 10 [1/gamma]\n'
            'evolution.stride = 10\nseed = 5\n'
        )
        records, _ = self.simulate('spectroscopy', text)
        self.assertEqual(len(records), 3)
        self.assertEqual([record['r'] for record in records], [0.01, 0.02, 0.0])
        self.assertGreater(records[0]['gap'], 0.5)
        self.assertGreater(records[1]['gap'], records[0]['gap'])
        summary = records[-1]
        self.assertEqual(summary['status'], 'ok')
        self.assertAlmostEqual(summary['gap'], 0.5, places=6)
        self.assertAlmostEqual(summary['exact_gap'], 0.5, places=8)
        rates = sorted(complex(*pair).real for pair in summary['eigenvalues'])
        self.assertEqual(len(rates), 3)
        for rate, expected in zip(rates, [-1.0, -0.5, 0.0]):
            self.assertAlmostEqual(rate, expected, places=6)

    def test_critical_point_recovery(self):
        text = (
            'noise.r0 = 0.01\nnoise.boosts = 1, 1.5, 2\nmitigation.order = 2\n'
            'sweep.g = 0.07:0.145:0.001\ncritical.window = 0.002, 0.02\nmodel.coordination = 4\n'
        )
        records, _ = self.simulate('mitigate-critical-point', text)
        self.assertEqual([record['r'] for record in records], [0.01, 0.015, 0.02, 0.0])
        fitted = [record['g_cri'] for record in records[:3]]
        self.assertTrue(fitted[0] < fitted[1] < fitted[2])
        self.assertLess(abs(records[-1]['g_cri'] - NOISELESS_G_CRI), 0.1 * NOISELESS_G_CRI)


class CompareRecordsTest(TestCase):
    """
    Column deviations between record streams, through the service and the command.
    """

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.records = [
            {'index': 0, 'kind': 'r-sweep', 'config_hash': 'a' * 64, 'g': 0.1, 'r': 0.0,
             'M': -0.8, 'm': 0.0, 'status': 'ok', 'eigenvalues': [[0.0, 0.0], [-0.5, 0.2]]},
            {'index': 1, 'kind': 'r-sweep', 'config_hash': 'a' * 64, 'g': 0.1, 'r': 0.01,
             'M': -0.7, 'm': None, 'status': 'ok', 'eigenvalues': [[0.0, 0.0], [-0.6, 0.0]]},
        ]

    def write(self, name, records):
        path = self.tmp / name
        path.write_text(''.join(json.dumps(record) + '\n' for record in records), encoding='utf-8')
        return str(path)

    def shifted(self, **changes):
        records = [dict(record) for record in self.records]
        records[1].update(changes)
        return records

    def test_identical_records(self):
        report = compare_records(self.records, self.records)
        self.assertEqual(report.worst, 0.0)
        self.assertEqual(sorted(report.deviations), ['M', 'eigenvalues', 'g', 'm', 'r'])

    def test_deviation_per_column(self):
        report = compare_records(self.records, self.shifted(M=-0.2, eigenvalues=[[0.0, 0.0], [-0.6, 0.4]]))
        self.assertAlmostEqual(report.deviations['M'], 0.5, places=12)
        self.assertAlmostEqual(report.deviations['eigenvalues'], 0.4, places=12)
        self.assertEqual(report.deviations['g'], 0.0)

    def test_missing_values_count_as_infinite(self):
        report = compare_records(self.records, self.shifted(m=0.3))
        self.assertEqual(report.deviations['m'], float('inf'))

    def test_incompatible_records_rejected(self):
        other_kind = [dict(record, kind='g-sweep') for record in self.records]
        with self.assertRaises(ValidationError):
            compare_records(self.records, other_kind)
        with self.assertRaises(ValidationError):
            compare_records(self.records, self.records[:1])
        with self.assertRaises(ValidationError):
            compare_records(self.records, self.shifted(M_ex=0.1))
        with self.assertRaises(ValidationError):
            compare_records(self.records, self.records, columns=['gap'])

    def test_command_reports_and_enforces_tolerance(self):
        first = self.write('a.jsonl', self.records)
        second = self.write('b.jsonl', self.shifted(M=-0.69))
        stdout = StringIO()
        call_command('compare_records', first, second, '--tolerance', '0.1', stdout=stdout)
        self.assertIn('r-sweep: 2 points', stdout.getvalue())
        self.assertIn('All deviations within 0.1', stdout.getvalue())

        with self.assertRaises(CommandError) as cm:
            call_command('compare_records', first, second, '--tolerance', '1e-3', stdout=StringIO())
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn('M', str(cm.exception))

    def test_command_rejects_unreadable_input(self):
        first = self.write('a.jsonl', self.records)
        with self.assertRaises(CommandError) as cm:
            call_command('compare_records', first, str(self.tmp / 'nowhere'), stdout=StringIO())
        self.assertEqual(cm.exception.returncode, 2)

    def test_two_runs_compare_clean(self):
        text = SINGLE_QUBIT + 'sweep.r = 0, 0.01\n'
        for name in ('one', 'two'):
            call_command('simulate', 'r-sweep', '--config', self.write_config(text),
                         '--out', str(self.tmp / name), stdout=StringIO())
        stdout = StringIO()
        call_command('compare_records', str(self.tmp / 'one'), str(self.tmp / 'two'),
                     '--tolerance', '0', stdout=stdout)
        self.assertIn('All deviations within 0', stdout.getvalue())

    def write_config(self, text):
        path = self.tmp / 'experiment.cfg'
        path.write_text(text, encoding='utf-8')
        return str(path)
