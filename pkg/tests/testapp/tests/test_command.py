import json
import math
import os
import re
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from horseshoe import __version__
from horseshoe.artifacts import ArtifactSet
from horseshoe.artifacts import csv_text
from horseshoe.artifacts import json_text
from horseshoe.cli import main
from horseshoe.exceptions import ConfigError
from horseshoe.exceptions import PreconditionError
from horseshoe.manifolds import tangency_brackets
from horseshoe.mapcore import MapParams
from horseshoe.runconfig import parse_config

from .test_certifier import WIDE
from .test_certifier import centred_a


ESCAPE = ['a=0.2', 'b=0.005', 'c=3', 'd=2', 'gamma=1.41421356']
SINK = ['a=2', 'b=0.005', 'c=3', 'd=2', 'gamma=1.41421356']

HEADER = re.compile(r'^# django-horseshoe (\S+) config=([0-9a-f]{64})$')


def run(*args, **options):
    out, err = StringIO(), StringIO()
    call_command('horseshoe', *args, stdout=out, stderr=err, **options)
    return out.getvalue().strip()


class ParseConfigTestCase(SimpleTestCase):

    def test_01_text(self):
        config = parse_config(
            '# escape times\n'
            'command = escape-map\n'
            'a = 0.2   # shift\n'
            'b = 0.005\nc = 3\nd = 2\ngamma = 1.41421356\n'
            'resolution = 40x30\n',
            ['n=15', 'phi=sin+sin3'],
        )
        self.assertEqual(config.command, 'escape-map')
        self.assertEqual(config.resolution, (40, 30))
        self.assertEqual(config.n, 15)
        self.assertEqual(config.k, 1.0)
        self.assertEqual(config.stem, 'escape-map')
        self.assertEqual(config.map_params().forcing.fourier_sin, (1.0, 0.0, 1.0))
        self.assertIn('a = 0.2\n', config.text())

    def test_02_digest(self):
        base = parse_config('command = orbit\n' + '\n'.join(SINK))
        same = parse_config('\n'.join(reversed(SINK)) + '\ncommand = orbit', ['threads=4', 'output=/tmp/x'])
        other = parse_config('command = orbit\n' + '\n'.join(SINK), ['n=5'])
        self.assertEqual(base.digest, same.digest)
        self.assertNotEqual(base.digest, other.digest)

    def test_03_config_errors(self):
        for text, overrides, lineno in (
            ('command = orbit\nbogus = 1', None, 2),
            ('command = orbit\na 0.2', None, 2),
            ('command = orbit\nn = 1.5', None, 2),
            ('command = orbit\nn = 1\nn = 2', None, 3),
            ('', ['command=orbit', 'lyapunov=maybe'], None),
            ('', ['a=1'], None),
            ('command = plot', None, None),
        ):
            with self.assertRaises(ConfigError) as cm:
                parse_config(text, overrides)
            self.assertEqual(cm.exception.lineno, lineno)
            self.assertEqual(cm.exception.exit_code, 2)
        with self.assertRaises(ConfigError) as cm:
            parse_config('', ['command=orbit', 'resolution=1x2x3'])
        self.assertTrue(str(cm.exception).startswith('argument 2: '))

    def test_04_preconditions(self):
        for overrides in (
            ESCAPE[:-1] + ['gamma=0.9'],
            ESCAPE[:-1],
            ESCAPE + ['z=1.5'],
            ESCAPE + ['threads=0'],
            ESCAPE + ['resolution=1'],
            ESCAPE + ['n=0'],
        ):
            with self.assertRaises(PreconditionError):
                parse_config('command = escape-map', overrides)
        with self.assertRaises(PreconditionError):
            parse_config('command = scan', ESCAPE + ['a_lo=2', 'a_hi=1'])
        with self.assertRaises(PreconditionError):
            parse_config('command = tangency', ESCAPE + ['a_lo=1', 'a_hi=2'])
        with self.assertRaises(PreconditionError):
            parse_config('command = fixed-points', ESCAPE + ['m_min=0'])
        with self.assertRaises(PreconditionError):
            parse_config('command = melnikov', ['system=duffing'])
        with self.assertRaises(PreconditionError):
            parse_config('command = melnikov', ['f=x^2'])

    def test_05_systems(self):
        config = parse_config('command = melnikov', ['system=folium-dissipative', 'delta=0.3', 'rho=auto'])
        self.assertIsNone(config.rho)
        system = config.system()
        self.assertEqual(system.name, 'folium-dissipative')
        self.assertAlmostEqual(system.alpha, 1.3)
        self.assertTrue(system.shootable)
        config = parse_config('command = melnikov', ['alpha=1.2', 'beta=1', 'f=y^2', 'g=-x^2', 'A=y^2', 'rho=0.5'])
        system = config.system()
        self.assertEqual(system.rho, 0.5)
        self.assertEqual(system.shoot_range, (-2.0, 2.0))
        self.assertEqual(system.f.terms, {(0, 2): 1.0})


class ArtifactTestCase(SimpleTestCase):

    def test_01_csv(self):
        text = csv_text(('x', 'y'), [(0.1, 2), dict(x=float('inf'), y='s')], 'f' * 64)
        lines = text.splitlines()
        self.assertEqual(lines[0], '# django-horseshoe {} config={}'.format(__version__, 'f' * 64))
        self.assertEqual(lines[1:], ['x,y', '0.1,2', 'inf,s'])

    def test_02_json(self):
        data = json.loads(json_text(dict(value=float('nan'), pair=(1, 2), nested={1: 0.5}), 'e' * 64))
        self.assertEqual(data['value'], 'nan')
        self.assertEqual(data['pair'], [1, 2])
        self.assertEqual(data['nested'], {'1': 0.5})
        self.assertEqual(data['_meta'], dict(tool='django-horseshoe', version=__version__, config='e' * 64))

    def test_03_staging(self):
        with tempfile.TemporaryDirectory() as tmp:
            artifacts = ArtifactSet(tmp, 'run', 'a = 1\n', 'd' * 64)
            artifacts.add_json('result', dict(ok=True))
            self.assertEqual(len(artifacts), 2)
            self.assertEqual(os.listdir(tmp), [])
            paths = artifacts.commit()
            self.assertEqual(sorted(p.name for p in paths), ['run.config.txt', 'run.result.json'])
            self.assertEqual(sorted(os.listdir(tmp)), ['run.config.txt', 'run.result.json'])


class CommandTestCase(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_01_escape_map(self):
        summary = run('command=escape-map', 'n=15', 'resolution=60', *ESCAPE, output=str(self.tmp))
        self.assertEqual(summary, 'regime: full-escape (horseshoe-only candidate)')
        self.assertEqual(
            sorted(os.listdir(self.tmp)),
            ['escape-map.config.txt', 'escape-map.escape.csv', 'escape-map.escape.json'],
        )
        lines = (self.tmp / 'escape-map.escape.csv').read_text().splitlines()
        version, digest = HEADER.match(lines[0]).groups()
        self.assertEqual(version, __version__)
        self.assertEqual(lines[1], 'theta,z,escape_iter')
        self.assertEqual(len(lines), 2 + 60 * 60)
        self.assertNotIn('survived', ''.join(lines[2:]))

        config = (self.tmp / 'escape-map.config.txt').read_text().splitlines()
        self.assertEqual(config[0], lines[0])
        self.assertIn('command = escape-map', config)
        self.assertIn('n = 15', config)

        data = json.loads((self.tmp / 'escape-map.escape.json').read_text())
        self.assertEqual(data['survived_fraction'], 0.0)
        self.assertEqual(data['_meta']['config'], digest)

    def test_02_threads_do_not_change_output(self):
        args = ['command=escape-map', 'n=30', 'resolution=50x40', 'stem=grid'] + SINK
        run(*args, output=str(self.tmp / 'one'), threads=1)
        run(*args, output=str(self.tmp / 'two'), threads=2)
        for name in ('grid.escape.csv', 'grid.escape.json'):
            self.assertEqual(
                (self.tmp / 'one' / name).read_bytes(),
                (self.tmp / 'two' / name).read_bytes(),
            )

    def test_03_fixed_points(self):
        summary = run('command=fixed-points', 'm_min=0', 'm_max=0', *SINK, output=str(self.tmp))
        self.assertEqual(summary, 'fixed points: 2 (1 saddle, 1 sink)')
        lines = (self.tmp / 'fixed-points.fixed_points.csv').read_text().splitlines()
        self.assertEqual(lines[1], 'm,theta,z,F,l1_re,l1_im,l2_re,l2_im,kind')
        self.assertEqual(sorted(line.rsplit(',', 1)[1] for line in lines[2:]), ['saddle', 'sink'])

    def test_04_orbit(self):
        summary = run('command=orbit', 'theta=1.0', 'n=50', *ESCAPE, output=str(self.tmp))
        self.assertTrue(summary.startswith('orbit: escaped at iteration '))
        lines = (self.tmp / 'orbit.orbit.csv').read_text().splitlines()
        self.assertEqual(lines[1], 'iter,theta,z')

    def test_05_errors(self):
        for args, code in (
            (['command=escape-map', 'bogus=1'], 2),
            (['n=3'], 2),
            (['command=escape-map', 'gamma=0.9'] + ESCAPE[:-1], 3),
            (['command=lyapunov', 'n=100'] + ESCAPE, 1),
        ):
            with self.assertRaises(CommandError) as cm:
                run(*args, output=str(self.tmp))
            self.assertEqual(cm.exception.returncode, code)
        # failed runs write nothing
        self.assertEqual(os.listdir(self.tmp), [])
        with self.assertRaises(CommandError) as cm:
            run(config=str(self.tmp / 'missing.txt'))
        self.assertEqual(cm.exception.returncode, 2)

    def test_06_config_file(self):
        path = self.tmp / 'run.txt'
        path.write_text('command = lyapunov\n' + '\n'.join(SINK) + '\ntheta = 0.6014\nz = 0.0206\nn = 500\n')
        with mock.patch.dict(os.environ, {'HORSESHOE_OUTPUT_DIR': str(self.tmp / 'env')}):
            summary = run('stem=sink', config=str(path), output=str(self.tmp / 'ignored'))
        self.assertTrue(summary.startswith('lyapunov: -'))
        self.assertFalse((self.tmp / 'ignored').exists())
        data = json.loads((self.tmp / 'env' / 'sink.lyapunov.json').read_text())
        self.assertLess(data['lyapunov'], 0)

    def test_07_console_entry_point(self):
        with self.assertRaises(SystemExit) as cm:
            main(['command=escape-map', 'gamma=0.9', '--output', str(self.tmp)] + ESCAPE[:-1])
        self.assertEqual(cm.exception.code, 3)

    def test_08_flags_between_options(self):
        summary = run(
            'command=escape-map', '--output', str(self.tmp), 'n=15', '--threads', '1', 'resolution=20', *ESCAPE,
        )
        self.assertEqual(summary, 'regime: full-escape (horseshoe-only candidate)')
        self.assertIn('escape-map.escape.json', os.listdir(self.tmp))
        with mock.patch('sys.stdout', new_callable=StringIO) as out:
            main(['command=orbit', '--output', str(self.tmp / 'cli'), 'theta=1.0', '--threads', '1', 'n=5'] + SINK)
        self.assertTrue(out.getvalue().startswith('orbit: '))
        self.assertTrue((self.tmp / 'cli' / 'orbit.orbit.csv').exists())


class AnalysisCommandTestCase(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def wide(self, **extra):
        values = dict(WIDE, theta_samples=200, z_samples=21, fold_samples=420, **extra)
        return ['{}={!r}'.format(key, value) for key, value in values.items()]

    def test_01_certify(self):
        summary = run('command=certify', *self.wide(a=centred_a()), output=str(self.tmp))
        self.assertEqual(summary, 'regime: horseshoe-certified (full shift on countably many symbols)')
        data = json.loads((self.tmp / 'certify.certificate.json').read_text())
        self.assertTrue(data['certified'])
        self.assertTrue(data['full_shift'])
        self.assertEqual(len(data['symbols']), 6)
        self.assertEqual(len(data['itineraries']), 36)
        self.assertTrue(all(len(word) == 2 for word in data['itineraries']))

    def test_02_certify_fold_in_V(self):
        summary = run('command=certify', *self.wide(a=centred_a() + math.pi), output=str(self.tmp))
        self.assertTrue(summary.startswith('certificate: not certified'))
        data = json.loads((self.tmp / 'certify.certificate.json').read_text())
        self.assertFalse(data['certified'])
        self.assertNotIn('full_shift', data)

    def test_03_scan(self):
        a = centred_a()
        summary = run(
            'command=scan', 'steps=41', *self.wide(a=0.0, a_lo=a - math.pi, a_hi=a + math.pi),
            output=str(self.tmp),
        )
        data = json.loads((self.tmp / 'scan.scan.json').read_text())
        intervals = data['intervals']
        outcomes = [interval['certified'] for interval in intervals]
        self.assertIn(True, outcomes)
        self.assertIn(False, outcomes)
        # neighbouring runs of equal outcome are merged
        self.assertTrue(all(x != y for x, y in zip(outcomes, outcomes[1:])))
        for before, after in zip(intervals, intervals[1:]):
            self.assertLess(before['a_last'], after['a_first'])
        self.assertTrue(any(i['a_last'] > i['a_first'] for i in intervals if i['certified']))
        self.assertEqual(summary, 'scan: {} certified interval(s) over 41 values of a'.format(outcomes.count(True)))
        lines = (self.tmp / 'scan.scan.csv').read_text().splitlines()
        self.assertEqual(len(lines), 2 + 41)

    def test_04_tangency(self):
        tangency = dict(b=0.005, c=3, d=20, gamma=math.sqrt(2), k=1)
        lo, hi = tangency_brackets(MapParams(a=0.0, **tangency), 1, (0.0, 2 * math.pi), steps=32)[0]
        args = ['{}={!r}'.format(key, value) for key, value in dict(tangency, a=0.0, a_lo=lo, a_hi=hi).items()]
        summary = run('command=tangency', 'm=1', *args, output=str(self.tmp))
        self.assertTrue(summary.startswith('tangency: a*='))
        data = json.loads((self.tmp / 'tangency.tangency.json').read_text())
        self.assertTrue(lo <= data['a_star'] <= hi)
        self.assertLess(abs(data['gap']), 1e-9)
        self.assertEqual(data['saddle_m'], 1)
        self.assertEqual(sorted(data['intersections']), ['above', 'below'])
        self.assertEqual(sorted(data['intersections'].values()), [0, 2])
