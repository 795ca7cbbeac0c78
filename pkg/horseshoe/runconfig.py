"""
Run configuration of the ``horseshoe`` command.

A run is described by flat ``key = value`` text; ``#`` starts a comment::

    # escape times after 15 iterations
    command = escape-map
    a = 0.2
    b = 0.005
    c = 3
    d = 2
    gamma = 1.41421356
    n = 15

Command line arguments of the form ``key=value`` override the file. Every
value is checked against the preconditions of the operation it feeds before
any work starts.
"""

import logging
from dataclasses import dataclass
from dataclasses import field

from .artifacts import config_digest
from .exceptions import ConfigError
from .exceptions import PreconditionError
from .mapcore import ForcingProfile
from .mapcore import MapParams
from .systems import SYSTEMS
from .systems import get_system
from .systems import polynomial_system


logger = logging.getLogger(__name__)

COMMANDS = (
    'escape-map', 'orbit', 'attractor', 'lyapunov', 'fixed-points', 'certify',
    'scan', 'tangency', 'melnikov', 'validate', 'regime',
)

MAP_COMMANDS = COMMANDS[:8] + ('regime',)
SYSTEM_COMMANDS = ('melnikov', 'validate')


def _bool(text):
    value = text.lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: {!r}'.format(text))


def _resolution(text):
    parts = text.lower().split('x')
    if len(parts) > 2:
        raise ValueError('resolution is <n> or <theta>x<z>, got {!r}'.format(text))
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    return int(parts[0]), int(parts[1])


def _optional_float(text):
    return None if text.lower() in ('', 'none', 'auto') else float(text)


KEYS = {
    # general
    'command': (str, None),
    'output': (str, None),
    'stem': (str, None),
    'threads': (int, None),
    'rng_seed': (int, 0),
    # map parameters
    'a': (float, None),
    'b': (float, None),
    'c': (float, None),
    'd': (float, None),
    'gamma': (float, None),
    'k': (float, 1.0),
    'phi': (str, 'sin'),
    'escape_floor': (float, 0.0),
    # survival sets
    'n': (int, 100),
    'resolution': (_resolution, None),
    'theta': (float, 0.0),
    'z': (float, 0.0),
    'lyapunov': (_bool, False),
    'blocks': (int, 20),
    'burn_in': (int, None),
    'keep': (int, None),
    'seeds': (int, None),
    'certify': (_bool, False),
    # periodic orbits
    'm_min': (int, None),
    'm_max': (int, None),
    'period': (int, 1),
    # certifier
    'cone_h': (float, 0.01),
    'cone_v': (float, 100.0),
    'theta_samples': (int, None),
    'z_samples': (int, None),
    'fold_samples': (int, None),
    'tree_depth': (int, 2),
    'a_lo': (float, None),
    'a_hi': (float, None),
    'steps': (int, 200),
    # tangency
    'm': (int, None),
    'tol': (float, 1e-10),
    # ODE systems
    'system': (str, None),
    'alpha': (float, None),
    'beta': (float, None),
    'f': (str, '0'),
    'g': (str, '0'),
    'A': (str, None),
    'B': (str, '0'),
    'f_shoot': (str, '0'),
    'g_shoot': (str, '0'),
    'shoot_lo': (float, -2.0),
    'shoot_hi': (float, 2.0),
    'sigma': (float, 1.0),
    'delta': (float, 0.2),
    'kappa': (float, 0.0),
    'forcing': (str, 'sin'),
    'omega': (float, 1.0),
    'rho': (_optional_float, None),
    'mu': (float, 1e-6),
    'epsilon': (float, 0.05),
    'shoot_tol': (float, 1e-9),
    'harmonics': (int, 8),
    'samples': (int, 64),
    't_max': (_optional_float, None),
}
"""
Known keys with their parser and default.
"""

UNHASHED = ('threads', 'output')
"""
Keys that do not change the results and stay out of the config hash.
"""


@dataclass
class RunConfig:
    """
    A validated run configuration.

    :param str command: one of :data:`COMMANDS`
    :param dict values: parsed values of all keys set in the text or by flags
    :param dict raw: the same values as written
    """

    command: str
    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name):
        if name in KEYS:
            values = self.__dict__.get('values', dict())
            return values[name] if name in values else KEYS[name][1]
        raise AttributeError(name)

    def is_set(self, name):
        return name in self.values

    @property
    def stem(self):
        return self.values.get('stem') or self.command

    def map_params(self):
        """
        :class:`~horseshoe.mapcore.MapParams` of the run.
        """
        missing = [key for key in ('a', 'b', 'c', 'd', 'gamma') if not self.is_set(key)]
        if missing:
            raise PreconditionError('map parameters missing: {}'.format(', '.join(missing)))
        return MapParams(
            self.a, self.b, self.c, self.d, self.gamma, self.k,
            forcing=ForcingProfile.from_alias(self.phi),
            escape_floor=self.escape_floor,
        )

    def system(self):
        """
        :class:`~horseshoe.systems.OdeSystem` of the run, built-in by name
        or polynomial from the ``f``, ``g``, ``A``, ``B`` texts.
        """
        common = dict(
            forcing=ForcingProfile.from_alias(self.forcing),
            omega=self.omega, mu=self.mu, epsilon=self.epsilon,
        )
        if self.rho is not None:
            common['rho'] = self.rho
        name = self.values.get('system', 'polynomial')
        if name in SYSTEMS:
            kwargs = dict(sigma=self.sigma, kappa=self.kappa, **common)
            if name == 'folium-dissipative':
                kwargs['delta'] = self.delta
            if self.A is not None:
                kwargs['A'] = self.A
            system = get_system(name, **kwargs)
        elif name == 'polynomial':
            if self.alpha is None or self.beta is None:
                raise PreconditionError('polynomial systems need alpha and beta')
            system = polynomial_system(
                self.alpha, self.beta, self.f, self.g, self.A or '0', self.B,
                f_shoot=self.f_shoot, g_shoot=self.g_shoot,
                shoot_range=(self.shoot_lo, self.shoot_hi), **common
            )
        else:
            raise PreconditionError('unknown system {!r}, choose from polynomial, {}'.format(
                name, ', '.join(SYSTEMS)))
        return system

    def text(self, hashed_only=False):
        """
        The effective configuration as sorted ``key = value`` lines.
        """
        lines = list()
        for key in sorted(self.values):
            if hashed_only and key in UNHASHED:
                continue
            lines.append('{} = {}'.format(key, self.raw.get(key, self.values[key])))
        return '\n'.join(lines) + '\n'

    @property
    def digest(self):
        return config_digest(self.text(hashed_only=True))

    def validate(self):
        """
        Check every option the command uses.

        :raises PreconditionError: on the first violated precondition
        """
        if self.threads is not None and self.threads < 1:
            raise PreconditionError('threads >= 1 required')
        if self.command in MAP_COMMANDS:
            self.map_params()
        if self.command in SYSTEM_COMMANDS:
            self.system()
        for key in ('n', 'blocks', 'steps', 'samples', 'harmonics', 'tree_depth', 'period'):
            if self.is_set(key) and getattr(self, key) < 1:
                raise PreconditionError('{} >= 1 required, got {}'.format(key, getattr(self, key)))
        for key in ('burn_in', 'keep', 'seeds', 'theta_samples', 'z_samples', 'fold_samples'):
            value = getattr(self, key)
            if value is not None and value < 1:
                raise PreconditionError('{} >= 1 required, got {}'.format(key, value))
        if self.resolution is not None and min(self.resolution) < 2:
            raise PreconditionError('resolution >= 2 required')
        if not -1 <= self.z <= 1:
            raise PreconditionError('z must lie in [-1, 1], got {}'.format(self.z))
        if self.command in ('scan', 'tangency'):
            if self.a_lo is None or self.a_hi is None:
                raise PreconditionError('{} needs a_lo and a_hi'.format(self.command))
            if not self.a_lo < self.a_hi:
                raise PreconditionError('a_lo < a_hi required')
        if self.command == 'scan' and self.steps < 2:
            raise PreconditionError('steps >= 2 required')
        if self.command == 'tangency' and self.m is None:
            raise PreconditionError('tangency needs the saddle winding m')
        if self.command == 'fixed-points' and (self.m_min is None) != (self.m_max is None):
            raise PreconditionError('set both m_min and m_max or neither')
        return self


def _parse_value(key, text, lineno):
    if key not in KEYS:
        raise ConfigError('unknown key {!r}'.format(key), lineno)
    parser = KEYS[key][0]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError('bad value {!r} for {}: {}'.format(text, key, exc), lineno)


def _split(line, lineno):
    if '=' not in line:
        raise ConfigError('expected key = value, got {!r}'.format(line), lineno)
    key, value = line.split('=', 1)
    key, value = key.strip(), value.strip()
    if not key:
        raise ConfigError('missing key', lineno)
    return key, value


def parse_config(text='', overrides=None):
    """
    Parse and validate a run configuration.

    :param str text: flat ``key = value`` text
    :param overrides: ``key=value`` strings applied after the text
    :return: :class:`RunConfig`
    :raises ConfigError: on malformed lines, unknown keys or bad values
    :raises PreconditionError: if a value violates a precondition
    """
    raw, values = dict(), dict()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, value = _split(line, lineno)
        if key in raw:
            raise ConfigError('duplicate key {!r}'.format(key), lineno)
        values[key] = _parse_value(key, value, lineno)
        raw[key] = value
    for position, item in enumerate(overrides or list(), 1):
        key, value = _split(item, None)
        try:
            values[key] = _parse_value(key, value, None)
        except ConfigError as exc:
            raise ConfigError('argument {}: {}'.format(position, exc))
        raw[key] = value

    command = values.get('command')
    if command is None:
        raise ConfigError('no command given')
    if command not in COMMANDS:
        raise ConfigError('unknown command {!r}, choose from {}'.format(command, ', '.join(COMMANDS)))
    config = RunConfig(command, values, raw)
    logger.debug('run configuration %s', config.digest)
    return config.validate()
