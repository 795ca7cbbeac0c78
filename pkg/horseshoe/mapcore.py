"""
The wrapped horseshoe return map
--------------------------------

The map acts on the annulus ``S¹ × [-1, 1]`` with coordinates ``(θ, z)``.
With the forcing profile ``Φ`` and

    𝔽(θ, z) = 1 + c·Φ(θ) + k·z

it reads

    θ₁ = θ + a − d·ln 𝔽,    z₁ = b·𝔽^γ

and is defined on ``V = {𝔽 > 0}``. Points of ``U = {𝔽 ≤ 0}`` escape. Angles
are kept in ``[-π/2, 3π/2)``.

Build the parameters once and pass them to the operations of this module::

    >>> import math
    >>> from horseshoe.mapcore import MapParams, PhasePoint, apply, eval_F
    >>> params = MapParams(a=0.2, b=0.005, c=3, d=2, gamma=math.sqrt(2))
    >>> float(eval_F(params, PhasePoint(0.0, 0.0)))
    1.0
    >>> apply(params, PhasePoint(0.0, 0.0))
    PhasePoint(theta=0.2, z=0.005)
    >>> apply(params, PhasePoint(-math.pi / 2, 0.0))
    Escaped

The boundary of V is a pair of vertical curves. At ``z = 0`` and with the
default profile ``Φ = sin`` they are ``-arcsin(1/3)`` and ``π + arcsin(1/3)``::

    >>> [round(t, 5) for t in domain_boundaries(params, 0.0)]
    [-0.33984, 3.48143]

Between them ``dθ₁/dθ`` increases from ``-∞`` to ``+∞``. Its zero is the
critical curve θ_c, and the strip where ``|dθ₁/dθ| < 2`` is the fold strip
V_f::

    >>> theta_c = critical_theta(params, 0.0)
    >>> abs(float(dtheta1_dtheta(params, theta_c, 0.0))) < 1e-9
    True
    >>> left, right = fold_strip(params, 0.0)
    >>> left < theta_c < right
    True

Forcing profiles other than ``sin`` are built from Fourier coefficients or
from an alias::

    >>> profile = ForcingProfile.from_alias('sin+sin3')
    >>> profile.fourier_sin
    (1.0, 0.0, 1.0)
    >>> params = MapParams(a=1, b=0.005, c=1, d=2, gamma=math.sqrt(2), forcing=profile)
    >>> round(float(eval_F(params, PhasePoint(math.pi / 2, 0.1))), 12)
    1.1
"""

import logging
import math
import re
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from . import conf
from .exceptions import MultipleRoots
from .exceptions import NoBoundary
from .exceptions import NumericDomainError
from .exceptions import PreconditionError


logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
THETA_MIN = -0.5 * math.pi
THETA_MAX = 1.5 * math.pi

ALIASES = {
    'sin': ((1.0,), ()),
    'cos': ((), (1.0,)),
    'sin+sin3': ((1.0, 0.0, 1.0), ()),
}
"""
Named forcing profiles as ``(fourier_sin, fourier_cos)``. Everything else is
parsed term by term, see :meth:`ForcingProfile.from_alias`.
"""

_TERM = re.compile(r'^(?:(?P<coef>[-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\*?)?(?P<kind>sin|cos)(?P<n>[0-9]*)$')


def normalize_angle(theta):
    """
    Map *theta* into ``[-π/2, 3π/2)``. Values already inside are returned
    unchanged. Accepts scalars and arrays.
    """
    if np.ndim(theta) == 0:
        theta = float(theta)
        if THETA_MIN <= theta < THETA_MAX:
            return theta
        wrapped = (theta - THETA_MIN) % TWO_PI + THETA_MIN
        return THETA_MIN if wrapped >= THETA_MAX else wrapped
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= THETA_MIN) & (theta < THETA_MAX)
    wrapped = np.mod(theta - THETA_MIN, TWO_PI) + THETA_MIN
    wrapped = np.where(wrapped >= THETA_MAX, THETA_MIN, wrapped)
    return np.where(inside, theta, wrapped)


def wrap_difference(delta):
    """
    Representative of an angle difference in ``[-π, π)``.
    """
    return (delta + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class ForcingProfile:
    """
    Periodic forcing profile ``Φ(θ) = Σ c_n cos nθ + s_n sin nθ``.

    Coefficients are indexed from the first harmonic: ``fourier_sin[0]`` is
    ``s_1``. The default is the pure ``sin θ`` profile.

    :param fourier_sin: sine coefficients ``s_1, s_2, ...``
    :param fourier_cos: cosine coefficients ``c_1, c_2, ...``
    :raises PreconditionError: if all coefficients vanish
    """

    fourier_sin: tuple = (1.0,)
    fourier_cos: tuple = ()

    def __post_init__(self):
        sin = tuple(float(s) for s in self.fourier_sin)
        cos = tuple(float(c) for c in self.fourier_cos)
        if not any(sin) and not any(cos):
            raise PreconditionError('forcing profile needs a nonzero coefficient')
        if not all(math.isfinite(x) for x in sin + cos):
            raise PreconditionError('forcing coefficients must be finite')
        object.__setattr__(self, 'fourier_sin', sin)
        object.__setattr__(self, 'fourier_cos', cos)

    @classmethod
    def from_alias(cls, text):
        """
        Build a profile from an alias like ``'sin'`` or ``'sin+sin3'`` or from
        a sum of terms ``[coef[*]]sin<n>`` / ``[coef[*]]cos<n>``::

            >>> ForcingProfile.from_alias('0.5*cos2+sin').fourier_cos
            (0.0, 0.5)

        :param str text: alias or term sum
        :return: :class:`ForcingProfile`
        :raises PreconditionError: on an unknown term
        """
        key = text.replace(' ', '').lower()
        if key in ALIASES:
            sin, cos = ALIASES[key]
            return cls(sin, cos)
        sin, cos = dict(), dict()
        for term in filter(None, key.split('+')):
            match = _TERM.match(term)
            if not match:
                raise PreconditionError('unknown forcing term {!r}'.format(term))
            n = int(match['n'] or 1)
            if n < 1:
                raise PreconditionError('harmonics start at 1, got {!r}'.format(term))
            coef = float(match['coef']) if match['coef'] else 1.0
            table = sin if match['kind'] == 'sin' else cos
            table[n] = table.get(n, 0.0) + coef
        return cls.from_tables(sin, cos)

    @classmethod
    def from_tables(cls, sin=None, cos=None):
        """
        Build a profile from ``{harmonic: coefficient}`` mappings.
        """
        sin, cos = sin or dict(), cos or dict()
        def dense(table):
            size = max(table) if table else 0
            return tuple(float(table.get(n, 0.0)) for n in range(1, size + 1))
        return cls(dense(sin), dense(cos))

    @property
    def harmonics(self):
        """
        Highest harmonic with a nonzero coefficient.
        """
        nonzero = [n for n, x in enumerate(self.fourier_sin, 1) if x]
        nonzero += [n for n, x in enumerate(self.fourier_cos, 1) if x]
        return max(nonzero)

    @property
    def first_harmonic_norm(self):
        """
        ``√(c_1² + s_1²)``.
        """
        s1 = self.fourier_sin[0] if self.fourier_sin else 0.0
        c1 = self.fourier_cos[0] if self.fourier_cos else 0.0
        return math.hypot(c1, s1)

    def _terms(self):
        for n, s in enumerate(self.fourier_sin, 1):
            if s:
                yield n, s, 'sin'
        for n, c in enumerate(self.fourier_cos, 1):
            if c:
                yield n, c, 'cos'

    def value(self, theta):
        """
        Φ(θ) for a scalar or an array.
        """
        if np.ndim(theta) == 0:
            theta = float(theta)
            total = 0.0
            for n, coef, kind in self._terms():
                total += coef * (math.sin(n * theta) if kind == 'sin' else math.cos(n * theta))
            return total
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta)
        for n, coef, kind in self._terms():
            total += coef * (np.sin(n * theta) if kind == 'sin' else np.cos(n * theta))
        return total

    def derivative(self, theta):
        """
        Φ'(θ) for a scalar or an array.
        """
        if np.ndim(theta) == 0:
            theta = float(theta)
            total = 0.0
            for n, coef, kind in self._terms():
                total += n * coef * (math.cos(n * theta) if kind == 'sin' else -math.sin(n * theta))
            return total
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta)
        for n, coef, kind in self._terms():
            total += n * coef * (np.cos(n * theta) if kind == 'sin' else -np.sin(n * theta))
        return total

    def second_derivative(self, theta):
        """
        Φ''(θ) for a scalar or an array.
        """
        return -self._weighted_value(theta)

    def _weighted_value(self, theta):
        if np.ndim(theta) == 0:
            theta = float(theta)
            total = 0.0
            for n, coef, kind in self._terms():
                total += n * n * coef * (math.sin(n * theta) if kind == 'sin' else math.cos(n * theta))
            return total
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta)
        for n, coef, kind in self._terms():
            total += n * n * coef * (np.sin(n * theta) if kind == 'sin' else np.cos(n * theta))
        return total

    def max_abs(self, samples=4096):
        """
        Sampled ``max |Φ|``.
        """
        theta = np.linspace(THETA_MIN, THETA_MAX, samples, endpoint=False)
        return float(np.max(np.abs(self.value(theta))))

    def __str__(self):
        terms = ['{:g}*{}{}'.format(coef, kind, n if n > 1 else '') for n, coef, kind in self._terms()]
        return '+'.join(terms)


SINE = ForcingProfile()


@dataclass(frozen=True)
class MapParams:
    """
    Constants of the wrapped horseshoe map.

    :param float a: angular shift (interpreted mod 2π)
    :param float b: contraction amplitude, ``b > 0``
    :param float c: forcing amplitude, ``c > 0``
    :param float d: logarithm gain ``ω/β``, ``d > 0``
    :param float gamma: power ``α/β``, ``γ > 1``
    :param float k: vertical coupling, ``0 < k ≤ 1``
    :param forcing: :class:`ForcingProfile`, pure sine by default
    :param float escape_floor: points with ``𝔽 ≤ escape_floor`` escape
    :raises PreconditionError: if an invariant is violated
    """

    a: float
    b: float
    c: float
    d: float
    gamma: float
    k: float = 1.0
    forcing: ForcingProfile = field(default=SINE)
    escape_floor: float = None

    def __post_init__(self):
        for name in ('a', 'b', 'c', 'd', 'gamma', 'k'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise PreconditionError('{} must be finite'.format(name))
            object.__setattr__(self, name, value)
        if self.escape_floor is None:
            object.__setattr__(self, 'escape_floor', float(conf.get('ESCAPE_FLOOR')))
        if not self.b > 0:
            raise PreconditionError('b > 0 required, got {}'.format(self.b))
        if not self.c > 0:
            raise PreconditionError('c > 0 required, got {}'.format(self.c))
        if not self.d > 0:
            raise PreconditionError('d > 0 required, got {}'.format(self.d))
        if not self.gamma > 1:
            raise PreconditionError('gamma > 1 required, got {}'.format(self.gamma))
        if not 0 < self.k <= 1:
            raise PreconditionError('0 < k <= 1 required, got {}'.format(self.k))
        if not self.escape_floor >= 0:
            raise PreconditionError('escape_floor >= 0 required')

    def with_a(self, a):
        """
        Copy with another angular shift.
        """
        return replace(self, a=a)

    def F(self, theta, z):
        """
        𝔽(θ, z) for scalars or broadcastable arrays.
        """
        return 1.0 + self.c * self.forcing.value(theta) + self.k * z

    def F_theta(self, theta, z=None):
        """
        ∂𝔽/∂θ.
        """
        return self.c * self.forcing.derivative(theta)

    def F_thetatheta(self, theta, z=None):
        return self.c * self.forcing.second_derivative(theta)

    def as_dict(self):
        """
        Flat mapping using the command line key names.
        """
        return {
            'a': self.a, 'b': self.b, 'c': self.c, 'd': self.d,
            'gamma': self.gamma, 'k': self.k, 'phi': str(self.forcing),
            'escape_floor': self.escape_floor,
        }


@dataclass(frozen=True)
class PhasePoint:
    """
    A point ``(θ, z)`` of the annulus. θ is normalized into ``[-π/2, 3π/2)``.
    """

    theta: float
    z: float

    def __post_init__(self):
        object.__setattr__(self, 'theta', normalize_angle(self.theta))
        object.__setattr__(self, 'z', float(self.z))

    def __iter__(self):
        yield self.theta
        yield self.z

    def distance(self, other):
        """
        Max-norm distance with the angle taken mod 2π.
        """
        return max(abs(wrap_difference(self.theta - other.theta)), abs(self.z - other.z))


class _EscapedType:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return 'Escaped'

    def __bool__(self):
        return False

    def __reduce__(self):
        return 'Escaped'


Escaped = _EscapedType()
"""
Returned by :func:`apply` for points of U.
"""


def eval_F(params, p):
    """
    𝔽 at a phase point.

    :param params: :class:`MapParams`
    :param p: :class:`PhasePoint`
    :return: float
    """
    return params.F(p.theta, p.z)


def step(params, theta, z):
    """
    Scalar map step without normalization.

    :return: ``(θ₁, z₁)`` with θ₁ unwrapped, or None if the point escapes
    :raises NumericDomainError: on non-finite values
    """
    F = params.F(theta, z)
    if math.isnan(F):
        raise NumericDomainError('F is not a number at ({}, {})'.format(theta, z))
    if F <= params.escape_floor:
        return None
    theta1 = theta + params.a - params.d * math.log(F)
    z1 = params.b * F ** params.gamma
    if not (math.isfinite(theta1) and math.isfinite(z1)):
        raise NumericDomainError('non-finite image of ({}, {})'.format(theta, z))
    return theta1, z1


def apply(params, p):
    """
    Image of a phase point.

    :param params: :class:`MapParams`
    :param p: :class:`PhasePoint`
    :return: :class:`PhasePoint` or :data:`Escaped`
    :raises NumericDomainError: if the image is not finite
    """
    image = step(params, p.theta, p.z)
    if image is None:
        return Escaped
    return PhasePoint(*image)


def apply_array(params, theta, z, normalize=True):
    """
    Vectorised :func:`apply`.

    :param params: :class:`MapParams`
    :param theta: array of angles
    :param z: array of heights (broadcast against *theta*)
    :param bool normalize: normalize the image angles
    :return: ``(theta1, z1, escaped)``; escaped entries of theta1 and z1 are NaN
    """
    theta, z = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(z, dtype=float))
    F = params.F(theta, z)
    escaped = ~(F > params.escape_floor)
    safe = np.where(escaped, 1.0, F)
    theta1 = theta + params.a - params.d * np.log(safe)
    z1 = params.b * safe ** params.gamma
    if normalize:
        theta1 = normalize_angle(theta1)
    theta1 = np.where(escaped, np.nan, theta1)
    z1 = np.where(escaped, np.nan, z1)
    return theta1, z1, escaped


def jacobian_at(params, theta, z):
    """
    Scalar :func:`jacobian` on plain floats.
    """
    F = params.F(theta, z)
    if not F > 0:
        raise NumericDomainError('jacobian needs F > 0, got {}'.format(F))
    F_theta = params.F_theta(theta)
    F_z = params.k
    scale = params.gamma * params.b * F ** (params.gamma - 1.0)
    return np.array([
        [1.0 - params.d * F_theta / F, -params.d * F_z / F],
        [scale * F_theta, scale * F_z],
    ])


def jacobian(params, p):
    """
    Analytic Jacobian of :func:`apply`::

        [[1 − d·𝔽_θ/𝔽,     −d·𝔽_z/𝔽    ],
         [γb𝔽^(γ−1)·𝔽_θ,   γb𝔽^(γ−1)·𝔽_z]]

    with ``𝔽_z = k``. Its determinant is ``γ·b·𝔽^(γ−1)·𝔽_z``.

    :param params: :class:`MapParams`
    :param p: :class:`PhasePoint`
    :return: 2×2 :class:`numpy.ndarray`
    :raises NumericDomainError: if ``𝔽 ≤ 0``
    """
    return jacobian_at(params, p.theta, p.z)


def jacobian_det(params, theta, z):
    """
    Closed form of ``det(jacobian)``.
    """
    F = params.F(theta, z)
    return params.gamma * params.b * F ** (params.gamma - 1.0) * params.k


def dtheta1_dtheta(params, theta, z):
    """
    ``∂θ₁/∂θ = 1 − d·𝔽_θ/𝔽`` for scalars or arrays.
    """
    return 1.0 - params.d * params.F_theta(theta) / params.F(theta, z)


def d2theta1_dtheta2(params, theta, z):
    """
    ``∂²θ₁/∂θ² = −d·(𝔽_θθ·𝔽 − 𝔽_θ²)/𝔽²``.
    """
    F = params.F(theta, z)
    F_theta = params.F_theta(theta)
    return -params.d * (params.F_thetatheta(theta) * F - F_theta ** 2) / F ** 2


def limit_map(params, theta):
    """
    The one-dimensional limit ``θ ↦ θ + a − d·ln(1 + c·Φ(θ))`` of the map
    as ``b → 0``.

    :return: normalized angle or :data:`Escaped`
    """
    F = params.F(theta, 0.0)
    if F <= params.escape_floor:
        return Escaped
    return normalize_angle(theta + params.a - params.d * math.log(F))


def _refine_root(func, lo, hi, tol=None):
    tol = conf.get('ROOT_TOL') if tol is None else tol
    return brentq(func, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


def domain_intervals(params, z, samples=None):
    """
    All positivity intervals of ``𝔽(·, z)`` on one turn of the circle.

    Each interval ``(θ_l, θ_r)`` has ``θ_l`` in ``[-π/2, 3π/2)`` and
    ``θ_r > θ_l``; ``θ_r`` may exceed ``3π/2`` if the strip wraps.

    :param params: :class:`MapParams`
    :param float z: height
    :param int samples: scan resolution, defaults to ``HORSESHOE_BOUNDARY_SCAN``
    :return: list of pairs sorted by θ_l, empty if 𝔽 ≤ 0 everywhere
    :raises NoBoundary: if 𝔽 > 0 on the whole circle
    """
    samples = samples or conf.get('BOUNDARY_SCAN')
    grid = np.linspace(THETA_MIN, THETA_MAX, samples, endpoint=False)
    values = params.F(grid, z)
    positive = values > 0
    if positive.all():
        raise NoBoundary('F(., {}) has no sign change'.format(z))
    if not positive.any():
        return list()

    def func(t):
        return params.F(t, z)

    h = TWO_PI / samples
    rising, falling = list(), list()
    for j in range(samples):
        nxt = (j + 1) % samples
        if positive[j] == positive[nxt]:
            continue
        root = _refine_root(func, grid[j], grid[j] + h)
        (rising if positive[nxt] else falling).append(root)

    intervals = list()
    for left in rising:
        right = min(falling, key=lambda r: (r - left) % TWO_PI)
        width = (right - left) % TWO_PI
        left = normalize_angle(left)
        intervals.append((left, left + width))
    return sorted(intervals)


def domain_boundaries(params, z, all_strips=False):
    """
    Roots ``(θ_l, θ_r)`` of ``𝔽(·, z) = 0`` bounding the positivity interval.

    For multi strip profiles the strip containing the maximum of 𝔽 is
    returned, or every strip with *all_strips*.

    :param params: :class:`MapParams`
    :param float z: height, ``|z| ≤ 1``
    :param bool all_strips: return the list of all strips
    :return: pair of floats (or list of pairs)
    :raises PreconditionError: if ``|z| > 1``
    :raises NoBoundary: if 𝔽 does not change sign
    """
    if abs(z) > 1:
        raise PreconditionError('|z| <= 1 required, got {}'.format(z))
    intervals = domain_intervals(params, z)
    if not intervals:
        raise NoBoundary('F(., {}) is not positive anywhere'.format(z))
    if all_strips:
        return intervals
    return primary_interval(params, intervals, z)


def primary_interval(params, intervals, z):
    """
    The interval of *intervals* containing the maximum of ``𝔽(·, z)``.
    """
    if len(intervals) == 1:
        return intervals[0]
    def peak(interval):
        grid = np.linspace(interval[0], interval[1], 257)
        return float(np.max(params.F(grid, z)))
    return max(intervals, key=peak)


def _fold_samples(params, z, interval, count=2049):
    """
    Interior samples of the strip with points accumulating at both ends.
    """
    left, right = interval
    width = right - left
    t = np.linspace(0.0, 1.0, count + 2)[1:-1]
    near = 10.0 ** -np.arange(4, 13)
    t = np.unique(np.concatenate([near, t, 1.0 - near]))
    theta = left + width * t
    F = params.F(theta, z)
    keep = F > 0
    theta = theta[keep]
    return theta, dtheta1_dtheta(params, theta, z)


def _fold_function(params, z):
    return lambda t: 1.0 - params.d * params.F_theta(t) / params.F(t, z)


def _bracket(theta, values, level):
    index = np.nonzero(np.diff(np.sign(values - level)))[0]
    if not len(index):
        raise NoBoundary('dtheta1/dtheta does not reach {}'.format(level))
    i = index[0]
    return theta[i], theta[i + 1]


def critical_theta(params, z, interval=None):
    """
    The critical angle θ_c(z): the unique zero of ``dθ₁/dθ`` in
    ``(θ_l, θ_r)``, where ``𝔽 = d·𝔽_θ``.

    :param params: :class:`MapParams`
    :param float z: height
    :param interval: strip ``(θ_l, θ_r)``, the primary strip by default
    :return: normalized angle
    :raises NoBoundary: if the strip does not exist
    :raises MultipleRoots: if ``dθ₁/dθ`` is not monotone on the strip
    """
    interval = interval or domain_boundaries(params, z)
    return normalize_angle(_critical_unwrapped(params, z, interval))


def _critical_unwrapped(params, z, interval):
    theta, g = _fold_samples(params, z, interval)
    if not np.all(np.diff(g) > 0):
        raise MultipleRoots('dtheta1/dtheta is not monotone on ({}, {})'.format(*interval))
    lo, hi = _bracket(theta, g, 0.0)
    return _refine_root(_fold_function(params, z), lo, hi)


def fold_strip(params, z, interval=None):
    """
    The fold strip V_f at height z: the interval around θ_c with
    ``|dθ₁/dθ| < 2``. Endpoints are given in the unwrapped frame of the
    strip, so ``θ⁻ < θ_c < θ⁺`` may extend past ``3π/2``.

    :param params: :class:`MapParams`
    :param float z: height
    :param interval: strip ``(θ_l, θ_r)``, the primary strip by default
    :return: pair ``(θ⁻_f, θ⁺_f)``
    :raises MultipleRoots: if ``dθ₁/dθ`` is not monotone on the strip
    """
    interval = interval or domain_boundaries(params, z)
    theta, g = _fold_samples(params, z, interval)
    if not np.all(np.diff(g) > 0):
        raise MultipleRoots('dtheta1/dtheta is not monotone on ({}, {})'.format(*interval))
    func = _fold_function(params, z)
    lo, hi = _bracket(theta, g, -2.0)
    left = _refine_root(lambda t: func(t) + 2.0, lo, hi)
    lo, hi = _bracket(theta, g, 2.0)
    right = _refine_root(lambda t: func(t) - 2.0, lo, hi)
    return left, right


class DomainPartition:
    """
    The partition of the annulus into V, U and the fold strip V_f as
    functions of z. Values are computed on demand for the primary strip.

    :param params: :class:`MapParams`
    """

    def __init__(self, params):
        self.params = params

    def __repr__(self):
        return 'DomainPartition(params={!r})'.format(self.params)

    def theta_left(self, z):
        return domain_boundaries(self.params, z)[0]

    def theta_right(self, z):
        return domain_boundaries(self.params, z)[1]

    def theta_critical(self, z):
        return critical_theta(self.params, z)

    def vf_bounds(self, z):
        return fold_strip(self.params, z)

    def in_V(self, theta, z):
        """
        Membership in V, vectorised.
        """
        return self.params.F(theta, z) > self.params.escape_floor

    def in_fold(self, theta, z):
        """
        Membership in V_f, vectorised.
        """
        F = self.params.F(theta, z)
        inside = F > self.params.escape_floor
        g = 1.0 - self.params.d * self.params.F_theta(theta) / np.where(inside, F, 1.0)
        return inside & (np.abs(g) < 2.0)
