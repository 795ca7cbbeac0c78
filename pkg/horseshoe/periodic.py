"""
Fixed points and periodic orbits.

A fixed point absorbing ``m`` turns of the angle satisfies
``a − 2πm = d·ln 𝔽``, so ``𝔽 = e^((a − 2πm)/d)`` is known in advance and
only ``c·Φ(θ) = 𝔽_m − 1 − k·z_m`` with ``z_m = b·𝔽_m^γ`` is left to solve.
The roots are polished by Newton's method and classified by the
eigenvalues of the Jacobian.
"""

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import conf
from .exceptions import NotFixed
from .exceptions import PreconditionError
from .mapcore import PhasePoint
from .mapcore import THETA_MAX
from .mapcore import THETA_MIN
from .mapcore import TWO_PI
from .mapcore import jacobian_at
from .mapcore import normalize_angle
from .mapcore import step
from .mapcore import wrap_difference
from .parallel import parallel_map


logger = logging.getLogger(__name__)

KINDS = ('sink', 'saddle', 'source', 'nonhyperbolic')

F_FLOOR = 1e-12

STEP_SLACK = 100.0
"""
Newton accepts a point whose residual has stopped decreasing when its next
step is below ``STEP_SLACK`` times the tolerance. Deep in the saddle family
𝔽 is of order 1e-10 and ln 𝔽 carries rounding noise of about 1e-6.
"""


@dataclass
class FixedPointRecord:
    """
    A classified fixed point.

    :param point: :class:`~horseshoe.mapcore.PhasePoint`
    :param int winding_m: turns absorbed, ``θ₁ = θ + 2π·m`` before normalization
    :param tuple multipliers: eigenvalues, largest modulus first
    :param str kind: one of :data:`KINDS`
    :param float F_value: 𝔽 at the point
    """

    point: PhasePoint
    winding_m: int
    multipliers: tuple
    kind: str
    F_value: float

    def as_dict(self):
        return {
            'm': self.winding_m,
            'theta': self.point.theta,
            'z': self.point.z,
            'F': self.F_value,
            'multipliers': [[l.real, l.imag] for l in self.multipliers],
            'kind': self.kind,
        }

    def row(self):
        (l1, l2) = self.multipliers
        return (self.winding_m, self.point.theta, self.point.z, self.F_value,
                l1.real, l1.imag, l2.real, l2.imag, self.kind)

    @property
    def orbit(self):
        return [self.point]


@dataclass
class PeriodicOrbitRecord:
    """
    A classified periodic orbit of minimal period ``period``.
    """

    period: int
    orbit: list
    winding_m: int
    multipliers: tuple
    kind: str

    @property
    def point(self):
        return self.orbit[0]

    def as_dict(self):
        return {
            'period': self.period,
            'm': self.winding_m,
            'orbit': [[p.theta, p.z] for p in self.orbit],
            'multipliers': [[l.real, l.imag] for l in self.multipliers],
            'kind': self.kind,
        }


def multipliers_of(matrix):
    """
    Eigenvalues of a 2×2 matrix from its trace and determinant, largest
    modulus first. The small one is computed as ``det/λ₁``.
    """
    tr = float(matrix[0, 0] + matrix[1, 1])
    det = float(matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0])
    root = cmath.sqrt(tr * tr - 4.0 * det)
    big = 0.5 * (tr + root) if tr >= 0 else 0.5 * (tr - root)
    if big == 0:
        return (0j, 0j)
    small = det / big
    if abs(small) > abs(big):
        big, small = small, big
    return (complex(big), complex(small))


def kind_of(multipliers, band=None):
    """
    Classify by the moduli of the multipliers; moduli within *band* of 1
    count as nonhyperbolic.
    """
    band = conf.get('HYPERBOLIC_BAND') if band is None else band
    moduli = [abs(l) for l in multipliers]
    if any(abs(r - 1.0) <= band for r in moduli):
        return 'nonhyperbolic'
    below = sum(r < 1.0 for r in moduli)
    if below == 2:
        return 'sink'
    elif below == 0:
        return 'source'
    else:
        return 'saddle'


def _newton(func, x0, tol=None, halvings=None, maxiter=None):
    """
    Damped Newton iteration. *func* returns ``(residual, jacobian)`` or None
    outside the domain. Returns the root or None.
    """
    tol = conf.get('NEWTON_TOL') if tol is None else tol
    halvings = conf.get('NEWTON_HALVINGS') if halvings is None else halvings
    maxiter = conf.get('NEWTON_MAXITER') if maxiter is None else maxiter
    x = np.asarray(x0, dtype=float)
    current = func(x)
    if current is None:
        return None
    for _ in range(maxiter):
        r, J = current
        norm = np.linalg.norm(r)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        for _ in range(halvings + 1):
            trial = func(x + t * dx)
            if trial is not None and (np.linalg.norm(trial[0]) < norm or np.linalg.norm(t * dx) < tol):
                break
            t *= 0.5
        else:
            # no descent left: accept if the residual is rounding noise
            return x if norm < tol or np.linalg.norm(dx) < STEP_SLACK * tol else None
        x, current = x + t * dx, trial
        if np.linalg.norm(t * dx) < tol:
            return x
    r, J = current
    if np.linalg.norm(r) < tol:
        return x
    try:
        return x if np.linalg.norm(np.linalg.solve(J, r)) < STEP_SLACK * tol else None
    except np.linalg.LinAlgError:
        return None


def _fixed_point_residual(params, m):
    target = params.a - TWO_PI * m
    def func(x):
        theta, z = x
        F = params.F(theta, z)
        if not F > 0:
            return None
        F_theta = params.F_theta(theta)
        scale = params.gamma * params.b * F ** (params.gamma - 1.0)
        r = np.array([target - params.d * math.log(F), params.b * F ** params.gamma - z])
        J = np.array([
            [-params.d * F_theta / F, -params.d * params.k / F],
            [scale * F_theta, scale * params.k - 1.0],
        ])
        return r, J
    return func


def winding_F(params, m):
    """
    ``𝔽_m = e^((a − 2πm)/d)``.
    """
    return math.exp((params.a - TWO_PI * m) / params.d)


def winding_range(params, count=3):
    """
    The *count* smallest windings m for which fixed points can exist.
    """
    F_max = 1.0 + params.c * params.forcing.max_abs() + params.k
    m_lo = math.ceil((params.a - params.d * math.log(F_max)) / TWO_PI)
    return (m_lo, m_lo + count - 1)


def _theta_roots(params, m, samples=None):
    samples = samples or conf.get('THETA_SCAN')
    F_m = winding_F(params, m)
    z_m = params.b * F_m ** params.gamma
    target = F_m - 1.0 - params.k * z_m

    def func(t):
        return params.c * params.forcing.value(t) - target

    grid = np.linspace(THETA_MIN, THETA_MAX, samples + 1)
    values = func(grid)
    roots = list()
    for j in np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]:
        if values[j] == 0:
            roots.append(grid[j])
        elif values[j + 1] != 0:
            roots.append(brentq(func, grid[j], grid[j + 1], xtol=conf.get('ROOT_TOL')))
    return [(normalize_angle(t), z_m) for t in roots]


def _dedup(records, radius=None):
    radius = conf.get('DEDUP_RADIUS') if radius is None else radius
    unique = list()
    for record in records:
        if not any(record.point.distance(other.point) < radius for other in unique):
            unique.append(record)
    return unique


def fixed_point_distance(params, p, image=None):
    """
    Estimated distance of *p* from the nearest fixed point: the length of
    one Newton step on ``apply(p) − p``. Small even where the image residual
    is dominated by rounding in ln 𝔽.

    :return: float, ``inf`` if the point escapes or ``J − I`` is singular
    """
    image = image or step(params, p.theta, p.z)
    if image is None:
        return math.inf
    r = np.array([wrap_difference(image[0] - p.theta), image[1] - p.z])
    try:
        return float(np.linalg.norm(np.linalg.solve(jacobian_at(params, p.theta, p.z) - np.eye(2), r)))
    except np.linalg.LinAlgError:
        return math.inf


def classify_fixed_point(params, p, tol=1e-8):
    """
    Classify a fixed point by trace and determinant of its Jacobian.

    The point is accepted if its image moves by at most *tol*, or failing
    that if :func:`fixed_point_distance` is at most *tol*.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param p: :class:`~horseshoe.mapcore.PhasePoint`
    :param float tol: admitted fixed point residual
    :return: :class:`FixedPointRecord`
    :raises NotFixed: if p escapes or is farther than *tol* from a fixed point
    """
    image = step(params, p.theta, p.z)
    if image is None:
        raise NotFixed('{} is not in V'.format(p))
    residual = max(abs(wrap_difference(image[0] - p.theta)), abs(image[1] - p.z))
    if residual > tol:
        distance = fixed_point_distance(params, p, image)
        if distance > tol:
            raise NotFixed('residual {:.3e}, distance {:.3e} exceed {:.1e}'.format(residual, distance, tol))
    F = params.F(p.theta, p.z)
    m = round((params.a - params.d * math.log(F)) / TWO_PI)
    multipliers = multipliers_of(jacobian_at(params, p.theta, p.z))
    return FixedPointRecord(p, int(m), multipliers, kind_of(multipliers), F)


def _solve_winding(params, m):
    records = list()
    for theta, z in _theta_roots(params, m):
        root = _newton(_fixed_point_residual(params, m), (theta, z))
        if root is None:
            logger.warning('newton did not converge at m=%d from theta=%.6f', m, theta)
            continue
        try:
            records.append(classify_fixed_point(params, PhasePoint(*root), tol=1e-10))
        except NotFixed as exc:
            logger.warning('dropped fixed point candidate at m=%d: %s', m, exc)
    return records


def find_fixed_points(params, m_range=None):
    """
    All fixed points with winding ``m`` in *m_range* (inclusive).

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param m_range: pair ``(m_min, m_max)``, :func:`winding_range` by default
    :return: list of :class:`FixedPointRecord`, ordered by m and θ
    """
    m_min, m_max = m_range or winding_range(params)
    if m_max < m_min:
        raise PreconditionError('empty winding range {}'.format(m_range))
    records = list()
    for m in range(m_min, m_max + 1):
        records.extend(sorted(_solve_winding(params, m), key=lambda r: r.point.theta))
    records = _dedup(records)
    logger.info('%d fixed points for m in [%d, %d]', len(records), m_min, m_max)
    return records


def saddle_family_start(d, rule='strict'):
    """
    First winding of the saddle family: the smallest integer ``> 3d``
    (``'strict'``) or ``≥ 3d`` (``'inclusive'``).
    """
    if rule == 'strict':
        return math.floor(3 * d) + 1
    elif rule == 'inclusive':
        return math.ceil(3 * d)
    raise PreconditionError('unknown saddle family rule {!r}'.format(rule))


def find_saddle_family(params, rule='strict', limit=None):
    """
    Saddles ``q_m`` of the deep 𝔽 family, for m from
    :func:`saddle_family_start` upward while ``𝔽_m`` stays above the
    machine floor.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param str rule: ``'strict'`` or ``'inclusive'``
    :param int limit: stop after this many windings (optional)
    :return: list of saddle :class:`FixedPointRecord`
    :raises NotFixed: if no saddle of the family is found
    """
    m = saddle_family_start(params.d, rule)
    records = list()
    count = 0
    while winding_F(params, m) > F_FLOOR and (limit is None or count < limit):
        records.extend(r for r in _solve_winding(params, m) if r.kind == 'saddle')
        m += 1
        count += 1
    start = saddle_family_start(params.d, rule)
    if not records:
        raise NotFixed('no saddle of the family from m={} ({} rule)'.format(start, rule))
    logger.debug('saddle family (%s rule) from m=%d: %d saddles', rule, start, len(records))
    return records


@dataclass
class ParameterSpeed:
    """
    Derivative of a fixed point with respect to a, from implicit
    differentiation and from central differences.
    """

    dtheta_da: float
    dz_da: float
    fd_dtheta_da: float
    fd_dz_da: float


def fixed_point_da(params, record, h=1e-6):
    """
    ``dθ*/da`` and ``dz*/da`` of a fixed point.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param record: :class:`FixedPointRecord`
    :return: :class:`ParameterSpeed`
    """
    m = record.winding_m
    x = np.array([record.point.theta, record.point.z])
    _, J = _fixed_point_residual(params, m)(x)
    # R(θ, z; a) = 0 with ∂R/∂a = (1, 0)
    dtheta, dz = np.linalg.solve(J, [-1.0, 0.0])
    shifted = list()
    for sign in (1, -1):
        root = _newton(_fixed_point_residual(params.with_a(params.a + sign * h), m), x)
        if root is None:
            root = (math.nan, math.nan)
        shifted.append(root)
    (tp, zp), (tm, zm) = shifted
    return ParameterSpeed(float(dtheta), float(dz), (tp - tm) / (2 * h), (zp - zm) / (2 * h))


def _orbit_of(params, theta, z, period):
    """
    Unwrapped orbit ``(θ_i, z_i)`` and Jacobian product, None on escape.
    """
    points = [(theta, z)]
    M = np.eye(2)
    for _ in range(period):
        if not params.F(theta, z) > params.escape_floor:
            return None
        M = jacobian_at(params, theta, z) @ M
        theta, z = step(params, theta, z)
        points.append((theta, z))
    return points, M


def _periodic_residual(params, period):
    def func(x):
        out = _orbit_of(params, x[0], x[1], period)
        if out is None:
            return None
        points, M = out
        theta_p, z_p = points[-1]
        r = np.array([wrap_difference(theta_p - x[0]), z_p - x[1]])
        return r, M - np.eye(2)
    return func


def _periodic_job(job):
    params, period, theta, z = job
    root = _newton(_periodic_residual(params, period), (theta, z))
    if root is None:
        return None
    out = _orbit_of(params, root[0], root[1], period)
    if out is None:
        return None
    points, M = out
    theta_p, z_p = points[-1]
    if max(abs(wrap_difference(theta_p - root[0])), abs(z_p - root[1])) > 1e-10:
        return None
    winding = round((theta_p - root[0]) / TWO_PI)
    orbit = [PhasePoint(t, z) for t, z in points[:-1]]
    return orbit, int(winding), multipliers_of(M)


def _minimal_period(orbit, radius):
    first = orbit[0]
    for q in range(1, len(orbit)):
        if len(orbit) % q == 0 and first.distance(orbit[q]) < radius:
            return q
    return len(orbit)


def find_periodic_orbits(params, period, seeds=None, seed_count=100, threads=None):
    """
    Periodic orbits of minimal period *period* by Newton's method on
    ``𝓕^period − id`` from a set of seeds.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param int period: ``1 ≤ period ≤ HORSESHOE_PERIOD_CAP``
    :param seeds: iterable of :class:`~horseshoe.mapcore.PhasePoint`, a lattice
        of *seed_count* points over V by default
    :return: list of :class:`PeriodicOrbitRecord`
    :raises PreconditionError: on a period outside the admitted range
    """
    from .survival import seed_lattice

    if not 1 <= period <= conf.get('PERIOD_CAP'):
        raise PreconditionError('period must be in [1, {}]'.format(conf.get('PERIOD_CAP')))
    if seeds is None:
        seeds = zip(*seed_lattice(params, seed_count))
    jobs = [(params, period, float(t), float(z)) for t, z in seeds]
    radius = conf.get('DEDUP_RADIUS')
    records = list()
    for result in parallel_map(_periodic_job, jobs, threads):
        if result is None:
            continue
        orbit, winding, multipliers = result
        if _minimal_period(orbit, radius) != period:
            continue
        if any(min(p.distance(orbit[0]) for p in r.orbit) < radius for r in records):
            continue
        records.append(PeriodicOrbitRecord(period, orbit, winding, multipliers, kind_of(multipliers)))
    logger.info('%d orbits of period %d from %d seeds', len(records), period, len(jobs))
    return records


def basin_check(params, record, lattice=10, radius=1e-3, iterations=None, tol=1e-6):
    """
    Fraction of a ``lattice × lattice`` square of seeds of half width
    *radius* around a sink that converges to its orbit.

    :param record: :class:`FixedPointRecord` or :class:`PeriodicOrbitRecord`
    :return: float in ``[0, 1]``
    """
    iterations = conf.get('BURN_IN') if iterations is None else iterations
    offsets = np.linspace(-radius, radius, lattice)
    orbit = record.orbit
    converged = 0
    for dt in offsets:
        for dz in offsets:
            theta, z = record.point.theta + dt, record.point.z + dz
            for _ in range(iterations):
                image = step(params, theta, z)
                if image is None:
                    break
                theta, z = normalize_angle(image[0]), image[1]
            else:
                p = PhasePoint(theta, z)
                converged += min(p.distance(q) for q in orbit) < tol
    return converged / lattice ** 2
