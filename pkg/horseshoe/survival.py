"""
Forward survival of the map: escape time grids over V, attractor samples,
orbit traces and Lyapunov exponents.

Escape times count iterates: a cell whose centre ``p_0`` has ``p_0, …, p_n``
in V has survived ``n`` iterations, otherwise its entry is the smallest
``j`` with ``p_j`` in U::

    >>> import math
    >>> params = MapParams(a=0.2, b=0.005, c=3, d=2, gamma=math.sqrt(2))
    >>> survived_fraction(escape_time_grid(params, 15, (60, 60)))
    0.0
"""

import logging
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from . import conf
from .exceptions import AllEscaped
from .exceptions import NoBoundary
from .exceptions import OrbitEscaped
from .exceptions import PreconditionError
from .mapcore import MapParams
from .mapcore import PhasePoint
from .mapcore import THETA_MAX
from .mapcore import THETA_MIN
from .mapcore import domain_intervals
from .mapcore import normalize_angle
from .mapcore import step
from .parallel import chunked
from .parallel import parallel_map


logger = logging.getLogger(__name__)

SURVIVED = int(np.iinfo(np.int32).max)
"""
Escape time of cells that stayed in V for all iterations.
"""

ROWS_PER_CHUNK = 8
SEEDS_PER_CHUNK = 4096


@dataclass
class EscapeGrid:
    """
    First escape iteration per cell. Rows are z, columns are θ, cell values
    belong to the cell centres.
    """

    theta_res: int
    z_res: int
    theta_range: tuple
    z_range: tuple
    n: int
    escape_iter: np.ndarray = field(repr=False)

    @property
    def theta_centers(self):
        lo, hi = self.theta_range
        return lo + (np.arange(self.theta_res) + 0.5) * (hi - lo) / self.theta_res

    @property
    def z_centers(self):
        lo, hi = self.z_range
        return lo + (np.arange(self.z_res) + 0.5) * (hi - lo) / self.z_res

    @property
    def survivors(self):
        """
        Boolean mask of SURVIVED cells.
        """
        return self.escape_iter == SURVIVED

    def rows(self):
        """
        Row major ``(θ, z, escape_iter)`` tuples, ``'survived'`` for SURVIVED.
        """
        thetas = self.theta_centers
        for i, z in enumerate(self.z_centers):
            for j, theta in enumerate(thetas):
                value = int(self.escape_iter[i, j])
                yield theta, z, 'survived' if value == SURVIVED else value


@dataclass
class OrbitTrace:
    """
    Points of one orbit. If the orbit escaped, ``escaped_at`` is the index of
    its first point in U, which is the last point recorded, so
    ``len(points) == escaped_at + 1``.
    """

    points: list
    escaped_at: int = None
    lyapunov: float = None

    def __len__(self):
        return len(self.points)

    def rows(self):
        for i, p in enumerate(self.points):
            yield i, p.theta, p.z


@dataclass
class RegimeReport:
    """
    Outcome of :func:`classify_regime`.

    ``regime`` is one of ``'horseshoe-certified'``, ``'full-escape'``,
    ``'sink'``, ``'chaotic'`` or ``'inconclusive'``.
    """

    param_a: float
    regime: str
    survived_fraction: float
    lyapunov: float = None
    period: int = None
    orbit: list = None
    multipliers: list = None
    certified: bool = None

    NOTES = {
        'full-escape': 'horseshoe-only candidate',
        'sink': 'attracting periodic orbit',
        'chaotic': 'tangency candidate',
        'horseshoe-certified': 'full shift on countably many symbols',
        'inconclusive': 'no decision at this resolution',
    }

    def summary(self):
        return 'regime: {} ({})'.format(self.regime, self.NOTES[self.regime])

    def as_dict(self):
        return {
            'a': self.param_a,
            'regime': self.regime,
            'survived_fraction': self.survived_fraction,
            'lyapunov': self.lyapunov,
            'period': self.period,
            'orbit': self.orbit,
            'multipliers': self.multipliers,
            'certified': self.certified,
        }


def bounding_box(params):
    """
    θ range of V over ``z ∈ [-1, 1]``; the full circle for multi strip
    profiles or when V contains whole circles.
    """
    try:
        strips = domain_intervals(params, -1.0) + domain_intervals(params, 1.0)
    except NoBoundary:
        return (THETA_MIN, THETA_MAX)
    if len(strips) != 2 or not strips:
        return (THETA_MIN, THETA_MAX)
    return (min(s[0] for s in strips), max(s[1] for s in strips))


def _resolution(resolution):
    if resolution is None:
        resolution = conf.get('GRID_RESOLUTION')
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    theta_res, z_res = (int(r) for r in resolution)
    if theta_res < 2 or z_res < 2:
        raise PreconditionError('resolution >= 2 per axis required')
    return theta_res, z_res


def _escape_block(job):
    params, n, thetas, zs = job
    theta, z = np.meshgrid(thetas, zs)
    theta, z = theta.ravel(), z.ravel()
    result = np.full(theta.size, SURVIVED, dtype=np.int32)
    index = np.arange(theta.size)
    for j in range(n + 1):
        F = params.F(theta, z)
        out = ~(F > params.escape_floor)
        result[index[out]] = j
        alive = ~out
        index, theta, z, F = index[alive], theta[alive], z[alive], F[alive]
        if j == n or not index.size:
            break
        theta = normalize_angle(theta + params.a - params.d * np.log(F))
        z = params.b * F ** params.gamma
    return result.reshape(len(zs), len(thetas))


def escape_time_grid(params, n, resolution=None, theta_range=None, z_range=(-1.0, 1.0), threads=None):
    """
    Escape times of a grid of cell centres.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param int n: iterations, ``n ≥ 1``
    :param resolution: ``(theta_res, z_res)`` or a single count, defaults to
        ``HORSESHOE_GRID_RESOLUTION``
    :param theta_range: θ interval, the bounding box of V by default
    :param z_range: z interval
    :param int threads: worker count
    :return: :class:`EscapeGrid`
    :raises PreconditionError: on ``n < 1`` or a resolution below 2
    """
    if n < 1:
        raise PreconditionError('n >= 1 required, got {}'.format(n))
    theta_res, z_res = _resolution(resolution)
    theta_range = tuple(theta_range or bounding_box(params))
    grid = EscapeGrid(theta_res, z_res, theta_range, tuple(z_range), n, None)
    thetas, zs = grid.theta_centers, grid.z_centers
    # Chunks depend on the grid only, never on the worker count.
    jobs = [(params, n, thetas, zs[lo:hi]) for lo, hi in chunked(z_res, math.ceil(z_res / ROWS_PER_CHUNK))]
    logger.debug('escape grid %dx%d, n=%d, %d chunks', theta_res, z_res, n, len(jobs))
    grid.escape_iter = np.vstack(parallel_map(_escape_block, jobs, threads))
    logger.info('escape grid a=%g n=%d survived %.6f', params.a, n, survived_fraction(grid))
    return grid


def survived_fraction(grid):
    """
    Fraction of SURVIVED cells.
    """
    return float(np.count_nonzero(grid.survivors)) / grid.escape_iter.size


def band_count(grid, axis='theta'):
    """
    Largest number of separate survivor runs along one axis: ``'theta'``
    counts runs within a row (vertical strips), ``'z'`` within a column
    (horizontal bands).
    """
    mask = grid.survivors.astype(np.int8)
    if axis == 'z':
        mask = mask.T
    elif axis != 'theta':
        raise PreconditionError('axis must be theta or z')
    starts = np.diff(np.pad(mask, ((0, 0), (1, 0))), axis=1) == 1
    return int(starts.sum(axis=1).max()) if mask.size else 0


def horizontal_band_count(grid):
    """
    Number of horizontal survivor bands, see :func:`band_count`.
    """
    return band_count(grid, axis='z')


def seed_lattice(params, seeds, rng_seed=0):
    """
    Uniform lattice of about *seeds* points over the bounding box of V,
    restricted to V. A nonzero *rng_seed* jitters every point inside its cell.

    :return: arrays ``(theta, z)``
    """
    side = max(2, int(round(math.sqrt(seeds))))
    lo, hi = bounding_box(params)
    dt, dz = (hi - lo) / side, 2.0 / side
    theta, z = np.meshgrid(lo + (np.arange(side) + 0.5) * dt, -1.0 + (np.arange(side) + 0.5) * dz)
    theta, z = theta.ravel(), z.ravel()
    if rng_seed:
        rng = np.random.default_rng(rng_seed)
        theta = theta + rng.uniform(-0.5, 0.5, theta.size) * dt
        z = z + rng.uniform(-0.5, 0.5, z.size) * dz
    inside = params.F(theta, z) > params.escape_floor
    return theta[inside], z[inside]


def _iterate_block(job):
    params, theta, z, burn_in, keep = job
    for _ in range(burn_in):
        F = params.F(theta, z)
        alive = F > params.escape_floor
        theta, z, F = theta[alive], z[alive], F[alive]
        theta = normalize_angle(theta + params.a - params.d * np.log(F))
        z = params.b * F ** params.gamma
    collected = list()
    for _ in range(keep):
        F = params.F(theta, z)
        alive = F > params.escape_floor
        theta, z, F = theta[alive], z[alive], F[alive]
        theta = normalize_angle(theta + params.a - params.d * np.log(F))
        z = params.b * F ** params.gamma
        collected.append(np.column_stack([theta, z]))
    return np.vstack(collected) if collected else np.empty((0, 2))


def attractor_sample(params, burn_in=None, keep=None, seeds=None, rng_seed=0, threads=None):
    """
    Sample of Λ: images of a seed lattice over V after *burn_in* iterations,
    *keep* images per surviving seed.

    :return: array of ``(θ, z)`` rows
    :raises PreconditionError: if a count is below 1
    :raises AllEscaped: if no seed survives the burn-in
    """
    burn_in = conf.get('BURN_IN') if burn_in is None else burn_in
    keep = conf.get('KEEP') if keep is None else keep
    seeds = conf.get('ATTRACTOR_SEEDS') if seeds is None else seeds
    if min(burn_in, keep, seeds) < 1:
        raise PreconditionError('burn_in, keep and seeds must be >= 1')
    theta, z = seed_lattice(params, seeds, rng_seed)
    jobs = [
        (params, theta[lo:hi], z[lo:hi], burn_in, keep)
        for lo, hi in chunked(theta.size, math.ceil(theta.size / SEEDS_PER_CHUNK))
    ]
    points = np.vstack(parallel_map(_iterate_block, jobs, threads) or [np.empty((0, 2))])
    if not len(points):
        raise AllEscaped('no seed survived {} iterations'.format(burn_in))
    logger.info('attractor sample a=%g: %d points', params.a, len(points))
    return points


def _tangent_logs(params, seed, n):
    """
    Per step logarithmic growth of a renormalized tangent vector.
    """
    if n < 1:
        raise PreconditionError('n >= 1 required, got {}'.format(n))
    theta, z = seed
    v1, v2 = 1.0, 0.0
    a, b, d, k, gamma = params.a, params.b, params.d, params.k, params.gamma
    logs = np.empty(n)
    for i in range(n):
        F = params.F(theta, z)
        if not F > params.escape_floor:
            raise OrbitEscaped('orbit escaped at step {}'.format(i), step=i)
        F_theta = params.F_theta(theta)
        scale = gamma * b * F ** (gamma - 1.0)
        u1 = (1.0 - d * F_theta / F) * v1 - d * k / F * v2
        u2 = scale * F_theta * v1 + scale * k * v2
        norm = math.hypot(u1, u2)
        logs[i] = math.log(norm)
        v1, v2 = u1 / norm, u2 / norm
        theta = normalize_angle(theta + a - d * math.log(F))
        z = b * F ** gamma
    return logs


def lyapunov_exponent(params, seed, n):
    """
    Largest Lyapunov exponent along the orbit of *seed*: the mean log growth
    of a tangent vector pushed by the Jacobian and renormalized every step.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param seed: :class:`~horseshoe.mapcore.PhasePoint`
    :param int n: iterations, ``n ≥ 1``
    :return: float
    :raises PreconditionError: if ``n < 1``
    :raises OrbitEscaped: if the orbit leaves V before n steps
    """
    return float(np.mean(_tangent_logs(params, seed, n)))


def lyapunov_bootstrap(params, seed, n, blocks=20):
    """
    Lyapunov estimate with the standard error of its block means.

    :return: ``(estimate, standard_error)``
    """
    logs = _tangent_logs(params, seed, n)
    blocks = max(2, min(blocks, n))
    means = np.array([chunk.mean() for chunk in np.array_split(logs, blocks)])
    return float(logs.mean()), float(means.std(ddof=1) / math.sqrt(blocks))


def orbit_trace(params, seed, n, with_lyapunov=False):
    """
    Iterate *seed* up to *n* times or until it escapes.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param seed: :class:`~horseshoe.mapcore.PhasePoint`
    :param int n: iterations
    :param bool with_lyapunov: estimate the exponent of non escaping orbits
    :return: :class:`OrbitTrace`
    """
    points = [seed]
    theta, z = seed
    escaped_at = None
    for i in range(n):
        image = step(params, theta, z)
        if image is None:
            escaped_at = i
            break
        theta, z = normalize_angle(image[0]), image[1]
        points.append(PhasePoint(theta, z))
    trace = OrbitTrace(points, escaped_at)
    if escaped_at is None and not params.F(theta, z) > params.escape_floor:
        trace.escaped_at = n
    if with_lyapunov and trace.escaped_at is None and n >= 1:
        trace.lyapunov = lyapunov_exponent(params, seed, n)
    return trace


def detect_period(trace, tol=None, cap=None):
    """
    Smallest p such that the last point of *trace* repeats the point p steps
    earlier within *tol* in both coordinates.

    :return: int or None
    """
    tol = conf.get('PERIOD_TOL') if tol is None else tol
    cap = conf.get('PERIOD_CAP') if cap is None else cap
    points = trace.points
    last = points[-1]
    for p in range(1, min(cap, len(points) - 1) + 1):
        if last.distance(points[-1 - p]) < tol:
            return p
    return None


def classify_regime(params, n=100, resolution=200, burn_in=None, samples=None, certify=False, threads=None):
    """
    Classify one parameter value from an escape grid, the behaviour of a
    surviving orbit and, optionally, the horseshoe certificate.

    :return: :class:`RegimeReport`
    """
    from .periodic import find_periodic_orbits

    burn_in = conf.get('BURN_IN') if burn_in is None else burn_in
    samples = samples or 10 * burn_in
    grid = escape_time_grid(params, n, resolution, threads=threads)
    fraction = survived_fraction(grid)
    report = RegimeReport(params.a, 'inconclusive', fraction)

    if certify:
        from .certifier import certify_horseshoe
        report.certified = certify_horseshoe(params).certified

    if fraction == 0:
        report.regime = 'horseshoe-certified' if report.certified else 'full-escape'
        return report

    rows, cols = np.nonzero(grid.survivors)
    seed = PhasePoint(grid.theta_centers[cols[0]], grid.z_centers[rows[0]])
    trace = orbit_trace(params, seed, burn_in)
    if trace.escaped_at is not None:
        return report
    seed = trace.points[-1]
    try:
        report.lyapunov = lyapunov_exponent(params, seed, samples)
    except OrbitEscaped:
        return report

    if report.lyapunov < 0:
        trace = orbit_trace(params, seed, burn_in)
        period = detect_period(trace)
        if period:
            records = find_periodic_orbits(params, period, seeds=[trace.points[-1]])
            sinks = [r for r in records if r.kind == 'sink']
            if sinks:
                report.regime = 'sink'
                report.period = period
                report.orbit = [[p.theta, p.z] for p in sinks[0].orbit]
                report.multipliers = [[m.real, m.imag] for m in sinks[0].multipliers]
    elif report.lyapunov > 0:
        report.regime = 'chaotic'
    logger.info('a=%g classified as %s', params.a, report.regime)
    return report
