"""
Invariant curves of saddle fixed points and homoclinic tangencies.

Stable curves are integral curves of the most contracted direction field
``e_n``: the unit vector least stretched by the product of the Jacobians
along the next ``n`` iterates. Unstable curves are grown by iterating a
short segment along the unstable eigenvector. The image of the unstable
curve through the fold strip has a tip, the point of smallest θ₁; its
signed distance to the stable curve is the tangency gap, whose zeros in
the parameter ``a`` are homoclinic tangencies.
"""

import logging
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.optimize import minimize_scalar

from . import conf
from .exceptions import DegenerateConformal
from .exceptions import FoldNotFound
from .exceptions import NoBracket
from .exceptions import PreconditionError
from .mapcore import PhasePoint
from .mapcore import TWO_PI
from .mapcore import _critical_unwrapped
from .mapcore import apply_array
from .mapcore import domain_boundaries
from .mapcore import jacobian_at
from .mapcore import normalize_angle
from .mapcore import step
from .mapcore import wrap_difference
from .periodic import _solve_winding
from .periodic import winding_F


logger = logging.getLogger(__name__)


def _accumulate(Mu, Mv, A):
    """
    Push the column pair through A and rescale both by their common size.
    Returns the new pair and the log of the scale factor.
    """
    Mu = A @ Mu
    Mv = A @ Mv
    scale = max(math.hypot(*Mu), math.hypot(*Mv))
    if scale == 0 or not math.isfinite(scale):
        raise DegenerateConformal('matrix product degenerated to scale {}'.format(scale))
    return Mu / scale, Mv / scale, math.log(scale)


def _contracted(Mu, Mv, log_scale=0.0, floor=None):
    """
    Most contracted direction and singular values of the matrix with
    columns Mu, Mv times ``exp(log_scale)``.
    """
    floor = conf.get('DEGENERACY_FLOOR') if floor is None else floor
    uu, vv, uv = Mu @ Mu, Mv @ Mv, Mu @ Mv
    B = uu + vv
    wedge = Mu[0] * Mv[1] - Mu[1] * Mv[0]
    C = wedge * wedge
    disc = B * B - 4.0 * C
    if disc <= floor * B * B:
        raise DegenerateConformal('every direction is equally contracted')
    root = math.sqrt(disc)
    small = 2.0 * C / (B + root)
    large = B - small
    # rows of MᵀM − λ·I, the longer one is the better conditioned
    first = np.array([vv - small, -uv])
    second = np.array([-uv, uu - small])
    e = first if np.hypot(*first) >= np.hypot(*second) else second
    norm = math.hypot(*e)
    if norm == 0:
        e = np.array([0.0, 1.0])
    else:
        e = e / norm
    if e[0] < 0 or (e[0] == 0 and e[1] < 0):
        e = -e
    factor = math.exp(log_scale)
    return e, (math.sqrt(small) * factor, math.sqrt(large) * factor)


def most_contracted_direction(matrices):
    """
    The unit vector e minimizing ``|M e|`` for the product
    ``M = A_{n-1} ··· A_1 A_0`` of *matrices* (``A_0`` applied first) and
    the singular values of M.

    The product is accumulated through its columns with a common rescaling
    per factor, so the direction of a long product neither over- nor
    underflows::

        >>> e, (small, large) = most_contracted_direction([np.diag([2.0, 0.5])])
        >>> e.tolist(), round(small, 12), round(large, 12)
        ([0.0, 1.0], 0.5, 2.0)

    :param matrices: sequence of 2×2 arrays
    :return: ``(e, (σ_min, σ_max))``, e sign normalized to a positive θ
        component (positive z component if the θ component vanishes)
    :raises DegenerateConformal: if M is a multiple of an orthogonal matrix
    """
    Mu, Mv = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    log_scale = 0.0
    for A in matrices:
        Mu, Mv, ls = _accumulate(Mu, Mv, np.asarray(A, dtype=float))
        log_scale += ls
    return _contracted(Mu, Mv, log_scale)


class DirectionField:
    """
    The most contracted direction field ``e_n`` of the map.

    The order is truncated where the orbit of the evaluation point leaves V,
    and the accumulation stops early once consecutive directions agree to
    ``HORSESHOE_DIRECTION_TOL``.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param int order_n: number of Jacobian factors
    """

    def __init__(self, params, order_n=None, tol=None):
        self.params = params
        self.order_n = conf.get('DIRECTION_ORDER') if order_n is None else order_n
        self.tol = conf.get('DIRECTION_TOL') if tol is None else tol
        if self.order_n < 1:
            raise PreconditionError('order_n >= 1 required')

    def __repr__(self):
        return 'DirectionField(order_n={})'.format(self.order_n)

    def sequence(self, theta, z, early_stop=False):
        """
        The directions ``e_1, …, e_k`` at ``(θ, z)``, k ≤ order_n.
        """
        params = self.params
        Mu, Mv = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        directions = list()
        for _ in range(self.order_n):
            if not params.F(theta, z) > params.escape_floor:
                break
            Mu, Mv, _ = _accumulate(Mu, Mv, jacobian_at(params, theta, z))
            e, _ = _contracted(Mu, Mv)
            if early_stop and directions and np.linalg.norm(e - directions[-1]) < self.tol:
                directions.append(e)
                break
            directions.append(e)
            theta, z = step(params, theta, z)
        if not directions:
            raise DegenerateConformal('({}, {}) is not in V'.format(theta, z))
        return directions

    def eval(self, p):
        """
        ``e_n`` at a :class:`~horseshoe.mapcore.PhasePoint` (or a pair).
        """
        theta, z = p
        return self.sequence(theta, z, early_stop=True)[-1]

    __call__ = eval


def direction_field(params, order_n=None):
    """
    :return: :class:`DirectionField` of the given order
    """
    return DirectionField(params, order_n)


@dataclass
class CurveSample:
    """
    An ordered sample of a stable or unstable curve.

    ``points`` holds ``(θ, z)`` rows with θ continuous along the curve
    (not normalized), ``arclength`` the curve parameter of each row.
    """

    points: np.ndarray = field(repr=False)
    arclength: np.ndarray = field(repr=False)
    kind: str = 'stable'
    truncated: str = None

    def __len__(self):
        return len(self.points)

    @property
    def theta(self):
        return self.points[:, 0]

    @property
    def z(self):
        return self.points[:, 1]

    def phase_points(self):
        return [PhasePoint(t, z) for t, z in self.points]

    def max_spacing(self):
        return float(np.max(np.hypot(*np.diff(self.points, axis=0).T))) if len(self) > 1 else 0.0

    def theta_at(self, z):
        """
        Spline of θ as a function of z; for stable curves, which are graphs
        over z.
        """
        order = np.argsort(self.z)
        zs, thetas = self.z[order], self.theta[order]
        keep = np.concatenate([[True], np.diff(zs) > 0])
        return CubicSpline(zs[keep], thetas[keep])(z)

    def slope_bound(self):
        """
        Largest ``|dθ/dz|`` (stable) or ``|dz/dθ|`` (unstable) between
        consecutive samples.
        """
        dtheta, dz = np.diff(self.points, axis=0).T
        if self.kind == 'stable':
            ok = dz != 0
            return float(np.max(np.abs(dtheta[ok] / dz[ok])))
        ok = dtheta != 0
        return float(np.max(np.abs(dz[ok] / dtheta[ok])))

    def rows(self):
        for s, (theta, z) in zip(self.arclength, self.points):
            yield s, theta, z


def eigen_directions(params, saddle):
    """
    Unstable and stable multiplier with unit eigenvectors of a saddle, the
    stable one pointing up.

    :return: ``(λ_u, v_u, λ_s, v_s)``
    """
    J = jacobian_at(params, saddle.point.theta, saddle.point.z)
    big, small = (l.real for l in saddle.multipliers)
    if abs(big) <= 1 or abs(small) >= 1:
        raise PreconditionError('{} is not a saddle'.format(saddle.point))
    def vector(lam):
        first = np.array([J[0, 1], lam - J[0, 0]])
        second = np.array([lam - J[1, 1], J[1, 0]])
        v = first if np.hypot(*first) >= np.hypot(*second) else second
        return v / np.hypot(*v)
    v_u, v_s = vector(big), vector(small)
    if v_s[1] < 0:
        v_s = -v_s
    return big, v_u, small, v_s


def _curve_rhs(field, orient):
    def rhs(s, y):
        e = field.eval((y[0], y[1]))
        return orient * (e if e[1] >= 0 else -e)
    return rhs


def _domain_event(params):
    def event(s, y):
        return params.F(y[0], y[1]) - params.escape_floor
    event.terminal = True
    event.direction = -1
    return event


def _annulus_event(s, y):
    return 1.0 - abs(y[1])


_annulus_event.terminal = True


def _integrate_branch(params, field, start, orient, half_length, max_step, tol, chunk=0.05):
    ys = [np.asarray(start, dtype=float)]
    ss = [0.0]
    reason = None
    rhs = _curve_rhs(field, orient)
    events = [_domain_event(params), _annulus_event]
    while ss[-1] < half_length and reason is None:
        span = (ss[-1], min(half_length, ss[-1] + chunk))
        try:
            sol = solve_ivp(rhs, span, ys[-1], method='DOP853', max_step=max_step,
                            rtol=tol, atol=tol * 1e-2, events=events)
        except DegenerateConformal as exc:
            reason = 'degenerate at s={:.6g}'.format(ss[-1])
            logger.warning('stable curve stopped: %s (%s)', reason, exc)
            break
        ys.extend(sol.y.T[1:])
        ss.extend(sol.t[1:])
        if sol.status == 1:
            reason = 'domain exit at s={:.6g}'.format(ss[-1])
        elif sol.status != 0:
            reason = sol.message
    return np.array(ss), np.array(ys), reason


def stable_curve(params, saddle, order_n=None, half_length=1.0, step=None, tol=None):
    """
    Stable curve of a saddle as the integral curve of the most contracted
    direction field through it, in both directions.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param saddle: :class:`~horseshoe.periodic.FixedPointRecord`
    :param int order_n: order of the direction field
    :param float half_length: arclength per direction
    :param float step: largest integration step, ``HORSESHOE_CURVE_MAX_STEP``
    :return: :class:`CurveSample`, ordered by increasing z
    :raises PreconditionError: if the record is not a saddle
    :raises DegenerateConformal: if the field is degenerate at the saddle
    """
    eigen_directions(params, saddle)
    step = conf.get('CURVE_MAX_STEP') if step is None else step
    tol = conf.get('CURVE_TOL') if tol is None else tol
    field = DirectionField(params, order_n)
    start = (saddle.point.theta, saddle.point.z)
    try:
        field.eval(start)
    except DegenerateConformal as exc:
        raise DegenerateConformal(str(exc), arclength=0.0)
    up_s, up_y, up_reason = _integrate_branch(params, field, start, 1.0, half_length, step, tol)
    down_s, down_y, down_reason = _integrate_branch(params, field, start, -1.0, half_length, step, tol)
    points = np.vstack([down_y[::-1], up_y[1:]])
    arclength = np.concatenate([-down_s[::-1], up_s[1:]])
    reasons = [r for r in (down_reason, up_reason) if r]
    curve = CurveSample(points, arclength, 'stable', '; '.join(reasons) or None)
    logger.debug('stable curve of %s: %d points, s in [%.3g, %.3g]', saddle.point, len(curve), arclength[0], arclength[-1])
    return curve


def _seed_images(params, saddle, direction, t, iterations):
    theta = saddle.point.theta + t * direction[0]
    z = saddle.point.z + t * direction[1]
    for _ in range(iterations):
        theta, z, _ = apply_array(params, theta, z, normalize=False)
    # back into the frame of the saddle
    return theta - TWO_PI * saddle.winding_m * iterations, z


def _grow_branch(params, saddle, direction, radius, iterations, h, cap=200000):
    t = np.linspace(0.0, radius, 65)
    truncated = None
    while True:
        theta, z = _seed_images(params, saddle, direction, t, iterations)
        bad = np.isnan(theta)
        if bad.any():
            cut = int(np.argmax(bad))
            t, theta, z = t[:cut], theta[:cut], z[:cut]
            truncated = 'escape'
        if len(t) < 2:
            break
        wide = np.hypot(np.diff(theta), np.diff(z)) > h
        if not wide.any():
            break
        if len(t) >= cap:
            logger.warning('unstable branch reached %d points before spacing %.1e', cap, h)
            break
        t = np.sort(np.concatenate([t, 0.5 * (t[:-1][wide] + t[1:][wide])]))
    return t, theta, z, truncated


def unstable_curve(params, saddle, iterations, seed_radius, half=None, step=None):
    """
    Unstable curve of a saddle: the image under ``𝓕^iterations`` of the
    segment of half length *seed_radius* along the unstable eigenvector,
    refined until consecutive image points are at most *step* apart and
    trimmed where it escapes.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param saddle: :class:`~horseshoe.periodic.FixedPointRecord`
    :param int iterations: number of iterations
    :param float seed_radius: half length of the seed segment
    :param half: ``+1`` or ``-1`` for one half of the segment, None for both
    :return: :class:`CurveSample` in the frame of the saddle
    """
    if iterations < 0 or seed_radius <= 0:
        raise PreconditionError('iterations >= 0 and seed_radius > 0 required')
    step = conf.get('CURVE_MAX_STEP') if step is None else step
    _, v_u, _, _ = eigen_directions(params, saddle)
    pieces, reasons = list(), list()
    for sign in ((half,) if half else (-1, 1)):
        t, theta, z, reason = _grow_branch(params, saddle, sign * v_u, seed_radius, iterations, step)
        pieces.append(np.column_stack([theta, z]))
        if reason:
            reasons.append(reason)
    if half:
        points = pieces[0]
    else:
        points = np.vstack([pieces[0][::-1], pieces[1][1:]])
    lengths = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(points, axis=0).T))])
    return CurveSample(points, lengths, 'unstable', ', '.join(reasons) or None)


def _height_event(z_end):
    def event(s, y):
        return y[1] - z_end
    event.terminal = True
    return event


def stable_branch(params, saddle, z_end, floor=None, order_n=None, step=None, tol=None):
    """
    The stable curve of a saddle from the saddle to height *z_end*: the
    integral curve of the most contracted direction field, ended exactly at
    that height by a terminal event.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param saddle: :class:`~horseshoe.periodic.FixedPointRecord`
    :param float z_end: height of the last point
    :param float floor: the curve is valid where ``𝔽 > floor``, by default
        the escape floor (see :func:`vhat_floor`)
    :return: :class:`CurveSample` ordered from the saddle, θ in the frame of
        the saddle
    :raises NoBracket: if the curve leaves the valid region or degenerates
        before it reaches *z_end*
    """
    step = conf.get('CURVE_MAX_STEP') if step is None else step
    tol = conf.get('CURVE_TOL') if tol is None else tol
    floor = params.escape_floor if floor is None else floor
    start = np.array([saddle.point.theta, saddle.point.z])
    if z_end == start[1]:
        return CurveSample(start[None, :], np.zeros(1), 'stable')
    orient = 1.0 if z_end > start[1] else -1.0

    def domain(s, y):
        return params.F(y[0], y[1]) - floor
    domain.terminal = True
    domain.direction = -1

    field = DirectionField(params, order_n)
    length = 4.0 * abs(z_end - start[1]) + 0.05
    try:
        sol = solve_ivp(_curve_rhs(field, orient), (0.0, length), start, method='DOP853', max_step=step,
                        rtol=tol, atol=tol * 1e-2, events=[_height_event(z_end), domain, _annulus_event])
    except DegenerateConformal as exc:
        raise NoBracket('stable curve of {} degenerates: {}'.format(saddle.point, exc))
    if not len(sol.t_events[0]):
        raise NoBracket('stable curve of {} does not reach z={:.6g}'.format(saddle.point, z_end))
    points = sol.y.T.copy()
    points[-1] = sol.y_events[0][0]
    points[-1, 1] = z_end
    return CurveSample(points, sol.t, 'stable')


def vhat_floor(params, saddle):
    """
    𝔽 bound of the trimmed domain V̂ for curves of *saddle*: the
    :func:`vhat_margin` of its own winding, or the escape floor for
    windings below one.
    """
    if saddle.winding_m < 1:
        return params.escape_floor
    return max(params.escape_floor, vhat_margin(params, [saddle]))


@dataclass
class FoldTip:
    """
    The tip of the fold image of the unstable curve, with the seed
    parameterization used to find it.
    """

    theta: float
    z: float
    t: float
    t_range: tuple
    iterations: int
    direction: np.ndarray = field(repr=False)
    unstable_slope: float = None

    def image(self, params, saddle, t):
        """
        Point of the fold image at seed parameter t.
        """
        theta, z = _seed_images(params, saddle, self.direction, np.atleast_1d(t), self.iterations + 1)
        return theta[0], z[0]


def _passage(params, theta, z):
    """
    Index range of the first passage of a sampled curve through V_f.
    """
    F = params.F(theta, z)
    g = 1.0 - params.d * params.F_theta(theta) / F
    inside = np.abs(g) < 2.0
    if not inside.any():
        return None
    first = int(np.argmax(inside))
    rest = ~inside[first:]
    last = first + (int(np.argmax(rest)) if rest.any() else len(rest)) - 1
    if last == len(inside) - 1:
        return None
    return first, last


def fold_tip(params, saddle, max_iterations=6):
    """
    Locate the tip of ``𝓕(ℓᵘ ∩ V_f)`` where ℓᵘ is the unstable curve of the
    saddle from the saddle up to its first passage through V_f.

    :return: :class:`FoldTip`
    :raises FoldNotFound: if the passage or an interior extremum is missing
    """
    lam_u, v_u, _, _ = eigen_directions(params, saddle)
    step_h = conf.get('CURVE_MAX_STEP')
    theta_c = _critical_unwrapped(params, saddle.point.z, domain_boundaries(params, saddle.point.z))
    heading = 1.0 if wrap_difference(theta_c - saddle.point.theta) > 0 else -1.0
    span = TWO_PI
    start = 1 if abs(lam_u) > 1e4 else 2
    for iterations in range(start, max_iterations + 1):
        # the half whose image after this many iterations heads to θ_c
        sign = heading * math.copysign(1.0, v_u[0]) * math.copysign(1.0, lam_u) ** iterations
        direction = sign * v_u
        radius = span / abs(lam_u) ** iterations
        t, theta, z, _ = _grow_branch(params, saddle, direction, radius, iterations, step_h)
        if len(t) < 3:
            continue
        found = _passage(params, theta, z)
        if found is None:
            continue
        first, last = found
        lo, hi = max(first - 1, 0), min(last + 1, len(t) - 1)
        tip = _tip_on(params, saddle, direction, iterations, t[lo:hi + 1])
        pre_fold = slice(0, first + 1)
        dtheta, dz = np.diff(theta[pre_fold]), np.diff(z[pre_fold])
        ok = dtheta != 0
        tip.unstable_slope = float(np.max(np.abs(dz[ok] / dtheta[ok]))) if ok.any() else 0.0
        return tip
    raise FoldNotFound('unstable curve of {} does not cross V_f'.format(saddle.point))


def _image_speed(params, saddle, direction, t, iterations):
    """
    ``dθ/dt`` of the seed image after *iterations* steps, by the chain rule
    along the orbit of the seed point.
    """
    theta = saddle.point.theta + t * direction[0]
    z = saddle.point.z + t * direction[1]
    v = np.asarray(direction, dtype=float)
    for _ in range(iterations):
        image = step(params, theta, z)
        if image is None:
            return math.nan
        v = jacobian_at(params, theta, z) @ v
        theta, z = image
    return float(v[0])


def _tip_on(params, saddle, direction, iterations, t):
    theta, z = _seed_images(params, saddle, direction, t, iterations + 1)
    if np.isnan(theta).any():
        raise FoldNotFound('fold image escapes')
    i = int(np.argmin(theta))
    if i == 0 or i == len(t) - 1:
        raise FoldNotFound('fold image has no interior extremum')

    def func(s):
        return _seed_images(params, saddle, direction, np.array([s]), iterations + 1)[0][0]

    result = minimize_scalar(func, bracket=(t[i - 1], t[i], t[i + 1]), method='golden', tol=1e-12)
    t_star = float(result.x)

    # polish: the tip is the zero of dθ/dt on the fold image
    def speed(s):
        return _image_speed(params, saddle, direction, s, iterations + 1)

    lo, hi = float(t[i - 1]), float(t[i + 1])
    s_lo, s_hi = speed(lo), speed(hi)
    if s_lo < 0 < s_hi:
        t_star = brentq(speed, lo, hi, xtol=1e-14 * (hi - lo), rtol=4 * np.finfo(float).eps)
    else:
        logger.warning('fold tip kept from golden section: speeds %.3g, %.3g', s_lo, s_hi)
    theta_star, z_star = _seed_images(params, saddle, direction, np.array([t_star]), iterations + 1)
    return FoldTip(
        float(theta_star[0]), float(z_star[0]), t_star,
        (float(t[0]), float(t[-1])), iterations, direction)


def tangency_gap(params, saddle, tip=None):
    """
    Signed θ distance of the fold tip from the stable curve of the saddle at
    the height of the tip, positive when the tip lies on the θ_r side.

    The stable curve is :func:`stable_branch`, trimmed to V̂.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param saddle: :class:`~horseshoe.periodic.FixedPointRecord`
    :return: float in ``[-π, π)``
    :raises FoldNotFound: if the fold image has no interior extremum
    :raises NoBracket: if the stable curve does not reach the tip's height
    """
    tip = tip or fold_tip(params, saddle)
    branch = stable_branch(params, saddle, tip.z, floor=vhat_floor(params, saddle))
    return wrap_difference(tip.theta - float(branch.theta[-1]))


def left_saddle(params, m):
    """
    The saddle of winding m next to θ_l.

    :raises NoBracket: if there is none
    """
    saddles = [r for r in _solve_winding(params, m) if r.kind == 'saddle']
    if not saddles:
        raise NoBracket('no saddle with winding {} at a={}'.format(m, params.a))
    return min(saddles, key=lambda r: r.point.theta)


def gap_at(params_base, m, a):
    """
    :func:`tangency_gap` of the left saddle of winding m at parameter a.
    """
    params = params_base.with_a(a)
    return tangency_gap(params, left_saddle(params, m))


def tangency_brackets(params_base, m, a_range, steps=64):
    """
    Sub-intervals of *a_range* on which the gap changes sign without
    wrapping.

    :return: list of ``(a_lo, a_hi)``
    """
    values = np.linspace(a_range[0], a_range[1], steps)
    gaps = list()
    for a in values:
        try:
            gaps.append(gap_at(params_base, m, a))
        except (FoldNotFound, NoBracket):
            gaps.append(math.nan)
    brackets = list()
    for i in range(len(values) - 1):
        g0, g1 = gaps[i], gaps[i + 1]
        if np.isfinite(g0) and np.isfinite(g1) and g0 * g1 < 0 and max(abs(g0), abs(g1)) < math.pi / 2:
            brackets.append((float(values[i]), float(values[i + 1])))
    return brackets


@dataclass
class TangencyReport:
    """
    A homoclinic tangency of the left saddle of winding ``saddle_m``.
    """

    a_star: float
    saddle_m: int
    tangency_point: PhasePoint
    gap: float
    quadratic_coeff: float
    crossing_speed: float
    unstable_slope_bound: float
    stable_slope_bound: float
    residual: float = None

    SPEED_REFERENCE = 2.0 / 3.0 - 1.0 / 25.0

    def as_dict(self):
        return {
            'a_star': self.a_star,
            'saddle_m': self.saddle_m,
            'tangency_point': [self.tangency_point.theta, self.tangency_point.z],
            'gap': self.gap,
            'quadratic_coeff': self.quadratic_coeff,
            'crossing_speed': self.crossing_speed,
            'speed_reference': self.SPEED_REFERENCE,
            'unstable_slope_bound': self.unstable_slope_bound,
            'stable_slope_bound': self.stable_slope_bound,
            'residual': self.residual,
        }


def quadratic_coefficient(params, saddle, tip):
    """
    ``|d²θ₁/dz₁²|`` of the fold image at its tip.
    """
    h = (tip.t_range[1] - tip.t_range[0]) * 1e-3
    (tm, zm), (t0, _), (tp, zp) = (tip.image(params, saddle, tip.t + s * h) for s in (-1, 0, 1))
    second = (tp - 2.0 * t0 + tm) / h ** 2
    slope = (zp - zm) / (2.0 * h)
    return abs(second) / slope ** 2 if slope else math.inf


def crossing_speed(params_base, m, a, h=None):
    """
    ``d(gap)/da`` by central differences with one Richardson step.
    """
    h = conf.get('SPEED_STEP') if h is None else h
    def central(step_a):
        return (gap_at(params_base, m, a + step_a) - gap_at(params_base, m, a - step_a)) / (2.0 * step_a)
    coarse, fine = central(h), central(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def find_tangency(params_base, saddle_m, a_range, tol=None):
    """
    Locate a homoclinic tangency of the left saddle of winding *saddle_m*
    by bracketed root finding on :func:`tangency_gap` in a.

    :param params_base: :class:`~horseshoe.mapcore.MapParams`, a is ignored
    :param int saddle_m: winding of the saddle
    :param a_range: pair ``(a_lo, a_hi)`` bracketing a sign change
    :return: :class:`TangencyReport`
    :raises NoBracket: if the gap does not change sign on *a_range*
    """
    tol = conf.get('GAP_TOL') if tol is None else tol
    lo, hi = a_range
    try:
        g_lo, g_hi = gap_at(params_base, saddle_m, lo), gap_at(params_base, saddle_m, hi)
    except FoldNotFound as exc:
        raise NoBracket('gap undefined at the ends of {}: {}'.format(a_range, exc))
    if g_lo * g_hi > 0 or max(abs(g_lo), abs(g_hi)) >= math.pi / 2:
        raise NoBracket('gap {:.3g}, {:.3g} does not change sign on {}'.format(g_lo, g_hi, a_range))
    a_star = brentq(lambda a: gap_at(params_base, saddle_m, a), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    params = params_base.with_a(a_star)
    saddle = left_saddle(params, saddle_m)
    tip = fold_tip(params, saddle)
    gap = tangency_gap(params, saddle, tip)
    if abs(gap) > tol:
        logger.warning('tangency gap %.3e above %.1e at a=%.15g', gap, tol, a_star)

    # residual against the untrimmed two sided curve
    curve = stable_curve(params, saddle, half_length=1.2 * abs(tip.z - saddle.point.z) + 0.01)
    residual = abs(wrap_difference(tip.theta - float(curve.theta_at(tip.z))))
    report = TangencyReport(
        a_star=a_star,
        saddle_m=saddle_m,
        tangency_point=PhasePoint(tip.theta, tip.z),
        gap=gap,
        quadratic_coeff=quadratic_coefficient(params, saddle, tip),
        crossing_speed=crossing_speed(params_base, saddle_m, a_star),
        unstable_slope_bound=tip.unstable_slope,
        stable_slope_bound=curve.slope_bound(),
        residual=residual,
    )
    logger.info('tangency at a=%.12g, speed %.4g, coefficient %.4g', a_star, report.crossing_speed, report.quadratic_coeff)
    return report


def intersection_count(params, saddle, window=1e-2, samples=401):
    """
    Number of transversal crossings of the fold image with the stable curve
    near the fold tip. The sample window spans the part of the image within
    *window* of the tip in θ.
    """
    tip = fold_tip(params, saddle)
    h = (tip.t_range[1] - tip.t_range[0]) * 1e-3
    (tm, _), (t0, _), (tp, _) = (tip.image(params, saddle, tip.t + s * h) for s in (-1, 0, 1))
    second = abs(tp - 2.0 * t0 + tm) / h ** 2
    half = math.sqrt(2.0 * window / second) if second else h
    lo = max(tip.t_range[0], tip.t - half)
    hi = min(tip.t_range[1], tip.t + half)
    theta, z = np.array([tip.image(params, saddle, t) for t in np.linspace(lo, hi, samples)]).T
    branch = stable_branch(params, saddle, float(np.max(z)), floor=vhat_floor(params, saddle))
    values = wrap_difference(theta - branch.theta_at(z))
    return int(np.count_nonzero(np.sign(values[:-1]) != np.sign(values[1:])))


def vhat_margin(params, family):
    """
    The trim threshold of V̂: 𝔽 at the saddle of winding ``100·m`` where m
    is the first winding of *family*.

    :param family: saddle records from
        :func:`~horseshoe.periodic.find_saddle_family`
    """
    if not family:
        raise PreconditionError('empty saddle family')
    m = min(r.winding_m for r in family)
    return winding_F(params, 100 * m)


def contraction_rates(params, saddle, curve, iterations=3, stride=10):
    """
    Distances of points of a stable curve from the saddle under iteration.

    :return: array of shape ``(points, iterations + 1)``
    """
    rows = list()
    for theta, z in curve.points[::stride]:
        distances = [math.hypot(wrap_difference(theta - saddle.point.theta), z - saddle.point.z)]
        for _ in range(iterations):
            image = step(params, theta, z)
            if image is None:
                break
            theta, z = normalize_angle(image[0]), image[1]
            distances.append(math.hypot(wrap_difference(theta - saddle.point.theta), z - saddle.point.z))
        if len(distances) == iterations + 1:
            rows.append(distances)
    return np.array(rows)
