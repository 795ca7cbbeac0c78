"""
From a forced saddle system to the constants of its return map.

The homoclinic loop ℓ(s) of the unforced system is computed by shooting,
its profiles::

    E(s) = v²(−α + f_x) + u²(β + g_y) − uv(f_y + g_x)
    H(s) = v·A(ℓ(s)) − u·B(ℓ(s))

are sampled along it with (u, v) the unit tangent, and the integrals::

    A    = ∫ H(s) e^{−∫₀ˢE} ds
    C(ω) = ∫ H(s) cos(ωs) e^{−∫₀ˢE} ds
    S(ω) = ∫ H(s) sin(ωs) e^{−∫₀ˢE} ds

give the map constants a, b, c, d, γ and k. :func:`validate_return_map`
integrates the forced system between sections and compares with the map.

The sections sit where the loop enters the ball of radius ε around the
saddle: ℓ(−L⁻) on the way out, ℓ(L⁺) on the way back.
"""

import logging
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from scipy.integrate import quad
from scipy.integrate import solve_ivp
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.optimize import minimize_scalar

from . import conf
from .exceptions import Divergent
from .exceptions import HypothesisViolated
from .exceptions import NoHomoclinic
from .exceptions import PreconditionError
from .mapcore import TWO_PI
from .mapcore import ForcingProfile
from .mapcore import MapParams
from .mapcore import SINE
from .mapcore import normalize_angle
from .mapcore import step
from .mapcore import wrap_difference
from .parallel import parallel_map
from .systems import check_hypotheses


logger = logging.getLogger(__name__)

BLOWUP_RADIUS = 1e3


@dataclass
class HomoclinicOrbitData:
    """
    Samples of the homoclinic loop, parameterized so that s = 0 is the point
    farthest from the saddle.

    :param s_grid: increasing sample parameters
    :param ell: ``(N, 2)`` points ``(a(s), b(s))``
    :param tangent: ``(N, 2)`` unit tangents ``(u(s), v(s))``
    :param E_profile: E at the samples
    :param H_profile: H at the samples
    :param float L_plus: loop time from s = 0 into the ε ball
    :param float L_minus: loop time out of the ε ball to s = 0
    """

    s_grid: np.ndarray
    ell: np.ndarray
    tangent: np.ndarray
    E_profile: np.ndarray
    H_profile: np.ndarray
    L_plus: float
    L_minus: float
    alpha: float
    beta: float
    epsilon: float
    closure_residual: float = 0.0
    shoot_parameter: float = None

    @property
    def radius(self):
        return np.hypot(self.ell[:, 0], self.ell[:, 1])

    def section_times(self, epsilon):
        """
        ``(L⁺, L⁻)`` for a neighborhood of radius *epsilon*.

        :raises PreconditionError: if the samples do not reach that radius
        """
        s, log_r = self.s_grid, np.log(self.radius)
        level = math.log(epsilon)
        zero = int(np.searchsorted(s, 0.0))

        def crossing(indices):
            for i, j in zip(indices[:-1], indices[1:]):
                if log_r[j] < level <= log_r[i]:
                    w = (log_r[i] - level) / (log_r[i] - log_r[j])
                    return s[i] + w * (s[j] - s[i])
            raise PreconditionError('orbit samples do not reach radius {}'.format(epsilon))

        L_plus = crossing(list(range(zero, len(s))))
        L_minus = -crossing(list(range(zero, -1, -1)))
        return L_plus, L_minus

    def decay_rates(self):
        """
        Exponential rates of the loop tails fitted inside the ε ball:
        ``(α̂, β̂)`` from ``|ℓ(s)| ~ e^{−αs}`` forward and
        ``|ℓ(−s)| ~ e^{−βs}`` backward.
        """
        s, log_r = self.s_grid, np.log(self.radius)
        forward = s >= self.L_plus
        backward = s <= -self.L_minus
        if forward.sum() < 3 or backward.sum() < 3:
            raise PreconditionError('too few tail samples for a decay fit')
        alpha = -np.polyfit(s[forward], log_r[forward], 1)[0]
        beta = np.polyfit(s[backward], log_r[backward], 1)[0]
        return float(alpha), float(beta)

    def rows(self):
        for i, s in enumerate(self.s_grid):
            yield dict(
                s=s, x=self.ell[i, 0], y=self.ell[i, 1],
                u=self.tangent[i, 0], v=self.tangent[i, 1],
                E=self.E_profile[i], H=self.H_profile[i],
            )

    def at(self, s):
        """
        Loop point at parameter s by cubic interpolation.
        """
        spline = CubicSpline(self.s_grid, self.ell, axis=0)
        return spline(s)


@dataclass
class DerivedConstants:
    """
    Integrals along the loop and, once :func:`derive_map_params` has run,
    the map constants.

    ``phi_L_fourier[n]`` holds ``(cos, sin)`` coefficients of the n-th
    harmonic of φ_L in the angle ``θ + ωL⁻``.
    """

    omega: float
    A_val: float
    C_val: float
    S_val: float
    A_L: float
    C_L: float
    S_L: float
    P_L: float
    P_L_plus: float
    L_plus: float
    L_minus: float
    phi_L_fourier: dict = field(default_factory=dict)
    weight_norm: float = 1.0
    tail_rate: float = None
    a: float = None
    b: float = None
    c: float = None
    d: float = None
    gamma: float = None
    k: float = None
    orbit: HomoclinicOrbitData = field(default=None, repr=False)

    def as_dict(self):
        data = {
            name: getattr(self, name) for name in (
                'omega', 'A_val', 'C_val', 'S_val', 'A_L', 'C_L', 'S_L', 'P_L', 'P_L_plus',
                'L_plus', 'L_minus', 'tail_rate', 'a', 'b', 'c', 'd', 'gamma', 'k',
            )
        }
        data['phi_L_fourier'] = {str(n): list(pair) for n, pair in self.phi_L_fourier.items()}
        return data


def _rtol():
    return conf.get('ODE_RTOL'), conf.get('ODE_ATOL')


def _blowup(t, state):
    return math.hypot(state[0], state[1]) - BLOWUP_RADIUS


_blowup.terminal = True


def _closure_residual(system, delta, t_max):
    """
    Signed gap along the diagonal ``x = y`` between the unstable branch,
    started at ``(0, δ)``, and the stable branch, started at ``(δ, 0)`` and
    run backward, where each first crosses it. NaN if a branch blows up
    before the diagonal.
    """
    rtol, atol = _rtol()

    def diagonal(t, state):
        return state[0] - state[1]
    diagonal.terminal = True

    def crossing(start, t_end):
        sol = solve_ivp(system.rhs, (0.0, t_end), start, method='DOP853',
                        rtol=rtol, atol=atol, events=[diagonal, _blowup])
        if not sol.t_events[0].size:
            return math.nan
        x, y = sol.y_events[0][0]
        return (x + y) / math.sqrt(2.0)

    return crossing([0.0, delta], t_max) - crossing([delta, 0.0], -t_max)


def _shoot(system, delta, t_max):
    def residual(lam):
        return _closure_residual(system.with_shooting(lam), delta, t_max)

    grid = np.linspace(*system.shoot_range, 17)
    values = [residual(lam) for lam in grid]
    best = min((abs(v) for v in values if math.isfinite(v)), default=None)
    for i in range(len(grid) - 1):
        lo, hi = values[i], values[i + 1]
        if math.isfinite(lo) and math.isfinite(hi) and lo * hi <= 0:
            lam = brentq(residual, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            logger.info('loop closed at shooting parameter %.12g', lam)
            return lam
    raise NoHomoclinic('no sign change of the closure residual on {}'.format(system.shoot_range), residual=best)


def _profiles(system, ell):
    x, y = ell[:, 0], ell[:, 1]
    dx, dy = system.field(x, y)
    norm = np.hypot(dx, dy)
    u, v = dx / norm, dy / norm
    fx, fy, gx, gy = (np.broadcast_to(p, x.shape) for p in system.field_jacobian(x, y))
    E = v ** 2 * (-system.alpha + fx) + u ** 2 * (system.beta + gy) - u * v * (fy + gx)
    H = v * np.broadcast_to(system.A(x, y), x.shape) - u * np.broadcast_to(system.B(x, y), x.shape)
    return np.column_stack([u, v]), np.asarray(E, dtype=float), np.asarray(H, dtype=float)


def compute_homoclinic_orbit(system, shoot_tol=1e-9, samples=4001, delta=None):
    """
    Compute the homoclinic loop of the unforced *system*.

    The unstable branch leaves the saddle along +y from ``(0, δ)``. If the
    system has shooting terms, their parameter is chosen by bisection so
    that the branch meets the stable branch, run backward from ``(δ, 0)``,
    where both cross the diagonal ``x = y``.

    :param system: :class:`~horseshoe.systems.OdeSystem`
    :param float shoot_tol: largest accepted closure residual
    :param int samples: number of samples along the loop
    :param float delta: start distance, ``HORSESHOE_SHOOT_DELTA`` by default
    :return: :class:`HomoclinicOrbitData`
    :raises NoHomoclinic: if the loop cannot be closed to *shoot_tol*
    """
    delta = delta or conf.get('SHOOT_DELTA')
    t_max = (2.0 * math.log(1.0 / delta) + 60.0) / min(system.alpha, system.beta)

    lam = None
    if system.shootable:
        lam = _shoot(system, delta, t_max)
        system = system.with_shooting(lam)
    residual = _closure_residual(system, delta, t_max)
    if not abs(residual) <= shoot_tol:
        raise NoHomoclinic('closure residual {} above {}'.format(residual, shoot_tol), residual=residual)

    rtol, atol = _rtol()
    end_radius = 1e3 * delta

    def arrive(t, state):
        return math.hypot(state[0], state[1]) - end_radius
    arrive.terminal = True
    arrive.direction = -1

    sol = solve_ivp(system.rhs, (0.0, t_max), [0.0, delta], method='DOP853', rtol=rtol,
                    atol=atol, events=[arrive, _blowup], dense_output=True)
    if not sol.t_events[0].size:
        raise NoHomoclinic('unstable branch does not return to the saddle', residual=residual)
    t_end = sol.t_events[0][0]

    t = np.linspace(0.0, t_end, samples)
    ell = sol.sol(t).T
    i = int(np.argmax(np.hypot(ell[:, 0], ell[:, 1])))
    peak = minimize_scalar(
        lambda x: -float(np.hypot(*sol.sol(x))),
        bounds=(t[max(i - 1, 0)], t[min(i + 1, samples - 1)]), method='bounded',
        options=dict(xatol=1e-12),
    ).x
    s = t - peak
    tangent, E, H = _profiles(system, ell)
    orbit = HomoclinicOrbitData(
        s, ell, tangent, E, H, 0.0, 0.0, system.alpha, system.beta, system.epsilon,
        closure_residual=float(residual), shoot_parameter=lam,
    )
    orbit.L_plus, orbit.L_minus = orbit.section_times(system.epsilon)
    return orbit


def synthetic_orbit(alpha, beta, kappa=None, span=40.0, samples=8001, epsilon=0.05):
    """
    A prescribed loop profile with the tail rates of a saddle::

        r(s) = 1 / (e^{αs} + e^{−βs})
        E(s) = (β − α)/2 + (α + β)/2 · tanh(κs/2)
        H(s) = r(s)²

    The loop bends from the y axis onto the x axis with rate κ. With
    ``α = β`` the weight ``H·e^{−∫E}`` is even in s.
    """
    kappa = kappa or alpha + beta
    s = np.linspace(-span, span, samples)
    r = 1.0 / (np.exp(alpha * s) + np.exp(-beta * s))
    w = 1.0 / (1.0 + np.exp(-kappa * s))
    ell = np.column_stack([r * w, r * (1.0 - w)])
    d = np.gradient(ell, s, axis=0)
    tangent = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    E = 0.5 * (beta - alpha) + 0.5 * (alpha + beta) * np.tanh(0.5 * kappa * s)
    orbit = HomoclinicOrbitData(s, ell, tangent, E, r ** 2, 0.0, 0.0, alpha, beta, epsilon)
    orbit.L_plus, orbit.L_minus = orbit.section_times(epsilon)
    return orbit


class _Weight:
    """
    ``R(s) = H(s)·exp(−∫₀ˢE)`` interpolated from the samples; the inner
    integral uses monotone cubic interpolation of E.
    """

    def __init__(self, orbit):
        self.E = PchipInterpolator(orbit.s_grid, orbit.E_profile).antiderivative()
        self.E0 = float(self.E(0.0))
        self.H = CubicSpline(orbit.s_grid, orbit.H_profile)

    def integral_E(self, lo, hi):
        return float(self.E(hi) - self.E(lo))

    def __call__(self, s):
        return self.H(s) * np.exp(-(self.E(s) - self.E0))


def _tail_rate(orbit, weight):
    """
    Fitted decay rate of ``|R|`` over both ends of the samples.

    :raises Divergent: if either tail does not decay
    """
    s = orbit.s_grid
    values = np.abs(weight(s))
    n = max(len(s) // 10, 3)
    rates = list()
    for part, sign in ((slice(len(s) - n, None), -1.0), (slice(0, n), 1.0)):
        keep = values[part] > 0
        if keep.sum() < 3:
            continue
        slope = np.polyfit(s[part][keep], np.log(values[part][keep]), 1)[0]
        rate = sign * slope
        if not rate > 0:
            raise Divergent('loop integrand does not decay at the {} tail'.format('forward' if sign < 0 else 'backward'))
        rates.append(rate)
    return min(rates) if rates else None


def _integrals(weight, lo, hi, omega, rtol):
    opts = dict(epsrel=rtol, epsabs=0.0, limit=500)
    A = quad(weight, lo, hi, **opts)[0]
    if omega == 0:
        return A, A, 0.0
    C = quad(weight, lo, hi, weight='cos', wvar=omega, **opts)[0]
    S = quad(weight, lo, hi, weight='sin', wvar=omega, **opts)[0]
    return A, C, S


def harmonic_integrals(orbit, omega, n_max=8, truncated=False):
    """
    ``C(nω)`` and ``S(nω)`` for n = 1..n_max and the exponential decay
    rate of ``|C(nω) + iS(nω)|`` fitted over n.

    :param bool truncated: integrate over ``[−L⁻, L⁺]`` instead of all samples
    :return: ``(rows, rate)`` with rows ``(n, C, S)``
    """
    weight = _Weight(orbit)
    lo, hi = (-orbit.L_minus, orbit.L_plus) if truncated else (orbit.s_grid[0], orbit.s_grid[-1])
    rtol = conf.get('QUAD_RTOL')
    rows = list()
    for n in range(1, n_max + 1):
        _, C, S = _integrals(weight, lo, hi, n * omega, rtol)
        rows.append((n, C, S))
    amplitude = np.array([math.hypot(C, S) for _, C, S in rows])
    keep = amplitude > 0
    rate = None
    if keep.sum() >= 2:
        rate = float(-np.polyfit(np.arange(1, n_max + 1)[keep], np.log(amplitude[keep]), 1)[0])
    if rate is not None and not rate > 0:
        logger.warning('harmonic integrals do not decay over n (rate %.3g)', rate)
    return rows, rate


def melnikov_integrals(orbit, omega, L=None, forcing=SINE):
    """
    Integrals along the loop for forcing frequency *omega*.

    :param orbit: :class:`HomoclinicOrbitData`
    :param float omega: forcing frequency
    :param L: ``(L⁺, L⁻)``, the orbit's section times by default
    :param forcing: :class:`~horseshoe.mapcore.ForcingProfile` 𝒬
    :return: :class:`DerivedConstants` with the integral fields set
    :raises PreconditionError: if ``[−L⁻, L⁺]`` exceeds the samples
    :raises Divergent: if the integrand tails do not decay
    """
    L_plus, L_minus = L or (orbit.L_plus, orbit.L_minus)
    s = orbit.s_grid
    if not (s[0] <= -L_minus < 0 < L_plus <= s[-1]):
        raise PreconditionError('[-L-, L+] = [{}, {}] outside the samples'.format(-L_minus, L_plus))
    rtol = conf.get('QUAD_RTOL')
    weight = _Weight(orbit)
    tail_rate = _tail_rate(orbit, weight)

    A_val, C_val, S_val = _integrals(weight, s[0], s[-1], omega, rtol)
    A_L, C_L, S_L = _integrals(weight, -L_minus, L_plus, omega, rtol)
    P_L = math.exp(weight.integral_E(-L_minus, L_plus))
    P_L_plus = math.exp(weight.integral_E(0.0, L_plus))

    fourier = dict()
    for n in range(1, forcing.harmonics + 1):
        s_n = forcing.fourier_sin[n - 1] if n <= len(forcing.fourier_sin) else 0.0
        c_n = forcing.fourier_cos[n - 1] if n <= len(forcing.fourier_cos) else 0.0
        if not (s_n or c_n):
            continue
        if n == 1:
            C_n, S_n = C_L, S_L
        else:
            _, C_n, S_n = _integrals(weight, -L_minus, L_plus, n * omega, rtol)
        fourier[n] = (c_n * C_n + s_n * S_n, s_n * C_n - c_n * S_n)

    inside = (s >= -L_minus) & (s <= L_plus)
    norm = float(trapezoid(np.abs(weight(s[inside])), s[inside]))
    return DerivedConstants(
        omega, A_val, C_val, S_val, A_L, C_L, S_L, P_L, P_L_plus, L_plus, L_minus,
        phi_L_fourier=fourier, weight_norm=norm, tail_rate=tail_rate, orbit=orbit,
    )


def phase_shift(constants):
    """
    Phase c₀ that turns the first harmonic of φ_L into a pure sine of
    ``θ + ωL⁻ + c₀``. For the pure sine forcing ``tan c₀ = S_L/C_L``.

    :raises HypothesisViolated: if φ_L has no first harmonic
    """
    cos1, sin1 = constants.phi_L_fourier.get(1, (0.0, 0.0))
    if cos1 == 0 and sin1 == 0:
        raise HypothesisViolated('first harmonic of phi_L vanishes', hypothesis='first-harmonic')
    return math.atan2(cos1, sin1)


def select_rho(constants, omega=None, window=(3.0, 9.0)):
    """
    Choose ρ so that ``√(C² + S²)/(ρA)`` sits in the middle of *window*.
    The sign of ρ follows A.

    :raises PreconditionError: on a bad window or a foreign omega
    :raises HypothesisViolated: if A vanishes
    """
    lo, hi = window
    if not 1 < lo < hi:
        raise PreconditionError('window must satisfy 1 < lo < hi, got {}'.format(window))
    if omega is not None and not math.isclose(omega, constants.omega):
        raise PreconditionError('constants were computed for omega={}'.format(constants.omega))
    if constants.A_val == 0:
        raise HypothesisViolated('A = 0', hypothesis='nonzero-A')
    target = 0.5 * (lo + hi)
    return math.hypot(constants.C_val, constants.S_val) / (target * constants.A_val)


def _map_profile(constants, c0, amplitude):
    sin, cos = dict(), dict()
    for n, (a_n, b_n) in constants.phi_L_fourier.items():
        cn, sn = math.cos(n * c0), math.sin(n * c0)
        cos_coef = (a_n * cn - b_n * sn) / amplitude
        sin_coef = (a_n * sn + b_n * cn) / amplitude
        if abs(cos_coef) > 1e-12:
            cos[n] = cos_coef
        if abs(sin_coef) > 1e-12:
            sin[n] = sin_coef
    sin[1] = 1.0
    cos.pop(1, None)
    return ForcingProfile.from_tables(sin, cos)


def derive_map_params(system, constants):
    """
    Return map parameters of *system* with the ``(1 + O(ε))`` factors set
    to 1::

        a = (ω/β) ln μ⁻¹ + ω(L⁺ + L⁻) + (ω/β) ln(ε P_L⁺ A_L ρ)
        b = (μ/ε)^(α/β − 1) (P_L⁺ A_L ρ)^(α/β)
        c = |φ_L first harmonic| / (A_L ρ)
        k = P_L / (P_L⁺ A_L ρ)

    The angle of the map is ``θ + ωL⁻ + c₀``, see :func:`phase_shift`.
    The constants are stored on *constants* as well.

    :return: :class:`~horseshoe.mapcore.MapParams`
    :raises HypothesisViolated: if ``β ≥ α``, A_L vanishes or the first
        harmonic of φ_L vanishes
    :raises PreconditionError: if ``μ = 0`` or ρ does not have the sign of A_L
    """
    check_hypotheses(system)
    if not system.mu > 0:
        raise PreconditionError('mu > 0 required')
    if abs(constants.A_L) <= 1e-12 * constants.weight_norm:
        raise HypothesisViolated('A_L = {} vanishes'.format(constants.A_L), hypothesis='nonzero-A')
    c0 = phase_shift(constants)
    amplitude = math.hypot(*constants.phi_L_fourier[1])
    scale = constants.A_L * system.rho
    if not scale > 0:
        raise PreconditionError('rho must have the sign of A_L')

    d = system.omega / system.beta
    gamma = system.alpha / system.beta
    plus = constants.P_L_plus * scale
    a = d * math.log(1.0 / system.mu) + system.omega * (constants.L_plus + constants.L_minus) \
        + d * math.log(system.epsilon * plus)
    b = (system.mu / system.epsilon) ** (gamma - 1.0) * plus ** gamma
    c = amplitude / scale
    k = constants.P_L / plus
    if not 2 < c < 10:
        logger.warning('c=%.4g outside the window (2, 10), adjust rho', c)

    constants.a, constants.b, constants.c, constants.d, constants.gamma, constants.k = a, b, c, d, gamma, k
    params = MapParams(a, b, c, d, gamma, k, forcing=_map_profile(constants, c0, amplitude))
    logger.info('derived map a=%.6g b=%.3g c=%.4g d=%.4g gamma=%.4g k=%.3g', a, b, c, d, gamma, k)
    return params


@dataclass
class ValidationReport:
    """
    Direct integration against the derived map.

    ``samples`` holds one row per start point with the empirical and the
    predicted outcome: ``'return'``, ``'escape'`` or ``'failed'``.
    """

    mu: float
    samples: list
    control_offset: float = None

    @property
    def decided(self):
        return [row for row in self.samples if row['observed'] != 'failed']

    @property
    def agreement(self):
        decided = self.decided
        if not decided:
            return 0.0
        return sum(row['observed'] == row['predicted'] for row in decided) / len(decided)

    @property
    def angular_discrepancy(self):
        values = [abs(row['dtheta']) for row in self.samples if row['dtheta'] is not None]
        return float(np.median(values)) if values else None

    @property
    def vertical_discrepancy(self):
        values = [abs(row['dz']) for row in self.samples if row['dz'] is not None]
        return float(np.median(values)) if values else None

    def as_dict(self):
        return dict(
            mu=self.mu,
            agreement=self.agreement,
            angular_discrepancy=self.angular_discrepancy,
            vertical_discrepancy=self.vertical_discrepancy,
            failures=len(self.samples) - len(self.decided),
            control_offset=self.control_offset,
            samples=self.samples,
        )


def _return_job(job):
    """
    Integrate one start point of Σ⁻ until it comes back to Σ⁻ or leaves on
    the other side of the stable manifold.
    """
    system, origin, theta, z, t_max = job
    rtol, atol = _rtol()
    x0, y0 = origin
    t0 = theta / system.omega
    rhs = system.forced_rhs

    def leave(t, state):
        return math.hypot(state[0], state[1]) - 2.0 * y0
    leave.terminal = True
    leave.direction = 1

    def again(t, state):
        return state[1] - y0
    again.terminal = True
    again.direction = 1

    def away(t, state):
        return state[1] + y0
    away.terminal = True
    away.direction = -1

    try:
        sol = solve_ivp(rhs, (t0, t0 + t_max), [x0 + system.mu * z, y0], method='DOP853',
                        rtol=rtol, atol=atol, events=[leave, _blowup])
        if not sol.t_events[0].size:
            return dict(observed='failed')
        sol = solve_ivp(rhs, (sol.t[-1], t0 + t_max), sol.y[:, -1], method='DOP853',
                        rtol=rtol, atol=atol, events=[again, away, _blowup])
    except (ValueError, ArithmeticError) as e:
        logger.warning('integration failed at theta=%s z=%s: %s', theta, z, e)
        return dict(observed='failed')
    if sol.t_events[0].size:
        t1 = sol.t_events[0][0]
        x1 = sol.y_events[0][0][0]
        return dict(observed='return', theta1=float(normalize_angle(system.omega * t1)), z1=(x1 - x0) / system.mu)
    if sol.t_events[1].size:
        return dict(observed='escape')
    return dict(observed='failed')


def _control_offset(system, orbit):
    """
    Unforced integration from ℓ(−L⁻) to the section through ℓ(L⁺): the
    distance from the loop point where it arrives.
    """
    rtol, atol = _rtol()
    start, end = orbit.at(-orbit.L_minus), orbit.at(orbit.L_plus)

    def arrive(t, state):
        return state[0] - end[0]
    arrive.terminal = True
    arrive.direction = -1

    t_max = 2.0 * (orbit.L_plus + orbit.L_minus) + 10.0
    sol = solve_ivp(system.rhs, (0.0, t_max), start, method='DOP853', rtol=rtol, atol=atol,
                    events=[arrive, _blowup])
    if not sol.t_events[0].size:
        return None
    return float(abs(sol.y_events[0][0][1] - end[1]))


def validate_return_map(system, derived, samples, constants=None, threads=None, t_max=None):
    """
    Compare the derived map with direct integration of the forced system.

    Start points ``(θ, z)`` are spread over the circle and ``|z| < 1``; a
    start point is ``ℓ(−L⁻) + (μz, 0)`` at time ``θ/ω``. It returns when it
    crosses the line ``y = ℓ_y(−L⁻)`` upward again, and escapes when it
    leaves along the negative y axis.

    Σ⁻ is where the outgoing branch leaves the ε ball, with the z window
    along the stable direction x. The loop comes back through Σ⁺ at ℓ(L⁺)
    on the incoming branch, and the passage by the saddle takes Σ⁺ to Σ⁻,
    so the return to Σ⁻ is one step of the map.

    :param system: :class:`~horseshoe.systems.OdeSystem` at the loop's
        shooting parameter
    :param derived: :class:`~horseshoe.mapcore.MapParams` from
        :func:`derive_map_params`
    :param int samples: number of start points
    :param constants: the :class:`DerivedConstants` behind *derived*
    :return: :class:`ValidationReport`
    :raises PreconditionError: without constants or with ``μ = 0``
    """
    if constants is None or constants.orbit is None:
        raise PreconditionError('validation needs the derived constants and their orbit')
    check_hypotheses(system)
    if not system.mu > 0:
        raise PreconditionError('mu > 0 required')
    orbit = constants.orbit
    origin = tuple(float(v) for v in orbit.at(-orbit.L_minus))
    offset = system.omega * constants.L_minus + phase_shift(constants)
    if t_max is None:
        t_max = 2.0 * (constants.L_plus + constants.L_minus) + 20.0 * math.log(system.epsilon / system.mu) / system.beta

    count = int(samples)
    thetas = TWO_PI * np.arange(count) / count
    zs = -0.9 + 1.8 * np.mod(np.arange(count) * 0.6180339887498949, 1.0)
    jobs = [(system, origin, float(t), float(z), t_max) for t, z in zip(thetas, zs)]
    outcomes = parallel_map(_return_job, jobs, threads)

    rows = list()
    for theta, z, outcome in zip(thetas, zs, outcomes):
        image = step(derived, theta + offset, z)
        row = dict(theta=float(theta), z=float(z), observed=outcome['observed'],
                   predicted='escape' if image is None else 'return', dtheta=None, dz=None)
        if image is not None and outcome['observed'] == 'return':
            theta1 = image[0] - offset
            row['dtheta'] = float(wrap_difference(outcome['theta1'] - theta1))
            row['dz'] = float(outcome['z1'] - image[1])
        rows.append(row)

    report = ValidationReport(system.mu, rows, control_offset=_control_offset(system, orbit))
    logger.info('validation at mu=%g: agreement %.3f', system.mu, report.agreement)
    return report
