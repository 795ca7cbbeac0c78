"""
Sampling-based certification of the horseshoe regime.

The map has a horseshoe conjugate to a full shift when the fold strip V_f is
mapped into U and the Jacobian keeps a thin horizontal cone forward and a
thin vertical cone backward::

    𝓕(V_f) ⊂ U
    D𝓕(𝒞_h) ⊂ 𝒞_h    on 𝓕⁻¹(𝓕(V) ∩ V)
    D𝓕⁻¹(𝒞_v) ⊂ 𝒞_v  on 𝓕(V) ∩ V

:func:`certify_horseshoe` checks the three conditions on dense samples and
reports margins, :func:`scan_parameter` sweeps the angular shift a.

The geometry of V does not depend on a, so a scan samples it once.
"""

import logging
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from . import conf
from .exceptions import DegenerateDomain
from .exceptions import NoBoundary
from .exceptions import PreconditionError
from .itinerary import full_shift_ok
from .itinerary import itinerary_tree
from .mapcore import TWO_PI
from .mapcore import domain_boundaries
from .mapcore import fold_strip
from .parallel import parallel_map


logger = logging.getLogger(__name__)

__all__ = [
    'ConeSpec',
    'Sampling',
    'CertificateReport',
    'certify_horseshoe',
    'scan_parameter',
    'scan_rows',
    'proof_case',
    'horizontal_slope',
    'itinerary_tree',
    'full_shift_ok',
]


@dataclass(frozen=True)
class ConeSpec:
    """
    Slope thresholds of the horizontal cone ``|s(v)| < horizontal_bound``
    and the vertical cone ``|s(v)| > vertical_bound``, with ``s(v) = v_z/v_θ``.
    """

    horizontal_bound: float = 0.01
    vertical_bound: float = 100.0

    def __post_init__(self):
        if not 0 < self.horizontal_bound < 1 < self.vertical_bound:
            raise PreconditionError('0 < horizontal_bound < 1 < vertical_bound required')


@dataclass(frozen=True)
class Sampling:
    """
    Sample counts: θ samples per z level of V, z levels, and fold samples in
    total. Defaults come from ``HORSESHOE_CERTIFY_*``.
    """

    theta: int = None
    z: int = None
    fold: int = None

    def __post_init__(self):
        for name in ('theta', 'z', 'fold'):
            if getattr(self, name) is None:
                object.__setattr__(self, name, int(conf.get('CERTIFY_{}_SAMPLES'.format(name.upper()))))
            if getattr(self, name) < 2:
                raise PreconditionError('at least 2 {} samples required'.format(name))

    def as_dict(self):
        return dict(theta=self.theta, z=self.z, fold=self.fold)


@dataclass
class CertificateReport:
    param_a: float
    fold_in_U: bool
    fold_margin: float
    cone_h_ok: bool
    cone_h_worst: float
    cone_v_ok: bool
    cone_v_worst: float
    cones: ConeSpec = field(default_factory=ConeSpec)
    sample_counts: dict = field(default_factory=dict)
    case_counts: dict = field(default_factory=dict)

    @property
    def certified(self):
        return (self.fold_in_U and self.cone_h_ok and self.cone_v_ok
                and self.fold_margin > 0 and self.cone_h_margin > 0 and self.cone_v_margin > 0)

    @property
    def cone_h_margin(self):
        return self.cones.horizontal_bound - self.cone_h_worst

    @property
    def cone_v_margin(self):
        return self.cone_v_worst - self.cones.vertical_bound

    def row(self):
        return dict(
            a=self.param_a,
            certified=int(self.certified),
            fold_margin=self.fold_margin,
            cone_h_margin=self.cone_h_margin,
            cone_v_margin=self.cone_v_margin,
        )

    def as_dict(self):
        return dict(
            param_a=self.param_a,
            certified=self.certified,
            fold_in_U=self.fold_in_U,
            fold_margin=self.fold_margin,
            cone_h_ok=self.cone_h_ok,
            cone_h_worst=self.cone_h_worst,
            cone_v_ok=self.cone_v_ok,
            cone_v_worst=self.cone_v_worst,
            horizontal_bound=self.cones.horizontal_bound,
            vertical_bound=self.cones.vertical_bound,
            sample_counts=dict(self.sample_counts),
            case_counts={str(k): v for k, v in self.case_counts.items()},
        )


def proof_case(params, p):
    """
    Case of the cone estimate a point falls in: 1 if ``𝔽 ≥ √k``, 2 otherwise.
    """
    theta, z = p
    return 1 if params.F(theta, z) >= math.sqrt(params.k) else 2


def horizontal_slope(params, theta, z):
    """
    Slope of the image of the horizontal vector ``(1, 0)``:
    ``γb𝔽^(γ−1)𝔽_θ / (1 − d𝔽_θ/𝔽)``.
    """
    F = params.F(theta, z)
    F_theta = params.F_theta(theta)
    return params.gamma * params.b * F ** (params.gamma - 1.0) * F_theta / (1.0 - params.d * F_theta / F)


@dataclass
class _Geometry:
    """
    a independent samples: V \\ V_f and V_f as flat arrays, plus the
    strip boundaries per z level.
    """

    theta: np.ndarray
    z: np.ndarray
    fold_theta: np.ndarray
    fold_z: np.ndarray
    levels: np.ndarray
    intervals: list


def _sample_geometry(params, sampling):
    levels = np.linspace(-1.0, 1.0, sampling.z)
    per_level = max(2, -(-sampling.fold // sampling.z))
    theta, z, fold_theta, fold_z, intervals = [], [], [], [], []
    for level in levels:
        try:
            interval = domain_boundaries(params, level)
        except NoBoundary as e:
            raise DegenerateDomain('V or U is empty at z={}: {}'.format(level, e))
        intervals.append(interval)
        lo, hi = fold_strip(params, level, interval)
        inner = np.linspace(interval[0], interval[1], sampling.theta + 2)[1:-1]
        outside = (inner <= lo) | (inner >= hi)
        theta.append(inner[outside])
        z.append(np.full(outside.sum(), level))
        fold_theta.append(np.linspace(lo, hi, per_level))
        fold_z.append(np.full(per_level, level))
    return _Geometry(
        np.concatenate(theta), np.concatenate(z),
        np.concatenate(fold_theta), np.concatenate(fold_z),
        levels, intervals,
    )


def _image(params, theta, z):
    F = params.F(theta, z)
    return theta + params.a - params.d * np.log(F), params.b * F ** params.gamma, F


def _fold_margin(params, geometry):
    """
    Signed angular distance of 𝓕(V_f) from V: positive inside U.

    V grows with z, so the U window at the highest image is the narrowest
    and bounds all others.
    """
    theta1, z1, _ = _image(params, geometry.fold_theta, geometry.fold_z)
    try:
        left, right = domain_boundaries(params, float(np.max(z1)))
    except NoBoundary as e:
        raise DegenerateDomain('V or U is empty above the fold image: {}'.format(e))
    x = right + np.mod(theta1 - right, TWO_PI)
    end = left + TWO_PI
    depth_U = np.minimum(x - right, end - x)
    depth_V = np.minimum(x - end, right + TWO_PI - x)
    margin = np.where(x < end, depth_U, -depth_V)
    return float(margin.min())


def _cone_slopes(params, theta, z, cones):
    F = params.F(theta, z)
    F_theta = params.F_theta(theta)
    scale = params.gamma * params.b * F ** (params.gamma - 1.0)
    j11 = 1.0 - params.d * F_theta / F
    j12 = -params.d * params.k / F
    j21 = scale * F_theta
    j22 = scale * params.k

    h = cones.horizontal_bound
    forward = [np.abs((j21 + j22 * s) / (j11 + j12 * s)) for s in (h, -h)]

    # J⁻¹ is the adjugate over det, the scale drops out of the slope
    w0 = 1.0 / cones.vertical_bound
    backward = [np.abs((j11 - j21 * s) / (j22 * s - j12)) for s in (w0, -w0)]
    return np.maximum(*forward), np.minimum(*backward), F


def certify_horseshoe(params, cones=None, sampling=None, geometry=None):
    """
    Check the horseshoe conditions at the parameters *params*.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param cones: :class:`ConeSpec`
    :param sampling: :class:`Sampling`
    :return: :class:`CertificateReport`
    :raises DegenerateDomain: if V or U is empty
    """
    cones = cones or ConeSpec()
    sampling = sampling or Sampling()
    geometry = geometry or _sample_geometry(params, sampling)

    fold_margin = _fold_margin(params, geometry)

    theta1, z1, _ = _image(params, geometry.theta, geometry.z)
    lands = params.F(theta1, z1) > params.escape_floor
    theta, z = geometry.theta[lands], geometry.z[lands]
    if theta.size:
        forward, backward, F = _cone_slopes(params, theta, z, cones)
        cone_h_worst = float(forward.max())
        cone_v_worst = float(backward.min())
        first = int(np.count_nonzero(F >= math.sqrt(params.k)))
    else:
        logger.warning('no sample of V outside the fold lands in V at a=%s', params.a)
        cone_h_worst, cone_v_worst, first = math.inf, 0.0, 0

    report = CertificateReport(
        param_a=params.a,
        fold_in_U=fold_margin > 0,
        fold_margin=fold_margin,
        cone_h_ok=bool(theta.size) and cone_h_worst < cones.horizontal_bound,
        cone_h_worst=cone_h_worst,
        cone_v_ok=bool(theta.size) and cone_v_worst > cones.vertical_bound,
        cone_v_worst=cone_v_worst,
        cones=cones,
        sample_counts=dict(sampling.as_dict(), cone=int(theta.size), fold_points=int(geometry.fold_theta.size)),
        case_counts={1: first, 2: int(theta.size) - first},
    )
    logger.debug('a=%s certified=%s fold margin %.3g', params.a, report.certified, fold_margin)
    return report


def _scan_job(job):
    params, cones, sampling, geometry = job
    return certify_horseshoe(params, cones, sampling, geometry)


def scan_reports(params_base, a_values, cones=None, sampling=None, threads=None):
    """
    :func:`certify_horseshoe` at every a of *a_values*, b held at
    ``params_base.b``.

    :return: list of :class:`CertificateReport`
    """
    cones = cones or ConeSpec()
    sampling = sampling or Sampling()
    geometry = _sample_geometry(params_base, sampling)
    jobs = [(params_base.with_a(a), cones, sampling, geometry) for a in a_values]
    return parallel_map(_scan_job, jobs, threads)


def merge_intervals(reports):
    """
    Merge consecutive equal outcomes into ``((a_first, a_last), certified)``.
    """
    merged = list()
    for report in reports:
        if merged and merged[-1][1] == report.certified:
            (lo, _), certified = merged[-1]
            merged[-1] = ((lo, report.param_a), certified)
        else:
            merged.append(((report.param_a, report.param_a), report.certified))
    return merged


def scan_parameter(params_base, a_range, steps, cones=None, sampling=None, threads=None):
    """
    Sweep a over *a_range* in *steps* equidistant values.

    :param params_base: :class:`~horseshoe.mapcore.MapParams`, its a is ignored
    :param a_range: pair ``(a_lo, a_hi)``
    :param int steps: number of a values, at least 2
    :return: list of ``((a_first, a_last), certified)``
    :raises PreconditionError: if ``steps < 2``
    """
    if steps < 2:
        raise PreconditionError('steps >= 2 required, got {}'.format(steps))
    a_values = np.linspace(a_range[0], a_range[1], int(steps))
    reports = scan_reports(params_base, a_values, cones, sampling, threads)
    return merge_intervals(reports)


def scan_rows(reports):
    """
    CSV rows ``a,certified,fold_margin,cone_h_margin,cone_v_margin``.
    """
    return [report.row() for report in reports]
