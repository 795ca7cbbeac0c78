"""
Execution of a :class:`~horseshoe.runconfig.RunConfig`.

Each command has a handler that calls the owning module, stages its
artifacts and returns a one line summary. Handlers do not catch toolkit
errors; the caller turns them into exit codes.
"""

import logging
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace

import numpy as np

from .artifacts import ArtifactSet
from .artifacts import output_dir
from .certifier import ConeSpec
from .certifier import Sampling
from .certifier import certify_horseshoe
from .certifier import merge_intervals
from .certifier import scan_reports
from .certifier import scan_rows
from .exceptions import AnalysisNegative
from .itinerary import full_shift_ok
from .itinerary import itinerary_tree
from .itinerary import symbol_label
from .manifolds import find_tangency
from .manifolds import intersection_count
from .manifolds import left_saddle
from .mapcore import PhasePoint
from .melnikov import compute_homoclinic_orbit
from .melnikov import derive_map_params
from .melnikov import harmonic_integrals
from .melnikov import melnikov_integrals
from .melnikov import select_rho
from .melnikov import validate_return_map
from .periodic import find_fixed_points
from .periodic import find_periodic_orbits
from .survival import RegimeReport
from .survival import attractor_sample
from .survival import classify_regime
from .survival import escape_time_grid
from .survival import horizontal_band_count
from .survival import lyapunov_bootstrap
from .survival import orbit_trace
from .survival import survived_fraction


logger = logging.getLogger(__name__)

UNFOLDING_STEP = 1e-3

FIXED_POINT_FIELDS = ('m', 'theta', 'z', 'F', 'l1_re', 'l1_im', 'l2_re', 'l2_im', 'kind')


@dataclass
class RunResult:
    """
    Summary line and written files of a run.
    """

    summary: str
    paths: list = field(default_factory=list)


def _cones(config):
    return ConeSpec(config.cone_h, config.cone_v)


def _sampling(config):
    return Sampling(config.theta_samples, config.z_samples, config.fold_samples)


def run_escape_map(config, artifacts):
    params = config.map_params()
    grid = escape_time_grid(params, config.n, config.resolution, threads=config.threads)
    fraction = survived_fraction(grid)
    artifacts.add_csv('escape', ('theta', 'z', 'escape_iter'), grid.rows())
    artifacts.add_json('escape', dict(
        params=params.as_dict(), n=config.n, resolution=[grid.theta_res, grid.z_res],
        survived_fraction=fraction, horizontal_bands=horizontal_band_count(grid),
    ))
    if fraction == 0:
        return RegimeReport(params.a, 'full-escape', fraction).summary()
    return 'survived fraction after {} iterations: {:.6g}'.format(config.n, fraction)


def run_orbit(config, artifacts):
    params = config.map_params()
    trace = orbit_trace(params, PhasePoint(config.theta, config.z), config.n, config.lyapunov)
    artifacts.add_csv('orbit', ('iter', 'theta', 'z'), trace.rows())
    if trace.escaped_at is not None:
        return 'orbit: escaped at iteration {}'.format(trace.escaped_at)
    if trace.lyapunov is not None:
        return 'orbit: {} points, lyapunov {:.6g}'.format(len(trace), trace.lyapunov)
    return 'orbit: {} points'.format(len(trace))


def run_attractor(config, artifacts):
    params = config.map_params()
    points = attractor_sample(
        params, config.burn_in, config.keep, config.seeds, config.rng_seed, config.threads,
    )
    artifacts.add_csv('attractor', ('theta', 'z'), points)
    return 'attractor: {} points'.format(len(points))


def run_lyapunov(config, artifacts):
    params = config.map_params()
    estimate, error = lyapunov_bootstrap(params, PhasePoint(config.theta, config.z), config.n, config.blocks)
    artifacts.add_json('lyapunov', dict(
        params=params.as_dict(), seed=[config.theta, config.z], n=config.n,
        lyapunov=estimate, standard_error=error,
    ))
    return 'lyapunov: {:.6g} +- {:.2g}'.format(estimate, error)


def run_fixed_points(config, artifacts):
    params = config.map_params()
    m_range = (config.m_min, config.m_max) if config.m_min is not None else None
    records = find_fixed_points(params, m_range)
    orbits = list()
    if config.period > 1:
        orbits = find_periodic_orbits(params, config.period, threads=config.threads)
    artifacts.add_csv('fixed_points', FIXED_POINT_FIELDS, (r.row() for r in records))
    artifacts.add_json('fixed_points', dict(
        params=params.as_dict(),
        fixed_points=[r.as_dict() for r in records],
        periodic_orbits=[r.as_dict() for r in orbits],
    ))
    kinds = dict()
    for record in records + orbits:
        kinds[record.kind] = kinds.get(record.kind, 0) + 1
    detail = ', '.join('{} {}'.format(count, kind) for kind, count in sorted(kinds.items()))
    return 'fixed points: {}{}'.format(len(records), ' ({})'.format(detail) if detail else '')


def run_certify(config, artifacts):
    params = config.map_params()
    report = certify_horseshoe(params, _cones(config), _sampling(config))
    data = report.as_dict()
    regime = 'inconclusive'
    if report.certified:
        tree = itinerary_tree(params, depth=config.tree_depth)
        data['symbols'] = [symbol_label(s) for s in tree.SYMBOLS]
        data['full_shift'] = full_shift_ok(tree)
        data['itineraries'] = [
            [symbol_label(s) for s in node.itinerary] for node in tree.iterate() if node.is_leaf and node.depth
        ]
        if data['full_shift']:
            regime = 'horseshoe-certified'
    artifacts.add_json('certificate', data)
    if regime == 'horseshoe-certified':
        return RegimeReport(params.a, regime, 0.0, certified=True).summary()
    return 'certificate: not certified (fold margin {:.3g}, cone margins {:.3g}, {:.3g})'.format(
        report.fold_margin, report.cone_h_margin, report.cone_v_margin)


def run_scan(config, artifacts):
    params = config.map_params()
    a_values = np.linspace(config.a_lo, config.a_hi, config.steps)
    reports = scan_reports(params, a_values, _cones(config), _sampling(config), config.threads)
    intervals = merge_intervals(reports)
    artifacts.add_csv(
        'scan', ('a', 'certified', 'fold_margin', 'cone_h_margin', 'cone_v_margin'), scan_rows(reports),
    )
    artifacts.add_json('scan', dict(
        params=params.as_dict(),
        intervals=[dict(a_first=lo, a_last=hi, certified=ok) for (lo, hi), ok in intervals],
    ))
    certified = sum(1 for _, ok in intervals if ok)
    return 'scan: {} certified interval(s) over {} values of a'.format(certified, len(reports))


def _unfolding(params, m, a_star):
    counts = dict()
    for label, a in (('below', a_star - UNFOLDING_STEP), ('above', a_star + UNFOLDING_STEP)):
        shifted = params.with_a(a)
        try:
            counts[label] = intersection_count(shifted, left_saddle(shifted, m))
        except AnalysisNegative as exc:
            logger.warning('no intersection count at a=%.12g: %s', a, exc)
            counts[label] = None
    return counts


def run_tangency(config, artifacts):
    params = config.map_params()
    report = find_tangency(params, config.m, (config.a_lo, config.a_hi), config.tol)
    data = report.as_dict()
    data['intersections'] = _unfolding(params, config.m, report.a_star)
    artifacts.add_json('tangency', data)
    return 'tangency: a*={:.12g}, gap {:.2e}, speed {:.4g}'.format(report.a_star, report.gap, report.crossing_speed)


def _derive(config):
    system = config.system()
    orbit = compute_homoclinic_orbit(system, config.shoot_tol)
    if orbit.shoot_parameter is not None:
        system = system.with_shooting(orbit.shoot_parameter)
    constants = melnikov_integrals(orbit, system.omega, forcing=system.forcing)
    if config.rho is None:
        system = replace(system, rho=select_rho(constants))
    derived = derive_map_params(system, constants)
    return system, orbit, constants, derived


def run_melnikov(config, artifacts):
    system, orbit, constants, derived = _derive(config)
    rows, rate = harmonic_integrals(orbit, system.omega, config.harmonics)
    artifacts.add_csv('orbit', ('s', 'x', 'y', 'u', 'v', 'E', 'H'), orbit.rows())
    artifacts.add_json('constants', dict(
        system=system.as_dict(),
        shoot_parameter=orbit.shoot_parameter,
        closure_residual=orbit.closure_residual,
        decay_rates=list(orbit.decay_rates()),
        integrals=constants.as_dict(),
        harmonics=[dict(n=n, C=C, S=S) for n, C, S in rows],
        harmonic_decay=rate,
        map=derived.as_dict(),
    ))
    return 'derived map: a={:.6g} b={:.3g} c={:.4g} d={:.4g} gamma={:.4g} k={:.3g}'.format(
        derived.a, derived.b, derived.c, derived.d, derived.gamma, derived.k)


def run_validate(config, artifacts):
    system, orbit, constants, derived = _derive(config)
    report = validate_return_map(system, derived, config.samples, constants, config.threads, config.t_max)
    data = report.as_dict()
    data['map'] = derived.as_dict()
    artifacts.add_json('validation', data)
    return 'validation: agreement {:.3f} at mu={:g}'.format(report.agreement, system.mu)


def run_regime(config, artifacts):
    params = config.map_params()
    report = classify_regime(
        params, config.n, config.resolution or 200, config.burn_in,
        certify=config.certify, threads=config.threads,
    )
    artifacts.add_json('regime', report.as_dict())
    return report.summary()


HANDLERS = {
    'escape-map': run_escape_map,
    'orbit': run_orbit,
    'attractor': run_attractor,
    'lyapunov': run_lyapunov,
    'fixed-points': run_fixed_points,
    'certify': run_certify,
    'scan': run_scan,
    'tangency': run_tangency,
    'melnikov': run_melnikov,
    'validate': run_validate,
    'regime': run_regime,
}


def execute(config):
    """
    Run *config* and write its artifacts.

    Nothing is written unless the handler succeeds.

    :param config: :class:`~horseshoe.runconfig.RunConfig`
    :return: :class:`RunResult`
    :raises HorseshoeError: as raised by the owning module
    """
    artifacts = ArtifactSet(output_dir(config.output), config.stem, config.text(), config.digest)
    logger.info('running %s (config %s)', config.command, config.digest[:12])
    summary = HANDLERS[config.command](config, artifacts)
    return RunResult(summary, artifacts.commit())
