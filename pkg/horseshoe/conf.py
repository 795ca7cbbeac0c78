"""
Library settings.

Each value can be overridden in a Django project's settings module by
prefixing its name with ``HORSESHOE_``::

    HORSESHOE_GRID_RESOLUTION = 400
    HORSESHOE_THREADS = 8

Without configured Django settings the defaults below apply.
"""

from django.conf import settings


PREFIX = 'HORSESHOE_'

DEFAULTS = {
    # map_core
    'ROOT_TOL': 1e-12,
    'ESCAPE_FLOOR': 0.0,
    'BOUNDARY_SCAN': 10000,
    # survival_sets
    'GRID_RESOLUTION': 1000,
    'ATTRACTOR_SEEDS': 10000,
    'BURN_IN': 1000,
    'KEEP': 100,
    'PERIOD_TOL': 1e-9,
    # horseshoe_certifier
    'CERTIFY_THETA_SAMPLES': 2000,
    'CERTIFY_Z_SAMPLES': 200,
    'CERTIFY_FOLD_SAMPLES': 10000,
    'SYMBOL_FLOOR': 1e-14,
    # periodic_orbits
    'THETA_SCAN': 4096,
    'NEWTON_TOL': 1e-12,
    'NEWTON_HALVINGS': 40,
    'NEWTON_MAXITER': 100,
    'DEDUP_RADIUS': 1e-8,
    'PERIOD_CAP': 32,
    'HYPERBOLIC_BAND': 1e-9,
    # manifolds_tangency
    'DIRECTION_ORDER': 20,
    'DIRECTION_TOL': 1e-13,
    'DEGENERACY_FLOOR': 1e-28,
    'CURVE_MAX_STEP': 1e-3,
    'CURVE_TOL': 1e-10,
    'GAP_TOL': 1e-10,
    'SPEED_STEP': 1e-6,
    # melnikov_bridge
    'QUAD_RTOL': 1e-10,
    'ODE_RTOL': 1e-11,
    'ODE_ATOL': 1e-13,
    'SHOOT_DELTA': 1e-8,
    # cli
    'THREADS': 1,
}


def get(name):
    """
    Return the setting *name* (without prefix).

    :param str name: setting name, e.g. ``'ROOT_TOL'``
    :return: the project's ``HORSESHOE_<name>`` or the default
    :raises KeyError: if *name* is not a known setting
    """
    default = DEFAULTS[name]
    if settings.configured:
        return getattr(settings, PREFIX + name, default)
    return default
