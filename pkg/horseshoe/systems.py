"""
Planar saddle systems with periodic forcing::

    dx/dt = −αx + f(x, y) + μ·A(x, y)·(ρ + 𝒬(ωt))
    dy/dt =  βy + g(x, y) + μ·B(x, y)·(ρ + 𝒬(ωt))

f, g, A and B are polynomials without constant and linear terms, given as
coefficient tables or as text::

    >>> Polynomial.from_text('0.5*y^2 + 3*x*y - x^3').terms
    {(0, 2): 0.5, (1, 1): 3.0, (3, 0): -1.0}

A system may carry a one parameter shooting family ``f + λ·f_shoot``,
``g + λ·g_shoot`` used to close the homoclinic loop.
"""

import logging
import re
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace

from .exceptions import HypothesisViolated
from .exceptions import PreconditionError
from .mapcore import SINE
from .mapcore import ForcingProfile


logger = logging.getLogger(__name__)

_MONOMIAL = re.compile(
    r'^(?P<coef>[0-9.]+(?:[eE][-+]?[0-9]+)?)?\*?'
    r'(?P<factors>(?:[xy](?:\^[0-9]+)?\*?)*)$'
)
_FACTOR = re.compile(r'([xy])(?:\^([0-9]+))?')


class Polynomial:
    """
    Polynomial ``Σ c_ij x^i y^j`` with ``i + j ≥ 2``.

    :param dict terms: ``{(i, j): c_ij}``
    :raises PreconditionError: on a constant or linear term
    """

    def __init__(self, terms=None):
        self.terms = dict()
        for (i, j), coef in sorted((terms or dict()).items()):
            if i < 0 or j < 0:
                raise PreconditionError('negative power in term {}'.format((i, j)))
            if i + j < 2:
                raise PreconditionError('polynomial terms need degree >= 2, got x^{} y^{}'.format(i, j))
            if coef:
                self.terms[(int(i), int(j))] = float(coef)

    def __repr__(self):
        return 'Polynomial({!r})'.format(self.terms)

    def __str__(self):
        if not self.terms:
            return '0'
        parts = list()
        for (i, j), coef in self.terms.items():
            factors = ['x^{}'.format(i) if i > 1 else 'x'] * bool(i) + ['y^{}'.format(j) if j > 1 else 'y'] * bool(j)
            parts.append('{:g}*{}'.format(coef, '*'.join(factors)))
        return ' + '.join(parts).replace('+ -', '- ')

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    @classmethod
    def from_text(cls, text):
        """
        Parse a sum of monomials like ``'2*x^2*y - y^3'``.

        :raises PreconditionError: on a malformed term
        """
        text = text.replace(' ', '')
        if text in ('', '0'):
            return cls()
        terms = dict()
        for sign, body in re.findall(r'([-+]?)((?:[0-9.]+[eE][-+]?[0-9]+|[^-+])+)', text):
            match = _MONOMIAL.match(body)
            if not match or not match['factors']:
                raise PreconditionError('malformed polynomial term {!r}'.format(sign + body))
            coef = float(match['coef']) if match['coef'] else 1.0
            powers = [0, 0]
            for var, power in _FACTOR.findall(match['factors']):
                powers[var == 'y'] += int(power or 1)
            key = tuple(powers)
            terms[key] = terms.get(key, 0.0) + (-coef if sign == '-' else coef)
        return cls(terms)

    def __call__(self, x, y):
        return sum(c * x ** i * y ** j for (i, j), c in self.terms.items())

    def gradient(self, x, y):
        """
        ``(∂_x p, ∂_y p)`` at ``(x, y)``.
        """
        px = sum(c * i * x ** (i - 1) * y ** j for (i, j), c in self.terms.items() if i)
        py = sum(c * j * x ** i * y ** (j - 1) for (i, j), c in self.terms.items() if j)
        return px, py

    def __add__(self, other):
        terms = dict(self.terms)
        for key, coef in other.terms.items():
            terms[key] = terms.get(key, 0.0) + coef
        return Polynomial(terms)

    def scaled(self, factor):
        return Polynomial({key: factor * coef for key, coef in self.terms.items()})


ZERO = Polynomial()


@dataclass(frozen=True)
class OdeSystem:
    """
    A forced planar saddle system.

    :param float alpha: stable rate of the saddle
    :param float beta: unstable rate of the saddle
    :param f: nonlinear part of dx/dt, :class:`Polynomial`
    :param g: nonlinear part of dy/dt, :class:`Polynomial`
    :param A: forcing shape of dx/dt, :class:`Polynomial`
    :param B: forcing shape of dy/dt, :class:`Polynomial`
    :param forcing: forcing profile 𝒬 as :class:`~horseshoe.mapcore.ForcingProfile`
    :param float omega: forcing frequency
    :param float rho: constant forcing offset
    :param float mu: forcing amplitude
    :param float epsilon: size of the saddle neighborhood
    :param f_shoot: shooting term of dx/dt
    :param g_shoot: shooting term of dy/dt
    :param shoot_range: bracket of the shooting parameter λ
    :param str name: label of the system
    """

    alpha: float
    beta: float
    f: Polynomial = ZERO
    g: Polynomial = ZERO
    A: Polynomial = ZERO
    B: Polynomial = ZERO
    forcing: ForcingProfile = field(default=SINE)
    omega: float = 1.0
    rho: float = 1.0
    mu: float = 1e-6
    epsilon: float = 0.05
    f_shoot: Polynomial = ZERO
    g_shoot: Polynomial = ZERO
    shoot_range: tuple = (-2.0, 2.0)
    name: str = 'custom'

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise PreconditionError('alpha > 0 and beta > 0 required')
        if not self.omega > 0:
            raise PreconditionError('omega > 0 required, got {}'.format(self.omega))
        if not 0 < self.epsilon < 1:
            raise PreconditionError('0 < epsilon < 1 required, got {}'.format(self.epsilon))
        if self.mu < 0:
            raise PreconditionError('mu >= 0 required, got {}'.format(self.mu))
        if self.mu > 1e-2 * self.epsilon:
            logger.warning('mu=%g is not small against epsilon=%g', self.mu, self.epsilon)

    @property
    def shootable(self):
        return bool(self.f_shoot or self.g_shoot)

    def with_shooting(self, lam):
        """
        The system with the shooting terms folded in at ``λ = lam``.
        """
        return replace(
            self,
            f=self.f + self.f_shoot.scaled(lam),
            g=self.g + self.g_shoot.scaled(lam),
            f_shoot=ZERO, g_shoot=ZERO,
        )

    def with_mu(self, mu):
        return replace(self, mu=mu)

    def field(self, x, y):
        """
        Unperturbed vector field.
        """
        return -self.alpha * x + self.f(x, y), self.beta * y + self.g(x, y)

    def field_jacobian(self, x, y):
        """
        ``(f_x, f_y, g_x, g_y)``, partials of the nonlinear terms.
        """
        fx, fy = self.f.gradient(x, y)
        gx, gy = self.g.gradient(x, y)
        return fx, fy, gx, gy

    def forced_rhs(self, t, state, mu=None):
        """
        Right hand side of the forced system for :func:`scipy.integrate.solve_ivp`.
        """
        mu = self.mu if mu is None else mu
        x, y = state
        drive = mu * (self.rho + self.forcing.value(self.omega * t))
        dx, dy = self.field(x, y)
        return [dx + drive * self.A(x, y), dy + drive * self.B(x, y)]

    def rhs(self, t, state):
        x, y = state
        return list(self.field(x, y))

    def as_dict(self):
        return dict(
            name=self.name,
            alpha=self.alpha, beta=self.beta,
            f=str(self.f), g=str(self.g), A=str(self.A), B=str(self.B),
            forcing=str(self.forcing),
            omega=self.omega, rho=self.rho, mu=self.mu, epsilon=self.epsilon,
        )


def check_hypotheses(system):
    """
    Check the saddle is dissipative, ``0 < β < α``, and warn on near
    resonance of the eigenvalue ratio.

    :raises HypothesisViolated: if ``β ≥ α``
    """
    if not system.beta < system.alpha:
        raise HypothesisViolated(
            'saddle is not dissipative: beta={} >= alpha={}'.format(system.beta, system.alpha),
            hypothesis='dissipative',
        )
    ratio = system.alpha / system.beta
    for m in range(1, 6):
        if abs(ratio * m - round(ratio * m)) < 1e-3:
            logger.warning('eigenvalue ratio %g is close to the resonance %d/%d', ratio, round(ratio * m), m)
            break


def _folium_terms(kappa):
    # κΨ·(x, y) with Ψ = 3xy − x³ − y³
    f = {(2, 1): 3 * kappa, (4, 0): -kappa, (1, 3): -kappa}
    g = {(1, 2): 3 * kappa, (3, 1): -kappa, (0, 4): -kappa}
    return f, g


def folium(sigma=1.0, kappa=0.0, **kwargs):
    """
    Saddle whose unstable and stable branches close along the folium
    ``Ψ = 3xy − x³ − y³ = 0``. The field is tangent to the level curves of Ψ
    up to the correction ``κΨ·(x, y)`` which vanishes on the loop, so the
    loop is exact. Here ``α = β = σ``: the saddle is resonant and serves
    only as a testbed for the loop computation.
    """
    f, g = _folium_terms(kappa)
    f[(0, 2)] = f.get((0, 2), 0.0) + sigma
    g[(2, 0)] = g.get((2, 0), 0.0) - sigma
    kwargs.setdefault('A', Polynomial({(0, 2): 1.0}))
    return OdeSystem(sigma, sigma, Polynomial(f), Polynomial(g), name='folium', **kwargs)


def folium_dissipative(sigma=1.0, delta=0.2, kappa=0.0, **kwargs):
    """
    The folium system with the stable rate raised to ``α = σ + δ``. The loop
    is no longer invariant and is restored by shooting in the normal term
    ``λ·xy·∇Ψ``.
    """
    system = folium(sigma, kappa, **kwargs)
    shoot_f = Polynomial({(1, 2): 3.0, (3, 1): -3.0})
    shoot_g = Polynomial({(2, 1): 3.0, (1, 3): -3.0})
    return replace(
        system, alpha=sigma + delta, f_shoot=shoot_f, g_shoot=shoot_g,
        name='folium-dissipative',
    )


def folium_level(x, y):
    return 3 * x * y - x ** 3 - y ** 3


SYSTEMS = {
    'folium': folium,
    'folium-dissipative': folium_dissipative,
}
"""
Built-in systems by name.
"""


def polynomial_system(alpha, beta, f='0', g='0', A='0', B='0', **kwargs):
    """
    A system from polynomial texts, see :meth:`Polynomial.from_text`.
    """
    def parse(p):
        return p if isinstance(p, Polynomial) else Polynomial.from_text(p)

    for key in ('f_shoot', 'g_shoot'):
        if key in kwargs:
            kwargs[key] = parse(kwargs[key])
    return OdeSystem(alpha, beta, parse(f), parse(g), parse(A), parse(B), **kwargs)


def get_system(name, **kwargs):
    """
    Build the built-in system *name*.

    :raises PreconditionError: if the name is unknown
    """
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise PreconditionError('unknown system {!r}, choose from {}'.format(name, ', '.join(SYSTEMS)))
    return factory(**kwargs)
