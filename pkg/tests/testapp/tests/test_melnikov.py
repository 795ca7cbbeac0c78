import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from horseshoe.exceptions import Divergent
from horseshoe.exceptions import HypothesisViolated
from horseshoe.exceptions import PreconditionError
from horseshoe.melnikov import ValidationReport
from horseshoe.melnikov import _closure_residual
from horseshoe.melnikov import compute_homoclinic_orbit
from horseshoe.melnikov import derive_map_params
from horseshoe.melnikov import harmonic_integrals
from horseshoe.melnikov import melnikov_integrals
from horseshoe.melnikov import phase_shift
from horseshoe.melnikov import select_rho
from horseshoe.melnikov import synthetic_orbit
from horseshoe.melnikov import validate_return_map
from horseshoe.systems import OdeSystem
from horseshoe.systems import Polynomial
from horseshoe.systems import check_hypotheses
from horseshoe.systems import folium
from horseshoe.systems import folium_dissipative
from horseshoe.systems import folium_level
from horseshoe.systems import get_system
from horseshoe.systems import polynomial_system


class PolynomialTestCase(SimpleTestCase):

    def test_01_parse(self):
        p = Polynomial.from_text('2*x^2*y - y^3 + x*y')
        self.assertEqual(p.terms, {(1, 1): 1.0, (2, 1): 2.0, (0, 3): -1.0})
        self.assertEqual(Polynomial.from_text(str(p)), p)
        self.assertEqual(Polynomial.from_text('1e-3*x^2 - 2.5e+1*y^2').terms, {(0, 2): -25.0, (2, 0): 0.001})
        self.assertEqual(Polynomial.from_text('0'), Polynomial())
        self.assertFalse(Polynomial.from_text(''))
        self.assertEqual(str(Polynomial()), '0')
        for bad in ('x', '3*y + x^2', 'x*z', '2**x'):
            with self.assertRaises(PreconditionError):
                Polynomial.from_text(bad)

    def test_02_evaluate(self):
        p = Polynomial.from_text('x^2*y - y^3')
        self.assertEqual(p(2.0, 3.0), 12.0 - 27.0)
        self.assertEqual(p.gradient(2.0, 3.0), (12.0, 4.0 - 27.0))
        self.assertEqual((p + p.scaled(-1.0)).terms, {})
        values = p(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(values, [0.0, 3.0])


class SystemTestCase(SimpleTestCase):

    def test_01_preconditions(self):
        for bad in (dict(alpha=0), dict(omega=0), dict(epsilon=1.0), dict(mu=-1.0)):
            with self.assertRaises(PreconditionError):
                OdeSystem(**dict(dict(alpha=1.2, beta=1.0), **bad))
        with self.assertRaises(PreconditionError):
            get_system('duffing')

    def test_02_hypotheses(self):
        with self.assertRaises(HypothesisViolated) as cm:
            check_hypotheses(folium())
        self.assertEqual(cm.exception.hypothesis, 'dissipative')
        check_hypotheses(folium_dissipative(delta=0.2))

    def test_03_folium(self):
        system = folium(sigma=1.0)
        for x, y in ((1.5, 1.5), (0.3, 0.9), (1.0, 0.5)):
            dx, dy = system.field(x, y)
            # the field is tangent to the level curves of Ψ
            gx, gy = 3 * y - 3 * x ** 2, 3 * x - 3 * y ** 2
            self.assertAlmostEqual(dx * gx + dy * gy, 0.0, places=12)
        custom = polynomial_system(1.2, 1.0, f='y^2', g='-x^2', A='y^2', f_shoot='x*y^2')
        self.assertTrue(custom.shootable)
        self.assertFalse(custom.with_shooting(0.5).shootable)
        self.assertEqual(custom.with_shooting(0.5).f.terms, {(0, 2): 1.0, (1, 2): 0.5})
        self.assertEqual(custom.as_dict()['A'], '1*y^2')
        # polynomials pass through unparsed
        mixed = polynomial_system(1.2, 1.0, f=Polynomial({(0, 2): 1.0}), g='-x^2', g_shoot=Polynomial({(2, 1): 3.0}))
        self.assertEqual(mixed.f, custom.f)
        self.assertEqual(mixed.g_shoot.terms, {(2, 1): 3.0})


class SyntheticOrbitTestCase(SimpleTestCase):

    def test_01_sections(self):
        orbit = synthetic_orbit(1.5, 1.0)
        radius = orbit.radius
        for s in (orbit.L_plus, -orbit.L_minus):
            self.assertAlmostEqual(float(np.interp(s, orbit.s_grid, radius)), 0.05, delta=1e-4)
        alpha, beta = orbit.decay_rates()
        self.assertAlmostEqual(alpha, 1.5, delta=0.02)
        self.assertAlmostEqual(beta, 1.0, delta=0.02)
        with self.assertRaises(PreconditionError):
            orbit.section_times(1e-40)

    def test_02_symmetric_integrals(self):
        orbit = synthetic_orbit(1.0, 1.0)
        constants = melnikov_integrals(orbit, 1.0)
        # R(s) = sech³(s)/4
        self.assertAlmostEqual(constants.A_val, math.pi / 8, delta=1e-5)
        self.assertAlmostEqual(constants.C_val, math.pi / 4 / math.cosh(math.pi / 2), delta=1e-5)
        self.assertLess(abs(constants.S_val), 1e-7)
        self.assertAlmostEqual(constants.P_L, 1.0, delta=1e-4)
        self.assertAlmostEqual(constants.P_L_plus / math.cosh(constants.L_plus), 1.0, delta=1e-5)
        self.assertAlmostEqual(constants.tail_rate, 3.0, delta=0.1)
        self.assertEqual(set(constants.phi_L_fourier), {1})

    def test_03_profile_scaling(self):
        alpha, beta = 1.5, 1.0
        orbit = synthetic_orbit(alpha, beta)
        constants = melnikov_integrals(orbit, 1.0)
        kappa = alpha + beta
        expected = math.exp(0.5 * (beta - alpha) * (constants.L_plus + constants.L_minus)) \
            * math.cosh(0.5 * kappa * constants.L_plus) / math.cosh(0.5 * kappa * constants.L_minus)
        self.assertAlmostEqual(constants.P_L / expected, 1.0, delta=1e-5)
        self.assertLess(constants.P_L, 1.0)

    def test_04_harmonics(self):
        rows, rate = harmonic_integrals(synthetic_orbit(1.0, 1.0), 1.0, 8)
        self.assertEqual([n for n, _, _ in rows], list(range(1, 9)))
        for n, C, S in rows[:4]:
            expected = math.pi / 8 * (1 + n ** 2) / math.cosh(math.pi * n / 2)
            self.assertAlmostEqual(C / expected, 1.0, delta=1e-3)
        self.assertTrue(0.5 < rate < math.pi / 2)

    def test_05_bad_input(self):
        orbit = synthetic_orbit(1.0, 1.0)
        with self.assertRaises(PreconditionError):
            melnikov_integrals(orbit, 1.0, L=(1e3, 1.0))
        growing = replace(orbit, E_profile=-3.0 * orbit.E_profile)
        with self.assertRaises(Divergent):
            melnikov_integrals(growing, 1.0)


class DeriveTestCase(SimpleTestCase):

    def setUp(self):
        self.orbit = synthetic_orbit(1.5, 1.0)
        self.constants = melnikov_integrals(self.orbit, 1.0)
        self.system = OdeSystem(1.5, 1.0, rho=select_rho(self.constants), mu=1e-6, epsilon=0.05)

    def test_01_select_rho(self):
        rho = select_rho(self.constants)
        c = math.hypot(self.constants.C_val, self.constants.S_val) / (rho * self.constants.A_val)
        self.assertAlmostEqual(c, 6.0)
        self.assertAlmostEqual(select_rho(self.constants, window=(2.0, 4.0)), rho * 2)
        with self.assertRaises(PreconditionError):
            select_rho(self.constants, window=(0.5, 2.0))
        with self.assertRaises(PreconditionError):
            select_rho(self.constants, omega=2.0)

    def test_02_map_params(self):
        params = derive_map_params(self.system, self.constants)
        c = self.constants
        scale = c.A_L * self.system.rho
        self.assertAlmostEqual(params.d, 1.0)
        self.assertAlmostEqual(params.gamma, 1.5)
        self.assertAlmostEqual(params.c, 6.0, delta=0.1)
        self.assertAlmostEqual(params.k, c.P_L / (c.P_L_plus * scale))
        self.assertAlmostEqual(params.b / ((1e-6 / 0.05) ** 0.5 * (c.P_L_plus * scale) ** 1.5), 1.0)
        expected_a = math.log(1e6) + c.L_plus + c.L_minus + math.log(0.05 * c.P_L_plus * scale)
        self.assertAlmostEqual(params.a, expected_a)
        self.assertEqual(params.forcing.fourier_sin[0], 1.0)
        self.assertEqual(c.a, params.a)
        self.assertEqual(math.atan2(*c.phi_L_fourier[1]), phase_shift(c))

    def test_03_gates(self):
        with self.assertRaises(HypothesisViolated):
            derive_map_params(replace(self.system, alpha=1.0), self.constants)
        with self.assertRaises(PreconditionError):
            derive_map_params(replace(self.system, mu=0.0), self.constants)
        with self.assertRaises(PreconditionError):
            derive_map_params(replace(self.system, rho=-self.system.rho), self.constants)
        with self.assertRaises(HypothesisViolated) as cm:
            derive_map_params(self.system, replace(self.constants, A_L=0.0))
        self.assertEqual(cm.exception.hypothesis, 'nonzero-A')
        with self.assertRaises(HypothesisViolated):
            phase_shift(replace(self.constants, phi_L_fourier={}))


class HomoclinicOrbitTestCase(SimpleTestCase):

    def test_01_folium_loop(self):
        orbit = compute_homoclinic_orbit(folium(sigma=1.0))
        self.assertIsNone(orbit.shoot_parameter)
        self.assertLess(abs(orbit.closure_residual), 1e-9)
        self.assertLess(np.max(np.abs(folium_level(orbit.ell[:, 0], orbit.ell[:, 1]))), 1e-7)
        self.assertAlmostEqual(float(np.max(orbit.radius)), 1.5 * math.sqrt(2), delta=1e-4)
        np.testing.assert_allclose(orbit.at(0.0), [1.5, 1.5], atol=1e-5)
        alpha, beta = orbit.decay_rates()
        self.assertAlmostEqual(alpha, 1.0, delta=0.05)
        self.assertAlmostEqual(beta, 1.0, delta=0.05)
        self.assertEqual(sorted(next(orbit.rows())), ['E', 'H', 's', 'u', 'v', 'x', 'y'])


class ShootingTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = folium_dissipative(sigma=1.0, delta=0.2, mu=1e-6)
        cls.orbit = compute_homoclinic_orbit(cls.system)
        cls.shot = cls.system.with_shooting(cls.orbit.shoot_parameter)
        cls.constants = melnikov_integrals(cls.orbit, cls.shot.omega)
        cls.shot = replace(cls.shot, rho=select_rho(cls.constants))

    def test_01_closed(self):
        self.assertIsNotNone(self.orbit.shoot_parameter)
        self.assertTrue(-2 <= self.orbit.shoot_parameter <= 2)
        self.assertLess(abs(self.orbit.closure_residual), 1e-9)
        alpha, beta = self.orbit.decay_rates()
        self.assertAlmostEqual(alpha, 1.2, delta=0.1)
        self.assertAlmostEqual(beta, 1.0, delta=0.1)

    def test_02_derived(self):
        params = derive_map_params(self.shot, self.constants)
        self.assertAlmostEqual(params.gamma, 1.2)
        self.assertAlmostEqual(params.d, 1.0)
        self.assertGreater(params.b, 0)
        self.assertTrue(2 < params.c < 10)

    def test_03_validation(self):
        params = derive_map_params(self.shot, self.constants)
        report = validate_return_map(self.shot, params, 6, self.constants)
        self.assertIsInstance(report, ValidationReport)
        self.assertEqual(len(report.samples), 6)
        self.assertTrue(all(row['observed'] in ('return', 'escape', 'failed') for row in report.samples))
        self.assertTrue(0.0 <= report.agreement <= 1.0)
        self.assertLess(report.control_offset, 1e-6)
        data = report.as_dict()
        self.assertEqual(data['mu'], 1e-6)
        with self.assertRaises(PreconditionError):
            validate_return_map(self.shot, params, 6)

    def test_04_signed_residual(self):
        delta, t_max = 1e-8, 100.0
        lam = self.orbit.shoot_parameter
        for value in np.linspace(-0.5, 0.5, 5):
            residual = _closure_residual(self.system.with_shooting(value), delta, t_max)
            self.assertTrue(math.isfinite(residual))
        below = _closure_residual(self.system.with_shooting(lam - 0.05), delta, t_max)
        above = _closure_residual(self.system.with_shooting(lam + 0.05), delta, t_max)
        self.assertLess(below * above, 0)
        self.assertLess(abs(_closure_residual(self.system.with_shooting(lam), delta, t_max)), 1e-9)

    def test_05_shooting_parameter(self):
        # first order: ∫∇Ψ·(−δx, 0) dt = 9δ/2 and ∫xy|∇Ψ|² dt = 8√3π along the loop
        slope = -4.5 / (8 * math.sqrt(3) * math.pi)
        orbit = compute_homoclinic_orbit(folium_dissipative(sigma=1.0, delta=0.02))
        self.assertAlmostEqual(orbit.shoot_parameter, 0.02 * slope, delta=0.1 * abs(0.02 * slope))
        # same sign and order at the stronger dissipation
        self.assertTrue(0.1 < self.orbit.shoot_parameter / slope < 0.4)

    def test_06_agreement(self):
        params = derive_map_params(self.shot, self.constants)
        report = validate_return_map(self.shot, params, 12, self.constants)
        offset = self.shot.omega * self.constants.L_minus + phase_shift(self.constants)
        clear = [row for row in report.decided if abs(params.F(row['theta'] + offset, row['z'])) >= 0.5]
        self.assertGreaterEqual(len(clear), 3)
        for row in clear:
            self.assertEqual(row['observed'], row['predicted'], row)
        self.assertIn('return', [row['observed'] for row in clear])
        self.assertIn('escape', [row['observed'] for row in clear])
