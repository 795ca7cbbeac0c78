import math

import numpy as np
from django.test import SimpleTestCase

from horseshoe.exceptions import NotFixed
from horseshoe.exceptions import PreconditionError
from horseshoe.mapcore import MapParams
from horseshoe.mapcore import PhasePoint
from horseshoe.mapcore import dtheta1_dtheta
from horseshoe.mapcore import step
from horseshoe.periodic import basin_check
from horseshoe.periodic import classify_fixed_point
from horseshoe.periodic import find_fixed_points
from horseshoe.periodic import find_periodic_orbits
from horseshoe.periodic import find_saddle_family
from horseshoe.periodic import fixed_point_da
from horseshoe.periodic import fixed_point_distance
from horseshoe.periodic import kind_of
from horseshoe.periodic import multipliers_of
from horseshoe.periodic import saddle_family_start
from horseshoe.periodic import winding_F


SINK = dict(a=2, b=0.005, c=3, d=2, gamma=math.sqrt(2))


class FixedPointTestCase(SimpleTestCase):

    def setUp(self):
        self.params = MapParams(**SINK)

    def test_01_sink_and_saddle(self):
        records = find_fixed_points(self.params, (0, 0))
        self.assertEqual(len(records), 2)
        sin_star = (math.e - 1 - 0.005 * math.e ** math.sqrt(2)) / 3
        self.assertAlmostEqual(sin_star, 0.5659, places=4)
        for record in records:
            self.assertEqual(record.winding_m, 0)
            self.assertAlmostEqual(math.sin(record.point.theta), sin_star, places=10)
            self.assertAlmostEqual(record.F_value, math.e, places=10)
        sink, = [r for r in records if r.kind == 'sink']
        saddle, = [r for r in records if r.kind == 'saddle']
        self.assertGreater(math.cos(sink.point.theta), 0)
        self.assertLess(math.cos(saddle.point.theta), 0)
        self.assertTrue(all(abs(l) < 1 for l in sink.multipliers))
        self.assertAlmostEqual(dtheta1_dtheta(self.params, sink.point.theta, sink.point.z), -0.8198, delta=1e-3)
        self.assertAlmostEqual(abs(sink.multipliers[0]), 0.7957, delta=1e-3)
        self.assertEqual(sink.as_dict()['kind'], 'sink')
        self.assertEqual(len(sink.row()), 9)

    def test_02_classify(self):
        sink = [r for r in find_fixed_points(self.params, (0, 0)) if r.kind == 'sink'][0]
        again = classify_fixed_point(self.params, sink.point)
        self.assertEqual(again.kind, 'sink')
        with self.assertRaises(NotFixed):
            classify_fixed_point(self.params, PhasePoint(0.0, 0.0))
        with self.assertRaises(NotFixed):
            classify_fixed_point(self.params, PhasePoint(-math.pi / 2, 0.0))

    def test_03_multipliers(self):
        l1, l2 = multipliers_of(np.array([[3.0, 0.0], [0.0, 0.5]]))
        self.assertEqual((l1, l2), (3 + 0j, 0.5 + 0j))
        l1, l2 = multipliers_of(np.array([[0.0, -1.0], [1.0, 0.0]]))
        self.assertAlmostEqual(abs(l1), 1.0)
        self.assertEqual(kind_of((l1, l2)), 'nonhyperbolic')
        self.assertEqual(kind_of((0.5, 0.1)), 'sink')
        self.assertEqual(kind_of((2.0, 0.1)), 'saddle')
        self.assertEqual(kind_of((2.0, 1.5)), 'source')

    def test_04_parameter_speed(self):
        sink = [r for r in find_fixed_points(self.params, (0, 0)) if r.kind == 'sink'][0]
        speed = fixed_point_da(self.params, sink)
        self.assertAlmostEqual(speed.dtheta_da, speed.fd_dtheta_da, delta=1e-4)
        self.assertAlmostEqual(speed.dz_da, speed.fd_dz_da, delta=1e-5)

    def test_05_saddle_family(self):
        params = MapParams(a=0.0, b=1e-4, c=3, d=2, gamma=math.sqrt(2))
        self.assertEqual(saddle_family_start(2), 7)
        self.assertEqual(saddle_family_start(2, 'inclusive'), 6)
        with self.assertRaises(PreconditionError):
            saddle_family_start(2, 'loose')
        family = find_saddle_family(params, limit=3)
        # one saddle on each side of V per winding; 𝔽_9 is below the floor
        self.assertEqual([r.winding_m for r in family], [7, 7, 8, 8])
        self.assertTrue(all(r.kind == 'saddle' for r in family))
        for record in family:
            # 𝔽 is of order e^-22 and below, ln 𝔽 only holds a few digits
            self.assertAlmostEqual(math.log(record.F_value), math.log(winding_F(params, record.winding_m)), delta=1e-2)
            self.assertLess(record.F_value, 0.01)
            self.assertLess(fixed_point_distance(params, record.point), 1e-10)
        with self.assertRaises(NotFixed):
            find_saddle_family(params, limit=0)

    def test_06_distance(self):
        sink = [r for r in find_fixed_points(self.params, (0, 0)) if r.kind == 'sink'][0]
        self.assertLess(fixed_point_distance(self.params, sink.point), 1e-12)
        moved = PhasePoint(sink.point.theta + 1e-5, sink.point.z)
        self.assertAlmostEqual(fixed_point_distance(self.params, moved), 1e-5, delta=1e-7)
        self.assertEqual(fixed_point_distance(self.params, PhasePoint(-math.pi / 2, 0.0)), math.inf)


class PeriodicOrbitTestCase(SimpleTestCase):

    def test_01_period_one_matches_fixed_points(self):
        params = MapParams(**SINK)
        sink = [r for r in find_fixed_points(params, (0, 0)) if r.kind == 'sink'][0]
        seeds = [PhasePoint(sink.point.theta + 1e-4, sink.point.z)]
        orbits = find_periodic_orbits(params, 1, seeds=seeds)
        self.assertEqual(len(orbits), 1)
        self.assertLess(orbits[0].point.distance(sink.point), 1e-9)
        self.assertEqual(orbits[0].kind, 'sink')

    def test_02_period_two(self):
        params = MapParams(**SINK)
        orbits = find_periodic_orbits(params, 2, seed_count=400)
        for orbit in orbits:
            self.assertEqual(len(orbit.orbit), 2)
            p, q = orbit.orbit
            self.assertGreater(p.distance(q), 1e-8)
            image = step(params, q.theta, q.z)
            self.assertLess(PhasePoint(*image).distance(p), 1e-9)
        with self.assertRaises(PreconditionError):
            find_periodic_orbits(params, 0)

    def test_03_basin(self):
        params = MapParams(**SINK)
        sink = [r for r in find_fixed_points(params, (0, 0)) if r.kind == 'sink'][0]
        self.assertEqual(basin_check(params, sink, lattice=5, radius=1e-3, iterations=300), 1.0)
