import math
from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from horseshoe.certifier import ConeSpec
from horseshoe.certifier import Sampling
from horseshoe.certifier import certify_horseshoe
from horseshoe.certifier import horizontal_slope
from horseshoe.certifier import merge_intervals
from horseshoe.certifier import proof_case
from horseshoe.certifier import scan_parameter
from horseshoe.certifier import scan_reports
from horseshoe.certifier import scan_rows
from horseshoe.exceptions import PreconditionError
from horseshoe.itinerary import full_shift_ok
from horseshoe.itinerary import itinerary_tree
from horseshoe.itinerary import symbol_label
from horseshoe.itinerary import symbol_of
from horseshoe.itinerary import symbol_origin
from horseshoe.itinerary import top_symbols
from horseshoe.mapcore import MapParams
from horseshoe.mapcore import TWO_PI
from horseshoe.mapcore import critical_theta


WIDE = dict(b=1e-4, c=3, d=200, gamma=math.sqrt(2), k=1e-4)
ESCAPE = dict(a=0.2, b=0.005, c=3, d=2, gamma=math.sqrt(2))

SAMPLING = Sampling(200, 21, 420)


def centred_a():
    """
    The a that maps the tip of the fold at z = 0 to θ = 3π/2, the middle of U.
    """
    params = MapParams(a=0.0, **WIDE)
    theta_c = critical_theta(params, 0.0)
    return math.fmod(1.5 * math.pi - (theta_c - params.d * math.log(params.F(theta_c, 0.0))), TWO_PI)


class CertifyTestCase(SimpleTestCase):

    def setUp(self):
        self.a = centred_a()
        self.params = MapParams(a=self.a, **WIDE)

    def test_01_specs(self):
        self.assertEqual(ConeSpec(), ConeSpec(0.01, 100.0))
        for bad in ((0, 100), (0.5, 0.9), (1.5, 100)):
            with self.assertRaises(PreconditionError):
                ConeSpec(*bad)
        self.assertEqual(Sampling().as_dict(), dict(theta=200, z=21, fold=420))
        with self.assertRaises(PreconditionError):
            Sampling(1, 21, 420)

    def test_02_certified(self):
        report = certify_horseshoe(self.params, ConeSpec(), SAMPLING)
        self.assertTrue(report.certified)
        self.assertTrue(report.fold_in_U)
        self.assertGreater(report.fold_margin, 0.5)
        self.assertGreater(report.cone_h_margin, 0)
        self.assertGreater(report.cone_v_margin, 0)
        self.assertLess(report.cone_h_worst, 0.01)
        self.assertGreater(report.cone_v_worst, 100)
        self.assertEqual(sum(report.case_counts.values()), report.sample_counts['cone'])
        data = report.as_dict()
        self.assertTrue(data['certified'])
        self.assertEqual(data['horizontal_bound'], 0.01)
        self.assertEqual(report.row()['certified'], 1)

    def test_03_fold_inside_V(self):
        report = certify_horseshoe(self.params.with_a(self.a + math.pi), ConeSpec(), SAMPLING)
        self.assertFalse(report.fold_in_U)
        self.assertLess(report.fold_margin, 0)
        self.assertFalse(report.certified)

    def test_04_full_escape_set(self):
        report = certify_horseshoe(MapParams(**ESCAPE), ConeSpec(), SAMPLING)
        self.assertFalse(report.certified)

    def test_05_period(self):
        first = certify_horseshoe(self.params, ConeSpec(), SAMPLING)
        second = certify_horseshoe(self.params.with_a(self.a + TWO_PI), ConeSpec(), SAMPLING)
        self.assertEqual(first.certified, second.certified)
        self.assertAlmostEqual(first.fold_margin, second.fold_margin, delta=1e-9)
        self.assertAlmostEqual(first.cone_h_worst, second.cone_h_worst, delta=1e-12)

    def test_06_proof_case(self):
        self.assertEqual(proof_case(self.params, (math.pi / 2, 0.0)), 1)
        self.assertEqual(proof_case(self.params, (-math.asin(1 / 3) + 1e-5, 0.0)), 2)
        # away from the fold the image of (1, 0) is nearly horizontal
        self.assertLess(abs(horizontal_slope(self.params, 0.0, 0.0)), 0.01)


class ScanTestCase(SimpleTestCase):

    def test_01_intervals(self):
        a = centred_a()
        base = MapParams(a=0.0, **WIDE)
        intervals = scan_parameter(base, (a - math.pi, a + math.pi), 41, sampling=SAMPLING)
        outcomes = [certified for _, certified in intervals]
        self.assertIn(True, outcomes)
        self.assertIn(False, outcomes)
        # outcomes alternate
        self.assertTrue(all(x != y for x, y in zip(outcomes, outcomes[1:])))
        self.assertAlmostEqual(intervals[0][0][0], a - math.pi)
        self.assertAlmostEqual(intervals[-1][0][1], a + math.pi)
        with self.assertRaises(PreconditionError):
            scan_parameter(base, (0, 1), 1)

    def test_02_two_periods(self):
        base = MapParams(a=0.0, **WIDE)
        a_values = np.linspace(0.05, TWO_PI + 0.05, 24, endpoint=False)
        first = scan_reports(base, a_values, sampling=SAMPLING)
        second = scan_reports(base, a_values + TWO_PI, sampling=SAMPLING, threads=2)
        self.assertEqual([r.certified for r in first], [r.certified for r in second])
        self.assertIn(True, [r.certified for r in first])
        rows = scan_rows(first)
        self.assertEqual(len(rows), 24)
        self.assertEqual(sorted(rows[0]), ['a', 'certified', 'cone_h_margin', 'cone_v_margin', 'fold_margin'])

    def test_03_merge(self):
        reports = [SimpleNamespace(param_a=a, certified=ok) for a, ok in (
            (0.0, False), (0.1, False), (0.2, True), (0.3, True), (0.4, True), (0.5, False))]
        self.assertEqual(merge_intervals(reports), [
            ((0.0, 0.1), False),
            ((0.2, 0.4), True),
            ((0.5, 0.5), False),
        ])
        self.assertEqual(merge_intervals([]), [])


class ItineraryTestCase(SimpleTestCase):

    def setUp(self):
        self.params = MapParams(a=centred_a(), **WIDE)

    def test_01_symbols(self):
        symbols = top_symbols(self.params, count=2)
        self.assertEqual(len(symbols), 4)
        self.assertEqual({side for side, _ in symbols}, {'L', 'R'})
        self.assertEqual(symbol_label(('L', 3)), 'L3')
        # the tip of the fold goes to U
        theta_c = critical_theta(self.params, 0.0)
        self.assertIsNone(symbol_of(self.params, theta_c, 0.0))

    def test_02_full_shift(self):
        tree = itinerary_tree(self.params, depth=2, symbols=top_symbols(self.params, count=2))
        self.assertEqual(str(tree), 'root')
        self.assertEqual(len(tree.children), 4)
        self.assertTrue(full_shift_ok(tree))
        for node in tree.iterate():
            if node.is_leaf:
                self.assertEqual(node.depth, 2)
                self.assertEqual(len(node.itinerary), 2)
        first, second = tree.SYMBOLS[:2]
        node = tree.get((first, second))
        self.assertIs(node, tree[first][second])
        self.assertTrue(node.items)

    def test_03_missing_symbol(self):
        tree = itinerary_tree(self.params, depth=2, symbols=top_symbols(self.params, count=2))
        self.assertFalse(full_shift_ok(tree, tree.SYMBOLS + [('L', 10 ** 6)]))

    def test_04_symbol_window(self):
        origin = symbol_origin(self.params)
        self.assertLessEqual(self.params.F(origin, 0.0), self.params.escape_floor)
        tree = itinerary_tree(self.params, depth=2, symbols=top_symbols(self.params, count=2))
        for child in tree.children:
            theta, z = child.items[0]
            symbol = symbol_of(self.params, theta, z, origin=origin)
            self.assertEqual(symbol, child.symbol)
            # the symbol does not depend on the lift of θ
            self.assertEqual(symbol_of(self.params, theta + TWO_PI, z, origin=origin), symbol)
            self.assertEqual(symbol_of(self.params, theta - 2 * TWO_PI, z, origin=origin), symbol)
            # second symbols come from iterates taken back into the window
            self.assertEqual(len(child.children), 4)
            for grandchild in child.children:
                self.assertIn(grandchild.symbol, tree.SYMBOLS)
