import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from bootstrap import add_src_path, at_drive, passive

add_src_path()

from nrlight.errors import UndefinedRatio, ZeroDrive
from nrlight.models import Direction, StateVector, SystemParams
from nrlight.observables import isolation_ratio, mean_transmission, output_amplitude, output_intensity, transmission
from nrlight.steady import enumerate_branches, linear_solve, weak_excitation_solve


def _lowest_T(params: SystemParams, direction: Direction) -> float:
    return transmission(params, direction, enumerate_branches(params, direction)[0]).T


class TestOutput(unittest.TestCase):
    def test_output_leaves_far_cavity(self) -> None:
        state = StateVector(0.1 + 0j, 0.2j, 0j, -0.5)
        params = SystemParams(kappa_e=4.0)
        self.assertAlmostEqual(output_amplitude(state, params, Direction.FORWARD), 0.4j, places=14)
        self.assertAlmostEqual(output_amplitude(state, params, Direction.BACKWARD), 0.2 + 0j, places=14)
        self.assertAlmostEqual(output_intensity(state, Direction.FORWARD), 0.04, places=14)
        self.assertAlmostEqual(output_intensity(state, Direction.BACKWARD), 0.01, places=14)

    def test_transmission_needs_a_drive(self) -> None:
        params = passive(g=0.0, eps_p=0.0)
        branch = linear_solve(params, Direction.FORWARD)
        with self.assertRaises(ZeroDrive):
            transmission(params, Direction.FORWARD, branch)

    def test_transmission_record_fields(self) -> None:
        params = passive(g=0.0, eps_p=1.0)
        branch = linear_solve(params, Direction.BACKWARD)
        record = transmission(params, Direction.BACKWARD, branch)
        self.assertEqual(record.direction, Direction.BACKWARD)
        self.assertAlmostEqual(record.T, 0.36, places=12)
        self.assertEqual(record.branch_I1, branch.I1)

    def test_mean_transmission_averages_output_power(self) -> None:
        params = SystemParams(kappa_e=4.0, eps_p=0.5)
        states = [StateVector(0j, 0.2j, 0j, -0.5), StateVector(0j, 0.4 + 0j, 0j, -0.5)]
        self.assertAlmostEqual(mean_transmission(params, Direction.FORWARD, states), 4.0 * 0.1 / 0.25, places=12)
        self.assertEqual(mean_transmission(params, Direction.BACKWARD, states), 0.0)
        with self.assertRaises(ValueError):
            mean_transmission(params, Direction.FORWARD, [])
        with self.assertRaises(ZeroDrive):
            mean_transmission(params.replace(eps_p=0.0), Direction.FORWARD, states)


class TestIsolationRatio(unittest.TestCase):
    def test_examples(self) -> None:
        self.assertAlmostEqual(isolation_ratio(0.5, 0.001), 26.9897, places=4)
        self.assertAlmostEqual(isolation_ratio(0.3, 0.3), 0.0, places=14)
        self.assertAlmostEqual(isolation_ratio(1e-4, 1.0), -40.0, places=10)

    @settings(max_examples=100, deadline=None)
    @given(
        t_left=st.floats(min_value=1e-12, max_value=10.0),
        t_right=st.floats(min_value=1e-12, max_value=10.0),
    )
    def test_antisymmetric(self, t_left: float, t_right: float) -> None:
        self.assertEqual(isolation_ratio(t_left, t_right), -isolation_ratio(t_right, t_left))

    def test_undefined_ratios_carry_signed_limit(self) -> None:
        cases = ((0.5, 0.0, math.inf), (0.0, 0.5, -math.inf))
        for t_left, t_right, limit in cases:
            with self.assertRaises(UndefinedRatio) as ctx:
                isolation_ratio(t_left, t_right)
            self.assertEqual(ctx.exception.signed_limit, limit)
            self.assertEqual(ctx.exception.code, "UndefinedRatio")
        with self.assertRaises(UndefinedRatio) as ctx:
            isolation_ratio(0.0, 0.0)
        self.assertTrue(math.isnan(ctx.exception.signed_limit))


class TestReciprocity(unittest.TestCase):
    def test_emitter_free_pair_is_reciprocal(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(200):
            params = SystemParams(
                g=0.0,
                J=float(rng.uniform(0.0, 6.0)),
                kappa1=float(rng.uniform(0.0, 5.0)),
                kappa_e=float(rng.uniform(0.5, 5.0)),
                delta1=float(rng.uniform(-3.0, 3.0)),
                eps_p=float(rng.uniform(0.05, 2.0)),
            )
            t_right = transmission(params, Direction.FORWARD, linear_solve(params, Direction.FORWARD)).T
            t_left = transmission(params, Direction.BACKWARD, linear_solve(params, Direction.BACKWARD)).T
            self.assertLess(abs(t_left - t_right), 1e-12)

    def test_weak_excitation_is_reciprocal(self) -> None:
        params = passive(eps_p=0.05, delta1=0.4, delta2=-0.2)
        forward = output_amplitude(weak_excitation_solve(params, Direction.FORWARD), params, Direction.FORWARD)
        backward = output_amplitude(weak_excitation_solve(params, Direction.BACKWARD), params, Direction.BACKWARD)
        self.assertAlmostEqual(abs(forward), abs(backward), places=12)


class TestNonreciprocity(unittest.TestCase):
    def test_balanced_pair_steady_branches_isolate_backward_incidence(self) -> None:
        # branch values only: neither branch is an attractor at this point
        params = SystemParams()
        for direction in Direction:
            self.assertFalse(enumerate_branches(params, direction)[0].is_stable)
        self.assertEqual(len(enumerate_branches(params, Direction.FORWARD)), 1)
        self.assertEqual(len(enumerate_branches(params, Direction.BACKWARD)), 1)
        t_left = _lowest_T(params, Direction.BACKWARD)
        t_right = _lowest_T(params, Direction.FORWARD)
        self.assertGreater(t_left, 0.98)
        self.assertLess(t_right, 0.01)
        self.assertAlmostEqual(isolation_ratio(t_left, t_right), 28.76, delta=3.0)

    def test_weak_coupling_reverses_steady_branch_direction(self) -> None:
        params = at_drive(SystemParams(J=1.0), 0.5)
        self.assertFalse(enumerate_branches(params, Direction.FORWARD)[0].is_stable)
        t_right = _lowest_T(params, Direction.FORWARD)
        t_left = _lowest_T(params, Direction.BACKWARD)
        self.assertAlmostEqual(t_right, 0.924, delta=0.01)
        self.assertLess(t_left, 1e-3)
        self.assertLessEqual(isolation_ratio(t_left, t_right), -25.0)

    def test_passive_pair_isolation_peaks_below_forward_fold(self) -> None:
        best = (-math.inf, 0.0, 0.0)
        for eps_sq in np.linspace(0.01, 0.75, 75):
            point = at_drive(passive(), float(eps_sq))
            self.assertTrue(all(enumerate_branches(point, d)[0].is_stable for d in Direction))
            t_left = _lowest_T(point, Direction.BACKWARD)
            t_right = _lowest_T(point, Direction.FORWARD)
            best = max(best, (isolation_ratio(t_left, t_right), float(eps_sq), t_left))
        ratio, where, t_left = best
        self.assertAlmostEqual(ratio, 28.6, delta=2.0)
        self.assertGreaterEqual(where, 0.185)
        self.assertAlmostEqual(t_left, 0.31, delta=0.1)


if __name__ == "__main__":
    unittest.main()
