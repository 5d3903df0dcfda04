import itertools

import numpy as np
import pytest

from d2dcache.cost import expected_cost, expected_cost_lb
from d2dcache.model import Instance, SatFormula, literal_user
from d2dcache.oracle import (SearchTooLarge, brute_force_sat, decode_assignment,
                             enumerate_acocp, enumerate_cocp, sat_decision_experiment,
                             user_allocations)

from helpers import all_placements, random_instance, random_placement, tiny_instances


class TestEnumerateCocp:
    def test_dominant_file(self):
        inst = Instance(C=[1], s_rec=[1, 1], s_max=[1, 1], P=[[0.9], [0.1]], lam=[[0.0]])
        x, _ = enumerate_cocp(inst)
        assert x.tolist() == [[1], [0]]

    @pytest.mark.parametrize("seed", range(3))
    def test_no_contacts_is_greedy(self, seed):
        # each segment saves P[f, i] * delta_n, so the best segments are the heaviest P
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, U=2, F=3, C=2).replace(lam=np.zeros((2, 2)))
        inst = inst.replace(s_max=2 * inst.s_rec)
        _, best = enumerate_cocp(inst)
        x = inst.zero_placement()
        for i in range(inst.U):
            for _ in range(int(inst.C[i])):
                ok = x[:, i] < inst.s_rec
                if not ok.any():
                    break
                f = int(np.argmax(np.where(ok, inst.P[:, i], -1)))
                x[f, i] += 1
        assert expected_cost(inst, x).total == pytest.approx(best, abs=1e-12)

    def test_beats_random_feasible_placements(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng, U=2, F=2, C=1)
        _, best = enumerate_cocp(inst)
        for _ in range(100):
            assert best <= expected_cost(inst, random_placement(inst, rng)).total + 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_exhaustive_listing(self, seed):
        inst = tiny_instances(1, seed=seed + 20)[0]
        x, best = enumerate_cocp(inst)
        want = min(expected_cost(inst, p).total for p in all_placements(inst))
        assert best == pytest.approx(want, abs=1e-12)
        assert expected_cost(inst, x).total == pytest.approx(best, abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_user_order_does_not_change_the_optimum(self, seed):
        inst = tiny_instances(1, seed=seed + 30)[0]
        _, a = enumerate_cocp(inst)
        _, b = enumerate_cocp(inst, order=list(range(inst.U))[::-1])
        assert abs(a - b) <= 1e-12

    def test_lexicographic_tie_break(self):
        # two identical users and one segment: the first user takes it
        inst = Instance(C=[1, 1], s_rec=[1], s_max=[1], P=[[1.0, 1.0]], lam=np.zeros((2, 2)))
        x, _ = enumerate_cocp(inst)
        assert x.T.ravel().tolist() == min(p.T.ravel().tolist() for p in all_placements(inst)
                                           if p.sum() == 1)

    def test_too_large(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, U=3, F=3, C=2)
        with pytest.raises(SearchTooLarge):
            enumerate_cocp(inst, limit=2)

    def test_rejects_bad_order(self):
        inst = tiny_instances(1, seed=1)[0]
        with pytest.raises(ValueError):
            enumerate_cocp(inst, order=[0] * inst.U)


class TestEnumerateAcocp:
    def test_single_user_equals_cocp(self):
        rng = np.random.default_rng(5)
        inst = random_instance(rng, U=1, F=3, C=3, s_star=3)
        assert enumerate_acocp(inst)[1] == pytest.approx(enumerate_cocp(inst)[1], abs=1e-12)

    def test_no_contacts_equals_cocp(self):
        rng = np.random.default_rng(6)
        inst = random_instance(rng, U=3, F=2, C=2).replace(lam=np.zeros((3, 3)))
        xa, va = enumerate_acocp(inst)
        xc, vc = enumerate_cocp(inst)
        assert va == pytest.approx(vc, abs=1e-12)
        assert np.array_equal(xa, xc)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_exhaustive_listing(self, seed):
        inst = tiny_instances(1, seed=seed + 50)[0]
        _, best = enumerate_acocp(inst)
        want = min(expected_cost_lb(inst, p) for p in all_placements(inst))
        assert best == pytest.approx(want, abs=1e-12)

    def test_user_allocations(self):
        inst = Instance(C=[2], s_rec=[1, 3], s_max=[1, 3], P=[[0.5], [0.5]], lam=[[0.0]])
        got = [g.tolist() for g in user_allocations(inst, 0)]
        assert got == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1]]


class TestSat:
    def test_brute_force(self):
        assert brute_force_sat(SatFormula(3, [(1, 2, 3)])) == (False, False, True)
        cube = SatFormula(3, [tuple(s * v for s, v in zip(signs, (1, 2, 3)))
                              for signs in itertools.product((1, -1), repeat=3)])
        assert brute_force_sat(cube) is None

    def test_decode(self):
        x = np.zeros((2, 7), dtype=int)
        x[:, literal_user(1)] = (1, 0)
        x[:, literal_user(-1)] = (0, 1)
        x[:, literal_user(2)] = (0, 1)
        x[:, literal_user(-2)] = (1, 0)
        x[:, literal_user(3)] = (1, 0)
        x[:, literal_user(-3)] = (0, 1)
        assert decode_assignment(x, 3) == (True, False, True)
        x[:, literal_user(3)] = (0, 1)
        assert decode_assignment(x, 3) is None

    def test_satisfiable_formula_decodes(self):
        phi = SatFormula(3, [(1, 2, 3), (-1, -2, -3)])
        rep = sat_decision_experiment(phi, 0.01)
        assert rep.satisfiable and rep.assignment_recovered and not rep.inconclusive
        assert phi.satisfied_by(rep.assignment)

    def test_rejects_formula_outside_the_reduction(self):
        with pytest.raises(ValueError):
            sat_decision_experiment(SatFormula(3, [(1, 2, 3)]), 0.01)
