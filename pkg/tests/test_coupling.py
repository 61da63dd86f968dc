import itertools
import math

import numpy as np
import pytest

from helpers import random_union_closed
from uclab.coupling import (
    JointMeasure,
    coupled_union_prob,
    delta_search,
    greedy_coupling_dp,
    improved_slack,
    worst_coupling_value,
)
from uclab.families import Family
from uclab.measures import DiscreteMeasure, objective
from uclab.scalars import GOLDEN_THRESHOLD, binary_entropy

H_GOLDEN = 0.6650183864440036


def transport_vertices(w):
    """All vertices of the transportation polytope with equal marginals w.

    A vertex's support is a spanning tree of the bipartite row/column
    graph; enumerate every 2m-1 edge subset, keep the trees, and solve for
    the cell values by leaf stripping.  Independent of the LP route.
    """
    m = len(w)
    cells = list(itertools.product(range(m), range(m)))
    for chosen in itertools.combinations(cells, 2 * m - 1):
        # connectivity check over m+m nodes
        parent = list(range(2 * m))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        acyclic = True
        for i, j in chosen:
            ra, rb = find(i), find(m + j)
            if ra == rb:
                acyclic = False
                break
            parent[ra] = rb
        if not acyclic:
            continue
        # leaf-strip the tree to solve for the cell values
        values = {}
        row_res = list(w)
        col_res = list(w)
        edges = set(chosen)
        while edges:
            progressed = False
            for i, j in list(edges):
                row_deg = sum(1 for a, b in edges if a == i)
                col_deg = sum(1 for a, b in edges if b == j)
                if row_deg == 1:
                    val = row_res[i]
                elif col_deg == 1:
                    val = col_res[j]
                else:
                    continue
                values[(i, j)] = val
                row_res[i] -= val
                col_res[j] -= val
                edges.remove((i, j))
                progressed = True
            if not progressed:
                break
        if edges:
            continue
        if min(values.values()) < -1e-12:
            continue
        mat = np.zeros((m, m))
        for (i, j), v in values.items():
            mat[i, j] = max(v, 0.0)
        yield mat


def brute_force_worst_coupling(mu):
    x, w = mu.locations, mu.weights
    cost = binary_entropy(coupled_union_prob(x[:, None], x[None, :]))
    return min(float((mat * cost).sum()) for mat in transport_vertices(list(w)))


class TestCoupledUnionProb:
    @pytest.mark.parametrize(
        "p,r,expected",
        [(0.6, 0.1, 0.6), (0.1, 0.2, 0.3), (0.3, 0.4, 0.5), (0.9, 0.8, 0.9), (0.0, 0.0, 0.0)],
    )
    def test_values(self, p, r, expected):
        assert coupled_union_prob(p, r) == pytest.approx(expected, abs=1e-15)

    def test_threshold_pair_reaches_half(self):
        assert coupled_union_prob(GOLDEN_THRESHOLD, GOLDEN_THRESHOLD) == 0.5

    def test_case_identity_on_grid(self):
        ps = np.linspace(0.0, 1.0, 300)
        a, b = np.meshgrid(ps, ps)
        lhs = coupled_union_prob(a, b)
        rhs = np.maximum(np.maximum(a, b), np.minimum(a + b, 0.5))
        assert np.abs(lhs - rhs).max() <= 1e-15

    def test_symmetric_and_dominates_max(self):
        ps = np.linspace(0.0, 1.0, 300)
        a, b = np.meshgrid(ps, ps)
        out = coupled_union_prob(a, b)
        assert np.abs(out - coupled_union_prob(b, a)).max() == 0.0
        assert np.all(out >= np.maximum(a, b))

    def test_rejects_bad_rates(self):
        with pytest.raises(ValueError):
            coupled_union_prob(1.1, 0.5)


class TestJointMeasure:
    def test_accepts_exact_coupling(self):
        mu = DiscreteMeasure.two_atom(0.3, 0.6)
        w = np.array([[0.6, 0.0], [0.0, 0.4]])
        jm = JointMeasure(mu, mu, w)
        assert jm.weights.sum() == pytest.approx(1.0)

    def test_rejects_marginal_mismatch(self):
        mu = DiscreteMeasure.two_atom(0.3, 0.6)
        w = np.array([[0.5, 0.2], [0.1, 0.2]])
        with pytest.raises(ValueError):
            JointMeasure(mu, mu, w, tol=1e-12)

    def test_rejects_negative_mass(self):
        mu = DiscreteMeasure.two_atom(0.3, 0.6)
        w = np.array([[0.7, -0.1], [-0.1, 0.5]])
        with pytest.raises(ValueError):
            JointMeasure(mu, mu, w)


class TestWorstCoupling:
    def test_single_atom(self):
        rep = worst_coupling_value(DiscreteMeasure.point(GOLDEN_THRESHOLD))
        assert rep.value == math.log(2.0)
        assert rep.coupling.weights[0, 0] == 1.0

    def test_never_exceeds_independent(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            k = int(rng.integers(1, 6))
            locs = np.unique(rng.uniform(0.0, 1.0, size=k))
            mu = DiscreteMeasure(locs, rng.dirichlet(np.ones(locs.size)))
            rep = worst_coupling_value(mu)
            assert rep.value <= rep.independent_value + 1e-12

    def test_lp_matches_vertex_enumeration_two_atoms(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            v = float(rng.uniform(0.02, 0.98))
            w = float(rng.uniform(0.05, 0.95))
            mu = DiscreteMeasure.two_atom(v, w)
            rep = worst_coupling_value(mu)
            assert rep.value == pytest.approx(brute_force_worst_coupling(mu), abs=1e-9)

    def test_lp_matches_vertex_enumeration_three_atoms(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            locs = np.unique(rng.uniform(0.01, 0.99, size=3))
            mu = DiscreteMeasure(locs, rng.dirichlet(np.ones(locs.size)))
            rep = worst_coupling_value(mu)
            assert rep.value == pytest.approx(brute_force_worst_coupling(mu), abs=1e-9)

    def test_coupling_marginals_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            k = int(rng.integers(2, 7))
            locs = np.unique(rng.uniform(0.0, 1.0, size=k))
            mu = DiscreteMeasure(locs, rng.dirichlet(np.ones(locs.size)))
            rep = worst_coupling_value(mu)
            w = rep.coupling.weights
            assert np.abs(w.sum(axis=1) - mu.weights).max() <= 1e-12
            assert np.abs(w.sum(axis=0) - mu.weights).max() <= 1e-12

    def test_repair_survives_degenerate_cost_ties_at_scale(self):
        # flat cost regions invite non-unique optima; the returned coupling
        # must still satisfy the marginals to machine precision
        rng = np.random.default_rng(99)
        for _ in range(6):
            k = int(rng.integers(30, 120))
            locs = np.unique(rng.uniform(0.0, 1.0, size=k))
            mu = DiscreteMeasure(locs, rng.dirichlet(np.full(locs.size, 0.5)))
            rep = worst_coupling_value(mu)
            w = rep.coupling.weights
            assert rep.repaired
            assert np.abs(w.sum(axis=1) - mu.weights).max() <= 1e-12
            assert np.abs(w.sum(axis=0) - mu.weights).max() <= 1e-12

    def test_atom_cap(self):
        locs = np.linspace(0.001, 0.999, 201)
        mu = DiscreteMeasure(locs, np.full(201, 1.0 / 201))
        with pytest.raises(ValueError):
            worst_coupling_value(mu)


class TestImprovedSlack:
    def test_alpha_zero_collapses_to_objective(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            locs = np.unique(rng.uniform(0.05, 0.95, size=3))
            mu = DiscreteMeasure(locs, rng.dirichlet(np.ones(locs.size)))
            assert improved_slack(mu, 0.0) == objective(mu, 1.0).value

    def test_golden_point_closed_form(self):
        mu = DiscreteMeasure.point(GOLDEN_THRESHOLD)
        for alpha in (0.05, 0.1, 0.5):
            expected = alpha * (math.log(2.0) - H_GOLDEN)
            assert improved_slack(mu, alpha) == pytest.approx(expected, abs=1e-12)
            assert improved_slack(mu, alpha) > 0.0

    def test_binary_support_gives_zero(self):
        mu = DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.4, 0.6]))
        assert improved_slack(mu, 0.3) == 0.0

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            improved_slack(DiscreteMeasure.point(0.3), 1.5)


class TestDeltaSearch:
    def test_small_alpha_certifies_positive_margin(self):
        rep = delta_search(0.05, u_cap_steps=100, delta_max=0.02, v_steps=48,
                           mean_steps=32, search_points=3, search_restarts=24, seed=43)
        assert rep.delta > 0.0
        assert not rep.failure_at_threshold

    def test_alpha_zero_gives_zero_margin(self):
        rep = delta_search(0.0, u_cap_steps=40, delta_max=0.02, v_steps=24,
                           mean_steps=16, search_points=3, search_restarts=12, seed=47)
        assert rep.delta == 0.0
        assert rep.failure_at_threshold

    def test_alpha_one_reports_failure(self):
        rep = delta_search(1.0, u_cap_steps=40, delta_max=0.02, v_steps=24,
                           mean_steps=16, search_points=3, search_restarts=12, seed=53)
        assert rep.delta == 0.0
        assert rep.failure_at_threshold
        assert rep.binding_measure is not None

    def test_deterministic_and_parallel_safe(self):
        kw = dict(u_cap_steps=40, delta_max=0.02, v_steps=24, mean_steps=16,
                  search_points=3, search_restarts=12, seed=59)
        a = delta_search(0.05, jobs=1, **kw)
        b = delta_search(0.05, jobs=2, **kw)
        assert a == b


class TestGreedyCouplingDP:
    def test_single_full_set(self):
        rep = greedy_coupling_dp(Family.of(3, [0b111]))
        assert rep.union_entropy == 0.0
        assert rep.marginals_uniform

    def test_chain_family_marginals(self):
        rep = greedy_coupling_dp(Family.of(2, [0b00, 0b01, 0b11]))
        assert rep.max_marginal_deviation <= 1e-12

    def test_powerset_comonotone_copies(self):
        # every rate is 1/2, so the shared draw makes both samples equal
        # and the coupled union keeps the full uniform entropy
        rep = greedy_coupling_dp(Family.of(2, range(4)))
        assert rep.union_entropy == pytest.approx(math.log(4.0), abs=1e-12)
        assert rep.independent_union_entropy < rep.union_entropy

    def test_marginals_uniform_on_random_families(self):
        rng = np.random.default_rng(61)
        count = 0
        while count < 100:
            f = random_union_closed(rng, int(rng.integers(2, 9)))
            if f.size() > 64:
                continue
            rep = greedy_coupling_dp(f)
            assert rep.max_marginal_deviation <= 1e-12
            count += 1

    def test_joint_law_is_normalized(self):
        f = Family.of(3, [2, 3, 4, 6, 7])
        rep = greedy_coupling_dp(f)
        total = sum(p for _, _, p in rep.joint)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_literal_rates_break_uniformity(self):
        f = Family.of(3, [2, 3, 4, 6, 7])
        assert greedy_coupling_dp(f).max_marginal_deviation <= 1e-12
        literal = greedy_coupling_dp(f, literal_rates=True)
        assert literal.max_marginal_deviation > 1e-3

    def test_rejects_non_union_closed(self):
        with pytest.raises(ValueError):
            greedy_coupling_dp(Family.of(2, [1, 2]))

    def test_rejects_oversized(self):
        with pytest.raises(ValueError):
            greedy_coupling_dp(Family.of(11, [0, 1]))
