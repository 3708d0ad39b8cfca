import math

import numpy as np
import pytest

from exbmdp.analysis import (
    INFINITE,
    analyze,
    communicating_classes,
    diameter,
    max_finite_witness,
    periodicity,
    verify_dprime_theorem,
    witness_distance,
)
from exbmdp.core import EndogenousDynamics
from exbmdp.errors import NotIrreducible
from exbmdp.zoo import random_endogenous, zoo_build


def single_state():
    return EndogenousDynamics(1, 2, np.array([[0, 0]]))


def two_cycle():
    return EndogenousDynamics(2, 1, np.array([[1], [0]]))


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def floyd_warshall_diameter(endo):
    n = endo.n_states
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, targets in enumerate(endo.adjacency()):
        for v in targets:
            if u != v:
                dist[u, v] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    assert np.isfinite(dist).all()
    return int(dist.max())


def simple_cycle_gcd(endo):
    """gcd of all simple-cycle lengths, by DFS enumeration (small n only)."""
    adjacency = endo.adjacency()
    n = endo.n_states
    value = 0

    def walk(start, node, length, visited):
        nonlocal value
        for nxt in adjacency[node]:
            if nxt == start:
                value = math.gcd(value, length + 1)
            elif nxt > start and nxt not in visited:
                walk(start, nxt, length + 1, visited | {nxt})

    for start in range(n):
        walk(start, start, 0, frozenset({start}))
    return max(value, 1)


def exact_k_witnesses(endo, a, b, k):
    """States reaching both a and b in exactly k steps, by boolean matrix
    powers (independent of the bitmask search)."""
    n = endo.n_states
    adj = np.zeros((n, n), dtype=bool)
    for u, targets in enumerate(endo.adjacency()):
        adj[u, targets] = True
    reach = np.eye(n, dtype=bool)
    for _ in range(k):
        reach = adj @ reach
    return [c for c in range(n) if reach[c, a] and reach[c, b]]


# ---------------------------------------------------------------------------
# Diameter
# ---------------------------------------------------------------------------


def test_diameter_chain4(chain4):
    assert diameter(chain4.endo) == 3


def test_diameter_single_state():
    assert diameter(single_state()) == 0


def test_diameter_prime_cycle(prime35):
    assert diameter(prime35.endo) == 4  # q - 1


def test_diameter_not_irreducible():
    endo = EndogenousDynamics(2, 1, np.array([[0], [0]]))
    with pytest.raises(NotIrreducible) as err:
        diameter(endo)
    assert err.value.pair == (0, 1)


def test_diameter_matches_floyd_warshall():
    for seed in range(20):
        endo = random_endogenous(2 + seed % 6, 1 + seed % 3, seed)
        assert diameter(endo) == floyd_warshall_diameter(endo)


# ---------------------------------------------------------------------------
# Periodicity
# ---------------------------------------------------------------------------


def test_periodicity_periodic5(periodic5):
    period, classes = periodicity(periodic5.endo)
    assert period == 3
    assert classes == (0, 1, 2, 1, 2)
    assert simple_cycle_gcd(periodic5.endo) == 3


def test_periodicity_self_loop_is_one():
    endo = EndogenousDynamics(2, 2, np.array([[0, 1], [0, 0]]))
    assert periodicity(endo)[0] == 1


def test_periodicity_prime_cycle_aperiodic(prime35):
    assert periodicity(prime35.endo)[0] == 1


def test_periodicity_matches_simple_cycle_gcd():
    for seed in range(40):
        endo = random_endogenous(2 + seed % 7, 1 + seed % 3, seed)
        period, classes = periodicity(endo)
        assert period == simple_cycle_gcd(endo)
        for u, targets in enumerate(endo.adjacency()):
            for v in targets:
                assert classes[v] == (classes[u] + 1) % period


# ---------------------------------------------------------------------------
# Witness distances
# ---------------------------------------------------------------------------


def test_witness_chain4(chain4):
    assert witness_distance(chain4.endo, 2, 3) == 4  # the (c, d) pair


def test_witness_reflexive(chain4):
    for s in range(4):
        assert witness_distance(chain4.endo, s, s) == 0


def test_witness_infinite_across_cyclic_classes(periodic5):
    # b and c sit in different cyclic classes of a period-3 chain.
    assert witness_distance(periodic5.endo, 1, 2) is INFINITE
    # Cross-check: no witness at any depth up to the theorem bound.
    report = analyze(periodic5.endo)
    for k in range(1, report.d_prime_bound + 1):
        assert exact_k_witnesses(periodic5.endo, 1, 2, k) == []


def test_witness_symmetry():
    for seed in range(10):
        endo = random_endogenous(2 + seed % 6, 2, seed)
        n = endo.n_states
        for a in range(n):
            for b in range(a + 1, n):
                assert witness_distance(endo, a, b) == witness_distance(endo, b, a)


def test_witness_monotone_consistency():
    # If the distance is k, no state reaches both targets in exactly k-1.
    for seed in range(10):
        endo = random_endogenous(2 + seed % 6, 2, seed)
        n = endo.n_states
        for a in range(n):
            for b in range(a + 1, n):
                w = witness_distance(endo, a, b)
                if w is INFINITE or w == 0:
                    continue
                assert exact_k_witnesses(endo, a, b, int(w)), (seed, a, b, w)
                if w > 1:
                    assert not exact_k_witnesses(endo, a, b, int(w) - 1)


def test_witness_debug_cap():
    # A tiny cap can only produce INFINITE or agree with the full search.
    endo = zoo_build("fig2_chain4").env.endo
    assert witness_distance(endo, 2, 3, max_k=3) is INFINITE
    assert witness_distance(endo, 2, 3, max_k=4) == 4


def test_max_finite_witness_values(chain4, prime35):
    assert max_finite_witness(chain4.endo) == 4
    assert max_finite_witness(single_state()) == 0
    # Exhaustive pairwise search oracle for the prime-cycle construction.
    endo = prime35.endo
    best = 0
    for a in range(5):
        for b in range(a + 1, 5):
            for k in range(1, analyze(endo).d_prime_bound + 1):
                if exact_k_witnesses(endo, a, b, k):
                    best = max(best, k)
                    break
    assert best == 7
    assert max_finite_witness(endo) == 7


# ---------------------------------------------------------------------------
# Theorem verification
# ---------------------------------------------------------------------------


def test_verify_theorem_chain4(chain4):
    report = verify_dprime_theorem(chain4.endo)
    assert report.passed
    assert report.max_finite_witness == 4
    assert report.d_prime_bound == 21


def test_verify_theorem_two_cycle():
    report = verify_dprime_theorem(two_cycle())
    assert report.passed
    assert report.period == 2
    assert witness_distance(two_cycle(), 0, 1) is INFINITE


def test_verify_theorem_random_smoke():
    for seed in range(25):
        endo = random_endogenous(2 + seed % 7, 1 + seed % 3, seed)
        assert verify_dprime_theorem(endo).passed


# ---------------------------------------------------------------------------
# Communicating classes
# ---------------------------------------------------------------------------


def test_classes_nonunique_single(nonunique):
    classes = communicating_classes(nonunique)
    assert len(classes) == 1
    assert sorted(classes[0]) == [0, 1, 2, 3]


def test_classes_coupling10_single(coupling10):
    classes = communicating_classes(coupling10)
    assert len(classes) == 1
    assert len(classes[0]) == 10


def test_classes_two_cycles_split(two_class_env):
    classes = communicating_classes(two_class_env)
    assert len(classes) == 2
    assert sorted(map(len, classes)) == [2, 2]


def test_open_component_signals_modeling_bug():
    from exbmdp.errors import OpenComponent

    class LeakyStub:
        n_obs = 3

        @staticmethod
        def observation_adjacency():
            return [[1], [0, 2], [2]]  # {0,1} leaks into the sink {2}

    with pytest.raises(OpenComponent) as err:
        communicating_classes(LeakyStub())
    assert err.value.exit_edge == (1, 2)


def test_witness_debug_cap_checks_irreducibility():
    endo = EndogenousDynamics(2, 1, np.array([[0], [0]]))
    with pytest.raises(NotIrreducible):
        witness_distance(endo, 0, 1, max_k=5)


def test_analyze_report_invariants():
    for seed in range(15):
        endo = random_endogenous(2 + seed % 6, 2, seed)
        report = analyze(endo)
        for (a, b), value in report.witness.items():
            if value is INFINITE:
                assert report.period > 1
                assert report.cyclic_class[a] != report.cyclic_class[b]
            else:
                assert value <= report.d_prime_bound
        if report.period == 1:
            assert all(v is not INFINITE for v in report.witness.values())
