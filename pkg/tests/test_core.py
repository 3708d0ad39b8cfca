import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exbmdp._graphs import bfs_distances
from exbmdp.core import (
    Emission,
    Encoder,
    EndogenousDynamics,
    ExogenousChain,
    compose,
    parse_env,
    serialize_env,
)
from exbmdp.errors import (
    EmissionNotClosed,
    InitialOffSupport,
    NonStochasticRow,
    SchemaError,
)
from exbmdp.zoo import random_exbmdp, zoo_build


def test_compose_nonunique_full_mdp(nonunique):
    # Observation order a0, a1, b0, b1; action order Stay, Move.
    # Stay from a0 must lead to a1 with probability one.
    assert nonunique.n_obs == 4
    assert nonunique.transitions[0, 0, 1] == 1.0
    # Move swaps the controllable letter while the noise keeps flipping.
    assert nonunique.transitions[1, 0, 3] == 1.0
    assert nonunique.transitions[1, 3, 0] == 1.0


def test_compose_degenerate(one_obs_env):
    assert one_obs_env.n_obs == 1
    assert one_obs_env.transitions[0, 0, 0] == 1.0


def test_compose_partial_domain_matches_hand_table(coupling10):
    # Deterministic 10-observation machine, transcribed by hand from the
    # partial-domain construction (observation order
    # a0,b1,d1,c2,e2,a3,b4,d4,c5,e5; actions L,R).
    hand_table = [
        [1, 2],
        [3, 3],
        [4, 4],
        [5, 5],
        [5, 5],
        [6, 7],
        [8, 8],
        [9, 9],
        [0, 0],
        [0, 0],
    ]
    for x in range(10):
        for a in range(2):
            target = hand_table[x][a]
            expected = np.zeros(10)
            expected[target] = 1.0
            np.testing.assert_array_equal(coupling10.transitions[a, x], expected)
    # The composed observation chain is one big cycle of period 6.
    composed = EndogenousDynamics(10, 2, np.array(hand_table))
    from exbmdp.analysis import periodicity

    assert periodicity(composed)[0] == 6


def test_compose_rejects_open_domain():
    endo = EndogenousDynamics(2, 1, np.array([[1], [0]]))
    exo = ExogenousChain(1, np.array([[1.0]]))
    emission = Emission(domain=((0, 0),))  # successor (1, 0) missing
    with pytest.raises(EmissionNotClosed) as err:
        compose(endo, exo, emission)
    assert err.value.violations[0] == (0, 0, 0, 0)


def test_nonstochastic_exogenous_row():
    with pytest.raises(NonStochasticRow):
        ExogenousChain(2, np.array([[0.5, 0.4], [0.5, 0.5]]))


def test_exogenous_transient_states_rejected():
    # State 0 leaks into the closed class {1}; it is transient.
    with pytest.raises(ValueError, match="transient"):
        ExogenousChain(2, np.array([[0.5, 0.5], [0.0, 1.0]]))


def test_initial_must_be_distribution():
    endo = EndogenousDynamics(1, 1, np.array([[0]]))
    exo = ExogenousChain(1, np.array([[1.0]]))
    emission = Emission(domain=((0, 0),))
    with pytest.raises(NonStochasticRow):
        compose(endo, exo, emission, initial=np.array([0.5]))
    with pytest.raises(InitialOffSupport):
        compose(endo, exo, emission, initial=np.array([-1.0]))


def test_transition_rows_sum_to_one_across_zoo():
    for name in (
        "fig1_branching",
        "fig2_chain4",
        "fig2_periodic5",
        "nonunique2x2",
        "periodic_coupling10",
        "fullmulti_hex",
        "selfedge_triangle",
    ):
        env = zoo_build(name).env
        sums = env.transitions.sum(axis=2)
        assert np.all(np.abs(sums - 1.0) <= 1e-12)


def test_reachability_symmetry_on_composed_graphs():
    # Under the uniform policy, reachable implies co-reachable.
    envs = [zoo_build("periodic_coupling10").env, zoo_build("nonunique2x2").env]
    envs += [random_exbmdp(4, 2, 2, seed=s) for s in range(5)]
    for env in envs:
        adjacency = env.observation_adjacency()
        for x in range(env.n_obs):
            forward = bfs_distances(adjacency, x)
            for y in range(env.n_obs):
                if forward[y] >= 0:
                    back = bfs_distances(adjacency, y)
                    assert back[x] >= 0, (env.name, x, y)


# ---------------------------------------------------------------------------
# Environment files
# ---------------------------------------------------------------------------


def test_parse_serialized_nonunique_roundtrip(nonunique):
    text = serialize_env(nonunique)
    again = parse_env(text)
    assert again.n_obs == 4
    np.testing.assert_array_equal(again.transitions, nonunique.transitions)
    assert serialize_env(again) == text


def test_parse_empty_document_is_schema_error():
    with pytest.raises(SchemaError):
        parse_env("")
    with pytest.raises(SchemaError):
        parse_env("{}")


@pytest.mark.parametrize("seed", range(100))
def test_roundtrip_random_envs(seed):
    env = random_exbmdp(n_endo=4, n_exo=2, n_actions=2, seed=seed)
    again = parse_env(serialize_env(env))
    assert again.emission.domain == env.emission.domain
    np.testing.assert_array_equal(again.endo.table, env.endo.table)
    np.testing.assert_allclose(again.exo.matrix, env.exo.matrix, atol=0)
    np.testing.assert_allclose(again.initial, env.initial, atol=0)
    np.testing.assert_allclose(again.transitions, env.transitions, atol=0)


def test_schema_error_reports_field_path():
    doc = {
        "name": "bad",
        "endo": {"n_states": 1, "actions": ["a"], "table": [["x"]]},
        "exo": {"n_states": 1, "matrix": [[1.0]]},
        "emission": [{"s": 0, "e": 0, "obs": "o"}],
        "initial": [{"obs": "o", "p": 1.0}],
    }
    with pytest.raises(SchemaError) as err:
        parse_env(json.dumps(doc))
    assert "$.endo.table[0][0]" in str(err.value)


def _minimal_doc():
    return {
        "name": "tiny",
        "endo": {"n_states": 1, "actions": ["a"], "table": [[0]]},
        "exo": {"n_states": 2, "matrix": [[0.0, 1.0], [1.0, 0.0]]},
        "emission": [
            {"s": 0, "e": 0, "obs": "x0"},
            {"s": 0, "e": 1, "obs": "x1"},
        ],
        "initial": [{"obs": "x0", "p": 1.0}],
    }


def test_schema_rejects_duplicate_observation_labels():
    doc = _minimal_doc()
    doc["emission"][1]["obs"] = "x0"
    with pytest.raises(SchemaError) as err:
        parse_env(json.dumps(doc))
    assert "$.emission" in str(err.value)


def test_schema_rejects_unknown_initial_observation():
    doc = _minimal_doc()
    doc["initial"] = [{"obs": "nope", "p": 1.0}]
    with pytest.raises(SchemaError) as err:
        parse_env(json.dumps(doc))
    assert "$.initial[0].obs" in str(err.value)


def test_schema_rejects_out_of_range_emission_state():
    doc = _minimal_doc()
    doc["emission"][0]["s"] = 5
    with pytest.raises(SchemaError) as err:
        parse_env(json.dumps(doc))
    assert "$.emission[0].s" in str(err.value)


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


def test_encoder_rejects_noncanonical():
    with pytest.raises(ValueError):
        Encoder(assignment=(1, 0))
    with pytest.raises(ValueError):
        Encoder(assignment=(0, 2))


def test_encoder_from_labels_canonicalizes():
    enc = Encoder.from_labels(["x", "y", "x", "z"])
    assert enc.assignment == (0, 1, 0, 2)
    assert enc.n_latent == 3
    assert enc.blocks() == [[0, 2], [1], [3]]


@given(st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_canonicalization_idempotent(labels):
    canon = Encoder.from_labels(labels)
    again = Encoder.from_labels(canon.assignment)
    assert again.assignment == canon.assignment
    # The canonical form is a valid constructor input as well.
    assert Encoder(assignment=canon.assignment).n_latent == canon.n_latent


@given(st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_encoder_string_roundtrip(labels):
    enc = Encoder.from_labels(labels)
    assert Encoder.from_string(enc.to_string()).assignment == enc.assignment
