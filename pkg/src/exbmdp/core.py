"""Factored environment model: a deterministic controllable latent state, an
action-independent stochastic latent state, and a partial block emission that
pairs them into observations.

Observations are dense integer indices assigned in emission-list order; the
letter names used in examples are labels only. All types are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ._graphs import closed_components
from .errors import (
    EmissionNotClosed,
    InitialOffSupport,
    NonStochasticRow,
    SchemaError,
)

PROB_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class EndogenousDynamics:
    """Deterministic controllable dynamics: ``table[s, a]`` is the successor."""

    n_states: int
    n_actions: int
    table: np.ndarray
    action_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        table = np.ascontiguousarray(np.asarray(self.table, dtype=np.int64))
        if table.shape != (self.n_states, self.n_actions):
            raise ValueError(
                f"table shape {table.shape} != ({self.n_states}, {self.n_actions})"
            )
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("need at least one state and one action")
        if table.size and (table.min() < 0 or table.max() >= self.n_states):
            raise ValueError("transition target out of range")
        if self.action_labels is not None and len(self.action_labels) != self.n_actions:
            raise ValueError("need one label per action")
        object.__setattr__(self, "table", _frozen(table))

    def successor(self, state: int, action: int) -> int:
        return int(self.table[state, action])

    def adjacency(self) -> list[list[int]]:
        """Successor lists (deduplicated) of the action-edge digraph."""
        return [sorted(set(map(int, row))) for row in self.table]


@dataclass(frozen=True)
class ExogenousChain:
    """Row-stochastic Markov chain that ignores actions.

    Every state must lie in a closed recurrent communicating class; chains
    with transient states are rejected.
    """

    n_states: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if matrix.shape != (self.n_states, self.n_states):
            raise ValueError(f"matrix shape {matrix.shape} != square {self.n_states}")
        if matrix.size and matrix.min() < 0.0:
            raise ValueError("negative transition probability")
        for i, total in enumerate(matrix.sum(axis=1)):
            if abs(total - 1.0) > PROB_TOL:
                raise NonStochasticRow(i, float(total))
        adjacency = [list(np.flatnonzero(row > 0.0)) for row in matrix]
        _, exits = closed_components(adjacency)
        if exits:
            transient = sorted({u for u, _ in exits})
            raise ValueError(f"exogenous chain has transient states {transient}")
        object.__setattr__(self, "matrix", _frozen(matrix))

    def successors(self, state: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[state] > 0.0)


@dataclass(frozen=True)
class Emission:
    """Bijection between latent pairs and observation indices.

    ``domain[i]`` is the (endogenous, exogenous) pair emitted as observation
    ``i``; indices follow list order. Closure under the dynamics is checked by
    :func:`compose`, which knows both transition structures.
    """

    domain: tuple[tuple[int, int], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        domain = tuple((int(s), int(e)) for s, e in self.domain)
        if not domain:
            raise ValueError("empty emission domain")
        if len(set(domain)) != len(domain):
            raise ValueError("duplicate latent pair in emission domain")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(domain):
                raise ValueError("need one label per observation")
            if len(set(labels)) != len(labels):
                raise ValueError("duplicate observation label")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(
            self, "obs_of", {pair: i for i, pair in enumerate(domain)}
        )

    obs_of: dict = field(init=False, repr=False, compare=False)

    @property
    def n_obs(self) -> int:
        return len(self.domain)

    def label(self, obs: int) -> str:
        if self.labels is not None:
            return self.labels[obs]
        s, e = self.domain[obs]
        return f"s{s}e{e}"


@dataclass(frozen=True)
class ExBmdp:
    """A composed observation MDP carrying its ground-truth factorization.

    The inverse maps of the emission are exposed as ``phi_star`` (observation
    to endogenous index) and ``phi_e_star`` (observation to exogenous index).
    """

    endo: EndogenousDynamics
    exo: ExogenousChain
    emission: Emission
    initial: np.ndarray
    name: str = ""

    transitions: np.ndarray = field(init=False, repr=False, compare=False)
    phi_star: tuple = field(init=False, repr=False, compare=False)
    phi_e_star: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        initial = np.ascontiguousarray(np.asarray(self.initial, dtype=np.float64))
        n = self.emission.n_obs
        if initial.shape != (n,):
            raise ValueError(f"initial distribution shape {initial.shape} != ({n},)")
        if initial.size and initial.min() < 0.0:
            raise InitialOffSupport("negative initial probability")
        if abs(float(initial.sum()) - 1.0) > PROB_TOL:
            raise NonStochasticRow("initial", float(initial.sum()))
        object.__setattr__(self, "initial", _frozen(initial))
        object.__setattr__(
            self, "phi_star", tuple(s for s, _ in self.emission.domain)
        )
        object.__setattr__(
            self, "phi_e_star", tuple(e for _, e in self.emission.domain)
        )
        object.__setattr__(self, "transitions", self._compose_transitions())

    def _compose_transitions(self) -> np.ndarray:
        """Observation transition tensor P[a, x, x'] from the factors."""
        n, n_act = self.emission.n_obs, self.endo.n_actions
        obs_of = self.emission.obs_of
        out = np.zeros((n_act, n, n), dtype=np.float64)
        violations = []
        for x, (s, e) in enumerate(self.emission.domain):
            for a in range(n_act):
                s_next = self.endo.successor(s, a)
                for e_next in self.exo.successors(e):
                    target = obs_of.get((s_next, int(e_next)))
                    if target is None:
                        violations.append((s, e, a, int(e_next)))
                        continue
                    out[a, x, target] = self.exo.matrix[e, e_next]
        if violations:
            raise EmissionNotClosed(violations)
        row_sums = out.sum(axis=2)
        bad = np.argwhere(np.abs(row_sums - 1.0) > PROB_TOL)
        if bad.size:
            a, x = map(int, bad[0])
            raise NonStochasticRow((x, a), float(row_sums[a, x]))
        return _frozen(out)

    @property
    def n_obs(self) -> int:
        return self.emission.n_obs

    @property
    def n_actions(self) -> int:
        return self.endo.n_actions

    def uniform_policy_matrix(self) -> np.ndarray:
        """Observation chain under the uniformly random policy."""
        return self.transitions.mean(axis=0)

    def observation_adjacency(self) -> list[list[int]]:
        """Edges x -> x' with positive probability under some action."""
        positive = (self.transitions > 0.0).any(axis=0)
        return [list(map(int, np.flatnonzero(row))) for row in positive]

    def obs_label(self, obs: int) -> str:
        return self.emission.label(obs)

    def cache_key(self) -> bytes:
        """Stable digest of the environment structure, for memo tables."""
        return hashlib.sha256(serialize_env(self).encode()).digest()


def compose(
    endo: EndogenousDynamics,
    exo: ExogenousChain,
    emission: Emission,
    initial: np.ndarray | None = None,
    name: str = "",
) -> ExBmdp:
    """Assemble the observation MDP from its factors.

    ``initial`` defaults to uniform over the observation set. Raises
    EmissionNotClosed, NonStochasticRow or InitialOffSupport on invalid input.
    """
    n = emission.n_obs
    if initial is None:
        initial = np.full(n, 1.0 / n)
    initial = np.asarray(initial, dtype=np.float64)
    if initial.shape == (n,) and initial.size:
        support = np.flatnonzero(initial > 0.0)
        if support.size == 0:
            raise InitialOffSupport("initial distribution has empty support")
    return ExBmdp(endo=endo, exo=exo, emission=emission, initial=initial, name=name)


# ---------------------------------------------------------------------------
# Environment files
# ---------------------------------------------------------------------------


def _expect(value, types, path):
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(
            t.__name__ for t in types
        )
        raise SchemaError(path, f"expected {names}, got {type(value).__name__}")
    return value


def _expect_key(mapping, key, types, path):
    if key not in mapping:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return _expect(mapping[key], types, f"{path}.{key}")


def parse_env(document: str) -> ExBmdp:
    """Parse a JSON environment document; see the file schema in the README."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from exc
    _expect(doc, dict, "$")
    name = _expect_key(doc, "name", str, "$")

    endo_doc = _expect_key(doc, "endo", dict, "$")
    n_states = _expect_key(endo_doc, "n_states", int, "$.endo")
    actions = _expect_key(endo_doc, "actions", list, "$.endo")
    for i, label in enumerate(actions):
        _expect(label, str, f"$.endo.actions[{i}]")
    table = _expect_key(endo_doc, "table", list, "$.endo")
    if len(table) != n_states:
        raise SchemaError("$.endo.table", f"expected {n_states} rows, got {len(table)}")
    for i, row in enumerate(table):
        _expect(row, list, f"$.endo.table[{i}]")
        if len(row) != len(actions):
            raise SchemaError(
                f"$.endo.table[{i}]", f"expected {len(actions)} entries, got {len(row)}"
            )
        for j, entry in enumerate(row):
            _expect(entry, int, f"$.endo.table[{i}][{j}]")
            if not 0 <= entry < n_states:
                raise SchemaError(f"$.endo.table[{i}][{j}]", f"state {entry} out of range")
    try:
        endo = EndogenousDynamics(
            n_states=n_states,
            n_actions=len(actions),
            table=np.array(table, dtype=np.int64).reshape(n_states, len(actions)),
            action_labels=tuple(actions),
        )
    except ValueError as exc:
        raise SchemaError("$.endo", str(exc)) from exc

    exo_doc = _expect_key(doc, "exo", dict, "$")
    n_exo = _expect_key(exo_doc, "n_states", int, "$.exo")
    matrix = _expect_key(exo_doc, "matrix", list, "$.exo")
    if len(matrix) != n_exo:
        raise SchemaError("$.exo.matrix", f"expected {n_exo} rows, got {len(matrix)}")
    for i, row in enumerate(matrix):
        _expect(row, list, f"$.exo.matrix[{i}]")
        if len(row) != n_exo:
            raise SchemaError(f"$.exo.matrix[{i}]", f"expected {n_exo} entries")
        for j, entry in enumerate(row):
            _expect(entry, (int, float), f"$.exo.matrix[{i}][{j}]")
    try:
        exo = ExogenousChain(n_states=n_exo, matrix=np.array(matrix, dtype=np.float64))
    except ValueError as exc:
        raise SchemaError("$.exo", str(exc)) from exc

    emission_doc = _expect_key(doc, "emission", list, "$")
    if not emission_doc:
        raise SchemaError("$.emission", "must list at least one observation")
    domain, labels = [], []
    for i, item in enumerate(emission_doc):
        _expect(item, dict, f"$.emission[{i}]")
        s = _expect_key(item, "s", int, f"$.emission[{i}]")
        e = _expect_key(item, "e", int, f"$.emission[{i}]")
        obs = _expect_key(item, "obs", str, f"$.emission[{i}]")
        if not 0 <= s < n_states:
            raise SchemaError(f"$.emission[{i}].s", f"state {s} out of range")
        if not 0 <= e < n_exo:
            raise SchemaError(f"$.emission[{i}].e", f"state {e} out of range")
        domain.append((s, e))
        labels.append(obs)
    try:
        emission = Emission(domain=tuple(domain), labels=tuple(labels))
    except ValueError as exc:
        raise SchemaError("$.emission", str(exc)) from exc

    initial_doc = _expect_key(doc, "initial", list, "$")
    initial = np.zeros(emission.n_obs)
    label_index = {label: i for i, label in enumerate(labels)}
    for i, item in enumerate(initial_doc):
        _expect(item, dict, f"$.initial[{i}]")
        obs = _expect_key(item, "obs", str, f"$.initial[{i}]")
        p = _expect_key(item, "p", (int, float), f"$.initial[{i}]")
        if obs not in label_index:
            raise SchemaError(f"$.initial[{i}].obs", f"unknown observation {obs!r}")
        initial[label_index[obs]] += float(p)

    return compose(endo, exo, emission, initial=initial, name=name)


def serialize_env(env: ExBmdp) -> str:
    """Inverse of :func:`parse_env`; canonical formatting, 2-space indent."""
    actions = env.endo.action_labels or tuple(
        f"a{i}" for i in range(env.endo.n_actions)
    )
    labels = [env.obs_label(i) for i in range(env.n_obs)]
    doc = {
        "name": env.name,
        "endo": {
            "n_states": env.endo.n_states,
            "actions": list(actions),
            "table": env.endo.table.tolist(),
        },
        "exo": {
            "n_states": env.exo.n_states,
            "matrix": env.exo.matrix.tolist(),
        },
        "emission": [
            {"s": s, "e": e, "obs": labels[i]}
            for i, (s, e) in enumerate(env.emission.domain)
        ],
        "initial": [
            {"obs": labels[i], "p": float(p)}
            for i, p in enumerate(env.initial)
            if p > 0.0
        ],
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Encoder:
    """A partition of the observation set in restricted-growth canonical form.

    The label of observation 0 is 0 and each new label is exactly one more
    than the largest label seen so far, which makes the integer string a
    canonical name for the partition.
    """

    assignment: tuple[int, ...]
    n_latent: int = -1

    def __post_init__(self):
        assignment = tuple(int(v) for v in self.assignment)
        if not assignment:
            raise ValueError("empty assignment")
        high = -1
        for i, v in enumerate(assignment):
            if v < 0 or v > high + 1:
                raise ValueError(
                    f"assignment {assignment} is not in restricted-growth form "
                    f"at position {i}"
                )
            high = max(high, v)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "n_latent", high + 1)

    @classmethod
    def from_labels(cls, labels) -> "Encoder":
        """Canonicalize an arbitrary labeling into restricted-growth form."""
        remap: dict = {}
        canon = []
        for label in labels:
            if label not in remap:
                remap[label] = len(remap)
            canon.append(remap[label])
        return cls(assignment=tuple(canon))

    @classmethod
    def trivial(cls, n_obs: int) -> "Encoder":
        return cls(assignment=tuple(range(n_obs)))

    @classmethod
    def from_string(cls, text: str) -> "Encoder":
        """Parse "0112" or "0,1,1,2"; canonicalizes if not already canonical."""
        text = text.strip()
        if "," in text or " " in text:
            labels = [int(tok) for tok in text.replace(",", " ").split()]
        else:
            labels = [int(ch) for ch in text]
        return cls.from_labels(labels)

    def to_string(self) -> str:
        if self.n_latent <= 10:
            return "".join(str(v) for v in self.assignment)
        return ",".join(str(v) for v in self.assignment)

    def as_array(self) -> np.ndarray:
        return np.array(self.assignment, dtype=np.int64)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_latent)]
        for i, v in enumerate(self.assignment):
            out[v].append(i)
        return out

    def __len__(self) -> int:
        return len(self.assignment)


def _encoder_unchecked(assignment: tuple[int, ...], n_latent: int) -> Encoder:
    """Construct without re-validating; callers guarantee canonical form."""
    enc = object.__new__(Encoder)
    object.__setattr__(enc, "assignment", assignment)
    object.__setattr__(enc, "n_latent", n_latent)
    return enc
