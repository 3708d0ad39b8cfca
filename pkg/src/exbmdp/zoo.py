"""Catalog of constructed environments with known ground truth, plus a seeded
random environment generator for property tests.

Each catalog entry records the properties it was built to exhibit (minimal
latent size, diameter, period, largest finite witness distance) so tests can
cross-check them against the analysis module.

Reconstruction notes:
  * fig1_branching's exogenous switch probability is fixed at 0.75; any
    irreducible aperiodic 2-state chain preserves the qualitative behavior,
    and 0.75 keeps the noise time-correlated.
  * Observation labels follow the letter layout of the corresponding figures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._graphs import closed_components
from .core import Emission, EndogenousDynamics, ExBmdp, ExogenousChain, compose
from .errors import BadParams, RequirementUnsatisfiable, UnknownEntry


@dataclass(frozen=True)
class ZooEntry:
    name: str
    params: dict
    env: ExBmdp
    expected: dict = field(default_factory=dict)


def _single_exo() -> ExogenousChain:
    return ExogenousChain(n_states=1, matrix=np.array([[1.0]]))


def _swap_exo() -> ExogenousChain:
    return ExogenousChain(n_states=2, matrix=np.array([[0.0, 1.0], [1.0, 0.0]]))


def _full_emission(n_endo: int, n_exo: int, labels=None) -> Emission:
    domain = tuple((s, e) for s in range(n_endo) for e in range(n_exo))
    return Emission(domain=domain, labels=labels)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _build_fig1_branching(params: dict) -> ZooEntry:
    # Five controllable states: a branch state whose two actions enter two
    # three-step loops that rejoin at the branch.
    table = np.array([[1, 3], [2, 2], [0, 0], [4, 4], [0, 0]])
    endo = EndogenousDynamics(5, 2, table, action_labels=("L", "R"))
    exo = ExogenousChain(2, np.array([[0.25, 0.75], [0.75, 0.25]]))
    labels = tuple("abcdefghij")
    domain = tuple((s, e) for e in range(2) for s in range(5))
    emission = Emission(domain=domain, labels=labels)
    env = compose(endo, exo, emission, name="fig1_branching")
    expected = {
        "n_obs": 10,
        "minimal_size": 5,
        "diameter": 4,
        "period": 3,
        "max_finite_witness": 2,
    }
    return ZooEntry("fig1_branching", {}, env, expected)


def _build_fig2_chain4(params: dict) -> ZooEntry:
    # a branches to b or d; b -> c -> a; d -> a.
    table = np.array([[1, 3], [2, 2], [0, 0], [0, 0]])
    endo = EndogenousDynamics(4, 2, table, action_labels=("L", "R"))
    emission = _full_emission(4, 1, labels=tuple("abcd"))
    env = compose(endo, _single_exo(), emission, name="fig2_chain4")
    expected = {
        "n_obs": 4,
        "minimal_size": 4,
        "diameter": 3,
        "period": 1,
        "max_finite_witness": 4,
    }
    return ZooEntry("fig2_chain4", {}, env, expected)


def _build_fig2_periodic5(params: dict) -> ZooEntry:
    # a branches into two loops of equal length three, so the dynamics are
    # periodic with period 3.
    table = np.array([[1, 3], [2, 2], [0, 0], [4, 4], [0, 0]])
    endo = EndogenousDynamics(5, 2, table, action_labels=("L", "R"))
    emission = _full_emission(5, 1, labels=tuple("abcde"))
    env = compose(endo, _single_exo(), emission, name="fig2_periodic5")
    expected = {
        "n_obs": 5,
        "minimal_size": 5,
        "diameter": 4,
        "period": 3,
        "max_finite_witness": 2,
    }
    return ZooEntry("fig2_periodic5", {}, env, expected)


def _require_primes(params: dict) -> tuple[int, int]:
    try:
        p, q = int(params["p"]), int(params["q"])
    except KeyError as exc:
        raise BadParams(f"missing parameter {exc}") from exc
    if not _is_prime(p) or not _is_prime(q):
        raise BadParams(f"p={p} and q={q} must both be prime")
    if not p < q:
        raise BadParams(f"need p < q, got p={p}, q={q}")
    return p, q


def _build_prime_cycle(params: dict) -> ZooEntry:
    p, q = _require_primes(params)
    table = np.zeros((q, 2), dtype=np.int64)
    table[0, 0] = 1
    table[0, 1] = q - p + 1
    for x in range(1, q):
        table[x, 0] = table[x, 1] = (x + 1) % q
    endo = EndogenousDynamics(q, 2, table, action_labels=("L", "R"))
    emission = _full_emission(q, 1, labels=tuple(str(x) for x in range(q)))
    env = compose(endo, _single_exo(), emission, name=f"prime_cycle({p},{q})")
    expected = {
        "n_obs": q,
        "minimal_size": q,
        "diameter": q - 1,
        "period": 1,
    }
    if (p, q) == (3, 5):
        expected["max_finite_witness"] = 7
    return ZooEntry("prime_cycle", {"p": p, "q": q}, env, expected)


def _build_double_prime(params: dict) -> ZooEntry:
    # Two copies of the prime cycle; the branch action crosses between the
    # copies, every other edge stays within its own copy.
    p, q = _require_primes(params)
    table = np.zeros((2 * q, 2), dtype=np.int64)
    table[0, 0] = 1
    table[0, 1] = q + (q - p + 1)
    table[q, 0] = q + 1
    table[q, 1] = q - p + 1
    for x in range(1, q):
        table[x, 0] = table[x, 1] = (x + 1) % q
        table[q + x, 0] = table[q + x, 1] = q + (x + 1) % q
    endo = EndogenousDynamics(2 * q, 2, table, action_labels=("L", "R"))
    labels = tuple(str(x) for x in range(q)) + tuple(f"{x}'" for x in range(q))
    emission = _full_emission(2 * q, 1, labels=labels)
    env = compose(endo, _single_exo(), emission, name=f"double_prime({p},{q})")
    expected = {
        "n_obs": 2 * q,
        "minimal_size": 2 * q,
        "diameter": 2 * q - 1,
        "period": 1,
    }
    return ZooEntry("double_prime", {"p": p, "q": q}, env, expected)


def _build_nonunique2x2(params: dict) -> ZooEntry:
    # Stay/Move controllable pair over a deterministic two-state swap chain;
    # admits two distinct minimal factorizations.
    table = np.array([[0, 1], [1, 0]])
    endo = EndogenousDynamics(2, 2, table, action_labels=("Stay", "Move"))
    labels = ("a0", "a1", "b0", "b1")
    emission = _full_emission(2, 2, labels=labels)
    env = compose(endo, _swap_exo(), emission, name="nonunique2x2")
    expected = {
        "n_obs": 4,
        "minimal_size": 2,
        "diameter": 1,
        "period": 1,
        "max_finite_witness": 1,
    }
    return ZooEntry("nonunique2x2", {}, env, expected)


def _build_periodic_coupling10(params: dict) -> ZooEntry:
    # Period-3 controllable dynamics over a period-6 exogenous cycle with a
    # partial emission domain of the 10 reachable pairs; starts put weight on
    # pairs that are unreachable from each other's cyclic phase.
    table = np.array([[1, 3], [2, 2], [0, 0], [4, 4], [0, 0]])
    endo = EndogenousDynamics(5, 2, table, action_labels=("L", "R"))
    cycle = np.zeros((6, 6))
    for e in range(6):
        cycle[e, (e + 1) % 6] = 1.0
    exo = ExogenousChain(6, cycle)
    # Observation letters name the endogenous state, digits the exogenous one.
    pairs = [
        (0, 0, "a0"),
        (1, 1, "b1"),
        (3, 1, "d1"),
        (2, 2, "c2"),
        (4, 2, "e2"),
        (0, 3, "a3"),
        (1, 4, "b4"),
        (3, 4, "d4"),
        (2, 5, "c5"),
        (4, 5, "e5"),
    ]
    emission = Emission(
        domain=tuple((s, e) for s, e, _ in pairs),
        labels=tuple(label for _, _, label in pairs),
    )
    initial = np.zeros(10)
    initial[1] = 0.5  # b1
    initial[4] = 0.5  # e2
    env = compose(endo, exo, emission, initial=initial, name="periodic_coupling10")
    expected = {
        "n_obs": 10,
        "minimal_size": 5,
        "diameter": 4,
        "period": 3,
        "max_finite_witness": 2,
        "n_classes": 1,
    }
    return ZooEntry("periodic_coupling10", {}, env, expected)


def _build_fullmulti_hex(params: dict) -> ZooEntry:
    # Six states in two banks; action Y normally sends x to y-prime and
    # x-prime to y, except T(c', B) = c and T(c', C) = b.
    order = ["a", "b", "c", "a'", "b'", "c'"]
    index = {s: i for i, s in enumerate(order)}
    table = np.zeros((6, 3), dtype=np.int64)
    for x in ("a", "b", "c"):
        for ai, y in enumerate(("a", "b", "c")):
            table[index[x], ai] = index[y + "'"]
            table[index[x + "'"], ai] = index[y]
    table[index["c'"], 1] = index["c"]
    table[index["c'"], 2] = index["b"]
    endo = EndogenousDynamics(6, 3, table, action_labels=("A", "B", "C"))
    emission = _full_emission(6, 1, labels=tuple(order))
    env = compose(endo, _single_exo(), emission, name="fullmulti_hex")
    expected = {
        "n_obs": 6,
        "minimal_size": 6,
        "diameter": 2,
        "period": 2,
        "max_finite_witness": 1,
    }
    return ZooEntry("fullmulti_hex", {}, env, expected)


def _build_selfedge_triangle(params: dict) -> ZooEntry:
    # Aperiodic three-state controllable dynamics over a two-state swap chain;
    # the two cycle lengths (2 and 3) make the witness distance reach 3 > D.
    table = np.array([[2, 1], [2, 2], [0, 0]])
    endo = EndogenousDynamics(3, 2, table, action_labels=("L", "R"))
    labels = ("a0", "a1", "b0", "b1", "c0", "c1")
    emission = _full_emission(3, 2, labels=labels)
    env = compose(endo, _swap_exo(), emission, name="selfedge_triangle")
    expected = {
        "n_obs": 6,
        "minimal_size": 3,
        "diameter": 2,
        "period": 1,
        "max_finite_witness": 3,
    }
    return ZooEntry("selfedge_triangle", {}, env, expected)


_CATALOG = {
    "fig1_branching": _build_fig1_branching,
    "fig2_chain4": _build_fig2_chain4,
    "fig2_periodic5": _build_fig2_periodic5,
    "prime_cycle": _build_prime_cycle,
    "double_prime": _build_double_prime,
    "nonunique2x2": _build_nonunique2x2,
    "periodic_coupling10": _build_periodic_coupling10,
    "fullmulti_hex": _build_fullmulti_hex,
    "selfedge_triangle": _build_selfedge_triangle,
}


def zoo_names() -> list[str]:
    return list(_CATALOG)


def zoo_build(name: str, params: dict | None = None) -> ZooEntry:
    """Construct a catalog environment with its expected properties."""
    if name not in _CATALOG:
        raise UnknownEntry(f"unknown zoo entry {name!r}; known: {sorted(_CATALOG)}")
    return _CATALOG[name](dict(params or {}))


# ---------------------------------------------------------------------------
# Random environments
# ---------------------------------------------------------------------------

_MAX_REJECTIONS = 20000


def _rng(seed: int, *spawn: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=spawn)
    return np.random.Generator(np.random.Philox(seq))


def _endo_requirements_hold(endo: EndogenousDynamics, period: int | None) -> bool:
    from . import analysis

    try:
        got_period, _ = analysis.periodicity(endo)
    except Exception:
        return False
    return period is None or got_period == period


def random_endogenous(
    n_states: int, n_actions: int, seed: int, period: int | None = None
) -> EndogenousDynamics:
    """Rejection-sample a uniformly random irreducible transition table.

    ``period=1`` demands aperiodicity, ``period=k`` an exact period, ``None``
    only irreducibility. Deterministic given the seed.
    """
    rng = _rng(seed, 0)
    for _ in range(_MAX_REJECTIONS):
        table = rng.integers(0, n_states, size=(n_states, n_actions))
        endo = EndogenousDynamics(n_states, n_actions, table)
        if _endo_requirements_hold(endo, period):
            return endo
    raise RequirementUnsatisfiable(
        f"no irreducible table with period={period} found for n={n_states}, "
        f"actions={n_actions} after {_MAX_REJECTIONS} draws (seed={seed})"
    )


def random_exbmdp(
    n_endo: int,
    n_exo: int,
    n_actions: int,
    seed: int,
    period: int | None = None,
) -> ExBmdp:
    """Random environment: rejection-sampled controllable table, Dirichlet(1)
    exogenous rows trimmed of transient states, full emission domain."""
    endo = random_endogenous(n_endo, n_actions, seed, period=period)
    rng = _rng(seed, 1)
    matrix = rng.dirichlet(np.ones(n_exo), size=n_exo)
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix = _trim_transient(matrix)
    exo = ExogenousChain(matrix.shape[0], matrix)
    emission = _full_emission(n_endo, exo.n_states)
    return compose(endo, exo, emission, name=f"random(seed={seed})")


def _trim_transient(matrix: np.ndarray) -> np.ndarray:
    """Drop states whose component has an exit edge, renormalizing nothing:
    rows of recurrent states never point at transient ones."""
    while True:
        adjacency = [list(np.flatnonzero(row > 0.0)) for row in matrix]
        comps, exits = closed_components(adjacency)
        if not exits:
            return matrix
        transient = {u for u, _ in exits}
        keep = sorted(set(range(matrix.shape[0])) - transient)
        if not keep:
            raise RequirementUnsatisfiable("every exogenous state is transient")
        matrix = matrix[np.ix_(keep, keep)]
