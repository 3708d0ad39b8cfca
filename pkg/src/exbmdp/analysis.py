"""Graph-theoretic analysis of deterministic controllable dynamics.

The load-bearing quantity is the witness distance between two states: the
least k such that some third state reaches both by paths of exactly k steps.
It is finite if and only if the dynamics are aperiodic or the two states share
a cyclic class, and every finite value is at most 2*D^2 + D where D is the
diameter. These facts justify capping the pairwise search.

The implementation targets small state spaces (n up to ~20): exactly-k
reachable sets are plain integer bitmasks and the pair search deduplicates
visited (set, set) signatures, so it terminates as soon as the evolution
cycles even when the cap is far away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._graphs import bfs_distances, closed_components
from .core import EndogenousDynamics, ExBmdp
from .errors import NotIrreducible, OpenComponent

INFINITE = math.inf


@dataclass(frozen=True)
class AnalysisReport:
    diameter: int
    period: int
    cyclic_class: tuple[int, ...]
    witness: dict
    max_finite_witness: int
    d_prime_bound: int

    def witness_of(self, a: int, b: int):
        return self.witness[(min(a, b), max(a, b))]


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of checking the finite-witness bound on one dynamics."""

    passed: bool
    diameter: int
    period: int
    d_prime_bound: int
    max_finite_witness: int
    counterexample: tuple | None = None


def _check_irreducible(endo: EndogenousDynamics) -> list[list[int]]:
    adjacency = endo.adjacency()
    dist0 = bfs_distances(adjacency, 0)
    for v, d in enumerate(dist0):
        if d < 0:
            raise NotIrreducible(0, v)
    # Reachability back to 0 from everywhere: BFS on the reversed graph.
    reverse: list[list[int]] = [[] for _ in range(endo.n_states)]
    for u, targets in enumerate(adjacency):
        for v in targets:
            reverse[v].append(u)
    back = bfs_distances(reverse, 0)
    for v, d in enumerate(back):
        if d < 0:
            raise NotIrreducible(v, 0)
    return adjacency


def diameter(endo: EndogenousDynamics) -> int:
    """Maximum over ordered pairs of the BFS shortest-path length."""
    adjacency = _check_irreducible(endo)
    best = 0
    for s in range(endo.n_states):
        dist = bfs_distances(adjacency, s)
        for v, d in enumerate(dist):
            if d < 0:
                raise NotIrreducible(s, v)
            best = max(best, d)
    return best


def periodicity(endo: EndogenousDynamics) -> tuple[int, tuple[int, ...]]:
    """Period and cyclic classes of the action-edge digraph.

    The period is the gcd of all closed-walk lengths through state 0; for a
    strongly connected graph it equals gcd over edges (u, v) of
    dist(0, u) + 1 - dist(0, v). Classes are anchored so state 0 is class 0.
    """
    adjacency = _check_irreducible(endo)
    dist0 = bfs_distances(adjacency, 0)
    period = 0
    for u, targets in enumerate(adjacency):
        for v in targets:
            period = math.gcd(period, dist0[u] + 1 - dist0[v])
    period = max(period, 1)
    classes = tuple(d % period for d in dist0)
    for u, targets in enumerate(adjacency):
        for v in targets:
            assert classes[v] == (classes[u] + 1) % period
    return period, classes


def _predecessor_masks(endo: EndogenousDynamics) -> list[int]:
    masks = [0] * endo.n_states
    for u, targets in enumerate(endo.adjacency()):
        for v in targets:
            masks[v] |= 1 << u
    return masks


def _premask(mask: int, pred: list[int]) -> int:
    out = 0
    v = 0
    while mask:
        if mask & 1:
            out |= pred[v]
        mask >>= 1
        v += 1
    return out


def witness_distance(
    endo: EndogenousDynamics, a: int, b: int, max_k: int | None = None
):
    """Least k such that some state reaches both a and b in exactly k steps.

    Searches k up to 2*D^2 + D (or ``max_k`` in debug mode, to hunt for bound
    violations) and returns INFINITE beyond; the search also stops early when
    the pair of exact-k predecessor sets revisits a signature, since the
    evolution is then periodic and can never intersect.
    """
    if a == b:
        _check_irreducible(endo)
        return 0
    if max_k is not None:
        _check_irreducible(endo)
        cap = max_k
    else:
        cap = _d_prime_bound(diameter(endo))
    pred = _predecessor_masks(endo)
    set_a, set_b = 1 << a, 1 << b
    seen = {(set_a, set_b)}
    for k in range(1, cap + 1):
        set_a = _premask(set_a, pred)
        set_b = _premask(set_b, pred)
        if set_a & set_b:
            return k
        signature = (set_a, set_b)
        if signature in seen:
            return INFINITE
        seen.add(signature)
    return INFINITE


def _d_prime_bound(d: int) -> int:
    return 2 * d * d + d


def _witness_table(endo: EndogenousDynamics, cap: int) -> dict:
    pred = _predecessor_masks(endo)
    n = endo.n_states
    table: dict = {}
    for a in range(n):
        table[(a, a)] = 0
        for b in range(a + 1, n):
            set_a, set_b = 1 << a, 1 << b
            seen = {(set_a, set_b)}
            value = INFINITE
            for k in range(1, cap + 1):
                set_a = _premask(set_a, pred)
                set_b = _premask(set_b, pred)
                if set_a & set_b:
                    value = k
                    break
                signature = (set_a, set_b)
                if signature in seen:
                    break
                seen.add(signature)
            table[(a, b)] = value
    return table


def max_finite_witness(endo: EndogenousDynamics) -> int:
    """Largest finite pairwise witness distance; 0 for a single state."""
    return analyze(endo).max_finite_witness


def analyze(endo: EndogenousDynamics) -> AnalysisReport:
    """Full report: diameter, period, cyclic classes and witness distances."""
    d = diameter(endo)
    period, classes = periodicity(endo)
    bound = _d_prime_bound(d)
    witness = _witness_table(endo, bound)
    finite = [v for v in witness.values() if v is not INFINITE]
    return AnalysisReport(
        diameter=d,
        period=period,
        cyclic_class=classes,
        witness=witness,
        max_finite_witness=int(max(finite)),
        d_prime_bound=bound,
    )


def verify_dprime_theorem(endo: EndogenousDynamics) -> TheoremReport:
    """Check, pair by pair, that finite witness distances respect the
    2*D^2 + D bound and that infinite ones coincide exactly with pairs in
    different cyclic classes of a periodic chain.

    The check applies to any irreducible deterministic dynamics, minimal
    latent representation or not: the bound needs only irreducibility and the
    diameter.
    """
    report = analyze(endo)
    for (a, b), value in report.witness.items():
        if value is INFINITE:
            if report.period == 1 or report.cyclic_class[a] == report.cyclic_class[b]:
                return TheoremReport(
                    passed=False,
                    diameter=report.diameter,
                    period=report.period,
                    d_prime_bound=report.d_prime_bound,
                    max_finite_witness=report.max_finite_witness,
                    counterexample=(a, b, "infinite within one cyclic class"),
                )
        else:
            if value > report.d_prime_bound:
                return TheoremReport(
                    passed=False,
                    diameter=report.diameter,
                    period=report.period,
                    d_prime_bound=report.d_prime_bound,
                    max_finite_witness=report.max_finite_witness,
                    counterexample=(a, b, f"witness {value} exceeds bound"),
                )
            if report.period > 1 and report.cyclic_class[a] != report.cyclic_class[b]:
                return TheoremReport(
                    passed=False,
                    diameter=report.diameter,
                    period=report.period,
                    d_prime_bound=report.d_prime_bound,
                    max_finite_witness=report.max_finite_witness,
                    counterexample=(a, b, "finite across cyclic classes"),
                )
    return TheoremReport(
        passed=True,
        diameter=report.diameter,
        period=report.period,
        d_prime_bound=report.d_prime_bound,
        max_finite_witness=report.max_finite_witness,
    )


def communicating_classes(env: ExBmdp) -> list[list[int]]:
    """Strongly connected components of the composed observation graph.

    On a valid environment every component is closed (reachability is
    symmetric); an exit edge raises OpenComponent and signals a modeling bug.
    """
    comps, exits = closed_components(env.observation_adjacency())
    if exits:
        comp_of = {}
        for ci, comp in enumerate(comps):
            for v in comp:
                comp_of[v] = ci
        u, v = exits[0]
        raise OpenComponent(comps[comp_of[u]], (u, v))
    return comps
