"""Classifies a learned encoder against the environment's shipped ground
truth: correct-minimal, correct-but-larger, or incorrect.

An encoder is accepted as a valid controllable-state representation when
  (i)  its induced latent dynamics are deterministic, and
  (ii) the pair (enhanced exogenous label, encoder label) determines the
       ground-truth controllable state,
where the enhanced exogenous label joins the shipped exogenous state with the
cyclic class of the shipped controllable state. These two sufficient
conditions are exactly what exact-loss minimizers of the combined inverse +
forward objective satisfy; for arbitrary encoders they may be conservative
(whether (ii) is also necessary is left open), which this module treats as
definitional.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import periodicity
from .core import Encoder, ExBmdp, _encoder_unchecked
from .errors import TooManyObservations

MAX_SEARCH_OBS = 14


class OutcomeKind(str, Enum):
    CORRECT_MINIMAL = "CorrectMinimal"
    CORRECT_NONMINIMAL = "CorrectNonMinimal"
    INCORRECT = "Incorrect"


@dataclass(frozen=True)
class NondeterminismWitness:
    """Two transitions out of one latent/action cell with different images."""

    latent: int
    action: int
    first: tuple[int, int]
    second: tuple[int, int]

    def __str__(self):
        (x1, y1), (x2, y2) = self.first, self.second
        return (
            f"latent {self.latent} under action {self.action}: "
            f"obs {x1} -> {y1} but obs {x2} -> {y2}"
        )


@dataclass(frozen=True)
class AmbiguityWitness:
    """One (enhanced exogenous, latent) pair covering two ground-truth states."""

    exo_label: tuple
    latent: int
    observations: tuple[int, int]

    def __str__(self):
        x1, x2 = self.observations
        return (
            f"enhanced exogenous {self.exo_label} with latent {self.latent} "
            f"covers observations {x1} and {x2} with different ground-truth "
            f"controllable states"
        )


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    detail: object = None


def enhanced_exogenous_labeling(env: ExBmdp) -> tuple:
    """Per-observation (exogenous index, cyclic class of the ground-truth
    controllable state)."""
    period, classes = periodicity(env.endo)
    return tuple(
        (env.phi_e_star[x], classes[env.phi_star[x]]) for x in range(env.n_obs)
    )


def induced_dynamics(encoder: Encoder, env: ExBmdp):
    """Latent transition table induced by pushing the composed dynamics
    through the encoder, or a witness that it is not single-valued."""
    return _induced(np.asarray(encoder.assignment, dtype=np.int64), env)


def _induced(enc: np.ndarray, env: ExBmdp):
    n_latent = int(enc.max()) + 1
    table = np.full((n_latent, env.n_actions), -1, dtype=np.int64)
    first_seen = {}
    positive = env.transitions > 0.0
    for a in range(env.n_actions):
        for x in range(env.n_obs):
            s = enc[x]
            for y in np.flatnonzero(positive[a, x]):
                t = int(enc[y])
                if table[s, a] < 0:
                    table[s, a] = t
                    first_seen[(s, a)] = (x, int(y))
                elif table[s, a] != t:
                    return NondeterminismWitness(
                        latent=int(s),
                        action=a,
                        first=first_seen[(s, a)],
                        second=(x, int(y)),
                    )
    return table


def _ambiguity(enc: np.ndarray, env: ExBmdp):
    labeling = enhanced_exogenous_labeling(env)
    seen = {}
    for x in range(env.n_obs):
        key = (labeling[x], int(enc[x]))
        s_true = env.phi_star[x]
        if key in seen:
            x_prev, s_prev = seen[key]
            if s_prev != s_true:
                return AmbiguityWitness(
                    exo_label=labeling[x],
                    latent=int(enc[x]),
                    observations=(x_prev, x),
                )
        else:
            seen[key] = (x, s_true)
    return None


def _is_valid(enc: np.ndarray, env: ExBmdp):
    outcome = _induced(enc, env)
    if isinstance(outcome, NondeterminismWitness):
        return outcome
    return _ambiguity(enc, env)


def classify(encoder: Encoder, env: ExBmdp) -> Outcome:
    """Outcome of the validity check plus minimality of the latent count.

    Invariant under relabeling: the encoder is canonicalized first.
    """
    encoder = Encoder.from_labels(encoder.assignment)
    witness = _is_valid(encoder.as_array(), env)
    if witness is not None:
        return Outcome(kind=OutcomeKind.INCORRECT, detail=witness)
    if encoder.n_latent == minimal_size(env):
        return Outcome(kind=OutcomeKind.CORRECT_MINIMAL)
    return Outcome(kind=OutcomeKind.CORRECT_NONMINIMAL)


def _rgs_with_block_count(n: int, m: int):
    """Restricted-growth strings of length n with exactly m distinct labels,
    lexicographic, yielded as a reused numpy buffer."""
    buf = np.zeros(n, dtype=np.int64)

    def rec(i: int, used: int):
        if i == n:
            if used == m:
                yield buf
            return
        if used + (n - i) < m:  # cannot reach m labels anymore
            return
        limit = min(used, m - 1)
        for v in range(limit + 1):
            buf[i] = v
            yield from rec(i + 1, used + (1 if v == used else 0))

    if n == 1:
        if m == 1:
            yield buf
        return
    yield from rec(1, 1)


def minimal_size(env: ExBmdp) -> int:
    """Smallest latent count over all partitions passing the validity check.

    Brute-forces partitions in size-ascending order with early exit; memoized
    per environment structure.
    """
    if env.n_obs > MAX_SEARCH_OBS:
        raise TooManyObservations(
            f"minimal-size search limited to {MAX_SEARCH_OBS} observations"
        )
    key = env.cache_key()
    cached = _minimal_size_cache.get(key)
    if cached is not None:
        return cached
    for m in range(1, env.n_obs + 1):
        for labels in _rgs_with_block_count(env.n_obs, m):
            if _is_valid(labels, env) is None:
                _minimal_size_cache[key] = m
                return m
    raise AssertionError("unreachable: the shipped ground-truth encoder is valid")


_minimal_size_cache: dict = {}


def minimal_valid_encoders(env: ExBmdp, n_latent: int | None = None):
    """All valid encoders with exactly ``n_latent`` states (defaults to the
    minimal count). Intended for small environments."""
    m = n_latent if n_latent is not None else minimal_size(env)
    out = []
    for labels in _rgs_with_block_count(env.n_obs, m):
        if _is_valid(labels, env) is None:
            out.append(_encoder_unchecked(tuple(int(v) for v in labels), m))
    return out
