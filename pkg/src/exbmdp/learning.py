"""Count-based estimators, the four loss functionals, exhaustive encoder
enumeration and minimal-state selection.

Loss conventions, shared by the sampled estimators and the exact oracle:
  * The inverse term averages per k first (each k over its own spans), then
    over k in 1..K with equal weight.
  * The forward term scores one-step latent predictions; it is zero exactly
    when the induced latent dynamics are deterministic on the data.
  * A zero-denominator count cell falls back to the uniform distribution
    (over actions for the inverse model, over latent states for the forward
    model); a zero numerator over a positive denominator is floored rather
    than renormalized, so the floored distribution intentionally does not sum
    to one.

The exact oracle evaluates the same functional under the stationary span
distribution of the uniform policy, by matrix powers of the composed
transition operator and exact conditional probabilities; no sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np

from . import kernels
from .analysis import communicating_classes
from .core import Encoder, ExBmdp, _encoder_unchecked
from .errors import (
    ConfigMismatch,
    EmptyStream,
    TooLarge,
    TooManyObservations,
)
from .sampling import (
    UNIFORM_OBS,
    TrajectoryDataset,
    action_sequences,
    sample_dataset,
    span_index,
)

MAX_ENUMERATION_OBS = 14
MAX_EXACT_OBS = 12
_BATCH = 2048
_SEED_MASK = 2**64 - 1


class LossVariant(str, Enum):
    AC_STATE = "ac_state"
    ACDF = "acdf"
    FULL_MULTI = "full_multi"
    IMPRECISE_K = "imprecise_k"


@dataclass(frozen=True)
class LossConfig:
    variant: LossVariant
    K: int
    smoothing_floor: float = 1e-7
    tolerance: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "variant", LossVariant(self.variant))
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not 0.0 < self.smoothing_floor < 1.0:
            raise ValueError("smoothing floor must lie strictly inside (0, 1)")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")


@dataclass(frozen=True)
class DataParams:
    """Per-dataset trajectory layout: ``n_trajectories`` rollouts of
    ``steps // n_trajectories`` observations each."""

    steps: int = 8000
    n_trajectories: int = 1
    start_mode: object = UNIFORM_OBS

    @property
    def length(self) -> int:
        return self.steps // self.n_trajectories


@dataclass(frozen=True)
class LearnResult:
    encoder: Encoder
    loss: float
    n_evaluated: int
    config: LossConfig
    seed: int | None = None
    per_encoder_losses: tuple | None = None


# ---------------------------------------------------------------------------
# Encoder enumeration
# ---------------------------------------------------------------------------


def _iter_rgs(n: int):
    """All restricted-growth strings of length n, lexicographically, as a
    (list, n_latent) stream. The list is reused; callers must copy."""
    a = [0] * n
    yield a, 1
    if n == 1:
        return
    # prefix_max[i] = max(a[0..i-1]); updated incrementally on each advance.
    prefix_max = [0] * n
    while True:
        i = n - 1
        while i > 0 and a[i] > prefix_max[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        high = a[i] if a[i] > prefix_max[i] else prefix_max[i]
        for j in range(i + 1, n):
            a[j] = 0
            prefix_max[j] = high
        yield a, high + 1


def enumerate_encoders(n_obs: int):
    """Every partition of n_obs observations exactly once, in lexicographic
    restricted-growth-string order."""
    if not 1 <= n_obs <= MAX_ENUMERATION_OBS:
        raise TooManyObservations(
            f"refusing to enumerate partitions of {n_obs} observations "
            f"(limit {MAX_ENUMERATION_OBS})"
        )
    for labels, n_latent in _iter_rgs(n_obs):
        yield _encoder_unchecked(tuple(labels), n_latent)


# ---------------------------------------------------------------------------
# Count tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountTables:
    """Empirical frequency tables over encoded training spans.

    ``f_num[s, a, s', k-1]`` counts k-step spans from latent s to s' whose
    first action was a; ``f_den`` is its sum over actions. ``g_num[s, a, s']``
    counts one-step latent transitions. For the imprecise-k variant the k axis
    is keyed by the drawn upper bound instead of the true span length; for the
    full-multi variant the prefix-keyed counts live in ``prefix_counts``,
    mapping (k, k', prefix, s, s') to a count vector over the predicted
    action.
    """

    variant: LossVariant
    n_latent: int
    n_actions: int
    k_max: int
    f_num: np.ndarray
    f_den: np.ndarray
    g_num: np.ndarray
    g_den: np.ndarray
    prefix_counts: dict | None = field(default=None, repr=False)


def fit_counts(
    encoder: Encoder,
    train: TrajectoryDataset,
    k_max: int,
    variant: LossVariant = LossVariant.AC_STATE,
) -> CountTables:
    variant = LossVariant(variant)
    spans = span_index(train, k_max)
    enc = encoder.as_array()
    n_latent = encoder.n_latent
    n_actions = train.n_actions
    s0 = enc[spans.x0]
    act = spans.first_action

    f_num = np.zeros((n_latent, n_actions, n_latent, k_max), dtype=np.int64)
    f_den = np.zeros((n_latent, n_latent, k_max), dtype=np.int64)
    if variant is LossVariant.IMPRECISE_K:
        bounds = spans.imprecise_upper_bounds(salt=0)
        for k in range(1, k_max + 1):
            sk = enc[spans.xk[k - 1]]
            drawn = bounds[k - 1] - 1
            np.add.at(f_num, (s0, act, sk, drawn), 1)
            np.add.at(f_den, (s0, sk, drawn), 1)
    else:
        for k in range(1, k_max + 1):
            sk = enc[spans.xk[k - 1]]
            np.add.at(f_num, (s0, act, sk, k - 1), 1)
            np.add.at(f_den, (s0, sk, k - 1), 1)

    s1 = enc[spans.xk[0]]
    g_num = np.zeros((n_latent, n_actions, n_latent), dtype=np.int64)
    g_den = np.zeros((n_latent, n_actions), dtype=np.int64)
    np.add.at(g_num, (s0, act, s1), 1)
    np.add.at(g_den, (s0, act), 1)

    prefix_counts = None
    if variant is LossVariant.FULL_MULTI:
        prefix_counts = {}
        windows = action_sequences(train, k_max)
        for k in range(1, k_max + 1):
            sk = enc[spans.xk[k - 1]]
            for kp in range(k):
                predicted = windows[:, kp]
                for i in range(spans.n_anchors):
                    key = (k, kp, tuple(windows[i, :kp]), int(s0[i]), int(sk[i]))
                    row = prefix_counts.get(key)
                    if row is None:
                        row = np.zeros(n_actions, dtype=np.int64)
                        prefix_counts[key] = row
                    row[predicted[i]] += 1

    return CountTables(
        variant=variant,
        n_latent=n_latent,
        n_actions=n_actions,
        k_max=k_max,
        f_num=f_num,
        f_den=f_den,
        g_num=g_num,
        g_den=g_den,
        prefix_counts=prefix_counts,
    )


def _smoothed(num, den, uniform, floor):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    return np.where(den == 0, uniform, np.where(num == 0, floor, ratio))


def eval_loss(
    encoder: Encoder,
    counts: CountTables,
    validation: TrajectoryDataset,
    config: LossConfig,
) -> float:
    """Validation loss of ``encoder`` under ``config``, using classifiers
    frozen from ``counts``."""
    if counts.variant is not config.variant:
        raise ConfigMismatch(
            f"counts were fitted for {counts.variant}, not {config.variant}"
        )
    if counts.k_max < config.K:
        raise ConfigMismatch(f"counts cover k <= {counts.k_max} < K={config.K}")
    if counts.n_latent != encoder.n_latent:
        raise ConfigMismatch("counts were fitted with a different encoder range")
    if config.variant is LossVariant.IMPRECISE_K and counts.k_max != config.K:
        raise ConfigMismatch("imprecise-k draws must use k_max == K")

    enc = encoder.as_array()
    floor = config.smoothing_floor
    spans = span_index(validation, config.K)
    s0 = enc[spans.x0]
    act = spans.first_action
    n_actions = counts.n_actions
    uniform_action = 1.0 / n_actions

    if config.variant is LossVariant.FULL_MULTI:
        multistep = _eval_full_multi(
            counts, spans, enc, s0, validation, config, uniform_action
        )
        return float(multistep)

    if config.variant is LossVariant.IMPRECISE_K:
        bounds = spans.imprecise_upper_bounds(salt=0)
        group_sums = np.zeros(config.K)
        group_counts = np.zeros(config.K, dtype=np.int64)
        for k in range(1, config.K + 1):
            sk = enc[spans.xk[k - 1]]
            drawn = bounds[k - 1] - 1
            num = counts.f_num[s0, act, sk, drawn]
            den = counts.f_den[s0, sk, drawn]
            contribution = -np.log(_smoothed(num, den, uniform_action, floor))
            np.add.at(group_sums, drawn, contribution)
            np.add.at(group_counts, drawn, 1)
        occupied = group_counts > 0
        return float((group_sums[occupied] / group_counts[occupied]).mean())

    per_k = np.empty(config.K)
    for k in range(1, config.K + 1):
        sk = enc[spans.xk[k - 1]]
        num = counts.f_num[s0, act, sk, k - 1]
        den = counts.f_den[s0, sk, k - 1]
        per_k[k - 1] = -np.log(_smoothed(num, den, uniform_action, floor)).mean()
    loss = per_k.mean()

    if config.variant is LossVariant.ACDF:
        s1 = enc[spans.xk[0]]
        num = counts.g_num[s0, act, s1]
        den = counts.g_den[s0, act]
        uniform_latent = 1.0 / counts.n_latent
        loss += -np.log(_smoothed(num, den, uniform_latent, floor)).mean()
    return float(loss)


def _eval_full_multi(counts, spans, enc, s0, validation, config, uniform_action):
    windows = action_sequences(validation, config.K)
    floor = config.smoothing_floor
    per_k = np.empty(config.K)
    for k in range(1, config.K + 1):
        sk = enc[spans.xk[k - 1]]
        per_kp = np.empty(k)
        for kp in range(k):
            total = 0.0
            for i in range(spans.n_anchors):
                key = (k, kp, tuple(windows[i, :kp]), int(s0[i]), int(sk[i]))
                row = counts.prefix_counts.get(key)
                if row is None:
                    prob = uniform_action
                else:
                    numerator = row[windows[i, kp]]
                    prob = numerator / row.sum() if numerator else floor
                total -= math.log(prob)
            per_kp[kp] = total / spans.n_anchors
        per_k[k - 1] = per_kp.mean()
    return per_k.mean()


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------


def stationary_distribution(env: ExBmdp) -> np.ndarray:
    """Long-run anchor distribution of the uniform policy: the stationary
    distribution of each closed communicating class, classes weighted by their
    share of the observation set (the start-uniform limit)."""
    chain = env.uniform_policy_matrix()
    out = np.zeros(env.n_obs)
    for comp in communicating_classes(env):
        sub = chain[np.ix_(comp, comp)]
        m = len(comp)
        system = (sub - np.eye(m)).T
        system[-1, :] = 1.0
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        pi = np.linalg.solve(system, rhs)
        out[comp] = pi * (m / env.n_obs)
    return out


def span_joint_tensors(env: ExBmdp, k_max: int) -> np.ndarray:
    """M[k-1, a, x, x'] = Pr(anchor at x, first action a, k-step endpoint x')
    under the stationary span distribution."""
    if env.n_obs > MAX_EXACT_OBS:
        raise TooLarge(
            f"exact oracle limited to {MAX_EXACT_OBS} observations, "
            f"got {env.n_obs}"
        )
    per_action = env.transitions
    chain = env.uniform_policy_matrix()
    anchor = stationary_distribution(env)[:, None] / env.n_actions
    out = np.empty((k_max, env.n_actions, env.n_obs, env.n_obs))
    tail = np.eye(env.n_obs)
    for k in range(k_max):
        for a in range(env.n_actions):
            out[k, a] = anchor * (per_action[a] @ tail)
        tail = tail @ chain
    return np.ascontiguousarray(out)


def _project_joint(joint: np.ndarray, enc: np.ndarray, n_latent: int) -> np.ndarray:
    """Sum an [A, n, n] observation joint into latent cells."""
    n_actions = joint.shape[0]
    out = np.zeros((n_actions, n_latent, n_latent))
    for a in range(n_actions):
        np.add.at(out[a], (enc[:, None], enc[None, :]), joint[a])
    return out


def _conditional_score(cells: np.ndarray, axis: int) -> float:
    """Sum of joint * (-log conditional) along ``axis``; zero cells skipped."""
    den = cells.sum(axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        surplus = cells * (np.log(den) - np.log(cells))
    return float(np.where(cells > 0.0, surplus, 0.0).sum())


def _full_multi_cells(env: ExBmdp, k_max: int) -> dict:
    """Encoder-independent joints for the all-actions-on-the-path loss.

    For every span length k, prediction offset k' and action prefix, the
    value is an [A, n, n] joint over (anchor, predicted action, endpoint).
    Grouped by (k, k') for the nested averaging.
    """
    per_action = env.transitions / env.n_actions
    chain = env.uniform_policy_matrix()
    anchor = np.diag(stationary_distribution(env))
    tails = [np.eye(env.n_obs)]
    for _ in range(k_max):
        tails.append(tails[-1] @ chain)
    grouped: dict = {}
    for k in range(1, k_max + 1):
        for kp in range(k):
            tensors = []
            for prefix in product(range(env.n_actions), repeat=kp):
                walk = anchor
                for a in prefix:
                    walk = walk @ per_action[a]
                joint = np.stack(
                    [walk @ per_action[a] @ tails[k - kp - 1] for a in range(env.n_actions)]
                )
                tensors.append(joint)
            grouped[(k, kp)] = tensors
    return grouped


def _full_multi_exact(enc, n_latent, grouped, k_max) -> float:
    per_k = np.empty(k_max)
    for k in range(1, k_max + 1):
        per_kp = np.empty(k)
        for kp in range(k):
            per_kp[kp] = sum(
                _conditional_score(_project_joint(t, enc, n_latent), axis=0)
                for t in grouped[(k, kp)]
            )
        per_k[k - 1] = per_kp.mean()
    return float(per_k.mean())


def _imprecise_exact(enc, n_latent, joints, k_max) -> float:
    """Population value of the upper-bound-keyed inverse loss.

    A true-k span lands on key k' with probability 1/(k_max - k + 1); the
    classifier for key k' is the conditional of the resulting mixture, and the
    score averages the per-key means with equal weight.
    """
    projected = [
        _project_joint(joints[k], enc, n_latent) for k in range(k_max)
    ]
    weights = [1.0 / (k_max - k) for k in range(k_max)]  # index k = true k-1
    per_key = np.empty(k_max)
    mixture = np.zeros_like(projected[0])
    mass = 0.0
    for key in range(k_max):
        mixture = mixture + weights[key] * projected[key]
        mass += weights[key]
        per_key[key] = _conditional_score(mixture, axis=0) / mass
    return float(per_key.mean())


def exact_loss(encoder: Encoder, env: ExBmdp, config: LossConfig) -> float:
    """Population loss of one encoder under the stationary span distribution."""
    config = _coerce_config(config)
    if env.n_obs > MAX_EXACT_OBS:
        raise TooLarge(
            f"exact oracle limited to {MAX_EXACT_OBS} observations, got {env.n_obs}"
        )
    enc = encoder.as_array()
    if config.variant is LossVariant.FULL_MULTI:
        grouped = _full_multi_cells(env, config.K)
        return _full_multi_exact(enc, encoder.n_latent, grouped, config.K)
    joints = span_joint_tensors(env, config.K)
    if config.variant is LossVariant.IMPRECISE_K:
        return _imprecise_exact(enc, encoder.n_latent, joints, config.K)
    start = np.array(encoder.assignment, dtype=np.int8)
    _, terms, fwd = kernels.exact_sweep(joints, start, 1)
    loss = terms[0].mean()
    if config.variant is LossVariant.ACDF:
        loss += fwd[0]
    return float(loss)


def _coerce_config(config: LossConfig) -> LossConfig:
    if not isinstance(config, LossConfig):
        raise ConfigMismatch(f"expected LossConfig, got {type(config).__name__}")
    return config


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def select_encoder(pairs, tolerance: float = 1e-3) -> Encoder:
    """Among encoders with loss within ``tolerance`` (relative) of the overall
    minimum, return the one with the fewest latent states; ties break toward
    the lexicographically smallest restricted-growth string. The result does
    not depend on stream order."""
    best = math.inf
    candidates: list = []
    for encoder, loss in pairs:
        if loss < best:
            best = loss
            cutoff = best * (1.0 + tolerance)
            candidates = [c for c in candidates if c[0] <= cutoff]
        if loss <= best * (1.0 + tolerance):
            candidates.append((loss, encoder.n_latent, encoder.assignment, encoder))
    if not candidates:
        raise EmptyStream("no encoder candidates supplied")
    cutoff = best * (1.0 + tolerance)
    viable = [c for c in candidates if c[0] <= cutoff]
    viable.sort(key=lambda c: (c[1], c[2]))
    return viable[0][3]


class _BatchSelector:
    """Streaming argmin over (loss, n_latent, rgs) batches with the same
    tie-break as :func:`select_encoder`."""

    def __init__(self, tolerance: float):
        self.tolerance = tolerance
        self.best = math.inf
        self.candidates: list = []
        self.n_evaluated = 0

    def offer(self, rows: np.ndarray, losses: np.ndarray) -> None:
        self.n_evaluated += len(losses)
        low = float(losses.min())
        if low < self.best:
            self.best = low
            cutoff = self.best * (1.0 + self.tolerance)
            self.candidates = [c for c in self.candidates if c[0] <= cutoff]
        cutoff = self.best * (1.0 + self.tolerance)
        for i in np.flatnonzero(losses <= cutoff):
            labels = tuple(int(v) for v in rows[i])
            self.candidates.append((float(losses[i]), max(labels) + 1, labels))

    def result(self) -> tuple[Encoder, float]:
        if not self.candidates:
            raise EmptyStream("no encoder candidates supplied")
        cutoff = self.best * (1.0 + self.tolerance)
        viable = [c for c in self.candidates if c[0] <= cutoff]
        viable.sort(key=lambda c: (c[1], c[2]))
        loss, n_latent, labels = viable[0]
        return _encoder_unchecked(labels, n_latent), loss


# ---------------------------------------------------------------------------
# Full sweeps
# ---------------------------------------------------------------------------


def _assemble_losses(terms: np.ndarray, fwd: np.ndarray, config: LossConfig):
    base = terms[:, : config.K].mean(axis=1)
    if config.variant is LossVariant.ACDF:
        base = base + fwd
    return base


def _sweep_batches(n_obs: int, evaluate):
    """Drive a kernel sweep over every partition; yields (rows, terms, fwd)."""
    start = kernels.rgs_first(n_obs)
    while True:
        rows, terms, fwd = evaluate(start)
        if rows.shape[0] == 0:
            return
        yield rows, terms, fwd
        if rows.shape[0] < _BATCH:
            return
        nxt = np.array(rows[-1], dtype=np.int8)
        if not kernels.rgs_successor(nxt):
            return
        start = nxt


def sweep_exact_terms(env: ExBmdp, k_max: int):
    """Per-partition exact inverse terms and forward score, streamed in
    enumeration order. Any AC-State/ACDF configuration with K <= k_max can be
    assembled from one sweep."""
    joints = span_joint_tensors(env, k_max)
    yield from _sweep_batches(
        env.n_obs, lambda start: kernels.exact_sweep(joints, start, _BATCH)
    )


def sweep_sampled_terms(
    env_n_obs: int,
    n_actions: int,
    train: TrajectoryDataset,
    validation: TrajectoryDataset,
    k_max: int,
    smoothing_floor: float,
):
    """Count-based analogue of :func:`sweep_exact_terms` over a train/validation
    pair."""
    spans_train = span_index(train, k_max)
    spans_val = span_index(validation, k_max)

    def evaluate(start):
        return kernels.span_sweep(
            env_n_obs,
            n_actions,
            spans_train.x0,
            spans_train.first_action,
            spans_train.xk,
            spans_val.x0,
            spans_val.first_action,
            spans_val.xk,
            smoothing_floor,
            start,
            _BATCH,
        )

    yield from _sweep_batches(env_n_obs, evaluate)


def select_from_term_batches(batches, configs):
    """Shared-term selection for several AC-State/ACDF configs at once; one
    sweep serves every config with K <= the swept k_max. Returns a list of
    (encoder, loss, n_evaluated) aligned with ``configs``."""
    selectors = [_BatchSelector(c.tolerance) for c in configs]
    for rows, terms, fwd in batches:
        for selector, config in zip(selectors, configs):
            selector.offer(rows, _assemble_losses(terms, fwd, config))
    out = []
    for selector in selectors:
        encoder, loss = selector.result()
        out.append((encoder, loss, selector.n_evaluated))
    return out


def _per_encoder_loop(env: ExBmdp, config: LossConfig, score):
    selector = _BatchSelector(config.tolerance)
    losses_out = []
    for encoder in enumerate_encoders(env.n_obs):
        loss = score(encoder)
        losses_out.append((encoder, loss))
        selector.offer(
            np.array([encoder.assignment], dtype=np.int8), np.array([loss])
        )
    encoder, loss = selector.result()
    return encoder, loss, selector.n_evaluated, losses_out


def learn_exact(
    env: ExBmdp, config: LossConfig, keep_losses: bool = False
) -> LearnResult:
    """Exhaustive search for the minimum of the population loss."""
    config = _coerce_config(config)
    if env.n_obs > MAX_EXACT_OBS:
        raise TooLarge(f"exact search limited to {MAX_EXACT_OBS} observations")
    if config.variant in (LossVariant.AC_STATE, LossVariant.ACDF):
        selector = _BatchSelector(config.tolerance)
        kept = [] if keep_losses else None
        for rows, terms, fwd in sweep_exact_terms(env, config.K):
            losses = _assemble_losses(terms, fwd, config)
            selector.offer(rows, losses)
            if kept is not None:
                kept.extend(
                    (_encoder_unchecked(tuple(int(v) for v in rows[i]), int(rows[i].max()) + 1), float(losses[i]))
                    for i in range(len(losses))
                )
        encoder, loss = selector.result()
        return LearnResult(
            encoder=encoder,
            loss=loss,
            n_evaluated=selector.n_evaluated,
            config=config,
            per_encoder_losses=tuple(kept) if kept is not None else None,
        )

    if config.variant is LossVariant.FULL_MULTI:
        grouped = _full_multi_cells(env, config.K)
        score = lambda e: _full_multi_exact(e.as_array(), e.n_latent, grouped, config.K)
    else:
        joints = span_joint_tensors(env, config.K)
        score = lambda e: _imprecise_exact(e.as_array(), e.n_latent, joints, config.K)
    encoder, loss, n_evaluated, losses_out = _per_encoder_loop(env, config, score)
    return LearnResult(
        encoder=encoder,
        loss=loss,
        n_evaluated=n_evaluated,
        config=config,
        per_encoder_losses=tuple(losses_out) if keep_losses else None,
    )


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic child seed for a labeled role (train=0, validation=1...)."""
    seq = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=key)
    return int(seq.generate_state(1, np.uint64)[0])


def learn(
    env: ExBmdp,
    config: LossConfig,
    data: DataParams | None = None,
    seed: int = 0,
    keep_losses: bool = False,
) -> LearnResult:
    """Sample a train/validation pair, score every encoder and select.

    The train and validation datasets use child seeds 0 and 1 of ``seed``.
    """
    config = _coerce_config(config)
    data = data or DataParams()
    train = sample_dataset(
        env, data.n_trajectories, data.length, derive_seed(seed, 0), data.start_mode
    )
    validation = sample_dataset(
        env, data.n_trajectories, data.length, derive_seed(seed, 1), data.start_mode
    )
    return learn_from_datasets(
        env, config, train, validation, seed=seed, keep_losses=keep_losses
    )


def learn_from_datasets(
    env: ExBmdp,
    config: LossConfig,
    train: TrajectoryDataset,
    validation: TrajectoryDataset,
    seed: int | None = None,
    keep_losses: bool = False,
) -> LearnResult:
    config = _coerce_config(config)
    if config.variant in (LossVariant.AC_STATE, LossVariant.ACDF):
        selector = _BatchSelector(config.tolerance)
        kept = [] if keep_losses else None
        batches = sweep_sampled_terms(
            env.n_obs,
            env.n_actions,
            train,
            validation,
            config.K,
            config.smoothing_floor,
        )
        for rows, terms, fwd in batches:
            losses = _assemble_losses(terms, fwd, config)
            selector.offer(rows, losses)
            if kept is not None:
                kept.extend(
                    (_encoder_unchecked(tuple(int(v) for v in rows[i]), int(rows[i].max()) + 1), float(losses[i]))
                    for i in range(len(losses))
                )
        encoder, loss = selector.result()
        return LearnResult(
            encoder=encoder,
            loss=loss,
            n_evaluated=selector.n_evaluated,
            config=config,
            seed=seed,
            per_encoder_losses=tuple(kept) if kept is not None else None,
        )

    def score(encoder: Encoder) -> float:
        counts = fit_counts(encoder, train, config.K, config.variant)
        return eval_loss(encoder, counts, validation, config)

    encoder, loss, n_evaluated, losses_out = _per_encoder_loop(env, config, score)
    return LearnResult(
        encoder=encoder,
        loss=loss,
        n_evaluated=n_evaluated,
        config=config,
        seed=seed,
        per_encoder_losses=tuple(losses_out) if keep_losses else None,
    )
