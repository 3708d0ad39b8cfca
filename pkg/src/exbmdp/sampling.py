"""Trajectory collection under the uniformly random behavior policy.

The uniform policy is the only one shipped: it trivially depends on the
controllable latent state alone, which is the coverage property the
estimators need. Randomness comes from a counter-based 64-bit generator
(Philox) with one spawned stream per trajectory index, so collection is
reproducible at any parallelism level.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .analysis import communicating_classes
from .core import ExBmdp
from .errors import KMaxTooLarge, LengthTooShort, TooFewTrajectories

UNIFORM_OBS = "uniform-obs"
PER_CLASS = "per-communicating-class"


@dataclass(frozen=True)
class Trajectory:
    """``obs`` has one entry per timestep; ``actions`` one per transition."""

    obs: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        obs = np.ascontiguousarray(np.asarray(self.obs, dtype=np.int64))
        actions = np.ascontiguousarray(np.asarray(self.actions, dtype=np.int64))
        if len(obs) != len(actions) + 1:
            raise ValueError("need exactly one action per transition")
        obs.setflags(write=False)
        actions.setflags(write=False)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "actions", actions)

    def __len__(self) -> int:
        return len(self.obs)


@dataclass(frozen=True)
class TrajectoryDataset:
    trajectories: tuple[Trajectory, ...]
    seed: int
    start_mode: object = UNIFORM_OBS
    n_actions: int = 0
    total_steps: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "total_steps", sum(len(t) for t in self.trajectories)
        )
        if self.n_actions <= 0:
            # Fallback for hand-built datasets: infer from the data.
            inferred = 1 + max(
                (int(t.actions.max()) for t in self.trajectories if len(t.actions)),
                default=0,
            )
            object.__setattr__(self, "n_actions", inferred)


def _stream(seed: int, trajectory_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(
        entropy=int(seed) & (2**64 - 1), spawn_key=(trajectory_index,)
    )
    return np.random.Generator(np.random.Philox(seq))


def _draw_start(env, start_mode, index, classes, rng):
    """Start observation for one trajectory, drawn from that trajectory's own
    stream so the choice is independent of collection order."""
    n = env.n_obs
    if isinstance(start_mode, (list, tuple, np.ndarray)):
        value = int(start_mode[index])
        if not 0 <= value < n:
            raise ValueError(f"fixed start observation {value} out of range")
        return value
    if start_mode == UNIFORM_OBS:
        return int(rng.integers(0, n))
    if start_mode == PER_CLASS:
        if index < len(classes):
            members = classes[index]
            return int(members[rng.integers(0, len(members))])
        return int(rng.integers(0, n))
    raise ValueError(f"unknown start mode {start_mode!r}")


def sample_dataset(
    env: ExBmdp,
    n_trajectories: int,
    length: int,
    seed: int,
    start_mode=UNIFORM_OBS,
) -> TrajectoryDataset:
    """Collect ``n_trajectories`` rollouts of ``length`` observations each.

    Actions are uniform over the action set. ``start_mode`` is one of
    UNIFORM_OBS, PER_CLASS (guarantees one start inside each communicating
    class) or an explicit list of start observations, one per trajectory.
    """
    if length < 2:
        raise LengthTooShort(f"need length >= 2, got {length}")
    if n_trajectories < 1:
        raise TooFewTrajectories("need at least one trajectory")
    classes: list = []
    if start_mode == PER_CLASS:
        classes = communicating_classes(env)
        if n_trajectories < len(classes):
            raise TooFewTrajectories(
                f"{len(classes)} communicating classes need at least that many "
                f"trajectories, got {n_trajectories}"
            )
    if isinstance(start_mode, (list, tuple, np.ndarray)) and len(start_mode) != n_trajectories:
        raise TooFewTrajectories(
            f"fixed start list has {len(start_mode)} entries for "
            f"{n_trajectories} trajectories"
        )
    cumulative = np.cumsum(env.transitions, axis=2)
    n_actions = env.n_actions
    trajectories = []
    for i in range(n_trajectories):
        rng = _stream(seed, i)
        start = _draw_start(env, start_mode, i, classes, rng)
        actions = rng.integers(0, n_actions, size=length - 1)
        uniforms = rng.random(length - 1)
        obs = np.empty(length, dtype=np.int64)
        obs[0] = start
        x = obs[0]
        for t in range(length - 1):
            x = np.searchsorted(cumulative[actions[t], x], uniforms[t], side="right")
            # A cumulative row can fall epsilon short of 1; clamp the draw.
            if x >= env.n_obs:
                x = env.n_obs - 1
            obs[t + 1] = x
        trajectories.append(Trajectory(obs=obs, actions=actions))
    mode = tuple(int(v) for v in start_mode) if isinstance(
        start_mode, (list, tuple, np.ndarray)
    ) else start_mode
    return TrajectoryDataset(
        trajectories=tuple(trajectories),
        seed=int(seed),
        start_mode=mode,
        n_actions=n_actions,
    )


def validate_dataset(dataset: TrajectoryDataset, env: ExBmdp) -> None:
    """Assert every recorded transition has positive composed probability."""
    for ti, traj in enumerate(dataset.trajectories):
        probs = env.transitions[traj.actions, traj.obs[:-1], traj.obs[1:]]
        bad = np.flatnonzero(probs <= 0.0)
        if bad.size:
            t = int(bad[0])
            raise AssertionError(
                f"trajectory {ti} step {t}: transition "
                f"({traj.obs[t]}, {traj.actions[t]}, {traj.obs[t + 1]}) "
                f"has zero probability"
            )


# ---------------------------------------------------------------------------
# Span index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpanIndex:
    """Windowed span view of a dataset.

    Anchors are the first ``len(traj) - k_max - 1`` timesteps of each
    trajectory, so a span (x_t, a_t, x_{t+k}) never crosses a trajectory
    boundary and every k in 1..k_max has the same anchor set. ``x0`` and
    ``first_action`` are indexed by anchor; ``xk[k-1]`` holds the k-step
    endpoints.
    """

    k_max: int
    x0: np.ndarray
    first_action: np.ndarray
    xk: np.ndarray
    dataset_seed: int

    @property
    def n_anchors(self) -> int:
        return len(self.x0)

    def imprecise_upper_bounds(self, salt: int) -> np.ndarray:
        """Seeded per-span draw of an upper bound k' uniform on {k..k_max};
        row k-1 of the result pairs with row k-1 of ``xk``.

        The draw depends only on the dataset seed, k_max and ``salt``, never
        on the encoder, so every encoder is scored on identical keys.
        """
        rng = _stream(self.dataset_seed ^ 0x1B873593, salt)
        n = self.n_anchors
        out = np.empty((self.k_max, n), dtype=np.int64)
        for k in range(1, self.k_max + 1):
            out[k - 1] = rng.integers(k, self.k_max + 1, size=n)
        return out


def span_index(dataset: TrajectoryDataset, k_max: int) -> SpanIndex:
    """Build the span view; raises KMaxTooLarge if any trajectory is too
    short to contribute an anchor."""
    if k_max < 1:
        raise KMaxTooLarge("need k_max >= 1")
    x0_parts, act_parts = [], []
    xk_parts: list[list[np.ndarray]] = [[] for _ in range(k_max)]
    for traj in dataset.trajectories:
        n_anchor = len(traj) - k_max - 1
        if n_anchor < 1:
            raise KMaxTooLarge(
                f"k_max={k_max} leaves no spans in a trajectory of length {len(traj)}"
            )
        x0_parts.append(traj.obs[:n_anchor])
        act_parts.append(traj.actions[:n_anchor])
        for k in range(1, k_max + 1):
            xk_parts[k - 1].append(traj.obs[k : n_anchor + k])
    x0 = np.ascontiguousarray(np.concatenate(x0_parts))
    first_action = np.ascontiguousarray(np.concatenate(act_parts))
    xk = np.ascontiguousarray(
        np.stack([np.concatenate(parts) for parts in xk_parts])
    )
    return SpanIndex(
        k_max=k_max,
        x0=x0,
        first_action=first_action,
        xk=xk,
        dataset_seed=dataset.seed,
    )


def action_sequences(dataset: TrajectoryDataset, k_max: int) -> np.ndarray:
    """Anchor-aligned action windows a_t..a_{t+k_max-1}, for estimators keyed
    by action prefixes. Shape (n_anchors, k_max)."""
    parts = []
    for traj in dataset.trajectories:
        n_anchor = len(traj) - k_max - 1
        if n_anchor < 1:
            raise KMaxTooLarge(
                f"k_max={k_max} leaves no spans in a trajectory of length {len(traj)}"
            )
        windows = np.lib.stride_tricks.sliding_window_view(traj.actions, k_max)
        parts.append(windows[:n_anchor])
    return np.ascontiguousarray(np.concatenate(parts))


# ---------------------------------------------------------------------------
# Dataset cache files
# ---------------------------------------------------------------------------


def save_dataset(dataset: TrajectoryDataset) -> str:
    """Line-oriented text form: a header, then one "obs action obs ..." line
    per trajectory."""
    out = io.StringIO()
    out.write(
        f"# exbmdp-dataset seed={dataset.seed} "
        f"trajectories={len(dataset.trajectories)} "
        f"actions={dataset.n_actions} "
        f"start={dataset.start_mode!r}\n"
    )
    for traj in dataset.trajectories:
        tokens = []
        for t in range(len(traj.actions)):
            tokens.append(str(int(traj.obs[t])))
            tokens.append(str(int(traj.actions[t])))
        tokens.append(str(int(traj.obs[-1])))
        out.write(" ".join(tokens) + "\n")
    return out.getvalue()


def load_dataset(text: str) -> TrajectoryDataset:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("# exbmdp-dataset"):
        raise ValueError("missing dataset header line")
    header = dict(
        part.split("=", 1) for part in lines[0].split()[2:] if "=" in part
    )
    trajectories = []
    for line in lines[1:]:
        values = [int(tok) for tok in line.split()]
        if len(values) % 2 != 1:
            raise ValueError("trajectory line must end on an observation")
        trajectories.append(
            Trajectory(obs=np.array(values[0::2]), actions=np.array(values[1::2]))
        )
    return TrajectoryDataset(
        trajectories=tuple(trajectories),
        seed=int(header.get("seed", 0)),
        start_mode=header.get("start", UNIFORM_OBS),
        n_actions=int(header.get("actions", 0)),
    )
