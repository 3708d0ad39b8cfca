import numpy as np
import pytest

from exbmdp.errors import KMaxTooLarge, LengthTooShort, TooFewTrajectories
from exbmdp.sampling import (
    PER_CLASS,
    Trajectory,
    TrajectoryDataset,
    action_sequences,
    load_dataset,
    sample_dataset,
    save_dataset,
    span_index,
    validate_dataset,
)


def test_reproducible_bit_identical(prime35):
    a = sample_dataset(prime35, 2, 500, seed=9)
    b = sample_dataset(prime35, 2, 500, seed=9)
    for ta, tb in zip(a.trajectories, b.trajectories):
        np.testing.assert_array_equal(ta.obs, tb.obs)
        np.testing.assert_array_equal(ta.actions, tb.actions)
    c = sample_dataset(prime35, 2, 500, seed=10)
    assert any(
        not np.array_equal(ta.obs, tc.obs)
        for ta, tc in zip(a.trajectories, c.trajectories)
    )


def test_transitions_have_positive_probability(branching):
    dataset = sample_dataset(branching, 3, 400, seed=1)
    validate_dataset(dataset, branching)
    assert dataset.total_steps == 3 * 400


def test_one_observation_env(one_obs_env):
    dataset = sample_dataset(one_obs_env, 1, 50, seed=0)
    np.testing.assert_array_equal(dataset.trajectories[0].obs, np.zeros(50))


def test_action_frequency_law_of_large_numbers(prime35):
    dataset = sample_dataset(prime35, 2, 5000, seed=4)
    actions = np.concatenate([t.actions for t in dataset.trajectories])
    for a in range(2):
        assert abs((actions == a).mean() - 0.5) <= 0.02


def test_per_class_starts_cover_both_classes(two_class_env):
    from exbmdp.analysis import communicating_classes

    classes = communicating_classes(two_class_env)
    dataset = sample_dataset(two_class_env, 2, 100, seed=3, start_mode=PER_CLASS)
    starts = [int(t.obs[0]) for t in dataset.trajectories]
    for comp, start in zip(classes, starts):
        assert start in comp


def test_per_class_needs_enough_trajectories(two_class_env):
    with pytest.raises(TooFewTrajectories):
        sample_dataset(two_class_env, 1, 100, seed=0, start_mode=PER_CLASS)


def test_length_too_short(prime35):
    with pytest.raises(LengthTooShort):
        sample_dataset(prime35, 1, 1, seed=0)


def test_fixed_starts(prime35):
    dataset = sample_dataset(prime35, 2, 10, seed=0, start_mode=[3, 1])
    assert [int(t.obs[0]) for t in dataset.trajectories] == [3, 1]


# ---------------------------------------------------------------------------
# Span index
# ---------------------------------------------------------------------------


def _toy_dataset(lengths, seed=0):
    trajectories = []
    base = 0
    for length in lengths:
        obs = np.arange(base, base + length) % 7
        actions = (np.arange(length - 1) + base) % 2
        trajectories.append(Trajectory(obs=obs, actions=actions))
        base += length
    return TrajectoryDataset(trajectories=tuple(trajectories), seed=seed, n_actions=2)


def test_span_anchor_count_small():
    spans = span_index(_toy_dataset([10]), k_max=7)
    assert spans.n_anchors == 2  # anchors t in {0, 1}


def test_span_kmax_too_large():
    with pytest.raises(KMaxTooLarge):
        span_index(_toy_dataset([10]), k_max=9)  # k_max = length - 1


def test_span_anchor_count_long(prime35):
    dataset = sample_dataset(prime35, 1, 5000, seed=0)
    spans = span_index(dataset, k_max=7)
    assert spans.n_anchors == 5000 - 7 - 1


def test_spans_never_cross_trajectory_boundaries():
    dataset = _toy_dataset([12, 9])
    k_max = 4
    spans = span_index(dataset, k_max)
    # Rebuild naively, one trajectory at a time.
    expected_x0, expected_xk = [], {k: [] for k in range(1, k_max + 1)}
    for traj in dataset.trajectories:
        n_anchor = len(traj) - k_max - 1
        for t in range(n_anchor):
            expected_x0.append(traj.obs[t])
            for k in range(1, k_max + 1):
                expected_xk[k].append(traj.obs[t + k])
    np.testing.assert_array_equal(spans.x0, expected_x0)
    for k in range(1, k_max + 1):
        np.testing.assert_array_equal(spans.xk[k - 1], expected_xk[k])


def test_action_sequences_align_with_spans():
    dataset = _toy_dataset([15])
    windows = action_sequences(dataset, 3)
    spans = span_index(dataset, 3)
    assert windows.shape == (spans.n_anchors, 3)
    np.testing.assert_array_equal(windows[:, 0], spans.first_action)


def test_imprecise_bounds_deterministic_and_in_range():
    dataset = _toy_dataset([30], seed=5)
    spans = span_index(dataset, 4)
    a = spans.imprecise_upper_bounds(salt=0)
    b = spans.imprecise_upper_bounds(salt=0)
    np.testing.assert_array_equal(a, b)
    for k in range(1, 5):
        assert a[k - 1].min() >= k
        assert a[k - 1].max() <= 4
    c = spans.imprecise_upper_bounds(salt=1)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# Cache files
# ---------------------------------------------------------------------------


def test_dataset_cache_roundtrip(prime35):
    dataset = sample_dataset(prime35, 2, 40, seed=77)
    text = save_dataset(dataset)
    again = load_dataset(text)
    assert again.seed == dataset.seed
    assert again.n_actions == dataset.n_actions
    for ta, tb in zip(dataset.trajectories, again.trajectories):
        np.testing.assert_array_equal(ta.obs, tb.obs)
        np.testing.assert_array_equal(ta.actions, tb.actions)
