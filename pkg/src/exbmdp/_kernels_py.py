"""Numpy fallback for the hot kernels: partition enumeration fused with
per-partition loss evaluation. The compiled extension (_kernels.pyx) mirrors
these signatures exactly; parity between the two backends is covered by
tests/test_kernels.py.

Both sweep kernels return, for a batch of partitions in restricted-growth
order starting at ``start``:
  * the partition rows themselves (int8, one row per partition),
  * ``terms``: per-k inverse-prediction scores, terms[i, k-1] being the mean
    negative log probability the count (or population) classifier assigns to
    the first action of a k-step span,
  * ``fwd``: the one-step latent forward score used by the combined loss.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure-python"


def rgs_first(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.int8)


def rgs_successor(a: np.ndarray) -> bool:
    """Advance ``a`` in place to the next restricted-growth string in
    lexicographic order; False when ``a`` was the last one."""
    n = len(a)
    high = 0
    highs = np.empty(n, dtype=np.int8)
    highs[0] = 0
    for i in range(1, n):
        if a[i - 1] > high:
            high = a[i - 1]
        highs[i] = high
    for i in range(n - 1, 0, -1):
        if a[i] <= highs[i]:
            a[i] += 1
            a[i + 1 :] = 0
            return True
    return False


def _rgs_batch(start: np.ndarray, max_count: int) -> np.ndarray:
    n = len(start)
    rows = np.empty((max_count, n), dtype=np.int8)
    current = np.array(start, dtype=np.int8)
    count = 0
    while count < max_count:
        rows[count] = current
        count += 1
        if not rgs_successor(current):
            break
    return rows[:count]


def exact_sweep(M: np.ndarray, start: np.ndarray, max_count: int):
    """Population losses for a batch of partitions.

    ``M[k-1, a, x, x']`` is the joint probability of anchoring a k-step span
    at observation x, taking first action a, and landing on x'. Scores are
    conditional entropies of the projected joints, in nats.
    """
    k_max, n_actions, n_obs, _ = M.shape
    rows = _rgs_batch(start, max_count)
    m = rows.shape[0]
    batch_idx = np.arange(m)[:, None]
    obs_idx = np.arange(n_obs)[None, :]
    one_hot = np.zeros((m, n_obs, n_obs))
    one_hot[batch_idx, obs_idx, rows] = 1.0
    one_hot_t = one_hot.transpose(0, 2, 1)

    terms = np.empty((m, k_max))
    fwd = np.empty(m)
    for k in range(k_max):
        projected = np.empty((m, n_actions, n_obs, n_obs))
        for a in range(n_actions):
            projected[:, a] = one_hot_t @ M[k, a] @ one_hot
        den = projected.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            surplus = projected * (np.log(den) - np.log(projected))
        terms[:, k] = np.where(projected > 0.0, surplus, 0.0).sum(axis=(1, 2, 3))
        if k == 0:
            den_fwd = projected.sum(axis=3, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                surplus = projected * (np.log(den_fwd) - np.log(projected))
            fwd[:] = np.where(projected > 0.0, surplus, 0.0).sum(axis=(1, 2, 3))
    return rows, terms, fwd


def span_sweep(
    n_obs: int,
    n_actions: int,
    train_x0: np.ndarray,
    train_act: np.ndarray,
    train_xk: np.ndarray,
    val_x0: np.ndarray,
    val_act: np.ndarray,
    val_xk: np.ndarray,
    floor: float,
    start: np.ndarray,
    max_count: int,
):
    """Count-based losses for a batch of partitions.

    Classifiers are frequency ratios over the encoded training spans; a zero
    denominator falls back to the uniform distribution (over actions for the
    inverse model, over latent states for the forward model) and a zero
    numerator with a positive denominator is floored at ``floor``.
    """
    k_max = train_xk.shape[0]
    rows = _rgs_batch(start, max_count)
    m = rows.shape[0]
    terms = np.empty((m, k_max))
    fwd = np.empty(m)
    uniform_action = 1.0 / n_actions
    for i in range(m):
        enc = rows[i].astype(np.int64)
        n_latent = int(enc.max()) + 1
        s0_train = enc[train_x0]
        s0_val = enc[val_x0]
        for k in range(k_max):
            sk_train = enc[train_xk[k]]
            cell_train = s0_train * n_obs + sk_train
            num_table = np.bincount(
                cell_train * n_actions + train_act,
                minlength=n_obs * n_obs * n_actions,
            )
            den_table = np.bincount(cell_train, minlength=n_obs * n_obs)
            cell_val = s0_val * n_obs + enc[val_xk[k]]
            num = num_table[cell_val * n_actions + val_act]
            den = den_table[cell_val]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = num / den
            prob = np.where(
                den == 0, uniform_action, np.where(num == 0, floor, ratio)
            )
            terms[i, k] = -np.log(prob).mean()
        s1_train = enc[train_xk[0]]
        pair_train = s0_train * n_actions + train_act
        g_num = np.bincount(
            pair_train * n_obs + s1_train, minlength=n_obs * n_actions * n_obs
        )
        g_den = np.bincount(pair_train, minlength=n_obs * n_actions)
        pair_val = s0_val * n_actions + val_act
        num = g_num[pair_val * n_obs + enc[val_xk[0]]]
        den = g_den[pair_val]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / den
        prob = np.where(
            den == 0, 1.0 / n_latent, np.where(num == 0, floor, ratio)
        )
        fwd[i] = -np.log(prob).mean()
    return rows, terms, fwd
