# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementation of the partition-sweep kernels.

Mirrors _kernels_py.py exactly; see that module for the contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

BACKEND = "compiled"


def rgs_first(int n):
    return np.zeros(n, dtype=np.int8)


cdef int _advance(cnp.int8_t[::1] a) noexcept:
    cdef int n = a.shape[0]
    cdef int i, j
    cdef cnp.int8_t high
    for i in range(n - 1, 0, -1):
        high = a[0]
        for j in range(1, i):
            if a[j] > high:
                high = a[j]
        if a[i] <= high:
            a[i] += 1
            for j in range(i + 1, n):
                a[j] = 0
            return 1
    return 0


def rgs_successor(a):
    cdef cnp.int8_t[::1] view = a
    return bool(_advance(view))


def exact_sweep(double[:, :, :, ::1] M, start, int max_count):
    cdef int k_max = M.shape[0]
    cdef int n_actions = M.shape[1]
    cdef int n_obs = M.shape[2]

    rows_arr = np.empty((max_count, n_obs), dtype=np.int8)
    terms_arr = np.empty((max_count, k_max), dtype=np.float64)
    fwd_arr = np.empty(max_count, dtype=np.float64)
    cdef cnp.int8_t[:, ::1] rows = rows_arr
    cdef double[:, ::1] terms = terms_arr
    cdef double[::1] fwd = fwd_arr

    joint_arr = np.zeros((n_actions, n_obs, n_obs), dtype=np.float64)
    den_arr = np.zeros((n_obs, n_obs), dtype=np.float64)
    cdef double[:, :, ::1] joint = joint_arr
    cdef double[:, ::1] den = den_arr

    current_arr = np.array(start, dtype=np.int8)
    cdef cnp.int8_t[::1] current = current_arr

    cdef int count = 0
    cdef int k, a, x, y, s, t
    cdef double value, total, row_sum

    while count < max_count:
        for x in range(n_obs):
            rows[count, x] = current[x]
        for k in range(k_max):
            for a in range(n_actions):
                for s in range(n_obs):
                    for t in range(n_obs):
                        joint[a, s, t] = 0.0
            for a in range(n_actions):
                for x in range(n_obs):
                    s = current[x]
                    for y in range(n_obs):
                        joint[a, s, current[y]] += M[k, a, x, y]
            for s in range(n_obs):
                for t in range(n_obs):
                    value = 0.0
                    for a in range(n_actions):
                        value += joint[a, s, t]
                    den[s, t] = value
            total = 0.0
            for a in range(n_actions):
                for s in range(n_obs):
                    for t in range(n_obs):
                        value = joint[a, s, t]
                        if value > 0.0:
                            total += value * (log(den[s, t]) - log(value))
            terms[count, k] = total
            if k == 0:
                total = 0.0
                for a in range(n_actions):
                    for s in range(n_obs):
                        row_sum = 0.0
                        for t in range(n_obs):
                            row_sum += joint[a, s, t]
                        for t in range(n_obs):
                            value = joint[a, s, t]
                            if value > 0.0:
                                total += value * (log(row_sum) - log(value))
                fwd[count] = total
        count += 1
        if not _advance(current):
            break
    return rows_arr[:count], terms_arr[:count], fwd_arr[:count]


def span_sweep(
    int n_obs,
    int n_actions,
    cnp.int64_t[::1] train_x0,
    cnp.int64_t[::1] train_act,
    cnp.int64_t[:, ::1] train_xk,
    cnp.int64_t[::1] val_x0,
    cnp.int64_t[::1] val_act,
    cnp.int64_t[:, ::1] val_xk,
    double floor,
    start,
    int max_count,
):
    cdef int k_max = train_xk.shape[0]
    cdef Py_ssize_t n_train = train_x0.shape[0]
    cdef Py_ssize_t n_val = val_x0.shape[0]

    rows_arr = np.empty((max_count, n_obs), dtype=np.int8)
    terms_arr = np.empty((max_count, k_max), dtype=np.float64)
    fwd_arr = np.empty(max_count, dtype=np.float64)
    cdef cnp.int8_t[:, ::1] rows = rows_arr
    cdef double[:, ::1] terms = terms_arr
    cdef double[::1] fwd = fwd_arr

    # The denominator workspace serves both the inverse model (n_obs^2 cells)
    # and the forward model (n_obs * n_actions cells).
    num_arr = np.zeros(n_obs * n_obs * n_actions, dtype=np.int64)
    den_arr = np.zeros(n_obs * max(n_obs, n_actions), dtype=np.int64)
    s0_train_arr = np.empty(n_train, dtype=np.int64)
    s0_val_arr = np.empty(n_val, dtype=np.int64)
    cdef cnp.int64_t[::1] num = num_arr
    cdef cnp.int64_t[::1] den = den_arr
    cdef cnp.int64_t[::1] s0_train = s0_train_arr
    cdef cnp.int64_t[::1] s0_val = s0_val_arr

    current_arr = np.array(start, dtype=np.int8)
    cdef cnp.int8_t[::1] current = current_arr

    cdef int count = 0
    cdef int k, x, n_latent
    cdef Py_ssize_t i
    cdef cnp.int64_t cell, pair, numerator, denominator
    cdef double acc, prob
    cdef double uniform_action = 1.0 / n_actions

    while count < max_count:
        for x in range(n_obs):
            rows[count, x] = current[x]
        n_latent = 0
        for x in range(n_obs):
            if current[x] > n_latent:
                n_latent = current[x]
        n_latent += 1
        for i in range(n_train):
            s0_train[i] = current[train_x0[i]]
        for i in range(n_val):
            s0_val[i] = current[val_x0[i]]

        for k in range(k_max):
            for i in range(n_obs * n_obs * n_actions):
                num[i] = 0
            for i in range(n_obs * n_obs):
                den[i] = 0
            for i in range(n_train):
                cell = s0_train[i] * n_obs + current[train_xk[k, i]]
                num[cell * n_actions + train_act[i]] += 1
                den[cell] += 1
            acc = 0.0
            for i in range(n_val):
                cell = s0_val[i] * n_obs + current[val_xk[k, i]]
                denominator = den[cell]
                if denominator == 0:
                    prob = uniform_action
                else:
                    numerator = num[cell * n_actions + val_act[i]]
                    if numerator == 0:
                        prob = floor
                    else:
                        prob = (<double> numerator) / (<double> denominator)
                acc -= log(prob)
            terms[count, k] = acc / n_val

        # One-step latent forward model, keyed (latent, action) -> next latent.
        for i in range(n_obs * n_actions * n_obs):
            num[i] = 0
        for i in range(n_obs * n_actions):
            den[i] = 0
        for i in range(n_train):
            pair = s0_train[i] * n_actions + train_act[i]
            num[pair * n_obs + current[train_xk[0, i]]] += 1
            den[pair] += 1
        acc = 0.0
        for i in range(n_val):
            pair = s0_val[i] * n_actions + val_act[i]
            denominator = den[pair]
            if denominator == 0:
                prob = 1.0 / n_latent
            else:
                numerator = num[pair * n_obs + current[val_xk[0, i]]]
                if numerator == 0:
                    prob = floor
                else:
                    prob = (<double> numerator) / (<double> denominator)
            acc -= log(prob)
        fwd[count] = acc / n_val

        count += 1
        if not _advance(current):
            break
    return rows_arr[:count], terms_arr[:count], fwd_arr[:count]
