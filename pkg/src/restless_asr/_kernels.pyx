# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode loops.

Each function mirrors the corresponding pure-Python state machine operation
for operation (same float expression order, same tie-breaking) so both
backends produce bit-identical trajectories from the same sample paths.
"""
import numpy as np

from libc.math cimport log, sqrt, INFINITY

ctypedef long long i64


def advance_paths(const double[:, :, ::1] cum, const double[:, ::1] u,
                  int[::1] state, int[:, ::1] out, Py_ssize_t t0):
    """Advance every arm one step per row of ``u``; write states to
    ``out[:, t0:t0 + len(u)]`` and leave the last states in ``state``."""
    cdef Py_ssize_t n_rows = u.shape[0], n_arms = u.shape[1]
    cdef Py_ssize_t r, i
    cdef int s, j
    cdef double x
    with nogil:
        for r in range(n_rows):
            for i in range(n_arms):
                s = state[i]
                x = u[r, i]
                j = 0
                while x >= cum[i, s, j]:
                    j += 1
                state[i] = j
                out[i, t0 + r] = j


cdef inline int _observe(const int[:, ::1] path, i64[::1] plays, int arm,
                         Py_ssize_t t, bint rested) noexcept nogil:
    cdef int s
    if rested:
        s = path[arm, plays[arm]]
    else:
        s = path[arm, t]
    plays[arm] += 1
    return s


cdef inline i64 _pow4(i64 k) noexcept nogil:
    return (<i64>1) << (2 * k)


def asr_episode(const int[:, ::1] path, const double[:, ::1] rewards,
                Py_ssize_t horizon, bint rested, bint practical,
                double big_l, double epsilon, double delta, double big_i,
                int tie_break, int[::1] actions, int[::1] states):
    cdef Py_ssize_t n = path.shape[0]
    cdef i64[::1] v_count = np.zeros(n, dtype=np.int64)
    cdef i64[::1] w_count = np.zeros(n, dtype=np.int64)
    cdef i64[::1] n_explore = np.zeros(n, dtype=np.int64)
    cdef i64[::1] plays = np.zeros(n, dtype=np.int64)
    cdef double[::1] v_sum = np.zeros(n, dtype=np.float64)
    cdef double[::1] vw_sum = np.zeros(n, dtype=np.float64)
    cdef double[::1] s_tilde = np.zeros(n, dtype=np.float64)
    cdef int[::1] gamma = np.full(n, -1, dtype=np.intc)
    cdef Py_ssize_t t = 0, i, j
    cdef int arm, s, explore_arm
    cdef i64 remaining, n_exploit = 0
    cdef double r, log_t, rate, best, other, g, floor_rate, m, best_mean, score, best_score
    floor_rate = 0.0 if practical else 2.0 / big_i
    with nogil:
        # initialisation: exploration epoch 0, one SB2 slot per arm
        i = 0
        while i < n and t < horizon:
            s = _observe(path, plays, <int>i, t, rested)
            r = rewards[i, s]
            v_count[i] += 1
            v_sum[i] += r
            vw_sum[i] += r
            gamma[i] = s
            n_explore[i] = 1
            actions[t] = <int>i
            states[t] = s
            t += 1
            i += 1
        while t < horizon:
            log_t = log(<double>(t + 1))
            explore_arm = -1
            if log_t != 0.0:
                for i in range(n):
                    s_tilde[i] = v_sum[i] / v_count[i]
                for i in range(n):
                    if practical:
                        other = -INFINITY
                        for j in range(n):
                            if j != i and s_tilde[j] > other:
                                other = s_tilde[j]
                        if other >= s_tilde[i]:
                            g = other - s_tilde[i]
                        else:
                            g = s_tilde[i] - other
                        if g == 0.0:
                            rate = INFINITY
                        else:
                            rate = 4.0 * big_l / (g * g)
                    else:
                        best = s_tilde[0]
                        for j in range(n):
                            if s_tilde[j] > best:
                                best = s_tilde[j]
                        g = best - s_tilde[i]
                        if g * g - epsilon > delta:
                            rate = 4.0 * big_l / (g * g - epsilon)
                        else:
                            rate = 4.0 * big_l / delta
                    if floor_rate > rate:
                        rate = floor_rate
                    if <double>v_count[i] <= rate * log_t:
                        if tie_break == 0:
                            explore_arm = <int>i
                            break
                        if tie_break == 1:
                            score = <double>v_count[i]
                        else:
                            score = <double>v_count[i] / (rate * log_t)
                        if explore_arm < 0 or score < best_score:
                            explore_arm = <int>i
                            best_score = score
            if explore_arm >= 0:
                arm = explore_arm
                # SB1: play until the stored state recurs (at least one draw)
                while t < horizon:
                    s = _observe(path, plays, arm, t, rested)
                    actions[t] = arm
                    states[t] = s
                    t += 1
                    if s == gamma[arm]:
                        break
                else:
                    break
                remaining = _pow4(n_explore[arm])
                while t < horizon and remaining > 0:
                    s = _observe(path, plays, arm, t, rested)
                    r = rewards[arm, s]
                    v_count[arm] += 1
                    v_sum[arm] += r
                    vw_sum[arm] += r
                    actions[t] = arm
                    states[t] = s
                    t += 1
                    remaining -= 1
                if remaining == 0:
                    gamma[arm] = s
                    n_explore[arm] += 1
            else:
                n_exploit += 1
                arm = 0
                best_mean = -INFINITY
                for i in range(n):
                    m = vw_sum[i] / (v_count[i] + w_count[i])
                    if m > best_mean:
                        arm = <int>i
                        best_mean = m
                remaining = 2 * _pow4(n_exploit - 1)
                while t < horizon and remaining > 0:
                    s = _observe(path, plays, arm, t, rested)
                    w_count[arm] += 1
                    vw_sum[arm] += rewards[arm, s]
                    actions[t] = arm
                    states[t] = s
                    t += 1
                    remaining -= 1


def dsee_episode(const int[:, ::1] path, const double[:, ::1] rewards,
                 Py_ssize_t horizon, bint rested, double rate,
                 int[::1] actions, int[::1] states):
    cdef Py_ssize_t n = path.shape[0]
    cdef i64[::1] counts = np.zeros(n, dtype=np.int64)
    cdef i64[::1] plays = np.zeros(n, dtype=np.int64)
    cdef double[::1] sums = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t t = 0, i
    cdef int arm, s
    cdef i64 explored = 0, n_explore = 0, n_exploit = 0, block, remaining
    cdef double m, best_mean
    with nogil:
        while t < horizon:
            if explored <= rate * n * log(<double>(t + 1)):
                block = _pow4(n_explore)
                for i in range(n):
                    remaining = block
                    while t < horizon and remaining > 0:
                        s = _observe(path, plays, <int>i, t, rested)
                        counts[i] += 1
                        sums[i] += rewards[i, s]
                        explored += 1
                        actions[t] = <int>i
                        states[t] = s
                        t += 1
                        remaining -= 1
                n_explore += 1
            else:
                n_exploit += 1
                arm = 0
                best_mean = -INFINITY
                for i in range(n):
                    m = sums[i] / counts[i]
                    if m > best_mean:
                        arm = <int>i
                        best_mean = m
                remaining = 2 * _pow4(n_exploit - 1)
                while t < horizon and remaining > 0:
                    s = _observe(path, plays, arm, t, rested)
                    actions[t] = arm
                    states[t] = s
                    t += 1
                    remaining -= 1


def rca_episode(const int[:, ::1] path, const double[:, ::1] rewards,
                Py_ssize_t horizon, bint rested, double big_l,
                int[::1] actions, int[::1] states):
    cdef Py_ssize_t n = path.shape[0]
    cdef i64[::1] counts = np.zeros(n, dtype=np.int64)
    cdef i64[::1] plays = np.zeros(n, dtype=np.int64)
    cdef double[::1] sums = np.zeros(n, dtype=np.float64)
    cdef int[::1] anchor = np.full(n, -1, dtype=np.intc)
    cdef Py_ssize_t t = 0, i
    cdef int arm, s
    cdef i64 cyc_count
    cdef double cyc_sum, v, best_idx, log_t
    with nogil:
        while t < horizon:
            log_t = log(<double>(t + 1))
            arm = 0
            best_idx = -INFINITY
            for i in range(n):
                if counts[i] == 0:
                    v = INFINITY
                else:
                    v = sums[i] / counts[i] + sqrt(big_l * log_t / counts[i])
                if v > best_idx:
                    arm = <int>i
                    best_idx = v
            # SB1
            while t < horizon:
                s = _observe(path, plays, arm, t, rested)
                actions[t] = arm
                states[t] = s
                t += 1
                if anchor[arm] < 0:
                    anchor[arm] = s
                if s == anchor[arm]:
                    break
            else:
                break
            cyc_count = 1
            cyc_sum = rewards[arm, s]
            while t < horizon:
                s = _observe(path, plays, arm, t, rested)
                actions[t] = arm
                states[t] = s
                t += 1
                if s == anchor[arm]:
                    counts[arm] += cyc_count
                    sums[arm] += cyc_sum
                    break
                cyc_count += 1
                cyc_sum += rewards[arm, s]
