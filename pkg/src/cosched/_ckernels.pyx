# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels; same contracts as :mod:`cosched._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


cdef struct BnbCtx:
    int num_bs
    bint exhaustive
    const int64_t* masks
    const double* coefs
    const int64_t* opt_ptr
    const int64_t* opt_vars
    const double* best
    int64_t* sel
    int64_t* inc_sel
    double inc_val


cdef bint _lex_less(const int64_t* a, const int64_t* b, int n) nogil:
    # smallest variable index present in exactly one of the selections
    cdef int i, j
    cdef int64_t v, first = -1
    cdef bint in_other, first_in_b = False
    for i in range(n):
        v = a[i]
        if v < 0:
            continue
        in_other = False
        for j in range(n):
            if b[j] == v:
                in_other = True
                break
        if not in_other and (first < 0 or v < first):
            first = v
            first_in_b = False
    for i in range(n):
        v = b[i]
        if v < 0:
            continue
        in_other = False
        for j in range(n):
            if a[j] == v:
                in_other = True
                break
        if not in_other and (first < 0 or v < first):
            first = v
            first_in_b = True
    return first >= 0 and first_in_b


cdef void _dfs(BnbCtx* c, int m, double cur, int64_t muted, int64_t busy) nogil:
    cdef int k, i
    cdef int64_t v, bit
    cdef double bound
    if m == c.num_bs:
        if cur > c.inc_val or (cur == c.inc_val and _lex_less(c.sel, c.inc_sel, c.num_bs)):
            c.inc_val = cur
            for k in range(c.num_bs):
                c.inc_sel[k] = c.sel[k]
        return
    if not c.exhaustive:
        bound = cur
        for k in range(m, c.num_bs):
            if not (muted >> k) & 1:
                bound += c.best[k]
        if bound < c.inc_val:
            return
    if (muted >> m) & 1:
        _dfs(c, m + 1, cur, muted, busy)
        return
    bit = (<int64_t>1) << m
    for i in range(c.opt_ptr[m], c.opt_ptr[m + 1]):
        v = c.opt_vars[i]
        if c.masks[v] & busy:
            continue
        c.sel[m] = v
        _dfs(c, m + 1, cur + c.coefs[v], muted | c.masks[v], busy | bit)
    c.sel[m] = -1
    _dfs(c, m + 1, cur, muted, busy)


def bnb_search(var_bs, var_mask, var_coef, int num_bs, bint exhaustive=False):
    cdef cnp.ndarray[int64_t, ndim=1] vbs = np.ascontiguousarray(var_bs, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] vmask = np.ascontiguousarray(var_mask, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] vcoef = np.ascontiguousarray(var_coef, dtype=np.float64)
    cdef Py_ssize_t nv = vbs.shape[0]
    # options per BS: descending coefficient, then ascending variable index
    order = np.lexsort((np.arange(nv), -vcoef, vbs)).astype(np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] opt_vars = np.ascontiguousarray(order)
    cdef cnp.ndarray[int64_t, ndim=1] opt_ptr = np.zeros(num_bs + 1, dtype=np.int64)
    opt_ptr[1:] = np.cumsum(np.bincount(vbs, minlength=num_bs)[:num_bs])
    cdef cnp.ndarray[double, ndim=1] best = np.zeros(num_bs)
    cdef Py_ssize_t i
    for i in range(nv):
        if vcoef[i] > best[vbs[i]]:
            best[vbs[i]] = vcoef[i]
    cdef cnp.ndarray[int64_t, ndim=1] sel = np.full(num_bs, -1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] inc_sel = np.full(num_bs, -1, dtype=np.int64)
    cdef BnbCtx c
    c.num_bs = num_bs
    c.exhaustive = exhaustive
    c.masks = <const int64_t*>vmask.data
    c.coefs = <const double*>vcoef.data
    c.opt_ptr = <const int64_t*>opt_ptr.data
    c.opt_vars = <const int64_t*>opt_vars.data
    c.best = <const double*>best.data
    c.sel = <int64_t*>sel.data
    c.inc_sel = <int64_t*>inc_sel.data
    c.inc_val = -1.0
    with nogil:
        _dfs(&c, 0, 0.0, 0, 0)
    return inc_sel, c.inc_val


cdef double _column_value(int64_t alpha, const double[:, ::1] rates, const double[::1] avg,
                          const int64_t[:, ::1] members, const int64_t[:, ::1] lut,
                          const int64_t[::1] bs_ptr, const int64_t[::1] bs_ues,
                          int num_bs) nogil:
    cdef double total = 0.0, bestm, met
    cdef int m, b, mp = members.shape[1]
    cdef int64_t i, n, k
    for m in range(num_bs):
        if (alpha >> m) & 1:
            continue
        bestm = 0.0
        for i in range(bs_ptr[m], bs_ptr[m + 1]):
            n = bs_ues[i]
            k = 0
            for b in range(mp):
                if (alpha >> members[n, b]) & 1:
                    k |= (<int64_t>1) << b
            met = rates[n, lut[n, k]] / avg[n]
            if met > bestm:
                bestm = met
        total += bestm
    return total


def column_value(int64_t alpha, rates, avg, members, lut, bs_ptr, bs_ues, int num_bs):
    return _column_value(alpha, np.ascontiguousarray(rates, dtype=np.float64),
                         np.ascontiguousarray(avg, dtype=np.float64),
                         np.ascontiguousarray(members, dtype=np.int64),
                         np.ascontiguousarray(lut, dtype=np.int64),
                         np.ascontiguousarray(bs_ptr, dtype=np.int64),
                         np.ascontiguousarray(bs_ues, dtype=np.int64), num_bs)


def greedy_search(rates, avg, members, lut, bs_ptr, bs_ues, int num_bs, cand_masks):
    cdef const double[:, ::1] r = np.ascontiguousarray(rates, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(avg, dtype=np.float64)
    cdef const int64_t[:, ::1] mem = np.ascontiguousarray(members, dtype=np.int64)
    cdef const int64_t[:, ::1] lt = np.ascontiguousarray(lut, dtype=np.int64)
    cdef const int64_t[::1] bp = np.ascontiguousarray(bs_ptr, dtype=np.int64)
    cdef const int64_t[::1] bu = np.ascontiguousarray(bs_ues, dtype=np.int64)
    cdef const int64_t[::1] cand = np.ascontiguousarray(cand_masks, dtype=np.int64)
    cdef int64_t muted = 0, trial, best_trial
    cdef double cur, best_val, v
    cdef Py_ssize_t i
    trace_masks = []
    cur = _column_value(0, r, a, mem, lt, bp, bu, num_bs)
    trace_values = [cur]
    while True:
        best_val = cur
        best_trial = -1
        with nogil:
            for i in range(cand.shape[0]):
                trial = muted | cand[i]
                if trial == muted:
                    continue
                v = _column_value(trial, r, a, mem, lt, bp, bu, num_bs)
                if v > best_val:
                    best_val = v
                    best_trial = trial
        if best_trial < 0:
            break
        muted = best_trial
        cur = best_val
        trace_masks.append(muted)
        trace_values.append(cur)
    return muted, np.array(trace_masks, dtype=np.int64), np.array(trace_values)
