# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the pure-Python kernels (same programs, same semantics)."""

from libc.math cimport cos, exp, isfinite, log, pow, sin

import numpy as np


cdef inline double _run(const int[::1] ops, const long long[::1] iops,
                        const double[::1] consts, const double[::1] values,
                        double[::1] stack, Py_ssize_t lo, Py_ssize_t hi,
                        Py_ssize_t const_lo) noexcept:
    cdef Py_ssize_t i, sp = 0
    cdef int op
    cdef long long a
    for i in range(lo, hi):
        op = ops[i]
        a = iops[i]
        if op == 0:  # CONST
            stack[sp] = consts[const_lo + a]
            sp += 1
        elif op == 1:  # LOAD
            stack[sp] = values[a]
            sp += 1
        elif op == 2:  # ADD
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == 3:  # MUL
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == 4:  # POWI
            stack[sp - 1] = pow(stack[sp - 1], <double> a)
        elif op == 5:
            stack[sp - 1] = log(stack[sp - 1])
        elif op == 6:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == 7:
            stack[sp - 1] = sin(stack[sp - 1])
        else:
            stack[sp - 1] = cos(stack[sp - 1])
    return stack[0]


def eval_one(prog, values):
    cdef const int[::1] ops = prog.ops
    cdef const long long[::1] iops = prog.iops
    cdef const double[::1] consts = prog.consts
    cdef double[::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] stack = np.empty(prog.stack_need, dtype=np.float64)
    return _run(ops, iops, consts, vals, stack, 0, ops.shape[0], 0)


def eval_many(prog, points):
    cdef const int[::1] ops = prog.ops
    cdef const long long[::1] iops = prog.iops
    cdef const double[::1] consts = prog.consts
    pts_arr = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] pts = pts_arr
    out_arr = np.empty(pts.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] stack = np.empty(prog.stack_need, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(pts.shape[0]):
        out[i] = _run(ops, iops, consts, pts[i], stack, 0, ops.shape[0], 0)
    return out_arr


def rk4(pack, y0, double t0, double dt, Py_ssize_t steps):
    cdef const int[::1] ops = pack.ops
    cdef const long long[::1] iops = pack.iops
    cdef const double[::1] consts = pack.consts
    cdef const long long[::1] op_off = pack.op_off
    cdef const long long[::1] const_off = pack.const_off
    cdef Py_ssize_t m = op_off.shape[0] - 1
    y_arr = np.ascontiguousarray(y0, dtype=np.float64).copy()
    if y_arr.shape != (m,):
        raise ValueError("initial state length does not match the system")
    out_arr = np.empty((steps + 1, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] y = y_arr
    cdef double[::1] stack = np.empty(pack.stack_need, dtype=np.float64)
    cdef double[::1] v = np.empty(m + 1, dtype=np.float64)
    cdef double[:, ::1] k = np.empty((4, m), dtype=np.float64)
    cdef Py_ssize_t step, j
    cdef double t
    cdef bint ok
    for j in range(m):
        out[0, j] = y[j]
    for step in range(steps):
        t = t0 + step * dt
        v[0] = t
        for j in range(m):
            v[j + 1] = y[j]
        for j in range(m):
            k[0, j] = _run(ops, iops, consts, v, stack, op_off[j], op_off[j + 1], const_off[j])
        v[0] = t + dt / 2
        for j in range(m):
            v[j + 1] = y[j] + (dt / 2) * k[0, j]
        for j in range(m):
            k[1, j] = _run(ops, iops, consts, v, stack, op_off[j], op_off[j + 1], const_off[j])
        for j in range(m):
            v[j + 1] = y[j] + (dt / 2) * k[1, j]
        for j in range(m):
            k[2, j] = _run(ops, iops, consts, v, stack, op_off[j], op_off[j + 1], const_off[j])
        v[0] = t + dt
        for j in range(m):
            v[j + 1] = y[j] + dt * k[2, j]
        for j in range(m):
            k[3, j] = _run(ops, iops, consts, v, stack, op_off[j], op_off[j + 1], const_off[j])
        ok = True
        for j in range(m):
            y[j] = y[j] + (dt / 6) * (k[0, j] + 2 * k[1, j] + 2 * k[2, j] + k[3, j])
            if not isfinite(y[j]):
                ok = False
        if not ok:
            return out_arr[: step + 1], step + 1
        for j in range(m):
            out[step + 1, j] = y[j]
    return out_arr, steps + 1
