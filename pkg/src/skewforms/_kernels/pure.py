"""Pure-Python reference kernels: stack-program evaluation and RK4.

Expressions are compiled once to a flat postfix program; evaluation then
avoids tree walks.  The compiled twin in ``_speedups.pyx`` runs the same
programs; backend selection happens in the package ``__init__``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import expr as ex

OP_CONST = 0
OP_LOAD = 1
OP_ADD = 2
OP_MUL = 3
OP_POWI = 4
OP_LN = 5
OP_EXP = 6
OP_SIN = 7
OP_COS = 8

_FN_OPS = {"ln": OP_LN, "exp": OP_EXP, "sin": OP_SIN, "cos": OP_COS}


class KernelUnsupportedError(ex.ExprError):
    """The expression cannot be compiled (e.g. opaque symbols)."""


@dataclass
class Program:
    ops: np.ndarray  # int32 opcodes
    iops: np.ndarray  # int64 operand per op (const index / var index / exponent)
    consts: np.ndarray  # float64 pool
    stack_need: int
    nvars: int


def compile_program(e: ex.Expr, var_order: Sequence[str]) -> Program:
    """Flatten an expression into a postfix program over ``var_order``."""
    index = {name: i for i, name in enumerate(var_order)}
    ops: list[int] = []
    iops: list[int] = []
    consts: list[float] = []

    def emit(node: ex.Expr) -> int:
        if isinstance(node, ex.Num):
            ops.append(OP_CONST)
            iops.append(len(consts))
            consts.append(float(node.value))
            return 1
        if isinstance(node, ex.Sym):
            try:
                k = index[node.name]
            except KeyError:
                raise KernelUnsupportedError(f"unbound symbol {node.name!r}") from None
            ops.append(OP_LOAD)
            iops.append(k)
            return 1
        if isinstance(node, ex.Add) or isinstance(node, ex.Mul):
            parts = node.terms if isinstance(node, ex.Add) else node.factors
            op = OP_ADD if isinstance(node, ex.Add) else OP_MUL
            depth = emit(parts[0])
            for p in parts[1:]:
                depth = max(depth, 1 + emit(p))
                ops.append(op)
                iops.append(0)
            return depth
        if isinstance(node, ex.Pow):
            depth = emit(node.base)
            ops.append(OP_POWI)
            iops.append(node.exp)
            return depth
        if isinstance(node, ex.Fn):
            depth = emit(node.arg)
            ops.append(_FN_OPS[node.name])
            iops.append(0)
            return depth
        raise KernelUnsupportedError("opaque symbols cannot be compiled to a kernel program")

    depth = emit(e)
    return Program(
        ops=np.asarray(ops, dtype=np.int32),
        iops=np.asarray(iops, dtype=np.int64),
        consts=np.asarray(consts, dtype=np.float64),
        stack_need=max(depth, 1),
        nvars=len(var_order),
    )


@dataclass
class SystemPack:
    """A batch of programs sharing one variable order, packed for the RK4 loop."""

    programs: list
    ops: np.ndarray
    iops: np.ndarray
    consts: np.ndarray
    op_off: np.ndarray  # int64, len m+1
    const_off: np.ndarray  # int64, len m+1
    stack_need: int
    nvars: int


def pack_programs(programs: Sequence[Program]) -> SystemPack:
    progs = list(programs)
    op_off = np.zeros(len(progs) + 1, dtype=np.int64)
    const_off = np.zeros(len(progs) + 1, dtype=np.int64)
    for i, p in enumerate(progs):
        op_off[i + 1] = op_off[i] + len(p.ops)
        const_off[i + 1] = const_off[i] + len(p.consts)
    return SystemPack(
        programs=progs,
        ops=np.concatenate([p.ops for p in progs]) if progs else np.zeros(0, np.int32),
        iops=np.concatenate([p.iops for p in progs]) if progs else np.zeros(0, np.int64),
        consts=np.concatenate([p.consts for p in progs]) if progs else np.zeros(0, np.float64),
        op_off=op_off,
        const_off=const_off,
        stack_need=max((p.stack_need for p in progs), default=1),
        nvars=progs[0].nvars if progs else 0,
    )


def _run(prog: Program, values, stack) -> float:
    sp = 0
    consts = prog.consts
    for op, a in zip(prog.ops, prog.iops):
        if op == OP_CONST:
            stack[sp] = consts[a]
            sp += 1
        elif op == OP_LOAD:
            stack[sp] = values[a]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] += stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] *= stack[sp]
        elif op == OP_POWI:
            stack[sp - 1] = stack[sp - 1] ** int(a)
        elif op == OP_LN:
            stack[sp - 1] = math.log(stack[sp - 1])
        elif op == OP_EXP:
            stack[sp - 1] = math.exp(stack[sp - 1])
        elif op == OP_SIN:
            stack[sp - 1] = math.sin(stack[sp - 1])
        else:
            stack[sp - 1] = math.cos(stack[sp - 1])
    return stack[0]


def eval_one(prog: Program, values) -> float:
    return _run(prog, values, [0.0] * prog.stack_need)


def eval_many(prog: Program, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    out = np.empty(pts.shape[0], dtype=np.float64)
    stack = [0.0] * prog.stack_need
    for i in range(pts.shape[0]):
        out[i] = _run(prog, pts[i], stack)
    return out


def rk4(pack: SystemPack, y0, t0: float, dt: float, steps: int):
    """Classic fixed-step RK4 over the packed system.

    State vector ``y`` follows ``pack.programs``; each program reads
    ``[t, *y]``.  Returns ``(samples, nvalid)`` where samples has shape
    ``(steps + 1, m)``; a math-domain failure or non-finite state truncates
    the trajectory (``nvalid < steps + 1``).
    """
    progs = pack.programs
    m = len(progs)
    y = np.asarray(y0, dtype=np.float64).copy()
    if y.shape != (m,):
        raise ValueError("initial state length does not match the system")
    out = np.empty((steps + 1, m), dtype=np.float64)
    out[0] = y
    stack = [0.0] * pack.stack_need
    v = np.empty(m + 1, dtype=np.float64)
    k = np.empty((4, m), dtype=np.float64)
    for step in range(steps):
        t = t0 + step * dt
        try:
            v[0] = t
            v[1:] = y
            for j in range(m):
                k[0, j] = _run(progs[j], v, stack)
            v[0] = t + dt / 2
            v[1:] = y + (dt / 2) * k[0]
            for j in range(m):
                k[1, j] = _run(progs[j], v, stack)
            v[1:] = y + (dt / 2) * k[1]
            for j in range(m):
                k[2, j] = _run(progs[j], v, stack)
            v[0] = t + dt
            v[1:] = y + dt * k[2]
            for j in range(m):
                k[3, j] = _run(progs[j], v, stack)
        except (ValueError, ZeroDivisionError, OverflowError):
            return out[: step + 1], step + 1
        y = y + (dt / 6) * (k[0] + 2 * k[1] + 2 * k[2] + k[3])
        if not np.all(np.isfinite(y)):
            return out[: step + 1], step + 1
        out[step + 1] = y
    return out, steps + 1
