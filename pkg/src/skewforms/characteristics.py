"""First-order PDE machinery: characteristic strips and their diagnostics.

From F(x, u, p) = 0 the characteristic system is

    dx^i/ds = dF/dp_i
    dp_i/ds = -(dF/dx^i + p_i dF/du)
    du/ds   = sum_i p_i dF/dp_i

(the strip equation for u is the standard completion; the proportionality
between dx and dp fixes the parametrization).  Problems already solved for a
time derivative use the canonical system dx/dt = dE/dp, dp/dt = -dE/dx with
du/dt = sum p dE/dp - E.  Integration is fixed-step classical RK4 through the
numeric kernels; degeneracy (envelope) detection estimates the flow-map
Jacobian from neighboring trajectories and brackets its sign changes.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as kernels
from .expr import (
    Expr,
    ExprError,
    MINUS_ONE,
    ZERO,
    add,
    differentiate,
    free_symbols,
    mul,
    sym,
)


class CharacteristicsError(ExprError):
    pass


@dataclass(frozen=True)
class FirstOrderPDE:
    """F(x, u, p) = 0 with p_i standing for du/dx^i."""

    space: tuple
    unknown: str
    momenta: tuple
    relation: Expr  # F

    def __post_init__(self):
        object.__setattr__(self, "space", tuple(self.space))
        object.__setattr__(self, "momenta", tuple(self.momenta))
        if len(self.space) != len(self.momenta):
            raise CharacteristicsError("one momentum symbol per space variable")
        if not (free_symbols(self.relation) & set(self.momenta)):
            raise CharacteristicsError("the relation must mention at least one momentum")


@dataclass(frozen=True)
class HamiltonJacobiProblem:
    """du/dt + E(t, x, p) = 0 with p_j = du/dx^j; E independent of u."""

    time: str
    space: tuple
    momenta: tuple
    hamiltonian: Expr  # E
    unknown: str = "u"

    def __post_init__(self):
        object.__setattr__(self, "space", tuple(self.space))
        object.__setattr__(self, "momenta", tuple(self.momenta))
        if len(self.space) != len(self.momenta):
            raise CharacteristicsError("one momentum symbol per space variable")
        if self.unknown in free_symbols(self.hamiltonian):
            raise CharacteristicsError("the Hamiltonian must not depend on the unknown")


@dataclass(frozen=True)
class ODESystem:
    """Symbolic right-hand sides over an ordered state vector."""

    param: str
    states: tuple
    rhs: Mapping[str, Expr]
    diagnostic: Expr | None = None
    diagnostic_name: str = ""

    def rhs_list(self) -> list:
        return [self.rhs[name] for name in self.states]


def characteristic_system(pde: FirstOrderPDE) -> ODESystem:
    """ODEs whose solutions are the strips on which the relation closes."""
    F = pde.relation
    rhs: dict = {}
    du_terms = []
    Fu = differentiate(F, pde.unknown)
    for x, p in zip(pde.space, pde.momenta):
        Fp = differentiate(F, p)
        rhs[x] = Fp
        rhs[p] = mul(MINUS_ONE, add(differentiate(F, x), mul(sym(p), Fu)))
        du_terms.append(mul(sym(p), Fp))
    rhs[pde.unknown] = add(*du_terms)
    return ODESystem(
        param="s",
        states=pde.space + pde.momenta + (pde.unknown,),
        rhs=rhs,
        diagnostic=F,
        diagnostic_name="relation_residual",
    )


def canonical_system(hj: HamiltonJacobiProblem) -> ODESystem:
    """Canonical equations in the time variable, with the action integrand."""
    E = hj.hamiltonian
    rhs: dict = {}
    du_terms = []
    for x, p in zip(hj.space, hj.momenta):
        Ep = differentiate(E, p)
        rhs[x] = Ep
        rhs[p] = mul(MINUS_ONE, differentiate(E, x))
        du_terms.append(mul(sym(p), Ep))
    rhs[hj.unknown] = add(*du_terms, mul(MINUS_ONE, E))
    return ODESystem(
        param=hj.time,
        states=hj.space + hj.momenta + (hj.unknown,),
        rhs=rhs,
        diagnostic=E,
        diagnostic_name="energy",
    )


@dataclass(frozen=True)
class Trajectory:
    """Sampled strip: uniform grid, state rows, optional per-step diagnostic."""

    param: str
    times: np.ndarray
    states: tuple
    values: np.ndarray  # shape (len(times), len(states))
    diagnostic: np.ndarray | None
    diagnostic_name: str
    complete: bool

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise CharacteristicsError("grid and state arrays disagree in length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise CharacteristicsError("the time grid must be strictly increasing")

    def series(self, name: str) -> np.ndarray:
        return self.values[:, self.states.index(name)]

    def initial(self) -> dict:
        return {n: float(self.values[0, j]) for j, n in enumerate(self.states)}

    def final(self) -> dict:
        return {n: float(self.values[-1, j]) for j, n in enumerate(self.states)}


def integrate(
    system: ODESystem,
    initial_states: Sequence[Mapping[str, float]],
    dt: float,
    steps: int,
    t0: float = 0.0,
    jobs: int = 1,
) -> list:
    """Fixed-step RK4 for a fan of initial conditions.

    Deterministic: results are ordered like the inputs regardless of ``jobs``.
    A math-domain failure flags that trajectory as partial instead of raising.
    """
    if dt <= 0:
        raise CharacteristicsError("dt must be positive")
    if steps < 1:
        raise CharacteristicsError("steps must be at least 1")
    var_order = (system.param,) + system.states
    programs = [kernels.compile_program(system.rhs[name], var_order) for name in system.states]
    pack = kernels.pack_programs(programs)
    diag_prog = (
        kernels.compile_program(system.diagnostic, var_order)
        if system.diagnostic is not None
        else None
    )

    def run(init: Mapping[str, float]) -> Trajectory:
        missing = [n for n in system.states if n not in init]
        if missing:
            raise CharacteristicsError(f"initial state missing {', '.join(missing)}")
        y0 = np.array([float(init[n]) for n in system.states], dtype=np.float64)
        samples, nvalid = kernels.rk4(pack, y0, t0, dt, steps)
        times = t0 + dt * np.arange(nvalid)
        diag = None
        if diag_prog is not None:
            pts = np.column_stack([times, samples])
            diag = kernels.eval_many(diag_prog, pts)
        return Trajectory(
            param=system.param,
            times=times,
            states=system.states,
            values=samples,
            diagnostic=diag,
            diagnostic_name=system.diagnostic_name,
            complete=nvalid == steps + 1,
        )

    inits = list(initial_states)
    if jobs > 1 and len(inits) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, inits))
    return [run(init) for init in inits]


@dataclass(frozen=True)
class ClosureReport:
    """Midpoint-rule check of du = sum p_i dx^i along a sampled strip."""

    max_residual: float
    argmax_step: int

    def within(self, tol: float) -> bool:
        return self.max_residual <= tol


def closure_along(
    traj: Trajectory,
    space: Sequence[str],
    momenta: Sequence[str],
    unknown: str = "u",
    time_momentum: np.ndarray | None = None,
) -> ClosureReport:
    """Residuals of du = sum p_i dx^i over the sampled strip.

    For canonical systems the integrated unknown is the action, whose
    differential closes against the extended coordinate list with the time
    slot carrying minus the energy; pass those per-step values as
    ``time_momentum`` to include the dt term.
    """
    du = np.diff(traj.series(unknown))
    acc = np.zeros_like(du)
    for x, p in zip(space, momenta):
        xs = traj.series(x)
        ps = traj.series(p)
        acc += (ps[1:] + ps[:-1]) / 2.0 * np.diff(xs)
    if time_momentum is not None:
        pt = np.asarray(time_momentum, dtype=np.float64)
        acc += (pt[1:] + pt[:-1]) / 2.0 * np.diff(traj.times)
    residual = np.abs(du - acc)
    if residual.size == 0:
        return ClosureReport(0.0, 0)
    k = int(np.argmax(residual))
    return ClosureReport(float(residual[k]), k)


@dataclass(frozen=True)
class DegeneracyEvent:
    """Sign change of the flow-map Jacobian estimate between two grid times."""

    time: float  # midpoint of the bracketing interval
    bracket: tuple  # (t_lo, t_hi)
    pair: tuple  # neighboring trajectory indices
    jacobians: tuple  # values bracketing zero (opposite signs)

    def __post_init__(self):
        lo, hi = self.jacobians
        if not (lo * hi < 0):
            raise CharacteristicsError("bracketing Jacobian values must have opposite signs")


def detect_degeneracy(
    fan: Sequence[Trajectory], coordinate: str | None = None
) -> list:
    """Bracket zeros of d(coordinate)/d(initial value) along a 1-parameter fan.

    Neighboring trajectories estimate the Jacobian by first-order differences;
    an exact zero sample is reported with the surrounding grid points as the
    bracket.  Fewer than two trajectories yield an empty result with a warning.
    """
    fan = list(fan)
    if len(fan) < 2:
        warnings.warn("degeneracy detection needs at least two trajectories", stacklevel=2)
        return []
    coordinate = coordinate or fan[0].states[0]
    nsteps = min(len(t.times) for t in fan)
    base = fan[0].times[:nsteps]
    for t in fan[1:]:
        if not np.array_equal(t.times[:nsteps], base):
            raise CharacteristicsError("fan trajectories must share the time grid")
    events: list = []
    for i in range(len(fan) - 1):
        xa = fan[i].series(coordinate)[:nsteps]
        xb = fan[i + 1].series(coordinate)[:nsteps]
        dx0 = xb[0] - xa[0]
        if dx0 == 0:
            raise CharacteristicsError("fan initial conditions must be distinct")
        J = (xb - xa) / dx0
        k = 1
        while k < nsteps:
            if J[k] == 0.0:
                lo = max(k - 1, 0)
                hi = min(k + 1, nsteps - 1)
                if J[lo] * J[hi] < 0:
                    events.append(
                        DegeneracyEvent(
                            time=float((base[lo] + base[hi]) / 2),
                            bracket=(float(base[lo]), float(base[hi])),
                            pair=(i, i + 1),
                            jacobians=(float(J[lo]), float(J[hi])),
                        )
                    )
                    k = hi + 1
                    continue
                k += 1
                continue
            if J[k - 1] != 0.0 and J[k - 1] * J[k] < 0:
                events.append(
                    DegeneracyEvent(
                        time=float((base[k - 1] + base[k]) / 2),
                        bracket=(float(base[k - 1]), float(base[k])),
                        pair=(i, i + 1),
                        jacobians=(float(J[k - 1]), float(J[k])),
                    )
                )
            k += 1
    return events
