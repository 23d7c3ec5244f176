"""Dormand-Prince 5(4) integration of psi'' = (V - E) psi for many E at once.

Two fundamental solutions are carried per energy: c with (c, c') = (1, 0)
and s with (s, s') = (0, 1) at x = 0.  The state array has shape
(2, 2, n): [value/derivative][c/s][energy].

An adaptive run records its accepted steps as a StepPlan; later batches
at energies not above the plan's ceiling replay those steps with the
potential already tabulated at every stage point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PotentialParams, potential_value

__all__ = ["IntegratorError", "StepPlan", "PropagationResult", "adaptive", "make_plan", "propagate"]

RTOL = 1e-10
ATOL = 1e-12

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_E = [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]


class IntegratorError(RuntimeError):
    def __init__(self, message, energy=None, m=None):
        super().__init__(f"{message} (E={energy}, m={m})")
        self.energy = energy
        self.m = m


def _rhs(y, q):
    out = np.empty_like(y)
    out[0] = y[1]
    np.multiply(q, y[0], out=out[1])
    return out


def _stages(y, h, qs, first=None):
    """Dormand-Prince stages for one step; qs holds V - E at the 6 stage nodes (7th is x + h)."""
    k = [first if first is not None else _rhs(y, qs[0])]
    for i in range(1, 6):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a)
        k.append(_rhs(yi, qs[i]))
    y5 = y + h * sum(b * kj for b, kj in zip(_B, k) if b)
    return k, y5


@dataclass
class PropagationResult:
    """Final state at x_end plus zero counts of c and s on (0, x_end]."""

    energies: np.ndarray
    state: np.ndarray
    zeros: np.ndarray  # shape (2, n): zero counts of c and s
    xs: np.ndarray | None = None
    path: np.ndarray | None = None  # shape (steps+1, 2, 2, n) when recorded

    @property
    def c(self):
        return self.state[0, 0]

    @property
    def cp(self):
        return self.state[1, 0]

    @property
    def s(self):
        return self.state[0, 1]

    @property
    def sp(self):
        return self.state[1, 1]


@dataclass
class StepPlan:
    params: PotentialParams
    x_end: float
    e_max: float
    nodes: np.ndarray  # step starts, length steps + 1
    stage_v: np.ndarray  # shape (steps, 7): V at x_i + c_j h_i and at x_i + h_i

    @property
    def steps(self) -> int:
        return len(self.nodes) - 1


def _initial_state(n):
    y = np.zeros((2, 2, n))
    y[0, 0] = 1.0
    y[1, 1] = 1.0
    return y


def adaptive(energies, params: PotentialParams, x_end: float, rtol=RTOL, atol=ATOL, record=False, max_steps=200_000):
    """Adaptive integration from 0 to x_end; returns (PropagationResult, step nodes)."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    n = energies.size
    y = _initial_state(n)
    zeros = np.zeros((2, n), dtype=np.int64)
    last_sign = np.ones((2, n))
    x = 0.0
    h = min(0.05, 0.2 / np.sqrt(1.0 + np.max(np.abs(energies))), x_end)
    nodes = [0.0]
    path = [y.copy()] if record else None
    q0 = potential_value(0.0, params) - energies
    k1 = _rhs(y, q0)
    steps = 0
    while x < x_end:
        if x + h >= x_end or x + 1.01 * h >= x_end:
            h = x_end - x
        xs = x + _C * h
        vs = potential_value(np.append(xs, x + h), params)
        qs = vs[:, None] - energies[None, :]
        k, y5 = _stages(y, h, qs, first=k1)
        k7 = _rhs(y5, qs[6])
        err_vec = h * (sum(e * kj for e, kj in zip(_E, k) if e) + _E[6] * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.max(np.abs(err_vec) / scale))
        if err <= 1.0:
            x = x_end if h == x_end - x else x + h
            new_sign = np.sign(y5[0])
            changed = (last_sign * new_sign < 0)
            zeros += changed
            last_sign = np.where(new_sign != 0, new_sign, last_sign)
            y = y5
            k1 = k7
            nodes.append(x)
            if record:
                path.append(y.copy())
        factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
        h_new = h * min(5.0, max(0.2, factor))
        if h_new < 1e-13 * max(1.0, abs(x)):
            raise IntegratorError("step size underflow", energies.tolist(), params.m)
        h = h_new
        steps += 1
        if steps > max_steps:
            raise IntegratorError("too many steps", energies.tolist(), params.m)
    result = PropagationResult(energies, y, zeros)
    if record:
        result.xs = np.array(nodes)
        result.path = np.array(path)
    return result, np.array(nodes)


def make_plan(params: PotentialParams, x_end: float, e_min: float, e_max: float, rtol=RTOL, atol=ATOL) -> StepPlan:
    """Record a step sequence adequate for every energy in [e_min, e_max]."""
    probe = np.linspace(e_min, e_max, 9)
    _, nodes = adaptive(probe, params, x_end, rtol=rtol, atol=atol)
    hs = np.diff(nodes)
    pts = nodes[:-1, None] + np.append(_C, 1.0)[None, :] * hs[:, None]
    stage_v = potential_value(pts.ravel(), params).reshape(pts.shape)
    return StepPlan(params, x_end, e_max, nodes, stage_v)


def _step_matrices(plan: StepPlan, energies: np.ndarray):
    """Per-step transfer matrices of the Dormand-Prince update, shape (steps, n) each.

    For y' = A y with A = [[0, 1], [q, 0]] every stage is linear in y, so one
    step is y -> T y with T built from the stage matrices K_j = A_j Z_j.
    """
    h = np.diff(plan.nodes)[:, None]
    q = plan.stage_v[:, :, None] - energies[None, None, :]
    ks = []
    for j in range(6):
        z00 = 1.0 + h * sum(a * k[0] for a, k in zip(_A[j], ks) if a) if j else np.ones_like(q[:, 0])
        z01 = h * sum(a * k[1] for a, k in zip(_A[j], ks) if a) if j else np.zeros_like(q[:, 0])
        z10 = h * sum(a * k[2] for a, k in zip(_A[j], ks) if a) if j else np.zeros_like(q[:, 0])
        z11 = 1.0 + h * sum(a * k[3] for a, k in zip(_A[j], ks) if a) if j else np.ones_like(q[:, 0])
        qj = q[:, j]
        ks.append((z10, z11, qj * z00, qj * z01))
    t = [h * sum(b * k[i] for b, k in zip(_B, ks) if b) for i in range(4)]
    t[0] += 1.0
    t[3] += 1.0
    return t


def _replay_scalar(t00, t01, t10, t11):
    """Plain-float replay for one energy; numpy overhead dominates at this size."""
    c, cp, s, sp = 1.0, 0.0, 0.0, 1.0
    kc = ks = 0
    last_c = last_s = 1.0
    for a, b, g, d in zip(t00, t01, t10, t11):
        c, cp = a * c + b * cp, g * c + d * cp
        s, sp = a * s + b * sp, g * s + d * sp
        if c != 0.0:
            if (c > 0) != (last_c > 0):
                kc += 1
            last_c = c
        if s != 0.0:
            if (s > 0) != (last_s > 0):
                ks += 1
            last_s = s
    return np.array([[c, s], [cp, sp]]), np.array([kc, ks])


def propagate(plan: StepPlan, energies, chunk_elements: int = 400_000) -> PropagationResult:
    """Replay a plan for a batch of energies (each must be <= plan.e_max + tiny)."""
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if energies.size and np.max(energies) > plan.e_max * (1 + 1e-12) + 1e-12:
        raise ValueError("energy above the plan ceiling")
    n = energies.size
    state = np.empty((2, 2, n))
    zeros = np.zeros((2, n), dtype=np.int64)
    chunk = max(1, chunk_elements // max(plan.steps, 1))
    for lo in range(0, n, chunk):
        sl = slice(lo, min(n, lo + chunk))
        t00, t01, t10, t11 = _step_matrices(plan, energies[sl])
        width = t00.shape[1]
        if width <= 4:
            for j in range(width):
                k = lo + j
                state[:, :, k], zeros[:, k] = _replay_scalar(t00[:, j].tolist(), t01[:, j].tolist(), t10[:, j].tolist(), t11[:, j].tolist())
            continue
        y = np.zeros((2, width))
        p = np.zeros((2, width))
        y[0] = 1.0
        p[1] = 1.0
        last = np.ones((2, width))
        count = np.zeros((2, width), dtype=np.int64)
        for i in range(plan.steps):
            y, p = t00[i] * y + t01[i] * p, t10[i] * y + t11[i] * p
            sign = np.sign(y)
            count += last * sign < 0
            last = np.where(sign != 0, sign, last)
        state[0, :, sl] = y
        state[1, :, sl] = p
        zeros[:, sl] = count
    return PropagationResult(energies, state, zeros)
