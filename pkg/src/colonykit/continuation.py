"""Nonconstant steady states by Newton iteration and branch tracing.

The discretized stationary system (same mirror-closure Laplacian as the
time stepper) is solved with an analytically assembled banded Jacobian in
the interleaved ordering (u_0, v_0, u_1, v_1, ...), bandwidth (2, 3).
Branches in the growth rate are traced by pseudo-arclength continuation:
secant predictor, Newton corrector on the bordered system, adaptive step.
The state part of the arclength metric is mean-squared so domain resolution
does not change the parameterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .asymptotics import epsilon_for_sigma, evaluate_approximate_steady_state, expansion_coefficients
from .errors import (
    ColonyKitError,
    NewtonConvergenceError,
    SeedFailureError,
    SingularJacobianError,
)
from .linear_analysis import BifurcationSummary, ModelParams, scan_modes
from .motility import MotilityModel
from .pde_solver import Field, _laplacian

__all__ = [
    "BranchPoint",
    "BranchCurve",
    "Termination",
    "newton_steady",
    "trace_branch",
]


@dataclass(frozen=True)
class BranchPoint:
    sigma: float
    field: Field
    amplitude: float      # max-norm of u - 1
    newton_iters: int
    residual: float


class Termination(Enum):
    REACHED_SIGMA_MIN = "reached_sigma_min"
    AMPLITUDE_BOUND = "amplitude_bound"
    NEWTON_FAILURE = "newton_failure"
    FOLD_LIMIT = "fold_limit"


@dataclass(frozen=True)
class BranchCurve:
    j: int
    points: tuple[BranchPoint, ...]
    termination: Termination

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([bp.sigma for bp in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([bp.amplitude for bp in self.points])


def _stationary_residual_vector(u, v, h, D, sigma, m) -> np.ndarray:
    rv = np.asarray(m.evaluate(v, 0), dtype=float)
    res_u = _laplacian(rv * u, h) + sigma * u * (1.0 - u)
    res_v = D * _laplacian(v, h) - v + u
    out = np.empty(2 * u.size)
    out[0::2] = res_u
    out[1::2] = res_v
    return out


def _jacobian_banded(u, v, h, D, sigma, m) -> np.ndarray:
    """Banded Jacobian of the interleaved stationary system, layout for
    scipy.linalg.solve_banded with bandwidths (2, 3)."""
    npts = u.size
    hh = h * h
    rv = np.asarray(m.evaluate(v, 0), dtype=float)
    rpv_u = np.asarray(m.evaluate(v, 1), dtype=float) * u
    # zero-flux stencil weights: row i couples i-1, i, i+1 with the
    # off-diagonal weight doubled at the mirrored boundaries
    sup_w = np.full(npts - 1, 1.0 / hh)
    sup_w[0] = 2.0 / hh
    sub_w = np.full(npts - 1, 1.0 / hh)
    sub_w[-1] = 2.0 / hh

    ab = np.zeros((6, 2 * npts))
    even = np.arange(0, 2 * npts, 2)
    odd = even + 1
    ab[3, even] = -2.0 * rv / hh + sigma * (1.0 - 2.0 * u)
    ab[3, odd] = -2.0 * D / hh - 1.0
    ab[1, even[1:]] = sup_w * rv[1:]
    ab[5, even[:-1]] = sub_w * rv[:-1]
    ab[2, odd] = -2.0 * rpv_u / hh
    ab[0, odd[1:]] = sup_w * rpv_u[1:]
    ab[4, odd[:-1]] = sub_w * rpv_u[:-1]
    ab[1, odd[1:]] = D * sup_w
    ab[5, odd[:-1]] = D * sub_w
    ab[4, even] = 1.0
    return ab


def _solve_linearized(ab, rhs):
    try:
        return solve_banded((2, 3), ab, rhs, check_finite=False)
    except LinAlgError as exc:
        raise SingularJacobianError(f"stationary linearization is singular: {exc}") from exc


def newton_steady(
    init: Field,
    p: ModelParams,
    m: MotilityModel,
    tol: float = 1e-10,
    max_iters: int = 25,
) -> BranchPoint:
    """Solve the discrete stationary system by Newton from the given field.

    Converges when the residual max-norm drops below tol.  Raises
    SingularJacobianError at parameter values where the linearization is
    degenerate (bifurcation points) and NewtonConvergenceError when the
    iteration budget runs out or the iterates leave the finite range.
    """
    if abs(init.l - p.l) > 1e-9 * max(1.0, p.l):
        raise ValueError(f"field length {init.l} does not match params length {p.l}")
    u = init.u.copy()
    v = init.v.copy()
    h = init.h
    res = math.inf
    for it in range(max_iters + 1):
        F = _stationary_residual_vector(u, v, h, p.D, p.sigma, m)
        if not np.all(np.isfinite(F)):
            raise NewtonConvergenceError("residual became non-finite during Newton iteration")
        res = float(np.max(np.abs(F)))
        if res < tol:
            return BranchPoint(
                sigma=p.sigma,
                field=Field(u=u, v=v, l=p.l),
                amplitude=float(np.max(np.abs(u - 1.0))),
                newton_iters=it,
                residual=res,
            )
        if it == max_iters:
            break
        ab = _jacobian_banded(u, v, h, p.D, p.sigma, m)
        delta = _solve_linearized(ab, F)
        u -= delta[0::2]
        v -= delta[1::2]
    raise NewtonConvergenceError(
        f"no convergence after {max_iters} Newton iterations (residual {res:.3e})"
    )


# ---------------------------------------------------------------------------
# pseudo-arclength tracing
# ---------------------------------------------------------------------------


class _ArclengthState:
    """Weighted state-plus-parameter vector arithmetic for the tracer."""

    def __init__(self, n_dof: int):
        self.w = 1.0 / n_dof

    def dot(self, xu, xs, yu, ys) -> float:
        return float(xu @ yu) * self.w + xs * ys

    def norm(self, xu, xs) -> float:
        return math.sqrt(self.dot(xu, xs, xu, xs))


def _corrector(u, v, sigma, tan_u, tan_s, anchor_u, anchor_s, ds, h, D, m, metric,
               tol, max_iters):
    """Newton on the bordered (stationary + arclength) system.

    Returns (u, v, sigma, iters, residual) or raises a Newton error.
    """
    npts = u.size
    for it in range(1, max_iters + 1):
        F = _stationary_residual_vector(u, v, h, D, sigma, m)
        if not np.all(np.isfinite(F)):
            raise NewtonConvergenceError("corrector produced non-finite residual")
        X = np.empty(2 * npts)
        X[0::2] = u
        X[1::2] = v
        N = metric.dot(tan_u, tan_s, X - anchor_u, sigma - anchor_s) - ds
        res = float(np.max(np.abs(F)))
        if res < tol and abs(N) < max(1e-12, 1e-6 * abs(ds)):
            return u, v, sigma, it - 1, res

        ab = _jacobian_banded(u, v, h, D, sigma, m)
        F_sigma = np.zeros(2 * npts)
        F_sigma[0::2] = u * (1.0 - u)
        a = _solve_linearized(ab, F)
        b = _solve_linearized(ab, F_sigma)
        denom = tan_s - metric.dot(tan_u, 0.0, b, 0.0)
        if abs(denom) < 1e-14:
            raise SingularJacobianError("bordered system is singular (tangent orthogonal)")
        d_sigma = (metric.dot(tan_u, 0.0, a, 0.0) - N) / denom
        delta = -a - d_sigma * b
        u = u + delta[0::2]
        v = v + delta[1::2]
        sigma = sigma + d_sigma
    raise NewtonConvergenceError(f"corrector did not converge in {max_iters} iterations")


def trace_branch(
    j: int,
    p: ModelParams,
    m: MotilityModel,
    sigma_min: float,
    ds: float = 1e-3,
    *,
    n: int = 256,
    seed_offset: float = 1e-3,
    ds_min: float = 1e-5,
    ds_max: float = 5e-2,
    tol: float = 1e-10,
    max_corrector_iters: int = 8,
    b_max: float = 100.0,
    max_points: int = 2000,
    max_folds: int = 4,
    summary: BifurcationSummary | None = None,
) -> BranchCurve:
    """Trace the mode-j steady-state branch from just below its bifurcation
    value down to sigma_min.

    Seeds with the second-order approximate state at sigma0_j - seed_offset,
    then follows the branch by pseudo-arclength steps (doubling after fast
    corrector convergence, halving on failure).  Terminates on sigma_min,
    a box-bound violation, corrector failure at the minimum step, or a fold
    budget (which also caps runaway point counts).
    """
    if ds <= 0:
        raise ValueError(f"ds must be > 0, got {ds}")
    if summary is None:
        summary = scan_modes(p, m)
    try:
        expansion = expansion_coefficients(j, p, m, summary)
    except ColonyKitError as exc:
        raise SeedFailureError(f"mode {j} has no branch to seed: {exc}") from exc

    sigma_seed = expansion.sigma0 - seed_offset
    if sigma_seed <= sigma_min:
        return BranchCurve(j=j, points=(), termination=Termination.REACHED_SIGMA_MIN)

    grid = np.linspace(0.0, p.l, n + 1)
    eps = epsilon_for_sigma(expansion, sigma_seed)
    seed_field = evaluate_approximate_steady_state(expansion, eps, grid)
    try:
        bp0 = newton_steady(seed_field, replace(p, sigma=sigma_seed), m, tol=tol)
    except ColonyKitError as exc:
        raise SeedFailureError(f"seed Newton solve failed for mode {j}: {exc}") from exc
    if bp0.amplitude < 1e-9:
        raise SeedFailureError(f"mode {j} seed collapsed onto the uniform state")

    points = [bp0]
    h = p.l / n
    metric = _ArclengthState(2 * (n + 1))

    def pack(bp: BranchPoint) -> np.ndarray:
        X = np.empty(2 * (n + 1))
        X[0::2] = bp.field.u
        X[1::2] = bp.field.v
        return X

    # second point by a natural step in sigma to start the secant tangent
    sigma_next = sigma_seed - min(ds, seed_offset)
    try:
        bp1 = newton_steady(bp0.field, replace(p, sigma=sigma_next), m, tol=tol)
    except ColonyKitError as exc:
        raise SeedFailureError(f"could not take the first continuation step: {exc}") from exc
    points.append(bp1)

    X_prev, s_prev = pack(points[-2]), points[-2].sigma
    X_cur, s_cur = pack(points[-1]), points[-1].sigma
    tan_u = X_cur - X_prev
    tan_s = s_cur - s_prev
    scale = metric.norm(tan_u, tan_s)
    tan_u /= scale
    tan_s /= scale

    step_size = ds
    folds = 0
    termination = None
    while termination is None:
        if points[-1].sigma <= sigma_min:
            termination = Termination.REACHED_SIGMA_MIN
            break
        if len(points) >= max_points:
            termination = Termination.FOLD_LIMIT
            break
        u_pred = X_cur[0::2] + step_size * tan_u[0::2]
        v_pred = X_cur[1::2] + step_size * tan_u[1::2]
        s_pred = s_cur + step_size * tan_s
        try:
            u_new, v_new, s_new, iters, res = _corrector(
                u_pred, v_pred, s_pred, tan_u, tan_s, X_cur, s_cur, step_size,
                h, p.D, m, metric, tol, max_corrector_iters,
            )
            amplitude = float(np.max(np.abs(u_new - 1.0)))
            if amplitude < 1e-9:
                raise NewtonConvergenceError("corrector collapsed onto the uniform state")
        except (NewtonConvergenceError, SingularJacobianError):
            if step_size <= ds_min * (1 + 1e-12):
                termination = Termination.NEWTON_FAILURE
                break
            step_size = max(ds_min, 0.5 * step_size)
            continue

        lo = min(float(np.min(u_new)), float(np.min(v_new)))
        hi = max(float(np.max(u_new)), float(np.max(v_new)))
        if lo < 1.0 / b_max or hi > b_max:
            termination = Termination.AMPLITUDE_BOUND
            break

        bp = BranchPoint(
            sigma=s_new,
            field=Field(u=u_new, v=v_new, l=p.l),
            amplitude=amplitude,
            newton_iters=iters,
            residual=res,
        )
        points.append(bp)

        X_prev, s_prev = X_cur, s_cur
        X_cur, s_cur = pack(bp), bp.sigma
        new_tan_u = X_cur - X_prev
        new_tan_s = s_cur - s_prev
        scale = metric.norm(new_tan_u, new_tan_s)
        if scale == 0.0:
            termination = Termination.NEWTON_FAILURE
            break
        new_tan_u /= scale
        new_tan_s /= scale
        if new_tan_s * tan_s < 0:
            folds += 1
            if folds > max_folds:
                termination = Termination.FOLD_LIMIT
                tan_u, tan_s = new_tan_u, new_tan_s
                break
        tan_u, tan_s = new_tan_u, new_tan_s
        if iters <= 3:
            step_size = min(2.0 * step_size, ds_max)

    return BranchCurve(j=j, points=tuple(points), termination=termination)
