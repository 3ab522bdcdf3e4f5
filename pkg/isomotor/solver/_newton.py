"""Damped Newton solver for the coupled magnetostatic system"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from isomotor._settings import settings
from isomotor.assembly import SystemBuilder
from isomotor.common.exceptions import LinearAlgebraError, SolverError
from isomotor.common.types import FloatArray

__all__ = ["ConvergenceRecord", "FieldSolution", "factorize", "solve_magnetostatic", "STALL_TOLERANCE"]

logger = logging.getLogger(__name__)

ARMIJO_SLOPE = 1e-4
# relative residual accepted when the line search can no longer make progress
STALL_TOLERANCE = 1e-8

# refinement sweeps with the one factorization of a linear problem
LINEAR_REFINEMENTS = 2


@dataclass(frozen=True)
class ConvergenceRecord:
    """Linear solves taken and residual norms after every accepted step"""

    iterations: int
    residuals: List[float] = field(default_factory=list)
    stalled: bool = False

    @property
    def final_residual(self) -> float:
        """Last residual norm"""
        return self.residuals[-1] if self.residuals else 0.0


@dataclass(frozen=True)
class FieldSolution:
    """Converged state (u_rt, u_st, lambda) at a rotor angle"""

    state: FloatArray
    beta: float
    n_rotor: int
    n_stator: int
    convergence: ConvergenceRecord
    rhs_norm: float = 0.0
    # LU of the Jacobian, kept when it does not depend on the state
    factorization: Optional[object] = field(default=None, compare=False, repr=False)

    @property
    def u_rt(self) -> FloatArray:
        """Rotor A_z coefficients"""
        return self.state[: self.n_rotor]

    @property
    def u_st(self) -> FloatArray:
        """Stator A_z coefficients"""
        return self.state[self.n_rotor : self.n_rotor + self.n_stator]

    @property
    def multipliers(self) -> FloatArray:
        """Mortar multipliers lambda"""
        return self.state[self.n_rotor + self.n_stator :]


def factorize(matrix: sparse.spmatrix, angle: Optional[float] = None):
    """Sparse LU of a square matrix

    Raises
    ------
    LinearAlgebraError
        if the matrix is singular
    """
    try:
        lu = splu(sparse.csc_matrix(matrix))
    except RuntimeError as exc:
        raise LinearAlgebraError(f"factorization failed: {exc}", angle=angle) from exc
    diagonal = lu.U.diagonal()
    if not np.all(np.isfinite(diagonal)) or np.any(diagonal == 0.0):
        raise LinearAlgebraError("singular saddle point matrix", angle=angle)
    return lu


def solve_magnetostatic(
    builder: SystemBuilder,
    beta: float,
    initial: Optional[FloatArray] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> FieldSolution:
    """Damped Newton iteration on the full saddle point system

    At least one linear solve is taken. A step is accepted once
    |r(U + t dU)| <= (1 - 1e-4 t) |r(U)|, halving t from 1 down to the minimum
    step of the settings. Convergence means |r| <= max(atol, rtol |F|).
    A linear problem converges in one iteration: its step is refined with
    the same factorization when round-off leaves the residual above the
    tolerance.

    Parameters
    ----------
    builder : SystemBuilder
        assembled data of one geometry
    beta : float
        rotor angle in radians
    initial : Optional[FloatArray], optional
        warm start, by default zero
    rtol, atol, max_iter : optional
        overrides of the package settings

    Raises
    ------
    SolverError
        if the iteration cap is reached or the line search fails
    LinearAlgebraError
        if a Jacobian is singular
    """
    rtol = settings.newton_rtol if rtol is None else rtol
    atol = settings.newton_atol if atol is None else atol
    max_iter = settings.newton_max_iter if max_iter is None else max_iter
    factor = settings.armijo_factor
    min_step = settings.armijo_min_step

    coupling = builder.coupling(beta)
    source_norm = float(np.linalg.norm(builder.source(beta)))
    tolerance = max(atol, rtol * source_norm)

    state = np.zeros(builder.size) if initial is None else np.array(initial, dtype=float)
    residual = builder.residual(state, beta, coupling)
    norm = float(np.linalg.norm(residual))
    history = [norm]
    stalled = False

    for iteration in range(1, max(max_iter, 1) + 1):
        lu = factorize(builder.jacobian(state, beta, coupling), beta)
        step = lu.solve(-residual)
        if norm <= tolerance:
            trial = state + step
            trial_residual = builder.residual(trial, beta, coupling)
            trial_norm = float(np.linalg.norm(trial_residual))
            if trial_norm <= tolerance:
                state, residual, norm = trial, trial_residual, trial_norm
                history.append(norm)
            return _solution(builder, state, beta, iteration, history, stalled, source_norm, lu)

        t = 1.0
        while True:
            trial = state + t * step
            trial_residual = builder.residual(trial, beta, coupling)
            trial_norm = float(np.linalg.norm(trial_residual))
            if trial_norm <= (1.0 - ARMIJO_SLOPE * t) * norm:
                break
            t *= factor
            if t < min_step:
                if norm <= STALL_TOLERANCE * source_norm:
                    logger.warning(
                        "Newton | stalled at relative residual %.3e | beta: %.6f", norm / source_norm, beta
                    )
                    stalled = True
                    return _solution(builder, state, beta, iteration, history, stalled, source_norm)
                raise SolverError(f"line search failed at beta = {beta:.6f}", history, beta)

        state, residual, norm = trial, trial_residual, trial_norm
        if builder.is_linear:
            for _ in range(LINEAR_REFINEMENTS):
                if norm <= tolerance:
                    break
                state = state + lu.solve(-residual)
                residual = builder.residual(state, beta, coupling)
                norm = float(np.linalg.norm(residual))
        history.append(norm)
        logger.debug("Newton | iter: %d | residual: %.3e | step: %g", iteration, norm, t)
        if norm <= tolerance:
            return _solution(builder, state, beta, iteration, history, stalled, source_norm, lu)

    raise SolverError(f"Newton did not converge in {max_iter} iterations at beta = {beta:.6f}", history, beta)


def _solution(
    builder: SystemBuilder,
    state: FloatArray,
    beta: float,
    iterations: int,
    history: List[float],
    stalled: bool,
    source_norm: float,
    lu=None,
) -> FieldSolution:
    state = np.array(state)
    state.setflags(write=False)
    return FieldSolution(
        state,
        float(beta),
        builder.dofs.n_rotor,
        builder.dofs.n_stator,
        ConvergenceRecord(iterations, history, stalled),
        source_norm,
        lu if builder.is_linear else None,
    )
