"""Adjoint solves for the torque functional"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from isomotor.assembly import SystemBuilder, rotation_matrix
from isomotor.common.types import FloatArray
from isomotor.solver import FieldSolution, factorize

__all__ = ["AdjointSolution", "torque_state_gradient", "solve_adjoint"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdjointSolution:
    """gamma solving J^T gamma = -dT/dU at the angle of its forward solution"""

    gamma: FloatArray
    beta: float
    n_rotor: int
    n_stator: int

    @property
    def unknowns(self) -> FloatArray:
        """Entries paired with (u_rt, u_st)"""
        return self.gamma[: self.n_rotor + self.n_stator]


def torque_state_gradient(builder: SystemBuilder, solution: FieldSolution) -> FloatArray:
    """dT/dU = -L (0, G_st R' lambda, R'^T G_st^T u_st)"""
    derivative = rotation_matrix(solution.beta, builder.harmonics, derivative=True)
    coupled = builder.G_st @ derivative
    return -builder.length * np.concatenate(
        [
            np.zeros(builder.dofs.n_rotor),
            coupled @ solution.multipliers,
            coupled.T @ solution.u_st,
        ]
    )


def solve_adjoint(builder: SystemBuilder, solution: FieldSolution, lu: Optional[object] = None) -> AdjointSolution:
    """gamma with J(U)^T gamma = -dT/dU at the converged state

    The forward factorization is reused when the solution carries one (linear
    materials); otherwise the Jacobian is factorized at the converged state.

    Raises
    ------
    LinearAlgebraError
        if the Jacobian is singular
    """
    rhs = -torque_state_gradient(builder, solution)
    if not np.any(rhs):
        gamma = np.zeros_like(rhs)
    else:
        lu = lu or solution.factorization
        if lu is None:
            lu = factorize(builder.jacobian(np.asarray(solution.state), solution.beta), solution.beta)
        gamma = lu.solve(rhs, trans="T")  # type: ignore
    logger.debug("Adjoint | beta: %.6f | norm: %.3e", solution.beta, np.linalg.norm(gamma))
    return AdjointSolution(gamma, solution.beta, solution.n_rotor, solution.n_stator)
