"""Augmented Lagrangian for inequality constraints with a box constrained quasi-Newton inner solver"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from isomotor.common.types import FloatArray

__all__ = [
    "Evaluation",
    "Problem",
    "SolverOptions",
    "AbortSearch",
    "AugmentedLagrangianResult",
    "projected_gradient",
    "complementarity",
    "minimize_augmented_lagrangian",
]

logger = logging.getLogger(__name__)

# f, grad f, c, dc/dx with c(x) <= 0 at feasible points
Evaluation = Tuple[float, FloatArray, FloatArray, FloatArray]
Problem = Callable[[FloatArray], Evaluation]

# L-BFGS-B reports an abnormal line search termination with this status
LINE_SEARCH_FAILURE = 2


class AbortSearch(Exception):
    """Raised by a problem or callback to stop the search at the last accepted point"""


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rules and schedules of the outer and inner iterations

    The inner tolerances follow the usual schedule on the penalty rho:
    omega / rho for the projected merit gradient and eta / rho^0.1 for the
    constraints, tightened by 1 / rho and 1 / rho^0.9 after every successful
    multiplier update.
    """

    max_iterations: int = 100
    gradient_tolerance: float = 1e-6
    constraint_tolerance: float = 1e-6
    step_tolerance: float = 1e-10
    initial_penalty: float = 10.0
    penalty_growth: float = 10.0
    max_penalty: float = 1e10
    max_outer: int = 30
    memory: int = 10
    inner_iterations: int = 20
    omega: float = 1.0
    eta: float = 1.0
    stall_tolerance: float = 1e-3
    max_stalls: int = 3


@dataclass
class AugmentedLagrangianResult:
    """Final point with its multipliers

    `merit_history` holds one list per outer iteration: the merit at the start
    point followed by the merit after every accepted inner step, all at that
    iteration's multipliers and penalty.
    """

    x: FloatArray
    multipliers: FloatArray
    penalty: float
    status: str
    iterations: int
    evaluations: int
    merit_history: List[List[float]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        """True for a first order point within the tolerances"""
        return self.status == "converged"


def projected_gradient(x: FloatArray, gradient: FloatArray, lower: FloatArray, upper: FloatArray) -> FloatArray:
    """x - P(x - g) with P the projection onto the box"""
    return x - np.clip(x - gradient, lower, upper)


def complementarity(c: FloatArray, mu: FloatArray, rho: float) -> float:
    """max |min(-c, mu / rho)|, zero at a feasible point with complementary multipliers"""
    return float(np.max(np.abs(np.minimum(-np.asarray(c), np.asarray(mu) / rho)), initial=0.0))


def _merit(value: float, gradient: FloatArray, c: FloatArray, jacobian: FloatArray, mu: FloatArray, rho: float):
    """Powell-Hestenes-Rockafellar merit of c <= 0 and its gradient"""
    shifted = np.maximum(0.0, mu + rho * c)
    merit = value + (shifted @ shifted - mu @ mu) / (2.0 * rho)
    return merit, gradient + jacobian.T @ shifted


def minimize_augmented_lagrangian(
    problem: Problem,
    x0: FloatArray,
    lower: FloatArray,
    upper: FloatArray,
    options: Optional[SolverOptions] = None,
    callback: Optional[Callable[[FloatArray, float, FloatArray, int], None]] = None,
) -> AugmentedLagrangianResult:
    """Minimize f subject to c(x) <= 0 and lower <= x <= upper

    Each outer iteration minimizes the merit with L-BFGS-B at fixed multipliers
    and penalty, with at most `inner_iterations` steps and a tolerance that
    tightens from one outer iteration to the next. When the constraints met
    their current tolerance the multipliers are updated,
    mu <- max(0, mu + rho c); otherwise the penalty grows. A line search
    failure without progress restarts the inner solver at a larger penalty.
    Coordinates with equal bounds stay fixed.

    Parameters
    ----------
    problem : Problem
        x to (f, grad f, c, dc/dx)
    x0 : FloatArray
        start, projected onto the box
    lower, upper : FloatArray
        box bounds
    options : Optional[SolverOptions], optional
        stopping rules
    callback : optional
        called after every accepted inner step with (x, merit, c, iteration);
        it may raise AbortSearch

    Returns
    -------
    AugmentedLagrangianResult
        status is 'converged', 'max_iterations', 'small_step', 'stalled' or
        'aborted'
    """
    options = options or SolverOptions()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    cache: OrderedDict = OrderedDict()
    counts = {"evaluations": 0, "iterations": 0}

    def evaluate(point: FloatArray) -> Evaluation:
        key = np.asarray(point, dtype=float).tobytes()
        if key in cache:
            cache.move_to_end(key)
        else:
            counts["evaluations"] += 1
            cache[key] = problem(np.array(point, dtype=float))
            if len(cache) > 8:
                cache.popitem(last=False)
        return cache[key]

    def first_order(point: FloatArray, multipliers: FloatArray) -> Tuple[float, float]:
        _, f_gradient, constraints, constraint_jacobian = evaluate(point)
        lagrangian = f_gradient + constraint_jacobian.T @ multipliers
        stationarity = float(np.max(np.abs(projected_gradient(point, lagrangian, lower, upper)), initial=0.0))
        return stationarity, max(0.0, float(np.max(constraints, initial=0.0)))

    c = evaluate(x)[2]
    mu = np.zeros(c.size)
    rho = options.initial_penalty
    gradient_target = max(options.omega / rho, options.gradient_tolerance)
    constraint_target = max(options.eta / rho**0.1, options.constraint_tolerance)
    merit_history: List[List[float]] = []
    status = "max_iterations"
    stalls = 0

    stationarity, violation = first_order(x, mu)
    if violation <= options.constraint_tolerance and stationarity <= options.gradient_tolerance:
        return AugmentedLagrangianResult(x, mu, rho, "converged", 0, counts["evaluations"], merit_history)

    for outer in range(options.max_outer):
        remaining = options.max_iterations - counts["iterations"]
        if remaining <= 0:
            status = "max_iterations"
            break

        def merit(point: FloatArray, mu=mu, rho=rho):
            f_value, f_gradient, constraints, constraint_jacobian = evaluate(point)
            return _merit(f_value, f_gradient, constraints, constraint_jacobian, mu, rho)

        history = [float(merit(x)[0])]
        merit_history.append(history)
        last = np.array(x)

        def accepted(point: FloatArray, merit=merit, history=history, last=last):
            counts["iterations"] += 1
            last[:] = point
            merit_value = float(merit(point)[0])
            history.append(merit_value)
            if callback is not None:
                callback(np.array(point), merit_value, evaluate(point)[2], counts["iterations"])

        start = x
        try:
            inner = minimize(
                merit,
                x,
                jac=True,
                method="L-BFGS-B",
                bounds=list(zip(lower, upper)),
                callback=accepted,
                options={
                    "maxiter": min(remaining, options.inner_iterations),
                    "maxcor": options.memory,
                    "gtol": gradient_target,
                    "ftol": 1e-12,
                },
            )
        except AbortSearch:
            logger.warning("Augmented Lagrangian | search aborted after %d iterations", counts["iterations"])
            x = last
            status = "aborted"
            break
        x = np.clip(inner.x, lower, upper)
        step = float(np.linalg.norm(x - start))

        if inner.status == LINE_SEARCH_FAILURE and step <= options.step_tolerance:
            stalls += 1
            logger.warning(
                "Augmented Lagrangian | outer: %d | line search failed without progress (%s) | stalls: %d",
                outer,
                inner.message,
                stalls,
            )
            if stalls >= options.max_stalls or rho >= options.max_penalty:
                status = "stalled"
                break
            rho = min(rho * options.penalty_growth, options.max_penalty)
            gradient_target = max(options.omega / rho, options.gradient_tolerance)
            constraint_target = max(options.eta / rho**0.1, options.constraint_tolerance)
            continue
        if step > options.step_tolerance:
            stalls = 0

        c = evaluate(x)[2]
        if complementarity(c, mu, rho) <= constraint_target:
            mu = np.maximum(0.0, mu + rho * c)
            constraint_target = max(constraint_target / rho**0.9, options.constraint_tolerance)
            gradient_target = max(gradient_target / rho, options.gradient_tolerance)
        else:
            rho = min(rho * options.penalty_growth, options.max_penalty)
            constraint_target = max(options.eta / rho**0.1, options.constraint_tolerance)
            gradient_target = max(options.omega / rho, options.gradient_tolerance)

        stationarity, violation = first_order(x, mu)
        logger.info(
            "Augmented Lagrangian | outer: %d | iterations: %d | violation: %.3e | stationarity: %.3e | penalty: %.1e",
            outer,
            counts["iterations"],
            violation,
            stationarity,
            rho,
        )
        if violation <= options.constraint_tolerance and stationarity <= options.gradient_tolerance:
            status = "converged"
            break
        if (
            step <= options.step_tolerance
            and violation <= options.constraint_tolerance
            and stationarity <= options.stall_tolerance
        ):
            status = "small_step"
            break

    return AugmentedLagrangianResult(x, mu, rho, status, counts["iterations"], counts["evaluations"], merit_history)
