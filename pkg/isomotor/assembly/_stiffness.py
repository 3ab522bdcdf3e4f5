"""Stiffness matrices and the Newton Jacobian of the reluctivity term"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from isomotor._settings import settings
from isomotor.common.types import FloatArray
from isomotor.materials import MaterialLibrary
from isomotor.splines import MultiPatchGeometry

from ._dofs import DofMap
from ._quadrature import QuadratureRule, kinematics

__all__ = [
    "quadrature_rules",
    "potential_gradient",
    "point_stiffness",
    "assemble_stiffness",
    "newton_jacobian",
    "FIELD_FLOOR",
]

logger = logging.getLogger(__name__)

# |B| below this (tesla) contributes no Newton term
FIELD_FLOOR = 1e-14


def quadrature_rules(geometry: MultiPatchGeometry, extra: Optional[int] = None) -> List[QuadratureRule]:
    """One cached Gauss rule per patch"""
    extra = settings.extra_quadrature_points if extra is None else extra
    return [QuadratureRule.from_patch(patch, extra) for patch in geometry.patches]


def potential_gradient(grad: FloatArray, ids: np.ndarray, u_points: FloatArray) -> FloatArray:
    """grad A_z at quadrature points, shape (npts, 2)"""
    return np.einsum("qka,qk->qa", grad, u_points[ids])


def _coo(ids: np.ndarray, local: FloatArray):
    nloc = ids.shape[1]
    rows = np.repeat(ids, nloc, axis=1).ravel()
    cols = np.tile(ids, (1, nloc)).ravel()
    return rows, cols, local.ravel()


def point_stiffness(
    geometry: MultiPatchGeometry,
    materials: MaterialLibrary,
    u_points: Optional[FloatArray] = None,
    rules: Optional[Sequence[QuadratureRule]] = None,
    newton: bool = False,
) -> sparse.csr_matrix:
    """K (or the Newton Jacobian) over all control points before elimination

    K_ij = int nu(|B|) grad N_i . grad N_j, and with `newton` the term
    int (dnu/dB / |B|) (grad N_i . grad A)(grad N_j . grad A) is added.
    """
    rules = rules or quadrature_rules(geometry)
    n_points = geometry.n_points
    u_points = np.zeros(n_points) if u_points is None else np.asarray(u_points, dtype=float)
    rows, cols, data = [], [], []
    for record, rule, patch_ids in zip(geometry.records, rules, geometry.global_ids):
        kin = kinematics(rule, record.patch.control_points, record.label)
        ids = patch_ids.ravel()[rule.indices]
        model = materials[record.material]
        gradient = potential_gradient(kin.grad, ids, u_points)
        flux = np.linalg.norm(gradient, axis=1)
        coefficient = model.nu(flux) * kin.measure
        local = coefficient[:, None, None] * np.einsum("qia,qja->qij", kin.grad, kin.grad)
        if newton and not model.is_linear:
            safe = np.where(flux > FIELD_FLOOR, flux, 1.0)
            slope = np.where(flux > FIELD_FLOOR, model.dnu_dB(flux) / safe, 0.0) * kin.measure
            projection = np.einsum("qka,qa->qk", kin.grad, gradient)
            local = local + slope[:, None, None] * projection[:, :, None] * projection[:, None, :]
        r, c, d = _coo(ids, local)
        rows.append(r)
        cols.append(c)
        data.append(d)
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n_points, n_points)
    )
    return matrix.tocsr()


def assemble_stiffness(
    geometry: MultiPatchGeometry,
    materials: MaterialLibrary,
    u: Optional[FloatArray] = None,
    dofs: Optional[DofMap] = None,
    rules: Optional[Sequence[QuadratureRule]] = None,
) -> sparse.csr_matrix:
    """Reduced stiffness P^T K P with nu evaluated at the iterate u (zero by default)"""
    dofs = dofs or DofMap(geometry)
    u_points = None if u is None else dofs.to_points(u)
    return dofs.reduce(point_stiffness(geometry, materials, u_points, rules))


def newton_jacobian(
    geometry: MultiPatchGeometry,
    materials: MaterialLibrary,
    u: FloatArray,
    dofs: Optional[DofMap] = None,
    rules: Optional[Sequence[QuadratureRule]] = None,
) -> sparse.csr_matrix:
    """Reduced Jacobian d(K(u) u)/du, equal to K for linear materials"""
    dofs = dofs or DofMap(geometry)
    return dofs.reduce(point_stiffness(geometry, materials, dofs.to_points(u), rules, newton=True))
