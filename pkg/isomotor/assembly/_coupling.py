"""Harmonic mortar coupling across the airgap and the rotation operator"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from isomotor._settings import settings
from isomotor.common.exceptions import ConfigError
from isomotor.common.types import IntArray, Side
from isomotor.splines import MultiPatchGeometry

from ._dofs import DofMap
from ._quadrature import EdgeRule

__all__ = ["harmonic_set", "point_coupling", "assemble_coupling", "rotation_matrix"]

logger = logging.getLogger(__name__)


def harmonic_set(max_harmonic: Optional[int] = None, period: float = np.pi / 2) -> IntArray:
    """Harmonic orders antiperiodic over `period`: 2, 6, 10, ... up to max_harmonic

    The quarter model admits n with n * period = pi (mod 2 pi).
    """
    max_harmonic = settings.max_harmonic if max_harmonic is None else int(max_harmonic)
    base = int(round(np.pi / period))
    orders = np.arange(base, max_harmonic + 1, 2 * base)
    if orders.size == 0:
        raise ConfigError(f"no admissible harmonic up to {max_harmonic}")
    return orders.astype(np.int64)


def point_coupling(
    geometry: MultiPatchGeometry, side: Side, harmonics: IntArray, extra: Optional[int] = None
) -> sparse.csr_matrix:
    """Coupling over all control points, columns (sin n theta, cos n theta) per harmonic

    g[i, 2m] = int N_i sin(n_m theta) dGamma, g[i, 2m + 1] = int N_i cos(n_m theta) dGamma

    Raises
    ------
    ConfigError
        if no patch of the side carries an airgap edge
    """
    extra = settings.extra_quadrature_points if extra is None else extra
    harmonics = np.asarray(harmonics)
    rows, cols, data = [], [], []
    found = False
    for record, patch_ids in zip(geometry.records, geometry.global_ids):
        if record.side != side:
            continue
        for edge, tag in record.edge_tags.items():
            if tag != "airgap":
                continue
            found = True
            rule = EdgeRule.from_patch(record.patch, edge, extra)
            points = record.patch.control_points.reshape(-1, 2)[rule.indices]
            x = np.einsum("qk,qkd->qd", rule.values, points)
            tangent = np.einsum("qk,qkd->qd", rule.gradients[:, :, rule.direction], points)
            measure = np.linalg.norm(tangent, axis=1) * rule.weights
            theta = np.arctan2(x[:, 1], x[:, 0])
            phase = theta[:, None] * harmonics[None, :]
            modes = np.empty((theta.size, 2 * harmonics.size))
            modes[:, 0::2] = np.sin(phase)
            modes[:, 1::2] = np.cos(phase)
            local = np.einsum("qk,qm,q->qkm", rule.values, modes, measure)
            ids = patch_ids.ravel()[rule.indices]
            nloc = ids.shape[1]
            rows.append(np.repeat(ids[:, :, None], modes.shape[1], axis=2).ravel())
            cols.append(np.broadcast_to(np.arange(modes.shape[1]), (ids.shape[0], nloc, modes.shape[1])).ravel())
            data.append(local.ravel())
    if not found:
        raise ConfigError(f"no airgap edge tagged on the {side} side")
    shape = (geometry.n_points, 2 * harmonics.size)
    return sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=shape).tocsr()


def assemble_coupling(
    geometry: MultiPatchGeometry,
    side: Side,
    harmonics: Optional[IntArray] = None,
    dofs: Optional[DofMap] = None,
    extra: Optional[int] = None,
) -> sparse.csr_matrix:
    """Reduced coupling matrix of one side, shape (side unknowns, 2 |N|)"""
    harmonics = harmonic_set(period=geometry.period) if harmonics is None else np.asarray(harmonics)
    dofs = dofs or DofMap(geometry)
    reduced = dofs.restrict(point_coupling(geometry, side, harmonics, extra))
    return sparse.csr_matrix(reduced)[dofs.side_slice(side)]


def rotation_matrix(beta: float, harmonics: Sequence[int], derivative: bool = False) -> sparse.csr_matrix:
    """Block diagonal R_beta acting on (sin, cos) pairs, or dR/dbeta

    Right-multiplying the stator coupling turns its columns into
    int N sin(n (theta - beta)) and int N cos(n (theta - beta)).
    """
    blocks = []
    for n in harmonics:
        c, s = np.cos(n * beta), np.sin(n * beta)
        if derivative:
            blocks.append(n * np.array([[-s, c], [-c, -s]]))
        else:
            blocks.append(np.array([[c, s], [-s, c]]))
    return sparse.block_diag(blocks, format="csr")
