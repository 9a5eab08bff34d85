"""Support-function quantities and the Monge-Ampere identity they satisfy.

With rho = |r|^2 / 2 and mu = r . n, every immersion obeys

    rho_{i,j} = g_ij + mu h_ij            (covariant Hessian)
    mu^2      = 2 rho - |grad rho|^2
    det(rho_{i,j} - g_ij) = K det(g) mu^2   (n = 2)

These are the pointwise checks this module evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import frame_at

__all__ = [
    "SupportData",
    "ShapeIdentityResult",
    "support_at",
    "darboux_residual",
    "verify_shape_identity",
    "SUPPORT_DEGENERATE_TOL",
]

# |mu| below this is reported as support-degenerate; identities that divide
# by mu are skipped there.
SUPPORT_DEGENERATE_TOL = 1e-8


@dataclass
class SupportData:
    rho: np.ndarray
    grad_rho: np.ndarray          # chart components rho_i
    rho_hess: np.ndarray          # covariant rho_{i,j}
    mu: np.ndarray
    norm_residual: np.ndarray     # | mu^2 - (2 rho - |grad rho|^2_g) |
    position_residual: np.ndarray  # | r - g^{ij} rho_i r_j - mu n |_inf


def support_at(immersion, point, frame=None):
    """Support quantities of r at ``point`` (batched)."""
    fr = frame if frame is not None else frame_at(immersion, point, order=2)
    pos, tang = fr.position, fr.tangents
    rho = 0.5 * np.einsum("...a,...a->...", pos, pos)
    grad_rho = np.einsum("...a,...ai->...i", pos, tang)
    # d_ij rho = g_ij + r . r_ij, then subtract the Christoffel term
    hess = fr.metric + np.einsum("...a,...aij->...ij", pos, fr.d2)
    hess = hess - np.einsum("...kij,...k->...ij", fr.christoffels, grad_rho)
    mu = np.einsum("...a,...a->...", pos, fr.normal)

    grad_sq = np.einsum("...i,...ij,...j->...", grad_rho, fr.metric_inv, grad_rho)
    norm_residual = np.abs(mu**2 - (2.0 * rho - grad_sq))
    recon = (np.einsum("...ij,...j,...ai->...a", fr.metric_inv, grad_rho, tang)
             + mu[..., None] * fr.normal)
    position_residual = np.max(np.abs(pos - recon), axis=-1)
    return SupportData(rho=rho, grad_rho=grad_rho, rho_hess=hess, mu=mu,
                       norm_residual=norm_residual,
                       position_residual=position_residual)


def darboux_residual(immersion, point, frame=None, relative=True):
    """det(rho_{i,j} - g_ij) - K det(g) mu^2 at ``point`` (n = 2 only).

    Zero up to rounding for a genuine immersion.  With ``relative`` the
    residual is divided by max(1, |lhs|, |rhs|).
    """
    if immersion.dim != 2:
        raise ValueError("the Monge-Ampere identity is stated for n = 2")
    fr = frame if frame is not None else frame_at(immersion, point, order=2)
    sup = support_at(immersion, point, frame=fr)
    lhs = np.linalg.det(sup.rho_hess - fr.metric)
    rhs = fr.curvature * fr.det_metric * sup.mu**2
    res = np.abs(lhs - rhs)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return res


@dataclass
class ShapeIdentityResult:
    max_residual: np.ndarray
    skipped: np.ndarray           # support-degenerate points (|mu| tiny)


def verify_shape_identity(immersion, point, frame=None):
    """Componentwise residual of  h_ij mu - (rho_{i,j} - g_ij),  relative to
    the size of its terms.  Points with |mu| < 1e-8 are flagged as skipped
    rather than failed."""
    fr = frame if frame is not None else frame_at(immersion, point, order=2)
    sup = support_at(immersion, point, frame=fr)
    lhs = fr.second_form * sup.mu[..., None, None]
    rhs = sup.rho_hess - fr.metric
    scale = np.maximum(1.0, np.maximum(
        np.max(np.abs(lhs), axis=(-1, -2)), np.max(np.abs(rhs), axis=(-1, -2))))
    res = np.max(np.abs(lhs - rhs), axis=(-1, -2)) / scale
    skipped = np.abs(sup.mu) < SUPPORT_DEGENERATE_TOL
    return ShapeIdentityResult(max_residual=res, skipped=skipped)
