"""Diagnostics for pairs of isometric immersions over one chart.

For two immersions r, r~ with the same induced metric the difference data

    Phi  = rho~ - rho,   W_ij = h~_ij - h_ij,   hbar_ij = h_ij + h~_ij

satisfies, pointwise,

    W_ij (mu + mu~) = 2 Phi_{i,j} + hbar_ij (mu - mu~)
    hbar^{ij} W_ij  = 0            (linearized Gauss, cofactor form when
                                    hbar is singular)
    W_{ij,k} = W_{ik,j}            (Codazzi)

and the energy pairing of two symmetric 2-tensors

    (a, b) = integral  det(hbar)/det(g) hbar^{ij} hbar^{kl}
             a_ik b_jl (mu + mu~)  dV_g

is a positive semidefinite bilinear form whenever det(hbar) > 0 and
mu + mu~ > 0 on the chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .darboux import support_at
from .geometry import frame_at, sample_grid, second_form_derivatives
from .quadrature import gauss_legendre_nodes

__all__ = [
    "IsometricPair",
    "DifferenceTensors",
    "PairError",
    "EnergyPositivityError",
    "check_isometric",
    "difference_tensors",
    "verify_w_formula",
    "verify_gauss_trace_and_codazzi",
    "energy_inner_product",
    "energy_integrand",
    "cofactor_divergence_identity",
]

SINGULAR_HBAR_RTOL = 1e-10


class PairError(ValueError):
    pass


class EnergyPositivityError(PairError):
    """The energy pairing's positivity regime (det hbar > 0, mu + mu~ > 0)
    fails somewhere on the integration grid."""


@dataclass(frozen=True)
class IsometricPair:
    first: object
    second: object
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.first.dim != self.second.dim:
            raise PairError("pair members live on charts of different dim")
        if self.first.domain != self.second.domain:
            raise PairError("pair members must share the chart domain")


@dataclass
class DifferenceTensors:
    phi: np.ndarray
    w_diff: np.ndarray            # W_ij = h~ - h
    h_bar: np.ndarray             # h + h~
    mu: np.ndarray
    mu_tilde: np.ndarray
    det_residual: np.ndarray      # |det h~ - det h|


def check_isometric(pair, grid=(48, 24)):
    """Sup-norm metric deviation over a sample grid; the pair is accepted
    when it is within ``pair.tolerance``."""
    pts = sample_grid(pair.first, grid, margin=0.02)
    g1 = frame_at(pair.first, pts, order=2).metric
    g2 = frame_at(pair.second, pts, order=2).metric
    return float(np.max(np.abs(g1 - g2)))


def _pair_frames(pair, point, order=2):
    f1 = frame_at(pair.first, point, order=order)
    f2 = frame_at(pair.second, point, order=order)
    return f1, f2


def difference_tensors(pair, point, frames=None):
    f1, f2 = frames if frames is not None else _pair_frames(pair, point)
    s1 = support_at(pair.first, point, frame=f1)
    s2 = support_at(pair.second, point, frame=f2)
    w = f2.second_form - f1.second_form
    hbar = f2.second_form + f1.second_form
    det_res = np.abs(np.linalg.det(f2.second_form)
                     - np.linalg.det(f1.second_form))
    return DifferenceTensors(phi=s2.rho - s1.rho, w_diff=w, h_bar=hbar,
                             mu=s1.mu, mu_tilde=s2.mu, det_residual=det_res)


def verify_w_formula(pair, point):
    """Residual of W_ij (mu + mu~) - 2 Phi_{i,j} - hbar_ij (mu - mu~),
    relative to the size of its terms.  Phi_{i,j} is the covariant Hessian
    of the support difference in the shared metric."""
    f1, f2 = _pair_frames(pair, point)
    s1 = support_at(pair.first, point, frame=f1)
    s2 = support_at(pair.second, point, frame=f2)
    d = difference_tensors(pair, point, frames=(f1, f2))
    mu_sum = d.mu + d.mu_tilde
    if np.any(np.abs(mu_sum) < 1e-8):
        raise PairError("mu + mu~ vanishes; the W formula divides by it")
    phi_hess = s2.rho_hess - s1.rho_hess
    lhs = d.w_diff * mu_sum[..., None, None]
    rhs = 2.0 * phi_hess + d.h_bar * (d.mu - d.mu_tilde)[..., None, None]
    scale = np.maximum(1.0, np.maximum(
        np.max(np.abs(lhs), axis=(-1, -2)), np.max(np.abs(rhs), axis=(-1, -2))))
    return np.max(np.abs(lhs - rhs), axis=(-1, -2)) / scale


def _cofactor_trace(hbar, w):
    """det(hbar) hbar^{ij} w_ij without inverting:
    hbar_11 w_22 + hbar_22 w_11 - 2 hbar_12 w_12."""
    return (hbar[..., 0, 0] * w[..., 1, 1] + hbar[..., 1, 1] * w[..., 0, 0]
            - 2.0 * hbar[..., 0, 1] * w[..., 0, 1])


def verify_gauss_trace_and_codazzi(pair, point):
    """(trace residual, Codazzi residual) of the difference form W.

    The trace uses hbar^{ij} W_ij when hbar is safely invertible and the
    equivalent cofactor form otherwise.  Codazzi compares the covariant
    derivatives W_{ij,k} and W_{ik,j}, each surface differentiating its own
    second form.
    """
    f1 = frame_at(pair.first, point, order=3)
    f2 = frame_at(pair.second, point, order=3)
    d = difference_tensors(pair, point, frames=(f1, f2))

    hbar = d.h_bar
    det_hbar = np.linalg.det(hbar)
    scale_h = np.max(np.abs(hbar), axis=(-1, -2)) ** 2
    singular = np.abs(det_hbar) <= SINGULAR_HBAR_RTOL * np.maximum(scale_h, 1.0)
    cof = _cofactor_trace(hbar, d.w_diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        proper = cof / det_hbar
    trace = np.where(singular, cof, proper)
    w_scale = np.maximum(1.0, np.max(np.abs(d.w_diff), axis=(-1, -2)))
    trace_res = np.abs(trace) / w_scale

    nabla_w = (second_form_derivatives(pair.second, point, frame=f2)
               - second_form_derivatives(pair.first, point, frame=f1))
    asym = nabla_w - np.swapaxes(nabla_w, -3, -2)
    nw_scale = np.maximum(1.0, np.max(np.abs(nabla_w), axis=(-1, -2, -3)))
    codazzi_res = np.max(np.abs(asym), axis=(-1, -2, -3)) / nw_scale
    return trace_res, codazzi_res


# ---------------------------------------------------------------------------
# energy inner product
# ---------------------------------------------------------------------------

def _tensor_field_values(alpha, points, frame):
    if callable(alpha):
        return np.asarray(alpha(points, frame), dtype=float)
    arr = np.asarray(alpha, dtype=float)
    return np.broadcast_to(arr, points.shape[:-1] + arr.shape[-2:])


def energy_integrand(pair, points, alpha_values, beta_values=None, frames=None):
    """Pointwise integrand of the energy pairing (without the volume factor):
    det(hbar)/det(g) hbar^{ij} hbar^{kl} a_ik b_jl (mu + mu~).

    For a = b this equals det(hbar)/det(g) tr((hbar^{-1} a)^2) (mu + mu~),
    which is non-negative whenever det(hbar) > 0 and mu + mu~ > 0.
    """
    f1, f2 = frames if frames is not None else _pair_frames(pair, points)
    d = difference_tensors(pair, points, frames=(f1, f2))
    beta_values = alpha_values if beta_values is None else beta_values
    det_hbar = np.linalg.det(d.h_bar)
    hbar_inv = np.linalg.inv(d.h_bar)
    contraction = np.einsum("...ij,...kl,...ik,...jl->...",
                            hbar_inv, hbar_inv, alpha_values, beta_values)
    return (det_hbar / f1.det_metric) * contraction * (d.mu + d.mu_tilde)


def energy_inner_product(pair, alpha, beta, grid=(64, 8), nodes=16):
    """Energy pairing of two symmetric 2-tensor fields over the chart.

    ``alpha``/``beta`` are constant (2, 2) arrays or callables
    ``f(points, frame) -> (..., 2, 2)``.  Quadrature is a periodic trapezoid
    in periodic directions and composite Gauss-Legendre (``nodes`` per cell,
    ``grid[i]`` cells) otherwise.  Raises :class:`EnergyPositivityError`
    outside the positivity regime.
    """
    imm = pair.first
    if imm.dim != 2:
        raise PairError("the energy pairing is implemented for n = 2")
    axes, weights = [], []
    for i in range(2):
        lo, hi = imm.domain[i]
        if imm.periodic[i]:
            m = grid[i]
            axes.append(lo + (hi - lo) * np.arange(m) / m)
            weights.append(np.full(m, (hi - lo) / m))
        else:
            x, w = gauss_legendre_nodes(lo, hi, cells=grid[i], nodes=nodes)
            axes.append(x)
            weights.append(w)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    w2d = weights[0][:, None] * weights[1][None, :]

    f1, f2 = _pair_frames(pair, pts)
    d = difference_tensors(pair, pts, frames=(f1, f2))
    det_hbar = np.linalg.det(d.h_bar)
    mu_sum = d.mu + d.mu_tilde
    if np.any(det_hbar <= 0.0) or np.any(mu_sum <= 0.0):
        raise EnergyPositivityError(
            "energy pairing needs det(hbar) > 0 and mu + mu~ > 0 on the "
            f"grid (min det hbar = {float(np.min(det_hbar)):.3e}, "
            f"min mu sum = {float(np.min(mu_sum)):.3e})")

    av = _tensor_field_values(alpha, pts, f1)
    bv = _tensor_field_values(beta, pts, f1)
    integrand = energy_integrand(pair, pts, av, bv, frames=(f1, f2))
    return float(np.sum(integrand * np.sqrt(f1.det_metric) * w2d))


# ---------------------------------------------------------------------------
# pointwise cofactor-divergence identity
# ---------------------------------------------------------------------------

def cofactor_divergence_identity(h_bar, w):
    """Residual of the algebraic identity behind the divergence structure of
    the energy pairing: for symmetric 2x2 ``h_bar`` (det != 0) and symmetric
    ``w`` with hbar^{ij} w_ij = 0,

        det(hbar) hbar^{-1} w hbar^{-1} = [[-w_22, w_12], [w_12, -w_11]].

    Returns the max componentwise residual; raises when the trace-free
    precondition fails.
    """
    hb = np.asarray(h_bar, dtype=float)
    ww = np.asarray(w, dtype=float)
    det = np.linalg.det(hb)
    if np.any(np.abs(det) < 1e-14):
        raise PairError("h_bar must be invertible")
    trace = _cofactor_trace(hb, ww) / det
    scale = np.maximum(1.0, np.max(np.abs(ww), axis=(-1, -2)))
    if np.any(np.abs(trace) > 1e-9 * scale):
        raise PairError("w is not trace-free with respect to h_bar")
    hb_inv = np.linalg.inv(hb)
    lhs = det[..., None, None] * (hb_inv @ ww @ hb_inv)
    rhs = np.empty_like(lhs)
    rhs[..., 0, 0] = -ww[..., 1, 1]
    rhs[..., 0, 1] = ww[..., 0, 1]
    rhs[..., 1, 0] = ww[..., 0, 1]
    rhs[..., 1, 1] = -ww[..., 0, 0]
    return np.max(np.abs(lhs - rhs), axis=(-1, -2))
