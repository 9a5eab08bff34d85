"""Infinitesimal-rigidity machinery for surfaces in R^3.

A deformation field tau solves the linearized isometry equation when
dr . dtau = 0.  Every such field has a rotation vector Y with
dtau = Y x dr; the derivative of Y is tangential and is encoded by a
symmetric tensor w via

    Y_1 = (-w_12 r_1 + w_11 r_2) / sqrt(det g)
    Y_2 = (-w_22 r_1 + w_21 r_2) / sqrt(det g),

which for genuine flexes is h-trace-free and Codazzi.  With phi = r . tau
and nu = 2 (phi - grad phi . grad rho) the tensor satisfies the pointwise
relation

    w_ij = ( h_ij nu / (2 mu) - phi_{i,j} ) / mu        (mu != 0).

The discrete side assembles the linearized isometry operator on a chart
grid with difference stencils shared between r and tau, which puts every
trivial motion tau = A r + b (A skew) in the exact kernel; kernel size and
spectral gap of the assembled matrix then certify rigidity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import jets as jt
from .darboux import SUPPORT_DEGENERATE_TOL, support_at
from .expressions import evaluate_jet, parse_expression
from .geometry import frame_at, sample_grid
from .jets import Jet, derivative_view
from .linalg import singular_values

__all__ = [
    "FlexError",
    "TrivialMotion",
    "ExpressionField",
    "RotationData",
    "WTensor",
    "PhiRelationResult",
    "ClosednessResult",
    "FlexOperator",
    "KernelReport",
    "field_jets",
    "first_order_residual",
    "rotation_data",
    "w_tensor",
    "phi_relation_residual",
    "closed_one_form_residual",
    "boundary_adapted_field",
    "assemble_flex_operator",
    "kernel_dimension",
    "random_trivial_motion",
    "load_field",
    "trivial_motion_count",
]

MAX_UNKNOWNS = 20000
FLEX_RESIDUAL_TOL = 1e-8


class FlexError(ValueError):
    pass


def trivial_motion_count(ambient_dim):
    """Skew matrices plus translations: A(A-1)/2 + A = A(A+1)/2 for ambient
    dimension A, the expected kernel size of a rigid closed hypersurface."""
    return ambient_dim * (ambient_dim + 1) // 2


# ---------------------------------------------------------------------------
# deformation fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrivialMotion:
    """tau = A r + b with A exactly skew."""

    a_matrix: tuple
    offset: tuple

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise FlexError("A must be square")
        if not np.array_equal(a, -a.T):
            raise FlexError("A must be exactly skew-symmetric")
        if len(self.offset) != a.shape[0]:
            raise FlexError("offset length must match A")
        object.__setattr__(self, "a_matrix", tuple(map(tuple, a.tolist())))
        object.__setattr__(self, "offset", tuple(float(b) for b in self.offset))

    @property
    def matrix(self):
        return np.asarray(self.a_matrix, dtype=float)

    @property
    def vector(self):
        return np.asarray(self.offset, dtype=float)

    @classmethod
    def from_axis(cls, axis, offset=None):
        """3D rotation generator a x r + b from an axis vector a."""
        a1, a2, a3 = (float(v) for v in axis)
        mat = ((0.0, -a3, a2), (a3, 0.0, -a1), (-a2, a1, 0.0))
        off = (0.0, 0.0, 0.0) if offset is None else tuple(offset)
        return cls(mat, off)


@dataclass(frozen=True)
class ExpressionField:
    """Deformation field given componentwise by chart expressions."""

    components: tuple


def random_trivial_motion(rng, ambient_dim=3, scale=1.0):
    raw = rng.standard_normal((ambient_dim, ambient_dim)) * scale
    return TrivialMotion(tuple(map(tuple, (raw - raw.T).tolist())),
                         tuple(rng.standard_normal(ambient_dim) * scale))


def load_field(source, dim):
    """Field from the JSON schema: {"trivial": {"A": ..., "b": ...}} or
    {"components": [expr, ...]}."""
    if isinstance(source, (TrivialMotion, ExpressionField)):
        return source
    if "trivial" in source:
        spec = source["trivial"]
        return TrivialMotion(tuple(map(tuple, spec["A"])), tuple(spec["b"]))
    if "components" in source:
        return ExpressionField(tuple(
            parse_expression(c, dim) if isinstance(c, str) else c
            for c in source["components"]))
    raise FlexError("field definition needs 'trivial' or 'components'")


@dataclass
class FieldJets:
    """Stacked jets of an ambient vector field along the chart."""

    value: np.ndarray             # (..., A)
    grad: np.ndarray              # (..., A, n)
    hess: Optional[np.ndarray]    # (..., A, n, n)
    third: Optional[np.ndarray]


def field_jets(immersion, fld, point, order=2):
    """Evaluate a deformation field with derivatives along the chart."""
    pts = np.asarray(point, dtype=float)
    if isinstance(fld, TrivialMotion):
        comp = [evaluate_jet(c, pts, order=order) for c in immersion.components]
        a, b = fld.matrix, fld.vector
        value = np.stack([j.value for j in comp], axis=-1) @ a.T + b
        grad = np.einsum("ab,...bi->...ai",
                         a, np.stack([j.grad for j in comp], axis=-2))
        hess = third = None
        if order >= 2:
            hess = np.einsum("ab,...bij->...aij",
                             a, np.stack([j.hess for j in comp], axis=-3))
        if order >= 3:
            third = np.einsum("ab,...bijk->...aijk",
                              a, np.stack([j.third for j in comp], axis=-4))
        return FieldJets(value, grad, hess, third)
    if isinstance(fld, ExpressionField):
        comp = [evaluate_jet(c, pts, order=order) for c in fld.components]
        return FieldJets(
            np.stack([j.value for j in comp], axis=-1),
            np.stack([j.grad for j in comp], axis=-2),
            np.stack([j.hess for j in comp], axis=-3) if order >= 2 else None,
            np.stack([j.third for j in comp], axis=-4) if order >= 3 else None)
    raise FlexError(f"unknown field type {type(fld)!r}")


def first_order_residual(immersion, fld, point):
    """Symmetric residual r_i . tau_j + r_j . tau_i; zero for flexes."""
    fr = frame_at(immersion, point, order=2)
    fj = field_jets(immersion, fld, point, order=1)
    s = np.einsum("...ai,...aj->...ij", fr.tangents, fj.grad)
    return s + np.swapaxes(s, -1, -2)


# ---------------------------------------------------------------------------
# generic jet-arithmetic pipeline (scalars may be Jets of any order)
# ---------------------------------------------------------------------------

def _dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def _cross3(u, v):
    return [u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0]]


def _component_jets3(immersion, fld, point, order):
    """Ambient components of r and tau as jets of ``order``; returns
    (r, r_i, tau, tau_i) with r_i[a][i] a jet one order lower is NOT done
    here; callers use derivative views."""
    pts = np.asarray(point, dtype=float)
    r = [evaluate_jet(c, pts, order=order) for c in immersion.components]
    if isinstance(fld, TrivialMotion):
        a, b = fld.matrix, fld.vector
        tau = []
        for al in range(len(r)):
            acc = Jet.constant(b[al], r[0].nvars, order, pts.shape[:-1])
            for be in range(len(r)):
                if a[al, be] != 0.0:
                    acc = acc + a[al, be] * r[be]
            tau.append(acc)
    else:
        tau = [evaluate_jet(c, pts, order=order) for c in fld.components]
    return r, tau


@dataclass
class RotationData:
    u: np.ndarray                 # (..., 2), u_i = n . tau_i
    w_scalar: np.ndarray
    y: np.ndarray                 # (..., 3) rotation vector
    dy: np.ndarray                # (..., 2, 3), Y_k
    a_mixed: np.ndarray           # (..., 2, 2), Y_k = a_k^l r_l
    rotation_residual: np.ndarray  # max_i |tau_i - Y x r_i| (flex health)
    tangency_residual: np.ndarray  # max_k |n . Y_k|
    is_flex: np.ndarray


def rotation_data(immersion, fld, point, pipeline=None):
    """Rotation vector Y with dtau = Y x dr, its derivative, and the mixed
    tensor a_k^l.  Non-flex inputs are flagged through ``is_flex`` and the
    rotation residual instead of raising."""
    pipe = pipeline if pipeline is not None else _rotation_pipeline(
        immersion, fld, point)
    return pipe.data


class _RotationPipeline:
    """Shared jet-arithmetic computation of the rotation quantities.

    Everything is computed with order-2 jets so that first derivatives of
    derived scalars (and hence second derivatives of Y) stay exact; the
    w-tensor covariant derivative consumes them via order-1 views.
    """

    def __init__(self, immersion, fld, point):
        if immersion.dim != 2:
            raise FlexError("rotation data is defined for surfaces (n = 2)")
        self.immersion = immersion
        self.point = np.asarray(point, dtype=float)
        r, tau = _component_jets3(immersion, fld, point, order=3)
        sign = -1.0 if immersion.orientation == "inward" else 1.0

        r2 = [c.truncate(2) for c in r]
        tau2 = [c.truncate(2) for c in tau]
        ri = [[derivative_view(c, i) for c in r] for i in range(2)]   # order 2
        taui = [[derivative_view(c, i) for c in tau] for i in range(2)]

        g = [[_dot(ri[i], ri[j]) for j in range(2)] for i in range(2)]
        detg = g[0][0] * g[1][1] - g[0][1] * g[0][1]
        sqrtg = jt.sqrt(detg)
        cross = _cross3(ri[0], ri[1])
        normal = [sign * c / sqrtg for c in cross]

        u = [_dot(normal, taui[i]) for i in range(2)]
        w = (_dot(ri[1], taui[0]) - _dot(ri[0], taui[1])) / (2.0 * sqrtg)
        y = [(u[1] * ri[0][a] - u[0] * ri[1][a]) / sqrtg + w * normal[a]
             for a in range(3)]

        self.r = r2
        self.ri = ri
        self.tau = tau2
        self.taui = taui
        self.g = g
        self.detg = detg
        self.sqrtg = sqrtg
        self.normal = normal
        self.u = u
        self.w = w
        self.y = y

        # order-1 views of Y_k and the frame for downstream derivatives
        self.yk = [[derivative_view(y[a], k) for a in range(3)]
                   for k in range(2)]
        self.ri1 = [[c.truncate(1) for c in ri[i]] for i in range(2)]
        g1 = [[c.truncate(1) for c in row] for row in g]
        det1 = self.detg.truncate(1)
        self.ginv1 = [[g1[1][1] / det1, -1.0 * g1[0][1] / det1],
                      [-1.0 * g1[0][1] / det1, g1[0][0] / det1]]
        self.sqrtg1 = self.sqrtg.truncate(1)

        # a_k^l with first derivatives: Y_k = a_k^l r_l
        self.a_mixed1 = [
            [
                _dot(self.yk[k], self.ri1[0]) * self.ginv1[0][l]
                + _dot(self.yk[k], self.ri1[1]) * self.ginv1[1][l]
                for l in range(2)
            ]
            for k in range(2)
        ]

        self.data = self._collect()

    def _collect(self):
        u_val = np.stack([c.value for c in self.u], axis=-1)
        w_val = self.w.value
        y_val = np.stack([c.value for c in self.y], axis=-1)
        dy_val = np.stack(
            [np.stack([c.value for c in row], axis=-1) for row in self.yk],
            axis=-2)
        a_val = np.stack(
            [np.stack([c.value for c in row], axis=-1) for row in self.a_mixed1],
            axis=-2)

        ri_val = [np.stack([c.value for c in row], axis=-1) for row in self.ri]
        taui_val = [np.stack([c.value for c in row], axis=-1)
                    for row in self.taui]
        res = []
        for i in range(2):
            cr = np.cross(y_val, ri_val[i])
            res.append(np.max(np.abs(taui_val[i] - cr), axis=-1))
        rotation_residual = np.maximum(res[0], res[1])
        scale = max(1.0, float(np.max(np.abs(y_val))),
                    max(float(np.max(np.abs(t))) for t in taui_val))
        n_val = np.stack([c.value for c in self.normal], axis=-1)
        tangency = np.max(np.abs(np.einsum("...a,...ka->...k", n_val, dy_val)),
                          axis=-1)
        return RotationData(
            u=u_val, w_scalar=w_val, y=y_val, dy=dy_val, a_mixed=a_val,
            rotation_residual=rotation_residual,
            tangency_residual=tangency,
            is_flex=rotation_residual <= FLEX_RESIDUAL_TOL * scale)


def _rotation_pipeline(immersion, fld, point):
    return _RotationPipeline(immersion, fld, point)


@dataclass
class WTensor:
    w: np.ndarray                 # (..., 2, 2) symmetric
    w_cov: np.ndarray             # (..., k, i, j) covariant derivatives w_{ij,k}
    symmetry_residual: np.ndarray
    trace_residual: np.ndarray    # h-trace (cofactor form when h singular)
    codazzi_residual: np.ndarray


def w_tensor(immersion, fld, point, pipeline=None):
    """Extract w_ij from the rotation derivative, with covariant derivatives
    and the trace/Codazzi health residuals."""
    pipe = pipeline if pipeline is not None else _rotation_pipeline(
        immersion, fld, point)
    sq = pipe.sqrtg1
    a = pipe.a_mixed1
    w11 = sq * a[0][1]
    w12 = -1.0 * sq * a[0][0]
    w21 = sq * a[1][1]
    w22 = -1.0 * sq * a[1][0]

    w_val = np.stack([
        np.stack([w11.value, w12.value], axis=-1),
        np.stack([w21.value, w22.value], axis=-1)], axis=-2)
    dw = np.stack([
        np.stack([w11.grad, w12.grad], axis=-2),
        np.stack([w21.grad, w22.grad], axis=-2)], axis=-3)
    # dw[..., i, j, k] = d_k w_ij -> reorder to (..., k, i, j)
    dw = np.moveaxis(dw, -1, -3)

    sym_res = np.abs(w_val[..., 0, 1] - w_val[..., 1, 0])
    w_sym = 0.5 * (w_val + np.swapaxes(w_val, -1, -2))

    fr = frame_at(immersion, point, order=2)
    gamma = fr.christoffels
    corr = np.einsum("...lki,...lj->...kij", gamma, w_sym)
    w_cov = dw - corr - np.swapaxes(corr, -1, -2)

    h = fr.second_form
    det_h = np.linalg.det(h)
    cof = (h[..., 0, 0] * w_sym[..., 1, 1] + h[..., 1, 1] * w_sym[..., 0, 0]
           - 2.0 * h[..., 0, 1] * w_sym[..., 0, 1])
    h_scale = np.maximum(np.max(np.abs(h), axis=(-1, -2)) ** 2, 1e-30)
    with np.errstate(divide="ignore", invalid="ignore"):
        proper = cof / det_h
    trace = np.where(np.abs(det_h) <= 1e-10 * h_scale, cof, proper)
    w_scale = np.maximum(1.0, np.max(np.abs(w_sym), axis=(-1, -2)))
    trace_res = np.abs(trace) / w_scale

    asym = w_cov - np.swapaxes(w_cov, -3, -2)
    cz_scale = np.maximum(1.0, np.max(np.abs(w_cov), axis=(-1, -2, -3)))
    codazzi = np.max(np.abs(asym), axis=(-1, -2, -3)) / cz_scale
    return WTensor(w=w_sym, w_cov=w_cov, symmetry_residual=sym_res,
                   trace_residual=trace_res, codazzi_residual=codazzi)


@dataclass
class PhiRelationResult:
    max_residual: np.ndarray
    skipped: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    b_field_residual: np.ndarray  # reconstruction check of b = tau - Y x r


def phi_relation_residual(immersion, fld, point):
    """Residual of  w_ij mu^2 + phi_{i,j} mu - h_ij nu / 2  (relative),
    with phi = r . tau and nu = 2 (phi - grad phi . grad rho).

    Also verifies the normal decomposition of b = tau - Y x r.  Points with
    |mu| < 1e-8 are flagged skipped.
    """
    pipe = _rotation_pipeline(immersion, fld, point)
    wt = w_tensor(immersion, fld, point, pipeline=pipe)
    fr = frame_at(immersion, point, order=2)
    sup = support_at(immersion, point, frame=fr)
    fj = field_jets(immersion, fld, point, order=2)

    pos, tang = fr.position, fr.tangents
    phi = np.einsum("...a,...a->...", pos, fj.value)
    dphi = (np.einsum("...ai,...a->...i", tang, fj.value)
            + np.einsum("...a,...ai->...i", pos, fj.grad))
    ddphi = (np.einsum("...aij,...a->...ij", fr.d2, fj.value)
             + np.einsum("...ai,...aj->...ij", tang, fj.grad)
             + np.einsum("...aj,...ai->...ij", tang, fj.grad)
             + np.einsum("...a,...aij->...ij", pos, fj.hess))
    phi_hess = ddphi - np.einsum("...kij,...k->...ij", fr.christoffels, dphi)

    grad_pair = np.einsum("...i,...ij,...j->...",
                          dphi, fr.metric_inv, sup.grad_rho)
    nu = 2.0 * (phi - grad_pair)
    mu = sup.mu

    lhs = wt.w * (mu**2)[..., None, None] + phi_hess * mu[..., None, None]
    rhs = 0.5 * fr.second_form * nu[..., None, None]
    scale = np.maximum(1.0, np.maximum(
        np.max(np.abs(lhs), axis=(-1, -2)), np.max(np.abs(rhs), axis=(-1, -2))))
    res = np.max(np.abs(lhs - rhs), axis=(-1, -2)) / scale
    skipped = np.abs(mu) < SUPPORT_DEGENERATE_TOL

    # b = tau - Y x r should equal g^{ij} phi_i r_j + (phi - grad phi .
    # grad rho) / mu * n wherever mu is not degenerate
    y = rotation_data(immersion, fld, point, pipeline=pipe).y
    b_vec = fj.value - np.cross(y, pos)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(skipped, 0.0, (phi - grad_pair)
                        / np.where(skipped, 1.0, mu))
    recon = (np.einsum("...ij,...j,...ai->...a", fr.metric_inv, dphi, tang)
             + beta[..., None] * fr.normal)
    b_res = np.max(np.abs(b_vec - recon), axis=-1)
    b_res = np.where(skipped, 0.0, b_res)
    return PhiRelationResult(max_residual=np.where(skipped, 0.0, res),
                             skipped=skipped, phi=phi, nu=nu,
                             b_field_residual=b_res)


# ---------------------------------------------------------------------------
# closed one-form  omega = dY . E
# ---------------------------------------------------------------------------

@dataclass
class ClosednessResult:
    max_curl: float
    precondition_residual: float
    omega_scale: float


def closed_one_form_residual(immersion, tau_field, e_field, grid=(48, 48)):
    """Check that omega_k = Y_k . E is closed on a chart grid.

    ``e_field`` must itself satisfy dr . dE = 0 (checked first; rejected via
    :class:`FlexError` otherwise).  The curl is formed with 4th-order
    differences, wrapping periodic directions and restricting to interior
    nodes otherwise.
    """
    pts = sample_grid(immersion, grid, margin=0.02)
    e_res = first_order_residual(immersion, e_field, pts)
    e_fj = field_jets(immersion, e_field, pts, order=1)
    e_scale = max(1.0, float(np.max(np.abs(e_fj.grad))))
    pre = float(np.max(np.abs(e_res))) / e_scale
    if pre > FLEX_RESIDUAL_TOL:
        raise FlexError(
            f"E is not an admissible field: dr . dE residual {pre:.3e}")

    rot = rotation_data(immersion, tau_field, pts)
    omega = np.einsum("...ka,...a->...k", rot.dy, e_fj.value)

    spacings = [float(pts[1, 0, 0] - pts[0, 0, 0]),
                float(pts[0, 1, 1] - pts[0, 0, 1])]

    d1_omega2 = _grid_derivative(omega[..., 1], 0, spacings[0],
                                 immersion.periodic[0])
    d2_omega1 = _grid_derivative(omega[..., 0], 1, spacings[1],
                                 immersion.periodic[1])
    curl = d1_omega2 - d2_omega1
    # restrict to nodes where both stencils were applied
    mask = np.ones(curl.shape, dtype=bool)
    for axis_idx, per in enumerate(immersion.periodic):
        if not per:
            sl = [slice(None)] * curl.ndim
            sl[axis_idx] = slice(2, -2)
            keep = np.zeros(curl.shape, dtype=bool)
            keep[tuple(sl)] = True
            mask &= keep
    max_curl = float(np.max(np.abs(curl[mask]))) if np.any(mask) else 0.0
    return ClosednessResult(max_curl=max_curl, precondition_residual=pre,
                            omega_scale=float(np.max(np.abs(omega))))


def _grid_derivative(values, axis, spacing, periodic):
    """4th-order centered difference along ``axis``; non-periodic edges are
    left untouched (callers mask them)."""
    v = np.moveaxis(values, axis, 0)
    out = np.zeros_like(v)
    if periodic:
        out = (np.roll(v, 2, axis=0) - 8.0 * np.roll(v, 1, axis=0)
               + 8.0 * np.roll(v, -1, axis=0) - np.roll(v, -2, axis=0)) / 12.0
    else:
        out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / 12.0
    return np.moveaxis(out, 0, axis) / spacing


# ---------------------------------------------------------------------------
# boundary-adapted auxiliary field
# ---------------------------------------------------------------------------

def boundary_adapted_field(n1, n2, mu1, mu2):
    """Solve the 2x2 system pairing two boundary-plane normals with their
    support values and return (c1, c2, E) where

        E(x) = (n1 x n2) x (x + c1 n1 + c2 n2)

    is a trivial motion field (hence dr . dE = 0 exactly)."""
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    axis = np.cross(n1, n2)
    if np.linalg.norm(axis) <= 1e-10:
        raise FlexError("boundary normals are parallel; the pairing system "
                        "is singular")
    c = float(n1 @ n2)
    mat = np.array([[1.0, c], [c, 1.0]])
    sol = np.linalg.solve(mat, -np.array([mu1, mu2], dtype=float))
    c1, c2 = float(sol[0]), float(sol[1])
    offset_point = c1 * n1 + c2 * n2
    motion = TrivialMotion.from_axis(axis, offset=np.cross(axis, offset_point))
    return c1, c2, motion


# ---------------------------------------------------------------------------
# discrete operator and kernel certification
# ---------------------------------------------------------------------------

@dataclass
class FlexOperator:
    """Dense assembled linearized-isometry operator over grid unknowns.

    Rows: for every node and index pair (i <= j), the shared-stencil
    residual D_i r . D_j tau + D_j r . D_i tau, where D is the sum of a
    4th-order centered difference (where its 5-point window fits) and a
    2-point one-sided difference (forward where possible, else backward).
    Sharing the stencils between r and tau makes every trivial motion an
    exact kernel vector; the one-sided part removes the checkerboard modes
    centered stencils cannot see.

    On pole-closed charts the unknowns of the pole-adjacent rings are
    restricted to ring Fourier frequencies {0, 1}: any field smooth across
    the pole has O(spacing^2) content beyond those on a ring of
    near-degenerate radius, while trivial motions have exactly none, so the
    restriction removes the under-resolved cap oscillations without
    touching the certified kernel.  ``free_unknowns``/``ring_blocks``
    describe the orthonormal unknown basis (both None without poles).
    """

    matrix: np.ndarray            # rows x reduced unknowns
    immersion: object
    grid: tuple
    nodes: np.ndarray             # (ns, nt, 2)
    positions: np.ndarray         # (ns, nt, 3)
    row_count: int
    unknown_count: int            # reduced count (matrix columns)
    grid_unknowns: int            # 3 * number of nodes
    free_unknowns: Optional[np.ndarray] = None    # indices kept verbatim
    ring_blocks: Optional[list] = None            # [(indices, basis_q)]
    node_matrix: Optional[np.ndarray] = None      # pre-reduction operator

    def reduce_vector(self, vec):
        """Grid vector -> reduced coordinates (orthonormal projection)."""
        if self.free_unknowns is None:
            return vec
        parts = [vec[self.free_unknowns]]
        parts.extend(q.T @ vec[idx] for idx, q in self.ring_blocks)
        return np.concatenate(parts)

    def evaluate_field(self, fld):
        """Coordinates of a deformation field on the grid (reduced basis
        when a pole restriction is active)."""
        fj = field_jets(self.immersion, fld, self.nodes, order=1)
        return self.reduce_vector(fj.value.reshape(-1))

    def apply(self, vector):
        return self.matrix @ vector


def _grid_axes(immersion, grid):
    ns, nt = grid
    (slo, shi), (tlo, thi) = immersion.domain
    if not immersion.periodic[0] and immersion.periodic[1]:
        raise FlexError("grids expect the periodic axis first when present")
    if immersion.periodic[0]:
        s_axis = slo + (shi - slo) * np.arange(ns) / ns
    else:
        s_axis = np.linspace(slo, shi, ns)
    closed = immersion.closed_poles
    if closed and any(closed):
        if not immersion.periodic[0]:
            raise FlexError("pole closure needs a periodic first axis")
        if ns % 2:
            raise FlexError("pole closure needs an even periodic node count")
        h = (thi - tlo) / nt
        t_axis = tlo + (np.arange(nt) + 0.5) * h
    else:
        t_axis = np.linspace(tlo, thi, nt)
    return s_axis, t_axis


def _neighbor_indices(immersion, grid, di, dj):
    """Vectorized neighbor lookup (i+di, j+dj) honoring periodic wrap and
    pole closure; out-of-range indices on bounded axes are clamped (the
    stencil group masks guarantee they are never used)."""
    ns, nt = grid
    ii, jj = np.meshgrid(np.arange(ns), np.arange(nt), indexing="ij")
    i2 = ii + di
    j2 = jj + dj
    if immersion.periodic[0]:
        i2 = np.mod(i2, ns)
    else:
        i2 = np.clip(i2, 0, ns - 1)
    closed = immersion.closed_poles or (False, False)
    if immersion.periodic[1]:
        j2 = np.mod(j2, nt)
    else:
        below = j2 < 0
        above = j2 > nt - 1
        if np.any(below) and closed[0]:
            j2 = np.where(below, -1 - j2, j2)
            i2 = np.where(below, np.mod(i2 + ns // 2, ns), i2)
        if np.any(above) and closed[1]:
            j2 = np.where(above, 2 * nt - 1 - j2, j2)
            i2 = np.where(above, np.mod(i2 + ns // 2, ns), i2)
        j2 = np.clip(j2, 0, nt - 1)
    return (i2 * nt + j2).reshape(-1)


def _direction_stencils(immersion, grid, axis):
    """Per-direction stencil entry groups: list of (mask, entries) where
    entries are (offset, coeff) pairs and mask flags the nodes the group
    applies to.  Offsets are along ``axis``."""
    ns, nt = grid
    m = (ns, nt)[axis]
    (lo, hi) = immersion.domain[axis]
    periodic = immersion.periodic[axis]
    closed = immersion.closed_poles or (False, False)
    if periodic or (axis == 1 and any(closed)):
        spacing = (hi - lo) / m        # node-per-period / pole-offset grid
    else:
        spacing = (hi - lo) / (m - 1)

    idx = np.arange(m)
    ones = np.ones(m, dtype=bool)

    def broadcast(mask_1d):
        full = np.zeros((ns, nt), dtype=bool)
        if axis == 0:
            full[mask_1d, :] = True
        else:
            full[:, mask_1d] = True
        return full.reshape(-1)

    centered = [(-2, 1.0 / (12 * spacing)), (-1, -8.0 / (12 * spacing)),
                (1, 8.0 / (12 * spacing)), (2, -1.0 / (12 * spacing))]
    forward = [(0, -1.0 / spacing), (1, 1.0 / spacing)]
    backward = [(-1, -1.0 / spacing), (0, 1.0 / spacing)]

    if m < 5:
        raise FlexError("grid too coarse for the 5-point stencil "
                        f"(axis {axis} has {m} nodes)")
    groups = []
    if periodic:
        groups.append((broadcast(ones), centered))
        groups.append((broadcast(ones), forward))
    elif axis == 1 and any(closed):
        # stencils may cross a closed pole but not an open edge
        fit_c = np.ones(m, dtype=bool)
        if not closed[0]:
            fit_c &= idx >= 2
        if not closed[1]:
            fit_c &= idx <= m - 3
        fit_f = np.ones(m, dtype=bool) if closed[1] else idx <= m - 2
        groups.append((broadcast(fit_c), centered))
        groups.append((broadcast(fit_f), forward))
        if np.any(~fit_f):
            groups.append((broadcast(~fit_f), backward))
        if closed[0]:
            # the forward difference reaches through the top pole on the
            # last ring but nothing short reaches through the bottom pole;
            # add the through-pole backward difference on the first ring to
            # pin cap modes that oscillate across it
            groups.append((broadcast(idx == 0), backward))
    else:
        fit_c = (idx >= 2) & (idx <= m - 3)
        fit_f = idx <= m - 2
        groups.append((broadcast(fit_c), centered))
        groups.append((broadcast(fit_f), forward))
        groups.append((broadcast(~fit_f), backward))
    return groups


def assemble_flex_operator(immersion, grid=(64, 32)):
    """Assemble the discrete linearized-isometry operator on ``grid``.

    The grid is node-per-period in periodic directions, endpoint-inclusive
    otherwise, and pole-offset (no node at the degenerate ends) on charts
    with ``closed_poles``; closure across poles is realized by the exact
    half-period wrap of the chart, which is verified numerically.
    """
    if immersion.dim != 2:
        raise FlexError("the flex operator is assembled for surfaces (n = 2)")
    ns, nt = grid
    n_nodes = ns * nt
    n_unknowns = 3 * n_nodes
    if n_unknowns > MAX_UNKNOWNS:
        raise FlexError(f"{n_unknowns} unknowns exceed the dense-solver "
                        f"limit {MAX_UNKNOWNS}")
    s_axis, t_axis = _grid_axes(immersion, grid)
    mesh = np.stack(np.meshgrid(s_axis, t_axis, indexing="ij"), axis=-1)
    positions = np.stack(
        [evaluate_jet(c, mesh, order=0).value for c in immersion.components],
        axis=-1)
    _validate_pole_wrap(immersion, grid, mesh, positions)
    flat_r = positions.reshape(n_nodes, 3)

    # per-direction stencil groups and the difference of r they induce
    groups = [_direction_stencils(immersion, grid, axis) for axis in range(2)]
    d_r = [np.zeros((n_nodes, 3)) for _ in range(2)]
    resolved = {}
    for axis in range(2):
        for mask, entries in groups[axis]:
            for off, coeff in entries:
                key = (off, 0) if axis == 0 else (0, off)
                if key not in resolved:
                    resolved[key] = _neighbor_indices(immersion, grid, *key)
                nb = resolved[key]
                if nb is None:
                    raise FlexError("stencil does not fit the grid")
                d_r[axis][mask] += coeff * flat_r[nb[mask]]

    matrix = np.zeros((n_unknowns, n_unknowns))
    pair_list = [(0, 0), (0, 1), (1, 1)]
    node_ids = np.arange(n_nodes)
    for pair_idx, (a, b) in enumerate(pair_list):
        rows = 3 * node_ids + pair_idx
        # row = D_a r . D_b tau + D_b r . D_a tau; within one scatter the
        # (row, col) pairs are unique, so fancy += is safe and fast
        for da, db in ((a, b), (b, a)):
            for mask, entries in groups[db]:
                active = node_ids[mask]
                for off, coeff in entries:
                    key = (off, 0) if db == 0 else (0, off)
                    nb = resolved[key][mask]
                    for alpha in range(3):
                        matrix[rows[mask], 3 * nb + alpha] += (
                            coeff * d_r[da][active, alpha])

    free, blocks = _pole_ring_basis(immersion, grid, s_axis)
    if free is None:
        reduced = matrix
    else:
        parts = [matrix[:, free]]
        parts.extend(matrix[:, idx] @ q for idx, q in blocks)
        reduced = np.concatenate(parts, axis=1)
    return FlexOperator(matrix=reduced, immersion=immersion, grid=grid,
                        nodes=mesh, positions=positions,
                        row_count=n_unknowns,
                        unknown_count=reduced.shape[1],
                        grid_unknowns=n_unknowns,
                        free_unknowns=free, ring_blocks=blocks,
                        node_matrix=matrix)


def _pole_ring_basis(immersion, grid, s_axis):
    """Orthonormal unknown basis restricting each pole-adjacent ring to the
    span of {1, cos s, sin s} per ambient component; identity elsewhere.
    Returns (free_indices, [(ring_indices, ring_q)]) or (None, None)."""
    closed = immersion.closed_poles or (False, False)
    if not any(closed):
        return None, None
    ns, nt = grid
    rings = []
    if closed[0]:
        rings.append(0)
    if closed[1]:
        rings.append(nt - 1)
    raw = np.stack([np.ones(ns), np.cos(s_axis), np.sin(s_axis)], axis=1)
    ring_q, _ = np.linalg.qr(raw)               # (ns, 3) orthonormal

    n_unknowns = 3 * ns * nt
    free = np.ones(n_unknowns, dtype=bool)
    blocks = []
    for j in rings:
        for alpha in range(3):
            idx = 3 * (np.arange(ns) * nt + j) + alpha
            free[idx] = False
            blocks.append((idx, ring_q))
    return np.flatnonzero(free), blocks


def _validate_pole_wrap(immersion, grid, mesh, positions):
    closed = immersion.closed_poles or (False, False)
    if not any(closed):
        return
    ns, nt = grid
    (tlo, thi) = immersion.domain[1]
    h = (thi - tlo) / nt
    checks = []
    if closed[0]:
        checks.append((tlo - 0.5 * h, 0))
    if closed[1]:
        checks.append((thi + 0.5 * h, nt - 1))
    for t_ghost, j_real in checks:
        ghost_pts = np.stack(
            [mesh[:, 0, 0], np.full(ns, t_ghost)], axis=-1)
        ghost_pos = np.stack(
            [evaluate_jet(c, ghost_pts, order=0).value
             for c in immersion.components], axis=-1)
        wrapped = positions[np.mod(np.arange(ns) + ns // 2, ns), j_real]
        if float(np.max(np.abs(ghost_pos - wrapped))) > 1e-9:
            raise FlexError(
                "closed_poles is set but the chart does not wrap through "
                "the pole (half-period shift mismatch)")


# ---------------------------------------------------------------------------
# sector decomposition for charts of revolution
# ---------------------------------------------------------------------------

def _detect_rotational_symmetry(op, tol=1e-12):
    """Rotation R about the ambient z-axis with r(i+1, j) = R r(i, j) for
    the whole grid, or None.  Shared stencils make the assembled operator
    exactly equivariant under (shift in i, conjugation by R) whenever the
    samples satisfy this, which block-diagonalizes it by s-frequency."""
    immersion = op.immersion
    if not immersion.periodic[0]:
        return None
    ns = op.grid[0]
    delta = 2.0 * math.pi / ns
    lo, hi = immersion.domain[0]
    if abs((hi - lo) - 2.0 * math.pi) > 1e-12:
        return None
    c, s = math.cos(delta), math.sin(delta)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    shifted = np.roll(op.positions, -1, axis=0)
    err = np.max(np.abs(shifted - op.positions @ rot.T))
    scale = max(1.0, float(np.max(np.abs(op.positions))))
    return rot if err <= tol * scale else None


def _sector_singular_values(op, rot):
    """Singular values of the (pole-reduced) operator through the discrete
    Fourier block decomposition; equals the dense spectrum to rounding."""
    ns, nt = op.grid
    delta = 2.0 * math.pi / ns
    # eigenvectors of the component rotation and their integer frequencies
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    u = np.array([[inv_sqrt2, inv_sqrt2, 0.0],
                  [1j * inv_sqrt2, -1j * inv_sqrt2, 0.0],
                  [0.0, 0.0, 1.0]], dtype=complex)   # columns: e+, e-, ez
    eig = np.diag(u.conj().T @ rot @ u)
    freqs = np.round(np.angle(eig) / delta).astype(int)   # c_d per column
    if np.max(np.abs(eig - np.exp(1j * freqs * delta))) > 1e-10:
        raise FlexError("component rotation is not a grid rotation")

    a = op.node_matrix.reshape(ns, nt, 3, ns, nt, 3).astype(complex)
    a = np.fft.fft(a, axis=0, norm="ortho")       # rows -> sectors (F^H)
    a = np.fft.ifft(a, axis=3, norm="ortho")      # column nodes -> modes (F)
    a = np.einsum("rjpkqc,cd->rjpkqd", a, u)

    closed = op.immersion.closed_poles or (False, False)
    rings = [j for j, flag in ((0, closed[0]), (nt - 1, closed[1])) if flag]
    keep_raw = {0, 1, ns - 1}

    svals = []
    for m in range(ns):
        cols = []
        for d in range(3):
            k = (m + freqs[d]) % ns
            block = a[m, :, :, k, :, d]           # (nt, 3, nt)
            block = block.reshape(3 * nt, nt)
            keep = [j for j in range(nt)
                    if j not in rings or k in keep_raw]
            cols.append(block[:, keep])
        svals.append(scipy.linalg.svdvals(np.concatenate(cols, axis=1)))
    return np.sort(np.concatenate(svals))[::-1]


@dataclass
class KernelReport:
    dimension: int
    gap_ratio: float
    sigma_max: float
    kernel_sigma: float           # largest singular value counted as zero
    next_sigma: float             # smallest singular value above the cut
    rel_tol: float
    verdict: str
    expected_trivial: int = 6
    singular_values: Optional[np.ndarray] = None   # ascending

    def is_certificate(self):
        return self.verdict == "certified-rigid"


def kernel_dimension(op, rel_tol=1e-8, gap_requirement=10.0):
    """Count near-zero singular values of the assembled operator.

    dim = #(sigma <= rel_tol * sigma_max).  A rigidity certificate is
    issued only when dim equals the trivial-motion count and the spectral
    gap ratio sigma_(dim+1)/sigma_(dim) is at least ``gap_requirement``;
    without a clear gap the verdict is "indeterminate", never a false
    certificate.
    """
    if isinstance(op, FlexOperator):
        rot = (_detect_rotational_symmetry(op)
               if op.node_matrix is not None else None)
        if rot is not None:
            svals = _sector_singular_values(op, rot)
        else:
            svals = singular_values(op.matrix)
    else:
        svals = singular_values(np.asarray(op))
    asc = svals[::-1]
    smax = float(svals[0])
    if smax == 0.0:
        raise FlexError("operator is identically zero")
    cut = rel_tol * smax
    dim = int(np.sum(asc <= cut))
    kernel_sigma = float(asc[dim - 1]) if dim > 0 else 0.0
    next_sigma = float(asc[dim]) if dim < asc.size else float("inf")
    if dim == 0:
        gap = float("inf")
    else:
        gap = next_sigma / max(kernel_sigma, smax * 1e-300)
    expected = trivial_motion_count(3)
    if gap < gap_requirement:
        verdict = "indeterminate"
    elif dim == expected:
        verdict = "certified-rigid"
    elif dim > expected:
        verdict = "flexible"
    else:
        verdict = "indeterminate"
    return KernelReport(dimension=dim, gap_ratio=float(gap), sigma_max=smax,
                        kernel_sigma=kernel_sigma, next_sigma=next_sigma,
                        rel_tol=rel_tol, verdict=verdict,
                        expected_trivial=expected, singular_values=asc)
