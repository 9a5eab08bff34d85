"""Pointwise rigidity algebra for hypersurfaces in R^(n+1), n >= 3.

The rotation of a deformation field generalizes to a bivector field; its
chart derivative, expanded in the wedge frame built from the tangents and
the normal, has vanishing tangential-tangential components, and the
normal-tangent block defines the symmetric tensor w.  The homogeneous
linearized Gauss constraints

    h_kj w_il - h_lj w_ik = h_ki w_jl - h_li w_jk

over all index 4-tuples admit only w = 0 exactly when rank(h) >= 3, which
is the pointwise certificate this module tests, with a brute-force null
space as its own oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .jets import derivative_view
from .linalg import null_space, singular_values

__all__ = [
    "HighDimError",
    "RigidityInconsistencyError",
    "generalized_kronecker",
    "BivectorDecomposition",
    "decompose_rotation_bivector",
    "linearized_gauss_nullspace",
    "DRVerdict",
    "dr_rigidity_test",
    "random_symmetric_with_rank",
]


class HighDimError(ValueError):
    pass


class RigidityInconsistencyError(HighDimError):
    """The rank test and the null-space test disagree; this would contradict
    the pointwise rigidity dichotomy and aborts instead of guessing."""


def generalized_kronecker(upper, lower):
    """Antisymmetrized permutation symbol delta^{upper}_{lower} in {-1,0,1}.

    Equals the sign of the permutation mapping ``lower`` to ``upper``; zero
    when either tuple repeats an index or the index sets differ.
    """
    up = tuple(int(i) for i in upper)
    low = tuple(int(i) for i in lower)
    if len(up) != len(low):
        raise HighDimError("index tuples must have equal length")
    for i in (*up, *low):
        if i < 1:
            raise HighDimError(f"indices are 1-based, got {i}")
    if len(set(up)) != len(up) or len(set(low)) != len(low):
        return 0
    if set(up) != set(low):
        return 0
    # sign of the permutation sending low to up
    perm = [low.index(i) for i in up]
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle_len = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            cycle_len += 1
        if cycle_len % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# rotation bivector of a flex on a hypersurface
# ---------------------------------------------------------------------------

@dataclass
class BivectorDecomposition:
    rotation: np.ndarray          # (..., A, A) pointwise skew rotation matrix
    w_frame: np.ndarray           # (..., n, A, A) frame components of dY
    w_sym: np.ndarray             # (..., n, n) extracted symmetric tensor
    tangential_residual: np.ndarray   # max |W_i^{j gamma}|, tangential pairs
    symmetry_residual: np.ndarray
    flex_residual: np.ndarray     # how well dtau = Y dr held pointwise


def decompose_rotation_bivector(immersion, fld, point):
    """Pointwise rotation of a flex and the frame expansion of its derivative.

    Solves dtau = Y dr for the unique skew matrix Y built from the
    observable data (closed form below), differentiates it exactly through
    jet views, and expands each derivative in the frame bivector basis
    e_alpha ^ e_beta with e_1..e_n the tangents and e_{n+1} the normal.
    Tangential-tangential components must vanish and w_ij = 2 W_i^{j(n+1)}
    sqrt(det g) must be symmetric; for trivial motions everything is zero.
    """
    from .flex import _component_jets3, _dot  # shared jet helpers

    n = immersion.dim
    a_dim = immersion.ambient_dim
    pts = np.asarray(point, dtype=float)
    r, tau = _component_jets3(immersion, fld, pts, order=2)

    ri = [[derivative_view(c, i) for c in r] for i in range(n)]
    taui = [[derivative_view(c, i) for c in tau] for i in range(n)]

    # metric and inverse in jet arithmetic (order 1)
    g = [[_dot(ri[i], ri[j]) for j in range(n)] for i in range(n)]
    ginv = _jet_matrix_inverse(g)

    normal = _jet_normal(ri, a_dim)

    # closed-form skew rotation: Y = Pi Y Pi + q n^T - n q^T with
    # Pi Y Pi = sum skew(S)_{ij} t^i (t^j)^T,  S_ij = r_i . tau_j,
    # q = Y n = - g^{ij} u_i r_j,  u_i = n . tau_i
    s_obs = [[_dot(ri[i], taui[j]) for j in range(n)] for i in range(n)]
    u = [_dot(normal, taui[i]) for i in range(n)]
    dual = [[None] * a_dim for _ in range(n)]   # t^i = g^{ij} r_j
    for i in range(n):
        for a in range(a_dim):
            acc = ginv[i][0] * ri[0][a]
            for j in range(1, n):
                acc = acc + ginv[i][j] * ri[j][a]
            dual[i][a] = acc
    q = [None] * a_dim
    for a in range(a_dim):
        acc = -1.0 * u[0] * dual[0][a]
        for i in range(1, n):
            acc = acc - u[i] * dual[i][a]
        q[a] = acc

    y = [[None] * a_dim for _ in range(a_dim)]
    for a in range(a_dim):
        for b in range(a_dim):
            acc = q[a] * normal[b] - normal[a] * q[b]
            for i in range(n):
                for j in range(n):
                    skew = 0.5 * (s_obs[i][j] - s_obs[j][i])
                    acc = acc + skew * dual[i][a] * dual[j][b]
            y[a][b] = acc

    batch = pts.shape[:-1]
    y_val = np.empty(batch + (a_dim, a_dim))
    y_der = np.empty(batch + (n, a_dim, a_dim))
    for a in range(a_dim):
        for b in range(a_dim):
            y_val[..., a, b] = y[a][b].value
            y_der[..., :, a, b] = y[a][b].grad

    # flex health: tau_i = Y r_i
    tang = np.empty(batch + (a_dim, n))
    dtau = np.empty(batch + (a_dim, n))
    for i in range(n):
        for a in range(a_dim):
            tang[..., a, i] = ri[i][a].value
            dtau[..., a, i] = taui[i][a].value
    flex_res = np.max(np.abs(dtau - np.einsum("...ab,...bi->...ai",
                                              y_val, tang)), axis=(-1, -2))

    # frame expansion: dY_k = E (2 W_k) E^T with E = [tangents | normal]
    n_val = np.empty(batch + (a_dim,))
    for a in range(a_dim):
        n_val[..., a] = normal[a].value
    frame_mat = np.concatenate([tang, n_val[..., None]], axis=-1)
    frame_inv = np.linalg.inv(frame_mat)
    w_frame = 0.5 * np.einsum("...pa,...kab,...qb->...kpq",
                              frame_inv, y_der, frame_inv)

    tang_res = np.max(np.abs(w_frame[..., :, :n, :n]), axis=(-1, -2, -3))
    detg = np.abs(np.linalg.det(np.einsum("...ai,...aj->...ij", tang, tang)))
    w_sym = 2.0 * w_frame[..., :, :n, n] * np.sqrt(detg)[..., None, None]
    sym_res = np.max(np.abs(w_sym - np.swapaxes(w_sym, -1, -2)), axis=(-1, -2))
    return BivectorDecomposition(
        rotation=y_val, w_frame=w_frame, w_sym=w_sym,
        tangential_residual=tang_res, symmetry_residual=sym_res,
        flex_residual=flex_res)


def _jet_matrix_inverse(g):
    n = len(g)
    if n == 2:
        det = g[0][0] * g[1][1] - g[0][1] * g[1][0]
        return [[g[1][1] / det, -1.0 * g[0][1] / det],
                [-1.0 * g[1][0] / det, g[0][0] / det]]
    if n == 3:
        c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1]
        c01 = g[0][2] * g[2][1] - g[0][1] * g[2][2]
        c02 = g[0][1] * g[1][2] - g[0][2] * g[1][1]
        c10 = g[1][2] * g[2][0] - g[1][0] * g[2][2]
        c11 = g[0][0] * g[2][2] - g[0][2] * g[2][0]
        c12 = g[0][2] * g[1][0] - g[0][0] * g[1][2]
        c20 = g[1][0] * g[2][1] - g[1][1] * g[2][0]
        c21 = g[0][1] * g[2][0] - g[0][0] * g[2][1]
        c22 = g[0][0] * g[1][1] - g[0][1] * g[1][0]
        det = g[0][0] * c00 + g[0][1] * c10 + g[0][2] * c20
        return [[c00 / det, c01 / det, c02 / det],
                [c10 / det, c11 / det, c12 / det],
                [c20 / det, c21 / det, c22 / det]]
    raise HighDimError("jet matrix inverse implemented for n in {2, 3}")


def _jet_normal(ri, a_dim):
    """Unit normal via cofactor expansion, entries may be jets."""
    n = a_dim - 1
    comps = []
    for a in range(a_dim):
        rows = [b for b in range(a_dim) if b != a]
        if n == 2:
            det = (ri[0][rows[0]] * ri[1][rows[1]]
                   - ri[0][rows[1]] * ri[1][rows[0]])
        elif n == 3:
            m = [[ri[i][rows[j]] for j in range(3)] for i in range(3)]
            det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                   - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                   + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
        else:
            raise HighDimError("normals implemented for ambient dim <= 4")
        comps.append((-1.0) ** a * det)
    from .jets import sqrt as jsqrt
    norm2 = comps[0] * comps[0]
    for c in comps[1:]:
        norm2 = norm2 + c * c
    norm = jsqrt(norm2)
    return [c / norm for c in comps]


# ---------------------------------------------------------------------------
# linearized Gauss null space and the rank-3 rigidity test
# ---------------------------------------------------------------------------

def _sym_index(n):
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    lookup = {}
    for k, (i, j) in enumerate(pairs):
        lookup[(i, j)] = k
        lookup[(j, i)] = k
    return pairs, lookup


def linearized_gauss_constraints(h):
    """Constraint matrix of h_kj w_il - h_lj w_ik = h_ki w_jl - h_li w_jk
    over all index 4-tuples; unknowns are the n(n+1)/2 entries of w."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    if h.shape != (n, n):
        raise HighDimError("h must be square")
    if not np.allclose(h, h.T, atol=1e-12):
        raise HighDimError("h must be symmetric")
    pairs, lookup = _sym_index(n)
    rows = []
    for i, j, k, l in itertools.product(range(n), repeat=4):
        row = np.zeros(len(pairs))
        row[lookup[(i, l)]] += h[k, j]
        row[lookup[(i, k)]] -= h[l, j]
        row[lookup[(j, l)]] -= h[k, i]
        row[lookup[(j, k)]] += h[l, i]
        if np.any(row):
            rows.append(row)
    if not rows:
        rows = [np.zeros(len(pairs))]
    return np.array(rows)


def linearized_gauss_nullspace(h, rel_tol=1e-10):
    """Null-space dimension and orthonormal basis of the linearized Gauss
    system; basis rows are coordinates in the symmetric-pair ordering
    (0,0), (0,1), ..., (n-1,n-1)."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    if n < 3:
        raise HighDimError("the pointwise test is stated for n >= 3")
    mat = linearized_gauss_constraints(h)
    basis = null_space(mat, rel_tol=rel_tol)
    return basis.shape[0], basis


def _nullspace_dimension_diagonalized(h, rel_tol=1e-10):
    """Cross-check route: diagonalize h orthogonally first.  The dimension
    is invariant under the congruence because w transforms tensorially."""
    eigvals, _ = np.linalg.eigh(np.asarray(h, dtype=float))
    dim, _ = linearized_gauss_nullspace(np.diag(eigvals), rel_tol=rel_tol)
    return dim


@dataclass
class DRVerdict:
    rank: int
    null_dimension: int
    verdict: str                  # "rigid" | "not-certified"


def dr_rigidity_test(h, rank_tol=1e-10):
    """Pointwise rigidity verdict: "rigid" iff the numerical rank of h is at
    least 3 and the linearized Gauss system pins w = 0.

    Both tests run; a disagreement between them would contradict the
    dichotomy the test relies on and raises
    :class:`RigidityInconsistencyError` with the diagnostic data.
    """
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    if n < 3:
        raise HighDimError("the pointwise test is stated for n >= 3")
    s = singular_values(h)
    rank = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
    null_dim, _ = linearized_gauss_nullspace(h, rel_tol=rank_tol)
    diag_dim = _nullspace_dimension_diagonalized(h, rel_tol=rank_tol)
    if null_dim != diag_dim:
        raise RigidityInconsistencyError(
            f"direct ({null_dim}) and diagonalized ({diag_dim}) null-space "
            "dimensions disagree")
    if rank >= 3 and null_dim == 0:
        return DRVerdict(rank=rank, null_dimension=0, verdict="rigid")
    if rank >= 3 and null_dim > 0:
        raise RigidityInconsistencyError(
            f"rank {rank} >= 3 but the null space has dimension {null_dim}")
    if rank <= 2 and null_dim == 0:
        raise RigidityInconsistencyError(
            f"rank {rank} <= 2 but the null space is trivial")
    return DRVerdict(rank=rank, null_dimension=null_dim,
                     verdict="not-certified")


def random_symmetric_with_rank(rng, n, rank, scale=(0.1, 3.0)):
    """Random symmetric n x n matrix with controlled rank: orthogonal
    conjugation of a +-[scale] diagonal with ``rank`` nonzero entries."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = np.zeros(n)
    mags = rng.uniform(scale[0], scale[1], size=rank)
    signs = rng.choice([-1.0, 1.0], size=rank)
    vals[:rank] = mags * signs
    rng.shuffle(vals)
    return q @ np.diag(vals) @ q.T
