"""Complex eigenstructure and the normalized matrix logarithm.

The eigen machinery is self-contained: complex Householder reduction to
Hessenberg form followed by a single-shift QR iteration with Wilkinson
shifts, plus unitary reordering of the triangular factor.  Dense desk
scale (r <= 16) is the target; numpy only supplies the BLAS products.

The normalized logarithm of an invertible G is the K with
exp(2*pi*i*K) = G whose eigenvalues all have real part in [0, 1).  It
is assembled per eigenvalue cluster: the scalar branch is chosen for
the cluster representative and the remaining (nilpotent to tolerance)
part is summed with the finite logarithm series.
"""

from dataclasses import dataclass

import numpy as np

from .series import as_matrix

__all__ = [
    "CLUSTER_TOL",
    "NonConvergenceError",
    "SingularMatrixError",
    "hessenberg",
    "schur",
    "reorder_schur",
    "eigenvalues",
    "SpectralSplit",
    "spectral_split",
    "NormalizedLog",
    "norm_log",
    "norm_log_scalar",
    "commuting_log_check",
]

# Relative eigenvalue clustering tolerance.  Eigenvalues closer than
# CLUSTER_TOL * scale are treated as one cluster, which also decides
# resonance classification downstream.
CLUSTER_TOL = 1e-8

_DEFLATE_EPS = 1e-15
_MAX_SWEEPS_PER_EIGENVALUE = 40


class NonConvergenceError(RuntimeError):
    def __init__(self, message, iterations):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class SingularMatrixError(ValueError):
    pass


def hessenberg(a):
    """Unitary reduction to upper Hessenberg form: Q^* A Q = H."""
    h = as_matrix(a, square=True).copy()
    n = h.shape[0]
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = x[0]
        phase = alpha / abs(alpha) if abs(alpha) > 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        # H <- P H P with P = I - 2 v v^*
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v.conj())
        h[k + 2 :, k] = 0.0
    return h, q


def _wilkinson_shift(h, q_hi):
    """Eigenvalue of the trailing 2x2 closest to the corner entry."""
    a = h[q_hi - 1, q_hi - 1]
    b = h[q_hi - 1, q_hi]
    c = h[q_hi, q_hi - 1]
    d = h[q_hi, q_hi]
    tr = a + d
    disc = np.sqrt((a - d) ** 2 + 4.0 * b * c + 0.0j)
    e1 = (tr + disc) / 2.0
    e2 = (tr - disc) / 2.0
    return e1 if abs(e1 - d) <= abs(e2 - d) else e2


def schur(a, max_sweeps=None):
    """Complex Schur decomposition A = Q T Q^* with T upper triangular.

    Single-shift QR iteration on the Hessenberg form with Wilkinson
    shifts and occasional exceptional shifts.  Raises
    :class:`NonConvergenceError` with the iteration count if a
    subdiagonal refuses to deflate.
    """
    t, q = hessenberg(a)
    n = t.shape[0]
    if max_sweeps is None:
        max_sweeps = _MAX_SWEEPS_PER_EIGENVALUE * max(n, 1)
    scale = max(np.linalg.norm(t, np.inf), 1e-300)

    def deflatable(i):
        return abs(t[i + 1, i]) <= _DEFLATE_EPS * (
            abs(t[i, i]) + abs(t[i + 1, i + 1]) + 0.1 * scale
        )

    hi = n - 1
    total = 0
    stuck = 0
    while hi > 0:
        if deflatable(hi - 1):
            t[hi, hi - 1] = 0.0
            hi -= 1
            stuck = 0
            continue
        lo = hi - 1
        while lo > 0 and not deflatable(lo - 1):
            lo -= 1
        if lo > 0:
            t[lo, lo - 1] = 0.0
        total += 1
        stuck += 1
        if total > max_sweeps:
            raise NonConvergenceError("QR iteration failed to deflate", total)
        if stuck % 12 == 0:
            # exceptional ad-hoc shift to break symmetric stalls
            mu = t[hi, hi] + 0.75 * abs(t[hi, hi - 1])
        else:
            mu = _wilkinson_shift(t, hi)
        # explicit single-shift step: QR factor (T - mu I) on the active
        # window by Givens rotations, then form RQ + mu I
        for i in range(lo, hi + 1):
            t[i, i] -= mu
        rots = []
        for k in range(lo, hi):
            x = t[k, k]
            y = t[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r < 1e-300:
                g = np.eye(2, dtype=np.complex128)
            else:
                g = np.array([[np.conj(x), np.conj(y)], [-y, x]], dtype=np.complex128) / r
            rots.append(g)
            t[k : k + 2, k:] = g @ t[k : k + 2, k:]
            t[k + 1, k] = 0.0
        for k in range(lo, hi):
            gh = rots[k - lo].conj().T
            t[: min(k + 3, hi + 1), k : k + 2] = t[: min(k + 3, hi + 1), k : k + 2] @ gh
            q[:, k : k + 2] = q[:, k : k + 2] @ gh
        for i in range(lo, hi + 1):
            t[i, i] += mu
    # clean numeric dust below the diagonal
    for i in range(1, n):
        t[i, :i] = 0.0
    return t, q


def _swap_adjacent(t, q, k):
    """Unitary similarity swapping diagonal entries k and k+1 of triangular t."""
    a = t[k, k]
    b = t[k, k + 1]
    d = t[k + 1, k + 1]
    # eigenvector of [[a, b], [0, d]] for eigenvalue d
    x = np.array([b, d - a], dtype=np.complex128)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        return  # equal eigenvalues, nothing to move
    x /= nx
    g = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]], dtype=np.complex128)
    t[:, k : k + 2] = t[:, k : k + 2] @ g
    t[k : k + 2, :] = g.conj().T @ t[k : k + 2, :]
    q[:, k : k + 2] = q[:, k : k + 2] @ g
    t[k + 1, k] = 0.0


def reorder_schur(t, q, select):
    """Move the selected diagonal positions to the top-left, order preserved.

    Returns fresh (t, q); `select` is a boolean mask over diagonal
    positions of the triangular factor.
    """
    t = t.copy()
    q = q.copy()
    n = t.shape[0]
    sel = list(bool(s) for s in select)
    target = 0
    for _ in range(n):
        src = None
        for j in range(target, n):
            if sel[j]:
                src = j
                break
        if src is None:
            break
        for k in range(src - 1, target - 1, -1):
            _swap_adjacent(t, q, k)
            sel[k], sel[k + 1] = sel[k + 1], sel[k]
        target += 1
    return t, q


def eigenvalues(a):
    """Eigenvalues (with multiplicity) via the in-module Schur form."""
    t, _ = schur(a)
    return np.diag(t).copy()


def _cluster_indices(vals, tol):
    """Union-find clustering of eigenvalues at pairwise distance < tol."""
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) < tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    # deterministic ordering: by first appearance in the Schur diagonal
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass(frozen=True)
class SpectralSplit:
    """Clustered eigenstructure: (representative, multiplicity, orthonormal basis)."""

    clusters: tuple

    @property
    def dim(self):
        return sum(mult for _, mult, _ in self.clusters)

    def joint_basis(self):
        return np.hstack([basis for _, _, basis in self.clusters])


def spectral_split(g, tol=CLUSTER_TOL):
    """Cluster the spectrum of `g` and produce invariant orthonormal bases.

    Eigenvalues at pairwise distance below tol * scale fall into one
    cluster; the basis columns of a cluster span its (generalized)
    eigenspace, obtained by reordering the Schur form so the cluster
    leads and taking the leading Schur vectors.
    """
    g = as_matrix(g, square=True)
    t, q = schur(g)
    vals = np.diag(t)
    scale = max(1.0, float(np.max(np.abs(vals))))
    groups = _cluster_indices(vals, tol * scale)
    clusters = []
    for idx in groups:
        mask = np.zeros(len(vals), dtype=bool)
        mask[idx] = True
        t2, q2 = reorder_schur(t, q, mask)
        k = len(idx)
        basis = q2[:, :k].copy()
        mu = complex(np.mean(vals[idx]))
        clusters.append((mu, k, basis))
    return SpectralSplit(tuple(clusters))


@dataclass(frozen=True)
class NormalizedLog:
    """K with exp(2*pi*i*K) equal to the source and Re(spec K) in [0, 1)."""

    k: np.ndarray


def norm_log_scalar(rho, snap_tol=CLUSTER_TOL):
    """Normalized logarithm of a nonzero complex scalar.

    mu = log(rho)/(2*pi*i) with the branch making Re(mu) in [0, 1); a
    real part within snap_tol of 1 snaps to the next branch.
    """
    rho = complex(rho)
    if rho == 0:
        raise SingularMatrixError("norm log of zero")
    mu = complex(np.angle(rho) / (2.0 * np.pi), -np.log(abs(rho)) / (2.0 * np.pi))
    if mu.real < 0.0:
        mu += 1.0
    if mu.real > 1.0 - snap_tol:
        mu -= 1.0
    return mu


def _log_unipotent(u, terms):
    """log(u) for u = I + nilpotent-to-tolerance, by the finite series."""
    n = u.shape[0]
    x = u - np.eye(n)
    acc = np.zeros_like(u)
    power = np.eye(n, dtype=np.complex128)
    for j in range(1, terms + 1):
        power = power @ x
        acc += ((-1.0) ** (j + 1) / j) * power
    return acc


def norm_log(g, tol=CLUSTER_TOL):
    """Normalized logarithm: exp(2*pi*i*K) = G, eigenvalue real parts in [0, 1).

    Splits G into eigenvalue clusters; each block contributes its scalar
    branch plus the finite logarithm series of the unipotent remainder.
    """
    g = as_matrix(g, square=True)
    split = spectral_split(g, tol)
    if any(abs(mu) < 1e-14 for mu, _, _ in split.clusters):
        raise SingularMatrixError("matrix is singular: zero eigenvalue cluster")
    blocks = []
    for mu, mult, basis in split.clusters:
        gb = basis.conj().T @ g @ basis
        scalar = norm_log_scalar(mu, snap_tol=tol)
        nil = _log_unipotent(gb / mu, mult) / (2.0j * np.pi)
        blocks.append(scalar * np.eye(mult) + nil)
    w = split.joint_basis()
    kblock = np.zeros_like(g)
    start = 0
    for b in blocks:
        d = b.shape[0]
        kblock[start : start + d, start : start + d] = b
        start += d
    k = w @ kblock @ np.linalg.inv(w)
    return NormalizedLog(k)


def _exp_small(x):
    """Taylor exponential with scaling and squaring; x any square matrix."""
    nx = np.linalg.norm(x, 2)
    s = 0 if nx <= 0.5 else int(np.ceil(np.log2(nx / 0.5)))
    y = x / (2 ** s)
    acc = np.eye(x.shape[0], dtype=np.complex128)
    term = np.eye(x.shape[0], dtype=np.complex128)
    for j in range(1, 40):
        term = term @ y / j
        acc = acc + term
        if np.linalg.norm(term, 2) < 1e-18 * max(1.0, np.linalg.norm(acc, 2)):
            break
    for _ in range(s):
        acc = acc @ acc
    return acc


def cluster_expm(m, tol=CLUSTER_TOL):
    """exp(m) assembled per eigenvalue cluster.

    Blockwise e^{mu} exp(m_b - mu I) keeps the nilpotent-to-tolerance
    part small before scaling and squaring, which stays accurate on the
    defective, highly non-normal matrices that generic Pade scaling and
    squaring handles poorly.
    """
    m = as_matrix(m, square=True)
    split = spectral_split(m, tol)
    w = split.joint_basis()
    out = np.zeros_like(m)
    start = 0
    for mu, mult, basis in split.clusters:
        mb = basis.conj().T @ m @ basis
        block = np.exp(mu) * _exp_small(mb - mu * np.eye(mult))
        out[start : start + mult, start : start + mult] = block
        start += mult
    return w @ out @ np.linalg.inv(w)


def floor_snap(x, tol=CLUSTER_TOL):
    """floor(x) with values within tol of an integer snapped to that integer.

    Keeps weight classification stable when -Re(lambda) sits numerically
    on an integer boundary.
    """
    r = round(float(x))
    if abs(x - r) < tol:
        return int(r)
    return int(np.floor(x))


def commuting_log_check(g, g2, c, tol=1e-8):
    """Whether norm_log(G) C = C norm_log(G') given G C = C G'.

    Diagnostic for the intertwining property of normalized logarithms;
    returns the verdict, never raises on a false outcome.
    """
    g = as_matrix(g, square=True)
    g2 = as_matrix(g2, square=True)
    c = as_matrix(c)
    scale = max(np.linalg.norm(g, 2) * np.linalg.norm(c, 2), 1e-30)
    if np.linalg.norm(g @ c - c @ g2, 2) > 100 * tol * scale:
        raise ValueError("precondition G C = C G' fails beyond tolerance")
    k = norm_log(g).k
    k2 = norm_log(g2).k
    kscale = max(np.linalg.norm(k, 2) * np.linalg.norm(c, 2), 1.0)
    return np.linalg.norm(k @ c - c @ k2, 2) <= tol * kscale
