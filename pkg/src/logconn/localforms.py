"""Local logarithmic connections at one puncture and their normal forms.

A local connection is d + A(z) dz/z with A a square truncated series;
the residue is A(0).  Gauge fixing produces a normal trivialisation: a
constant arranging gauge T splitting the residue into integer-weight
classes, a formal gauge M(z) with M(0) = I, and constant data (K, Phi)
with K block-upper-triangular, normalized eigenvalues, such that

    z dM/dz = M B - (T^{-1} A T) M,      B(z) = z^Phi (-K - Phi) z^{-Phi}.

The recursion solves one Sylvester-type block equation per coefficient;
blocks whose weight classes differ by exactly the current degree are
resonant and receive the canonical correction: the right-hand side's
cokernel component goes into B (hence into K) and M takes the
minimum-norm solution.  exp(2 pi i K) is the monodromy of the local
system around 0, which the fundamental check verifies by quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .eigen import CLUSTER_TOL, cluster_expm, eigenvalues, floor_snap, reorder_schur, schur
from .series import MatrixSeries, ShapeMismatchError, WeightDiagonal, as_matrix, twist
from .verify import circle_loop, integrate_local

__all__ = [
    "IllConditionedBlockError",
    "LocalLogConnection",
    "NormalForm",
    "integer_weights",
    "normal_form",
    "gauge_residual",
    "fundamental_check",
    "ConvergenceReport",
    "convergence_diagnostic",
    "morphism_weight_check",
]

_RESONANCE_SVAL = 1e-8


class IllConditionedBlockError(RuntimeError):
    def __init__(self, message, location):
        super().__init__(f"{message} at block {location}")
        self.location = location


@dataclass(frozen=True)
class LocalLogConnection:
    """d + A(z) dz/z with A square; the residue is A(0)."""

    a: MatrixSeries

    def __post_init__(self):
        if not self.a.is_square:
            raise ShapeMismatchError("connection matrix series must be square")

    @property
    def rank(self):
        return self.a.dim_out

    @property
    def order(self):
        return self.a.order

    @property
    def residue(self):
        return self.a.coeffs[0]

    @classmethod
    def constant(cls, matrix, order=0):
        return cls(MatrixSeries.constant(matrix, order))


def integer_weights(a0, tol=CLUSTER_TOL):
    """Integer weights floor(-Re lambda) of the residue eigenvalues, sorted."""
    a0 = as_matrix(a0, square=True)
    vals = eigenvalues(a0)
    phis = sorted((floor_snap(-v.real, tol) for v in vals), reverse=True)
    return WeightDiagonal(tuple(phis))


def _arranging_gauge(a0, tol):
    """Constant gauge T with T^{-1} A0 T block-diagonal by weight class.

    Schur vectors are grouped per weight class in descending weight
    order (ties keep Schur order); the remaining inter-class coupling is
    removed by Sylvester eliminations, which are non-resonant because
    distinct weight classes have disjoint spectra.
    """
    t_schur, q = schur(a0)
    weights = [floor_snap(-v.real, tol) for v in np.diag(t_schur)]
    order_vals = sorted(set(weights), reverse=True)
    # move each class behind the already-placed ones, keeping Schur order
    placed = 0
    for w in order_vals:
        select = [idx < placed or weights[idx] == w for idx in range(len(weights))]
        t_schur, q = reorder_schur(t_schur, q, select)
        weights = [floor_snap(-v.real, tol) for v in np.diag(t_schur)]
        placed += weights.count(w)
    phi = WeightDiagonal(tuple(sorted(weights, reverse=True)))
    if list(phi.entries) != weights:
        raise AssertionError("weight classes failed to order")
    slices = phi.block_slices
    arranged = t_schur.copy()
    t_total = q.copy()
    # eliminate strictly-upper inter-class blocks, nearest diagonal first
    l = len(slices)
    for gap in range(1, l):
        for i in range(l - gap):
            m = i + gap
            si, sm = slices[i], slices[m]
            block = arranged[si, sm]
            if np.allclose(block, 0.0, atol=1e-300):
                continue
            x = scipy.linalg.solve_sylvester(arranged[si, si], -arranged[sm, sm], -block)
            w = np.eye(a0.shape[0], dtype=np.complex128)
            w[si, sm] = x
            winv = np.eye(a0.shape[0], dtype=np.complex128)
            winv[si, sm] = -x
            arranged = winv @ arranged @ w
            t_total = t_total @ w
    return t_total, arranged, phi


@dataclass(frozen=True)
class NormalForm:
    """Normal trivialisation data (M, K, Phi, T) with the exact B series.

    m:   gauge series with m.coeffs[0] = I
    k:   constant block-upper-triangular matrix, normalized eigenvalues
    phi: integer weight diagonal
    t:   constant arranging gauge applied before the series gauge
    b:   z^Phi (-K - Phi) z^{-Phi}, exact polynomial, fixed at build time
    """

    m: MatrixSeries
    k: np.ndarray
    phi: WeightDiagonal
    t: np.ndarray
    b: MatrixSeries
    warnings: tuple = ()

    @property
    def rank(self):
        return self.m.dim_out


def normal_form_b_series(k, phi, order):
    """The connection matrix z^Phi(-K-Phi)z^{-Phi} as an exact polynomial."""
    k = as_matrix(k, square=True)
    gaps = max(phi.entries) - min(phi.entries)
    base = MatrixSeries.constant(-k - phi.matrix(), order=max(order, gaps))
    twisted, _ = twist(base, phi, phi)
    return twisted.pad(max(order, gaps))


def normal_form(conn, tol=CLUSTER_TOL, resonance_sval=_RESONANCE_SVAL):
    """Gauge-fix a local logarithmic connection to its normal form.

    Follows the inductive construction: arrange the residue
    block-diagonally by weight class, then solve the coefficient
    recursion (j + A0_ii) M^j_im - M^j_im A0_mm - B^j_im = R^{j-1}_im
    blockwise, with B^j allowed nonzero only on resonant blocks
    (psi^i - j = psi^m).  Resonant blocks take the canonical choice:
    B picks up the cokernel component of the right side, M the
    minimum-norm solution.  Near-resonant non-resonant blocks (smallest
    singular value below `resonance_sval`) are solved the same way with
    a recorded warning instead of a hard failure.
    """
    a = conn.a
    r = conn.rank
    n = a.order
    t_total, a0_arr, phi = _arranging_gauge(a.coeffs[0], tol)
    t_inv = np.linalg.inv(t_total)
    a_arr = np.array([t_inv @ c @ t_total for c in a.coeffs])
    slices = phi.block_slices
    values = phi.values
    l = len(values)

    k = np.zeros((r, r), dtype=np.complex128)
    for mdx, sl in enumerate(slices):
        k[sl, sl] = -a0_arr[sl, sl] - values[mdx] * np.eye(sl.stop - sl.start)

    b = np.zeros((n + 1, r, r), dtype=np.complex128)
    b[0] = a0_arr
    m = np.zeros((n + 1, r, r), dtype=np.complex128)
    m[0] = np.eye(r)
    warnings = []

    for j in range(1, n + 1):
        rhs = -a_arr[j].copy()
        for kk in range(1, j):
            rhs += m[kk] @ b[j - kk] - a_arr[j - kk] @ m[kk]
        for i in range(l):
            for mm in range(l):
                si, sm = slices[i], slices[mm]
                di, dm = si.stop - si.start, sm.stop - sm.start
                left = j * np.eye(di) + a0_arr[si, si]
                op = np.kron(np.eye(dm), left) - np.kron(a0_arr[sm, sm].T, np.eye(di))
                rvec = rhs[si, sm].flatten(order="F")
                resonant = values[i] - j == values[mm]
                u, svals, vh = np.linalg.svd(op)
                smax = svals[0] if len(svals) else 0.0
                cutoff = resonance_sval * max(1.0, smax)
                small = svals <= cutoff
                if not resonant and np.any(small):
                    dropped = float(
                        np.linalg.norm((u[:, small].conj().T @ rvec))
                    )
                    warnings.append(
                        f"near-resonant block (i={i}, m={mm}, j={j}): "
                        f"smallest singular value {svals[-1]:.3e}, dropped residual {dropped:.3e}"
                    )
                if resonant:
                    coker = u[:, small]
                    bvec = -(coker @ (coker.conj().T @ rvec)) if coker.shape[1] else np.zeros_like(rvec)
                    b[j][si, sm] = bvec.reshape((di, dm), order="F")
                    k[si, sm] = -b[j][si, sm]
                    rvec = rvec + bvec
                safe = np.where(small | (svals == 0.0), 1.0, svals)
                inv_svals = np.where(small | (svals == 0.0), 0.0, 1.0 / safe)
                xvec = vh.conj().T @ (inv_svals * (u.conj().T @ rvec))
                if not np.all(np.isfinite(xvec)):
                    raise IllConditionedBlockError("non-finite block solve", (i, mm, j))
                m[j][si, sm] = xvec.reshape((di, dm), order="F")

    b_series = normal_form_b_series(k, phi, n)
    return NormalForm(
        m=MatrixSeries(m),
        k=k,
        phi=phi,
        t=t_total,
        b=b_series,
        warnings=tuple(warnings),
    )


def arranged_series(conn, nf):
    """T^{-1} A(z) T, the connection the gauge relation is stated against."""
    t_inv = np.linalg.inv(nf.t)
    return MatrixSeries(np.array([t_inv @ c @ nf.t for c in conn.a.coeffs]))


def gauge_residual(conn, nf):
    """Max coefficientwise norm of z M' - (M B - A_arr M) up to the order."""
    a_arr = arranged_series(conn, nf)
    n = conn.order
    lhs = nf.m.z_derivative()
    rhs = nf.m * nf.b.truncate(n).pad(n) - a_arr * nf.m
    worst = 0.0
    for j in range(n + 1):
        worst = max(worst, float(np.linalg.norm(lhs.coeffs[j] - rhs.coeffs[j], 2)))
    return worst


def fundamental_check(nf, tol=1e-7, conn=None, radius=0.5, quad_tol=None):
    """Verify that exp(2 pi i K) is the loop monodromy of the normal form.

    Integrates d + B dz/z around an anticlockwise circle and compares
    the transported frame with Y0 exp(2 pi i K), Y0 = z0^Phi z0^K being
    the fundamental frame at the start point.  When the original
    connection is supplied, the check runs against it instead, with the
    full gauge T M(z0) Y0 as initial frame; M is then evaluated as its
    truncating polynomial, so the circle radius should sit inside the
    series' accuracy disc.
    """
    phi_m = nf.phi.matrix()
    z0 = complex(radius)
    y0 = cluster_expm(phi_m * math.log(radius)) @ cluster_expm(nf.k * math.log(radius))
    loop = circle_loop(0.0, radius)
    if quad_tol is None:
        quad_tol = tol / 10.0
    if conn is None:
        series = nf.b
        frame0 = y0
    else:
        series = conn.a
        frame0 = nf.t @ nf.m.eval(z0) @ y0
    transported = integrate_local(series, loop, quad_tol, y0=frame0)
    expected = frame0 @ cluster_expm(2j * np.pi * nf.k)
    scale = max(np.linalg.norm(expected, 2), 1.0)
    return bool(np.linalg.norm(transported - expected, 2) <= tol * scale)


@dataclass(frozen=True)
class ConvergenceReport:
    """Geometric-decay certificate data for the gauge series."""

    c0: int
    big_c: float
    eps0: float
    delta: float
    delta_max: float
    in_range: bool
    checks: tuple  # (j, lhs, rhs, ok)

    @property
    def all_ok(self):
        return all(ok for *_, ok in self.checks)


def convergence_diagnostic(conn, nf, delta):
    """Check norm(M^j) delta^j <= D 2^{c0 - j} over the computed range.

    c0 = 2 floor(norm A0) + 2 and (C, eps0) witness c_j eps^j < C for
    the available coefficients, c_j = norm(A^j) + norm(B^j).  Deltas
    outside eps0 / (2C) are reported as out of the certified range but
    still evaluated.
    """
    a_arr = arranged_series(conn, nf)
    n = conn.order
    b = nf.b.truncate(n).pad(n)
    norms_a = [float(np.linalg.norm(a_arr.coeffs[j], 2)) for j in range(n + 1)]
    norms_b = [float(np.linalg.norm(b.coeffs[j], 2)) for j in range(n + 1)]
    norms_m = [float(np.linalg.norm(nf.m.coeffs[j], 2)) for j in range(n + 1)]
    c0 = 2 * int(math.floor(norms_a[0])) + 2
    cj = [0.0] + [norms_a[j] + norms_b[j] for j in range(1, n + 1)]
    eps0 = 1.0
    big_c = max(2.0, 1.000001 * max(cj[1:], default=1.0), 1.000001 * 1.0)
    delta_max = eps0 / (2.0 * big_c)
    in_range = delta <= delta_max
    big_d = sum(norms_m[j] * delta ** j for j in range(0, min(c0, n) + 1))
    checks = []
    for j in range(c0 + 1, n + 1):
        lhs = norms_m[j] * delta ** j
        rhs = big_d * 2.0 ** (c0 - j)
        checks.append((j, lhs, rhs, lhs <= rhs * (1.0 + 1e-12)))
    return ConvergenceReport(
        c0=c0,
        big_c=float(big_c),
        eps0=eps0,
        delta=float(delta),
        delta_max=float(delta_max),
        in_range=bool(in_range),
        checks=tuple(checks),
    )


def morphism_weight_check(m, phi_source, phi_target, tol=1e-9):
    """Whether a gauge intertwiner respects weights.

    True iff every block M_{i,m} with source weight psi'^m greater than
    target weight psi^i vanishes to the stored order, which is the
    block-triangular reformulation of 'weights never decrease'.
    """
    if m.dim_in != phi_source.dim or m.dim_out != phi_target.dim:
        raise ShapeMismatchError("weight shapes do not match the intertwiner")
    scale = max(m.max_coeff_norm(), 1.0)
    src_slices = phi_source.block_slices
    tgt_slices = phi_target.block_slices
    for i, (psi_t, sl_t) in enumerate(zip(phi_target.values, tgt_slices)):
        for mm, (psi_s, sl_s) in enumerate(zip(phi_source.values, src_slices)):
            if psi_s > psi_t:
                block = m.coeffs[:, sl_t, sl_s]
                if np.max(np.abs(block)) > tol * scale:
                    return False
    return True
