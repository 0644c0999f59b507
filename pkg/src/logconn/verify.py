"""Independent numerical verification by loop integration.

Flat sections of d + A(z) dz/z (local) or d + sum B_j/(z - a_j) dz
(global) are transported along explicit paths with an embedded
Dormand-Prince 5(4) pair.  Step size is keyed to the distance from the
nearest singularity, so stiffness is purely geometric.

Conventions (one source of sign bugs, fixed here once):

* fundamental solutions transform as Y o gamma* = Y . G (right
  multiplication), so the loop matrix returned by integration with
  initial value I *is* the monodromy factor of that loop;
* loops wind anticlockwise around their puncture;
* with endpoint transport, concatenating paths multiplies factors in
  reverse, so the order in which the standard loop matrices telescope
  to the identity is the clockwise angular sweep of the punctures as
  seen from the basepoint (see :func:`relation_order`).  Re-indexing
  punctures conjugates the representation; reports carry the order
  actually used.
"""

import math
from dataclasses import dataclass

import numpy as np

from .eigen import floor_snap
from .series import as_matrix

__all__ = [
    "IntegrationError",
    "LoopPath",
    "circle_loop",
    "standard_loops",
    "relation_order",
    "integrate_fuchsian",
    "integrate_local",
    "MonodromyReport",
    "monodromy_report",
    "conjugacy_compare",
    "GrowthEstimate",
    "growth_exponent",
]


class IntegrationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class LoopPath:
    """Closed path made of straight segments and circular arcs.

    Pieces are tuples ``("line", z0, z1)`` or ``("arc", center, radius,
    theta0, theta1)`` traversed with increasing angle parameter.
    """

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("empty path")
        if abs(self.start - self.end) > 1e-9 * max(1.0, abs(self.start)):
            raise ValueError("path is not closed")

    @staticmethod
    def _piece_ends(piece):
        kind = piece[0]
        if kind == "line":
            return piece[1], piece[2]
        if kind == "arc":
            _, c, r, t0, t1 = piece
            return c + r * np.exp(1j * t0), c + r * np.exp(1j * t1)
        raise ValueError(f"unknown piece kind {kind!r}")

    @property
    def start(self):
        return self._piece_ends(self.pieces[0])[0]

    @property
    def end(self):
        return self._piece_ends(self.pieces[-1])[1]

    def reversed(self):
        rev = []
        for piece in self.pieces[::-1]:
            if piece[0] == "line":
                rev.append(("line", piece[2], piece[1]))
            else:
                _, c, r, t0, t1 = piece
                rev.append(("arc", c, r, t1, t0))
        return LoopPath(tuple(rev))

    def sample(self, per_piece=257):
        ts = np.linspace(0.0, 1.0, per_piece)
        pts = []
        for piece in self.pieces:
            if piece[0] == "line":
                _, z0, z1 = piece
                pts.append(z0 + ts * (z1 - z0))
            else:
                _, c, r, t0, t1 = piece
                pts.append(c + r * np.exp(1j * (t0 + ts * (t1 - t0))))
        return np.concatenate(pts)

    def clearance(self, points):
        """Minimum distance from the path to any of the given points."""
        points = np.asarray(points, dtype=np.complex128)
        best = math.inf
        for piece in self.pieces:
            if piece[0] == "line":
                _, z0, z1 = piece
                d = z1 - z0
                L2 = abs(d) ** 2
                for a in points:
                    if L2 == 0.0:
                        best = min(best, abs(z0 - a))
                        continue
                    t = np.clip(((a - z0) * np.conj(d)).real / L2, 0.0, 1.0)
                    best = min(best, abs(z0 + t * d - a))
            else:
                _, c, r, t0, t1 = piece
                samples = np.linspace(t0, t1, 181)
                zs = c + r * np.exp(1j * samples)
                for a in points:
                    if abs(t1 - t0) >= 2.0 * np.pi - 1e-12:
                        best = min(best, abs(abs(a - c) - r))
                    else:
                        best = min(best, float(np.min(np.abs(zs - a))))
        return best

    def winding_number(self, a):
        """Winding of the closed path around a (integer)."""
        total = 0.0
        for piece in self.pieces:
            if piece[0] == "line":
                _, z0, z1 = piece
                total += np.angle((z1 - a) / (z0 - a))
            else:
                _, c, r, t0, t1 = piece
                if abs(c - a) < 1e-12:
                    total += t1 - t0
                else:
                    ts = np.linspace(t0, t1, 361)
                    zs = c + r * np.exp(1j * ts) - a
                    total += float(np.sum(np.angle(zs[1:] / zs[:-1])))
        return int(round(total / (2.0 * np.pi)))


def circle_loop(center, radius, start_angle=0.0):
    """Anticlockwise circle as a closed loop."""
    return LoopPath((("arc", complex(center), float(radius), start_angle, start_angle + 2.0 * np.pi),))


def _choose_basepoint(punctures):
    """Basepoint far out along a direction with good lateral separation.

    The connector of each standard loop is the straight segment toward
    its puncture; placing the basepoint far away in a direction that
    maximizes the pairwise lateral separation keeps every connector
    clear of every other loop's circle, so the loops form a geometric
    basis without detours.
    """
    punctures = np.asarray(punctures, dtype=np.complex128)
    centroid = punctures.mean()
    spread = max(1.0, float(np.max(np.abs(punctures - centroid))))
    if len(punctures) == 1:
        return complex(centroid + 4.0 * spread)
    best_u, best_sep = 1.0 + 0.0j, -math.inf
    for ang in np.linspace(0.0, np.pi, 181, endpoint=False):
        u = np.exp(1j * ang)
        sep = math.inf
        for j in range(len(punctures)):
            for m in range(len(punctures)):
                if m != j:
                    sep = min(sep, abs(((punctures[m] - punctures[j]) / u).imag))
        if sep > best_sep:
            best_u, best_sep = u, sep
    return complex(centroid - 6.0 * spread * best_u)


def relation_order(punctures, basepoint):
    """Puncture order in which the standard loop matrices multiply to I.

    Sorted by decreasing angle of a_j as seen from the basepoint: with
    right-multiplication transport the product of loop factors
    anti-composes path concatenation, so the telescoping order is the
    clockwise sweep.  Re-indexing punctures conjugates the
    representation but never changes realizability.
    """
    punctures = np.asarray(punctures, dtype=np.complex128)
    toward = punctures.mean() - basepoint
    if abs(toward) < 1e-12:
        toward = 1.0 + 0.0j
    toward /= abs(toward)
    # measure angles against the centroid direction so the sort never
    # straddles the branch cut of arg (the basepoint sees the cluster
    # within a narrow beam)
    angles = np.angle((punctures - basepoint) / toward)
    return tuple(int(i) for i in np.argsort(-angles, kind="stable"))


def _connector_clearance(punctures, basepoint):
    """Smallest distance of any connector segment to a foreign puncture."""
    punctures = np.asarray(punctures, dtype=np.complex128)
    clearance = math.inf
    for j, a in enumerate(punctures):
        d = a - basepoint
        L2 = abs(d) ** 2
        for m, b in enumerate(punctures):
            if m == j:
                continue
            t = np.clip(((b - basepoint) * np.conj(d)).real / L2, 0.0, 1.0)
            clearance = min(clearance, abs(basepoint + t * d - b))
    return clearance


def standard_loops(punctures, basepoint=None, radius_factor=0.5):
    """One anticlockwise loop per puncture from a common basepoint.

    Each loop is segment out, full circle, and segment back.  The circle
    radius starts from radius_factor times the minimum pairwise puncture
    distance and shrinks until every connector segment stays clear of
    every other circle; the connectors all emanate from one point, so
    they never cross and the loops form a geometric basis whose product
    telescopes in the :func:`relation_order`.  Returns
    ``(loops, basepoint)`` with loops indexed like the punctures.
    """
    punctures = np.asarray(punctures, dtype=np.complex128)
    n = len(punctures)
    if n == 0:
        raise ValueError("no punctures")
    if n == 1:
        minpair = 2.0
    else:
        diffs = np.abs(punctures[:, None] - punctures[None, :])
        minpair = float(np.min(diffs[diffs > 0]))
    if basepoint is None:
        basepoint = _choose_basepoint(punctures)
    basepoint = complex(basepoint)
    clearance = _connector_clearance(punctures, basepoint)
    radius = radius_factor * minpair
    if n > 1:
        if clearance <= 1e-9 * minpair:
            raise ValueError(
                "a puncture lies on another connector segment; supply a basepoint"
            )
        radius = min(radius, 0.8 * clearance)
    loops = []
    for a in punctures:
        u = (basepoint - a) / abs(basepoint - a)
        entry = a + radius * u
        theta = float(np.angle(entry - a))
        loops.append(
            LoopPath(
                (
                    ("line", complex(basepoint), complex(entry)),
                    ("arc", complex(a), radius, theta, theta + 2.0 * np.pi),
                    ("line", complex(entry), complex(basepoint)),
                )
            )
        )
    return loops, basepoint


# --------------------------------------------------------------------------
# Dormand-Prince 5(4) transport

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _transport_piece(rhs_z, piece, y, tol, singular_points):
    """Advance y along one path piece; rhs_z(z) is the z-domain coefficient."""
    if piece[0] == "line":
        _, z0, z1 = piece

        def zfun(t):
            return z0 + t * (z1 - z0), (z1 - z0)

    else:
        _, c, r, t0, t1 = piece

        def zfun(t):
            z = c + r * np.exp(1j * (t0 + t * (t1 - t0)))
            return z, 1j * (t1 - t0) * (z - c)

    def f(t, y):
        z, dz = zfun(t)
        return dz * (rhs_z(z) @ y)

    sing = np.asarray(singular_points, dtype=np.complex128)

    def max_step(t):
        z, dz = zfun(t)
        if len(sing) == 0 or abs(dz) == 0.0:
            return 0.25
        clear = float(np.min(np.abs(sing - z)))
        return max(1e-6, 0.5 * clear / abs(dz))

    t = 0.0
    h = min(0.1, max_step(0.0))
    nsteps = 0
    while 1.0 - t > 1e-14:
        if nsteps > 200000:
            raise IntegrationError("step count exceeded; path too close to a singularity?")
        h = min(h, max_step(t))
        if h < 1e-13:
            raise IntegrationError("step underflow near a singular point")
        hs = min(h, 1.0 - t)
        k = []
        for i in range(7):
            yi = y
            for j, aij in enumerate(_DP_A[i]):
                if aij != 0.0:
                    yi = yi + hs * aij * k[j]
            k.append(f(t + _DP_C[i] * hs, yi))
        y5 = y
        y4 = y
        for i in range(7):
            if _DP_B5[i] != 0.0:
                y5 = y5 + hs * _DP_B5[i] * k[i]
            if _DP_B4[i] != 0.0:
                y4 = y4 + hs * _DP_B4[i] * k[i]
        # error-per-unit-step control with a safety factor, so `tol`
        # bounds the accumulated error of the whole transport even after
        # moderate amplification; the floor term admits steps limited
        # only by rounding noise
        ynorm = max(1.0, np.linalg.norm(y5))
        demand = max((tol / 200.0) * hs * ynorm, 5e-15 * ynorm)
        err = np.linalg.norm(y5 - y4) / max(demand, 1e-300)
        if err <= 1.0:
            t += hs
            y = y5
            nsteps += 1
            h = hs * min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0))
        else:
            h = hs * max(0.2, 0.9 * err ** -0.2)
    return y


def _transport(rhs_z, loop, y0, tol, singular_points):
    y = np.array(y0, dtype=np.complex128)
    for piece in loop.pieces:
        y = _transport_piece(rhs_z, piece, y, tol, singular_points)
    return y


def integrate_fuchsian(system, loop, tol=1e-10, clearance_check=True, estimate_defect=False):
    """Loop matrix G' of d + sum B_j/(z - a_j) dz with Y(start) = I.

    With the right-multiplication convention the returned matrix is the
    monodromy factor of this loop for the fundamental solution based at
    the loop's start point.  With ``estimate_defect`` the transport is
    repeated at sharply reduced step sizes and ``(G', defect)`` is
    returned, defect being the norm of the difference.
    """
    punctures = np.asarray(system.punctures, dtype=np.complex128)
    residues = [as_matrix(b, square=True) for b in system.residues]
    r = residues[0].shape[0]
    if clearance_check and loop.clearance(punctures) < 1e-6:
        raise IntegrationError("loop clearance below threshold")

    def rhs(z):
        acc = np.zeros((r, r), dtype=np.complex128)
        for a, b in zip(punctures, residues):
            acc -= b / (z - a)
        return acc

    g = _transport(rhs, loop, np.eye(r), tol, punctures)
    if not estimate_defect:
        return g
    g2 = _transport(rhs, loop, np.eye(r), tol / 32.0, punctures)
    return g, float(np.linalg.norm(g - g2, 2))


def integrate_local(a_series, loop, tol=1e-10, y0=None):
    """Loop/path transport for the local system d + A(z) dz/z around z = 0."""

    def rhs(z):
        return -a_series.eval(z) / z

    r = a_series.dim_out
    if y0 is None:
        y0 = np.eye(r)
    return _transport(rhs, loop, y0, tol, [0.0 + 0.0j])


# --------------------------------------------------------------------------
# monodromy reports and conjugacy


def conjugacy_compare(mats_a, mats_b, tol=1e-8, seed=0):
    """Search for invertible S with A_j S = S B_j for all j.

    Solves the joint intertwiner system by SVD of the stacked operator
    and scans the near-null space for an invertible combination.
    Returns ``(ok, S)``; S is scaled to unit determinant magnitude.
    """
    mats_a = [as_matrix(m, square=True) for m in mats_a]
    mats_b = [as_matrix(m, square=True) for m in mats_b]
    if len(mats_a) != len(mats_b):
        raise ValueError("lists must have equal length")
    r = mats_a[0].shape[0]
    if any(m.shape[0] != r for m in mats_a + mats_b):
        raise ValueError("all matrices must share one size")
    ident = np.eye(r)
    ops = [np.kron(ident, a) - np.kron(b.T, ident) for a, b in zip(mats_a, mats_b)]
    stacked = np.vstack(ops)  # shape (n r^2, r^2)
    # threshold scale from the input matrices, not the stacked operator:
    # for (near-)scalar families the operator itself is (near-)zero
    scale = max(
        max(np.linalg.norm(a, 2) for a in mats_a),
        max(np.linalg.norm(b, 2) for b in mats_b),
        1e-30,
    )
    _, svals, vh = np.linalg.svd(stacked)
    null_dim = int(np.sum(svals <= tol * scale))
    if null_dim == 0:
        return False, None
    basis = vh.conj().T[:, r * r - null_dim :]
    candidates = [basis[:, i] for i in range(basis.shape[1])]
    rng = np.random.default_rng(seed)
    for _ in range(8):
        w = rng.normal(size=basis.shape[1]) + 1j * rng.normal(size=basis.shape[1])
        candidates.append(basis @ w)
    for vec in candidates:
        s = vec.reshape((r, r), order="F")
        sn = np.linalg.norm(s, 2)
        if sn == 0.0:
            continue
        smin = np.linalg.svd(s, compute_uv=False)[-1]
        if smin > 1e-6 * sn:
            det = np.linalg.det(s)
            s = s / det ** (1.0 / r)
            return True, s
    return False, None


@dataclass(frozen=True)
class MonodromyReport:
    """Computed loop matrices with consistency data.

    `order` is the puncture order in which the loop product telescopes
    to the identity; `conjugator` intertwines computed and target lists
    when a target representation was supplied.
    """

    loop_matrices: tuple
    order: tuple
    product_defect: float
    conjugacy_ok: bool
    conjugator: object
    per_loop_residuals: tuple
    basepoint: complex


def monodromy_report(system, target=None, tol=1e-10, basepoint=None):
    """Integrate the standard loops of a Fuchsian system and compare.

    If `target` (a representation with matrices G_j) is given, its
    matrices are compared against the computed loop matrices up to one
    simultaneous conjugation.
    """
    loops, s = standard_loops(system.punctures, basepoint=basepoint)
    mats = [integrate_fuchsian(system, lp, tol) for lp in loops]
    order = relation_order(system.punctures, s)
    prod = np.eye(mats[0].shape[0], dtype=np.complex128)
    for j in order:
        prod = prod @ mats[j]
    defect = float(np.linalg.norm(prod - np.eye(prod.shape[0]), 2))
    ok, conj = True, None
    residuals = ()
    if target is not None:
        ok, conj = conjugacy_compare(mats, list(target.matrices), tol=max(1e-8, 10 * tol))
        if ok:
            residuals = tuple(
                float(np.linalg.norm(a @ conj - conj @ b, 2))
                for a, b in zip(mats, target.matrices)
            )
        else:
            residuals = tuple(math.inf for _ in mats)
    return MonodromyReport(
        loop_matrices=tuple(mats),
        order=order,
        product_defect=defect,
        conjugacy_ok=bool(ok),
        conjugator=conj,
        per_loop_residuals=residuals,
        basepoint=s,
    )


# --------------------------------------------------------------------------
# asymptotic growth


@dataclass(frozen=True)
class GrowthEstimate:
    exponent: int
    slope: float
    stderr: float
    reliable: bool


def growth_exponent(source, v, radii, center=0.0 + 0.0j, angle=0.0, tol=1e-10):
    """Integer part of the asymptotic growth of the flat extension of v.

    Transports v radially toward the singularity through the given
    decreasing radii, fits log norm(v) against log r, and floors the
    fitted slope.  `source` is either a local connection (series
    attribute `a`, singularity at 0) or a Fuchsian system; for the
    latter `center` picks the puncture.

    The estimate is flagged unreliable when fewer than 8 radii or fewer
    than 3 decades are supplied, or when the fit standard error is too
    large to pin down the integer part.
    """
    radii = np.asarray(sorted((float(r) for r in radii), reverse=True), dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    direction = np.exp(1j * angle)

    if hasattr(source, "residues"):
        punctures = np.asarray(source.punctures, dtype=np.complex128)
        residues = [as_matrix(b, square=True) for b in source.residues]
        r_dim = residues[0].shape[0]

        def rhs(z):
            acc = np.zeros((r_dim, r_dim), dtype=np.complex128)
            for a, b in zip(punctures, residues):
                acc -= b / (z - a)
            return acc

        sing = punctures
    else:
        a_series = source.a if hasattr(source, "a") else source

        def rhs(z):
            return -a_series.eval(z - center) / (z - center)

        sing = np.array([center], dtype=np.complex128)

    y = np.asarray(v, dtype=np.complex128).reshape(-1, 1)
    norms = [float(np.linalg.norm(y))]
    if norms[0] == 0.0:
        raise ValueError("zero vector has no growth exponent")
    for r0, r1 in zip(radii[:-1], radii[1:]):
        piece = ("line", center + r0 * direction, center + r1 * direction)
        y = _transport_piece(rhs, piece, y, tol, sing)
        norms.append(float(np.linalg.norm(y)))

    logr = np.log(radii)
    logn = np.log(np.maximum(norms, 1e-300))
    n = len(radii)
    x = logr - logr.mean()
    slope = float(np.dot(x, logn) / np.dot(x, x))
    resid = logn - (logn.mean() + slope * x)
    dof = max(n - 2, 1)
    stderr = float(np.sqrt(np.dot(resid, resid) / dof / np.dot(x, x)))
    decades = (logr.max() - logr.min()) / np.log(10.0)
    to_int = abs(slope - round(slope))
    reliable = n >= 8 and decades >= 3.0 and (
        stderr < 0.05 or (to_int < 10 * stderr and stderr < 0.2)
    )
    exponent = floor_snap(slope, tol=max(1e-6, 3 * stderr))
    return GrowthEstimate(exponent=exponent, slope=slope, stderr=stderr, reliable=bool(reliable))
