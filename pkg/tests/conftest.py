"""Shared random generators for the test corpus.

Connections model germs of analytic matrix functions: the residue has
eigenvalue real parts within a few units and imaginary parts below one
(the loop comparison conditions like exp(2 pi |Im lambda|)), and the
higher coefficients decay geometrically so the gauge series stays in
the float64 regime.  Resonant draws shift eigenvalues by exact
integers.
"""

import numpy as np
import pytest

from logconn import LocalLogConnection, MatrixSeries, Representation


def random_connection(rng, r, order, rho=0.5, resonant=False):
    if resonant:
        k = int(rng.integers(1, r + 1))
        base = rng.uniform(-2.0, 2.0, size=k) + 1j * rng.uniform(-0.9, 0.9, size=k)
        eigs = [base[i % k] + (int(rng.integers(-2, 3)) if i >= k else 0) for i in range(r)]
        q, _ = np.linalg.qr(rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))
        shear = np.eye(r) + 0.3 * np.triu(rng.normal(size=(r, r)), 1)
        s = q @ shear
        a0 = s @ np.diag(np.array(eigs, dtype=complex)) @ np.linalg.inv(s)
    else:
        a0 = rng.uniform(-1, 1, size=(r, r)) + 1j * rng.uniform(-0.6, 0.6, size=(r, r))
    tail = [
        (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))) * rho ** j
        for j in range(1, order + 1)
    ]
    coeffs = np.concatenate([[a0], tail]) if order else np.array([a0])
    return LocalLogConnection(MatrixSeries(coeffs))


def random_invertible(rng, r, scale=1.0):
    while True:
        g = scale * (rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)))
        if np.linalg.cond(g) < 1e4:
            return g


def sorted_punctures(rng, n, min_clearance=0.3):
    """Punctures indexed so the standard loop product telescopes to I.

    Draws are rejected until the standard-loop connectors keep a healthy
    clearance from foreign punctures: threading a connector through a
    needle-thin channel conditions the transport like a near-pole
    passage and no integrator survives that at tight tolerances.
    """
    from logconn import relation_order, standard_loops
    from logconn.verify import _connector_clearance

    for _ in range(500):
        pts = rng.uniform(-2, 2, size=n) + 1j * rng.uniform(-2, 2, size=n)
        if n > 1:
            minpair = float(np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(n) * 10))
            if minpair < 0.5:
                continue
        else:
            minpair = 1.0
        loops, s = standard_loops(pts)
        if n > 1 and _connector_clearance(pts, s) < min_clearance * minpair:
            continue
        order = relation_order(pts, s)
        return pts[list(order)]
    raise RuntimeError("no well-conditioned puncture configuration found")


def scaled_residues(rng, n, r, budget=1.5):
    """Random residues summing to zero with bounded total spectral radius.

    Monodromy factors scale like exp(2 pi rho(B)); keeping the summed
    spectral radii within `budget` keeps loop products verifiable in
    float64 (partial products amplify integration error multiplicatively).
    """
    raw = [rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)) for _ in range(n - 1)]
    raw.append(-sum(raw))
    total = sum(max(np.abs(np.linalg.eigvals(b))) for b in raw)
    t = min(1.0, budget / total)
    return [b * t for b in raw]


def random_representation(rng, n, r):
    """Generic representation over angular-ordered punctures."""
    mats = [random_invertible(rng, r) for _ in range(n - 1)]
    prod = np.eye(r, dtype=complex)
    for g in mats:
        prod = prod @ g
    mats.append(np.linalg.inv(prod))
    return Representation(sorted_punctures(rng, n), mats)


def random_commuting_representation(rng, n, r):
    """Commuting loop matrices built from one generic matrix's functions."""
    s = random_invertible(rng, r)
    sinv = np.linalg.inv(s)
    eigs = rng.uniform(0.4, 2.0, size=r) * np.exp(1j * rng.uniform(-2.5, 2.5, size=r))
    mats = []
    prod_diag = np.ones(r, dtype=complex)
    for _ in range(n - 1):
        d = rng.uniform(0.5, 1.8, size=r) * np.exp(1j * rng.uniform(-2.0, 2.0, size=r))
        if rng.uniform() < 0.3:
            d = np.full(r, d[0])
        prod_diag *= d
        mats.append(s @ np.diag(d) @ sinv)
    mats.append(s @ np.diag(1.0 / prod_diag) @ sinv)
    return Representation(sorted_punctures(rng, n), mats)


def upper_triangular_representation(rng, diag_columns, couple=0.3):
    """Upper-triangular rep with prescribed diagonals; last matrix implied."""
    r = len(diag_columns[0])
    mats = []
    for dc in diag_columns:
        g = np.diag(np.array(dc, dtype=complex))
        g = g + couple * np.triu(rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r)), 1)
        mats.append(g)
    prod = np.eye(r, dtype=complex)
    for g in mats:
        prod = prod @ g
    mats.append(np.linalg.inv(prod))
    n = len(mats)
    return Representation(sorted_punctures(rng, n), mats, tol=1e-7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
