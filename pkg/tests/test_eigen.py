import numpy as np
import pytest
import scipy.linalg

from logconn import (
    SingularMatrixError,
    cluster_expm,
    commuting_log_check,
    floor_snap,
    norm_log,
    norm_log_scalar,
    schur,
    spectral_split,
)
from logconn.eigen import hessenberg, reorder_schur

TWO_PI_I = 2j * np.pi


def test_schur_against_lapack_eigenvalues(rng):
    # oracle: numpy's eigvals (independent LAPACK route)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        t, q = schur(a)
        assert np.linalg.norm(q @ t @ q.conj().T - a) < 1e-11 * max(1, np.linalg.norm(a))
        assert np.linalg.norm(q.conj().T @ q - np.eye(n)) < 1e-12
        assert np.linalg.norm(np.tril(t, -1)) == 0.0
        mine = np.sort_complex(np.diag(t))
        ref = np.sort_complex(np.linalg.eigvals(a))
        assert np.max(np.abs(mine - ref)) < 1e-9 * max(1, np.max(np.abs(ref)))


def test_schur_pathological_inputs():
    # unit-circle spectra and big Jordan blocks stall naive shifted QR
    cases = []
    for n in (2, 3, 4, 6, 8):
        cases.append(np.roll(np.eye(n), 1, axis=0).astype(complex))  # cyclic
    for n in (4, 8, 12):
        cases.append(np.eye(n) + np.diag(np.ones(n - 1), 1) + 0j)  # Jordan
    cases.append(np.diag(np.ones(3), 1) + 0j)  # nilpotent
    cases.append(np.array([[1.0, 1.0], [1e-10, 1.0]], dtype=complex))
    for a in cases:
        t, q = schur(a)
        scale = max(1e-300, np.linalg.norm(a))
        assert np.linalg.norm(q @ t @ q.conj().T - a) < 1e-12 * max(1.0, scale)
        assert np.linalg.norm(np.tril(t, -1)) == 0.0


def test_norm_log_roots_of_unity():
    # cyclic permutations have spectra at the roots of unity; the branch
    # normalization spreads the exponents over [0, 1)
    for n in (2, 3, 4, 6):
        p = np.roll(np.eye(n), 1, axis=0).astype(complex)
        k = norm_log(p).k
        assert np.linalg.norm(cluster_expm(TWO_PI_I * k) - p) < 1e-12
        got = np.sort(np.linalg.eigvals(k).real)
        assert np.allclose(got, np.arange(n) / n, atol=1e-9)


def test_hessenberg_structure(rng):
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h, q = hessenberg(a)
    assert np.linalg.norm(np.tril(h, -2)) == 0.0
    assert np.linalg.norm(q @ h @ q.conj().T - a) < 1e-12 * np.linalg.norm(a)


def test_reorder_schur_moves_selection(rng):
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    t, q = schur(a)
    want = np.diag(t)[3]
    t2, q2 = reorder_schur(t, q, [False, False, False, True, False])
    assert abs(t2[0, 0] - want) < 1e-10
    assert np.linalg.norm(q2 @ t2 @ q2.conj().T - a) < 1e-10 * np.linalg.norm(a)


def test_spectral_split_identity_and_diag():
    sp = spectral_split(np.eye(3))
    assert len(sp.clusters) == 1
    mu, mult, basis = sp.clusters[0]
    assert mu == pytest.approx(1.0)
    assert mult == 3
    sp = spectral_split(np.diag([1.0, 2.0]))
    assert len(sp.clusters) == 2


def test_spectral_split_jordan_block():
    j = np.array([[5.0, 1.0], [0.0, 5.0]])
    sp = spectral_split(j)
    assert len(sp.clusters) == 1
    mu, mult, basis = sp.clusters[0]
    assert mult == 2
    # oracle: invariance and the exp/log round trip
    assert np.linalg.norm(j @ basis - basis @ (basis.conj().T @ j @ basis)) < 1e-10
    k = norm_log(j).k
    assert np.linalg.norm(cluster_expm(TWO_PI_I * k) - j) < 1e-10


def test_spectral_split_invariance_random(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        sp = spectral_split(g)
        assert sum(m for _, m, _ in sp.clusters) == n
        joint = sp.joint_basis()
        assert np.linalg.matrix_rank(joint) == n
        for _, _, basis in sp.clusters:
            restr = basis.conj().T @ g @ basis
            resid = g @ basis - basis @ restr
            assert np.linalg.norm(resid) < 1e-7 * np.linalg.norm(g)


def test_norm_log_identity_and_closed_forms():
    assert np.allclose(norm_log(np.eye(4)).k, 0.0)
    # single negative eigenvalue lands on the half-open boundary Re = 1/2
    assert np.allclose(norm_log(np.array([[-1.0]])).k, [[0.5]])
    # unipotent: (1/2 pi i) times the nilpotent part
    k = norm_log(np.array([[1.0, 1.0], [0.0, 1.0]])).k
    assert np.allclose(k, np.array([[0.0, 1.0], [0.0, 0.0]]) / TWO_PI_I)
    # positive real scalar: purely imaginary logarithm
    k = norm_log(np.array([[2.0]])).k
    assert np.allclose(k, [[-1j * np.log(2.0) / (2 * np.pi)]])


def test_norm_log_round_trip_random(rng):
    # oracle: scaling-and-squaring exponential (scipy) on generic matrices
    count = 0
    while count < 120:
        n = int(rng.integers(1, 7))
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        if np.linalg.cond(g) > 1e6:
            continue
        count += 1
        k = norm_log(g).k
        back = scipy.linalg.expm(TWO_PI_I * k)
        assert np.linalg.norm(back - g) <= 1e-9 * np.linalg.norm(g)
        ev = np.linalg.eigvals(k)
        assert np.all(ev.real >= -1e-10)
        assert np.all(ev.real < 1.0)


def test_norm_log_singular():
    with pytest.raises(SingularMatrixError):
        norm_log(np.zeros((2, 2)))


def test_norm_log_scalar_branches():
    assert norm_log_scalar(1.0) == 0.0
    assert norm_log_scalar(-1.0) == pytest.approx(0.5)
    mu = norm_log_scalar(np.exp(-0.3j))
    assert mu.real == pytest.approx(1 - 0.3 / (2 * np.pi))
    # snap just below the positive real axis to the 0 branch
    mu = norm_log_scalar(np.exp(-1e-12j), snap_tol=1e-8)
    assert abs(mu.real) < 1e-9


def test_cluster_expm_matches_series(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert np.linalg.norm(cluster_expm(m) - scipy.linalg.expm(m)) < 1e-9 * max(
            1, np.linalg.norm(scipy.linalg.expm(m))
        )


def test_cluster_expm_defective_large_nilpotent():
    # scaling-and-squaring alone loses digits here; the clustered form must not
    k = np.array(
        [
            [0.2 - 0.8j, 0.0, 0.0],
            [0.0, 0.9 + 0.3j, 3.4 - 3.4j],
            [0.0, 0.0, 0.9 + 0.3j],
        ]
    )
    c = np.log(0.5) + TWO_PI_I
    direct = cluster_expm(k * c)
    split_product = cluster_expm(k * np.log(0.5)) @ cluster_expm(k * TWO_PI_I)
    assert np.linalg.norm(direct - split_product) < 1e-10 * np.linalg.norm(direct)


def test_commuting_log_check_identity_conjugation(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert commuting_log_check(g, g, np.eye(3))
    for _ in range(10):
        c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        if np.linalg.cond(c) > 1e4:
            continue
        g2 = np.linalg.inv(c) @ g @ c  # G C = C G' exactly by construction
        assert commuting_log_check(g, g2, c)


def test_commuting_log_check_with_power(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    g2 = g.copy()
    assert commuting_log_check(g, g2, g @ g)  # C in the commutant


def test_floor_snap():
    assert floor_snap(1.5) == 1
    assert floor_snap(-0.3) == -1
    assert floor_snap(2.0 - 1e-12) == 2
    assert floor_snap(2.0 + 1e-12) == 2
    assert floor_snap(1.9999) == 1
