"""Oracle tests for eigenvalue/singular-value summaries and functionals."""

import numpy as np
import pytest

from kms.errors import BranchError, SizeCapError
from kms.matgen import (
    MIDPOINT,
    MatrixRealization,
    build_kms,
    build_lame,
    build_schrodinger,
)
from kms.spectra import (
    TestFunction,
    cluster_fraction,
    eigenvalues,
    empirical_mean,
    lsd_integral,
    moment_trace,
    singular_values,
)
from kms.symbol import BandSymbol, PiecewisePotential, RegionMask, extended_range
from kms.presets import schrodinger_symbol, star_symbol


def dense_realization(A):
    A = np.asarray(A, dtype=np.complex128)
    return MatrixRealization(A.shape[0], A.shape[1], "dense", A, None,
                             -(A.shape[0] - 1), A.shape[1] - 1)


# ---------------------------------------------------------------------------
# eigenvalues


def test_eigenvalues_diagonal():
    S = eigenvalues(dense_realization(np.diag([3.0, 1.0, 2.0])))
    np.testing.assert_allclose(S.values, [1.0, 2.0, 3.0], atol=1e-14)
    assert S.kind == "eigenvalues"
    assert S.n == 3


def test_eigenvalues_2x2_schrodinger():
    f = PiecewisePotential(pieces=(lambda x: np.asarray(x, float),))
    S = eigenvalues(build_schrodinger(f, 2, 1.0))
    want = [0.75 - np.sqrt(1.0625), 0.75 + np.sqrt(1.0625)]
    np.testing.assert_allclose(S.values, want, atol=1e-12)
    np.testing.assert_allclose(S.values, [-0.280776, 1.780776], atol=5e-7)


def test_eigenvalues_hermitian_path_real():
    f = PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))
    S = eigenvalues(build_schrodinger(f, 64, 1.0))
    assert np.all(S.values.imag == 0)
    assert np.all(np.diff(S.values.real) >= 0)
    assert S.residual < 1e-8


def test_eigenvalues_hermitian_banded_path():
    # bandwidth-2 Hermitian symbol exercises the banded solver
    s = BandSymbol(bands={0: lambda x: 1.0 + np.asarray(x, float),
                          2: lambda x: 0.5 * np.asarray(x, float),
                          -2: lambda x: 0.5 * np.asarray(x, float)})
    M = build_kms(s, 63, MIDPOINT)
    assert M.storage == "banded"
    S = eigenvalues(M)
    D = np.linalg.eigvalsh(M.to_dense())
    np.testing.assert_allclose(S.values.real, D, atol=1e-10)


def test_eigenvalues_general_pair():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])  # eigenvalues +-i
    S = eigenvalues(dense_realization(A))
    np.testing.assert_allclose(np.sort(S.values.imag), [-1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(S.values.real, 0.0, atol=1e-12)


def test_eigenvalues_general_ordering():
    A = np.diag([2.0 + 1.0j, 1.0 + 5.0j, 1.0 + 2.0j])
    S = eigenvalues(dense_realization(A))
    np.testing.assert_allclose(S.values, [1.0 + 2.0j, 1.0 + 5.0j, 2.0 + 1.0j],
                               atol=1e-14)


def test_eigenvalues_star_on_rays():
    # spectrum of T_50(e^{it} + e^{-2it}) sits on the rays arg = 0, 2pi/3, 4pi/3
    S = eigenvalues(build_kms(star_symbol(), 50, MIDPOINT))
    vals = S.values
    nonzero = vals[np.abs(vals) > 1e-9]
    angles = np.angle(nonzero ** 3)  # on a ray <=> cube is a positive real
    assert np.max(np.abs(angles)) < 1e-6


def test_eigenvalues_size_caps():
    f = PiecewisePotential(pieces=(lambda x: 3.0 + np.asarray(x, float),))
    with pytest.raises(SizeCapError):
        eigenvalues(build_schrodinger(f, 5000, 1.0))
    rng = np.random.default_rng(0)
    big = dense_realization(rng.normal(size=(600, 600)))
    with pytest.raises(SizeCapError):
        eigenvalues(big)


def test_eigenvalues_charpoly_oracle():
    # Faddeev-LeVerrier characteristic polynomial, roots via companion matrix
    rng = np.random.default_rng(3)
    for n in (2, 4, 6):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        S = eigenvalues(dense_realization(A))
        coeffs = [1.0 + 0.0j]
        Mk = np.zeros_like(A)
        c = 1.0 + 0.0j
        for k in range(1, n + 1):
            Mk = A @ Mk + c * np.eye(n)
            c = -np.trace(A @ Mk) / k
            coeffs.append(c)
        roots = np.roots(coeffs)
        d = np.abs(S.values[None, :] - roots[:, None])
        assert np.max(np.min(d, axis=1)) < 1e-8
        assert np.max(np.min(d, axis=0)) < 1e-8


# ---------------------------------------------------------------------------
# singular values


def test_singular_values_identity():
    S = singular_values(dense_realization(np.eye(4)))
    np.testing.assert_allclose(S.values, np.ones(4), atol=1e-12)
    assert S.kind == "singular_values"


def test_singular_values_diag():
    S = singular_values(dense_realization(np.diag([3.0, -4.0])))
    np.testing.assert_allclose(S.values, [4.0, 3.0], atol=1e-12)


def test_singular_values_match_hermitian_moduli():
    s = BandSymbol(bands={0: lambda x: np.asarray(x, float) - 0.5,
                          1: lambda x: np.asarray(x, float),
                          -1: lambda x: np.asarray(x, float)})
    M = build_kms(s, 40, MIDPOINT)
    sv = singular_values(M).values
    ev = eigenvalues(M).values
    np.testing.assert_allclose(sv, np.sort(np.abs(ev))[::-1], atol=1e-8)


def test_singular_values_rectangular_count():
    from kms.matgen import build_rectangular
    from kms.presets import svd_twoband_symbol

    M = build_rectangular(svd_twoband_symbol(), 21, 10)
    S = singular_values(M)
    assert len(S.values) == 11
    assert np.all(np.diff(S.values) <= 0)
    assert np.all(S.values >= 0)


# ---------------------------------------------------------------------------
# test functions and means


def test_empirical_mean_monomial():
    S = eigenvalues(dense_realization(np.diag([2.0, 2.0, 2.0])))
    assert empirical_mean(S, TestFunction.from_id("z^2")) == pytest.approx(4.0)


def test_empirical_mean_indicator():
    S = eigenvalues(dense_realization(np.diag([-1.0, 1.0, 3.0])))
    phi = TestFunction.from_id("indicator[0,100]")
    assert empirical_mean(S, phi) == pytest.approx(2.0 / 3.0)
    phi2 = TestFunction.from_id("indicator[0.5,1.5]")
    assert empirical_mean(S, phi2) == pytest.approx(1.0 / 3.0)


def test_empirical_mean_log_branch_error():
    S = eigenvalues(dense_realization(np.diag([-1.0, 1.0])))
    with pytest.raises(BranchError):
        empirical_mean(S, TestFunction.from_id("log"))


def test_phi_ids_roundtrip():
    for text, val, want in [
        ("z", 2.0 + 1.0j, 2.0 + 1.0j),
        ("z^3", 2.0, 8.0),
        ("z^1 zbar^1", 3.0 + 4.0j, 25.0),
        ("abs^2", 3.0 + 4.0j, 25.0),
        ("log", np.e, 1.0),
    ]:
        phi = TestFunction.from_id(text)
        got = phi.apply(np.array([val]))[0]
        assert got == pytest.approx(want, abs=1e-12)


def test_empirical_mean_matches_integral_at_1024():
    f = PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))
    s = schrodinger_symbol(f)
    S = eigenvalues(build_kms(s, 1024, MIDPOINT))
    phi = TestFunction.from_id("z")
    mean = empirical_mean(S, phi)
    # limit = int f = 3.5 + 1/3
    assert mean == pytest.approx(3.5 + 1.0 / 3.0, abs=2e-2)


# ---------------------------------------------------------------------------
# lsd_integral


def test_lsd_constant():
    s = BandSymbol(bands={0: lambda x: np.full(np.shape(np.asarray(x)), 2.5)})
    for pid, want in [("z", 2.5), ("z^2", 6.25), ("abs^2", 6.25)]:
        got = lsd_integral(s, TestFunction.from_id(pid), N_x=17, N_t=64)
        assert got == pytest.approx(want, abs=1e-12)


def test_lsd_schrodinger_symbol():
    f = PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))
    s = schrodinger_symbol(f)
    z1 = lsd_integral(s, TestFunction.from_id("z"), N_x=129, N_t=256)
    assert z1 == pytest.approx(23.0 / 6.0, abs=1e-10)
    assert z1 == pytest.approx(3.833333, abs=5e-7)
    z2 = lsd_integral(s, TestFunction.from_id("z^2"), N_x=129, N_t=256)
    # (1/2pi) int (f - 2cos t)^2 dt = f^2 + 2; int_0^1 (f^2 + 2) dx
    want = 12.25 + 7.0 / 3.0 + 0.2 + 2.0
    assert z2 == pytest.approx(want, abs=1e-9)
    assert z2 == pytest.approx(16.783333, abs=5e-7)


def test_lsd_star_cubed():
    got = lsd_integral(star_symbol(), TestFunction.from_id("z^3"), N_x=17, N_t=64)
    assert got == pytest.approx(3.0, abs=1e-12)


# ---------------------------------------------------------------------------
# moment_trace


def test_moment_identity():
    assert moment_trace(dense_realization(np.eye(5)), 3, 0) == pytest.approx(1.0)


def test_moment_star_first():
    M = build_kms(star_symbol(), 32, MIDPOINT)
    assert moment_trace(M, 1, 0) == pytest.approx(0.0, abs=1e-14)


def test_moment_star_cubed_near_lsd():
    M = build_kms(star_symbol(), 63, MIDPOINT)
    got = moment_trace(M, 3, 0)
    assert got == pytest.approx(3.0, abs=6.0 / 64.0)


def test_moment_vs_empirical_mean_hermitian():
    s = BandSymbol(bands={0: lambda x: np.sin(np.asarray(x, float)),
                          1: lambda x: np.asarray(x, float),
                          -1: lambda x: np.asarray(x, float)})
    M = build_kms(s, 100, MIDPOINT)
    S = eigenvalues(M)
    for p, q in [(1, 0), (2, 0), (1, 1), (2, 1)]:
        phi = TestFunction.monomial(p, q)
        a = empirical_mean(S, phi)
        b = moment_trace(M, p, q)
        assert abs(a - b) < 1e-9


# ---------------------------------------------------------------------------
# cluster_fraction


def test_cluster_fraction_all_at_center():
    cells = np.zeros((64, 64), dtype=bool)
    cells[32, 32] = True
    R = RegionMask(-1.0, 1.0, -1.0, 1.0, 64, cells)
    vals = np.full(5, (32.5 / 64.0) * 2.0 - 1.0 + 1j * ((32.5 / 64.0) * 2.0 - 1.0))
    from kms.spectra import SpectralSummary

    S = SpectralSummary(kind="eigenvalues", values=vals, n=5, residual=0.0)
    assert cluster_fraction(S, R, 0.1) == pytest.approx(1.0)


def test_cluster_fraction_star_away_from_range_curve():
    # eigenvalues of the star matrix stay away from the bare range curve
    S = eigenvalues(build_kms(star_symbol(), 50, MIDPOINT))
    ts = 2.0 * np.pi * np.arange(4096) / 4096
    curve = np.exp(1j * ts) + np.exp(-2j * ts)
    res = 256
    lo, hi = -2.4, 2.4
    cells = np.zeros((res, res), dtype=bool)
    ii = np.clip(((curve.real - lo) / (hi - lo) * res).astype(int), 0, res - 1)
    jj = np.clip(((curve.imag - lo) / (hi - lo) * res).astype(int), 0, res - 1)
    cells[ii, jj] = True
    R = RegionMask(lo, hi, lo, hi, res, cells)
    frac = cluster_fraction(S, R, 0.02)
    assert frac < 1.0


def test_cluster_fraction_lame_inside_extended_star():
    S = eigenvalues(build_lame(50, 1.0))
    R = extended_range(star_symbol(), N_x=3, N_t=2048, resolution=128)
    # Lame spectrum clusters inside the star region (its symbol's extended
    # range is contained in the closed star region scaled to |z| <= 2)
    assert cluster_fraction(S, R, 0.3) == pytest.approx(1.0)
