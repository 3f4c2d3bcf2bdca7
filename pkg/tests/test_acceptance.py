"""End-to-end acceptance checks for the advertised numerical guarantees.

One test per guarantee, in the order they are documented: constant and
smooth Kac determinant limits, the jump formula (periodic and equidistributed
orbits), the first limit theorem with scheme independence, the singular-value
law, the row-vs-midpoint determinant discriminant, the Widom trace
correction, eigenvalue clustering, and the oracle/property suites backing
the core linear algebra.  Every tolerance is stated inline next to the
assertion it guards; observed margins are noted where they are much smaller.
"""

import math
import time

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kms import (
    MAX_INDEX,
    MIDPOINT,
    MIN_INDEX,
    ROW_INDEX,
    TestFunction,
    build_kms,
    build_lame,
    build_rectangular,
    build_schrodinger,
    cluster_fraction,
    det_ratio,
    eigenvalues,
    empirical_mean,
    extended_range,
    kac_det_ratio_sweep,
    kac_jump_prediction,
    kac_limit,
    log_det,
    lsd_integral,
    moment_trace,
    singular_values,
    widom_correction,
)
from kms.presets import (
    cluster_symbol,
    es_family_symbol,
    ff_potential,
    schrodinger_symbol,
    star_symbol,
    svd_twoband_symbol,
)
from kms.symbol import BandSymbol, PiecewisePotential

LAM_PLUS = (3.0 + math.sqrt(5.0)) / 2.0


def smooth_potential():
    return PiecewisePotential(pieces=(lambda x: 3.5 + np.asarray(x, float) ** 2,))


def rand_poly(rng, deg, realvals=False):
    c = rng.standard_normal(deg + 1)
    if not realvals:
        c = c + 1j * rng.standard_normal(deg + 1)
    return lambda x, c=c: np.polyval(c, np.asarray(x, dtype=complex))


def cofactor_det(A):
    n = A.shape[0]
    if n == 1:
        return complex(A[0, 0])
    return sum((-1) ** j * complex(A[0, j]) *
               cofactor_det(np.delete(np.delete(A, 0, axis=0), j, axis=1))
               for j in range(n))


def charpoly_coeffs(A):
    # Faddeev-LeVerrier: c_k = -tr(A (M_{k-1} + c_{k-1} I)) / k, exact in
    # exact arithmetic, O(n^4) here which is fine at n <= 6.
    n = A.shape[0]
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    Mk = np.zeros_like(A, dtype=complex)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        Mk = A @ (Mk + c[k - 1] * eye)
        c[k] = -np.trace(Mk) / k
    return c


def hausdorff(a, b):
    d = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_constant_potential_determinant_limit():
    """f = 3: det/lam_+^n reaches lam_+/sqrt(5) to 1e-6 by n=200, in < 1 s.

    Convergence is geometric (ratio lam_-/lam_+), so the observed error is
    ~2e-13; the budget is dominated by the tridiagonal recurrence.
    """
    t0 = time.perf_counter()
    f3 = PiecewisePotential(pieces=(lambda x: np.full(np.shape(x), 3.0),))
    M = build_schrodinger(f3, 200, 0.0)
    observed = det_ratio(M, LAM_PLUS, M.m_rows)
    assert abs(observed - LAM_PLUS / math.sqrt(5.0)) < 1e-6
    assert time.perf_counter() - t0 < 1.0


def test_smooth_potential_shifted_sampling_family():
    """f = 3.5 + x^2, shifts 0, 1/2, 1: limits hit to 1e-3 with shrinking error.

    For each shift the det/G^n error must fall monotonically over
    n in {500, 1000, 2000, 4000} and end below 1e-3 (observed <= 1.8e-5;
    the symmetric shift 1/2 superconverges to ~1e-7).  The whole family must
    run in < 5 s, and the shift-0 / shift-1 observed ratio at n = 4000 must
    match the formula ratio to 1e-3, confirming that the limit really is
    adjustable by the sampling shift alone.
    """
    f = smooth_potential()
    ns = np.array([500, 1000, 2000, 4000])
    t0 = time.perf_counter()
    finals = {}
    for eps in (0.0, 0.5, 1.0):
        limit = kac_limit(f, eps).value
        observed = kac_det_ratio_sweep(f, eps, ns)
        errs = np.abs(observed - limit)
        assert all(b < a for a, b in zip(errs, errs[1:])), \
            f"errors not decreasing at eps={eps}: {errs}"
        assert errs[-1] < 1e-3
        finals[eps] = observed[-1]
    assert time.perf_counter() - t0 < 5.0
    formula_ratio = kac_limit(f, 0.0).value / kac_limit(f, 1.0).value
    assert abs(finals[0.0] / finals[1.0] - formula_ratio) < 1e-3


def test_jump_potential_periodic_and_equidistributed_orbits():
    """Jump at 1/2: rational slope gives a 2-periodic orbit, irrational fills.

    (a) c = 1/2: prediction alpha*beta*gamma^{frac'(cn)} holds pointwise to
    5e-3 over n in [2000, 2100] and the observed sequence is 2-periodic to
    the same tolerance (observed periodicity defect ~2.5e-6).
    (b) c = 0.9 - 1.5/pi: same pointwise bound on the window; over
    n <= 10^4 the observed ratios land in at least 90 of 100 equal bins of
    the predicted value interval (observed: all 100).
    """
    window = np.arange(2000, 2101)

    f_half = ff_potential(0.5)
    pred_half = kac_jump_prediction(f_half)
    assert pred_half.period == 2
    obs = kac_det_ratio_sweep(f_half, 1.0, window)
    assert np.max(np.abs(obs - pred_half.predictor(window))) < 5e-3
    assert np.max(np.abs(obs[:-2] - obs[2:])) < 5e-3

    f_irr = ff_potential(0.9 - 1.5 / math.pi)
    pred_irr = kac_jump_prediction(f_irr)
    assert pred_irr.period is None
    obs = kac_det_ratio_sweep(f_irr, 1.0, window)
    assert np.max(np.abs(obs - pred_irr.predictor(window))) < 5e-3
    sweep = kac_det_ratio_sweep(f_irr, 1.0, np.arange(1, 10001))
    lo, hi = pred_irr.value_interval
    bins = np.digitize(sweep, np.linspace(lo, hi, 101))
    hit = np.unique(bins[(bins >= 1) & (bins <= 100)])
    assert hit.size >= 90


def test_first_limit_theorem_moments_and_scheme_independence():
    """Moments of f(x) - 2cos t track the symbol average, any scheme.

    Midpoint sampling: |mean(lam^p) - integral| < 2e-2 * |integral| for
    p <= 4 at n = 1024, with the error decreasing over n in
    {128, 256, 512, 1024} (observed final relative errors <= 9.2e-4).
    Min-, max- and row-indexed sampling agree with the same integrals to the
    same 2e-2 at n = 1024: the limit ignores where diagonals sample.
    """
    s = schrodinger_symbol(smooth_potential())
    sizes = (128, 256, 512, 1024)
    mid = {n: eigenvalues(build_kms(s, n, MIDPOINT)) for n in sizes}
    others = {sch: eigenvalues(build_kms(s, 1024, sch))
              for sch in (MIN_INDEX, MAX_INDEX, ROW_INDEX)}
    for p in (1, 2, 3, 4):
        phi = TestFunction.monomial(p)
        ref = lsd_integral(s, phi)
        errs = [abs(empirical_mean(mid[n], phi) - ref) for n in sizes]
        assert all(b < a for a, b in zip(errs, errs[1:])), \
            f"p={p}: errors not decreasing: {errs}"
        assert errs[-1] < 2e-2 * abs(ref)
        for sch, summ in others.items():
            assert abs(empirical_mean(summ, phi) - ref) < 2e-2 * abs(ref), \
                f"p={p}, scheme={sch.token}"


def test_singular_value_law_square_and_rectangular():
    """Mean sigma^2 reaches the Parseval sum for square and 2:1 shapes.

    Reference sum_k int |a_k(x)|^2 dx = 2.5 + 4/pi for the two-band complex
    symbol; the quadrature route must agree with the closed form to 1e-6
    (dual-route check, observed 2.6e-9), and the empirical means at
    min-dimension 1024 must agree to 2e-2 (observed 3e-3 square,
    5e-4 rectangular).
    """
    s = svd_twoband_symbol()
    ref = 2.5 + 4.0 / math.pi
    assert abs(lsd_integral(s, TestFunction.abs_power(2)) - ref) < 1e-6
    phi = TestFunction.monomial(2)
    for shape in ((1023, 1023), (2047, 1023)):
        M = build_rectangular(s, *shape)
        err = abs(empirical_mean(singular_values(M), phi) - ref)
        assert err < 2e-2, f"shape={shape}: err={err}"


def test_row_vs_midpoint_determinant_discriminant():
    """Row-indexed over midpoint determinants expose the slice-coupling term.

    For log a = 2 e^{it} log 1.2 + x e^{-it} the geometric-mean powers
    cancel in det(row)/det(midpoint), leaving exp(F/2) = 1.2 exactly, where
    F is the coupling between the slice derivative and the band structure
    that only one-sided sampling picks up.  Tolerance 2e-2 at n = 2000 with
    a strictly shrinking error over n in {250, 500, 1000, 2000} (observed
    8.7e-4 -> 1.1e-4, an O(1/n) trend).
    """
    s = es_family_symbol(1.2)
    errs = []
    for n in (250, 500, 1000, 2000):
        ld_row = log_det(build_kms(s, n, ROW_INDEX))
        ld_mid = log_det(build_kms(s, n, MIDPOINT))
        ratio = np.exp(ld_row.log_abs - ld_mid.log_abs
                       + 1j * (ld_row.phase - ld_mid.phase))
        errs.append(abs(ratio - 1.2))
    assert all(b < a for a, b in zip(errs, errs[1:])), errs
    assert errs[-1] < 2e-2


def test_widom_trace_correction():
    """Tr phi(T_n) - dim * integral converges to the Widom correction.

    Constant-coefficient symbol 3 - 2cos t + 0.1 e^{2it}, phi = z^2: the
    matrix-side correction at dim = 2049 matches widom_correction to 5e-3
    (both equal -2; the trace route is exact to ~1e-13 because z^2 needs no
    eigenvalues).  x-dependent check: f(x) - 2cos t with phi = z has
    correction (a_0(0) - a_0(1))/2 = -0.5; the quadrature and the matrix
    side must both land within 5e-3 of it.
    """
    s = BandSymbol(bands={0: lambda x: np.full(np.shape(x), 3.0),
                          1: lambda x: np.full(np.shape(x), -1.0),
                          -1: lambda x: np.full(np.shape(x), -1.0),
                          2: lambda x: np.full(np.shape(x), 0.1)})
    phi2 = TestFunction.monomial(2)
    predicted = widom_correction(s, phi2, K=16)
    M = build_kms(s, 2048, MIDPOINT)
    observed = M.m_rows * (moment_trace(M, 2, 0) - lsd_integral(s, phi2))
    assert abs(predicted - (-2.0)) < 1e-12
    assert abs(observed - predicted) < 5e-3

    s_x = schrodinger_symbol(smooth_potential())
    phi1 = TestFunction.monomial(1)
    predicted = widom_correction(s_x, phi1)
    closed_form = 0.5 * (3.5 - 4.5)
    assert abs(predicted - closed_form) < 5e-3
    M = build_kms(s_x, 2048, MIDPOINT)
    observed = M.m_rows * (moment_trace(M, 1, 0) - lsd_integral(s_x, phi1))
    assert abs(observed - closed_form) < 5e-3


def test_eigenvalue_clustering_three_models():
    """Spectra cluster where the extended range says they should.

    Cluster demo at n = 100: at least 99% of eigenvalues within 0.1 of the
    extended range (observed: all of them).  Lame matrix at n = 50, rho = 1:
    spectrum inside |z| <= 1.05 and on the three-ray star to 1e-6 (the
    graded solver puts them there to machine precision).  Star symbol
    e^{it} + e^{-2it} at n = 50: every eigenvalue at distance > 0.05 from
    the range curve -- eigenvalues need not approach the range of a
    non-normal symbol (observed minimum 0.0502).
    """
    s = cluster_symbol()
    frac = cluster_fraction(eigenvalues(build_kms(s, 100)),
                            extended_range(s), 0.1)
    assert frac >= 0.99

    lam = eigenvalues(build_lame(50, 1.0)).values
    assert np.max(np.abs(lam)) <= 1.05
    rays = np.exp(2j * np.pi * np.arange(3) / 3.0)
    for z in lam:
        t = np.maximum(0.0, np.real(z * np.conj(rays)))
        assert np.min(np.abs(z - t * rays)) < 1e-6

    ev = eigenvalues(build_kms(star_symbol(), 50)).values
    ts = np.linspace(0.0, 2.0 * np.pi, 1 << 14, endpoint=False)
    curve = np.exp(1j * ts) + np.exp(-2j * ts)
    gaps = np.min(np.abs(np.asarray(ev)[:, None] - curve[None, :]), axis=1)
    assert gaps.min() > 0.05


def test_oracle_suites_and_property_invariants():
    """Independent oracles and randomized invariants for the core kernels.

    log_det against full cofactor expansion (n <= 8, rel 1e-10, observed
    ~1e-15); the eigensolver against Faddeev-LeVerrier characteristic
    polynomial roots (n <= 6, Hausdorff 1e-8, observed ~1e-14);
    empirical_mean against trace moments on an exactly Hermitian n = 128
    realization (1e-9, observed ~1e-14).  Then three 200-case property
    suites: conjugate-symmetric bands give exactly Hermitian matrices with
    real spectra; every computed eigenvalue obeys Gershgorin's disks; and
    determinants scale as c^dim under symbol scaling.
    """
    rng = np.random.default_rng(20260815)

    for n in (2, 3, 5, 8):
        for bands in ({k: rand_poly(rng, 2) for k in range(-(n - 1), n)},
                      {k: rand_poly(rng, 1) for k in (-1, 0, 1)}):
            M = build_kms(BandSymbol(bands=bands), n - 1, MIDPOINT)
            ld = log_det(M)
            via_log = np.exp(ld.log_abs) * np.exp(1j * ld.phase)
            via_cof = cofactor_det(M.to_dense())
            assert abs(via_log - via_cof) <= 1e-10 * max(1.0, abs(via_cof))

    for n in (2, 4, 6):
        bands = {k: rand_poly(rng, 2) for k in range(-(n - 1), n)}
        M = build_kms(BandSymbol(bands=bands), n - 1, MIDPOINT)
        ev = eigenvalues(M).values.astype(complex)
        roots = np.roots(charpoly_coeffs(M.to_dense()))
        assert hausdorff(ev, roots) < 1e-8

    h_bands = {0: rand_poly(rng, 3, realvals=True)}
    for k in (1, 2, 3):
        g = rand_poly(rng, 2)
        h_bands[k] = g
        h_bands[-k] = lambda x, g=g: np.conj(g(x))
    MH = build_kms(BandSymbol(bands=h_bands), 127, MIDPOINT)
    A = MH.to_dense()
    assert np.array_equal(A, A.conj().T)
    summ = eigenvalues(MH)
    for p, q in ((1, 0), (2, 0), (1, 1), (2, 1)):
        diff = abs(empirical_mean(summ, TestFunction.monomial(p, q))
                   - moment_trace(MH, p, q))
        assert diff < 1e-9, f"(p, q)=({p}, {q}): {diff}"

    coeff = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False,
                      allow_infinity=False, width=32)
    cpoly = st.lists(st.tuples(coeff, coeff), min_size=1, max_size=3)

    def to_poly(pairs):
        arr = np.asarray([a + 1j * b for a, b in pairs], dtype=complex)
        return lambda x, arr=arr: np.polyval(arr, np.asarray(x, dtype=complex))

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(n=st.integers(4, 24), diag=st.lists(coeff, min_size=1, max_size=3),
           off=cpoly, k=st.integers(1, 3))
    def prop_hermitian(n, diag, off, k):
        f = to_poly(off)
        # Conjugating the coefficients conjugates the Horner evaluation
        # exactly in IEEE arithmetic, so Hermiticity below is exact, not
        # approximate.
        g = to_poly([(a, -b) for a, b in off])
        dn = np.asarray(diag, dtype=complex)
        s = BandSymbol(bands={
            0: lambda x, dn=dn: np.polyval(dn, np.asarray(x, dtype=complex)),
            k: f, -k: g})
        M = build_kms(s, n - 1, MIDPOINT)
        A = M.to_dense()
        assert np.array_equal(A, A.conj().T)
        assert eigenvalues(M).values.dtype.kind == "f"

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(n=st.integers(2, 20),
           bands=st.dictionaries(st.integers(-4, 4), cpoly,
                                 min_size=1, max_size=5))
    def prop_gershgorin(n, bands):
        s = BandSymbol(bands={k: to_poly(c) for k, c in bands.items()})
        M = build_kms(s, n - 1, MIDPOINT)
        A = M.to_dense()
        ev = eigenvalues(M).values.astype(complex)
        centers = np.diag(A)
        radii = np.sum(np.abs(A), axis=1) - np.abs(centers)
        # The graded solver may snap near-zero eigenvalues to exactly 0;
        # that only happens when the diagonal band is absent, where the
        # disks are centered at 0 and contain 0 anyway.
        slack = 1e-7 * max(1.0, float(np.max(np.abs(A))) * A.shape[0])
        for lam in ev:
            assert np.min(np.abs(lam - centers) - radii) <= slack

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(n=st.integers(2, 16),
           bands=st.dictionaries(st.integers(-3, 3), cpoly,
                                 min_size=1, max_size=4),
           cre=st.floats(-2, 2, allow_nan=False, width=32),
           cim=st.floats(-2, 2, allow_nan=False, width=32))
    def prop_det_scaling(n, bands, cre, cim):
        c = complex(cre, cim)
        assume(abs(c) > 0.25)
        fns = {k: to_poly(v) for k, v in bands.items()}
        M = build_kms(BandSymbol(bands=fns), n - 1, MIDPOINT)
        ld = log_det(M)
        assume(np.isfinite(ld.log_abs) and ld.log_abs > -15.0)
        scaled = {k: (lambda x, f=f, c=c: c * f(x)) for k, f in fns.items()}
        Ms = build_kms(BandSymbol(bands=scaled), n - 1, MIDPOINT)
        lds = log_det(Ms)
        dim = M.m_rows
        target = dim * math.log(abs(c)) + ld.log_abs
        assert abs(lds.log_abs - target) <= 1e-9 * max(1.0, abs(target))
        phase = np.exp(1j * lds.phase)
        phase_ref = np.exp(1j * (dim * np.angle(c) + ld.phase))
        assert abs(phase - phase_ref) <= 1e-8

    prop_hermitian()
    prop_gershgorin()
    prop_det_scaling()
