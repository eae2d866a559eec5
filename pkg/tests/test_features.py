import math

import mpmath as mp
import numpy as np
import pytest

from semgshift import features
from semgshift.core import Dataset, LabeledWindow, ParameterError, Provenance
from semgshift.features import (
    FEATURE_SETS,
    ar_levinson,
    cepstral_from_ar,
    etd_features,
    extract_array,
    extract_features,
    hudgins_primitives,
    mdwt_features,
    ninapro_features,
    per_channel_dim,
    sample_entropy,
    sampen_features,
    td_features,
)


# ------------------------------------------------------- independent oracles


def derive_daubechies(vanishing_moments=7):
    """Scaling filter by spectral factorization at 60-digit precision.

    Independent of the package constants: the half-band polynomial root set
    is built from scratch and only the minimum-phase (inside unit circle)
    factors are kept.
    """
    mp.mp.dps = 60
    k = vanishing_moments
    p_coeffs = [mp.binomial(k - 1 + j, j) for j in range(k)]
    ys = mp.polyroots([mp.mpf(c) for c in reversed(p_coeffs)], maxsteps=500, extraprec=400)
    zs = []
    for y in ys:
        b = 4 * y - 2
        disc = mp.sqrt(b * b - 4)
        for z in ((-b + disc) / 2, (-b - disc) / 2):
            if abs(z) < 1:
                zs.append(z)
    assert len(zs) == k - 1

    def polymul(p, q):
        out = [mp.mpc(0)] * (len(p) + len(q) - 1)
        for i, pi in enumerate(p):
            for j, qj in enumerate(q):
                out[i + j] += pi * qj
        return out

    poly = [mp.mpc(1)]
    for _ in range(k):
        poly = polymul(poly, [mp.mpc(1), mp.mpc(1)])
    for zj in zs:
        poly = polymul(poly, [-zj, mp.mpc(1)])
    h = [c.real for c in poly]
    s = sum(h)
    h = [c * mp.sqrt(2) / s for c in h]
    half = len(h) // 2
    if sum(c * c for c in h[half:]) > sum(c * c for c in h[:half]):
        h = h[::-1]
    return h


@pytest.fixture(scope="module")
def db7():
    return derive_daubechies(7)


def mp_dwt_step(xs, filt):
    """One analysis level at mpmath precision, same edge convention as the package."""
    pad = len(filt) - 1
    ext = xs[pad - 1 :: -1] + xs + xs[: -pad - 1 : -1]
    nv = len(ext) - pad
    fr = filt[::-1]
    y = [sum(fr[i] * ext[i + t] for i in range(len(filt))) for t in range(nv)]
    return y[1::2]


def mp_mdwt_marginals(x, h, levels=3):
    dec_lo = h[::-1]
    dec_hi = [hi * (1 if n % 2 else -1) for n, hi in enumerate(h)]
    a = [mp.mpf(float(v)) for v in x]
    out = []
    for _ in range(levels):
        d = mp_dwt_step(a, dec_hi)
        a = mp_dwt_step(a, dec_lo)
        out.append(sum(abs(c) for c in d))
    out.append(sum(abs(c) for c in a))
    return [float(v) for v in out]


def brute_sample_entropy(x, m=2, r_factor=0.2):
    """Direct O(N^2) template counting; must agree with the fast kernel exactly."""
    x = np.asarray(x, dtype=np.float64)
    r = r_factor * float(np.std(x))
    nt = x.shape[0] - m

    def matches(mm):
        c = 0
        for i in range(nt - 1):
            for j in range(i + 1, nt):
                if max(abs(x[i + k] - x[j + k]) for k in range(mm)) <= r:
                    c += 1
        return c

    b = matches(m)
    a = matches(m + 1)
    if a == 0 or b == 0:
        return -np.log(2.0 / (nt * (nt - 1.0)))
    return -np.log(a / b)


# ------------------------------------------------------------------ td / etd


class TestHudgins:
    def test_fixture_values(self):
        mav, wl, zc, ssc = hudgins_primitives([1.0, -1.0, 2.0], threshold=0.0)
        assert mav == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert wl == 5.0
        assert zc == 2.0
        assert ssc == 1.0

    def test_zc_dead_zone(self):
        x = [1.0, -1.0, 1.0, -1.0]
        assert hudgins_primitives(x, threshold=0.5)[2] == 3.0
        assert hudgins_primitives(x, threshold=5.0)[2] == 0.0

    def test_ssc_threshold(self):
        x = [0.0, 1.0, 0.0, 1.0, 0.0]
        assert hudgins_primitives(x, threshold=0.5)[3] == 3.0
        assert hudgins_primitives(x, threshold=2.0)[3] == 0.0

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(200)
        assert hudgins_primitives(x, 0.01) == hudgins_primitives(-x, 0.01)

    def test_validation(self):
        with pytest.raises(ParameterError):
            hudgins_primitives([1.0, 2.0])
        with pytest.raises(ParameterError):
            hudgins_primitives([1.0, 2.0, 3.0], threshold=-0.1)


class TestEtd:
    def test_first_four_match_td(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((3, 100))
        td = td_features(w, tau=0.02).values.reshape(3, 4)
        etd = etd_features(w, tau=0.02).values.reshape(3, 9)
        assert np.array_equal(etd[:, :4], td)

    def test_rms_iav_skew_fixture(self):
        w = np.array([[0.0, 0.0, 3.0]])
        vals = etd_features(w, tau=0.0).values
        rms, iav, skew = vals[4], vals[5], vals[6]
        assert rms == pytest.approx(math.sqrt(3.0), abs=1e-12)
        assert iav == 3.0
        # population moments: m2 = 2, m3 = 2
        assert skew == pytest.approx(2.0 / 2.0**1.5, abs=1e-12)

    def test_hjorth_against_direct_formulas(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(500)
        vals = etd_features(x[None, :], tau=0.0).values
        mob = math.sqrt(np.var(np.diff(x)) / np.var(x))
        comp = math.sqrt(np.var(np.diff(x, 2)) / np.var(np.diff(x))) / mob
        assert vals[7] == pytest.approx(mob, abs=1e-12)
        assert vals[8] == pytest.approx(comp, abs=1e-12)

    def test_constant_channel_degenerates_to_zeros(self):
        vals = etd_features(np.full((1, 50), 2.5), tau=0.01).values
        # wl, zc, ssc, skew, mobility, complexity all zero; mav/rms/iav nonzero
        assert vals[1] == 0.0 and vals[2] == 0.0 and vals[3] == 0.0
        assert vals[6] == 0.0 and vals[7] == 0.0 and vals[8] == 0.0
        assert vals[0] == 2.5


# ---------------------------------------------------------------- ar/cepstrum


class TestAr:
    def test_matches_direct_toeplitz_solve(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.standard_normal(64)
            order = 4
            n = x.shape[0]
            r = np.array([np.dot(x[: n - k], x[k:]) / n for k in range(order + 1)])
            toep = np.array([[r[abs(i - j)] for j in range(order)] for i in range(order)])
            want = np.linalg.solve(toep, -r[1:])
            got = ar_levinson(x, order)
            assert np.allclose(got, want, atol=1e-10)

    def test_recovers_known_process(self):
        rng = np.random.default_rng(4)
        a_true = np.array([-0.5, 0.25])
        n = 200_000
        e = rng.standard_normal(n)
        x = np.zeros(n)
        for t in range(2, n):
            x[t] = -a_true[0] * x[t - 1] - a_true[1] * x[t - 2] + e[t]
        got = ar_levinson(x[1000:], order=2)
        assert np.allclose(got, a_true, atol=0.02)

    def test_zero_input_gives_zeros(self):
        assert np.array_equal(ar_levinson(np.zeros(32), 4), np.zeros(4))

    def test_cepstral_fixture(self):
        c = cepstral_from_ar([-0.5, 0.0])
        assert c[0] == pytest.approx(0.5, abs=1e-15)
        assert c[1] == pytest.approx(0.125, abs=1e-15)

    def test_cepstrum_is_log_spectrum_series(self):
        # c_n are the Taylor coefficients of -log A(z) for minimum-phase A,
        # recoverable via FFT of the complex log on a fine grid
        rng = np.random.default_rng(5)
        x = rng.standard_normal(4096)
        a = ar_levinson(x, 4)
        nfft = 8192
        aw = np.fft.fft(np.concatenate([[1.0], a]), nfft)
        cep = np.fft.ifft(-np.log(aw)).real
        got = cepstral_from_ar(a)
        assert np.allclose(got, cep[1:5], atol=1e-9)


# -------------------------------------------------------------------- sampen


class TestSampleEntropy:
    def test_equals_brute_force_on_random_windows(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(20, 80))
            x = rng.standard_normal(n)
            assert sample_entropy(x) == brute_sample_entropy(x)

    def test_cap_fixture(self):
        # spread-out ramp: no template matches at the small tolerance
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert sample_entropy(x, m=2, r_factor=0.01) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_constant_input_is_zero(self):
        assert sample_entropy(np.zeros(64)) == 0.0
        assert sample_entropy(np.full(64, 3.3)) == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(128)
        assert sample_entropy(2.0 * x) == sample_entropy(x)

    def test_validation(self):
        with pytest.raises(ParameterError):
            sample_entropy(np.zeros(3), m=2)


# ---------------------------------------------------------------------- mdwt


class TestMdwt:
    def test_matches_high_precision_reference(self, db7):
        rng = np.random.default_rng(8)
        for n in (64, 100, 256):
            x = rng.standard_normal(n)
            got = mdwt_features(x)
            want = mp_mdwt_marginals(list(x), db7)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-9)

    def test_package_filter_matches_derivation(self, db7):
        embedded = features._DB7
        derived = np.array([float(c) for c in db7])
        assert np.max(np.abs(embedded - derived)) < 1e-15

    def test_constant_signal_has_zero_details(self):
        vals = mdwt_features(np.full(128, 5.0))
        assert vals[0] == pytest.approx(0.0, abs=1e-10)
        assert vals[1] == pytest.approx(0.0, abs=1e-10)
        assert vals[2] == pytest.approx(0.0, abs=1e-10)
        # each lowpass level scales a constant by sqrt(2)
        assert vals[3] > 0

    def test_minimum_length(self):
        with pytest.raises(ParameterError):
            mdwt_features(np.zeros(13))
        mdwt_features(np.zeros(14))


# ------------------------------------------------------------- vector fronts


def make_window(ch=3, t=64, gesture=2, seed=0):
    rng = np.random.default_rng(seed)
    return LabeledWindow(
        samples=rng.standard_normal((ch, t)).astype(np.float32),
        gesture=gesture,
        provenance=Provenance(subject=1, session=1, repetition=1, start_sample=0),
    )


class TestVectorFronts:
    def test_registry(self):
        assert FEATURE_SETS == {"td": 4, "etd": 9, "ninapro": 4, "sampen": 7}
        assert per_channel_dim("etd") == 9
        with pytest.raises(ParameterError):
            per_channel_dim("bogus")

    def test_shapes_and_labels(self):
        w = make_window()
        for name, fn in (
            ("td", td_features),
            ("etd", etd_features),
            ("ninapro", ninapro_features),
            ("sampen", sampen_features),
        ):
            fv = fn(w)
            assert fv.values.shape == (3 * FEATURE_SETS[name],)
            assert fv.channels == 3
            assert fv.label == 2
            assert np.isfinite(fv.values).all()

    def test_channel_block_layout(self):
        w = make_window(ch=4)
        fv = td_features(w, tau=0.02).values.reshape(4, 4)
        for c in range(4):
            single = td_features(w.samples[c : c + 1].astype(np.float64), tau=0.02)
            assert np.allclose(fv[c], single.values, atol=1e-12)

    def test_sampen_vector_composition(self):
        w = make_window(ch=1, t=80)
        vals = sampen_features(w).values
        x = np.asarray(w.samples[0], dtype=np.float64)
        assert vals[0] == sample_entropy(x)
        assert np.allclose(vals[1:5], cepstral_from_ar(ar_levinson(x, 4)), atol=1e-12)
        assert vals[5] == pytest.approx(np.sqrt(np.mean(x * x)), abs=1e-12)
        assert vals[6] == pytest.approx(np.sum(np.abs(np.diff(x))), abs=1e-12)


class TestExtraction:
    def test_matrix_matches_single_windows(self):
        ds = Dataset([make_window(seed=i, gesture=1 + i % 2) for i in range(7)], 2)
        for name in FEATURE_SETS:
            fm = extract_features(ds, name, tau=0.015)
            assert fm.values.shape == (7, 3 * FEATURE_SETS[name])
            assert list(fm.labels) == [1 + i % 2 for i in range(7)]
            for i, w in enumerate(ds):
                single = features._single(w, name, 0.015 if name in ("td", "etd") else 0.0)
                assert np.allclose(fm.values[i], single.values, atol=1e-12)

    def test_chunked_array_path(self):
        rng = np.random.default_rng(9)
        stack = rng.standard_normal((65, 128, 300))
        got = extract_array(stack, "td", tau=0.01)
        one_by_one = np.stack(
            [td_features(stack[i], tau=0.01).values for i in range(stack.shape[0])]
        )
        assert np.allclose(got, one_by_one, atol=1e-12)

    def test_standardization_applied_before_features(self):
        from semgshift.dsp import apply_standardization, fit_channel_stats

        rng = np.random.default_rng(10)
        stack = 3.0 + 2.0 * rng.standard_normal((5, 2, 100))
        stats = fit_channel_stats(list(stack))
        with_stats = extract_array(stack, "td", tau=0.01, stats=stats)
        manual = extract_array(apply_standardization(stack, stats), "td", tau=0.01)
        assert np.allclose(with_stats, manual, atol=1e-12)

    def test_selection_commutes_with_extraction(self):
        from semgshift.core import CAPGMYO_GRID
        from semgshift.subsets import central_subset, select_subset

        w = make_window(ch=128, t=64)
        sub = central_subset(CAPGMYO_GRID)
        direct = td_features(select_subset(w, sub), tau=0.01).values.reshape(8, 4)
        full = td_features(w, tau=0.01).values.reshape(128, 4)
        assert np.allclose(direct, full[list(sub.channels)], atol=0.0)

    def test_too_short_window_rejected(self):
        with pytest.raises(ParameterError):
            ninapro_features(make_window(t=10))
