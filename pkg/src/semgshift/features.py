"""The four classical feature sets: td, etd, ninapro, sampen.

A feature vector concatenates per-channel primitives in channel order, so
its dimension is per_channel_dim(feature_set) * channels:

    td       4  MAV, WL, ZC, SSC
    etd      9  td + RMS, IAV, skewness, Hjorth mobility, Hjorth complexity
    ninapro  4  marginals of a 3-level db7 wavelet decomposition
    sampen   7  SampEn(m=2, r=0.2*sigma), cepstral c1..c4 (AR order 4), RMS, WL

Every primitive is defined on a single channel; the batch entry points
flatten (N, Ch, T) stacks to (N * Ch, T) rows and share one code path with
the single-window operations. Moment estimators are population (biased)
throughout. Degenerate inputs (constant or all-zero channels) take the
documented zero/cap fallbacks so all outputs stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from . import dsp
from .core import Dataset, LabeledWindow, ParameterError

# Daubechies-7 scaling coefficients (extremal phase, sum = sqrt(2)), derived
# by spectral factorization; the test suite re-derives them independently.
_DB7 = np.array(
    [
        0.07785205408500918,
        0.3965393194819173,
        0.7291320908462351,
        0.4697822874051931,
        -0.14390600392856498,
        -0.22403618499387498,
        0.07130921926683026,
        0.08061260915108307,
        -0.038029936935014414,
        -0.01657454163066688,
        0.01255099855609984,
        0.0004295779729213665,
        -0.0018016407040474909,
        0.0003537137999745202,
    ]
)
_DEC_LO = _DB7[::-1].copy()
_DEC_HI = _DB7 * np.where(np.arange(len(_DB7)) % 2 == 0, -1.0, 1.0)

_MDWT_LEVELS = 3
_SAMPEN_M = 2
_SAMPEN_R_FACTOR = 0.2
_AR_ORDER = 4

#: feature-set name -> per-channel dimension
FEATURE_SETS = {"td": 4, "etd": 9, "ninapro": 4, "sampen": 7}


def per_channel_dim(feature_set: str) -> int:
    try:
        return FEATURE_SETS[feature_set]
    except KeyError:
        raise ParameterError(
            f"unknown feature set {feature_set!r}; known: {sorted(FEATURE_SETS)}"
        ) from None


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    feature_set: str
    channels: int
    label: Optional[int] = None


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray  # (N, d)
    labels: np.ndarray
    feature_set: str
    channels: int


# ---------------------------------------------------------------- primitives


def hudgins_primitives(x, threshold: float = 0.0):
    """(MAV, WL, ZC, SSC) of a single channel.

    ZC counts sign changes whose step clears the dead zone; SSC counts
    interior samples where both neighboring slopes agree per
    (x_t - x_{t-1}) * (x_t - x_{t+1}) >= threshold.
    """
    x = _check_channel(x, min_len=3)
    if threshold < 0:
        raise ParameterError("threshold must be non-negative")
    out = _td_rows(x[None, :], threshold)[0]
    return float(out[0]), float(out[1]), float(out[2]), float(out[3])


def sample_entropy(x, m: int = _SAMPEN_M, r_factor: float = _SAMPEN_R_FACTOR) -> float:
    """SampEn: -ln(A/B) over template pairs at Chebyshev tolerance r_factor * std(x).

    Both template families use start indices 0 .. N-m-1. When either count is
    zero the estimate is capped at -ln(2 / ((N-m)(N-m-1))).
    """
    x = _check_channel(x, min_len=m + 2)
    if m < 1:
        raise ParameterError("m must be at least 1")
    if r_factor < 0:
        raise ParameterError("r_factor must be non-negative")
    rows = np.ascontiguousarray(x[None, :], dtype=np.float64)
    r = np.array([r_factor * float(np.std(rows[0]))])
    out = np.empty(1)
    _sampen_kernel(rows, m, r, out)
    return float(out[0])


def ar_levinson(x, order: int = _AR_ORDER) -> np.ndarray:
    """AR coefficients a_1..a_p of x_t + sum_i a_i x_{t-i} = e_t.

    Levinson-Durbin on biased autocorrelation estimates; an all-zero input
    (and any stage where the prediction error collapses) yields zeros.
    """
    x = _check_channel(x, min_len=order + 1)
    if order < 1:
        raise ParameterError("order must be at least 1")
    return _ar_rows(x[None, :], order)[0]


def cepstral_from_ar(a) -> np.ndarray:
    """Cepstral coefficients c_1..c_p from AR coefficients a_1..a_p."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1 or a.size < 1:
        raise ParameterError("a must be a non-empty 1-D coefficient vector")
    return _cepstral_rows(a[None, :])[0]


def mdwt_features(x) -> np.ndarray:
    """(m_1, m_2, m_3, m_A): absolute coefficient sums of a 3-level db7 transform.

    Signals are extended symmetrically (edge sample duplicated) at each level.
    """
    x = _check_channel(x, min_len=len(_DB7))
    return _mdwt_rows(x[None, :])[0]


def _check_channel(x, min_len: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("expected a 1-D single-channel array")
    if x.shape[0] < min_len:
        raise ParameterError(f"channel has {x.shape[0]} samples, need at least {min_len}")
    return x


# ------------------------------------------------------------- batched cores


def _td_rows(rows: np.ndarray, tau: float) -> np.ndarray:
    x = rows
    d = np.diff(x, axis=1)
    mav = np.mean(np.abs(x), axis=1)
    wl = np.sum(np.abs(d), axis=1)
    zc = np.sum((x[:, :-1] * x[:, 1:] < 0) & (np.abs(d) >= tau), axis=1)
    mid = x[:, 1:-1]
    ssc = np.sum((mid - x[:, :-2]) * (mid - x[:, 2:]) >= tau, axis=1)
    return np.stack([mav, wl, zc.astype(np.float64), ssc.astype(np.float64)], axis=1)


def _etd_rows(rows: np.ndarray, tau: float) -> np.ndarray:
    x = rows
    td = _td_rows(x, tau)
    rms = np.sqrt(np.mean(x * x, axis=1))
    iav = np.sum(np.abs(x), axis=1)

    c = x - x.mean(axis=1, keepdims=True)
    m2 = np.mean(c * c, axis=1)
    m3 = np.mean(c * c * c, axis=1)
    skew = np.divide(m3, m2**1.5, out=np.zeros_like(m2), where=m2 > 0)

    dx = np.diff(x, axis=1)
    ddx = np.diff(dx, axis=1)
    vx = x.var(axis=1)
    vd = dx.var(axis=1)
    vdd = ddx.var(axis=1)
    mob = np.sqrt(np.divide(vd, vx, out=np.zeros_like(vx), where=vx > 0))
    mob_d = np.sqrt(np.divide(vdd, vd, out=np.zeros_like(vd), where=vd > 0))
    comp = np.divide(mob_d, mob, out=np.zeros_like(mob), where=mob > 0)
    return np.concatenate(
        [td, np.stack([rms, iav, skew, mob, comp], axis=1)], axis=1
    )


def _ar_rows(rows: np.ndarray, order: int) -> np.ndarray:
    x = rows
    m, n = x.shape
    r = np.empty((m, order + 1))
    for k in range(order + 1):
        r[:, k] = np.einsum("ij,ij->i", x[:, : n - k], x[:, k:]) / n

    a = np.zeros((m, order + 1))
    a[:, 0] = 1.0
    e = r[:, 0].copy()
    # rows whose error power collapsed stop updating and keep zeros
    tiny = np.finfo(np.float64).tiny
    for step in range(1, order + 1):
        alive = e > tiny
        acc = r[:, step].copy()
        for j in range(1, step):
            acc += a[:, j] * r[:, step - j]
        k = np.where(alive, -acc / np.where(alive, e, 1.0), 0.0)
        prev = a[:, 1:step].copy()
        for j in range(1, step):
            a[:, j] = prev[:, j - 1] + k * prev[:, step - j - 1]
        a[:, step] = k
        e = e * (1.0 - k * k)
    return a[:, 1:]


def _cepstral_rows(a: np.ndarray) -> np.ndarray:
    m, p = a.shape
    c = np.zeros((m, p + 1))
    for n in range(1, p + 1):
        acc = -a[:, n - 1].copy()
        for l in range(1, n):
            acc -= (1.0 - l / n) * a[:, l - 1] * c[:, n - l]
        c[:, n] = acc
    return c[:, 1:]


def _dwt_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    pad = len(filt) - 1
    ext = np.concatenate([x[:, pad - 1 :: -1], x, x[:, : -pad - 1 : -1]], axis=1)
    nv = ext.shape[1] - pad
    y = np.zeros((x.shape[0], nv))
    fr = filt[::-1]
    for i in range(len(filt)):
        y += fr[i] * ext[:, i : i + nv]
    return y[:, 1::2]


def _mdwt_rows(rows: np.ndarray) -> np.ndarray:
    a = rows
    out = np.empty((rows.shape[0], _MDWT_LEVELS + 1))
    for level in range(_MDWT_LEVELS):
        d = _dwt_step(a, _DEC_HI)
        a = _dwt_step(a, _DEC_LO)
        out[:, level] = np.sum(np.abs(d), axis=1)
    out[:, _MDWT_LEVELS] = np.sum(np.abs(a), axis=1)
    return out


@njit(cache=True)
def _sampen_kernel(X, m, r, out):
    for w in range(X.shape[0]):
        x = X[w]
        nt = x.shape[0] - m
        order = np.argsort(x[:nt])
        b = 0
        a = 0
        rw = r[w]
        for ii in range(nt - 1):
            i = order[ii]
            xi = x[i]
            for jj in range(ii + 1, nt):
                j = order[jj]
                # sorted by first coordinate: everything further is out of reach
                if x[j] - xi > rw:
                    break
                ok = True
                for k in range(1, m):
                    if abs(x[i + k] - x[j + k]) > rw:
                        ok = False
                        break
                if ok:
                    b += 1
                    if abs(x[i + m] - x[j + m]) <= rw:
                        a += 1
        if a == 0 or b == 0:
            out[w] = -np.log(2.0 / (nt * (nt - 1.0)))
        else:
            out[w] = -np.log(a / b)


def _sampen_rows(rows: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(rows)
    sampen = np.empty(x.shape[0])
    r = _SAMPEN_R_FACTOR * np.std(x, axis=1)
    _sampen_kernel(x, _SAMPEN_M, r, sampen)
    ceps = _cepstral_rows(_ar_rows(x, _AR_ORDER))
    rms = np.sqrt(np.mean(x * x, axis=1))
    wl = np.sum(np.abs(np.diff(x, axis=1)), axis=1)
    return np.concatenate(
        [sampen[:, None], ceps, rms[:, None], wl[:, None]], axis=1
    )


_ROW_FUNCS = {
    "td": lambda rows, tau: _td_rows(rows, tau),
    "etd": lambda rows, tau: _etd_rows(rows, tau),
    "ninapro": lambda rows, tau: _mdwt_rows(rows),
    "sampen": lambda rows, tau: _sampen_rows(rows),
}

_MIN_LEN = {"td": 3, "etd": 3, "ninapro": len(_DB7), "sampen": _SAMPEN_M + 2}


# ------------------------------------------------------------- window fronts


def _window_array(window) -> tuple:
    if isinstance(window, LabeledWindow):
        return np.asarray(window.samples, dtype=np.float64), window.gesture
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2:
        raise ParameterError("window must be a 2-D channels x samples array")
    return w, None


def _single(window, feature_set: str, tau: float) -> FeatureVector:
    w, label = _window_array(window)
    if w.shape[1] < _MIN_LEN[feature_set]:
        raise ParameterError(
            f"{feature_set} needs windows of at least {_MIN_LEN[feature_set]} samples"
        )
    vals = _ROW_FUNCS[feature_set](np.ascontiguousarray(w), tau).reshape(-1)
    return FeatureVector(
        values=vals, feature_set=feature_set, channels=w.shape[0], label=label
    )


def td_features(window, tau: float = 0.01) -> FeatureVector:
    return _single(window, "td", tau)


def etd_features(window, tau: float = 0.01) -> FeatureVector:
    return _single(window, "etd", tau)


def ninapro_features(window) -> FeatureVector:
    return _single(window, "ninapro", 0.0)


def sampen_features(window) -> FeatureVector:
    return _single(window, "sampen", 0.0)


def extract_array(X: np.ndarray, feature_set: str, tau: float = 0.01, stats=None) -> np.ndarray:
    """Features of an (N, Ch, T) stack as an (N, d) matrix.

    When channel stats are given, each chunk is standardized right before
    extraction so no standardized copy of the full stack is ever held.
    """
    dim = per_channel_dim(feature_set)
    if X.ndim != 3:
        raise ParameterError("X must be (N, Ch, T)")
    n, ch, t = X.shape
    if t < _MIN_LEN[feature_set]:
        raise ParameterError(
            f"{feature_set} needs windows of at least {_MIN_LEN[feature_set]} samples"
        )
    if tau < 0:
        raise ParameterError("tau must be non-negative")
    out = np.empty((n, ch * dim))
    # keep the per-chunk working set around a few million float64 values
    chunk = max(1, int(2_000_000 // max(1, ch * t)))
    fn = _ROW_FUNCS[feature_set]
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        block = np.asarray(X[lo:hi], dtype=np.float64)
        if stats is not None:
            block = dsp.apply_standardization(block, stats)
        rows = np.ascontiguousarray(block.reshape(-1, t))
        out[lo:hi] = fn(rows, tau).reshape(hi - lo, ch * dim)
    return out


def extract_features(dataset, feature_set: str, tau: float = 0.01, stats=None) -> FeatureMatrix:
    """Feature matrix of a Dataset (or list of labeled windows)."""
    windows = list(dataset)
    if not windows:
        dim = per_channel_dim(feature_set)
        return FeatureMatrix(
            values=np.empty((0, 0)),
            labels=np.empty(0, dtype=np.int64),
            feature_set=feature_set,
            channels=0,
        )
    ch = windows[0].n_channels
    labels = np.array([w.gesture for w in windows], dtype=np.int64)
    dim = per_channel_dim(feature_set)
    t = windows[0].n_samples
    n = len(windows)
    out = np.empty((n, ch * dim))
    chunk = max(1, int(2_000_000 // max(1, ch * t)))
    for lo in range(0, n, chunk):
        block = np.stack([w.samples for w in windows[lo : lo + chunk]])
        out[lo : lo + block.shape[0]] = extract_array(
            block, feature_set, tau=tau, stats=stats
        )
    return FeatureMatrix(values=out, labels=labels, feature_set=feature_set, channels=ch)
