"""PCA with explained-variance selection and regularized multiclass LDA.

Both models serialize to a single JSON document with matrices as nested
lists; the ``kind`` key distinguishes them. Fitting is deterministic: the
eigenvector sign convention (largest-magnitude entry positive) makes PCA
components reproducible across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import ParameterError

_RATIO_EPS = 1e-12  # cumulative-ratio comparisons tolerate float summation error


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal, eigenvalue-descending
    explained_ratio: np.ndarray
    variance_threshold: float

    @property
    def k(self) -> int:
        return self.components.shape[0]


def fit_pca(X: np.ndarray, threshold: float = 0.95) -> PcaModel:
    """Principal directions of X keeping the minimal k with cumulative
    explained-variance ratio >= threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError("X must be (N, d) with N >= 2")
    if not (0 < threshold <= 1):
        raise ParameterError("threshold must lie in (0, 1]")

    mean = X.mean(axis=0)
    c = X - mean
    cov = (c.T @ c) / (X.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    total = float(eigvals.sum())
    if total <= 0:
        raise ParameterError("data has zero variance; nothing to explain")
    ratios = eigvals / total

    cum = np.cumsum(ratios)
    k = int(np.searchsorted(cum, threshold - _RATIO_EPS) + 1)
    k = min(k, X.shape[1])

    components = eigvecs[:, :k].T.copy()
    # sign convention: each component's largest-magnitude entry is positive
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        explained_ratio=ratios[:k].copy(),
        variance_threshold=float(threshold),
    )


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.mean.shape[0]:
        raise ParameterError(
            f"expected {model.mean.shape[0]} columns, got {X.shape[1]}"
        )
    out = (X - model.mean) @ model.components.T
    return out[0] if single else out


@dataclass(frozen=True, eq=False)
class LdaModel:
    classes: np.ndarray  # sorted ascending; ties in scores resolve to the smallest
    class_means: np.ndarray  # (G, d)
    pooled_cov: np.ndarray  # regularized, symmetric positive-definite
    log_priors: np.ndarray
    lam: float
    _weights: np.ndarray  # (d, G): pooled_cov^{-1} @ class_means.T
    _biases: np.ndarray  # (G,)


def fit_lda(X: np.ndarray, y, lam: float = 1e-6) -> LdaModel:
    """Shared-covariance LDA with a trace-scaled ridge term.

    Pooled within-class scatter is divided by N - G; the ridge
    lam * (trace(cov)/d) * I keeps the covariance invertible even when
    d >= N (the full-grid feature sets).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ParameterError("X must be (N, d) with matching label vector")
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    classes = np.unique(y)
    n, d = X.shape
    g = classes.shape[0]
    if g < 2:
        raise ParameterError("need at least 2 classes")

    means = np.empty((g, d))
    scatter = np.zeros((d, d))
    counts = np.empty(g)
    for i, cls in enumerate(classes):
        xc = X[y == cls]
        if xc.shape[0] < 2:
            raise ParameterError(f"class {cls!r} has fewer than 2 samples")
        counts[i] = xc.shape[0]
        means[i] = xc.mean(axis=0)
        cc = xc - means[i]
        scatter += cc.T @ cc
    cov = scatter / (n - g)

    scale = np.trace(cov) / d
    if scale <= 0:
        scale = 1.0  # zero within-class scatter: fall back to a plain ridge
    cov_reg = cov + lam * scale * np.eye(d)

    log_priors = np.log(counts / n)
    weights = np.linalg.solve(cov_reg, means.T)
    biases = -0.5 * np.einsum("gd,dg->g", means, weights) + log_priors
    return LdaModel(
        classes=classes,
        class_means=means,
        pooled_cov=cov_reg,
        log_priors=log_priors,
        lam=float(lam),
        _weights=weights,
        _biases=biases,
    )


def lda_scores(model: LdaModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.class_means.shape[1]:
        raise ParameterError(
            f"expected {model.class_means.shape[1]} features, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise ParameterError("inputs must be finite")
    scores = X @ model._weights + model._biases
    return scores[0] if single else scores


def lda_predict(model: LdaModel, X: np.ndarray):
    """(labels, discriminant scores); ties go to the smallest class label."""
    scores = lda_scores(model, X)
    single = scores.ndim == 1
    s = scores[None, :] if single else scores
    # argmax returns the first maximum; classes are sorted ascending
    idx = np.argmax(s, axis=1)
    labels = model.classes[idx]
    if single:
        return labels[0], scores
    return labels, scores


def accuracy(model: LdaModel, X: np.ndarray, y) -> float:
    labels, _ = lda_predict(model, X)
    y = np.asarray(y)
    return float(np.mean(labels == y))


# ---------------------------------------------------------------- serialization


def model_to_json(model) -> str:
    if isinstance(model, PcaModel):
        doc = {
            "kind": "pca",
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "explained_ratio": model.explained_ratio.tolist(),
            "variance_threshold": model.variance_threshold,
        }
    elif isinstance(model, LdaModel):
        doc = {
            "kind": "lda",
            "classes": model.classes.tolist(),
            "class_means": model.class_means.tolist(),
            "pooled_cov": model.pooled_cov.tolist(),
            "log_priors": model.log_priors.tolist(),
            "lambda": model.lam,
        }
    else:
        raise ParameterError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str):
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "pca":
        return PcaModel(
            mean=np.asarray(doc["mean"], dtype=np.float64),
            components=np.asarray(doc["components"], dtype=np.float64),
            explained_ratio=np.asarray(doc["explained_ratio"], dtype=np.float64),
            variance_threshold=float(doc["variance_threshold"]),
        )
    if kind == "lda":
        means = np.asarray(doc["class_means"], dtype=np.float64)
        cov = np.asarray(doc["pooled_cov"], dtype=np.float64)
        log_priors = np.asarray(doc["log_priors"], dtype=np.float64)
        weights = np.linalg.solve(cov, means.T)
        biases = -0.5 * np.einsum("gd,dg->g", means, weights) + log_priors
        return LdaModel(
            classes=np.asarray(doc["classes"]),
            class_means=means,
            pooled_cov=cov,
            log_priors=log_priors,
            lam=float(doc["lambda"]),
            _weights=weights,
            _biases=biases,
        )
    raise ParameterError(f"unknown model kind {kind!r}")
