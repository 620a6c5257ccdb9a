"""von Mises densities, concentration estimation, circular k-means and mixture EM."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e, logsumexp
from sklearn.base import BaseEstimator, ClusterMixin

from .._validation import check_angles
from ..core import DEGENERATE_RBAR, mean_resultant, wrap_angle

logger = logging.getLogger(__name__)

KAPPA_CAP = 500.0
LOG_2PI = math.log(2 * math.pi)


def log_i0(kappa):
    """log I0(kappa) via the exponentially scaled Bessel function (no overflow)."""
    k = np.asarray(kappa, dtype=float)
    return np.log(i0e(k)) + np.abs(k)


def vm_logpdf(theta, mu, kappa):
    theta = np.asarray(theta, dtype=float)
    return kappa * np.cos(theta - mu) - LOG_2PI - log_i0(kappa)


def kappa_from_rbar(rbar, cap=KAPPA_CAP, return_flag=False):
    """Closed-form concentration estimate R(2 - R^2) / (1 - R^2), capped.

    ``rbar >= 1`` (or an estimate above ``cap``) returns ``cap``; with
    ``return_flag`` the second value tells whether the cap was applied.
    """
    r = np.asarray(rbar, dtype=float)
    if not (r >= 0).all():
        raise ValueError("rbar must be finite and >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        k = r * (2 - r * r) / (1 - r * r)
    capped = (r >= 1) | ~(k <= cap)
    k = np.where(capped, cap, k)
    if k.ndim == 0:
        k, capped = float(k), bool(capped)
    return (k, capped) if return_flag else k


# ---------------------------------------------------------------------------
# circular k-means


@dataclass
class KMeansResult:
    means: np.ndarray
    labels: np.ndarray
    dispersion: float
    history: list = field(default_factory=list)
    n_iter: int = 0


def _assign(angles, means):
    # argmax of cos picks the lowest index among exact ties
    return np.argmax(np.cos(angles[:, None] - means[None, :]), axis=1)


def _dispersion(angles, means, labels, sw=None):
    d = 1.0 - np.cos(angles - means[labels])
    return float(np.sum(d if sw is None else sw * d))


def _kmeanspp(angles, k, rng, sw=None):
    centers = [angles[rng.integers(len(angles))]]
    for _ in range(1, k):
        d = np.min(1.0 - np.cos(angles[:, None] - np.asarray(centers)[None, :]), axis=1)
        if sw is not None:
            d = d * sw
        total = d.sum()
        if total <= 0:
            centers.append(angles[rng.integers(len(angles))])
        else:
            centers.append(angles[rng.choice(len(angles), p=d / total)])
    return np.asarray(centers, dtype=float)


def _lloyd(angles, means, max_iter, sw=None):
    k = len(means)
    labels = _assign(angles, means)
    history = [_dispersion(angles, means, labels, sw)]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        means = means.copy()
        for c in range(k):
            members = labels == c
            if not members.any():
                # re-seed an empty cluster at the currently worst-fit angle
                fit = 1.0 - np.cos(angles - means[labels])
                means[c] = angles[int(np.argmax(fit))]
                labels[int(np.argmax(fit))] = c
                continue
            w = None if sw is None else sw[members]
            if w is not None and not w.sum() > 0:
                continue
            mr = mean_resultant(angles[members], w)
            if not mr.degenerate:
                means[c] = mr.mu
        new_labels = _assign(angles, means)
        history.append(_dispersion(angles, means, new_labels, sw))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return means, labels, history, n_iter


def _check_weights(sample_weight, n):
    if sample_weight is None:
        return None
    sw = np.asarray(sample_weight, dtype=float).ravel()
    if sw.shape != (n,) or not np.all(np.isfinite(sw)) or np.any(sw < 0) or not sw.sum() > 0:
        raise ValueError("sample_weight must be n finite non-negative values with a positive sum")
    # rescaled to sum to the effective sample size, so unequal weights carry
    # correspondingly less evidence in the message length
    n_eff = sw.sum() ** 2 / np.dot(sw, sw)
    return sw * (n_eff / sw.sum())


def circular_kmeans(angles, k, seed=0, n_init=5, max_iter=100, sample_weight=None) -> KMeansResult:
    """Lloyd-style k-means on the circle with 1 - cos dispersion, best of ``n_init``."""
    angles = wrap_angle(check_angles(angles, min_samples=k))
    angles = np.atleast_1d(angles)
    if k < 1:
        raise ValueError("k must be >= 1")
    sw = _check_weights(sample_weight, len(angles))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        means, labels, history, n_iter = _lloyd(angles, _kmeanspp(angles, k, rng, sw), max_iter, sw)
        disp = history[-1]
        if best is None or disp < best.dispersion - 1e-12:
            best = KMeansResult(wrap_angle(means), labels, disp, history, n_iter)
    best.means = np.atleast_1d(best.means)
    return best


class CircularKMeans(ClusterMixin, BaseEstimator):
    def __init__(self, n_clusters=2, n_init=5, max_iter=100, random_state=0):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        res = circular_kmeans(
            X, self.n_clusters, self.random_state, self.n_init, self.max_iter, sample_weight
        )
        self.means_ = res.means
        self.labels_ = res.labels
        self.inertia_ = res.dispersion
        self.dispersion_history_ = res.history
        self.n_iter_ = res.n_iter
        return self

    def predict(self, X):
        return _assign(check_angles(X), self.means_)


# ---------------------------------------------------------------------------
# mixture EM


@dataclass(frozen=True)
class VonMisesComponent:
    mu: float
    kappa: float
    weight: float


@dataclass
class MixtureFit:
    components: list
    log_likelihood: float
    ll_trace: list
    annihilations: list  # indices into ll_trace where a component was removed
    message_length: float
    fallback: bool = False
    n_iter: int = 0

    @property
    def means(self):
        return np.array([c.mu for c in self.components])

    @property
    def kappas(self):
        return np.array([c.kappa for c in self.components])

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])


def mixture_log_components(angles, means, kappas, weights):
    """(n, k) matrix of log(w_k f_k(theta_i))."""
    with np.errstate(divide="ignore"):
        return (
            np.log(weights)[None, :]
            + kappas[None, :] * np.cos(angles[:, None] - means[None, :])
            - LOG_2PI
            - log_i0(kappas)[None, :]
        )


def _m_step(angles, resp, old_means, old_kappas, sin_a=None, cos_a=None):
    if sin_a is None:
        sin_a, cos_a = np.sin(angles), np.cos(angles)
    nk = resp.sum(axis=0)
    s = sin_a @ resp
    c = cos_a @ resp
    with np.errstate(divide="ignore", invalid="ignore"):
        rbar = np.minimum(np.hypot(s, c) / nk, 1.0)
    live = nk > 0
    rbar = np.where(live, rbar, 0.0)
    means = np.where(live & (rbar >= DEGENERATE_RBAR), np.arctan2(s, c), old_means)
    # kappa part of the expected complete log-likelihood; keeping the better of
    # the closed-form estimate and the previous value makes this a generalized
    # EM step, so the likelihood never decreases
    proj = c * np.cos(means) + s * np.sin(means)
    k_new = kappa_from_rbar(rbar)
    q_new = k_new * proj - nk * log_i0(k_new)
    q_old = old_kappas * proj - nk * log_i0(old_kappas)
    kappas = np.where(live & (q_new >= q_old), k_new, old_kappas)
    weights = nk / nk.sum()
    return means, kappas, weights


def _logsumexp_rows(x):
    m = x.max(axis=1)
    return m + np.log(np.exp(x - m[:, None]).sum(axis=1))


def _message_length(ll, weights, n, n_params=2):
    """Two-part code length of a fitted mixture (minimum-message-length criterion)."""
    k = len(weights)
    with np.errstate(divide="ignore"):
        term = (n_params / 2) * np.sum(np.log(n * weights / 12.0))
    return float(term + (k / 2) * math.log(n / 12.0) + k * (n_params + 1) / 2 - ll)


def _em(angles, sw, means, kappas, weights, tol, max_iter, w_min, trace, annihilations):
    sin_a, cos_a = np.sin(angles), np.cos(angles)
    ll_prev = -np.inf
    n_iter = 0
    while n_iter < max_iter:
        n_iter += 1
        logc = mixture_log_components(angles, means, kappas, weights)
        norm = _logsumexp_rows(logc)
        ll = float(sw @ norm)
        trace.append(ll)
        resp = np.exp(logc - norm[:, None]) * sw[:, None]
        means, kappas, weights = _m_step(angles, resp, means, kappas, sin_a, cos_a)
        small = np.flatnonzero(weights < w_min)
        if small.size and len(weights) > 1:
            drop = small[np.argmin(weights[small])]
            keep = np.arange(len(weights)) != drop
            means, kappas, weights = means[keep], kappas[keep], weights[keep]
            weights = weights / weights.sum()
            annihilations.append(len(trace))
            logger.debug("annihilated component %d (weight below %g)", drop, w_min)
            ll_prev = -np.inf
            continue
        if ll - ll_prev < tol * abs(ll):
            break
        ll_prev = ll
    logc = mixture_log_components(angles, means, kappas, weights)
    ll = float(sw @ _logsumexp_rows(logc))
    trace.append(ll)
    return means, kappas, weights, ll, n_iter


def vm_mixture_em(
    angles, k_max=5, w_min=0.02, seed=0, tol=1e-6, max_iter=500, sample_weight=None
) -> MixtureFit:
    """Fit a von Mises mixture and choose the number of components.

    Starts from circular k-means with ``k_max`` centres. Components whose
    weight drops below ``w_min`` are annihilated during EM. After each EM run
    converges the weakest component is annihilated and EM resumes, down to a
    single component; the fit with the shortest message length is returned.
    ``sample_weight`` scales each angle's contribution; weights are rescaled
    to sum to the effective sample size (sum w)^2 / sum w^2.
    """
    angles = check_angles(angles)
    n = len(angles)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if n < 2 * k_max:
        raise ValueError(f"need at least {2 * k_max} angles for k_max={k_max}, got {n}")
    sw = _check_weights(sample_weight, n)
    km = circular_kmeans(angles, k_max, seed=seed, sample_weight=sw)
    if sw is None:
        sw = np.ones(n)
    resp = np.zeros((n, k_max))
    resp[np.arange(n), km.labels] = sw
    means, kappas, weights = _m_step(angles, resp, km.means.copy(), np.zeros(k_max))
    trace: list = []
    annihilations: list = []
    best = None
    total_iter = 0
    while True:
        alive = weights > 0
        means, kappas, weights = means[alive], kappas[alive], weights[alive] / weights[alive].sum()
        means, kappas, weights, ll, it = _em(
            angles, sw, means, kappas, weights, tol, max_iter, w_min, trace, annihilations
        )
        total_iter += it
        length = _message_length(ll, weights, float(sw.sum()))
        if best is None or length < best[0] - 1e-9:
            best = (length, means.copy(), kappas.copy(), weights.copy(), ll)
        if len(weights) == 1:
            break
        drop = int(np.argmin(weights))
        keep = np.arange(len(weights)) != drop
        means, kappas, weights = means[keep], kappas[keep], weights[keep] / weights[keep].sum()
        annihilations.append(len(trace))
    length, means, kappas, weights, ll = best
    if len(weights) == 0:  # pragma: no cover - the loop always keeps one component
        comps = [VonMisesComponent(0.0, 0.0, 1.0)]
        return MixtureFit(comps, float(n * -LOG_2PI), trace, annihilations, np.inf, True, total_iter)
    order = np.argsort(-weights, kind="stable")
    comps = [
        VonMisesComponent(float(wrap_angle(means[i])), float(kappas[i]), float(weights[i])) for i in order
    ]
    return MixtureFit(comps, ll, trace, annihilations, length, False, total_iter)


class VonMisesMixture(BaseEstimator):
    """von Mises mixture with automatic component-count selection."""

    def __init__(self, k_max=5, w_min=0.02, tol=1e-6, max_iter=500, random_state=0):
        self.k_max = k_max
        self.w_min = w_min
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        fit = vm_mixture_em(
            X, self.k_max, self.w_min, self.random_state, self.tol, self.max_iter, sample_weight
        )
        self.fit_ = fit
        self.means_ = fit.means
        self.kappas_ = fit.kappas
        self.weights_ = fit.weights
        self.n_components_ = len(fit.components)
        self.log_likelihood_ = fit.log_likelihood
        return self

    def _logc(self, X):
        return mixture_log_components(check_angles(X), self.means_, self.kappas_, self.weights_)

    def score_samples(self, X):
        return logsumexp(self._logc(X), axis=1)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def predict_proba(self, X):
        logc = self._logc(X)
        return np.exp(logc - logsumexp(logc, axis=1)[:, None])

    def predict(self, X):
        return np.argmax(self._logc(X), axis=1)
