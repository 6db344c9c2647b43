"""EM fitting of Gaussian mixtures with BIC model selection.

Works on standardized data with NaN marking missing cells.  The E-step
evaluates each row's responsibility on its observed dimensions only;
the M-step imputes conditional expectations per missingness pattern, so
rows with unexecuted-branch gaps still inform the joint fit instead of
being dropped.

The M-step covariance update is constrained: eigenvalues are floored at
the regularization epsilon (the constrained maximizer shares the
eigenbasis of the unconstrained one, so per-iteration log-likelihood
stays non-decreasing), and above `full_cov_max_dim` dimensions the
covariance collapses to the closest diagonal-plus-low-rank form.
Model order is chosen by minimum BIC over K = 1..Kmax with ties going
to the smaller K; initialization is seeded k-means++ per restart, which
makes the whole fit a pure function of (data, config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky

from psm.density import kernels
from psm.minilang.rng import SplitRng

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class EmResult:
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    log_likelihood: float
    ll_history: list
    converged: bool
    n_params: int


def _floor_eigenvalues(cov: np.ndarray, floor: float) -> np.ndarray:
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _ppca_project(cov: np.ndarray, rank: int, floor: float) -> np.ndarray:
    """Closest (in likelihood) rank-q-plus-isotropic covariance."""
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    d = cov.shape[0]
    q = min(rank, d - 1)
    sigma2 = max(float(np.mean(vals[q:])), floor)
    new_vals = np.concatenate([np.maximum(vals[:q], sigma2), np.full(d - q, sigma2)])
    return (vecs * new_vals) @ vecs.T


def _regularize(cov: np.ndarray, floor: float, structure: str, rank: int) -> np.ndarray:
    if structure == "lowrank":
        return _ppca_project(cov, rank, floor)
    return _floor_eigenvalues(cov, floor)


def _n_params(K: int, d: int, structure: str, rank: int) -> int:
    if structure == "lowrank":
        q = min(rank, d - 1)
        per_cov = d * q - q * (q - 1) // 2 + 1
    else:
        per_cov = d * (d + 1) // 2
    return (K - 1) + K * d + K * per_cov


def _patterns(X: np.ndarray):
    """Group row indices by missingness mask; fully-observed first."""
    obs_mask = ~np.isnan(X)
    keys = {}
    for i in range(X.shape[0]):
        keys.setdefault(obs_mask[i].tobytes(), []).append(i)
    out = []
    for key, rows in sorted(keys.items(), key=lambda kv: (-len(kv[1]), kv[0])):
        mask = np.frombuffer(key, dtype=bool)
        out.append((np.flatnonzero(mask), np.array(rows)))
    return out


def kmeanspp_init(Ximp: np.ndarray, K: int, gen: np.random.Generator):
    """Seeded k-means++ centers and a hard assignment."""
    n = Ximp.shape[0]
    first = int(gen.integers(0, n))
    centers = [Ximp[first]]
    d2 = np.sum((Ximp - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = int(gen.integers(0, n))
        else:
            idx = int(gen.choice(n, p=d2 / total))
        centers.append(Ximp[idx])
        d2 = np.minimum(d2, np.sum((Ximp - centers[-1]) ** 2, axis=1))
    C = np.stack(centers)
    assign = np.argmin(
        ((Ximp[:, None, :] - C[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    return C, assign


def _initial_params(X: np.ndarray, K: int, gen, floor: float, structure: str, rank: int):
    n, d = X.shape
    col_mean = np.nanmean(X, axis=0)
    col_mean = np.where(np.isfinite(col_mean), col_mean, 0.0)
    Ximp = np.where(np.isnan(X), col_mean, X)
    centers, assign = kmeanspp_init(Ximp, K, gen)
    weights = np.empty(K)
    means = np.empty((K, d))
    covs = np.empty((K, d, d))
    pooled = np.cov(Ximp.T, bias=True).reshape(d, d) if n > 1 else np.eye(d)
    for k in range(K):
        members = Ximp[assign == k]
        weights[k] = max(len(members), 1)
        if len(members) == 0:
            means[k] = centers[k]
            covs[k] = _regularize(pooled, floor, structure, rank)
        else:
            means[k] = members.mean(axis=0)
            if len(members) > d + 1:
                covs[k] = _regularize(
                    np.cov(members.T, bias=True).reshape(d, d), floor, structure, rank
                )
            else:
                covs[k] = _regularize(pooled, floor, structure, rank)
    weights /= weights.sum()
    return weights, means, covs


def _estep(X, patterns, weights, means, covs):
    """Log responsibilities on observed dims; returns (log_resp, loglik)."""
    n, _ = X.shape
    K = len(weights)
    log_r = np.empty((n, K))
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    for obs, rows in patterns:
        if len(obs) == 0:
            log_r[rows] = log_w
            continue
        sub = np.ascontiguousarray(X[np.ix_(rows, obs)])
        chols = np.empty((K, len(obs), len(obs)))
        log_norms = np.empty(K)
        for k in range(K):
            chols[k] = cholesky(covs[k][np.ix_(obs, obs)], lower=True, check_finite=False)
            log_norms[k] = -0.5 * len(obs) * _LOG_2PI - np.log(np.diag(chols[k])).sum()
        comp = kernels.component_logpdf(
            sub, np.ascontiguousarray(means[:, obs]), np.ascontiguousarray(chols), log_norms
        )
        log_r[rows] = comp + log_w
    m = log_r.max(axis=1)
    safe_m = np.where(np.isfinite(m), m, 0.0)
    row_tot = safe_m + np.log(np.exp(log_r - safe_m[:, None]).sum(axis=1))
    loglik = float(row_tot.sum())
    log_r -= row_tot[:, None]
    return log_r, loglik


def _mstep(X, patterns, log_resp, means, covs, floor, structure, rank):
    n, d = X.shape
    K = log_resp.shape[1]
    resp = np.exp(log_resp)
    Nk = resp.sum(axis=0) + 1e-300
    if len(patterns) == 1 and len(patterns[0][0]) == d:
        # complete data: fully vectorized moment accumulation
        weights = Nk / n
        new_means = (resp.T @ X) / Nk[:, None]
        new_covs = np.empty_like(covs)
        for k in range(K):
            dev = X - new_means[k]
            S = (dev * resp[:, k : k + 1]).T @ dev / Nk[k]
            new_covs[k] = _regularize(S, floor, structure, rank)
        return weights, new_means, new_covs
    M1 = np.zeros((K, d))
    M2 = np.zeros((K, d, d))
    from psm.density.mixture import conditional_moments

    for obs, rows in patterns:
        mis = np.setdiff1d(np.arange(d), obs)
        Xo = X[np.ix_(rows, obs)]
        R = resp[rows]
        for k in range(K):
            if len(mis) == 0:
                xhat = Xo  # obs is sorted, so this is the full row
                cond_cov_pad = None
            else:
                if len(obs) == 0:
                    cond_cov = covs[k]
                    xhat_m = np.tile(means[k], (len(rows), 1))
                else:
                    _, cond_cov, B = conditional_moments(
                        means[k], covs[k], list(obs), list(mis), means[k][obs]
                    )
                    xhat_m = means[k][mis] + (Xo - means[k][obs]) @ B.T
                xhat = np.empty((len(rows), d))
                xhat[:, obs] = Xo
                xhat[:, mis] = xhat_m
                cond_cov_pad = np.zeros((d, d))
                cond_cov_pad[np.ix_(mis, mis)] = cond_cov
            rk = R[:, k]
            M1[k] += rk @ xhat
            M2[k] += np.einsum("i,ij,ik->jk", rk, xhat, xhat)
            if cond_cov_pad is not None:
                M2[k] += rk.sum() * cond_cov_pad
    weights = Nk / n
    new_means = M1 / Nk[:, None]
    new_covs = np.empty_like(covs)
    for k in range(K):
        S = M2[k] / Nk[k] - np.outer(new_means[k], new_means[k])
        new_covs[k] = _regularize(S, floor, structure, rank)
    return weights, new_means, new_covs


def run_em(
    X: np.ndarray,
    K: int,
    rng: SplitRng,
    *,
    tol: float,
    max_iter: int,
    floor: float,
    structure: str,
    rank: int,
) -> EmResult:
    patterns = _patterns(X)
    gen = rng.generator
    weights, means, covs = _initial_params(X, K, gen, floor, structure, rank)
    ll_history: list[float] = []
    prev = -np.inf
    converged = False
    for _ in range(max_iter):
        log_resp, loglik = _estep(X, patterns, weights, means, covs)
        ll_history.append(loglik)
        if math.isfinite(prev) and abs(loglik - prev) <= tol * abs(prev):
            converged = True
            break
        prev = loglik
        weights, means, covs = _mstep(
            X, patterns, log_resp, means, covs, floor, structure, rank
        )
    d = X.shape[1]
    return EmResult(
        weights=weights,
        means=means,
        covs=covs,
        log_likelihood=ll_history[-1],
        ll_history=ll_history,
        converged=converged,
        n_params=_n_params(K, d, structure, rank),
    )


def select_mixture(
    X: np.ndarray,
    *,
    kmax: int,
    restarts: int,
    tol: float,
    max_iter: int,
    floor: float,
    structure: str,
    rank: int,
    seed: int,
) -> tuple[EmResult, int, list]:
    """Best mixture by BIC over K = 1..kmax; deterministic in seed."""
    n = X.shape[0]
    kmax_eff = max(1, min(kmax, n))
    best: EmResult | None = None
    best_k = 1
    best_bic = math.inf
    trace = []
    for K in range(1, kmax_eff + 1):
        run_best: EmResult | None = None
        for r in range(restarts):
            rng = SplitRng(seed, stream=(K << 16) | r)
            result = run_em(
                X, K, rng, tol=tol, max_iter=max_iter, floor=floor,
                structure=structure, rank=rank,
            )
            if run_best is None or result.log_likelihood > run_best.log_likelihood:
                run_best = result
        bic = -2.0 * run_best.log_likelihood + run_best.n_params * math.log(max(n, 2))
        trace.append((K, bic, run_best.log_likelihood, run_best.converged))
        if bic < best_bic:  # strict: ties keep the smaller K
            best, best_k, best_bic = run_best, K, bic
    return best, best_k, trace
