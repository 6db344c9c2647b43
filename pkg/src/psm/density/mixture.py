"""Gaussian mixture density over an embedded, standardized space.

Continuous variables map to one dimension each; categorical variables
are one-hot embedded and marginalized back out for queries (their
sampled blocks decode by argmax, their probabilities come from the
mixture means of the indicator dimensions).  All columns are
standardized before fitting; constant columns get a point-mass scale of
1e-9 * max(1, |value|) so densities stay finite.

Point conditioning is the analytic per-component Gaussian conditional
with component reweighting.  Interval conditioning reweights components
by their interval probability and keeps the constrained dimension as a
truncated, integrated-out dimension: sampling draws it from the
per-component truncated marginal (exact for a single interval), log
densities integrate over it with Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import ndtr, ndtri

from psm.density import kernels
from psm.density.base import Density, Interval, Variable, split_constraints
from psm.density.categorical import CategoricalDensity
from psm.errors import KindMismatch, ZeroProbabilityCondition

_LOG_2PI = math.log(2.0 * math.pi)
_QUAD_NODES = 32
_MC_DRAWS = 8192
_ZERO_MASS = 1e-12


@dataclass(frozen=True)
class EmbedEntry:
    name: str
    kind: str
    dims: tuple[int, ...]
    vocab: tuple | None = None  # categorical values aligned with dims

    @property
    def is_categorical(self) -> bool:
        return self.vocab is not None


@dataclass
class FitMeta:
    sample_count: int = 0
    selected_k: int = 1
    bic_trace: list = field(default_factory=list)  # [(K, bic, loglik, converged)]
    ll_history: list = field(default_factory=list)  # winning run, per iteration
    converged: bool = True
    cov_structure: str = "full"  # "full" | "lowrank" | "kde"
    low_confidence: bool = False
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "selected_k": self.selected_k,
            "bic_trace": [list(t) for t in self.bic_trace],
            "ll_history": [float(v) for v in self.ll_history],
            "converged": self.converged,
            "cov_structure": self.cov_structure,
            "low_confidence": self.low_confidence,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitMeta":
        return cls(
            sample_count=d["sample_count"],
            selected_k=d["selected_k"],
            bic_trace=[tuple(t) for t in d["bic_trace"]],
            ll_history=list(d["ll_history"]),
            converged=d["converged"],
            cov_structure=d["cov_structure"],
            low_confidence=d["low_confidence"],
            warnings=list(d["warnings"]),
        )


def chol_factors(covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower Cholesky factors and Gaussian log normalizers per component."""
    K, d, _ = covs.shape
    chols = np.empty_like(covs)
    log_norms = np.empty(K)
    for k in range(K):
        chols[k] = cholesky(covs[k], lower=True, check_finite=False)
        log_norms[k] = -0.5 * d * _LOG_2PI - np.log(np.diag(chols[k])).sum()
    return chols, log_norms


def component_logpdf(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    chols, log_norms = chol_factors(covs)
    X = np.ascontiguousarray(X, dtype=np.float64)
    return kernels.component_logpdf(
        X, np.ascontiguousarray(means), np.ascontiguousarray(chols), log_norms
    )


def _logsumexp(a: np.ndarray, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


def conditional_moments(mean, cov, obs, rest, x_obs):
    """Gaussian conditional of `rest` dims given `obs` dims at x_obs."""
    L = cholesky(cov[np.ix_(obs, obs)], lower=True, check_finite=False)
    cross = cov[np.ix_(rest, obs)]
    # B = cross @ inv(cov_oo) via two triangular solves
    tmp = solve_triangular(L, cross.T, lower=True, check_finite=False)
    B = solve_triangular(L.T, tmp, lower=False, check_finite=False).T
    cond_mean = mean[rest] + B @ (x_obs - mean[obs])
    cond_cov = cov[np.ix_(rest, rest)] - B @ cross.T
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    return cond_mean, cond_cov, B


class MixtureDensity(Density):
    def __init__(
        self,
        entries: tuple[EmbedEntry, ...],
        shift: np.ndarray,
        scale: np.ndarray,
        weights: np.ndarray,
        means: np.ndarray,
        covs: np.ndarray,
        trunc: tuple[tuple[int, float, float], ...] = (),
        meta: FitMeta | None = None,
    ):
        self.entries = tuple(entries)
        self.variables = tuple(Variable(e.name, e.kind) for e in entries)
        self.shift = np.asarray(shift, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        # renormalize only when needed: serialized weights must re-load
        # bit-exactly
        total = w.sum()
        self.weights = w if abs(total - 1.0) <= 1e-12 else w / total
        self.means = np.asarray(means, dtype=np.float64)
        self.covs = np.asarray(covs, dtype=np.float64)
        self.trunc = tuple(trunc)
        self.meta = meta or FitMeta(sample_count=0)
        self._cache: dict = {}

    # -- bookkeeping --

    @property
    def family(self) -> str:
        return "mixture"

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def n_dims(self) -> int:
        return self.means.shape[1]

    @property
    def sample_count(self) -> int:
        return self.meta.sample_count

    @property
    def low_confidence(self) -> bool:
        return self.meta.low_confidence

    def _entry(self, name: str) -> EmbedEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KindMismatch(f"density has no variable {name!r}")

    @property
    def visible_dims(self) -> list[int]:
        return [d for e in self.entries for d in e.dims]

    def _log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def _chols(self):
        if "chols" not in self._cache:
            self._cache["chols"] = chol_factors(self.covs)
        return self._cache["chols"]

    # -- embedding --

    def _embed_value(self, entry: EmbedEntry, value) -> np.ndarray:
        if entry.is_categorical:
            vec = np.zeros(len(entry.dims))
            if value in entry.vocab:
                vec[entry.vocab.index(value)] = 1.0
            return vec  # unseen category: the all-zeros corner
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise KindMismatch(f"variable {entry.name!r} expects a number, got {value!r}")
        return np.array([float(value)])

    def _embed_row(self, row: dict) -> np.ndarray:
        x = np.empty(self.n_dims)
        x.fill(np.nan)
        for entry in self.entries:
            if entry.name not in row:
                raise KindMismatch(f"row is missing variable {entry.name!r}")
            vals = self._embed_value(entry, row[entry.name])
            for dim, v in zip(entry.dims, vals):
                x[dim] = (v - self.shift[dim]) / self.scale[dim]
        return x

    # -- log density --

    def _split_trunc(self):
        vis = set(self.visible_dims)
        visible = [t for t in self.trunc if t[0] in vis]
        hidden = [t for t in self.trunc if t[0] not in vis]
        return visible, hidden

    def log_density(self, row: dict) -> float:
        x = self._embed_row(row)
        vis = self.visible_dims
        log_jac = float(np.log(self.scale[vis]).sum())
        if not self.trunc:
            comp = component_logpdf(
                x[None, vis], self.means[:, vis],
                self.covs[np.ix_(range(self.n_components), vis, vis)],
            )
            return float(_logsumexp(comp[0] + self._log_weights())) - log_jac
        vis_trunc, hid_trunc = self._split_trunc()
        for dim, lo, hi in vis_trunc:
            if not lo <= x[dim] <= hi:
                return -math.inf
        log_w = self._log_weights()
        per_comp = np.full(self.n_components, -np.inf)
        for k in range(self.n_components):
            if self.weights[k] <= 0:
                continue
            if hid_trunc:
                joint = self._component_hidden_integral(k, vis, x[vis], hid_trunc)
            else:
                comp = component_logpdf(
                    x[None, vis], self.means[[k]][:, vis], self.covs[np.ix_([k], vis, vis)]
                )
                joint = float(comp[0, 0])
            log_box = 0.0
            for dim, lo, hi in self.trunc:
                log_box += math.log(max(self._component_box_prob(k, dim, lo, hi), 1e-300))
            per_comp[k] = log_w[k] + joint - log_box
        return float(_logsumexp(per_comp)) - log_jac

    def _component_hidden_integral(self, k: int, vis, x_vis, hid_trunc) -> float:
        """log of the integral of N_k(x_vis, t) over the hidden truncated box."""
        if len(hid_trunc) == 1:
            dim, lo, hi = hid_trunc[0]
            mu_t = self.means[k, dim]
            sd_t = math.sqrt(self.covs[k, dim, dim])
            a = max(lo, mu_t - 8 * sd_t)
            b = min(hi, mu_t + 8 * sd_t)
            if not a < b:
                return -np.inf
            nodes, glw = np.polynomial.legendre.leggauss(_QUAD_NODES)
            t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            half = 0.5 * (b - a)
            dims = list(vis) + [dim]
            pts = np.empty((len(t), len(dims)))
            pts[:, :-1] = x_vis
            pts[:, -1] = t
            sub = np.ix_([k], dims, dims)
            comp = component_logpdf(pts, self.means[[k]][:, dims], self.covs[sub])
            return float(_logsumexp(comp[:, 0] + np.log(glw * half)))
        # several hidden dims: importance sampling with the product of
        # per-dim truncated marginals as the proposal (approximate)
        rng = np.random.Generator(np.random.Philox(key=np.array([0xD5, k], dtype=np.uint64)))
        m = 256
        tdims = [t[0] for t in hid_trunc]
        ts = np.empty((m, len(tdims)))
        log_q = np.zeros(m)
        for j, (dim, lo, hi) in enumerate(hid_trunc):
            ts[:, j] = self._truncated_marginal_draw(k, dim, lo, hi, rng.random(m))
            mu, sd = self.means[k, dim], math.sqrt(self.covs[k, dim, dim])
            z_j = max(self._component_box_prob(k, dim, lo, hi), 1e-300)
            log_q += (
                -0.5 * ((ts[:, j] - mu) / sd) ** 2 - math.log(sd) - 0.5 * _LOG_2PI
                - math.log(z_j)
            )
        dims = list(vis) + tdims
        pts = np.concatenate([np.tile(x_vis, (m, 1)), ts], axis=1)
        sub = np.ix_([k], dims, dims)
        comp = component_logpdf(pts, self.means[[k]][:, dims], self.covs[sub])
        return float(_logsumexp(comp[:, 0] - log_q) - math.log(m))

    def _component_box_prob(self, k: int, dim: int, lo: float, hi: float) -> float:
        mu = self.means[k, dim]
        sd = math.sqrt(self.covs[k, dim, dim])
        return float(ndtr((hi - mu) / sd) - ndtr((lo - mu) / sd))

    def _truncated_marginal_draw(self, k, dim, lo, hi, u):
        mu = self.means[k, dim]
        sd = math.sqrt(self.covs[k, dim, dim])
        lo_c = ndtr((lo - mu) / sd)
        hi_c = ndtr((hi - mu) / sd)
        span = max(hi_c - lo_c, 1e-300)
        uu = np.clip(lo_c + u * span, 1e-15, 1 - 1e-15)
        return mu + sd * ndtri(uu)

    # -- sampling --

    def sample(self, rng, n: int) -> list[dict]:
        if n == 0:
            return []
        gen = rng.generator if hasattr(rng, "generator") else rng
        comp_idx = gen.choice(self.n_components, size=n, p=self.weights)
        vis = self.visible_dims
        Z = np.empty((n, len(vis)))
        chols, _ = self._chols()
        for k in np.unique(comp_idx):
            mask = comp_idx == k
            m = int(mask.sum())
            if not self.trunc:
                eps = gen.standard_normal((m, self.n_dims))
                Z[mask] = (self.means[k] + eps @ chols[k].T)[:, vis]
            else:
                Z[mask] = self._sample_truncated_component(gen, int(k), m, vis)
        return self._decode_visible(Z, vis, n)

    def _decode_visible(self, Z: np.ndarray, vis: list[int], n: int) -> list[dict]:
        X = Z * self.scale[vis] + self.shift[vis]
        pos = {d: i for i, d in enumerate(vis)}
        rows = []
        for i in range(n):
            row = {}
            for entry in self.entries:
                if entry.is_categorical:
                    block = X[i, [pos[d] for d in entry.dims]]
                    row[entry.name] = entry.vocab[int(np.argmax(block))]
                else:
                    v = float(X[i, pos[entry.dims[0]]])
                    row[entry.name] = int(round(v)) if entry.kind == "int" else v
            rows.append(row)
        return rows

    def _sample_truncated_component(self, gen, k: int, m: int, vis) -> np.ndarray:
        """Draw truncated dims from their truncated marginals, then the
        remaining visible dims from the exact Gaussian conditional.
        Exact when a single dimension is truncated; independent-marginal
        approximation beyond that."""
        draws = np.empty((m, len(self.trunc)))
        for j, (dim, lo, hi) in enumerate(self.trunc):
            draws[:, j] = self._truncated_marginal_draw(k, dim, lo, hi, gen.random(m))
        tdims = [t[0] for t in self.trunc]
        rest = [d for d in vis if d not in tdims]
        out = np.empty((m, len(vis)))
        pos = {d: i for i, d in enumerate(vis)}
        for j, dim in enumerate(tdims):
            if dim in pos:
                out[:, pos[dim]] = draws[:, j]
        if rest:
            mean = self.means[k]
            _, cond_cov, B = conditional_moments(
                mean, self.covs[k], tdims, rest, mean[tdims]
            )
            mus = mean[rest] + (draws - mean[tdims]) @ B.T
            L = cholesky(
                cond_cov + 1e-12 * np.eye(len(rest)), lower=True, check_finite=False
            )
            eps = gen.standard_normal((m, len(rest)))
            vals = mus + eps @ L.T
            for i, d in enumerate(rest):
                out[:, pos[d]] = vals[:, i]
        return out

    def sample_conditional_batch(self, obs: dict[str, list], rng, n: int) -> list[dict | None]:
        """Point-condition on per-run observed values and draw one row
        per run, vectorized.  Runs whose conditioning values land in a
        ~zero-density region yield None.  Only valid on untruncated
        densities (fitted nodes)."""
        assert not self.trunc, "batch conditioning needs an untruncated density"
        gen = rng.generator if hasattr(rng, "generator") else rng
        if not obs:
            return list(self.sample(rng, n))
        obs_entries = [self._entry(name) for name in obs]
        obs_dims: list[int] = []
        for e in obs_entries:
            obs_dims.extend(e.dims)
        rest = [d for d in range(self.n_dims) if d not in obs_dims]
        X = np.empty((n, len(obs_dims)))
        col = 0
        for e, name in zip(obs_entries, obs):
            values = obs[name]
            width = len(e.dims)
            for i in range(n):
                emb = self._embed_value(e, values[i])
                X[i, col : col + width] = emb
            for j, dim in enumerate(e.dims):
                X[:, col + j] = (X[:, col + j] - self.shift[dim]) / self.scale[dim]
            col += width
        K = self.n_components
        idx = np.ix_(range(K), obs_dims, obs_dims)
        loglike = component_logpdf(X, self.means[:, obs_dims], self.covs[idx])
        log_r = loglike + self._log_weights()
        totals = _logsumexp(log_r, axis=1)
        log_jac = float(np.log(self.scale[obs_dims]).sum())
        ok = (totals - log_jac) >= math.log(_ZERO_MASS)
        rows: list[dict | None] = [None] * n
        if not ok.any():
            return rows
        # choose a component per run by inverse-CDF on responsibilities
        resp = np.exp(log_r - totals[:, None])
        resp /= resp.sum(axis=1, keepdims=True)
        u = gen.random(n)
        comp = (resp.cumsum(axis=1) < u[:, None]).sum(axis=1).clip(0, K - 1)
        draws = np.empty((n, len(rest)))
        if rest:
            eps = gen.standard_normal((n, len(rest)))
            for k in range(K):
                mask = ok & (comp == k)
                if not mask.any():
                    continue
                cm, cc, B = conditional_moments(
                    self.means[k], self.covs[k], obs_dims, rest, self.means[k][obs_dims]
                )
                mus = self.means[k][rest] + (X[mask] - self.means[k][obs_dims]) @ B.T
                L = cholesky(cc + 1e-12 * np.eye(len(rest)), lower=True, check_finite=False)
                draws[mask] = mus + eps[mask] @ L.T
        rest_entries = [e for e in self.entries if e.name not in obs]
        pos = {d: i for i, d in enumerate(rest)}
        scale_r = self.scale[rest] if rest else None
        shift_r = self.shift[rest] if rest else None
        for i in range(n):
            if not ok[i]:
                continue
            row = {name: obs[name][i] for name in obs}
            if rest:
                vals = draws[i] * scale_r + shift_r
                for e in rest_entries:
                    if e.is_categorical:
                        block = vals[[pos[d] for d in e.dims]]
                        row[e.name] = e.vocab[int(np.argmax(block))]
                    else:
                        v = float(vals[pos[e.dims[0]]])
                        row[e.name] = int(round(v)) if e.kind == "int" else v
            rows[i] = row
        return rows

    # -- marginalization / conditioning --

    def marginal(self, names) -> Density:
        names = tuple(names)
        entries = [self._entry(n) for n in names]
        if len(entries) == len(self.entries) and tuple(e.name for e in self.entries) == names:
            return self
        keep_dims = [d for e in entries for d in e.dims]
        all_dims = keep_dims + [t[0] for t in self.trunc]
        remap = {d: i for i, d in enumerate(all_dims)}
        new_entries = []
        for e in entries:
            new_entries.append(
                EmbedEntry(e.name, e.kind, tuple(remap[d] for d in e.dims), e.vocab)
            )
        new_trunc = tuple((remap[d], lo, hi) for d, lo, hi in self.trunc)
        idx = np.ix_(range(self.n_components), all_dims, all_dims)
        return MixtureDensity(
            tuple(new_entries),
            self.shift[all_dims],
            self.scale[all_dims],
            self.weights.copy(),
            self.means[:, all_dims],
            self.covs[idx],
            new_trunc,
            self.meta,
        )

    def condition(self, constraints: dict) -> Density:
        if not constraints:
            return self
        points, intervals = split_constraints(constraints)
        obs_dims: list[int] = []
        obs_vals: list[float] = []
        for name, value in points.items():
            entry = self._entry(name)
            vals = self._embed_value(entry, value)
            for dim, v in zip(entry.dims, vals):
                obs_dims.append(dim)
                obs_vals.append((v - self.shift[dim]) / self.scale[dim])
        interval_specs: list[tuple[int, float, float, str]] = []
        for name, iv in intervals.items():
            entry = self._entry(name)
            if entry.is_categorical:
                raise KindMismatch(f"interval constraint on categorical {name!r}")
            dim = entry.dims[0]
            lo = (iv.lo - self.shift[dim]) / self.scale[dim] if math.isfinite(iv.lo) else -math.inf
            hi = (iv.hi - self.shift[dim]) / self.scale[dim] if math.isfinite(iv.hi) else math.inf
            interval_specs.append((dim, lo, hi, name))

        # Point-constrained variables collapse out of the density; an
        # interval-constrained variable stays visible but truncated (it
        # disappears later if a marginal excludes it).
        kept_entries = [e for e in self.entries if e.name not in points]
        if not kept_entries:
            raise KindMismatch("conditioning removed every variable")

        weights = self.weights.copy()
        means = self.means
        covs = self.covs
        log_w = self._log_weights()

        if obs_dims:
            x_obs = np.array(obs_vals)
            rest = [d for d in range(self.n_dims) if d not in obs_dims]
            idx = np.ix_(range(self.n_components), obs_dims, obs_dims)
            loglike = component_logpdf(x_obs[None, :], means[:, obs_dims], covs[idx])[0]
            log_w = log_w + loglike
            total = _logsumexp(log_w)
            jac = np.log(self.scale[obs_dims]).sum()
            if total - jac < math.log(_ZERO_MASS):
                raise ZeroProbabilityCondition(
                    f"point constraints {sorted(points)} fall in a ~zero-density region"
                )
            new_means = np.empty((self.n_components, len(rest)))
            new_covs = np.empty((self.n_components, len(rest), len(rest)))
            for k in range(self.n_components):
                cm, cc, _ = conditional_moments(means[k], covs[k], obs_dims, rest, x_obs)
                new_means[k] = cm
                new_covs[k] = cc + 1e-12 * np.eye(len(rest))
            remap = {d: i for i, d in enumerate(rest)}
            means, covs = new_means, new_covs
            weights = np.exp(log_w - total)
            log_w = np.log(np.maximum(weights, 1e-300))
            shift = self.shift[rest]
            scale = self.scale[rest]
            trunc = tuple((remap[d], lo, hi) for d, lo, hi in self.trunc)
            interval_specs = [(remap[d], lo, hi, nm) for d, lo, hi, nm in interval_specs]
            entry_map = lambda e: EmbedEntry(e.name, e.kind, tuple(remap[d] for d in e.dims), e.vocab)
        else:
            shift, scale = self.shift, self.scale
            trunc = self.trunc
            entry_map = lambda e: e

        for dim, lo, hi, name in interval_specs:
            probs = np.array(
                [self._box_prob_for(means, covs, k, dim, lo, hi) for k in range(self.n_components)]
            )
            with np.errstate(divide="ignore"):
                log_w = log_w + np.log(np.maximum(probs, 0.0))
            trunc = trunc + ((dim, lo, hi),)
        total = _logsumexp(log_w)
        if not math.isfinite(total) or total < math.log(_ZERO_MASS):
            raise ZeroProbabilityCondition(
                f"constraints {sorted(constraints)} have probability below 1e-12"
            )
        weights = np.exp(log_w - total)

        new_entries = tuple(entry_map(e) for e in kept_entries)
        return MixtureDensity(
            new_entries, shift, scale, weights, means, covs, trunc, self.meta
        )

    @staticmethod
    def _box_prob_for(means, covs, k, dim, lo, hi) -> float:
        mu = means[k, dim]
        sd = math.sqrt(covs[k, dim, dim])
        return float(ndtr((hi - mu) / sd) - ndtr((lo - mu) / sd))

    # -- summaries --

    def interval_probability(self, name: str, interval: Interval) -> float:
        entry = self._entry(name)
        if entry.is_categorical:
            raise KindMismatch(f"variable {name!r} is categorical; no interval order")
        dim = entry.dims[0]
        if self.trunc:
            draws = self._seeded_draws(_MC_DRAWS)
            vals = np.array([r[name] for r in draws], dtype=float)
            inside = np.fromiter((interval.contains(v) for v in vals), bool, len(vals))
            return float(inside.mean())
        lo = (interval.lo - self.shift[dim]) / self.scale[dim] if math.isfinite(interval.lo) else -math.inf
        hi = (interval.hi - self.shift[dim]) / self.scale[dim] if math.isfinite(interval.hi) else math.inf
        acc = 0.0
        for k in range(self.n_components):
            acc += self.weights[k] * self._box_prob_for(self.means, self.covs, k, dim, lo, hi)
        return float(min(max(acc, 0.0), 1.0))

    def _seeded_draws(self, n: int) -> list[dict]:
        key = ("draws", n)
        if key not in self._cache:
            from psm.minilang.rng import SplitRng, stream_id

            rng = SplitRng(0xDE5EED, stream_id("mixture-draws", self.content_token()))
            self._cache[key] = self.sample(rng, n)
        return self._cache[key]

    def content_token(self) -> str:
        if "token" not in self._cache:
            h = hash((
                self.weights.tobytes(), self.means.tobytes(), self.covs.tobytes(),
                self.shift.tobytes(), self.scale.tobytes(), self.trunc,
            ))
            self._cache["token"] = str(h)
        return self._cache["token"]

    @staticmethod
    def _phi(x: float) -> float:
        return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi) if math.isfinite(x) else 0.0

    def mean(self, name: str) -> float:
        entry = self._entry(name)
        if entry.is_categorical:
            raise KindMismatch(f"variable {name!r} is categorical")
        dim = entry.dims[0]
        if not self.trunc:
            std_mean = float(self.weights @ self.means[:, dim])
            return std_mean * self.scale[dim] + self.shift[dim]
        if len(self.trunc) == 1:
            tdim, lo, hi = self.trunc[0]
            acc = 0.0
            for k in range(self.n_components):
                if self.weights[k] <= 0:
                    continue
                mu_t = self.means[k, tdim]
                sd_t = math.sqrt(self.covs[k, tdim, tdim])
                alpha, beta = (lo - mu_t) / sd_t, (hi - mu_t) / sd_t
                z = max(ndtr(beta) - ndtr(alpha), 1e-300)
                t_mean = mu_t + sd_t * (self._phi(alpha) - self._phi(beta)) / z
                if dim == tdim:
                    acc += self.weights[k] * t_mean
                else:
                    slope = self.covs[k, dim, tdim] / self.covs[k, tdim, tdim]
                    acc += self.weights[k] * (self.means[k, dim] + slope * (t_mean - mu_t))
            return acc * self.scale[dim] + self.shift[dim]
        draws = self._seeded_draws(_MC_DRAWS)
        return float(np.mean([r[name] for r in draws]))

    def variance(self, name: str) -> float:
        entry = self._entry(name)
        if entry.is_categorical:
            raise KindMismatch(f"variable {name!r} is categorical")
        dim = entry.dims[0]
        if not self.trunc:
            m = float(self.weights @ self.means[:, dim])
            second = float(self.weights @ (self.covs[:, dim, dim] + self.means[:, dim] ** 2))
            return max(second - m * m, 0.0) * self.scale[dim] ** 2
        draws = self._seeded_draws(_MC_DRAWS)
        return float(np.var([r[name] for r in draws]))

    def mode_row(self) -> dict:
        """Highest-density representative: the best of the component
        means and a seeded batch of draws (overlapping components can
        put the true mode between their means)."""
        vis = self.visible_dims
        if self.trunc:
            draws = self._seeded_draws(1024)
            dens = [self.log_density(r) for r in draws]
            return draws[int(np.argmax(dens))]
        candidates = self._decode_visible(self.means[:, vis], vis, self.n_components)
        candidates.extend(self._seeded_draws(1024))
        dens = [self.log_density(r) for r in candidates]
        return candidates[int(np.argmax(dens))]

    def categorical_marginal(self, name: str) -> CategoricalDensity:
        """Probability table of a one-hot embedded variable, from the
        mixture means of its indicator dimensions."""
        entry = self._entry(name)
        if not entry.is_categorical:
            raise KindMismatch(f"variable {name!r} is continuous")
        probs = {}
        for value, dim in zip(entry.vocab, entry.dims):
            raw = float(self.weights @ self.means[:, dim]) * self.scale[dim] + self.shift[dim]
            probs[(value,)] = max(raw, 1e-12)
        total = sum(probs.values())
        probs = {k: v / total for k, v in probs.items()}
        return CategoricalDensity(
            (Variable(entry.name, entry.kind),), probs, oov_mass=1e-12,
            alpha=0.0, sample_count=self.meta.sample_count,
            low_confidence=self.meta.low_confidence,
        )

    # -- serialization --

    def to_param_dict(self) -> dict:
        return {
            "family": "mixture",
            "entries": [
                {
                    "name": e.name,
                    "kind": e.kind,
                    "dims": list(e.dims),
                    "vocab": list(e.vocab) if e.vocab is not None else None,
                }
                for e in self.entries
            ],
            "shift": self.shift.tolist(),
            "scale": self.scale.tolist(),
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
            "trunc": [[int(d), lo, hi] for d, lo, hi in self.trunc],
            "meta": self.meta.to_dict(),
        }

    @classmethod
    def from_param_dict(cls, d: dict) -> "MixtureDensity":
        entries = tuple(
            EmbedEntry(
                e["name"], e["kind"], tuple(e["dims"]),
                tuple(e["vocab"]) if e["vocab"] is not None else None,
            )
            for e in d["entries"]
        )
        return cls(
            entries,
            np.array(d["shift"]),
            np.array(d["scale"]),
            np.array(d["weights"]),
            np.array(d["means"]),
            np.array(d["covs"]),
            tuple((t[0], t[1], t[2]) for t in d["trunc"]),
            FitMeta.from_dict(d["meta"]),
        )
