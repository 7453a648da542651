"""Seeded generator for a two-view Gaussian latent factor model.

Rows are drawn i.i.d. from

    x1 = beta1 z + W1 z1 + B1 s + e1,    e1 ~ N(0, Omega1),
    x2 = beta2 z + W2 z2 + B2 s + e2,    e2 ~ N(0, Omega2),

with z ~ N(0,1) shared across views, z1/z2 view-specific standard normal
factors, and s a shared standard normal factor, all independent. The implied
population covariance of the concatenated row x = (x1, x2) is

    Sigma = beta beta' + blockdiag(W1 W1', W2 W2') + B B'
            + blockdiag(Omega1, Omega2),

with beta = (beta1, beta2) and B = [B1; B2].

Randomness contract: the bit stream comes from the Philox 4x64 counter-based
generator (10 rounds, numpy's ``np.random.Philox`` keyed by the seed alone).
Normal variates are produced by drawing 53-bit integers k, mapping them to
uniforms (k + 0.5) / 2^53, and applying the inverse normal CDF
(``scipy.special.ndtri``) - never the generator's own normal method. Draw
order per call: z, z1, z2, s, raw noise for view 1, raw noise for view 2,
each filled row-major. Identical (spec, n, seed) therefore give bit-identical
data across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri


@dataclass(frozen=True)
class FactorModelSpec:
    """Loadings and noise covariances of the two-view factor model."""

    beta1: np.ndarray
    beta2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray

    def __post_init__(self):
        for name in ("beta1", "beta2"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).ravel())
        for name in ("W1", "W2", "B1", "B2", "Omega1", "Omega2"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name),
                                                        dtype=float)))
        p1, p2 = self.beta1.size, self.beta2.size
        if p1 < 1 or p2 < 1:
            raise ValueError("each view needs at least one coordinate")
        for name, rows in (("W1", p1), ("W2", p2), ("B1", p1), ("B2", p2)):
            if getattr(self, name).shape[0] != rows:
                raise ValueError(f"{name} must have {rows} rows")
        if self.B1.shape[1] != self.B2.shape[1]:
            raise ValueError("B1 and B2 must share the same factor count")
        for name, dim in (("Omega1", p1), ("Omega2", p2)):
            om = getattr(self, name)
            if om.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim} x {dim}")
            if np.abs(om - om.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(om).max()):
                raise ValueError(f"{name} must be symmetric")
            w = np.linalg.eigvalsh(om)
            if w[0] < -1e-10 * max(1.0, w[-1]):
                raise ValueError(f"{name} must be positive semidefinite")

    @property
    def p1(self):
        return self.beta1.size

    @property
    def p2(self):
        return self.beta2.size

    @property
    def beta(self):
        """Concatenated shared-signal loading (the planted direction)."""
        return np.concatenate([self.beta1, self.beta2])


def covariance(spec):
    """Population covariance of the concatenated row vector."""
    p1, p2 = spec.p1, spec.p2
    beta = spec.beta
    sigma = np.outer(beta, beta)
    sigma[:p1, :p1] += spec.W1 @ spec.W1.T + spec.Omega1
    sigma[p1:, p1:] += spec.W2 @ spec.W2.T + spec.Omega2
    b = np.vstack([spec.B1, spec.B2])
    sigma += b @ b.T
    return sigma


def population_root(spec):
    """Symmetric PSD square root of the population covariance."""
    sigma = covariance(spec)
    w, vecs = np.linalg.eigh(sigma)
    if w[0] < -1e-10 * max(1.0, w[-1]):
        raise ValueError("population covariance is not positive semidefinite")
    return (vecs * np.sqrt(np.clip(w, 0.0, None))) @ vecs.T


def _normals(rng, shape):
    """Frozen normal transform: 53-bit uniforms through the inverse CDF."""
    k = rng.integers(0, 1 << 53, size=shape, dtype=np.int64)
    return ndtri((k + 0.5) / float(1 << 53))


def _psd_factor(omega):
    """Factor F with F F' = Omega, valid for singular Omega as well."""
    w, vecs = np.linalg.eigh(omega)
    return vecs * np.sqrt(np.clip(w, 0.0, None))


def draw(spec, n, seed, return_latents=False):
    """Draw ``n`` rows from the model; deterministic in (spec, n, seed).

    With ``return_latents=True`` also returns a dict with the latent draws
    (keys ``z``, ``z1``, ``z2``, ``s``), which label rules consume.
    """
    from .data import MultiViewData

    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    k1, k2, ell = spec.W1.shape[1], spec.W2.shape[1], spec.B1.shape[1]

    z = _normals(rng, n)
    z1 = _normals(rng, (n, k1))
    z2 = _normals(rng, (n, k2))
    s = _normals(rng, (n, ell))
    e1 = _normals(rng, (n, spec.p1)) @ _psd_factor(spec.Omega1).T
    e2 = _normals(rng, (n, spec.p2)) @ _psd_factor(spec.Omega2).T

    x1 = np.outer(z, spec.beta1) + z1 @ spec.W1.T + s @ spec.B1.T + e1
    x2 = np.outer(z, spec.beta2) + z2 @ spec.W2.T + s @ spec.B2.T + e2
    data = MultiViewData(x1, x2)
    if return_latents:
        return data, {"z": z, "z1": z1, "z2": z2, "s": s}
    return data


def illustrative_spec():
    """Four-coordinate-per-view example used throughout the synthetic studies.

    Per view: the shared signal loads on coordinate 1; a view-specific
    distractor of norm ||beta|| - 0.1 loads on the unit direction
    (0, 1, -1, 0)/sqrt(2); a weak cross-correlated factor of norm
    ||beta|| - 1 loads on coordinate 4, whose noise variance is 0.09 (all
    other coordinates have unit noise). ||beta|| = sqrt(2) is the norm of the
    concatenated shared loading. The scales are calibrated so the shared
    signal is the leading population direction at both ends of the moderate
    agreement-weight range: the distractor explains almost as much variance,
    and the weak factor has higher cross-view score correlation.
    """
    beta1 = np.array([1.0, 0.0, 0.0, 0.0])
    beta2 = beta1.copy()
    nb = np.sqrt(2.0)
    w_dir = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    w_col = ((nb - 0.1) * w_dir).reshape(-1, 1)
    b_col = ((nb - 1.0) * np.array([0.0, 0.0, 0.0, 1.0])).reshape(-1, 1)
    omega = np.diag([1.0, 1.0, 1.0, 0.09])
    return FactorModelSpec(beta1=beta1, beta2=beta2, W1=w_col, W2=w_col.copy(),
                           B1=b_col, B2=b_col.copy(), Omega1=omega,
                           Omega2=omega.copy())


def sparse_spec(p_per_view, dense_dims, n_distractors=1):
    """Embed the four-coordinate example block in wide views padded with noise.

    Per view, the leading ``dense_dims`` coordinates carry the shared signal
    (unit entries); each of ``n_distractors`` view-specific factors occupies
    its own pair of subsequent coordinates with the unit pattern
    (1, -1)/sqrt(2) scaled to ||beta|| - 0.1; one cross-correlated factor of
    scale ||beta|| - 1 sits on the next coordinate with noise variance 0.09;
    all remaining coordinates are unit-variance pure noise. ||beta|| is the
    concatenated norm sqrt(2 * dense_dims), so the view-specific factors
    track the signal variance (hard for plain PCA) and the cross factor's
    correlation beats the signal's (tempting for CCA) at every dense_dims,
    preserving the example block's geometry. With dense_dims == p_per_view
    there is no room for structure or padding and the model reduces to
    x = beta z + e with unit noise.
    """
    if dense_dims < 1 or p_per_view < 1:
        raise ValueError("dense_dims and p_per_view must be positive")
    if dense_dims > p_per_view:
        raise ValueError("dense_dims cannot exceed p_per_view")
    if n_distractors < 0:
        raise ValueError("n_distractors must be nonnegative")
    p = p_per_view
    beta_v = np.zeros(p)
    beta_v[:dense_dims] = 1.0
    nb = np.sqrt(2.0 * dense_dims)
    w_scale = nb - 0.1
    b_scale = nb - 1.0

    rest = p - dense_dims
    if rest == 0:
        w = np.zeros((p, 0))
        b = np.zeros((p, 0))
        omega = np.eye(p)
    else:
        needed = 2 * n_distractors + 1
        if rest < needed:
            raise ValueError(
                f"need {needed} coordinates after the signal block for "
                f"{n_distractors} distractor(s) plus the cross-correlated "
                f"factor, only {rest} available")
        w = np.zeros((p, n_distractors))
        for t in range(n_distractors):
            i = dense_dims + 2 * t
            w[i, t] = w_scale / np.sqrt(2.0)
            w[i + 1, t] = -w_scale / np.sqrt(2.0)
        b = np.zeros((p, 1))
        b_coord = dense_dims + 2 * n_distractors
        b[b_coord, 0] = b_scale
        omega = np.eye(p)
        omega[b_coord, b_coord] = 0.09

    return FactorModelSpec(beta1=beta_v, beta2=beta_v.copy(), W1=w, W2=w.copy(),
                           B1=b, B2=b.copy(), Omega1=omega, Omega2=omega.copy())


def spec_to_json(spec):
    """Plain-dict form mirroring the field names (lists of floats)."""
    return {name: getattr(spec, name).tolist()
            for name in ("beta1", "beta2", "W1", "W2", "B1", "B2",
                         "Omega1", "Omega2")}


def spec_from_json(doc):
    missing = [k for k in ("beta1", "beta2", "W1", "W2", "B1", "B2",
                           "Omega1", "Omega2") if k not in doc]
    if missing:
        raise ValueError(f"spec document is missing fields: {', '.join(missing)}")
    return FactorModelSpec(**{k: np.asarray(doc[k], dtype=float)
                              for k in ("beta1", "beta2", "W1", "W2", "B1", "B2",
                                        "Omega1", "Omega2")})
