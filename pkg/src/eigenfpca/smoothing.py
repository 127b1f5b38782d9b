"""Multi-dimensional local linear regression and the three pipeline smoothers.

The generic engine ``local_linear_fit`` solves one kernel-weighted least
squares problem at a single query point. The grid drivers (``estimate_mean``,
``nadaraya_watson_mean``, ``estimate_pooled_cov``) evaluate the same normal
equations over whole grids using exact algebraic factorizations (per-subject
aggregation in time, matrix products over covariate grids), so they agree
with the per-point engine to floating-point accuracy while staying fast on
lattice-sized inputs.

Weighting follows the estimators' definitions: each subject contributes
1/(n N_i) per observation to the mean fit and 1/(n N_i (N_i - 1)) per
ordered observation pair to the covariance fit. The covariance fit excludes
diagonal pairs (j = k), which keeps measurement-error variance out of the
fitted surface.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InsufficientLocalDataError, SingularSystemError
from .kernels import Bandwidths, KernelSpec, eval_kernel
from .textio import fmt_float, write_csv, write_sidecar

# Ridge fallback scale and the relative eigenvalue cutoff that triggers it.
RIDGE_SCALE = 1e-10
SINGULAR_RCOND = 1e-12


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeanField:
    """Fitted mean surface on a tensor grid (time x covariate axes).

    ``values`` has shape (len(t_grid), len(z_axes[0]), ..., len(z_axes[p-1])).
    Off-grid evaluation is multilinear interpolation; queries outside the
    grid hull are clamped to it.
    """

    t_grid: np.ndarray
    z_axes: Tuple[np.ndarray, ...]
    values: np.ndarray
    bandwidths: Bandwidths
    kernel: KernelSpec

    def __post_init__(self):
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))
        object.__setattr__(self, "z_axes",
                           tuple(np.asarray(a, dtype=float) for a in self.z_axes))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def covariate_dim(self) -> int:
        return len(self.z_axes)

    def z_points(self) -> np.ndarray:
        """All grid covariate points, cartesian order matching the value layout."""
        grids = np.meshgrid(*self.z_axes, indexing="ij")
        return np.column_stack([g.ravel() for g in grids])

    def _interpolator(self):
        axes = (self.t_grid, *self.z_axes)
        return RegularGridInterpolator(axes, self.values, method="linear",
                                       bounds_error=False, fill_value=None)

    def at(self, t, z) -> np.ndarray:
        """Evaluate at (t, z) pairs; t is (m,), z is (m, p) or (p,)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = np.broadcast_to(z, (t.size, z.size))
        pts = np.column_stack([t, z])
        axes = (self.t_grid, *self.z_axes)
        for j, ax in enumerate(axes):
            pts[:, j] = np.clip(pts[:, j], ax[0], ax[-1])
        return self._interpolator()(pts)

    def at_observations(self, subject) -> np.ndarray:
        return self.at(subject.t, subject.z)

    def save(self, path, sidecar_path=None) -> None:
        p = self.covariate_dim
        header = ["t"] + [f"z_{k + 1}" for k in range(p)] + ["value"]
        zpts = self.z_points()
        flat = self.values.reshape(self.t_grid.size, -1)
        rows = []
        for i, t in enumerate(self.t_grid):
            for j in range(zpts.shape[0]):
                rows.append([fmt_float(t)] + [fmt_float(v) for v in zpts[j]]
                            + [fmt_float(flat[i, j])])
        write_csv(path, header, rows)
        if sidecar_path is not None:
            write_sidecar(sidecar_path, [
                ("kernel.family", self.kernel.family.value),
                ("bandwidth.h_t", fmt_float(self.bandwidths.h_t)),
                ("bandwidth.h_z", " ".join(fmt_float(h) for h in self.bandwidths.h_z)),
            ])

    @staticmethod
    def load(path, sidecar_path=None) -> "MeanField":
        from .textio import read_csv, read_sidecar
        header, rows = read_csv(path)
        p = len(header) - 2
        data = np.array([[float(v) for v in r] for r in rows])
        t_grid = np.unique(data[:, 0])
        z_axes = tuple(np.unique(data[:, 1 + k]) for k in range(p))
        shape = (t_grid.size,) + tuple(a.size for a in z_axes)
        values = data[:, -1].reshape(shape)
        bw = Bandwidths(1.0, (1.0,) * p, 1.0, (1.0,) * p)
        spec = KernelSpec()
        if sidecar_path is not None:
            meta = read_sidecar(sidecar_path)
            spec = KernelSpec.from_name(meta.get("kernel.family", "epanechnikov"))
            h_z = tuple(float(v) for v in meta["bandwidth.h_z"].split())
            bw = Bandwidths(float(meta["bandwidth.h_t"]), h_z, 1.0, (1.0,) * p)
        return MeanField(t_grid, z_axes, values, bw, spec)


@dataclass(frozen=True)
class CovSurface:
    """Symmetric pooled covariance surface on a square time grid."""

    t_grid: np.ndarray
    values: np.ndarray
    h_gamma: float

    def __post_init__(self):
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        v = self.values
        if v.shape != (self.t_grid.size, self.t_grid.size):
            raise ValueError("CovSurface values must be square on t_grid")
        if not np.allclose(v, v.T, atol=1e-12, rtol=0.0):
            raise ValueError("CovSurface values must be symmetric within 1e-12")

    def interp(self, s, t) -> np.ndarray:
        """Bilinear interpolation at (s, t) pairs, clamped to the grid hull."""
        s = np.clip(np.asarray(s, dtype=float), self.t_grid[0], self.t_grid[-1])
        t = np.clip(np.asarray(t, dtype=float), self.t_grid[0], self.t_grid[-1])
        rgi = RegularGridInterpolator((self.t_grid, self.t_grid), self.values,
                                      method="linear")
        return rgi(np.column_stack([np.atleast_1d(s), np.atleast_1d(t)]))

    def save(self, path, sidecar_path=None) -> None:
        rows = []
        for i, s in enumerate(self.t_grid):
            for j, t in enumerate(self.t_grid):
                rows.append([fmt_float(s), fmt_float(t), fmt_float(self.values[i, j])])
        write_csv(path, ["s", "t", "value"], rows)
        if sidecar_path is not None:
            write_sidecar(sidecar_path, [("bandwidth.h_gamma", fmt_float(self.h_gamma))])

    @staticmethod
    def load(path, sidecar_path=None) -> "CovSurface":
        from .textio import read_csv, read_sidecar
        _, rows = read_csv(path)
        data = np.array([[float(v) for v in r] for r in rows])
        t_grid = np.unique(data[:, 0])
        m = t_grid.size
        values = data[:, 2].reshape(m, m)
        h_gamma = np.nan
        if sidecar_path is not None:
            meta = read_sidecar(sidecar_path)
            h_gamma = float(meta.get("bandwidth.h_gamma", "nan"))
        return CovSurface(t_grid, values, h_gamma)


@dataclass(frozen=True)
class NoiseEstimate:
    sigma2: float


# ---------------------------------------------------------------------------
# Generic point engine
# ---------------------------------------------------------------------------

def _solve_normal(A, rhs):
    """Solve stacked normal equations with a trace-scaled ridge fallback.

    ``A`` is (..., m, m) symmetric, ``rhs`` (..., m). The ridge is applied
    only to systems whose smallest eigenvalue falls below SINGULAR_RCOND
    times the largest, which keeps the solve scale-invariant.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    ev = np.linalg.eigvalsh(A)
    smin, smax = ev[..., 0], ev[..., -1]
    bad = smin <= smax * SINGULAR_RCOND
    if np.any(bad):
        m = A.shape[-1]
        lam = RIDGE_SCALE * np.einsum("...ii->...", A)
        eye = np.eye(m)
        if A.ndim == 2:
            A = A + lam * eye
        else:
            A = A.copy()
            A[bad] = A[bad] + lam[bad][..., None, None] * eye
        ev = np.linalg.eigvalsh(A)
        if np.any(ev[..., -1] <= 0):
            raise SingularSystemError("local system singular even after ridge fallback")
    return np.linalg.solve(A, rhs[..., None])[..., 0]


def local_linear_fit(x, y, query, h, spec=None, w=None, min_samples=None):
    """Local linear fit at one query point; returns the fitted intercept.

    Solves the weighted least squares fit of y on (1, x - query) with weights
    w * prod_k K((x_k - query_k) / h_k) / h_k, and returns b0. A ridge
    (RIDGE_SCALE times the trace) is added to the normal equations only when
    the unridged system is numerically singular.

    Parameters
    ----------
    x : (n, d) or (n,) array of sample locations
    y : (n,) responses
    query : length-d point
    h : length-d positive bandwidths
    spec : KernelSpec, Epanechnikov by default
    w : optional (n,) nonnegative base weights (default: all ones)
    min_samples : required count of positively weighted samples (default d+1)

    Raises
    ------
    InsufficientLocalDataError
        If fewer than ``min_samples`` samples have positive weight at the query.
    """
    if spec is None:
        spec = KernelSpec()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    query = np.atleast_1d(np.asarray(query, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n, d = x.shape
    if min_samples is None:
        min_samples = d + 1
    dx = x - query
    kw = np.prod(eval_kernel(spec, dx / h) / h, axis=1)
    wt = kw if w is None else np.asarray(w, dtype=float) * kw
    pos = wt > 0
    found = int(np.count_nonzero(pos))
    if found < min_samples:
        raise InsufficientLocalDataError(query, min_samples, found)
    X = np.column_stack([np.ones(n), dx])
    Xw = X * wt[:, None]
    A = Xw.T @ X
    rhs = Xw.T @ y
    return float(_solve_normal(A, rhs)[0])


def nadaraya_watson_fit(x, y, query, h, spec=None, w=None):
    """Degree-0 (local constant) counterpart of local_linear_fit."""
    if spec is None:
        spec = KernelSpec()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    query = np.atleast_1d(np.asarray(query, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    kw = np.prod(eval_kernel(spec, (x - query) / h) / h, axis=1)
    wt = kw if w is None else np.asarray(w, dtype=float) * kw
    tot = float(wt.sum())
    found = int(np.count_nonzero(wt > 0))
    if found < 1 or tot <= 0:
        raise InsufficientLocalDataError(query, 1, found)
    return float(np.dot(wt, y) / tot)


# ---------------------------------------------------------------------------
# Mean field drivers
# ---------------------------------------------------------------------------

def _flatten(d):
    """Stack all observations: times, values, subject index, covariates, 1/(n N_i)."""
    n = d.n_subjects
    T = np.concatenate([s.t for s in d.subjects])
    Y = np.concatenate([s.y for s in d.subjects])
    subj = np.concatenate([np.full(s.n_obs, i, dtype=np.int64)
                           for i, s in enumerate(d.subjects)])
    Z = d.covariate_matrix()
    ws = np.array([1.0 / (n * s.n_obs) for s in d.subjects])
    return T, Y, subj, Z, ws


def _z_weight_matrix(z_axes, Z, h_z, spec):
    """Product-kernel weights of every subject at every covariate grid point.

    Returns (U, zpts): U is (n_grid, n_subjects) with the z part of the
    kernel weight, zpts the cartesian grid points in matching order.
    """
    mats = []
    for k, ax in enumerate(z_axes):
        mats.append(eval_kernel(spec, (ax[:, None] - Z[None, :, k]) / h_z[k]) / h_z[k])
    U = mats[0]
    for m in mats[1:]:
        U = U[:, None, :] * m[None, :, :]
        U = U.reshape(-1, Z.shape[0])
    grids = np.meshgrid(*z_axes, indexing="ij")
    zpts = np.column_stack([g.ravel() for g in grids])
    return U, zpts


def _time_window(T_sorted, t0, h_t, compact):
    if not compact:
        return 0, T_sorted.size
    lo = np.searchsorted(T_sorted, t0 - h_t, side="left")
    hi = np.searchsorted(T_sorted, t0 + h_t, side="right")
    return lo, hi


def estimate_mean(d, b: Bandwidths, spec: KernelSpec, t_grid, z_axes) -> MeanField:
    """(1+p)-dimensional local linear mean estimate on a tensor grid.

    Every observation enters with weight 1/(n N_i), so each subject carries
    equal total weight regardless of its sampling density. Grid cells
    without enough local data raise InsufficientLocalDataError carrying the
    grid coordinates.
    """
    return _mean_driver(d, b, spec, t_grid, z_axes, degree=1)


def nadaraya_watson_mean(d, b: Bandwidths, spec: KernelSpec, t_grid, z_axes) -> MeanField:
    """Product-kernel Nadaraya-Watson (degree-0) mean estimate on a tensor grid."""
    return _mean_driver(d, b, spec, t_grid, z_axes, degree=0)


def _mean_driver(d, b, spec, t_grid, z_axes, degree):
    t_grid = np.asarray(t_grid, dtype=float)
    z_axes = [np.asarray(a, dtype=float) for a in z_axes]
    p = d.covariate_dim
    if len(z_axes) != p:
        raise ValueError(f"expected {p} covariate axes, got {len(z_axes)}")
    h_z = np.asarray(b.h_z, dtype=float)
    if h_z.size != p:
        raise ValueError(f"h_z has {h_z.size} entries for p={p}")

    T, Y, subj, Z, ws = _flatten(d)
    order = np.argsort(T, kind="stable")
    T, Y, subj = T[order], Y[order], subj[order]
    n = d.n_subjects

    U, zpts = _z_weight_matrix(z_axes, Z, h_z, spec)
    Upos = (U > 0).astype(float)
    nq = zpts.shape[0]
    dim = 1 + p if degree == 1 else 1
    need = dim + 1 if degree == 1 else 1

    z_shape = tuple(len(a) for a in z_axes)
    values = np.empty((t_grid.size,) + z_shape)

    for ti, t0 in enumerate(t_grid):
        lo, hi = _time_window(T, t0, b.h_t, spec.compact)
        Ts, Ys, sb = T[lo:hi], Y[lo:hi], subj[lo:hi]
        dt = Ts - t0
        kt = eval_kernel(spec, dt / b.h_t) / b.h_t * ws[sb]
        # Per-subject time aggregates; the z kernel factors out per subject.
        s0 = np.bincount(sb, weights=kt, minlength=n)
        r0 = np.bincount(sb, weights=kt * Ys, minlength=n)
        c0 = np.bincount(sb, weights=(kt > 0).astype(float), minlength=n)
        cnt = Upos @ c0
        if degree == 0:
            S00 = U @ s0
            bad = cnt < need
            if np.any(bad):
                q = int(np.argmax(bad))
                raise InsufficientLocalDataError((t0, *zpts[q]), need, int(cnt[q]))
            values[ti] = (U @ r0 / S00).reshape(z_shape)
            continue

        s1 = np.bincount(sb, weights=kt * dt, minlength=n)
        s2 = np.bincount(sb, weights=kt * dt * dt, minlength=n)
        r1 = np.bincount(sb, weights=kt * dt * Ys, minlength=n)

        bad = cnt < need
        if np.any(bad):
            q = int(np.argmax(bad))
            raise InsufficientLocalDataError((t0, *zpts[q]), need, int(cnt[q]))

        P_s0, P_s1, P_s2 = U @ s0, U @ s1, U @ s2
        P_r0, P_r1 = U @ r0, U @ r1
        P_s0z = [U @ (s0 * Z[:, k]) for k in range(p)]
        P_s1z = [U @ (s1 * Z[:, k]) for k in range(p)]
        P_r0z = [U @ (r0 * Z[:, k]) for k in range(p)]

        A = np.empty((nq, dim + 1, dim + 1))
        rhs = np.empty((nq, dim + 1))
        A[:, 0, 0] = P_s0
        A[:, 0, 1] = A[:, 1, 0] = P_s1
        A[:, 1, 1] = P_s2
        rhs[:, 0] = P_r0
        rhs[:, 1] = P_r1
        for k in range(p):
            z0k = zpts[:, k]
            Szk = P_s0z[k] - z0k * P_s0
            A[:, 0, 2 + k] = A[:, 2 + k, 0] = Szk
            A[:, 1, 2 + k] = A[:, 2 + k, 1] = P_s1z[k] - z0k * P_s1
            rhs[:, 2 + k] = P_r0z[k] - z0k * P_r0
            for l in range(k, p):
                z0l = zpts[:, l]
                Szz = (U @ (s0 * Z[:, k] * Z[:, l]) - z0k * P_s0z[l]
                       - z0l * P_s0z[k] + z0k * z0l * P_s0)
                A[:, 2 + k, 2 + l] = A[:, 2 + l, 2 + k] = Szz
        sol = _solve_normal(A, rhs)
        values[ti] = sol[:, 0].reshape(z_shape)

    return MeanField(t_grid, tuple(z_axes), values, b, spec)


def center_dataset(d, mean: MeanField) -> List[np.ndarray]:
    """Per-subject centered observations U_ij = Y_ij - mu_hat(t_ij, z_i)."""
    out = []
    for s in d.subjects:
        out.append(np.asarray(s.y, dtype=float) - mean.at_observations(s))
    return out


# ---------------------------------------------------------------------------
# Pooled covariance
# ---------------------------------------------------------------------------

def _pair_table(d, centered):
    """All ordered off-diagonal pairs, aggregated over identical time pairs.

    Returns (T1, T2, wsum, wysum, counts) where rows with equal (t_ij, t_ik)
    have been merged; wsum is the summed subject weight 1/(n N_i (N_i - 1)),
    wysum the weight-weighted sum of cross-products, counts the number of
    raw pairs merged into the row. Merging is exact for the local linear
    objective because rows enter it only through (x, w, w*y).
    """
    n = d.n_subjects
    T1_parts, T2_parts, w_parts, y_parts = [], [], [], []
    for s, u in zip(d.subjects, centered):
        N = s.n_obs
        if N < 2:
            continue
        jj, kk = np.triu_indices(N, 1)
        t = np.asarray(s.t, dtype=float)
        wi = 1.0 / (n * N * (N - 1))
        prod = u[jj] * u[kk]
        # ordered pairs: both (j,k) and (k,j)
        T1_parts.append(np.concatenate([t[jj], t[kk]]))
        T2_parts.append(np.concatenate([t[kk], t[jj]]))
        y_parts.append(np.concatenate([prod, prod]))
        w_parts.append(np.full(2 * jj.size, wi))
    if not T1_parts:
        raise ValueError("pooled covariance needs at least one subject with N_i >= 2")
    T1 = np.concatenate(T1_parts)
    T2 = np.concatenate(T2_parts)
    w = np.concatenate(w_parts)
    wy = w * np.concatenate(y_parts)

    ut = np.unique(np.concatenate([T1, T2]))
    i1 = np.searchsorted(ut, T1)
    i2 = np.searchsorted(ut, T2)
    key = i1 * ut.size + i2
    uk, inv = np.unique(key, return_inverse=True)
    wsum = np.bincount(inv, weights=w)
    wysum = np.bincount(inv, weights=wy)
    counts = np.bincount(inv).astype(float)
    gT1 = ut[uk // ut.size]
    gT2 = ut[uk % ut.size]
    return gT1, gT2, wsum, wysum, counts


def estimate_pooled_cov(d, mean: MeanField, h_gamma: float, spec: KernelSpec,
                        t_grid) -> CovSurface:
    """2D local linear fit of centered cross-products, diagonal pairs excluded.

    Each subject's ordered pairs (j != k) enter with weight
    1/(n N_i (N_i - 1)); excluding j = k keeps the measurement-error variance
    off the fitted surface. The result is symmetrized as (V + V^T) / 2 and is
    exactly symmetric as stored.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    centered = center_dataset(d, mean)
    T1, T2, wsum, wysum, counts = _pair_table(d, centered)
    order = np.argsort(T1, kind="stable")
    T1, T2 = T1[order], T2[order]
    wsum, wysum, counts = wsum[order], wysum[order], counts[order]

    m = t_grid.size
    V = np.empty((m, m))
    for si, s0 in enumerate(t_grid):
        lo, hi = _time_window(T1, s0, h_gamma, spec.compact)
        t1, t2 = T1[lo:hi], T2[lo:hi]
        wv, wyv, cv = wsum[lo:hi], wysum[lo:hi], counts[lo:hi]
        d1 = t1 - s0
        k1 = eval_kernel(spec, d1 / h_gamma) / h_gamma
        c00 = wv * k1
        c10 = c00 * d1
        c20 = c10 * d1
        cy0 = wyv * k1
        cy1 = cy0 * d1
        K2 = eval_kernel(spec, (t_grid[:, None] - t2[None, :]) / h_gamma) / h_gamma
        K2pos = (K2 > 0).astype(float)
        cnt = K2pos @ ((k1 > 0) * cv)
        bad = cnt < 3
        if np.any(bad):
            q = int(np.argmax(bad))
            raise InsufficientLocalDataError((s0, t_grid[q]), 3, int(cnt[q]))
        S00 = K2 @ c00
        S10 = K2 @ c10
        S20 = K2 @ c20
        P01 = K2 @ (c00 * t2)
        P11 = K2 @ (c10 * t2)
        P02 = K2 @ (c00 * t2 * t2)
        Ry = K2 @ cy0
        R10 = K2 @ cy1
        P0y = K2 @ (cy0 * t2)
        t0 = t_grid
        S01 = P01 - t0 * S00
        S11 = P11 - t0 * S10
        S02 = P02 - 2.0 * t0 * P01 + t0 * t0 * S00
        R01 = P0y - t0 * Ry
        A = np.empty((m, 3, 3))
        A[:, 0, 0] = S00
        A[:, 0, 1] = A[:, 1, 0] = S10
        A[:, 0, 2] = A[:, 2, 0] = S01
        A[:, 1, 1] = S20
        A[:, 1, 2] = A[:, 2, 1] = S11
        A[:, 2, 2] = S02
        rhs = np.column_stack([Ry, R10, R01])
        V[si] = _solve_normal(A, rhs)[:, 0]
    V = (V + V.T) / 2.0
    return CovSurface(t_grid, V, float(h_gamma))


# ---------------------------------------------------------------------------
# Noise variance
# ---------------------------------------------------------------------------

def smooth_diagonal(d, centered, h: float, spec: KernelSpec, t_grid) -> np.ndarray:
    """1D local linear smooth of squared centered observations over time.

    Uses the mean estimator's 1/(n N_i) weighting; estimates
    Gamma*(t, t) + sigma^2 on the grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    n = d.n_subjects
    T = np.concatenate([s.t for s in d.subjects])
    Y2 = np.concatenate([u * u for u in centered])
    W = np.concatenate([np.full(s.n_obs, 1.0 / (n * s.n_obs)) for s in d.subjects])
    order = np.argsort(T, kind="stable")
    T, Y2, W = T[order], Y2[order], W[order]
    out = np.empty(t_grid.size)
    for i, t0 in enumerate(t_grid):
        lo, hi = _time_window(T, t0, h, spec.compact)
        if hi <= lo:
            raise InsufficientLocalDataError((t0,), 2, 0)
        out[i] = local_linear_fit(T[lo:hi], Y2[lo:hi], (t0,), (h,), spec, w=W[lo:hi])
    return out


def estimate_sigma2(d, mean: MeanField, cov: CovSurface,
                    spec: KernelSpec = None, interior: float = 0.8) -> NoiseEstimate:
    """Measurement-error variance from the diagonal-difference construction.

    The smoothed diagonal of squared residuals targets Gamma*(t,t) + sigma^2,
    while the covariance surface (fitted without diagonal pairs) targets
    Gamma*(t,t); sigma^2 is the average gap over the central ``interior``
    fraction of the time domain, clamped at zero.
    """
    if spec is None:
        spec = KernelSpec()
    if sum(s.n_obs for s in d.subjects) == 0:
        raise ValueError("estimate_sigma2: dataset has no observations")
    centered = center_dataset(d, mean)
    diag_fit = smooth_diagonal(d, centered, cov.h_gamma, spec, cov.t_grid)
    lo, hi = cov.t_grid[0], cov.t_grid[-1]
    margin = (1.0 - interior) / 2.0 * (hi - lo)
    mask = (cov.t_grid >= lo + margin) & (cov.t_grid <= hi - margin)
    if not np.any(mask):
        raise ValueError("estimate_sigma2: interior region contains no grid points")
    gap = diag_fit[mask] - np.diag(cov.values)[mask]
    return NoiseEstimate(max(0.0, float(np.mean(gap))))
