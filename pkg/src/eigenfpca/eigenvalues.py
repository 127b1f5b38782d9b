"""Covariate-specific eigenvalue estimation.

Two estimators are provided. The kernel-weighted least squares (WLS) route
regresses centered cross-products U_ij U_ik (j < k) on products of
eigenfunction values, weighting every row of subject i by the product kernel
between z_i and the query covariate; it works for dense and sparse designs
alike. The PC-based route first recovers per-subject component scores
(trapezoid integration for dense data, conditional best linear prediction
for sparse data) and then smooths the squared scores over the covariate.
"""

import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .eigenbasis import EigenBasis, eval_basis
from .errors import (EmptyNeighborhoodError, InsufficientLocalDataError,
                     SingularSystemError)
from .kernels import KernelSpec, product_weight
from .smoothing import (RIDGE_SCALE, SINGULAR_RCOND, CovSurface, MeanField,
                        local_linear_fit)
from .textio import fmt_float, write_csv


@dataclass(frozen=True)
class DesignBlock:
    """Per-subject regression block for the WLS estimator.

    ``X`` has one row per unordered observation pair j < k (lexicographic
    order) and one column per component: X[row, l] = phi_l(t_ij) phi_l(t_ik).
    ``y`` holds the matching centered cross-products U_ij U_ik.
    """

    subject_id: str
    X: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class ScoreSet:
    """Per-subject component scores plus the method that produced them."""

    subject_ids: Tuple[str, ...]
    scores: np.ndarray  # (n_subjects, L)
    z: np.ndarray       # (n_subjects, p)
    method: str         # "trapezoid" | "conditional"


@dataclass(frozen=True)
class EigenvalueField:
    """Estimated eigenvalue vectors on a covariate grid.

    ``values`` are the published (possibly clamped) estimates, ``raw`` the
    pre-clamp solutions, and ``clamped`` marks entries set to zero.
    """

    z_points: np.ndarray   # (n_z, p)
    values: np.ndarray     # (n_z, L)
    raw: np.ndarray        # (n_z, L)
    clamped: np.ndarray    # (n_z, L) bool
    method: str            # "wls" | "pc"

    def save(self, path, diagnostics_path=None) -> None:
        p = self.z_points.shape[1]
        L = self.values.shape[1]
        header = ([f"z_{k + 1}" for k in range(p)]
                  + [f"lambda_{k + 1}" for k in range(L)] + ["clamped_mask"])
        rows = []
        for i in range(self.z_points.shape[0]):
            mask = "".join("1" if c else "0" for c in self.clamped[i])
            rows.append([fmt_float(v) for v in self.z_points[i]]
                        + [fmt_float(v) for v in self.values[i]] + [mask])
        write_csv(path, header, rows)
        if diagnostics_path is not None:
            dheader = ([f"z_{k + 1}" for k in range(p)]
                       + [f"raw_lambda_{k + 1}" for k in range(L)])
            drows = [[fmt_float(v) for v in self.z_points[i]]
                     + [fmt_float(v) for v in self.raw[i]]
                     for i in range(self.z_points.shape[0])]
            write_csv(diagnostics_path, dheader, drows)

    @staticmethod
    def load(path, method: str = "wls") -> "EigenvalueField":
        from .textio import read_csv
        header, rows = read_csv(path)
        p = sum(1 for h in header if h.startswith("z_"))
        L = sum(1 for h in header if h.startswith("lambda_"))
        z = np.array([[float(v) for v in r[:p]] for r in rows])
        vals = np.array([[float(v) for v in r[p:p + L]] for r in rows])
        clamped = np.array([[c == "1" for c in r[p + L]] for r in rows])
        return EigenvalueField(z, vals, vals.copy(), clamped, method)


# ---------------------------------------------------------------------------
# Design blocks and the WLS estimator
# ---------------------------------------------------------------------------

def build_design(subject, mean: MeanField, basis: EigenBasis, L: int) -> Optional[DesignBlock]:
    """Regression block of one subject, or None (with a warning) when N_i < 2.

    Rows enumerate unordered pairs j < k in lexicographic order; centering
    subtracts the interpolated mean field at the subject's observations.
    """
    N = subject.n_obs
    if N < 2:
        warnings.warn(f"subject {subject.id!r} has N_i={N} < 2; skipped in WLS design",
                      RuntimeWarning, stacklevel=2)
        return None
    if L > basis.n_components:
        raise ValueError(f"L={L} exceeds basis components ({basis.n_components})")
    u = np.asarray(subject.y, dtype=float) - mean.at_observations(subject)
    Phi = eval_basis(basis, subject.t, L)     # (N, L)
    jj, kk = np.triu_indices(N, 1)
    X = Phi[jj] * Phi[kk]
    y = u[jj] * u[kk]
    return DesignBlock(subject.id, X, y, np.asarray(subject.z, dtype=float))


def build_all_designs(dataset, mean: MeanField, basis: EigenBasis, L: int) -> List[DesignBlock]:
    blocks = []
    for s in dataset.subjects:
        blk = build_design(s, mean, basis, L)
        if blk is not None:
            blocks.append(blk)
    if not blocks:
        raise ValueError("no subject has two or more observations; WLS design is empty")
    return blocks


def _block_grams(blocks):
    """Per-subject Gram matrices and cross-moments for fast repeated WLS solves.

    Because every row of subject i shares one kernel weight w_i(z), the
    stacked normal equations reduce to sums of per-subject X_i^T X_i and
    X_i^T y_i weighted by w_i(z).
    """
    Z = np.array([b.z for b in blocks])
    G = np.stack([b.X.T @ b.X for b in blocks])
    g = np.stack([b.X.T @ b.y for b in blocks])
    return Z, G, g


def _wls_solve(Z, G, g, z, h_lambda, spec, clamp):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w = product_weight(spec, Z - z[None, :], np.asarray(h_lambda, dtype=float))
    w = np.atleast_1d(w)
    if not np.any(w > 0):
        raise EmptyNeighborhoodError(z)
    A = np.tensordot(w, G, axes=1)
    rhs = np.tensordot(w, g, axes=1)
    ev = np.linalg.eigvalsh(A)
    if ev[0] <= ev[-1] * SINGULAR_RCOND:
        A = A + RIDGE_SCALE * np.trace(A) * np.eye(A.shape[0])
        ev = np.linalg.eigvalsh(A)
        if ev[-1] <= 0 or ev[0] <= 0:
            raise SingularSystemError(
                f"WLS Gram matrix singular after ridge fallback at z={tuple(z)}")
    raw = np.linalg.solve(A, rhs)
    out = np.clip(raw, 0.0, None) if clamp else raw
    return out, raw


def wls_eigenvalues(blocks, z, h_lambda, spec: KernelSpec = None, clamp: bool = True):
    """Kernel-weighted least squares eigenvalues at one covariate query.

    Solves (X^T W_z X)^{-1} X^T W_z y over the stacked subject blocks, where
    W_z repeats the product-kernel weight of each subject across its rows.
    With ``clamp`` (default) negative solutions are set to zero; the raw
    solution is recoverable through eigenvalue_field diagnostics.
    """
    if spec is None:
        spec = KernelSpec()
    Z, G, g = _block_grams(blocks)
    out, _ = _wls_solve(Z, G, g, z, h_lambda, spec, clamp)
    return out


# ---------------------------------------------------------------------------
# Score-based estimation
# ---------------------------------------------------------------------------

def pc_scores_trapezoid(subject, mean: MeanField, basis: EigenBasis, L: int) -> np.ndarray:
    """Component scores by trapezoid integration over the subject's own times.

    Intended for dense designs; with a handful of irregular observations the
    quadrature error dominates and the conditional predictor should be used
    instead.
    """
    if subject.n_obs < 2:
        raise ValueError(f"trapezoid scores need N_i >= 2 (subject {subject.id!r})")
    t = np.asarray(subject.t, dtype=float)
    u = np.asarray(subject.y, dtype=float) - mean.at_observations(subject)
    Phi = eval_basis(basis, t, L)
    integrand = u[:, None] * Phi
    dt = np.diff(t)
    return 0.5 * np.sum((integrand[:-1] + integrand[1:]) * dt[:, None], axis=0)


def pace_scores(subject, mean: MeanField, basis: EigenBasis, lambda_at_z,
                sigma2: float) -> np.ndarray:
    """Conditional (best linear) score predictor for sparse noisy observations.

    Computes Lambda Phi^T (Phi Lambda Phi^T + sigma^2 I)^{-1} U for the
    subject's centered observations, where Lambda = diag(lambda_at_z). With
    sigma2 = 0 and a singular system, the pseudo-inverse (tolerance 1e-10)
    is used.
    """
    lam = np.atleast_1d(np.asarray(lambda_at_z, dtype=float))
    if np.any(lam < 0) or sigma2 < 0:
        raise ValueError("pace_scores: lambda_at_z and sigma2 must be nonnegative")
    u = np.asarray(subject.y, dtype=float) - mean.at_observations(subject)
    Phi = eval_basis(basis, subject.t, lam.size)
    C = (Phi * lam[None, :]) @ Phi.T + sigma2 * np.eye(subject.n_obs)
    rhs = Phi * lam[None, :]  # C^{-1} columns against Lambda Phi^T
    try:
        if sigma2 == 0.0:
            sol = np.linalg.pinv(C, rcond=1e-10) @ u
        else:
            sol = np.linalg.solve(C, u)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"conditional score system failed: {e}") from e
    return rhs.T @ sol


def score_set(dataset, mean: MeanField, basis: EigenBasis, L: int,
              method: str = "trapezoid", lambda_pooled=None,
              sigma2: float = 0.0) -> ScoreSet:
    """Scores for every subject by one method.

    ``method='trapezoid'`` needs dense data (subjects with a single
    observation are not allowed); ``method='conditional'`` uses the pooled
    eigenvalues (or a supplied vector) and sigma2 in the best linear
    predictor.
    """
    if method not in ("trapezoid", "conditional"):
        raise ValueError(f"unknown score method {method!r}")
    ids, rows, zs = [], [], []
    if method == "conditional":
        lam = (np.asarray(lambda_pooled, dtype=float)[:L]
               if lambda_pooled is not None else basis.lambda_star[:L])
    for s in dataset.subjects:
        if method == "trapezoid":
            rows.append(pc_scores_trapezoid(s, mean, basis, L))
        else:
            rows.append(pace_scores(s, mean, basis, lam, sigma2))
        ids.append(s.id)
        zs.append(np.asarray(s.z, dtype=float))
    return ScoreSet(tuple(ids), np.vstack(rows), np.vstack(zs), method)


def pc_eigenvalues(scores: ScoreSet, z, h_lambda, spec: KernelSpec = None):
    """Local linear smooth of squared scores at one covariate query.

    For each component k, fits squared scores against the covariate with
    unit sample weights and returns the fitted value at z.
    """
    if spec is None:
        spec = KernelSpec()
    z = np.atleast_1d(np.asarray(z, dtype=float))
    h = np.asarray(h_lambda, dtype=float)
    sq = scores.scores ** 2
    out = np.empty(sq.shape[1])
    for k in range(sq.shape[1]):
        out[k] = local_linear_fit(scores.z, sq[:, k], z, h, spec)
    return out


# ---------------------------------------------------------------------------
# Field driver and reconstruction
# ---------------------------------------------------------------------------

def eigenvalue_field(dataset, mean: MeanField, basis: EigenBasis, L: int,
                     method: str, z_grid, h_lambda, spec: KernelSpec = None,
                     clamp: bool = True, score_method: str = None,
                     sigma2: float = 0.0, max_failure_fraction: float = 0.1) -> EigenvalueField:
    """Eigenvalue vectors over a covariate grid by WLS or the PC route.

    Rows correspond to ``z_grid`` order. Per-point failures (empty kernel
    neighborhood, insufficient local data) leave NaN rows; the call fails
    outright when more than ``max_failure_fraction`` of the points fail.
    """
    if spec is None:
        spec = KernelSpec()
    if method not in ("wls", "pc"):
        raise ValueError(f"unknown eigenvalue estimator {method!r}")
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=float))
    nq = z_grid.shape[0]
    raw = np.full((nq, L), np.nan)
    h = np.asarray(h_lambda, dtype=float)

    failures = []
    if method == "wls":
        blocks = build_all_designs(dataset, mean, basis, L)
        Z, G, g = _block_grams(blocks)
        for i in range(nq):
            try:
                _, raw[i] = _wls_solve(Z, G, g, z_grid[i], h, spec, clamp=False)
            except (EmptyNeighborhoodError, SingularSystemError) as e:
                failures.append((i, e))
    else:
        if score_method is None:
            from .dataset import SchemeKind, classify_scheme
            scheme = classify_scheme(dataset)
            score_method = ("trapezoid" if scheme.kind is SchemeKind.DENSE
                            else "conditional")
            if score_method == "conditional":
                warnings.warn("sparse design: PC route uses conditional scores; "
                              "trapezoid integration needs dense data",
                              RuntimeWarning, stacklevel=2)
        scores = score_set(dataset, mean, basis, L, method=score_method, sigma2=sigma2)
        sq = scores.scores ** 2
        for i in range(nq):
            try:
                for k in range(L):
                    raw[i, k] = local_linear_fit(scores.z, sq[:, k], z_grid[i], h, spec)
            except (InsufficientLocalDataError, SingularSystemError) as e:
                failures.append((i, e))
                raw[i] = np.nan

    if failures:
        frac = len(failures) / nq
        if frac > max_failure_fraction:
            i, err = failures[0]
            raise RuntimeError(
                f"eigenvalue field failed at {len(failures)}/{nq} grid points "
                f"(first at z={tuple(z_grid[i])}): {err}") from err
    ok = ~np.isnan(raw[:, 0])
    values = raw.copy()
    if clamp:
        values[ok] = np.clip(raw[ok], 0.0, None)
    clamped = np.zeros_like(raw, dtype=bool)
    clamped[ok] = (raw[ok] < 0) & clamp
    return EigenvalueField(z_grid, values, raw, clamped, method)


def reconstruct_cov(basis: EigenBasis, lambda_z) -> CovSurface:
    """Covariance surface sum_k lambda_k phi_k(s) phi_k(t) on the basis grid."""
    lam = np.atleast_1d(np.asarray(lambda_z, dtype=float))
    if not np.all(np.isfinite(lam)):
        raise ValueError("reconstruct_cov: lambda_z must be finite")
    L = lam.size
    phi = basis.phi[:, :L]
    V = (phi * lam[None, :]) @ phi.T
    V = (V + V.T) / 2.0
    return CovSurface(basis.t_grid, V, h_gamma=np.nan)
