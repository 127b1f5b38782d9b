"""Discretized eigen-decomposition of a covariance surface into an orthonormal basis.

The eigenproblem of the integral operator with kernel V on the time grid is
solved through the symmetric matrix W^{1/2} V W^{1/2}, where W holds the
trapezoid quadrature weights of the grid. Eigenvectors map back through
W^{-1/2}, which makes the returned columns orthonormal in the quadrature
inner product sum_g w_g f(g) g(g).
"""

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .smoothing import CovSurface
from .textio import fmt_float, write_csv, write_sidecar


@dataclass(frozen=True)
class EigenBasis:
    """Time grid, quadrature weights, eigenfunction columns, and pooled eigenvalues.

    ``phi`` is (m, L) with columns orthonormal under the trapezoid weights;
    ``lambda_star`` is nonincreasing with negatives clamped to zero; ``fve``
    is the cumulative fraction of variance explained (zeros when the surface
    has no variance).
    """

    t_grid: np.ndarray
    quad_weights: np.ndarray
    phi: np.ndarray
    lambda_star: np.ndarray
    fve: np.ndarray

    def __post_init__(self):
        for name in ("t_grid", "quad_weights", "phi", "lambda_star", "fve"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def n_components(self) -> int:
        return self.phi.shape[1]

    def save(self, path, sidecar_path=None) -> None:
        L = self.n_components
        header = ["t"] + [f"phi_{k + 1}" for k in range(L)]
        rows = []
        for i, t in enumerate(self.t_grid):
            rows.append([fmt_float(t)] + [fmt_float(v) for v in self.phi[i]])
        write_csv(path, header, rows)
        if sidecar_path is not None:
            write_sidecar(sidecar_path, [
                ("lambda_star", " ".join(fmt_float(v) for v in self.lambda_star)),
                ("fve", " ".join(fmt_float(v) for v in self.fve)),
            ])

    @staticmethod
    def load(path, sidecar_path) -> "EigenBasis":
        from .textio import read_csv, read_sidecar
        _, rows = read_csv(path)
        data = np.array([[float(v) for v in r] for r in rows])
        t_grid = data[:, 0]
        phi = data[:, 1:]
        meta = read_sidecar(sidecar_path)
        lam = np.array([float(v) for v in meta["lambda_star"].split()])
        fve = np.array([float(v) for v in meta["fve"].split()])
        return EigenBasis(t_grid, trapezoid_weights(t_grid), phi, lam, fve)


def trapezoid_weights(t_grid) -> np.ndarray:
    """Trapezoid quadrature weights for a (possibly non-uniform) ascending grid."""
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2:
        raise ValueError("trapezoid weights need at least two grid points")
    w = np.empty(t.size)
    w[0] = (t[1] - t[0]) / 2.0
    w[-1] = (t[-1] - t[-2]) / 2.0
    w[1:-1] = (t[2:] - t[:-2]) / 2.0
    return w


def _fix_signs(phi, w):
    """Deterministic sign convention: quadrature integral of each column >= 0.

    When the integral is within 1e-8 of zero the column is oriented so its
    largest-magnitude grid value is positive. Idempotent.
    """
    phi = phi.copy()
    for k in range(phi.shape[1]):
        s = float(np.dot(w, phi[:, k]))
        if abs(s) > 1e-8:
            if s < 0:
                phi[:, k] = -phi[:, k]
        else:
            j = int(np.argmax(np.abs(phi[:, k])))
            if phi[j, k] < 0:
                phi[:, k] = -phi[:, k]
    return phi


def eigendecompose(cov: CovSurface) -> EigenBasis:
    """Full eigen-decomposition of a covariance surface.

    Negative eigenvalues (finite-sample artifacts) are clamped to zero after
    sorting; all m components are returned, ordered by nonincreasing
    eigenvalue. Ties in the leading eigenvalues are reported as a warning
    since they make individual component identities arbitrary.
    """
    t = np.asarray(cov.t_grid, dtype=float)
    if t.size < 2 or t[-1] <= t[0]:
        raise ValueError("eigendecompose: zero-width time grid")
    V = np.asarray(cov.values, dtype=float)
    if not np.allclose(V, V.T, atol=1e-12, rtol=0.0):
        raise ValueError("eigendecompose: input surface not symmetric within 1e-12")
    w = trapezoid_weights(t)
    sw = np.sqrt(w)
    M = sw[:, None] * V * sw[None, :]
    M = (M + M.T) / 2.0
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    phi = vecs[:, order] / sw[:, None]
    # Quadrature norms are 1 by construction; renormalize to kill roundoff.
    norms = np.sqrt(np.einsum("g,gk,gk->k", w, phi, phi))
    phi = phi / norms[None, :]
    phi = _fix_signs(phi, w)
    lam = np.clip(vals, 0.0, None)
    if lam[0] > 0:
        sig = lam > 1e-10 * lam[0]
        if np.count_nonzero(sig) >= 2:
            gaps = np.diff(lam[sig])
            if np.any(np.abs(gaps) <= 1e-12 * lam[0]):
                warnings.warn("tied eigenvalues detected; component identity is arbitrary",
                              RuntimeWarning, stacklevel=2)
    total = float(lam.sum())
    fve = np.cumsum(lam) / total if total > 0 else np.zeros_like(lam)
    return EigenBasis(t, w, phi, lam, fve)


def select_truncation(basis: EigenBasis, fve_target: float) -> int:
    """Smallest L whose cumulative variance fraction reaches the target (inclusive)."""
    if not 0.0 < fve_target <= 1.0:
        raise ValueError("fve_target must be in (0, 1]")
    if basis.lambda_star.sum() <= 0:
        raise ValueError("select_truncation: all eigenvalues are zero")
    hit = np.nonzero(basis.fve >= fve_target)[0]
    if hit.size == 0:
        return basis.n_components
    return int(hit[0]) + 1


def eval_eigenfunction(basis: EigenBasis, k: int, t) -> np.ndarray:
    """Linear interpolation of eigenfunction column k at times t (no extrapolation)."""
    if not 0 <= k < basis.n_components:
        raise IndexError(f"eigenfunction index {k} out of range")
    t = np.asarray(t, dtype=float)
    lo, hi = basis.t_grid[0], basis.t_grid[-1]
    if np.any(t < lo) or np.any(t > hi):
        raise ValueError(f"time outside eigenfunction grid range [{lo}, {hi}]")
    out = np.interp(t, basis.t_grid, basis.phi[:, k])
    return out


def eval_basis(basis: EigenBasis, t, L: int = None) -> np.ndarray:
    """Matrix of the first L eigenfunctions at times t, shape (len(t), L)."""
    if L is None:
        L = basis.n_components
    t = np.asarray(t, dtype=float)
    return np.column_stack([eval_eigenfunction(basis, k, t) for k in range(L)])
