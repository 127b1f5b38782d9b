"""Kernel functions, product kernels over covariates, and CV bandwidth selection."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError, InsufficientLocalDataError


class KernelFamily(Enum):
    EPANECHNIKOV = "epanechnikov"
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


# Analytic second moments: integral of u^2 K(u) du over the kernel support.
_SECOND_MOMENT = {
    KernelFamily.EPANECHNIKOV: 0.2,
    KernelFamily.UNIFORM: 1.0 / 3.0,
    KernelFamily.GAUSSIAN: 1.0,
}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its precomputed second moment.

    Epanechnikov and Uniform are symmetric probability densities supported on
    [-1, 1]. Gaussian is provided for product-kernel smoothing of spatial
    fields but note its support is unbounded, so compact-support shortcuts
    do not apply to it.
    """

    family: KernelFamily = KernelFamily.EPANECHNIKOV

    @property
    def second_moment(self) -> float:
        return _SECOND_MOMENT[self.family]

    @property
    def compact(self) -> bool:
        return self.family is not KernelFamily.GAUSSIAN

    @staticmethod
    def from_name(name: str) -> "KernelSpec":
        try:
            return KernelSpec(KernelFamily(name.strip().lower()))
        except ValueError:
            valid = ", ".join(f.value for f in KernelFamily)
            raise ValueError(f"unknown kernel family {name!r}; expected one of: {valid}") from None


@dataclass(frozen=True)
class Bandwidths:
    """Smoothing bandwidths for the full pipeline.

    h_t and h_gamma smooth the time coordinate(s) of the mean and covariance
    fits; h_z and h_lambda are per-covariate-coordinate bandwidths for the
    mean fit and the eigenvalue regressions.
    """

    h_t: float
    h_z: tuple
    h_gamma: float
    h_lambda: tuple

    def __post_init__(self):
        object.__setattr__(self, "h_z", tuple(float(h) for h in np.atleast_1d(self.h_z)))
        object.__setattr__(self, "h_lambda", tuple(float(h) for h in np.atleast_1d(self.h_lambda)))
        allv = (self.h_t, *self.h_z, self.h_gamma, *self.h_lambda)
        if not all(np.isfinite(v) and v > 0 for v in allv):
            raise ValueError(f"all bandwidths must be positive and finite, got {allv}")

    def sort_key(self):
        # Lexicographic tie-break order used by cv_bandwidth.
        return (self.h_t, *self.h_z, self.h_gamma, *self.h_lambda)


def eval_kernel(spec: KernelSpec, u):
    """Evaluate the unscaled kernel K(u); callers apply the 1/h scaling."""
    u = np.asarray(u, dtype=float)
    if spec.family is KernelFamily.EPANECHNIKOV:
        out = 0.75 * (1.0 - u * u)
        return np.where(np.abs(u) <= 1.0, out, 0.0)
    if spec.family is KernelFamily.UNIFORM:
        return np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)


def scaled_kernel(spec: KernelSpec, diff, h):
    """K_h(diff) = K(diff / h) / h."""
    return eval_kernel(spec, np.asarray(diff, dtype=float) / h) / h


def product_weight(spec: KernelSpec, diffs, h):
    """Product kernel over covariate coordinates: prod_k K(diffs_k / h_k) / h_k.

    ``diffs`` may be a single length-p vector or an (n, p) batch; ``h`` is a
    length-p vector of positive bandwidths.
    """
    diffs = np.asarray(diffs, dtype=float)
    h = np.asarray(h, dtype=float)
    one = diffs.ndim == 1
    d2 = np.atleast_2d(diffs)
    if d2.shape[1] != h.shape[0]:
        raise DimensionMismatchError(
            f"product_weight: got {d2.shape[1]} coordinate(s) but {h.shape[0]} bandwidth(s)"
        )
    w = np.prod(eval_kernel(spec, d2 / h) / h, axis=1)
    return float(w[0]) if one else w


def cv_bandwidth(dataset, target, candidates, folds, seed, spec=None,
                 t_grid=None, z_axes=None):
    """Select a Bandwidths candidate by k-fold cross-validation over subjects.

    For ``target='mean'`` each candidate is scored by the held-out squared
    prediction error of the mean field fitted on the remaining folds,
    weighted 1/N_i per subject. For ``target='covariance'`` the held-out
    loss compares raw centered cross-products U_ij U_ik (j != k) against the
    fitted covariance surface; the mean used for centering is fitted once on
    the full data so the score isolates the covariance bandwidth.

    A candidate that cannot produce a prediction at some held-out point
    (insufficient local data for every fold arrangement) scores +inf.
    Scores within 1e-9 relative (plus a 1e-15 floor) of the minimum count
    as tied, and ties break toward the lexicographically smallest bandwidth
    vector.

    Returns the winning Bandwidths. Raises if every candidate scores +inf.
    """
    from . import smoothing  # deferred: smoothing imports this module

    if spec is None:
        spec = KernelSpec()
    candidates = list(candidates)
    if not candidates:
        raise ValueError("cv_bandwidth: candidate list is empty")
    if folds < 2:
        raise ValueError("cv_bandwidth: folds must be >= 2")
    if target not in ("mean", "covariance"):
        raise ValueError(f"cv_bandwidth: unknown target {target!r}")

    n = len(dataset.subjects)
    assign = _nonempty_folds(seed, n, folds)
    if t_grid is None:
        t_grid = np.linspace(dataset.time_domain[0], dataset.time_domain[1], 51)
    if z_axes is None and target == "mean":
        z_axes = dataset.default_z_axes(26)

    fixed_mean = None
    if target == "covariance":
        base = candidates[0]
        fixed_mean = smoothing.estimate_mean(dataset, base, spec, t_grid,
                                             dataset.default_z_axes(26))

    scores = []
    for cand in candidates:
        sq_sum = 0.0
        w_sum = 0.0
        failed = False
        for f in range(folds):
            train = [s for s, a in zip(dataset.subjects, assign) if a != f]
            test = [s for s, a in zip(dataset.subjects, assign) if a == f]
            if not test:
                continue
            if not train:
                failed = True
                break
            sub = dataset.replace_subjects(train)
            try:
                if target == "mean":
                    fld = smoothing.estimate_mean(sub, cand, spec, t_grid, z_axes)
                    for s in test:
                        pred = fld.at_observations(s)
                        r = np.asarray(s.y) - pred
                        sq_sum += float(np.sum(r * r)) / len(s.y)
                        w_sum += 1.0
                else:
                    surf = smoothing.estimate_pooled_cov(sub, fixed_mean, cand.h_gamma,
                                                         spec, t_grid)
                    for s in test:
                        if len(s.t) < 2:
                            continue
                        u = np.asarray(s.y) - fixed_mean.at_observations(s)
                        jj, kk = np.triu_indices(len(s.t), 1)
                        prod = u[jj] * u[kk]
                        pred = surf.interp(np.asarray(s.t)[jj], np.asarray(s.t)[kk])
                        r = prod - pred
                        m = len(s.t) * (len(s.t) - 1)
                        sq_sum += 2.0 * float(np.sum(r * r)) / m
                        w_sum += 1.0
            except InsufficientLocalDataError:
                failed = True
                break
        if failed or w_sum == 0.0:
            scores.append(np.inf)
        else:
            scores.append(sq_sum / w_sum)

    best_score = min(scores)
    if not np.isfinite(best_score):
        raise InsufficientLocalDataError(query=(), needed=1, found=0)
    cutoff = best_score * (1.0 + 1e-9) + 1e-15
    finalists = [i for i, s in enumerate(scores) if s <= cutoff]
    best = min(finalists, key=lambda i: candidates[i].sort_key())
    return candidates[best]


def _nonempty_folds(seed, n, folds):
    """Per-subject fold ids; falls back to round-robin if hashing empties a fold."""
    from .rng import fold_assignments

    assign = fold_assignments(seed, n, folds)
    if len(np.unique(assign)) < min(folds, n):
        assign = np.arange(n, dtype=np.int64) % folds
    return assign
