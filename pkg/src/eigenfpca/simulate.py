"""Synthetic data generators and evaluation metrics for the numerical studies.

Three families of generators are provided:

* ``gen_sim1`` — univariate covariate, two fixed cosine/sine components with
  smoothly varying eigenvalues; dense (51 equispaced points on [0, 10]) or
  sparse (4-10 points subsampled per curve) designs.
* ``gen_sim2`` — spatial lattice on [0, 1]^2 with phantom-defined groups and
  covariate-dependent eigenfunctions (a fully covariate-adjusted generator);
  used to compare covariance approximations.
* ``gen_sim3`` — spatial lattice with group-dependent eigenvalues (variants
  A-D: shared or group-dependent eigenfunctions, optionally with the
  eigenvalue maps smoothed across space); used for clustering studies.

All generators are pure functions of (parameters, seed) with per-subject
counter-based streams, so outputs are bit-reproducible and order-independent.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dataset import FunctionalDataset, Subject, make_dataset
from .rng import subject_rng
from .textio import fmt_float, open_text

S0, S1, S2 = 0, 1, 2


# ---------------------------------------------------------------------------
# Phantom region map
# ---------------------------------------------------------------------------

# Ellipse table (intensity, semi-axis a, semi-axis b, x0, y0, angle in degrees)
# in [-1, 1]^2 coordinates. A mirror-symmetric variant of the classic head
# phantom: ventricles share one size and the two off-center bottom features
# mirror each other, so the composed image is exactly left-right symmetric.
_PHANTOM_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.12, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.12, 0.31, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.605, 0.0),
    (0.1, 0.046, 0.023, 0.08, -0.605, 0.0),
)

# Composite intensities: 0 outside / ventricles, 0.2 brain tissue, 0.3 small
# features, 1.0 outer ring. Thresholds put the ring and the small bright
# features in S2, the grey tissue in S1, and the black rest in S0.
_THRESH_S1 = 0.05
_THRESH_S2 = 0.25


@dataclass(frozen=True)
class RegionMap:
    """Ground-truth group labels on a q x q covariate lattice over [0, 1]^2."""

    q: int
    labels: np.ndarray  # (q, q) ints in {0, 1, 2}; [i, j] <-> z = ((i+.5)/q, (j+.5)/q)

    def lattice(self) -> np.ndarray:
        """All lattice cell centers, shape (q*q, 2), row-major in (i, j)."""
        c = (np.arange(self.q) + 0.5) / self.q
        g1, g2 = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])

    def flat_labels(self) -> np.ndarray:
        return self.labels.ravel()


def phantom_intensity(points) -> np.ndarray:
    """Composite ellipse intensity at (x, y) points in [-1, 1]^2 coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(pts.shape[0])
    x, y = pts[:, 0], pts[:, 1]
    for amp, a, b, x0, y0, deg in _PHANTOM_ELLIPSES:
        th = np.radians(deg)
        xr = (x - x0) * np.cos(th) + (y - y0) * np.sin(th)
        yr = -(x - x0) * np.sin(th) + (y - y0) * np.cos(th)
        inside = (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
        out[inside] += amp
    return out


def _intensity_to_label(intensity) -> np.ndarray:
    lab = np.full(np.shape(intensity), S0, dtype=np.int64)
    lab[np.asarray(intensity) > _THRESH_S1] = S1
    lab[np.asarray(intensity) > _THRESH_S2] = S2
    return lab


def gen_phantom(q: int) -> RegionMap:
    """Rasterize the phantom group map on the q x q cell-center lattice."""
    if q < 16:
        raise ValueError("gen_phantom: q must be at least 16")
    c = (np.arange(q) + 0.5) / q
    u = 2.0 * c - 1.0
    g1, g2 = np.meshgrid(u, u, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    labels = _intensity_to_label(phantom_intensity(pts)).reshape(q, q)
    return RegionMap(q, labels)


# ---------------------------------------------------------------------------
# Truth container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimTruth:
    """Everything needed to score estimates against the generating model."""

    kind: str                 # "sim1" | "sim2" | "sim3A" ... "sim3D"
    seed: int
    sigma2: float
    z: np.ndarray             # (n, p) subject covariates
    lambda_true: np.ndarray   # (n, L) eigenvalues used for each subject
    labels: Optional[np.ndarray] = None   # (n,) evaluation labels (sims 2/3)
    gen_labels: Optional[np.ndarray] = None  # (n,) labels used during generation
    params: dict = field(default_factory=dict)

    def save(self, path) -> None:
        with open_text(path, "w") as f:
            head = {"kind": self.kind, "seed": self.seed,
                    "sigma2": fmt_float(self.sigma2),
                    "params": {k: fmt_float(v) if isinstance(v, float) else v
                               for k, v in self.params.items()}}
            f.write(json.dumps(head) + "\n")
            for i in range(self.z.shape[0]):
                rec = {"z": [fmt_float(v) for v in self.z[i]],
                       "lambda": [fmt_float(v) for v in self.lambda_true[i]]}
                if self.labels is not None:
                    rec["label"] = int(self.labels[i])
                if self.gen_labels is not None:
                    rec["gen_label"] = int(self.gen_labels[i])
                f.write(json.dumps(rec) + "\n")

    @staticmethod
    def load(path) -> "SimTruth":
        with open_text(path, "r") as f:
            head = json.loads(f.readline())
            zs, lams, labs, glabs = [], [], [], []
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                zs.append([float(v) for v in rec["z"]])
                lams.append([float(v) for v in rec["lambda"]])
                labs.append(rec.get("label"))
                glabs.append(rec.get("gen_label"))
        labels = None if labs[0] is None else np.asarray(labs, dtype=np.int64)
        gen_labels = None if glabs[0] is None else np.asarray(glabs, dtype=np.int64)
        return SimTruth(head["kind"], int(head["seed"]), float(head["sigma2"]),
                        np.asarray(zs), np.asarray(lams), labels, gen_labels,
                        head.get("params", {}))


# ---------------------------------------------------------------------------
# Generator 1: univariate covariate, fixed components
# ---------------------------------------------------------------------------

def sim1_lambda(z) -> np.ndarray:
    """True eigenvalue curves lambda_1, lambda_2 at covariate values z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    l1 = 4.0 * (1.0 + 2.0 * np.sin(0.1 + np.pi * z ** 2 / 2.0))
    l2 = 2.0 * (2.0 + np.sin(2.0 * np.pi * z))
    return np.column_stack([l1, l2])


def sim1_phi(t) -> np.ndarray:
    """The two generating eigenfunctions on [0, 10], orthonormal in L2."""
    t = np.asarray(t, dtype=float)
    return np.column_stack([-np.cos(np.pi * t / 10.0) / np.sqrt(5.0),
                            np.sin(np.pi * t / 10.0) / np.sqrt(5.0)])


def gen_sim1(n: int, scheme: str, seed: int) -> Tuple[FunctionalDataset, SimTruth]:
    """Dense or sparse curves with smoothly covariate-dependent eigenvalues.

    Per subject: z ~ U(0, 1); scores A_k ~ N(0, lambda_k(z)); unit-variance
    measurement noise. The dense design observes all 51 equispaced points on
    [0, 10]; the sparse design subsamples N_i ~ U{4..10} of them without
    replacement.
    """
    if scheme not in ("dense", "sparse"):
        raise ValueError("gen_sim1: scheme must be 'dense' or 'sparse'")
    t51 = np.linspace(0.0, 10.0, 51)
    phi51 = sim1_phi(t51)
    subjects, zs, lams = [], [], []
    for i in range(n):
        rng = subject_rng(seed, i)
        z = rng.uniform(0.0, 1.0)
        lam = sim1_lambda(z)[0]
        a = rng.normal(0.0, np.sqrt(lam))
        if scheme == "sparse":
            ni = int(rng.integers(4, 11))
            idx = np.sort(rng.choice(51, size=ni, replace=False))
        else:
            idx = np.arange(51)
        eps = rng.standard_normal(idx.size)
        t = t51[idx]
        y = phi51[idx] @ a + eps
        subjects.append(Subject(f"s{i:05d}", np.array([z]), t, y))
        zs.append([z])
        lams.append(lam)
    d = make_dataset(subjects, time_domain=(0.0, 10.0), covariate_dim=1)
    truth = SimTruth("sim1", seed, 1.0, np.asarray(zs), np.asarray(lams),
                     params={"n": n, "scheme": scheme})
    return d, truth


# ---------------------------------------------------------------------------
# Generators 2 and 3: spatial lattice with phantom groups
# ---------------------------------------------------------------------------

def table_lambda(z, labels) -> np.ndarray:
    """Group-dependent eigenvalue pairs at lattice covariates z."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    labels = np.asarray(labels)
    l1 = np.zeros(z.shape[0])
    l2 = np.zeros(z.shape[0])
    m2 = labels == S2
    l1[m2] = 8.0 + np.cos(z[m2, 0] * 2.0 * np.pi) / 2.0
    l2[m2] = 4.0 + np.sin((0.5 + z[m2, 0]) * 2.0 * np.pi) / 8.0
    m1 = labels == S1
    bump = np.cos(z[m1, 0] * np.pi) * np.sin(0.5 + z[m1, 1])
    l1[m1] = 3.0 + bump
    l2[m1] = 1.5 + bump / 2.0
    return np.column_stack([l1, l2])


def sim2_psi(t, z_norm) -> Tuple[np.ndarray, np.ndarray]:
    """Covariate-dependent component functions: psi_k(t, z) for all subjects.

    Returns two (n, len(t)) matrices; the temporal frequency is the
    Euclidean norm of the covariate.
    """
    t = np.asarray(t, dtype=float)
    w = np.atleast_1d(np.asarray(z_norm, dtype=float))
    arg = 2.0 * np.pi * np.outer(w, t)
    c = np.sqrt(2.0) / 2.0
    return c * np.sin(arg), c * np.cos(arg)


def gen_sim2(q: int, seed: int) -> Tuple[FunctionalDataset, SimTruth]:
    """Lattice data from a fully covariate-adjusted model (eigenfunctions vary with z).

    One subject per lattice cell, 31 equispaced observations on [0, 1],
    measurement noise N(0, 0.04). Group eigenvalues follow the table shared
    with the third study; the S0 background is pure noise.
    """
    region = gen_phantom(q)
    zpts = region.lattice()
    labels = region.flat_labels()
    lam = table_lambda(zpts, labels)
    t31 = np.linspace(0.0, 1.0, 31)
    psi1, psi2 = sim2_psi(t31, np.linalg.norm(zpts, axis=1))
    sd_noise = 0.2
    subjects = []
    for i in range(zpts.shape[0]):
        rng = subject_rng(seed, i)
        a = rng.normal(0.0, np.sqrt(lam[i]))
        eps = rng.standard_normal(t31.size) * sd_noise
        y = a[0] * psi1[i] + a[1] * psi2[i] + eps
        subjects.append(Subject(f"s{i:06d}", zpts[i], t31, y))
    d = make_dataset(subjects, time_domain=(0.0, 1.0), covariate_dim=2)
    truth = SimTruth("sim2", seed, sd_noise ** 2, zpts, lam, labels=labels,
                     gen_labels=labels, params={"q": q})
    return d, truth


def sim3_phi(t, variant_group: str) -> np.ndarray:
    """Temporal components for the third study: (len(t), 2) matrix.

    ``variant_group`` is "common" (shared basis sin(2 pi k t) + cos(2 pi k t)),
    "alt" (sin(2 pi k t) + cos(4 pi k t)), or "zero".
    """
    t = np.asarray(t, dtype=float)
    if variant_group == "zero":
        return np.zeros((t.size, 2))
    cols = []
    for k in (1, 2):
        if variant_group == "common":
            cols.append(np.sin(2 * np.pi * k * t) + np.cos(2 * np.pi * k * t))
        else:
            cols.append(np.sin(2 * np.pi * k * t) + np.cos(4 * np.pi * k * t))
    return np.column_stack(cols)


def smooth_field(values, sigma: float) -> np.ndarray:
    """Normalized Gaussian-product smoothing of a q x q lattice field.

    ``sigma`` is in covariate units on [0, 1]^2. The kernel is evaluated on
    the full lattice (no truncation) and renormalized pointwise, so constant
    fields pass through unchanged and boundary cells keep unit total mass.
    Linear in the input.
    """
    if sigma <= 0:
        raise ValueError("smooth_field: sigma must be positive")
    f = np.asarray(values, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError("smooth_field expects a square lattice field")
    q = f.shape[0]
    c = (np.arange(q) + 0.5) / q
    diff = c[:, None] - c[None, :]
    K = np.exp(-0.5 * (diff / sigma) ** 2)
    num = K @ f @ K.T
    den = np.outer(K.sum(axis=1), K.sum(axis=1))
    return num / den


def gen_sim3(variant: str, q: int, seed: int) -> Tuple[FunctionalDataset, SimTruth]:
    """Lattice data with group-dependent eigenvalues (variants A, B, C, D).

    A and B share one temporal basis across groups; C and D give S2 its own
    basis (S0 carries no signal). B and D additionally smooth the eigenvalue
    maps across space (Gaussian product kernel, sd 0.03); their evaluation
    labels are the argmax of the like-smoothed group indicator fields, which
    is how the post-smoothing ground truth is defined here.

    Sampling design: 31 equispaced observations on [0, 1] per location;
    measurement noise N(0, 0.4).
    """
    variant = variant.upper()
    if variant not in ("A", "B", "C", "D"):
        raise ValueError("gen_sim3: variant must be one of A, B, C, D")
    region = gen_phantom(q)
    zpts = region.lattice()
    gen_labels = region.flat_labels()
    lam = table_lambda(zpts, gen_labels)
    labels = gen_labels
    if variant in ("B", "D"):
        lam = np.column_stack([
            smooth_field(lam[:, k].reshape(q, q), 0.03).ravel()
            for k in range(lam.shape[1])])
        smoothed_ind = np.stack([
            smooth_field((gen_labels == c).astype(float).reshape(q, q), 0.03).ravel()
            for c in (S0, S1, S2)])
        labels = np.argmax(smoothed_ind, axis=0).astype(np.int64)
    t31 = np.linspace(0.0, 1.0, 31)
    bases = {"common": sim3_phi(t31, "common"),
             "alt": sim3_phi(t31, "alt"),
             "zero": sim3_phi(t31, "zero")}
    if variant in ("A", "B"):
        group_basis = {S0: bases["common"], S1: bases["common"], S2: bases["common"]}
    else:
        group_basis = {S0: bases["zero"], S1: bases["common"], S2: bases["alt"]}
    sd_noise = np.sqrt(0.4)
    subjects = []
    for i in range(zpts.shape[0]):
        rng = subject_rng(seed, i)
        a = rng.normal(0.0, np.sqrt(lam[i]))
        eps = rng.standard_normal(t31.size) * sd_noise
        y = group_basis[int(gen_labels[i])] @ a + eps
        subjects.append(Subject(f"s{i:06d}", zpts[i], t31, y))
    d = make_dataset(subjects, time_domain=(0.0, 1.0), covariate_dim=2)
    truth = SimTruth(f"sim3{variant}", seed, sd_noise ** 2, zpts, lam,
                     labels=labels, gen_labels=gen_labels, params={"q": q})
    return d, truth


# ---------------------------------------------------------------------------
# True-model evaluators (for scoring)
# ---------------------------------------------------------------------------

def true_lambda(truth: SimTruth, z) -> np.ndarray:
    """True eigenvalue vectors at arbitrary covariates.

    For the lattice generators the truth is defined on the lattice, so
    queries must coincide with stored subject covariates; the smooth
    first-study curves evaluate anywhere.
    """
    if truth.kind == "sim1":
        return sim1_lambda(np.asarray(z, dtype=float).ravel())
    zq = np.atleast_2d(np.asarray(z, dtype=float))
    # match rows against stored lattice covariates
    lookup = {tuple(row): i for i, row in enumerate(np.round(truth.z, 12))}
    idx = []
    for row in np.round(zq, 12):
        key = tuple(row)
        if key not in lookup:
            raise ValueError("true_lambda: query off the generator lattice")
        idx.append(lookup[key])
    return truth.lambda_true[np.asarray(idx)]


def true_cov_tensor(truth: SimTruth, t_grid) -> np.ndarray:
    """Per-subject true covariance surfaces, shape (n, m, m)."""
    t = np.asarray(t_grid, dtype=float)
    lam = truth.lambda_true
    if truth.kind == "sim2":
        psi1, psi2 = sim2_psi(t, np.linalg.norm(truth.z, axis=1))
        return (lam[:, 0, None, None] * psi1[:, :, None] * psi1[:, None, :]
                + lam[:, 1, None, None] * psi2[:, :, None] * psi2[:, None, :])
    if truth.kind == "sim1":
        phi = sim1_phi(t)
        return np.einsum("nl,sl,tl->nst", lam, phi, phi)
    if truth.kind.startswith("sim3"):
        variant = truth.kind[-1]
        out = np.zeros((lam.shape[0], t.size, t.size))
        if variant in ("A", "B"):
            phi = sim3_phi(t, "common")
            return np.einsum("nl,sl,tl->nst", lam, phi, phi)
        glab = truth.gen_labels
        for grp, name in ((S1, "common"), (S2, "alt")):
            m = glab == grp
            if np.any(m):
                phi = sim3_phi(t, name)
                out[m] = np.einsum("nl,sl,tl->nst", lam[m], phi, phi)
        return out
    raise ValueError(f"unknown truth kind {truth.kind!r}")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def ise_curve(est, truth, z_grid, domain=None) -> float:
    """Integrated squared error of a function of the covariate.

    1D grids integrate by the trapezoid rule; (n, 2) lattices integrate by
    Riemann cells of equal area over ``domain`` (default unit square).
    """
    est = np.asarray(est, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValueError("ise_curve: est and truth shapes differ")
    z = np.asarray(z_grid, dtype=float)
    diff2 = (est - tru) ** 2
    if z.ndim == 1:
        if z.size != est.shape[0]:
            raise ValueError("ise_curve: grid length mismatch")
        return float(np.trapezoid(diff2, z))
    if z.ndim == 2 and z.shape[1] == 2:
        if z.shape[0] != est.shape[0]:
            raise ValueError("ise_curve: grid length mismatch")
        if domain is None:
            area = 1.0
        else:
            area = float((domain[0][1] - domain[0][0]) * (domain[1][1] - domain[1][0]))
        return float(np.mean(diff2) * area)
    raise ValueError("ise_curve: z_grid must be 1D or an (n, 2) lattice")


def ise_cov3(est, truth, t_grid, z_area: float = 1.0) -> float:
    """Discretized triple integral of (truth - est)^2 over (s, t, z).

    ``est`` and ``truth`` are (n_z, m, m) tensors on a shared time grid
    (``est`` may be a single (m, m) surface, broadcast over z). Time axes
    use trapezoid weights; the z average is scaled by ``z_area``.
    """
    tru = np.asarray(truth, dtype=float)
    es = np.asarray(est, dtype=float)
    if es.ndim == 2:
        es = es[None, :, :]
    if es.shape[-2:] != tru.shape[-2:]:
        raise ValueError("ise_cov3: time grids differ between est and truth")
    t = np.asarray(t_grid, dtype=float)
    from .eigenbasis import trapezoid_weights
    w = trapezoid_weights(t)
    d2 = (tru - es) ** 2
    per_z = np.einsum("zst,s,t->z", d2, w, w)
    return float(np.mean(per_z) * z_area)


def recall_precision(pred, truth, matching=None) -> dict:
    """Per-class recall and precision after mapping predicted clusters to classes.

    ``matching`` maps predicted label -> truth class (identity by default).
    Classes with empty denominators report None.
    """
    pred = np.asarray(pred)
    tru = np.asarray(truth)
    if pred.shape != tru.shape:
        raise ValueError("recall_precision: label arrays differ in length")
    if matching is not None:
        mapped = np.array([matching[int(c)] for c in pred])
    else:
        mapped = pred
    out = {}
    for c in np.unique(tru):
        tp = int(np.sum((mapped == c) & (tru == c)))
        fn = int(np.sum((mapped != c) & (tru == c)))
        fp = int(np.sum((mapped == c) & (tru != c)))
        rec = tp / (tp + fn) if (tp + fn) > 0 else None
        prec = tp / (tp + fp) if (tp + fp) > 0 else None
        out[int(c)] = {"recall": rec, "precision": prec}
    return out
