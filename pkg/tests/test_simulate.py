import numpy as np
import pytest

from eigenfpca.rng import subject_rng
from eigenfpca.simulate import (S0, S1, S2, SimTruth, gen_phantom, gen_sim1,
                                gen_sim2, gen_sim3, ise_cov3, ise_curve,
                                phantom_intensity, recall_precision,
                                sim1_lambda, sim1_phi, sim2_psi, sim3_phi,
                                smooth_field, table_lambda, true_cov_tensor,
                                true_lambda)


# ---------------------------------------------------------------------------
# Generator 1
# ---------------------------------------------------------------------------

def test_sim1_deterministic():
    d1, t1 = gen_sim1(15, "sparse", 9)
    d2, t2 = gen_sim1(15, "sparse", 9)
    assert list(d1.subjects) == list(d2.subjects)
    assert np.array_equal(t1.lambda_true, t2.lambda_true)


def test_sim1_lambda_at_zero():
    lam = sim1_lambda(0.0)[0]
    assert abs(lam[0] - 4 * (1 + 2 * np.sin(0.1))) < 1e-12
    assert abs(lam[0] - 4.7987) < 5e-4
    assert abs(lam[1] - 4.0) < 1e-12


def test_sim1_designs():
    d, _ = gen_sim1(40, "dense", 1)
    assert all(s.n_obs == 51 for s in d.subjects)
    assert np.allclose(d.subjects[0].t, np.linspace(0, 10, 51))
    d, _ = gen_sim1(40, "sparse", 1)
    counts = d.n_obs_per_subject
    assert counts.min() >= 4 and counts.max() <= 10
    for s in d.subjects:
        assert np.all(np.diff(s.t) > 0)  # subsample without replacement, sorted


def test_sim1_score_variance_window():
    # sample variance of A_1 over z in [0.45, 0.55] approximates lambda_1(0.5);
    # window and tolerance frozen from a 4000-subject pilot
    d, truth = gen_sim1(4000, "dense", 42)
    m = (truth.z[:, 0] >= 0.45) & (truth.z[:, 0] <= 0.55)
    a1 = []
    for i in np.nonzero(m)[0]:
        rng = subject_rng(42, int(i))
        z = rng.uniform(0, 1)
        a = rng.normal(0, np.sqrt(sim1_lambda(z)[0]))
        a1.append(a[0])
    v = np.var(a1, ddof=1)
    assert abs(v - sim1_lambda(0.5)[0, 0]) < 1.2


def test_sim1_pooled_moment_matches_model():
    # E[Y(t)^2] = sum_k E[lambda_k] phi_k(t)^2 + sigma^2; bound frozen from
    # the n=10000 pilot (max abs deviation 0.086)
    d, _ = gen_sim1(10000, "dense", 7)
    Y = np.stack([s.y for s in d.subjects])
    emp = (Y ** 2).mean(axis=0)
    t51 = np.linspace(0, 10, 51)
    zg = np.linspace(0, 1, 20001)
    Elam = np.trapezoid(sim1_lambda(zg), zg, axis=0)
    phi = sim1_phi(t51)
    theo = Elam[0] * phi[:, 0] ** 2 + Elam[1] * phi[:, 1] ** 2 + 1.0
    assert np.mean(Y) ** 2 < 0.01
    assert np.max(np.abs(emp - theo)) < 0.15


# ---------------------------------------------------------------------------
# Phantom
# ---------------------------------------------------------------------------

def test_phantom_three_classes_and_symmetry():
    m = gen_phantom(128)
    counts = np.bincount(m.labels.ravel(), minlength=3)
    assert np.all(counts > 0)
    assert np.array_equal(m.labels, m.labels[::-1, :])  # left-right mirror


def test_phantom_center_inside_head():
    m = gen_phantom(64)
    assert m.labels[32, 32] in (S1, S2)


def test_phantom_deterministic():
    assert np.array_equal(gen_phantom(64).labels, gen_phantom(64).labels)


def test_phantom_region_areas_match_fine_reference():
    # compare q=256 rasterized areas against a 2048^2 supersampled reference
    # of the same continuous ellipse composition (within 2%)
    m = gen_phantom(256)
    areas = np.bincount(m.labels.ravel(), minlength=3) / m.labels.size
    cf = (np.arange(2048) + 0.5) / 2048
    uf = 2.0 * cf - 1.0
    g1, g2 = np.meshgrid(uf, uf, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    inten = phantom_intensity(pts)
    from eigenfpca.simulate import _intensity_to_label
    ref = np.bincount(_intensity_to_label(inten), minlength=3) / inten.size
    assert np.all(np.abs(areas - ref) <= 0.02)


# ---------------------------------------------------------------------------
# Generators 2 and 3
# ---------------------------------------------------------------------------

def test_sim2_s0_pure_noise():
    d, truth = gen_sim2(32, 5)
    s0 = truth.labels == S0
    Y = np.concatenate([d.subjects[i].y for i in np.nonzero(s0)[0]])
    assert abs(Y.mean()) < 0.01
    assert abs(Y.var() - 0.04) < 0.005


def test_sim2_table_values():
    lam = table_lambda(np.array([[0.0, 0.3]]), np.array([S2]))[0]
    assert abs(lam[0] - 8.5) < 1e-12
    assert abs(lam[1] - (4 + np.sin(np.pi) / 8)) < 1e-12


def test_sim2_deterministic():
    d1, t1 = gen_sim2(24, 3)
    d2, t2 = gen_sim2(24, 3)
    assert list(d1.subjects) == list(d2.subjects)
    assert np.array_equal(t1.labels, t2.labels)


def test_sim3_variant_a_s0_noise_only():
    d, truth = gen_sim3("A", 32, 4)
    s0 = truth.labels == S0
    Y = np.concatenate([d.subjects[i].y for i in np.nonzero(s0)[0]])
    assert abs(Y.var() - 0.4) < 0.02
    assert np.all(truth.lambda_true[s0] == 0.0)


def test_sim3_variant_c_group_bases():
    # S2 locations use sin(2 pi k t) + cos(4 pi k t)
    d, truth = gen_sim3("C", 32, 4)
    t31 = np.linspace(0, 1, 31)
    cov = true_cov_tensor(truth, t31)
    i2 = int(np.nonzero(truth.labels == S2)[0][0])
    phi_alt = sim3_phi(t31, "alt")
    lam = truth.lambda_true[i2]
    expect = (phi_alt * lam[None, :]) @ phi_alt.T
    assert np.allclose(cov[i2], expect, atol=1e-12, rtol=0)
    i0 = int(np.nonzero(truth.gen_labels == S0)[0][0])
    assert np.all(cov[i0] == 0.0)


def test_sim3_b_matches_a_away_from_boundaries():
    # smoothing is local: deep-interior eigenvalues move by well under 1%
    q = 64
    _, ta = gen_sim3("A", q, 8)
    _, tb = gen_sim3("B", q, 8)
    la = ta.lambda_true[:, 0].reshape(q, q)
    lb = tb.lambda_true[:, 0].reshape(q, q)
    lab = ta.labels.reshape(q, q)
    from scipy.ndimage import distance_transform_edt
    interior = distance_transform_edt(lab == S1) > 6  # > 3 kernel sds from a boundary
    assert interior.sum() > 20
    rel = np.abs(lb[interior] - la[interior]) / la[interior]
    assert np.max(rel) < 0.01


def test_sim3_bd_labels_follow_smoothed_indicators():
    q = 32
    _, ta = gen_sim3("A", q, 1)
    _, tb = gen_sim3("B", q, 1)
    inds = np.stack([
        smooth_field((ta.labels == c).astype(float).reshape(q, q), 0.03).ravel()
        for c in (S0, S1, S2)])
    assert np.array_equal(tb.labels, np.argmax(inds, axis=0))


# ---------------------------------------------------------------------------
# Field smoothing
# ---------------------------------------------------------------------------

def test_smooth_field_constant_exact():
    f = np.full((32, 32), 3.25)
    out = smooth_field(f, 0.03)
    assert np.max(np.abs(out - 3.25)) < 1e-12


def test_smooth_field_delta_mass():
    f = np.zeros((64, 64))
    f[32, 32] = 1.0
    out = smooth_field(f, 0.03)
    assert abs(out.sum() - 1.0) < 1e-10
    assert out[32, 32] == out.max()


def test_smooth_field_matches_double_loop():
    rng = np.random.default_rng(0)
    q = 12
    f = rng.normal(size=(q, q))
    sigma = 0.05
    c = (np.arange(q) + 0.5) / q
    out = np.empty_like(f)
    for i in range(q):
        for j in range(q):
            ksum, vsum = 0.0, 0.0
            for a in range(q):
                for b in range(q):
                    k = np.exp(-((c[i] - c[a]) ** 2 + (c[j] - c[b]) ** 2)
                               / (2 * sigma ** 2))
                    ksum += k
                    vsum += k * f[a, b]
            out[i, j] = vsum / ksum
    assert np.max(np.abs(out - smooth_field(f, sigma))) < 1e-10


def test_smooth_field_linear():
    rng = np.random.default_rng(1)
    f, g = rng.normal(size=(16, 16)), rng.normal(size=(16, 16))
    lhs = smooth_field(2.0 * f + 3.0 * g, 0.04)
    rhs = 2.0 * smooth_field(f, 0.04) + 3.0 * smooth_field(g, 0.04)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def test_ise_curve_trivials():
    z = np.linspace(0, 1, 101)
    f = np.sin(z)
    assert ise_curve(f, f, z) == 0.0
    assert abs(ise_curve(f + 1.0, f, z) - 1.0) < 1e-12


def test_ise_curve_matches_quadrature_oracle():
    rng = np.random.default_rng(2)
    z = np.linspace(0, 2, 201)
    a, b = rng.normal(size=201), rng.normal(size=201)
    ref = np.trapezoid((a - b) ** 2, z)
    assert abs(ise_curve(a, b, z) - ref) < 1e-10


def test_ise_curve_lattice():
    q = 16
    c = (np.arange(q) + 0.5) / q
    g1, g2 = np.meshgrid(c, c, indexing="ij")
    z = np.column_stack([g1.ravel(), g2.ravel()])
    f = np.ones(q * q)
    assert abs(ise_curve(f, np.zeros(q * q), z) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        ise_curve(f[:10], f, z)


def test_ise_cov3_trivials():
    t = np.linspace(0, 1, 21)
    truth = np.random.default_rng(3).normal(size=(5, 21, 21))
    assert ise_cov3(truth, truth, t) == 0.0
    off = truth + 2.0
    # constant offset: squared offset times time-square area times z-volume
    assert abs(ise_cov3(off, truth, t) - 4.0) < 1e-10


def test_recall_precision_perfect():
    lab = np.array([0, 1, 2, 1, 0])
    out = recall_precision(lab, lab)
    for c in (0, 1, 2):
        assert out[c]["recall"] == 1.0
        assert out[c]["precision"] == 1.0


def test_recall_precision_constant_prediction():
    truth = np.array([0] * 6 + [1] * 2 + [2] * 2)
    pred = np.zeros(10, dtype=int)
    out = recall_precision(pred, truth)
    assert out[0]["recall"] == 1.0
    assert out[0]["precision"] == 0.6
    assert out[1]["recall"] == 0.0
    assert out[1]["precision"] is None  # no predictions for class 1


def test_recall_precision_hand_tabulated():
    truth = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 2])
    pred = np.array([0, 0, 1, 1, 1, 2, 2, 2, 0, 2])
    out = recall_precision(pred, truth)
    # class 0: TP=2 FN=1 FP=1; class 1: TP=2 FN=1 FP=1; class 2: TP=3 FN=1 FP=1
    assert out[0]["recall"] == pytest.approx(2 / 3)
    assert out[0]["precision"] == pytest.approx(2 / 3)
    assert out[1]["recall"] == pytest.approx(2 / 3)
    assert out[1]["precision"] == pytest.approx(2 / 3)
    assert out[2]["recall"] == pytest.approx(3 / 4)
    assert out[2]["precision"] == pytest.approx(3 / 4)


def test_recall_precision_length_mismatch():
    with pytest.raises(ValueError):
        recall_precision(np.array([0, 1]), np.array([0, 1, 2]))


# ---------------------------------------------------------------------------
# Truth round-trip and evaluators
# ---------------------------------------------------------------------------

def test_truth_roundtrip(tmp_path):
    _, truth = gen_sim3("B", 24, 2)
    p = tmp_path / "truth.ndjson"
    truth.save(p)
    back = SimTruth.load(p)
    assert back.kind == truth.kind
    assert back.sigma2 == truth.sigma2
    assert np.array_equal(back.z, truth.z)
    assert np.array_equal(back.lambda_true, truth.lambda_true)
    assert np.array_equal(back.labels, truth.labels)
    assert np.array_equal(back.gen_labels, truth.gen_labels)


def test_true_lambda_dispatch():
    _, truth = gen_sim1(5, "dense", 0)
    z = np.array([0.0, 0.5, 1.0])
    assert np.allclose(true_lambda(truth, z), sim1_lambda(z))
    _, t2 = gen_sim2(16, 0)
    got = true_lambda(t2, t2.z[:7])
    assert np.array_equal(got, t2.lambda_true[:7])
    with pytest.raises(ValueError):
        true_lambda(t2, np.array([[0.123456, 0.54321]]))
