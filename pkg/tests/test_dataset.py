import numpy as np
import pytest

from eigenfpca import (FunctionalDataset, SchemeKind, Subject, classify_scheme,
                       gen_sim1, load_dataset, make_dataset, save_dataset,
                       validate)
from eigenfpca.errors import DimensionMismatchError, ParseError


def test_csv_single_subject(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text("subject_id,z_1,t,y\na,0.5,0.0,1.25\na,0.5,1.0,-2.5\n")
    d = load_dataset(p, "csv")
    assert d.n_subjects == 1
    assert d.covariate_dim == 1
    s = d.subjects[0]
    assert s.id == "a"
    assert s.n_obs == 2
    assert np.array_equal(s.t, [0.0, 1.0])
    assert np.array_equal(s.y, [1.25, -2.5])


@pytest.mark.parametrize("fmt", ["csv", "ndjson"])
def test_roundtrip_bit_exact(tmp_path, fmt):
    d, _ = gen_sim1(25, "sparse", 3)
    p = tmp_path / f"data.{fmt}"
    save_dataset(d, p, fmt)
    back = load_dataset(p, fmt, time_domain=d.time_domain)
    assert back.covariate_dim == d.covariate_dim
    assert back.time_domain == d.time_domain
    assert list(back.subjects) == list(d.subjects)


def test_roundtrip_awkward_floats(tmp_path):
    vals = np.array([1 / 3, 1e-300, 1e300, -0.1, 5e-324])
    s = Subject("x", [np.pi], np.arange(5.0), vals)
    d = make_dataset([s], time_domain=(0.0, 4.0))
    for fmt in ("csv", "ndjson"):
        p = tmp_path / f"f.{fmt}"
        save_dataset(d, p, fmt)
        back = load_dataset(p, fmt, time_domain=(0.0, 4.0))
        assert np.array_equal(back.subjects[0].y, vals)
        assert back.subjects[0].z[0] == np.pi


def test_parse_error_cites_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("subject_id,z_1,t,y\na,0.5,0.0,1.0\na,0.5,1.0,oops\n")
    with pytest.raises(ParseError) as exc:
        load_dataset(p, "csv")
    assert exc.value.line == 3
    assert "oops" in str(exc.value)


def test_dimension_mismatch_names_subject(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("subject_id,z_1,t,y\na,0.5,0.0,1.0\na,0.7,1.0,2.0\n")
    with pytest.raises(DimensionMismatchError) as exc:
        load_dataset(p, "csv")
    assert exc.value.subject_id == "a"


def test_validate_clean_generator():
    d, _ = gen_sim1(10, "dense", 1)
    assert validate(d) == []


def test_validate_out_of_domain():
    s = Subject("a", [0.5], [0.0, 11.0], [1.0, 2.0])
    d = FunctionalDataset((s,), (0.0, 10.0), 1)
    report = validate(d)
    assert len(report) == 1
    assert report[0].rule == "time-domain"
    assert report[0].subject_id == "a"


def test_validate_nan_value():
    s = Subject("a", [0.5], [0.0, 1.0], [1.0, np.nan])
    d = FunctionalDataset((s,), (0.0, 10.0), 1)
    report = validate(d)
    assert [v.rule for v in report] == ["non-finite"]


def test_validate_total_on_weird_but_parseable(tmp_path):
    p = tmp_path / "weird.csv"
    p.write_text("subject_id,z_1,t,y\na,nan,0.0,inf\na,nan,0.0,-1.0\n")
    d = load_dataset(p, "csv")
    report = validate(d)  # must not raise
    assert any(v.rule == "non-finite" for v in report)


def test_classify_dense_sim1():
    d, _ = gen_sim1(30, "dense", 2)
    s = classify_scheme(d, dense_threshold=20)
    assert s.kind is SchemeKind.DENSE
    assert s.min_obs == s.max_obs == 51


def test_classify_sparse_sim1():
    d, _ = gen_sim1(30, "sparse", 2)
    s = classify_scheme(d, dense_threshold=20)
    assert s.kind is SchemeKind.SPARSE
    assert 4 <= s.min_obs and s.max_obs <= 10


def test_classify_boundary_inclusive():
    s = Subject("a", [0.0], np.linspace(0, 1, 20), np.zeros(20))
    d = make_dataset([s], time_domain=(0, 1))
    assert classify_scheme(d, dense_threshold=20).kind is SchemeKind.DENSE


def test_classify_reorder_invariant():
    d, _ = gen_sim1(30, "sparse", 5)
    rev = d.replace_subjects(tuple(reversed(d.subjects)))
    a, b = classify_scheme(d), classify_scheme(rev)
    assert (a.kind, a.min_obs, a.median_obs, a.max_obs) == \
           (b.kind, b.min_obs, b.median_obs, b.max_obs)


def test_classify_empty_errors():
    d = FunctionalDataset((), (0.0, 1.0), 1)
    with pytest.raises(ValueError):
        classify_scheme(d)
