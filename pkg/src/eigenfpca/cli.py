"""End-to-end pipeline driver.

Subcommands: ``simulate``, ``fit``, ``eigenmap``, ``cluster``, ``evaluate``.
Configuration is a flat key-value text file with dotted keys (``key = value``
per line, ``#`` comments); command-line flags override file values. All
artifacts are plain CSV/NDJSON/JSON files in the output directory, and a
rerun with identical config and seed reproduces them byte for byte.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import clustering, eigenbasis, eigenvalues, simulate, smoothing
from .dataset import SchemeKind, classify_scheme, load_dataset, save_dataset
from .errors import EigenFpcaError
from .kernels import Bandwidths, KernelSpec, cv_bandwidth
from .textio import fmt_float, open_text, write_csv


class ConfigError(EigenFpcaError):
    pass


class PipelineConfig:
    """Flat dotted-key configuration with typed accessors."""

    def __init__(self, values=None):
        self.values = dict(values or {})

    @staticmethod
    def from_file(path) -> "PipelineConfig":
        values = {}
        with open_text(path, "r") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                k, _, v = line.partition("=")
                values[k.strip()] = v.strip()
        return PipelineConfig(values)

    def merge_flags(self, pairs):
        for item in pairs or []:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            k, _, v = item.partition("=")
            self.values[k.strip()] = v.strip()

    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_float(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else float(v)

    def get_int(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else int(v)

    def get_bool(self, key, default=False):
        v = self.values.get(key)
        if v is None:
            return default
        return v.lower() in ("1", "true", "yes", "on")

    def get_floats(self, key, default=None):
        v = self.values.get(key)
        if v is None:
            return default
        return tuple(float(x) for x in v.split())


def _stage(name):
    """Decorator-ish context: re-raise errors tagged with the pipeline stage."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, _StageError):
                raise _StageError(name, exc) from exc
            return False
    return _Ctx()


class _StageError(Exception):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------

def _out_dir(cfg) -> Path:
    out = Path(cfg.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(cfg) -> int:
    return cfg.get_int("seed", 0)


def _load_or_generate(cfg, out):
    sim_kind = cfg.get("sim.kind")
    path = cfg.get("dataset.path")
    if (sim_kind is None) == (path is None):
        raise ConfigError("exactly one of sim.kind and dataset.path must be set")
    if path is not None:
        with _stage("data.load_dataset"):
            d = load_dataset(path, cfg.get("dataset.format", "csv"))
        truth_path = cfg.get("dataset.truth")
        truth = simulate.SimTruth.load(truth_path) if truth_path else None
        return d, truth
    return _generate(cfg, _seed(cfg))


def _generate(cfg, seed):
    kind = cfg.get("sim.kind")
    with _stage("sim.generate"):
        if kind == "sim1":
            n = cfg.get_int("sim.n", 200)
            scheme = cfg.get("sim.scheme", "dense")
            return simulate.gen_sim1(n, scheme, seed)
        if kind == "sim2":
            return simulate.gen_sim2(cfg.get_int("sim.q", 64), seed)
        if kind in ("sim3A", "sim3B", "sim3C", "sim3D"):
            return simulate.gen_sim3(kind[-1], cfg.get_int("sim.q", 64), seed)
    raise ConfigError(f"unknown sim.kind {kind!r}")


def _bandwidths(cfg, d, spec) -> Bandwidths:
    p = d.covariate_dim
    h_t = cfg.get_float("bandwidth.h_t")
    h_z = cfg.get_floats("bandwidth.h_z")
    h_gamma = cfg.get_float("bandwidth.h_gamma")
    h_lambda = cfg.get_floats("bandwidth.h_lambda")
    grid = cfg.get("bandwidth.cv.grid")
    if None not in (h_t, h_z, h_gamma, h_lambda):
        return Bandwidths(h_t, h_z, h_gamma, h_lambda)
    if grid is None:
        # scale-based defaults: a tenth of each domain span
        lo, hi = d.time_domain
        zmat = d.covariate_matrix()
        spans = zmat.max(axis=0) - zmat.min(axis=0)
        spans[spans <= 0] = 1.0
        return Bandwidths(
            h_t if h_t is not None else 0.1 * (hi - lo),
            h_z if h_z is not None else tuple(0.15 * s for s in spans),
            h_gamma if h_gamma is not None else 0.15 * (hi - lo),
            h_lambda if h_lambda is not None else tuple(0.2 * s for s in spans))
    candidates = []
    for part in grid.split(";"):
        vals = [float(x) for x in part.split()]
        if len(vals) != 2 * p + 2:
            raise ConfigError("bandwidth.cv.grid entries need h_t, h_z(p), "
                              "h_gamma, h_lambda(p) values")
        candidates.append(Bandwidths(vals[0], vals[1:1 + p], vals[1 + p],
                                     vals[2 + p:]))
    folds = cfg.get_int("bandwidth.cv.folds", 5)
    target = cfg.get("bandwidth.cv.target", "mean")
    with _stage("kernel.cv_bandwidth"):
        return cv_bandwidth(d, target, candidates, folds, _seed(cfg), spec)


def _grids(cfg, d):
    t_points = cfg.get_int("grid.t_points", 101 if d.covariate_dim == 1 else 51)
    lo, hi = d.time_domain
    t_grid = np.linspace(lo, hi, t_points)
    z_points = cfg.get_int("grid.z_points", 26)
    z_axes = d.default_z_axes(z_points)
    return t_grid, z_axes


def _field_z(cfg, d):
    spec = cfg.get("field.z", "auto")
    zmat = d.covariate_matrix()
    if spec in ("auto", "lattice") and d.covariate_dim >= 2:
        return np.unique(zmat, axis=0)
    count = 101
    if spec.startswith("uniform:"):
        count = int(spec.split(":")[1])
    rng_spec = cfg.get("field.z_range", "0 1")
    lo, hi = (float(v) for v in rng_spec.split())
    return np.linspace(lo, hi, count)[:, None]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg) -> int:
    out = _out_dir(cfg)
    d, truth = _generate(cfg, _seed(cfg))
    with _stage("data.save_dataset"):
        save_dataset(d, out / "dataset.csv", "csv")
        truth.save(out / "truth.ndjson")
    scheme = classify_scheme(d)
    print(f"simulate: kind={cfg.get('sim.kind')} n={d.n_subjects} "
          f"scheme={scheme.kind.value} seed={_seed(cfg)} out={out}")
    return 0


def cmd_fit(cfg) -> int:
    out = _out_dir(cfg)
    d, _ = _load_or_generate(cfg, out)
    spec = KernelSpec.from_name(cfg.get("kernel.family", "epanechnikov"))
    b = _bandwidths(cfg, d, spec)
    t_grid, z_axes = _grids(cfg, d)
    mean_method = cfg.get("mean.method", "loclin")
    with _stage("smooth.estimate_mean"):
        if mean_method == "nw":
            mean = smoothing.nadaraya_watson_mean(d, b, spec, t_grid, z_axes)
        else:
            mean = smoothing.estimate_mean(d, b, spec, t_grid, z_axes)
    with _stage("smooth.estimate_pooled_cov"):
        cov = smoothing.estimate_pooled_cov(d, mean, b.h_gamma, spec, t_grid)
    with _stage("eigen.eigendecompose"):
        basis = eigenbasis.eigendecompose(cov)
    with _stage("smooth.estimate_sigma2"):
        sig = smoothing.estimate_sigma2(d, mean, cov, spec)
    fve_target = cfg.get_float("model.fve", 0.9)
    L = cfg.get_int("model.L")
    if L is None:
        with _stage("eigen.select_truncation"):
            L = eigenbasis.select_truncation(basis, fve_target)
    mean.save(out / "mean.csv", out / "mean.meta")
    cov.save(out / "cov.csv", out / "cov.meta")
    basis.save(out / "basis.csv", out / "basis.meta")
    with open_text(out / "fit.json", "w") as f:
        json.dump({"sigma2": sig.sigma2, "L": L,
                   "fve": [float(v) for v in basis.fve[:max(L, 5)]],
                   "bandwidths": {"h_t": b.h_t, "h_z": list(b.h_z),
                                  "h_gamma": b.h_gamma, "h_lambda": list(b.h_lambda)},
                   "kernel": spec.family.value}, f, indent=2)
        f.write("\n")
    print(f"fit: n={d.n_subjects} sigma2={sig.sigma2:.6g} L={L} "
          f"fve_L={basis.fve[L - 1]:.4f} bandwidths=(h_t={b.h_t:.4g}, "
          f"h_z={b.h_z}, h_gamma={b.h_gamma:.4g}, h_lambda={b.h_lambda})")
    return 0


def cmd_eigenmap(cfg) -> int:
    out = _out_dir(cfg)
    d, _ = _load_or_generate(cfg, out)
    fit_path = out / "fit.json"
    if not fit_path.exists():
        raise ConfigError(f"fit artifacts not found in {out}; run 'fit' first")
    with open_text(fit_path, "r") as f:
        fit = json.load(f)
    mean = smoothing.MeanField.load(out / "mean.csv", out / "mean.meta")
    basis = eigenbasis.EigenBasis.load(out / "basis.csv", out / "basis.meta")
    spec = KernelSpec.from_name(fit["kernel"])
    L = cfg.get_int("model.L", fit["L"])
    h_lambda = cfg.get_floats("bandwidth.h_lambda", tuple(fit["bandwidths"]["h_lambda"]))
    method = cfg.get("estimator.method", "wls")
    zq = _field_z(cfg, d)
    scheme = classify_scheme(d)
    if method == "pc" and scheme.kind is SchemeKind.SPARSE:
        print("warning: PC-route scores on sparse data use the conditional "
              "predictor; trapezoid integration needs dense designs", file=sys.stderr)
    with _stage(f"eigenmap.eigenvalue_field[{method}]"):
        field = eigenvalues.eigenvalue_field(
            d, mean, basis, L, method, zq, h_lambda, spec,
            clamp=cfg.get_bool("estimator.clamp", True),
            sigma2=fit["sigma2"])
    field.save(out / "field.csv", out / "field_raw.csv")
    print(f"eigenmap: method={method} L={L} points={zq.shape[0]} out={out}")
    return 0


def cmd_cluster(cfg) -> int:
    out = _out_dir(cfg)
    field_path = out / "field.csv"
    if not field_path.exists():
        raise ConfigError(f"eigenvalue field not found in {out}; run 'eigenmap' first")
    field = eigenvalues.EigenvalueField.load(field_path)
    kspec = cfg.get("cluster.k", "3")
    if ".." in kspec:
        lo, hi = kspec.split("..")
        ks = range(int(lo), int(hi) + 1)
    else:
        ks = [int(kspec)]
    restarts = cfg.get_int("cluster.restarts", 20)
    for k in ks:
        with _stage("cluster.kmeans"):
            cl = clustering.kmeans(field.values, k, restarts=restarts, seed=_seed(cfg))
        cl.save(out / f"clusters_k{k}.csv", field.z_points, out / f"clusters_k{k}.json")
        if cfg.get_bool("plot.svg", False) and field.z_points.shape[1] == 2:
            from .svgplot import heatmap_svg
            q = int(round(np.sqrt(field.z_points.shape[0])))
            if q * q == field.z_points.shape[0]:
                heatmap_svg(out / f"map_k{k}.svg", cl.labels.reshape(q, q),
                            categorical=(k <= 3))
        print(f"cluster: k={k} inertia={cl.inertia:.6g} out={out}")
    return 0


def _metric_rows(cfg, out, d, truth):
    """ISE / recall / precision rows for one completed run directory."""
    rows = []
    field = eigenvalues.EigenvalueField.load(out / "field.csv",
                                             cfg.get("estimator.method", "wls"))
    lam_true = simulate.true_lambda(truth, field.z_points)
    L = min(field.values.shape[1], lam_true.shape[1])
    zgrid = field.z_points[:, 0] if field.z_points.shape[1] == 1 else field.z_points
    for k in range(L):
        ise = simulate.ise_curve(field.values[:, k], lam_true[:, k], zgrid)
        rows.append(("ise_lambda", f"lambda_{k + 1}", ise))
    if truth.kind == "sim2":
        basis = eigenbasis.EigenBasis.load(out / "basis.csv", out / "basis.meta")
        cov = smoothing.CovSurface.load(out / "cov.csv", out / "cov.meta")
        t_eval = np.asarray(d.subjects[0].t, dtype=float)
        ups = simulate.true_cov_tensor(truth, t_eval)
        from .eigenbasis import eval_basis
        phi = eval_basis(basis, t_eval, field.values.shape[1])
        gam = np.einsum("zl,sl,tl->zst", field.values, phi, phi)
        gam_star = cov.interp(*np.meshgrid(t_eval, t_eval, indexing="ij")
                              ).reshape(t_eval.size, t_eval.size)
        ise_g = simulate.ise_cov3(gam, ups, t_eval)
        ise_p = simulate.ise_cov3(gam_star, ups, t_eval)
        rows.append(("ise_cov", "gamma_z", ise_g))
        rows.append(("ise_cov", "gamma_pooled", ise_p))
        rows.append(("ise_cov", "ratio", ise_g / ise_p if ise_p > 0 else np.nan))
    kspec = cfg.get("cluster.k")
    if truth.labels is not None and kspec is not None and ".." not in kspec:
        cpath = out / f"clusters_k{int(kspec)}.csv"
        if cpath.exists():
            from .textio import read_csv
            _, crows = read_csv(cpath)
            pred = np.array([int(r[-1]) for r in crows])
            mapping = clustering.match_clusters(pred, truth.labels)
            stats = simulate.recall_precision(pred, truth.labels, mapping)
            for c, vals in stats.items():
                for name in ("recall", "precision"):
                    v = vals[name]
                    rows.append((name, f"S{c}", np.nan if v is None else v))
    return rows


def _run_once(cfg, run_dir, seed):
    sub = PipelineConfig(dict(cfg.values))
    sub.values["out"] = str(run_dir)
    sub.values["seed"] = str(seed)
    cmd_simulate(sub)
    sub.values["dataset.path"] = str(run_dir / "dataset.csv")
    sub.values["dataset.truth"] = str(run_dir / "truth.ndjson")
    sub.values.pop("sim.kind")
    cmd_fit(sub)
    cmd_eigenmap(sub)
    kspec = cfg.get("cluster.k")
    if kspec is not None:
        cmd_cluster(sub)
    d = load_dataset(run_dir / "dataset.csv")
    truth = simulate.SimTruth.load(run_dir / "truth.ndjson")
    return _metric_rows(sub, run_dir, d, truth)


def cmd_evaluate(cfg, runs: int = 1, threads: int = 1) -> int:
    out = _out_dir(cfg)
    if runs <= 1:
        d, truth = _load_or_generate(cfg, out)
        if truth is None:
            raise ConfigError("evaluate needs a truth sidecar (dataset.truth or sim.kind)")
        rows = _metric_rows(cfg, out, d, truth)
        _write_metrics(out, [rows])
        for name, comp, val in rows:
            print(f"evaluate: {name}[{comp}] = {val:.6g}")
        return 0
    base_seed = _seed(cfg)
    run_dirs = [out / f"run{r:03d}" for r in range(runs)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            all_rows = list(ex.map(lambda r: _run_once(cfg, run_dirs[r], base_seed + r),
                                   range(runs)))
    else:
        all_rows = [_run_once(cfg, run_dirs[r], base_seed + r) for r in range(runs)]
    _write_metrics(out, all_rows)
    for (name, comp), (mu, sd) in _aggregate(all_rows).items():
        print(f"evaluate[{runs} runs]: {name}[{comp}] = {mu:.6g} (sd {sd:.6g})")
    return 0


def _aggregate(all_rows):
    agg = {}
    for rows in all_rows:
        for name, comp, val in rows:
            agg.setdefault((name, comp), []).append(val)
    return {key: (float(np.nanmean(vals)), float(np.nanstd(vals, ddof=1)) if len(vals) > 1 else 0.0)
            for key, vals in agg.items()}


def _write_metrics(out, all_rows):
    rows = []
    for r, run_rows in enumerate(all_rows):
        for name, comp, val in run_rows:
            rows.append([str(r), name, comp, fmt_float(val)])
    write_csv(out / "metrics.csv", ["run", "metric", "component", "value"], rows)
    agg = _aggregate(all_rows)
    payload = {f"{name}[{comp}]": {"mean": mu, "sd": sd}
               for (name, comp), (mu, sd) in agg.items()}
    with open_text(out / "metrics.json", "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="eigenfpca",
        description="Covariate-specific eigenvalue FPCA pipeline")
    ap.add_argument("command", choices=["simulate", "fit", "eigenmap",
                                        "cluster", "evaluate"])
    ap.add_argument("--config", help="flat key=value config file")
    ap.add_argument("--seed", type=int, help="override config seed")
    ap.add_argument("--out", help="override output directory")
    ap.add_argument("--runs", type=int, default=1,
                    help="Monte Carlo repetitions (evaluate only)")
    ap.add_argument("--threads", type=int, default=1,
                    help="parallel workers for Monte Carlo runs")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a single config key")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = (PipelineConfig.from_file(args.config) if args.config
               else PipelineConfig())
        cfg.merge_flags(args.set)
        if args.seed is not None:
            cfg.values["seed"] = str(args.seed)
        if args.out is not None:
            cfg.values["out"] = str(args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "eigenmap":
            return cmd_eigenmap(cfg)
        if args.command == "cluster":
            return cmd_cluster(cfg)
        return cmd_evaluate(cfg, runs=args.runs, threads=args.threads)
    except _StageError as e:
        print(f"error {e}", file=sys.stderr)
        return 1
    except (EigenFpcaError, OSError, ValueError, KeyError) as e:
        print(f"error [cli]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
