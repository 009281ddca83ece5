"""Command-line harness: sampling, closed-form statistics, divergences, sweeps and checks.

Every Monte Carlo trial draws from its own stream
``SeedSequence(seed, spawn_key=(cell, arm, trial))``, so results depend on
the seed alone and not on how trials are spread over worker processes.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Sequence

import numpy as np

from . import divergences as dv
from .coupling_lab import conditional_threshold, draw_q0
from .graph_core import Graph, edge_count, signed_triangle_stat
from .latent_models import (
    Ensemble,
    IntersectionMatrix,
    ModelSpec,
    as_ensemble,
    delta_from_p,
    poissonization_tv_bound,
    sample_er,
)
from .moments import detection_threshold, rig_moments, rig_snr
from .sphere_math import threshold_t

SWEEP_COLUMNS = ("n", "d", "p", "tau", "trials", "power", "fpr", "snr", "tv_lower", "se_power", "se_fpr")


class Decision(str, enum.Enum):
    GEOMETRY = "geometry"
    NULL = "null"


def signed_triangle_test(g: Graph, n: int, d: int, p: float) -> Decision:
    """Declare geometry iff ``T_s(g) >= C(n,3)(1-p)^3 d delta^3 / 2``."""
    if g.n != n:
        raise ValueError(f"graph has {g.n} vertices, expected {n}")
    cut = detection_threshold(n, d, p)
    return Decision.GEOMETRY if signed_triangle_stat(g, p) >= cut else Decision.NULL


def trial_rng(seed: int, cell: int, arm: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(cell, arm, trial)))


def make_feature(name: str, p: float | None = None) -> Callable[[Graph], Hashable]:
    """Graph features for plug-in total variation: edge count or the sign of ``T_s``."""
    if name == "edge_count":
        return edge_count
    if name == "signed_triangles":
        if p is None:
            raise ValueError("the signed_triangles feature needs p")
        return lambda g: int(np.sign(signed_triangle_stat(g, p)))
    raise ValueError(f"unknown feature {name!r}; choose edge_count or signed_triangles")


# ---------------------------------------------------------------------------
# sweeps


def log_grid(lo: int, hi: int, num: int) -> tuple[int, ...]:
    """Distinct integers close to ``num`` log-spaced points in ``[lo, hi]``."""
    if not 1 <= lo <= hi or num < 1:
        raise ValueError(f"bad grid ({lo}, {hi}, {num})")
    return tuple(sorted({int(round(x)) for x in np.geomspace(lo, hi, num)}))


@dataclass(frozen=True)
class SweepConfig:
    """Grid of RIG-versus-ER cells, each tested with ``trials`` draws per arm."""

    n_grid: tuple[int, ...]
    p_grid: tuple[float, ...]
    d_grid: tuple[int, ...]
    tau_grid: tuple[int, ...] = (1,)
    trials: int = 200
    seed: int = 0
    out: str | None = None
    workers: int = 1
    alternative: Ensemble = Ensemble.RIG
    null: Ensemble = Ensemble.ER

    def __post_init__(self) -> None:
        for name in ("n_grid", "p_grid", "d_grid", "tau_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, grid)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "alternative", as_ensemble(self.alternative))
        object.__setattr__(self, "null", as_ensemble(self.null))
        if self.alternative not in (Ensemble.RIG, Ensemble.RIG_P):
            raise ValueError("alternative must be RIG or RIG_P")
        if self.null is not Ensemble.ER:
            raise ValueError("null must be ER")

    def cells(self) -> list[tuple[int, float, int, int]]:
        """Cells ``(n, p, tau, d)`` in output order."""
        return list(itertools.product(self.n_grid, self.p_grid, self.tau_grid, self.d_grid))

    def alternative_spec(self, n: int, d: int, p: float, tau: int) -> ModelSpec:
        if self.alternative is Ensemble.RIG_P:
            if tau != 1:
                raise ValueError("RIG_P is defined for tau = 1 only")
            return ModelSpec(Ensemble.RIG_P, n=n, d=d, p=p)
        if tau == 1:
            return ModelSpec(Ensemble.RIG, n=n, d=d, p=p)
        return ModelSpec(Ensemble.RIG_TAU, n=n, d=d, p=p, tau=tau)


@dataclass(frozen=True)
class StatSummary:
    """One sweep cell: detection rates at the event-E cut-off and companions."""

    n: int
    d: int
    p: float
    tau: int
    trials: int
    power: float
    fpr: float
    snr: float
    tv_lower: float
    se_power: float
    se_fpr: float
    error: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in ("power", "fpr"):
            v = getattr(self, name)
            if not (math.isnan(v) or 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("se_power", "se_fpr"):
            v = getattr(self, name)
            if not (math.isnan(v) or v >= 0.0):
                raise ValueError(f"{name} must be >= 0, got {v}")

    def row(self) -> dict[str, object]:
        return {k: getattr(self, k) for k in SWEEP_COLUMNS}


def _binomial_se(rate: float, m: int) -> float:
    return math.sqrt(rate * (1 - rate) / m)


def _run_arm(job: tuple) -> list[tuple[bool, int]]:
    """Decisions and ``T_s`` signs for every trial of one (cell, arm)."""
    seed, cell, arm, trials, n, d, p, spec = job
    out = []
    for trial in range(trials):
        rng = trial_rng(seed, cell, arm, trial)
        g = spec.sample(rng) if arm == 0 else sample_er(n, p, rng)
        ts = signed_triangle_stat(g, p)
        out.append((ts >= detection_threshold(n, d, p), int(np.sign(ts))))
    return out


def run_sweep(cfg: SweepConfig) -> list[StatSummary]:
    """Evaluate every cell; infeasible cells become rows of ``nan`` with an error note."""
    jobs, meta = [], []
    for cell, (n, p, tau, d) in enumerate(cfg.cells()):
        try:
            spec = cfg.alternative_spec(n, d, p, tau)
            spec.resolved_delta()
            detection_threshold(n, d, p)
        except (ValueError, ArithmeticError) as exc:
            meta.append((cell, n, p, tau, d, str(exc)))
            continue
        meta.append((cell, n, p, tau, d, None))
        for arm in (0, 1):
            jobs.append((cfg.seed, cell, arm, cfg.trials, n, d, p, spec))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_arm, jobs))
    else:
        results = [_run_arm(j) for j in jobs]
    by_cell = {}
    for job, res in zip(jobs, results):
        by_cell[(job[1], job[2])] = res

    rows = []
    nan = math.nan
    for cell, n, p, tau, d, err in meta:
        if err is not None:
            print(f"cell n={n} d={d} p={p} tau={tau} skipped: {err}", file=sys.stderr)
            rows.append(StatSummary(n, d, p, tau, cfg.trials, nan, nan, nan, nan, nan, nan, error=err))
            continue
        alt, null = by_cell[(cell, 0)], by_cell[(cell, 1)]
        power = sum(a for a, _ in alt) / cfg.trials
        fpr = sum(a for a, _ in null) / cfg.trials
        snr = nan
        if tau == 1 and cfg.alternative is Ensemble.RIG:
            try:
                snr = rig_snr(n, d, delta_from_p(p, d))
            except ValueError:
                snr = nan
        tv_lower = nan
        if cfg.trials >= 100:
            est, support = dv.empirical_tv([s for _, s in alt], [s for _, s in null])
            radius = dv.l1_deviation_radius(support, cfg.trials, 0.005)
            tv_lower = max(0.0, est - radius)
        rows.append(
            StatSummary(
                n, d, p, tau, cfg.trials, power, fpr, snr, tv_lower,
                _binomial_se(power, cfg.trials), _binomial_se(fpr, cfg.trials),
            )
        )
    return rows


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def format_rows(rows: Sequence[dict[str, object]], fmt: str, columns: Sequence[str] | None = None) -> str:
    """Render rows as CSV (header plus one line per row) or as a JSON list."""
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
        return json.dumps(clean, indent=1) + "\n"
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def check_writable(path: str | os.PathLike) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise OSError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK):
        raise OSError(f"output directory {parent} is not writable")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    check_writable(path)
    parent = Path(path).resolve().parent
    fd, tmp = tempfile.mkstemp(dir=parent, prefix=".tmp-", suffix=Path(path).suffix)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sweep(rows: Sequence[StatSummary], path: str | os.PathLike, fmt: str = "csv") -> None:
    write_atomic(path, format_rows([r.row() for r in rows], fmt, SWEEP_COLUMNS))


# ---------------------------------------------------------------------------
# divergences between two specs


def _is_graph_spec(spec: ModelSpec) -> bool:
    return not spec.is_matrix


def graph_pmf(spec: ModelSpec) -> dv.FinitePmf:
    """Exact labeled-graph law for the ensembles that admit one at small size."""
    m = spec.model
    if m is Ensemble.ER:
        return dv.er_graph_pmf(spec.n, spec.p)
    if m in (Ensemble.RIG, Ensemble.RIG_TAU):
        return dv.rig_graph_pmf(spec.n, spec.d, spec.resolved_delta(), spec.threshold)
    if m is Ensemble.PLANTED_CLIQUE:
        return dv.planted_clique_graph_pmf(spec.n, spec.t, spec.q)
    raise ValueError(f"no exact graph law for {m.value}")


def _feature_pmf(pmf: dv.FinitePmf, n: int, feature: Callable[[Graph], Hashable] | None) -> dv.FinitePmf:
    if feature is None:
        return pmf
    return pmf.pushforward(lambda key: feature(Graph.from_key(n, key)))


def tv_between(
    a: ModelSpec,
    b: ModelSpec,
    mode: str,
    *,
    feature: str | None = None,
    samples: int = 10000,
    seed: int = 0,
    alpha: float = 0.01,
) -> tuple[float, float]:
    """Total variation between two specs as ``(value, radius)``; radius is 0 unless plugin."""
    if a.n != b.n:
        raise ValueError("specs must share n")
    p_ref = _reference_p(a, b)
    feat = make_feature(feature, p_ref) if feature else None
    if mode == "exact":
        return dv.tv_exact(_feature_pmf(graph_pmf(a), a.n, feat), _feature_pmf(graph_pmf(b), b.n, feat)), 0.0
    if mode == "bound":
        return _tv_bound(a, b), 0.0
    if mode == "plugin":
        if not (_is_graph_spec(a) and _is_graph_spec(b)):
            raise ValueError("plugin mode needs graph ensembles")
        feat = feat or edge_count
        est = dv.tv_plugin_lower_bound(a.sample, b.sample, feat, samples, np.random.default_rng(seed), alpha=alpha)
        return est.estimate, est.radius
    raise ValueError(f"unknown mode {mode!r}; choose exact, bound or plugin")


def _reference_p(a: ModelSpec, b: ModelSpec) -> float | None:
    for s in (b, a):
        if _is_graph_spec(s):
            try:
                return s.resolved_p()
            except ValueError:
                continue
    return None


def _tv_bound(a: ModelSpec, b: ModelSpec) -> float:
    pair = {a.model, b.model}
    if pair == {Ensemble.ER}:
        lo, hi = sorted((a.p, b.p))
        if lo == hi:
            return 0.0
        return min(1.0, dv.tv_binom_bound(math.comb(a.n, 2), lo, hi))
    if pair == {Ensemble.RIG, Ensemble.RIG_P}:
        if a.d != b.d or not math.isclose(a.resolved_p(), b.resolved_p(), rel_tol=1e-12):
            raise ValueError("RIG and RIG_P must share d and p")
        return poissonization_tv_bound(a.n, a.d, a.resolved_p())
    if pair in ({Ensemble.PLANTED_CLIQUE, Ensemble.ER}, {Ensemble.POIM_P, Ensemble.POIM}):
        return min(1.0, math.sqrt(_chi2_closed(a, b) / 2))
    raise ValueError(f"no total variation bound for {a.model.value} vs {b.model.value}")


def _chi2_closed(a: ModelSpec, b: ModelSpec) -> float:
    planted, base = (a, b) if a.model in (Ensemble.PLANTED_CLIQUE, Ensemble.POIM_P) else (b, a)
    if planted.model is Ensemble.PLANTED_CLIQUE and base.model is Ensemble.ER:
        p = planted.resolved_p()
        if not math.isclose(base.p, p, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"ER density must equal the planted density {p!r}")
        return dv.chi2_planted_clique(planted.n, planted.t, planted.q)
    if planted.model is Ensemble.POIM_P and base.model is Ensemble.POIM:
        lam = planted.lam + math.comb(planted.t, 2) / math.comb(planted.n, 2)
        if not math.isclose(base.lam, lam, rel_tol=1e-12):
            raise ValueError(f"POIM mean must equal lam + C(t,2)/C(n,2) = {lam!r}")
        return dv.chi2_poim_planted(planted.n, planted.t, planted.lam)
    raise ValueError(f"no closed-form chi-square for {a.model.value} vs {b.model.value}")


def chi2_between(a: ModelSpec, b: ModelSpec, mode: str) -> float:
    if a.n != b.n:
        raise ValueError("specs must share n")
    if mode == "exact":
        return dv.chi2_exact(graph_pmf(a), graph_pmf(b))
    if mode == "closed":
        return _chi2_closed(a, b)
    raise ValueError(f"unknown mode {mode!r}; choose exact or closed")


# ---------------------------------------------------------------------------
# invariant suite


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    ok: bool


def verify_checks(seed: int = 0) -> list[Check]:
    """A quick pass over the exact identities and invariants; each returns a row."""
    from .calibration import PSI_THRESHOLD_C
    from .enumeration import enumerate_rig_moments
    from .latent_models import intersection_graph, intersection_matrix, sample_latent_sets, threshold_matrix
    from .sphere_math import psi_tail

    rng = np.random.default_rng(seed)
    out: list[Check] = []

    def add(name: str, value: float, bound: float, ok: bool) -> None:
        out.append(Check(name, float(value), float(bound), bool(ok)))

    worst = 0.0
    for n, d, delta in ((3, 2, 0.5), (4, 3, 0.25), (5, 3, 0.75)):
        e = enumerate_rig_moments(n, d, delta)
        m = rig_moments(n, d, delta)
        for got, want in ((m.mean_signed, e.mean_signed), (m.var_signed, e.var_signed), (m.mean_plain, e.mean_plain)):
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    add("moments_vs_enumeration", worst, 1e-10, worst <= 1e-10)

    bad = 0
    for _ in range(200):
        k = int(rng.integers(2, 8))
        a = dv.FinitePmf(tuple(range(k)), rng.dirichlet(np.ones(k)))
        b = dv.FinitePmf(tuple(range(k)), rng.dirichlet(np.ones(k)))
        tv, kl, c2 = dv.tv_exact(a, b), dv.kl_exact(a, b), dv.chi2_exact(a, b)
        bad += not (2 * tv * tv <= kl * (1 + 1e-12) + 1e-15 and kl <= c2 * (1 + 1e-12) + 1e-15)
    add("information_chain_violations", bad, 0, bad == 0)

    p = dv.planted_clique_graph_pmf(4, 3, 0.3)
    er = dv.er_graph_pmf(4, ModelSpec(Ensemble.PLANTED_CLIQUE, n=4, t=3, q=0.3).resolved_p())
    err = abs(dv.chi2_planted_clique(4, 3, 0.3) - dv.chi2_exact(p, er))
    add("planted_clique_chi2", err, 1e-10, err <= 1e-10)

    err = abs(dv.chi2_poim_planted(4, 2, 1.0) - dv.chi2_poim_planted_by_summation(4, 2, 1.0))
    add("planted_poisson_chi2", err, 1e-8, err <= 1e-8)

    viol = sum(
        dv.tv_binom_bound(N, pp, qq) < dv.tv_binom_exact(N, pp, qq)
        for N in (10, 100)
        for pp, qq in ((0.1, 0.12), (0.3, 0.35), (0.5, 0.6))
    )
    viol += sum(dv.tv_poisson_bound(l1, l2) < dv.tv_poisson_exact(l1, l2) for l1, l2 in ((1, 0.5), (5, 4), (20, 19)))
    add("tv_bound_violations", viol, 0, viol == 0)

    tv2 = max(
        dv.tv_exact(dv.rig_graph_pmf(2, d, delta_from_p(pp, d)), dv.er_graph_pmf(2, pp))
        for d in (1, 2, 5)
        for pp in (0.1, 0.5)
    )
    add("two_vertex_tv", tv2, 1e-15, tv2 <= 1e-15)

    rt = max(abs(psi_tail(d, threshold_t(pp, d)) - pp) for d in (2, 5, 50, 500) for pp in (1e-3, 0.1, 0.3, 0.7))
    add("threshold_round_trip", rt, 1e-12, rt <= 1e-12)

    ratio = max(threshold_t(pp, d) / math.sqrt(math.log(1 / pp) / d) for d in (20, 200) for pp in (1e-3, 0.1, 0.4))
    add("threshold_upper_constant", ratio, PSI_THRESHOLD_C, ratio <= PSI_THRESHOLD_C)

    worst = 0.0
    t_pd = threshold_t(0.3, 64)
    for _ in range(50):
        _, st = draw_q0(8, 64, 0.3, rng, t_pd)
        st.check()
        conditional_threshold(st, t_pd)
        worst = max(worst, abs(float(np.sum(st.t_values**2)) - 1))
    add("coupling_sum_t_squared", worst, 1e-10, worst <= 1e-10)

    mism = 0
    for _ in range(50):
        s = sample_latent_sets(6, 10, 0.3, rng)
        for tau in (1, 2, 3):
            mism += threshold_matrix(intersection_matrix(s), tau) != intersection_graph(s, tau)
    add("threshold_composition_mismatches", mism, 0, mism == 0)
    return out


# ---------------------------------------------------------------------------
# command line


_SPEC_FIELDS = ("n", "d", "p", "delta", "tau", "t", "q", "lam")


def _spec_from_args(ns: argparse.Namespace) -> ModelSpec:
    if ns.config:
        if ns.model is not None or any(getattr(ns, k) is not None for k in _SPEC_FIELDS):
            raise ValueError("give either --config or model flags, not both")
        return ModelSpec.from_config_file(ns.config)
    if ns.model is None:
        raise ValueError("--model is required (or --config)")
    return ModelSpec.from_mapping({"model": ns.model, **{k: getattr(ns, k) for k in _SPEC_FIELDS}})


def _global_parent() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    g.add_argument("--workers", type=int, default=1, help="worker processes")
    g.add_argument("--out", default=None, help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    return g


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="ER, RIG, RIG_TAU, RIG_P, PLANTED_CLIQUE, RIM, POIM, POIM_P or RGG")
    p.add_argument("--config", help="key=value file describing the model")
    for k in ("n", "d", "tau", "t"):
        p.add_argument(f"--{k}", type=int)
    for k in ("p", "delta", "q"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--lam", "--lambda", dest="lam", type=float)


def build_parser() -> argparse.ArgumentParser:
    parent = _global_parent()
    ap = argparse.ArgumentParser(prog="geomdetect", description="Latent-geometry random graph experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", parents=[parent], help="draw graphs or matrices from one model")
    _model_flags(sp)
    sp.add_argument("--count", type=int, default=1)

    st = sub.add_parser("stats", parents=[parent], help="closed-form triangle moments for RIG")
    st.add_argument("--n", type=int, nargs="+", required=True)
    st.add_argument("--d", type=int, nargs="+", required=True)
    grp = st.add_mutually_exclusive_group(required=True)
    grp.add_argument("--p", type=float, nargs="+")
    grp.add_argument("--delta", type=float, nargs="+")

    tv = sub.add_parser("tv", parents=[parent], help="total variation between two models")
    tv.add_argument("--a", required=True, help="first model as key=value pairs")
    tv.add_argument("--b", required=True, help="second model as key=value pairs")
    tv.add_argument("--mode", choices=("exact", "bound", "plugin"), default="exact")
    tv.add_argument("--feature", choices=("edge_count", "signed_triangles"))
    tv.add_argument("--samples", type=int, default=10000)
    tv.add_argument("--alpha", type=float, default=0.01)

    c2 = sub.add_parser("chi2", parents=[parent], help="chi-square divergence between two models")
    c2.add_argument("--a", required=True)
    c2.add_argument("--b", required=True)
    c2.add_argument("--mode", choices=("exact", "closed"), default="closed")

    sw = sub.add_parser("sweep", parents=[parent], help="signed-triangle detection over a grid")
    sw.add_argument("--n", type=int, nargs="+", required=True)
    sw.add_argument("--p", type=float, nargs="+", required=True)
    dg = sw.add_mutually_exclusive_group(required=True)
    dg.add_argument("--d", type=int, nargs="+")
    dg.add_argument("--d-range", type=int, nargs=3, metavar=("LO", "HI", "NUM"), help="log-spaced d grid")
    sw.add_argument("--tau", type=int, nargs="+", default=[1])
    sw.add_argument("--trials", type=int, default=200)
    sw.add_argument("--alternative", choices=("RIG", "RIG_P"), default="RIG", type=str.upper)

    cp = sub.add_parser("couple", parents=[parent], help="Gram-Schmidt coupling draws of Q_0")
    cp.add_argument("--n", type=int, required=True)
    cp.add_argument("--d", type=int, required=True)
    cp.add_argument("--p", type=float, required=True)
    cp.add_argument("--draws", type=int, default=1000)

    sub.add_parser("verify", parents=[parent], help="run the invariant suite; nonzero exit on failure")
    return ap


def _emit(ns: argparse.Namespace, text: str) -> None:
    if ns.out:
        write_atomic(ns.out, text)
    else:
        sys.stdout.write(text)


def _render_samples(samples: list, fmt: str) -> str:
    if fmt == "json":
        objs = []
        for s in samples:
            if isinstance(s, IntersectionMatrix):
                objs.append({"n": s.n, "upper": [int(v) for v in s.upper()]})
            else:
                objs.append(json.loads(s.to_json()))
        return json.dumps(objs) + "\n"
    parts = []
    for k, s in enumerate(samples):
        body = s.to_csv() if isinstance(s, IntersectionMatrix) else f"# n={s.n}\n" + s.to_edgelist()
        parts.append(f"# sample {k}\n" + body)
    return "".join(parts)


def _cmd_sample(ns: argparse.Namespace) -> int:
    spec = _spec_from_args(ns)
    if ns.count < 1:
        raise ValueError("--count must be >= 1")
    samples = [spec.sample(trial_rng(ns.seed, 0, 0, k)) for k in range(ns.count)]
    _emit(ns, _render_samples(samples, ns.format))
    return 0


def _cmd_stats(ns: argparse.Namespace) -> int:
    rows = []
    for n, d, x in itertools.product(ns.n, ns.d, ns.p if ns.p is not None else ns.delta):
        delta = delta_from_p(x, d) if ns.p is not None else x
        m = rig_moments(n, d, delta)
        snr = m.mean_signed / math.sqrt(m.var_signed) if m.var_signed > 0 else math.nan
        rows.append(
            dict(n=n, d=d, delta=delta, p=m.p, mean_signed=m.mean_signed, var_signed=m.var_signed,
                 mean_plain=m.mean_plain, snr=snr)
        )
    _emit(ns, format_rows(rows, ns.format))
    return 0


def _cmd_tv(ns: argparse.Namespace) -> int:
    a, b = ModelSpec.parse(ns.a), ModelSpec.parse(ns.b)
    value, radius = tv_between(a, b, ns.mode, feature=ns.feature, samples=ns.samples, seed=ns.seed, alpha=ns.alpha)
    row = dict(a=a.describe(), b=b.describe(), mode=ns.mode, feature=ns.feature or "", value=value, radius=radius)
    _emit(ns, format_rows([row], ns.format))
    return 0


def _cmd_chi2(ns: argparse.Namespace) -> int:
    a, b = ModelSpec.parse(ns.a), ModelSpec.parse(ns.b)
    row = dict(a=a.describe(), b=b.describe(), mode=ns.mode, value=chi2_between(a, b, ns.mode), radius=0.0)
    _emit(ns, format_rows([row], ns.format))
    return 0


def _cmd_sweep(ns: argparse.Namespace) -> int:
    d_grid = tuple(ns.d) if ns.d else log_grid(*ns.d_range)
    cfg = SweepConfig(
        n_grid=tuple(ns.n), p_grid=tuple(ns.p), d_grid=d_grid, tau_grid=tuple(ns.tau), trials=ns.trials,
        seed=ns.seed, out=ns.out, workers=ns.workers, alternative=ns.alternative,
    )
    if cfg.out:
        check_writable(cfg.out)
    rows = run_sweep(cfg)
    _emit(ns, format_rows([r.row() for r in rows], ns.format, SWEEP_COLUMNS))
    return 0


def _coupling_row(k: int, seed: int, n: int, d: int, p: float, t_pd: float) -> dict[str, object]:
    q, st = draw_q0(n, d, p, trial_rng(seed, 0, 0, k), t_pd)
    return dict(
        draw_index=k, Q0=q, t_prime=conditional_threshold(st, t_pd), a22=st.a22,
        max_abs_gamma=float(np.max(np.abs(st.gammas[1:]))),
    )


def _cmd_couple(ns: argparse.Namespace) -> int:
    if not ns.d >= ns.n >= 2:
        raise ValueError(f"need d >= n >= 2, got n={ns.n}, d={ns.d}")
    if ns.draws < 1:
        raise ValueError("--draws must be >= 1")
    t_pd = threshold_t(ns.p, ns.d)
    rows = [_coupling_row(k, ns.seed, ns.n, ns.d, ns.p, t_pd) for k in range(ns.draws)]
    cols = ("Q0", "t_prime", "a22", "max_abs_gamma")
    summary = {"draw_index": "mean", **{c: math.fsum(r[c] for r in rows) / len(rows) for c in cols}}
    _emit(ns, format_rows(rows + [summary], ns.format, ("draw_index",) + cols))
    return 0


def _cmd_verify(ns: argparse.Namespace) -> int:
    checks = verify_checks(ns.seed)
    rows = [dict(check=c.name, value=c.value, bound=c.bound, ok=c.ok) for c in checks]
    _emit(ns, format_rows(rows, ns.format))
    return 0 if all(c.ok for c in checks) else 1


_COMMANDS = {
    "sample": _cmd_sample,
    "stats": _cmd_stats,
    "tv": _cmd_tv,
    "chi2": _cmd_chi2,
    "sweep": _cmd_sweep,
    "couple": _cmd_couple,
    "verify": _cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if ns.workers < 1:
        ap.error("--workers must be >= 1")
    try:
        return _COMMANDS[ns.command](ns)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"geomdetect {ns.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
