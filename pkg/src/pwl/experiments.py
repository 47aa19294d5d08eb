"""Named experiments: run an estimator suite, judge it, write CSV + JSON.

Every experiment takes an :class:`ExperimentConfig`. The meaning of
``k_range`` depends on the experiment (box heights, excursion indices, box
sizes, times or walk lengths); :data:`K_RANGE_MEANING` spells it out and is
echoed into every report.

Random streams: experiment inputs are drawn from Philox streams keyed by
``(config.seed, stream)`` with ``stream = (purpose << 40) + run``, so runs
never share numbers and results do not depend on the thread count.
"""

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import coupling, effective, limit, prudent
from .io import json_text, parallel_map, write_csv, write_json, write_ndjson
from .lattice import LatticeKind, embed_array
from .stats import (
    binomial_estimate,
    energy_distance_2d,
    energy_permutation_null,
    fit_tail_exponent,
    ks_distance,
    nonincreasing,
    tv_distance,
)

SEVEN_THIRDS = 7.0 / 3.0
_PURPOSE = 1 << 40
_BATCH = 2000


class UnknownExperiment(KeyError):
    pass


class ConfigInvalid(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentConfig:
    lattice: str = "tri"
    n_steps: int = 1000
    n_samples: int = 1000
    seed: int = 1
    k_range: list = field(default_factory=lambda: [1, 2, 3])
    delta: float = 0.1
    epsilon: float = 0.1
    grid_step: float = 1e-4
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, data: dict, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid(["config must be a JSON object"])
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        problems = [f"{k}: unknown field" for k in unknown]
        merged = asdict(base) if base is not None else asdict(cls())
        merged.update({k: v for k, v in data.items() if k in names})
        cfg = cls(**merged)
        problems += cfg.problems()
        if problems:
            raise ConfigInvalid(problems)
        cfg.lattice = LatticeKind.parse(cfg.lattice).value
        cfg.k_range = [int(k) for k in cfg.k_range]
        cfg.delta = float(cfg.delta)
        cfg.epsilon = float(cfg.epsilon)
        cfg.grid_step = float(cfg.grid_step)
        return cfg

    def problems(self) -> list[str]:
        out = []
        try:
            LatticeKind.parse(self.lattice)
        except ValueError:
            out.append(f"lattice: expected 'square' or 'tri', got {self.lattice!r}")
        for name in ("n_steps", "n_samples"):
            v = getattr(self, name)
            if not _is_int(v) or v < 1:
                out.append(f"{name}: must be a positive integer, got {v!r}")
        if not _is_int(self.seed) or not 0 <= self.seed < 2**64:
            out.append(f"seed: must be an integer in [0, 2**64), got {self.seed!r}")
        if not isinstance(self.k_range, (list, tuple)) or not self.k_range:
            out.append("k_range: must be a nonempty list of positive integers")
        elif not all(_is_int(k) and k >= 0 for k in self.k_range):
            out.append(f"k_range: entries must be nonnegative integers, got {self.k_range!r}")
        for name in ("delta", "epsilon", "grid_step"):
            v = getattr(self, name)
            if not _is_real(v) or not v > 0:
                out.append(f"{name}: must be a positive number, got {v!r}")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            out.append("output_dir: must be a nonempty path string")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"


@dataclass
class ExperimentResult:
    name: str
    config: ExperimentConfig
    columns: list
    rows: list
    estimates: dict
    checks: list
    streams: str
    extra_csv: dict = field(default_factory=dict)  # file stem -> (columns, rows)
    extra_ndjson: dict = field(default_factory=dict)  # file stem -> records
    files: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "warning" if any(c.status == "warning" for c in self.checks) else "pass"

    def report(self) -> dict:
        return {
            "experiment": self.name,
            "status": self.status,
            "passed": self.passed,
            "config": self.config.to_dict(),
            "k_range_meaning": K_RANGE_MEANING[self.name],
            "seeds": {"seed": self.config.seed, "streams": self.streams},
            "estimates": self.estimates,
            "checks": [{"name": c.name, "status": c.status, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "files": [f"{self.name}.csv"]
            + [f"{self.name}_{k}.csv" for k in self.extra_csv]
            + [f"{self.name}_{k}.ndjson" for k in self.extra_ndjson],
        }


def write_report(result: ExperimentResult, out_dir=None) -> list[Path]:
    out = Path(out_dir if out_dir is not None else result.config.output_dir)
    paths = [write_csv(out / f"{result.name}.csv", result.columns, result.rows)]
    for stem, (cols, rows) in result.extra_csv.items():
        paths.append(write_csv(out / f"{result.name}_{stem}.csv", cols, rows))
    for stem, recs in result.extra_ndjson.items():
        paths.append(write_ndjson(out / f"{result.name}_{stem}.ndjson", recs))
    paths.append(write_json(out / f"{result.name}.json", result.report()))
    result.files = paths
    return paths


def _stream(purpose: int, run: int) -> int:
    return purpose * _PURPOSE + run


def _kind(cfg) -> LatticeKind:
    return LatticeKind.parse(cfg.lattice)


def _median(x) -> float:
    return float(np.median(np.asarray(x, dtype=np.float64))) if len(x) else float("nan")


# ---------------------------------------------------------------------------
# lemma1


def _lemma1(cfg: ExperimentConfig) -> ExperimentResult:
    rep = effective.lemma1_check(cfg.lattice, cfg.k_range, cfg.n_samples, cfg.seed, n_steps=cfg.n_steps)
    rows = []
    for h in rep.heights:
        c = rep.counts[h]
        n = int(c[1:].sum())
        dist = effective.exit_time_dp(h, c.size - 1)
        probs = np.append(dist.p[: c.size - 2], dist.p[c.size - 2 :].sum() + dist.tail)
        for m in range(c.size):
            expected = 0.0 if m == 0 else n * probs[m - 1]
            rows.append({"lattice": rep.kind, "h": h, "m": m, "tail": m == c.size - 1, "observed": int(c[m]), "expected": expected})
    est = {
        "chi_square": rep.statistic,
        "dof": rep.dof,
        "p_value": rep.p_value,
        "n_events": rep.n_events,
        "n_walks": rep.n_walks,
        "n_trapped": rep.n_trapped,
        "zero_displacements": {str(h): int(rep.counts[h][0]) for h in rep.heights},
        "per_height": {str(h): {"chi_square": v[0], "dof": v[1], "n": v[2]} for h, v in rep.per_height.items()},
    }
    checks = [Check("pooled chi-square p > 0.01", rep.p_value > 0.01, f"p = {rep.p_value:.4g} (stat {rep.statistic:.4g}, dof {rep.dof})")]
    return ExperimentResult(
        "lemma1", cfg, ["lattice", "h", "m", "tail", "observed", "expected"], rows, est, checks,
        "walk i uses stream i",
    )


# ---------------------------------------------------------------------------
# proposition-ak and lemma2 share the batch observation kernel


def observe(kind, N: int, K: int, cap: int, seed: int, stream0: int = 0) -> prudent.Observations:
    """:func:`prudent.observe_walks` in batches, spread over worker threads."""
    starts = list(range(0, N, _BATCH))

    def one(s):
        return prudent.observe_walks(kind, min(_BATCH, N - s), K, cap, seed, stream0 + s)

    parts = parallel_map(one, starts)
    return prudent.Observations(*(np.concatenate([getattr(p, f) for p in parts]) for f in prudent.Observations._fields))


def _shared_obs(cfg, K, obs):
    """Reuse ``obs`` when it was produced by this config with at least ``K`` excursions."""
    if obs is None:
        return observe(cfg.lattice, cfg.n_samples, K, cfg.n_steps, cfg.seed)
    if obs.T.shape[0] != cfg.n_samples or obs.T.shape[1] <= K:
        raise ValueError("observations do not match the config")
    return obs


def _proposition_ak(cfg: ExperimentConfig, obs=None) -> ExperimentResult:
    ks = sorted(cfg.k_range)
    obs = _shared_obs(cfg, max(ks), obs)
    ok = ~obs.trapped
    rows = []
    ests = []
    for k in ks:
        reached = ok & (obs.U[:, k] >= 0)
        n = int(reached.sum())
        hits = int((obs.A[reached, k] == 1).sum())
        e = binomial_estimate(hits, max(n, 1), cfg.seed, k=k)
        ests.append(e)
        rows.append({"k": k, "n_reached": n, "n_censored": int((ok & (obs.U[:, k] < 0)).sum()), "n_events": hits, "p": e.value, "stderr": e.stderr})
    p = [e.value for e in ests]
    try:
        fit = fit_tail_exponent(ks, ests)
        slope, fit_info = fit.slope, {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared, "n_dropped": fit.n_dropped}
    except ValueError as exc:
        slope, fit_info = float("nan"), {"error": str(exc)}
    est = {
        "tail_fit": fit_info,
        "reference_exponent": -1.5,
        "n_runs": cfg.n_samples,
        "n_trapped": int(obs.trapped.sum()),
        "step_cap": cfg.n_steps,
        "mean_steps": float(obs.steps.mean()),
    }
    checks = [
        Check("P(A_k) nonincreasing in k", nonincreasing(p), "p = " + ", ".join(f"{x:.4g}" for x in p)),
        Check("log-log slope <= -1.0", bool(slope <= -1.0), f"slope = {slope:.4g}"),
    ]
    return ExperimentResult(
        "proposition-ak", cfg, ["k", "n_reached", "n_censored", "n_events", "p", "stderr"], rows, est, checks,
        "walk i uses stream i; walks not reaching U_k within the step cap are censored at k",
    )


def _lemma2(cfg: ExperimentConfig, obs=None) -> ExperimentResult:
    ks = sorted(cfg.k_range)
    K = max(ks)
    obs = _shared_obs(cfg, K, obs)
    ok = ~obs.trapped
    idx = np.arange(1, K + 1)
    reached_all = ok & (obs.T[:, K] >= 0)
    W = obs.W_at_T[reached_all, : K + 1].astype(np.float64)
    H = obs.H_at_T[reached_all, : K + 1].astype(np.float64)
    mean_slope = limit.ols_slope(idx, W[:, 1:].mean(axis=0))
    c = 0.5 * mean_slope
    run_slopes = [limit.ols_slope(idx, w[1:]) for w in W]
    c_alt = 0.5 * _median(run_slopes)
    rows = []
    p = []
    p_alt = []
    for k in ks:
        e = binomial_estimate(int((W[:, k] < c * k).sum()), max(W.shape[0], 1))
        eh = binomial_estimate(int((H[:, k] < c * k).sum()), max(W.shape[0], 1))
        p.append(e.value)
        p_alt.append(float(np.mean(W[:, k] < c_alt * k)))
        rows.append({
            "k": k, "c": c, "threshold": c * k, "p_width": e.value, "stderr_width": e.stderr,
            "p_height": eh.value, "stderr_height": eh.stderr,
            "mean_width": float(W[:, k].mean()), "median_width": _median(W[:, k]),
            "mean_height": float(H[:, k].mean()), "median_height": _median(H[:, k]),
        })
    ratio = p[0] / p[-1] if p[-1] > 0 else float("inf")
    ratio_alt = p_alt[0] / p_alt[-1] if p_alt[-1] > 0 else float("inf")
    est = {
        "mean_slope": mean_slope,
        "c": c,
        "ratio_first_to_last": ratio,
        "n_used": int(W.shape[0]),
        "n_trapped": int(obs.trapped.sum()),
        "n_censored": int((ok & (obs.T[:, K] < 0)).sum()),
        "diagnostic_median_run_slope": {"c": c_alt, "p": p_alt, "ratio_first_to_last": ratio_alt},
    }
    checks = [Check(
        f"P(W_T_k < c k) drops by >= 5x from k={ks[0]} to k={ks[-1]}", bool(ratio >= 5.0),
        f"c = {c:.4g} (half the slope of mean W_T_k over k=1..{K}); ratio = {ratio:.4g}",
    )]
    return ExperimentResult(
        "lemma2", cfg,
        ["k", "c", "threshold", "p_width", "stderr_width", "p_height", "stderr_height", "mean_width", "median_width", "mean_height", "median_height"],
        rows, est, checks, "walk i uses stream i",
    )


# ---------------------------------------------------------------------------
# lemma1.5


def _exit_law_tv(eta, L, n_max):
    dist = effective.exit_time_dp(L, n_max)
    counts = np.bincount(np.minimum(eta, n_max + 1), minlength=n_max + 2)[1:]
    emp = counts / eta.size
    exact = np.append(dist.p, dist.tail)
    return tv_distance(emp, exact)


def _lemma15(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    mins = {}
    tvs = {}
    n_max = min(cfg.n_steps, 10**4)
    for j, L in enumerate(cfg.k_range):
        if not 1 <= L <= 64:
            raise ConfigInvalid([f"k_range: box sizes must lie in 1..64, got {L}"])
        eta, _, _ = effective.exit_times(L, cfg.n_samples, cfg.seed, _stream(j, 0))
        top = int(math.floor(L**1.5))
        dist = effective.exit_time_dp(L, max(top, n_max))
        for n in range(1, top + 1):
            p = float(np.mean(eta >= n))
            rows.append({"L": L, "n": n, "p_empirical": p, "stderr": math.sqrt(p * (1 - p) / eta.size), "p_exact": dist.survival(n)})
        mins[L] = min(float(np.mean(eta >= top)), 1.0)
        tvs[L] = _exit_law_tv(eta, L, n_max)
    est = {
        "min_empirical": {str(L): v for L, v in mins.items()},
        "min_exact": {str(L): effective.exit_time_dp(L, int(L**1.5)).survival(int(L**1.5)) for L in cfg.k_range},
        "tv_to_exact": {str(L): v for L, v in tvs.items()},
    }
    checks = [
        Check("P(eta_L >= n) > 0.05 for all n <= L^1.5", all(v > 0.05 for v in mins.values()),
              ", ".join(f"L={L}: min {v:.4g}" for L, v in mins.items())),
        Check("exit law within TV 0.01 of the exact law", all(v <= 0.01 for v in tvs.values()),
              ", ".join(f"L={L}: TV {v:.4g}" for L, v in tvs.items())),
    ]
    return ExperimentResult(
        "lemma1.5", cfg, ["L", "n", "p_empirical", "stderr", "p_exact"], rows, est, checks,
        "box size k_range[j] uses stream j << 40",
    )


# ---------------------------------------------------------------------------
# coupling


def identity_check(n: int, seed: int, stream: int) -> tuple[bool, coupling.CoupledWalk]:
    """Check the bookkeeping identity and the unit crossings on one trajectory."""
    cw = coupling.coupled_walk(n, seed, stream)
    S, Sh = cw.S, cw.S_hat
    taus, deltas = cw.ledger.taus, cw.ledger.deltas
    # running correction looked up by stopping-time index, not accumulated
    acc = np.concatenate([[0], np.cumsum(deltas)])
    j = np.searchsorted(taus[1:], np.arange(S.size), side="right")
    ok = bool(np.array_equal(Sh - S, acc[j]))
    steps = np.diff(Sh[taus])
    want = np.where(np.arange(steps.size) % 2 == 0, -1, 1)
    ok = ok and bool(np.all(steps == want)) and bool(np.all(np.diff(taus) > 0))
    return ok, cw


def _coupling(cfg: ExperimentConfig) -> ExperimentResult:
    kind = _kind(cfg)
    spans = []
    paths = []
    i = 0
    total = 0
    while total < cfg.n_samples:
        path = prudent.simulate(kind, cfg.n_steps, cfg.seed, _stream(0, i))
        i += 1
        if path.trapped:
            continue
        recs = [r for r in prudent.decompose_excursions(path) if r.complete]
        paths.append((path, recs))
        for r in recs:
            spans.extend((r.vertical_span, r.horizontal_span))
        total += 2 * len(recs)
    spans = np.asarray(spans)
    big = int(spans.max()) + 1 if spans.size else 1
    altered = 0
    for path, recs in paths:
        altered += coupling.coupling_equality_check(path, big, recs).n_altered
    rows = []
    fr = []
    for cap in sorted(cfg.k_range):
        n_alt = int((spans > cap).sum())
        fr.append(n_alt / spans.size)
        rows.append({"cap": cap, "n_excursions": int(spans.size), "n_altered": n_alt, "fraction_altered": n_alt / spans.size})
    rows.append({"cap": big, "n_excursions": int(spans.size), "n_altered": altered, "fraction_altered": altered / spans.size})

    n_traj = 1000
    traj_len = 10**4
    bad = 0
    ledger0 = None
    for j in range(n_traj):
        ok, cw = identity_check(traj_len, cfg.seed, _stream(1, j))
        bad += not ok
        if j == 0:
            ledger0 = [{"j": k, "tau": int(cw.ledger.taus[k]), "delta": int(cw.ledger.deltas[k - 1])} for k in range(1, cw.ledger.taus.size)]
    est = {
        "n_walks": len(paths),
        "n_excursions": int(spans.size),
        "max_span": int(spans.max()) if spans.size else 0,
        "altered_with_cap_above_max_span": altered,
        "identity_trajectories": n_traj,
        "identity_length": traj_len,
        "identity_failures": bad,
    }
    checks = [
        Check("caps above every span alter 0 excursions", altered == 0, f"{altered} of {spans.size} altered at cap {big}"),
        Check("bookkeeping identity and unit crossings hold exactly", bad == 0, f"{bad} of {n_traj} trajectories violate it"),
        Check("altered fraction nonincreasing in cap", nonincreasing(fr, strict_overall=False), ", ".join(f"{x:.4g}" for x in fr)),
    ]
    return ExperimentResult(
        "coupling", cfg, ["cap", "n_excursions", "n_altered", "fraction_altered"], rows, est, checks,
        "prudent walk i uses stream i; effective trajectory j uses stream (1 << 40) + j",
        extra_ndjson={"ledger": ledger0},
    )


# ---------------------------------------------------------------------------
# theorem-q1


def _q1_runs(kind, t, N, seed, purpose, max_tries):
    """First ``N`` walks of length ``t`` ending in the closed first quadrant."""
    out = []
    tried = 0
    while len(out) < N and tried < max_tries:
        s = _stream(purpose, tried)
        a, b, tr = prudent.walk_arrays(kind, t, seed, s)
        tried += 1
        if tr:
            continue
        p = embed_array(kind, a[-1:], b[-1:])[0]
        if p[0] >= 0 and p[1] >= 0:
            out.append((s, a, b))
    return out, tried


def _theorem_q1(cfg: ExperimentConfig) -> ExperimentResult:
    kind = _kind(cfg)
    times = sorted(cfg.k_range)
    rows = []
    med = {}
    q1 = {}
    for j, t in enumerate(times):
        if t < 1:
            raise ConfigInvalid(["k_range: times must be >= 1"])
        runs, tried = _q1_runs(kind, t, cfg.n_samples, cfg.seed, j, 50 * cfg.n_samples)
        vals = []
        for r, (s, a, b) in enumerate(runs):
            v = float(coupling.sup_distance_curve(kind, a, b, [t])[0])
            vals.append(v)
            rows.append({"t": t, "run": r, "stream": s, "sup_distance": v})
        med[t] = _median(vals)
        q1[t] = {"accepted": len(runs), "tried": tried, "p_q1": len(runs) / tried if tried else float("nan")}
    ratio = med[times[-1]] / med[times[0]] if med[times[0]] > 0 else float("nan")
    est = {"median_sup_distance": {str(t): v for t, v in med.items()}, "ratio_last_to_first": ratio, "conditioning": {str(t): v for t, v in q1.items()}}
    enough = all(v["accepted"] == cfg.n_samples for v in q1.values())
    checks = [Check(
        f"median at t={times[-1]} < 0.5 x median at t={times[0]}", bool(enough and ratio < 0.5),
        f"ratio = {ratio:.4g}" + ("" if enough else "; not enough Q_1 runs"),
    )]
    return ExperimentResult(
        "theorem-q1", cfg, ["t", "run", "stream", "sup_distance"], rows, est, checks,
        "candidate walk i at time k_range[j] uses stream (j << 40) + i; the first n_samples ending in Q_1 are kept",
    )


# ---------------------------------------------------------------------------
# theorem2

ALPHA_RUNS = 200


def _theorem2(cfg: ExperimentConfig) -> ExperimentResult:
    kind = _kind(cfg)
    t = cfg.n_steps
    # same runs as lemma7-alpha on this lattice, so both report one estimate
    alpha = limit.estimate_alpha(kind, t, ALPHA_RUNS, cfg.seed)
    ci_width = alpha.ci_high - alpha.ci_low
    ends = []
    for i in range(cfg.n_samples):
        a, b, tr = prudent.walk_arrays(kind, t, cfg.seed, _stream(2, i))
        if tr:
            continue
        ends.append(embed_array(kind, a[-1:], b[-1:])[0] / t)
    ends = np.asarray(ends)
    u = 1.0
    zs = limit.z_samples(cfg.n_samples, u, alpha.value, cfg.grid_step, cfg.seed, stream0=_stream(3, 0))
    zp = np.array([z.planar() for z in zs])
    stat = energy_distance_2d(ends, zp, seed=cfg.seed)
    null = energy_permutation_null(ends, zp, 200, cfg.seed)
    q95 = float(np.quantile(null, 0.95))
    ok = stat < q95
    status = "pass" if ok else ("warning" if ci_width > 0.2 else "fail")
    detail = f"energy {stat:.4g} vs null 95% {q95:.4g}; alpha CI width {ci_width:.4g}"
    if not ok and status == "warning":
        detail += " (> 0.2, failure downgraded)"
    rows = [{"u": z.u, "alpha": z.alpha, "z1": z.value[0], "z2": z.value[1], "z3": z.value[2], "x": p[0], "y": p[1]} for z, p in zip(zs, zp)]
    est = {
        "alpha": {"value": alpha.value, "stderr": alpha.stderr, "ci_low": alpha.ci_low, "ci_high": alpha.ci_high, "ci_width": ci_width, "n_runs": alpha.n_runs},
        "u": u,
        "energy_distance": stat,
        "null_q95": q95,
        "null_mean": float(null.mean()),
        "endpoint_mean": [float(x) for x in ends.mean(axis=0)],
        "z_planar_mean": [float(x) for x in zp.mean(axis=0)],
        "depends_on": "the triangular alpha estimate; a failure becomes a warning when its CI is wider than 0.2",
    }
    checks = [Check("endpoints vs Z: energy distance below null 95th percentile", ok, detail, status)]
    return ExperimentResult(
        "theorem2", cfg, ["u", "alpha", "z1", "z2", "z3", "x", "y"], rows, est, checks,
        "alpha run i: stream i (as in lemma7-alpha); endpoint walk i: (2 << 40) + i; Brownian path i: (3 << 40) + i",
        extra_csv={"endpoints": (["x", "y"], [{"x": p[0], "y": p[1]} for p in ends])},
    )


# ---------------------------------------------------------------------------
# lemma3, lemma4, lemma5-occupation


def _trend(name, cfg, stat_fn, exceeds, label, n_runs=None, extra=None):
    n_runs = cfg.n_samples if n_runs is None else n_runs
    rows = []
    probs = []
    meds = []
    for j, n in enumerate(cfg.k_range):
        if n < 1:
            raise ConfigInvalid(["k_range: walk lengths must be >= 1"])
        vals = [stat_fn(n, _stream(j, i)) for i in range(n_runs)]
        for i, v in enumerate(vals):
            rows.append({"n": n, "run": i, "statistic": v, "exceeds": bool(exceeds(n, v))})
        probs.append(float(np.mean([exceeds(n, v) for v in vals])))
        meds.append(_median(vals))
    est = {
        "exceedance": {str(n): p for n, p in zip(cfg.k_range, probs)},
        "median": {str(n): m for n, m in zip(cfg.k_range, meds)},
        "threshold": label,
        "runs_per_n": n_runs,
    }
    check = Check(f"{name}: exceedance probability decreases over n", nonincreasing(probs), ", ".join(f"{p:.4g}" for p in probs))
    return rows, est, check


def _lemma3(cfg):
    d = cfg.delta
    rows, est, chk = _trend(
        "lemma3", cfg, lambda n, s: limit.lemma3_statistic(n, cfg.seed, s),
        lambda n, v: v >= n ** (1 / 3 + d), f"n^(1/3 + {d})",
    )
    return ExperimentResult("lemma3", cfg, ["n", "run", "statistic", "exceeds"], rows, est, [chk], "length k_range[j], run i: (j << 40) + i")


def _lemma4(cfg):
    d, eps = cfg.delta, cfg.epsilon

    def both(n, s):
        cw = coupling.coupled_walk(n, cfg.seed, s)
        return (limit.lemma4_statistic(n, d, coupled=cw), limit.lemma4_statistic(n, d, coupled=cw, side="lower"))

    cache = {}

    def upper(n, s):
        cache[(n, s)] = both(n, s)
        return cache[(n, s)][0]

    rows, est, chk = _trend("lemma4", cfg, upper, lambda n, v: v > eps, f"{eps} (indicator cut at n^(1/3) + {d})")
    lower = {}
    for n in cfg.k_range:
        vals = [v[1] for (m, _), v in cache.items() if m == n]
        lower[str(n)] = float(np.mean(np.asarray(vals) > eps))
    for r in rows:
        r["statistic_lower"] = cache[(r["n"], _stream(cfg.k_range.index(r["n"]), r["run"]))][1]
    est["exceedance_lower_side"] = lower
    chk2 = Check("lemma4 lower side: exceedance decreases over n", nonincreasing(list(lower.values())), ", ".join(f"{v:.4g}" for v in lower.values()))
    return ExperimentResult("lemma4", cfg, ["n", "run", "statistic", "exceeds", "statistic_lower"], rows, est, [chk, chk2], "length k_range[j], run i: (j << 40) + i")


def _lemma5(cfg):
    d = cfg.delta
    n_trend = max(cfg.n_samples // 4, 1)
    rows, est, chk = _trend(
        "lemma5", cfg, lambda n, s: limit.lemma5_statistic(n, cfg.seed, s),
        lambda n, v: v > n ** (1 / 3 + d), f"n^(1/3 + {d}); same-uniform pairing, sigma = 2", n_runs=n_trend,
    )
    n = cfg.n_steps
    fr = [limit.occupation_fraction(coupling.coupled_walk(n, cfg.seed, _stream(7, i)).S_hat, n) for i in range(cfg.n_samples)]
    ks = ks_distance(fr, limit.arcsine_cdf)
    est["occupation"] = {"n": n, "samples": cfg.n_samples, "ks": ks, "ks_p_value": float(sps.kstwo.sf(ks, cfg.n_samples))}
    checks = [chk, Check(f"occupation fraction of S_hat at n={n} vs arcsine: KS < 0.05", ks < 0.05, f"KS = {ks:.4g}")]
    return ExperimentResult(
        "lemma5-occupation", cfg, ["n", "run", "statistic", "exceeds"], rows, est, checks,
        "length k_range[j], run i: (j << 40) + i; occupation run i: (7 << 40) + i",
        extra_csv={"occupation": (["run", "fraction"], [{"run": i, "fraction": f} for i, f in enumerate(fr)])},
    )


# ---------------------------------------------------------------------------
# lemma6


def corner_gap(kind, a, b, n: int) -> float:
    """``sup_{m <= n} |corner_{t(m)} - Gamma_m|_2 / n`` for one path.

    ``Gamma_m`` adds, over the first ``m`` growth events, the embedded
    displacement of the upper-right box corner, i.e. the sign-selected step
    vectors ``e1`` (width grows), ``e2`` (height grows) or ``e1 + e2``
    (both) of a walk settled in the first quadrant.
    """
    t = limit.growth_times(a, b)[:n]
    if t.size == 0:
        return 0.0
    trace = coupling.corner_trace_arrays(kind, a, b)
    a_hi = np.maximum.accumulate(a)
    b_hi = np.maximum.accumulate(b)
    da = np.diff(np.concatenate([[0], a_hi[t]]))
    db = np.diff(np.concatenate([[0], b_hi[t]]))
    g = np.cumsum(embed_array(kind, da, db), axis=0)
    c = embed_array(kind, trace.a[t], trace.b[t])
    return float(np.max(np.hypot(*(c - g).T)) / n)


def _lemma6(cfg):
    kind = _kind(cfg)
    rows = []
    meds = []
    exc = []
    for j, n in enumerate(cfg.k_range):
        runs, tried = _q1_runs(kind, 3 * n, cfg.n_samples, cfg.seed, j, 50 * cfg.n_samples)
        vals = [corner_gap(kind, a, b, n) for _, a, b in runs]
        for r, ((s, _, _), v) in enumerate(zip(runs, vals)):
            rows.append({"n": n, "run": r, "stream": s, "statistic": v})
        meds.append(_median(vals))
        exc.append(float(np.mean(np.asarray(vals) > cfg.epsilon)) if vals else float("nan"))
    est = {"median": {str(n): m for n, m in zip(cfg.k_range, meds)}, "exceedance": {str(n): p for n, p in zip(cfg.k_range, exc)}, "epsilon": cfg.epsilon}
    checks = [Check("median corner gap decreases over n", nonincreasing(meds), ", ".join(f"{m:.4g}" for m in meds))]
    return ExperimentResult("lemma6", cfg, ["n", "run", "stream", "statistic"], rows, est, checks, "candidate walk i for k_range[j]: (j << 40) + i; walks of 3n steps ending in Q_1")


# ---------------------------------------------------------------------------
# lemma7-alpha


def _lemma7(cfg):
    kind = _kind(cfg)
    est_a = limit.estimate_alpha(kind, cfg.n_steps, cfg.n_samples, cfg.seed)
    half = (est_a.ci_high - est_a.ci_low) / 2
    rows = [{"run": i, "slope": float(s)} for i, s in enumerate(est_a.slopes)]
    a0, b0, _ = prudent.walk_arrays(kind, cfg.n_steps, cfg.seed, 0)
    t0 = limit.growth_times(a0, b0)
    ref = SEVEN_THIRDS if kind is LatticeKind.SQUARE else est_a.value
    # sup_m |t(m) - alpha m| > eps n over the runs, with n = number of growth events
    exceed = []
    for i in range(min(cfg.n_samples, 50)):
        a, b, tr = prudent.walk_arrays(kind, cfg.n_steps, cfg.seed, i)
        if tr:
            continue
        t = limit.growth_times(a, b)
        m = np.arange(1, t.size + 1)
        exceed.append(bool(np.max(np.abs(t - ref * m)) > cfg.epsilon * t.size))
    est = {
        "alpha": est_a.value,
        "stderr": est_a.stderr,
        "ci_low": est_a.ci_low,
        "ci_high": est_a.ci_high,
        "ci_half_width": half,
        "n_runs": est_a.n_runs,
        "n_trapped": est_a.n_trapped,
        "reference": SEVEN_THIRDS if kind is LatticeKind.SQUARE else None,
        "time_change_exceedance": {"alpha_used": ref, "epsilon": cfg.epsilon, "runs": len(exceed), "p": float(np.mean(exceed)) if exceed else float("nan")},
    }
    if kind is LatticeKind.SQUARE:
        ok = est_a.ci_low <= SEVEN_THIRDS <= est_a.ci_high and half <= 0.12
        checks = [Check("95% CI contains 7/3 with half-width <= 0.12", ok, f"alpha = {est_a.value:.6g}, CI [{est_a.ci_low:.6g}, {est_a.ci_high:.6g}]")]
    else:
        checks = [Check("alpha reported with CI", math.isfinite(est_a.value), f"alpha = {est_a.value:.6g}, CI [{est_a.ci_low:.6g}, {est_a.ci_high:.6g}]")]
    return ExperimentResult(
        "lemma7-alpha", cfg, ["run", "slope"], rows, est, checks, "walk i uses stream i",
        extra_csv={"time_change": (["m", "t"], [(int(m), int(t)) for m, t in zip(range(1, t0.size + 1), t0)])},
    )


# ---------------------------------------------------------------------------
# registry

K_RANGE_MEANING = {
    "lemma1": "box heights h conditioned on",
    "proposition-ak": "excursion indices k",
    "lemma1.5": "box sizes L",
    "lemma2": "excursion indices k (first and last are compared)",
    "coupling": "truncation caps for the altered-fraction curve",
    "theorem-q1": "times t (runs of exactly t steps)",
    "theorem2": "unused",
    "lemma3": "effective-walk lengths n",
    "lemma4": "effective-walk lengths n",
    "lemma5-occupation": "effective-walk lengths n for the Brownian comparison",
    "lemma6": "numbers n of growth events",
    "lemma7-alpha": "unused",
}

DEFAULTS = {
    "lemma1": dict(lattice="square", n_steps=1000, n_samples=100_000, k_range=[1, 2, 3, 4, 5]),
    "proposition-ak": dict(lattice="tri", n_steps=2**20, n_samples=100_000, k_range=[4, 8, 16, 32, 64]),
    "lemma1.5": dict(lattice="tri", n_steps=10_000, n_samples=100_000, k_range=[10, 20]),
    "lemma2": dict(lattice="tri", n_steps=2**20, n_samples=100_000, k_range=[8, 16, 32]),
    "coupling": dict(lattice="tri", n_steps=1000, n_samples=100_000, k_range=[0, 1, 2, 4, 8, 16, 32, 64]),
    "theorem-q1": dict(lattice="tri", n_steps=100_000, n_samples=200, k_range=[10_000, 100_000]),
    "theorem2": dict(lattice="tri", n_steps=100_000, n_samples=500, k_range=[1], grid_step=1e-4),
    "lemma3": dict(n_steps=100_000, n_samples=500, k_range=[1000, 10_000, 100_000]),
    "lemma4": dict(n_steps=100_000, n_samples=500, k_range=[1000, 10_000, 100_000]),
    "lemma5-occupation": dict(n_steps=10_000, n_samples=2000, k_range=[1000, 10_000, 100_000]),
    "lemma6": dict(lattice="tri", n_steps=100_000, n_samples=200, k_range=[1000, 10_000, 100_000]),
    "lemma7-alpha": dict(lattice="square", n_steps=100_000, n_samples=200, k_range=[1]),
}

_RUNNERS = {
    "lemma1": _lemma1,
    "proposition-ak": _proposition_ak,
    "lemma1.5": _lemma15,
    "lemma2": _lemma2,
    "coupling": _coupling,
    "theorem-q1": _theorem_q1,
    "theorem2": _theorem2,
    "lemma3": _lemma3,
    "lemma4": _lemma4,
    "lemma5-occupation": _lemma5,
    "lemma6": _lemma6,
    "lemma7-alpha": _lemma7,
}

EXPERIMENTS = tuple(_RUNNERS)


def default_config(name: str) -> ExperimentConfig:
    if name not in _RUNNERS:
        raise UnknownExperiment(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    return ExperimentConfig.from_dict(DEFAULTS[name])


def make_config(name: str, data: dict | None = None) -> ExperimentConfig:
    """Experiment defaults overridden by ``data`` (validated)."""
    return ExperimentConfig.from_dict(data or {}, base=default_config(name))


def run_experiment(name: str, config: ExperimentConfig | dict | None = None, write: bool = True, out_dir=None, **shared) -> ExperimentResult:
    """Run experiment ``name``; with ``write`` its CSV/JSON files go to ``out_dir``
    (default ``config.output_dir``) and are listed in ``result.files``.

    ``proposition-ak`` and ``lemma2`` accept ``obs=`` (an :func:`observe`
    result for the same lattice, sample count, step cap and seed) so one
    batch of walks can serve both.
    """
    if name not in _RUNNERS:
        raise UnknownExperiment(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if config is None or isinstance(config, dict):
        config = make_config(name, config)
    else:
        problems = config.problems()
        if problems:
            raise ConfigInvalid(problems)
    result = _RUNNERS[name](config, **shared)
    if write:
        write_report(result, out_dir)
    return result


def summary_line(result: ExperimentResult) -> str:
    return f"{result.name}: {result.status.upper()} " + "; ".join(f"[{c.status}] {c.name}: {c.detail}" for c in result.checks)


__all__ = [
    "ConfigInvalid", "ExperimentConfig", "ExperimentResult", "EXPERIMENTS", "UnknownExperiment",
    "default_config", "make_config", "run_experiment", "write_report", "json_text",
]
