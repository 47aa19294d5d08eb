"""Command line entry point ``pwl``.

Exit codes: 0 when every check passed, 1 when any failed, 2 on usage or
configuration errors.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import effective, experiments, prudent
from .io import ndjson_line, thread_count, write_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive(v: str) -> int:
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return n


def _nonneg(v: str) -> int:
    n = int(v)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pwl", description="Kinetic prudent walk simulator and experiment harness.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate one walk")
    s.add_argument("--lattice", choices=["square", "tri"], required=True)
    s.add_argument("--steps", type=_nonneg, required=True)
    s.add_argument("--seed", type=_nonneg, required=True)
    s.add_argument("--stream", type=_nonneg, default=0)
    s.add_argument("--dump-path", help="write one NDJSON record per time step (t, a, b, W_t, H_t)")

    e = sub.add_parser("exit-times", help="exit-time survival of the effective walk: Monte Carlo vs exact")
    e.add_argument("--L", type=_positive, required=True, dest="L")
    e.add_argument("--samples", type=_positive, required=True)
    e.add_argument("--seed", type=_nonneg, required=True)
    e.add_argument("--out", required=True)

    x = sub.add_parser("experiment", help="run a named experiment")
    x.add_argument("name")
    x.add_argument("--config", help="JSON file with ExperimentConfig fields (missing fields take the experiment defaults)")
    x.add_argument("--out", help="output directory (overrides output_dir)")

    r = sub.add_parser("report", help="aggregate pass/fail of experiment reports in a directory")
    r.add_argument("--dir", required=True)
    return p


def cmd_simulate(args) -> int:
    a, b, trapped = prudent.walk_arrays(args.lattice, args.steps, args.seed, args.stream)
    W = np.maximum.accumulate(a) - np.minimum.accumulate(a) + 1
    H = np.maximum.accumulate(b) - np.minimum.accumulate(b) + 1
    if args.dump_path:
        path = Path(args.dump_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            for t in range(a.size):
                f.write(ndjson_line({"t": t, "a": int(a[t]), "b": int(b[t]), "W_t": int(W[t]), "H_t": int(H[t])}))
    summary = {
        "lattice": args.lattice,
        "seed": args.seed,
        "stream": args.stream,
        "steps": int(a.size - 1),
        "trapped": bool(trapped),
        "end": [int(a[-1]), int(b[-1])],
        "width": int(W[-1]),
        "height": int(H[-1]),
    }
    print(json.dumps(summary))
    return EXIT_OK


def exit_time_rows(L: int, samples: int, seed: int) -> list[dict]:
    """Survival ``P(eta_L >= m)`` for ``m = 1..M``, Monte Carlo next to the exact law.

    ``M`` is at least ``L^1.5`` and extends until the exact survival drops
    below 1e-4 (at most 1e4). ``p_exact`` is empty for ``L > 64``.
    """
    eta, _, _ = effective.exit_times(L, samples, seed)
    exact = None
    M = max(int(math.floor(L**1.5)), 1)
    if L <= 64:
        dist = effective.exit_time_dp(L, 10**4)
        surv = dist.tail + np.cumsum(dist.p[::-1])[::-1]  # surv[m-1] = P(eta >= m)
        surv[0] = 1.0
        M = min(max(M, int(np.searchsorted(-surv, -1e-4)) + 1), 10**4)
        exact = surv
    else:
        M = min(max(M, int(np.quantile(eta, 0.9999))), 10**4)
    counts = np.bincount(np.minimum(eta, M + 1), minlength=M + 2)
    ge = np.cumsum(counts[::-1])[::-1] / samples  # ge[m] = P_hat(eta >= m)
    rows = []
    for m in range(1, M + 1):
        p = float(ge[m])
        rows.append({
            "L": L,
            "m": m,
            "p_exact": float(exact[m - 1]) if exact is not None else None,
            "p_empirical": p,
            "stderr": math.sqrt(p * (1.0 - p) / samples),
        })
    return rows


def cmd_exit_times(args) -> int:
    rows = exit_time_rows(args.L, args.samples, args.seed)
    path = write_csv(Path(args.out) / f"exit_times_L{args.L}.csv", ["L", "m", "p_exact", "p_empirical", "stderr"], rows)
    print(path)
    return EXIT_OK


def _load_config(name: str, path) -> experiments.ExperimentConfig:
    data = {}
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise experiments.ConfigInvalid([f"config file: {exc}"]) from None
    return experiments.make_config(name, data)


def cmd_experiment(args) -> int:
    cfg = _load_config(args.name, args.config)
    if args.out:
        cfg.output_dir = args.out
    result = experiments.run_experiment(args.name, cfg)
    print(experiments.summary_line(result))
    for p in result.files:
        print(f"  wrote {p}")
    return EXIT_OK if result.passed else EXIT_FAIL


def aggregate(directory) -> tuple[list[dict], bool]:
    """Statuses of every experiment report (``*.json`` with an ``experiment`` key)."""
    out = []
    for path in sorted(Path(directory).glob("*.json")):
        try:
            rep = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        if not isinstance(rep, dict) or "experiment" not in rep or "status" not in rep:
            continue
        out.append({"experiment": rep["experiment"], "status": rep["status"], "file": path.name, "checks": rep.get("checks", [])})
    return out, all(r["status"] != "fail" for r in out)


def cmd_report(args) -> int:
    d = Path(args.dir)
    if not d.is_dir():
        print(f"pwl report: {d} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    rows, ok = aggregate(d)
    if not rows:
        print(f"pwl report: no experiment reports in {d}", file=sys.stderr)
        return EXIT_USAGE
    for r in rows:
        print(f"{r['status'].upper():7s} {r['experiment']}")
        for c in r["checks"]:
            print(f"        [{c['status']}] {c['name']}: {c['detail']}")
    n_fail = sum(r["status"] == "fail" for r in rows)
    print(f"{len(rows)} experiments, {n_fail} failed")
    return EXIT_OK if ok else EXIT_FAIL


_COMMANDS = {"simulate": cmd_simulate, "exit-times": cmd_exit_times, "experiment": cmd_experiment, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()
        return _COMMANDS[args.command](args)
    except experiments.UnknownExperiment as exc:
        print(f"pwl: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except experiments.ConfigInvalid as exc:
        print("pwl: invalid config:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"pwl: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
