"""Command-line experiment runner.

Each ``--kind`` maps to one family of results.  Trials are cut into
fixed-size blocks; blocks run on a thread pool and are merged in block
order, so output files depend only on the arguments and ``--seed``.

Exit codes: 0 success, 2 usage error, 3 invariant violation during a run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .core import LegWeights, enumerate_states
from .errors import InvariantViolation

KINDS = ("exact-check", "density-scaling", "height-dist", "coupling", "legs-growth", "coupon", "hirsch-trace")
THREADS_ENV = "SPIDERWALK_THREADS"
BLOCK = 64
EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3
VERSION = f"v{__version__}"


class UsageError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    kind: str
    params: dict
    seed: int = 0
    trials: int = 100
    threads: int = 1
    out: str | None = None
    fmt: str = "csv"
    checkpoint: str | None = None

    def echo(self) -> dict:
        """The parts of the spec that determine the output."""
        return {"kind": self.kind, "params": self.params, "seed": self.seed, "trials": self.trials}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    spec: dict
    records: list = field(default_factory=list)
    summary: str = ""
    steps: int = 0
    elapsed: float = 0.0


def _weights(params: dict) -> LegWeights:
    if params.get("p"):
        return LegWeights(tuple(params["p"]))
    return LegWeights.uniform(params["N"])


def _blocks(trials: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + BLOCK, trials)) for lo in range(0, trials, BLOCK)]


def _run_blocks(spec: ExperimentSpec, work: Callable[[int, int], list]) -> list:
    """Run ``work(lo, hi)`` over trial blocks and concatenate in block order.

    Finished blocks are appended to the checkpoint file, which is read back
    on restart when it belongs to the same spec.
    """
    blocks = _blocks(spec.trials)
    done: dict[int, list] = {}
    if spec.checkpoint and os.path.exists(spec.checkpoint):
        with open(spec.checkpoint) as fh:
            for line in fh:
                entry = json.loads(line)
                if entry.get("digest") == spec.digest():
                    done[entry["block"]] = entry["records"]
    todo = [i for i in range(len(blocks)) if i not in done]

    def one(i):
        lo, hi = blocks[i]
        return i, work(lo, hi)

    ckpt = open(spec.checkpoint, "a") if spec.checkpoint else None
    try:
        with ThreadPoolExecutor(max_workers=max(1, spec.threads)) as pool:
            for i, recs in pool.map(one, todo):
                done[i] = recs
                if ckpt:
                    ckpt.write(json.dumps({"digest": spec.digest(), "block": i, "records": recs}) + "\n")
                    ckpt.flush()
    finally:
        if ckpt:
            ckpt.close()
    return [r for i in range(len(blocks)) for r in done[i]]


def run_exact_check(spec: ExperimentSpec) -> ExperimentResult:
    from .exact import oracle_distributions, transition_prob

    w = LegWeights(_weights(spec.params).exact())
    n_max, r_max = spec.params["n"], spec.params.get("r_max", 4)
    records = []
    for start in enumerate_states(w.n_legs, r_max):
        dists = oracle_distributions(n_max, start, w)
        for m in range(n_max + 1):
            compared = mismatched = 0
            for end in enumerate_states(w.n_legs, start.r + m):
                exact = dists[m].get(end, 0)
                pv = transition_prob(m, start, end, w)
                compared += 1
                mismatched += pv.exact != exact or abs(pv.linear - float(exact)) > 1e-12
            records.append(
                {"start_r": start.r, "start_leg": start.leg or 0, "steps": m,
                 "compared": compared, "mismatches": mismatched, "anchor": "Thm 3.1"}
            )
    bad = sum(r["mismatches"] for r in records)
    if bad:
        raise InvariantViolation(f"{bad} closed-form values differ from the enumeration oracle")
    return ExperimentResult(spec.echo(), records, "all closed forms equal oracle")


def run_density_scaling(spec: ExperimentSpec) -> ExperimentResult:
    from .exact import lattice_limit, scaled_transition

    p = spec.params
    w = _weights(p)
    records = []
    for y in p["y_grid"]:
        for case in ("origin", "cross", "same"):
            for leg in range(1, w.n_legs + 1):
                scaled = scaled_transition(p["n"], p["t"], y, float(w[leg]), p["x"], case)
                limit = lattice_limit(p["t"], y, float(w[leg]), p["x"], case)
                records.append(
                    {"case": case, "leg": leg, "y": y, "scaled": scaled, "limit": limit,
                     "rel_err": abs(scaled - limit) / limit if limit else math.nan, "anchor": "Thm 3.2"}
                )
    worst = max((r["rel_err"] for r in records), default=math.nan)
    return ExperimentResult(spec.echo(), records, f"largest relative error {worst:.3g}")


def run_height_dist(spec: ExperimentSpec) -> ExperimentResult:
    from .heights import HeightSample, limit_height_cdf, sample_heights
    from .stats import ks_distance

    p = spec.params
    w = _weights(p).require_positive()
    n = p["n"]

    def work(lo, hi):
        hs = sample_heights(n, w, spec.seed, hi - lo, start=lo)
        return [{"per_leg": row.tolist(), "ranked": rk.tolist(), "ranked_legs": rl.tolist()}
                for row, rk, rl in zip(hs.per_leg, hs.ranked, hs.ranked_legs)]

    rows = _run_blocks(spec, work)
    hs = HeightSample(
        n,
        np.array([r["per_leg"] for r in rows], dtype=np.int64).reshape(-1, w.n_legs),
        np.array([r["ranked"] for r in rows], dtype=np.int64).reshape(-1, w.n_legs),
        np.array([r["ranked_legs"] for r in rows], dtype=np.int64).reshape(-1, w.n_legs),
    )
    if not hs.min_below_ranked().all():
        raise InvariantViolation("H_m(n) > M_N(n) on a path whose top N excursions use N legs")
    records = []
    for j in range(w.n_legs):
        pj = float(w[j + 1])
        scaled = hs.per_leg[:, j] / math.sqrt(n)
        ks = ks_distance(scaled, lambda y: limit_height_cdf(y, pj))
        records.append({"leg": j + 1, "p": pj, "ks": ks, "anchor": "Thm 4.1"})
    functional = float(hs.functional().mean())
    records.append({"leg": 0, "p": math.nan, "ks": math.nan, "mean_functional": functional, "anchor": "Thm 4.4"})
    return ExperimentResult(spec.echo(), records, f"mean 2*sum(a)-max(a) at n={n}: {functional:.4f}", steps=n * spec.trials)


def run_coupling(spec: ExperimentSpec) -> ExperimentResult:
    from .sim import coupled_trial
    from .stats import RngStream

    p = spec.params
    w = _weights(p)
    n, dt = p["n"], p["dt"]
    checks = [c for c in p.get("checkpoints") or [1 << 10, 1 << 12] if c <= n]

    def work(lo, hi):
        out = []
        for i in range(lo, hi):
            pair = coupled_trial(n, dt, w, RngStream(spec.seed, i), trial=i)
            if not pair.legs_agree():
                raise InvariantViolation("walk and Brownian spider disagree on a shared excursion leg", i)
            rec = {"trial": i, "tau_ratio": float(pair.record.tau_times[n] / n),
                   "max_snap_error": pair.record.max_snap_error, "legs_agree": True}
            for c in checks:
                rec[f"sup_ratio_{c}"] = pair.sup_ratio(c)
            out.append(rec)
        return out

    records = _run_blocks(spec, work)
    mean_tau = float(np.mean([r["tau_ratio"] for r in records])) if records else math.nan
    steps = int(round(n / dt)) * spec.trials
    return ExperimentResult(spec.echo(), records, f"mean tau_n/n = {mean_tau:.4f}", steps=steps)


def run_legs_growth(spec: ExperimentSpec) -> ExperimentResult:
    from .growth import GrowingLegsConfig, count_event_hits
    from .stats import proportion_ci

    p = spec.params
    cfg = GrowingLegsConfig(p["N"], p["L"], p["c"], spec.trials, p["fN_mode"], p["k"], not p.get("relax_regime"))
    rows = _run_blocks(spec, lambda lo, hi: [count_event_hits(cfg, spec.seed, lo, hi)])
    hits = int(sum(rows))
    low, high = proportion_ci(hits, spec.trials)
    rec = {"N": cfg.N, "L": cfg.L, "c": cfg.c, "mode": cfg.mode, "k": cfg.k, "n": cfg.n,
           "successes": hits, "trials": spec.trials, "estimate": hits / spec.trials,
           "ci_low": low, "ci_high": high, "reference": cfg.reference, "anchor": cfg.anchor}
    if p.get("relax_regime") and cfg.L > cfg.N / math.log(cfg.N):
        rec["reference"] = math.nan
    return ExperimentResult(spec.echo(), [rec], f"estimate {hits / spec.trials:.4f}, reference {rec['reference']:.4f}", steps=cfg.n * spec.trials)


def run_coupon(spec: ExperimentSpec) -> ExperimentResult:
    from .growth import coupon_balls, coupon_hits, erdos_renyi_limit
    from .stats import proportion_ci

    p = spec.params
    N, m, x = p["N"], p["m"], p["x"]
    balls = coupon_balls(N, m, x)
    rows = _run_blocks(spec, lambda lo, hi: [coupon_hits(N, balls, m, spec.seed, lo, hi)])
    hits = int(sum(rows))
    low, high = proportion_ci(hits, spec.trials)
    ref = erdos_renyi_limit(m, x)
    rec = {"N": N, "m": m, "x": x, "balls": balls, "successes": hits, "trials": spec.trials,
           "estimate": hits / spec.trials, "ci_low": low, "ci_high": high, "reference": ref,
           "anchor": "Thm 5.8" if m == 1 else "Thm 5.7"}
    return ExperimentResult(spec.echo(), [rec], f"estimate {hits / spec.trials:.4f}, reference {ref:.4f}", steps=balls * spec.trials)


def run_hirsch_trace(spec: ExperimentSpec) -> ExperimentResult:
    from .heights import rescaled_height_trace
    from .sim import simulate_spider
    from .stats import RngStream

    p = spec.params
    w = _weights(p)
    checkpoints = sorted(p.get("checkpoints") or [10**3, 10**4, p["n"]])
    n = max(checkpoints)

    def work(lo, hi):
        out = []
        for i in range(lo, hi):
            path = simulate_spider(n, w, RngStream(spec.seed, i))
            for pt in rescaled_height_trace(path, checkpoints, w.n_legs, g=lambda t: 1.0 / math.log(t)):
                out.append({"trial": i, "n": pt.n, "a": pt.a.tolist(), "functional": pt.functional,
                            "ranked_functional": pt.ranked_functional, "min_scaled": pt.min_scaled,
                            "hirsch": pt.hirsch, "anchor": "Thm 4.4"})
        return out

    records = _run_blocks(spec, work)
    final = [r["functional"] for r in records if r["n"] == n]
    mean_final = float(np.mean(final)) if final else math.nan
    return ExperimentResult(spec.echo(), records, f"mean functional at n={n}: {mean_final:.4f}", steps=n * spec.trials)


RUNNERS = {
    "exact-check": run_exact_check,
    "density-scaling": run_density_scaling,
    "height-dist": run_height_dist,
    "coupling": run_coupling,
    "legs-growth": run_legs_growth,
    "coupon": run_coupon,
    "hirsch-trace": run_hirsch_trace,
}


def run(spec: ExperimentSpec) -> ExperimentResult:
    validate(spec)
    t0 = time.perf_counter()
    result = RUNNERS[spec.kind](spec)
    result.elapsed = time.perf_counter() - t0
    return result


def validate(spec: ExperimentSpec) -> None:
    p = spec.params
    if spec.kind not in KINDS:
        raise UsageError(f"unknown kind {spec.kind!r}")
    if spec.trials < 1 or spec.threads < 1:
        raise UsageError("--trials and --threads must be >= 1")
    if spec.fmt not in ("csv", "jsonl"):
        raise UsageError("--format must be csv or jsonl")
    if p.get("p"):
        try:
            LegWeights(tuple(p["p"]))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif p.get("N", 0) < 1:
        raise UsageError("--N must be >= 1")
    if spec.kind == "exact-check":
        if not 0 <= p["n"] <= 14:
            raise UsageError("exact-check enumerates at most 14 steps")
        try:
            LegWeights(_weights(p).exact())
        except ValueError:
            raise UsageError("leg probabilities have no exact rational form summing to 1") from None
    if spec.kind in ("density-scaling", "height-dist", "coupling", "hirsch-trace") and p["n"] < 1:
        raise UsageError("--n must be positive")
    if spec.kind == "density-scaling" and (p["t"] <= 0 or p["x"] < 0 or any(y < 0 for y in p["y_grid"])):
        raise UsageError("need t > 0 and nonnegative x, y")
    if spec.kind == "height-dist" and p.get("p") and min(p["p"]) <= 0:
        raise UsageError("height laws need every leg probability > 0")
    if spec.kind == "coupling":
        spu = 1.0 / p["dt"]
        if p["dt"] <= 0 or abs(spu - round(spu)) > 1e-9:
            raise UsageError("--dt must be 1/integer")
    if spec.kind == "hirsch-trace" and min(p.get("checkpoints") or [p["n"]]) < 3:
        raise UsageError("checkpoints must be >= 3")
    if spec.kind == "legs-growth":
        if p.get("p") and not LegWeights(tuple(p["p"])).is_uniform():
            raise UsageError("legs-growth needs uniform weights")
        try:
            from .growth import GrowingLegsConfig

            GrowingLegsConfig(p["N"], p["L"], p["c"], spec.trials, p["fN_mode"], p["k"], not p.get("relax_regime"))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if spec.kind == "coupon" and (p["N"] < 1 or p["m"] < 1):
        raise UsageError("coupon needs N >= 1 and m >= 1")


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return json.dumps([float(format(x, ".17g")) if isinstance(x, float) else x for x in v])
    return str(v)


def _meta(result: ExperimentResult) -> dict:
    return {"spec": result.spec, "seed": result.spec["seed"], "version": VERSION}


def emit(result: ExperimentResult, fmt: str = "csv", out=None) -> str:
    """Serialise ``result``; write to ``out`` (a path) when given."""
    meta = _meta(result)
    buf = io.StringIO()
    if fmt == "csv":
        keys: list[str] = []
        for rec in result.records:
            keys.extend(k for k in rec if k not in keys)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "seed", "version", "spec", *keys])
        spec_json = json.dumps(result.spec, sort_keys=True)
        for rec in result.records:
            writer.writerow([result.spec["kind"], result.spec["seed"], VERSION, spec_json, *(_fmt(rec.get(k)) for k in keys)])
    elif fmt == "jsonl":
        buf.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for rec in result.records:
            buf.write(json.dumps(rec, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def load_jsonl(path_or_text: str) -> tuple[dict, list[dict]]:
    """Inverse of ``emit(..., "jsonl")``: (meta, records)."""
    text = path_or_text
    if "\n" not in path_or_text and os.path.exists(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not lines or "meta" not in lines[0]:
        raise ValueError("missing meta line")
    return lines[0]["meta"], lines[1:]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="spiderwalk", description="Spider random walk experiments.")
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--threads", type=int, default=None, help=f"default: ${THREADS_ENV} or 1")
    ap.add_argument("--out", default=None, help="output file (default: stdout)")
    ap.add_argument("--format", dest="fmt", choices=("csv", "jsonl"), default="csv")
    ap.add_argument("--checkpoint-file", dest="checkpoint", default=None, help="resumable block log")
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--p", type=_floats, default=None, help="comma-separated leg probabilities")
    ap.add_argument("--n", type=int, default=None, help="steps (default depends on kind)")
    ap.add_argument("--L", type=int, default=1)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--fN-mode", dest="fN_mode", choices=("fixed", "up", "down"), default="fixed")
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--x", type=float, default=None)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--y-grid", dest="y_grid", type=_floats, default=None)
    ap.add_argument("--checkpoints", type=_ints, default=None)
    ap.add_argument("--relax-regime", dest="relax_regime", action="store_true")
    return ap


_DEFAULT_N = {"exact-check": 6, "density-scaling": 10**4, "height-dist": 10**4, "coupling": 4096, "hirsch-trace": 10**5}


def spec_from_args(ns: argparse.Namespace) -> ExperimentSpec:
    n = ns.n if ns.n is not None else _DEFAULT_N.get(ns.kind, 0)
    x = ns.x if ns.x is not None else (0.5 if ns.kind == "density-scaling" else 0.0)
    params = {"N": len(ns.p) if ns.p else ns.N, "p": ns.p, "n": n}
    kind_params = {
        "density-scaling": {"t": ns.t, "x": x, "y_grid": ns.y_grid or [0.5]},
        "coupling": {"dt": ns.dt, "checkpoints": ns.checkpoints},
        "legs-growth": {"L": ns.L, "c": ns.c, "fN_mode": ns.fN_mode, "k": ns.k, "relax_regime": ns.relax_regime},
        "coupon": {"m": ns.m, "x": x},
        "hirsch-trace": {"checkpoints": ns.checkpoints},
    }
    params.update(kind_params.get(ns.kind, {}))
    threads = ns.threads if ns.threads is not None else int(os.environ.get(THREADS_ENV, "1"))
    return ExperimentSpec(ns.kind, params, ns.seed, ns.trials, threads, ns.out, ns.fmt, ns.checkpoint)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(ns)
        result = run(spec)
    except UsageError as exc:
        print(f"spiderwalk: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"spiderwalk: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = emit(result, spec.fmt, spec.out)
    if spec.out is None:
        sys.stdout.write(text)
    else:
        print(result.summary)
    rate = result.steps / result.elapsed if result.elapsed > 0 and result.steps else 0.0
    print(f"elapsed {result.elapsed:.3f} s, {rate:.3g} steps/s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
