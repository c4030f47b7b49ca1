"""Command-line experiment runner.

Every subcommand builds an :class:`ExperimentConfig`, runs the registered
experiment with a Philox stream seeded from ``--seed``, and writes a JSON
report (or a CSV of flattened metrics). The metrics payload depends only on
the configuration; wall time is reported outside it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from . import bounds, chernoff, fs, gf, mub, nlbox, tql, wotro
from .errors import BadParams, UnknownExperiment, WotroLabError
from .rng import make_rng
from .stats import chi2_uniform_pvalue, within_sigma

SCHEMA = 1


@dataclass
class ExperimentConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    trials: int | None = None
    out: str | None = None

    def get(self, key: str, default: Any) -> Any:
        v = self.params.get(key)
        return default if v is None else v


Result = tuple[dict[str, Any], dict[str, bool]]
REGISTRY: dict[str, Callable[[ExperimentConfig, np.random.Generator], Result]] = {}


def experiment(name: str):
    def deco(fn):
        REGISTRY[name] = fn
        return fn

    return deco


def _trials(cfg: ExperimentConfig, default: int) -> int:
    t = cfg.trials if cfg.trials is not None else default
    if t < 1:
        raise BadParams("trials must be positive")
    return int(t)


# ------------------------------------------------------------------ experiments


@experiment("field")
def _field(cfg, rng):
    F = gf.field_new(cfg.get("p", 3), cfg.get("n", 2))
    counts = np.bincount(F.trace_table, minlength=F.p)
    metrics = {"field": F.to_json(), "order": F.order, "trace_counts": counts.tolist()}
    return metrics, {"trace_balanced": bool(np.all(counts == F.order // F.p))}


@experiment("mub-audit")
def _mub(cfg, rng):
    F = gf.field_new(cfg.get("p", 3), cfg.get("n", 1))
    pairs = mub.all_pairs(F)
    limit = int(cfg.get("pairs", 10))
    if len(pairs) > limit:
        pick = rng.choice(len(pairs), size=limit, replace=False)
        pairs = [pairs[int(i)] for i in sorted(pick)]
    dev = mub.mub_overlap_audit(F, pairs)
    return {"pairs": len(pairs), "max_deviation": dev}, {"unbiased": dev <= 1e-9}


@experiment("wf-run")
def _wf_run(cfg, rng):
    proto = wotro.build_wf_protocol(cfg.get("p", 3), cfg.get("n", 1))
    a = int(cfg.get("a", 0))
    tr = wotro.honest_run(proto, a, rng)
    return {"a": tr.a, "y": tr.y, "w": list(tr.w), "accepted": tr.accepted, "c": tr.c}, {"accepted": tr.accepted}


@experiment("wf-correctness")
def _wf_correct(cfg, rng):
    proto = wotro.build_wf_protocol(cfg.get("p", 3), cfg.get("n", 1))
    rep = wotro.correctness_audit(proto, _trials(cfg, 10_000), rng)
    law = wotro.challenge_law(proto, 0)
    metrics = {"accept_rate": rep.accept_rate, "report": rep.to_json(), "law_a0": {str(k): v for k, v in sorted(law.items())}}
    return metrics, {"accept_rate_one": rep.accept_rate == 1.0}


@experiment("baselines")
def _baselines(cfg, rng):
    trials = _trials(cfg, 20_000)
    q, m = cfg.get("q", 2), cfg.get("m", 2)
    triv = wotro.build_baseline("trivial_two_message", q=q, n=m, m=m)
    target = wotro.random_target(triv, rng)
    hit = wotro.avoidance_audit(triv, wotro.HonestAdversary(), target, trials, rng)
    metrics = {"trivial": hit.to_json()}
    checks = {"trivial_hit": within_sigma(hit.hit_prob, q**-m, trials)}
    ident = lambda a: a  # noqa: E731
    for blocks in (2, 64):
        proto = wotro.build_baseline("crs_blocks", q=2, n=6, blocks=blocks)
        exact = wotro.crs_blocks_exact_hit(proto, ident)
        emp = wotro.avoidance_audit(proto, wotro.block_adversary(proto, ident), ident, trials, rng)
        metrics[f"crs_blocks_{blocks}"] = {"exact": exact, "formula": wotro.crs_blocks_formula(blocks), **emp.to_json()}
        checks[f"crs_blocks_{blocks}_exact"] = abs(exact - wotro.crs_blocks_formula(blocks)) <= 1e-12
        checks[f"crs_blocks_{blocks}_empirical"] = within_sigma(emp.hit_prob, exact, trials)
    return metrics, checks


def _toy(cfg):
    return chernoff.build_binary_toy(cfg.get("n", 2), cfg.get("m", 1), cfg.get("k", 1))


@experiment("chernoff-enum")
def _chernoff(cfg, rng):
    rep = chernoff.enumerate_f_audit(_toy(cfg))
    return rep.to_json(), {"identity": rep.identity_error <= 1e-9, "operator_mean": rep.mean_operator_error <= 1e-9}


@experiment("hybrid")
def _hybrid(cfg, rng):
    proto = _toy(cfg)
    queries = int(cfg.get("queries", 1))
    circuit = chernoff.entangled_circuit(proto.prover_dim, queries)
    rep = chernoff.hybrid_distance(proto, circuit)
    metrics = rep.to_json()
    checks = {"triangle": rep.total <= sum(rep.consecutive) + 1e-9}
    if queries == 1:
        analytic = chernoff.analytic_single_query_distance(rep.eta)
        metrics["analytic"] = analytic
        if rep.valid_fraction == 1.0:
            checks["matches_analytic"] = abs(rep.total - analytic) <= 1e-9
    return metrics, checks


@experiment("shelter")
def _shelter(cfg, rng):
    p, n, m = cfg.get("p", 3), cfg.get("n", 2), cfg.get("m", 1)
    G = wotro.truncation_hash(p, m)
    rep = chernoff.shelter_attack_state(lambda x: G(0, x), p, n, m)
    return rep.to_json(), {"delta_gt_half": rep.delta > 0.5}


def _random_table(F, rng):
    return [int(v) for v in rng.integers(F.order, size=F.order)]


@experiment("trace-moments")
def _traces(cfg, rng):
    F = gf.field_new(cfg.get("p", 3), cfg.get("n", 1))
    rows = []
    for _ in range(_trials(cfg, 20)):
        table = _random_table(F, rng)
        tm = bounds.trace_moments(bounds.build_S(F, table))
        rows.append({"target": table, **tm.to_json()})
    tol = 1e-6 * rows[0]["expected1"]
    checks = {
        "tr1": all(abs(r["tr1"] - r["expected1"]) <= tol for r in rows),
        "tr2": all(abs(r["tr2"] - r["expected2"]) <= tol for r in rows),
        "tr3_bound": all(r["tr3"] <= r["bound3"] + tol for r in rows),
    }
    return {"cases": rows, "max_tr3": max(r["tr3"] for r in rows), "bound3": rows[0]["bound3"]}, checks


@experiment("dual-certificate")
def _dual(cfg, rng):
    F = gf.field_new(cfg.get("p", 3), cfg.get("n", 2))
    alpha = float(cfg.get("alpha", 1.0))
    S = bounds.build_S(F, _random_table(F, rng))
    cert = bounds.dual_certificate(S, alpha, rng, strict=False)
    metrics = cert.to_json()
    metrics["primal_lower_bound"] = bounds.primal_lower_bound(S)
    return metrics, {"feasible": cert.feasible, "below_taylor": cert.dual_value <= cert.taylor_value + 1e-12}


@experiment("weil")
def _weil(cfg, rng):
    p = cfg.get("p", 3)
    gauss = []
    for coef in range(1, p):
        res = bounds.weil_sum_audit(p, bounds.FullQuadratic(np.array([[coef]])))
        gauss.append(res.abs_sum)
    checks = {"gauss_equality": all(abs(g - math.sqrt(p)) <= 1e-6 for g in gauss)}
    metrics: dict[str, Any] = {"gauss_abs": gauss}
    if p == 3:
        F = gf.field_new(p, 1)
        rows = []
        for table, (a, b, c) in bounds.constrained_cases(F):
            W = bounds.build_weil_matrices(F, a, b, c, table)
            rows.append(bounds.weil_sum_audit(p, bounds.Constrained(W.B_abc, W.C_abc)))
        metrics["constrained_cases"] = len(rows)
        metrics["constrained_violations"] = sum(not r.holds for r in rows)
        metrics["max_ratio"] = max(r.abs_sum / r.bound for r in rows)
        checks["constrained_bound"] = all(r.holds for r in rows)
        checks["corrected_bound"] = all(r.abs_sum <= r.corrected_bound + 1e-6 for r in rows)
    return metrics, checks


@experiment("nlbox")
def _nlbox(cfg, rng):
    n, t, m = cfg.get("n", 4), cfg.get("t", 3), cfg.get("m", 2)
    trials = _trials(cfg, 10_000)
    code = nlbox.repetition_code(n, t)
    fam = nlbox.toeplitz_family(code.length, m)
    honest = [nlbox.nlbox_protocol_run(code, fam, fam.sample(rng), int(rng.integers(1 << n)), rng) for _ in range(trials)]
    acc = sum(h.accepted for h in honest)
    agree = sum(h.prover_c == h.verifier_c for h in honest)
    counts = np.bincount([h.verifier_c for h in honest], minlength=1 << m)
    flips = list(range(int(cfg.get("flips", 4))))
    att = nlbox.nlbox_attack_audit(code, fam, flips, nlbox.random_target(n, m, rng), trials, rng)
    metrics = {
        "honest_accept": acc / trials,
        "c_agreement": agree / trials,
        "honest_c_pvalue": chi2_uniform_pvalue(counts),
        "flip": att.to_json(),
    }
    checks = {
        "honest": acc == trials and agree == trials,
        "flip_accept": att.accept_within(),
        "hit": att.hit_within(),
    }
    return metrics, checks


@experiment("fs-attack")
def _fs(cfg, rng):
    proto = _toy(cfg)
    trials = _trials(cfg, 10_000)
    f = cfg.get("f", None)
    f = [int(v) for v in str(f).split(",")] if f is not None else _random_f(proto, rng)
    rep = fs.fs_attack(f, proto, trials, rng)
    return rep.to_json(), {"agrees": rep.exact >= rep.breaks.low and rep.exact <= rep.breaks.high}


def _random_f(proto, rng):
    return [int(v) for v in rng.integers(proto.challenge_count, size=len(proto.inputs))]


@experiment("joint-sim")
def _joint(cfg, rng):
    proto = chernoff.build_binary_toy(cfg.get("n", 8), cfg.get("m", 1), cfg.get("k", 1))
    rep = fs.consistency_audit(proto, int(cfg.get("queries", 10)), _trials(cfg, 2000), rng)
    return rep.to_json(), {"within_bound": rep.within_bound(), "consistent": rep.consistent}


@experiment("tql")
def _tql(cfg, rng):
    scheme = tql.tql_from_ql(tql.mock_ql(cfg.get("m", 12)), cfg.get("k", 2), cfg.get("n", 8))
    rep = tql.retry_audit(scheme, _trials(cfg, 10_000), rng)
    storm = scheme.setup(rng)
    adv = tql.planted_adversary(scheme, storm, 0, 4, rng)
    col = tql.collision_audit(adv.gen, lambda b: scheme.ql.ver(storm.storm, b), adv.collision_entropy, 1000, 1000, rng)
    metrics = {"retries": rep.to_json(), "collisions": col.to_json(), "exhaustion_probability": tql.exhaustion_probability(scheme.type_bits, scheme.security)}
    checks = {
        "mean_retries": rep.mean_within(),
        "no_exhaustion": rep.exhausted == 0,
        "type_consistent": rep.type_consistent,
        "collision": col.within(3.0),
    }
    return metrics, checks


# ------------------------------------------------------------------ reports


def _plain(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def metrics_bytes(metrics: dict) -> bytes:
    return json.dumps(_plain(metrics), sort_keys=True, separators=(",", ":")).encode()


def run(cfg: ExperimentConfig) -> dict:
    if cfg.name not in REGISTRY:
        raise UnknownExperiment(cfg.name)
    start = time.perf_counter()
    metrics, checks = REGISTRY[cfg.name](cfg, make_rng(cfg.seed))
    checks = {k: bool(v) for k, v in checks.items()}
    return {
        "schema": SCHEMA,
        "config": asdict(cfg),
        "metrics": _plain(metrics),
        "checks": checks,
        "pass": all(checks.values()),
        "wall_time": time.perf_counter() - start,
    }


def flatten(d: Any, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    if isinstance(d, dict):
        for k, v in d.items():
            out.update(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(d, list) and d and any(isinstance(v, (dict, list)) for v in d):
        for i, v in enumerate(d):
            out.update(flatten(v, f"{prefix}[{i}]"))
    else:
        out[prefix] = json.dumps(d) if isinstance(d, list) else d
    return out


def to_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["experiment", "seed", "metric", "value"])
    for rep in reports:
        for key, val in sorted(flatten(rep["metrics"]).items()):
            w.writerow([rep["config"]["name"], rep["config"]["seed"], key, val])
        for key, val in sorted(rep["checks"].items()):
            w.writerow([rep["config"]["name"], rep["config"]["seed"], f"check.{key}", val])
    return buf.getvalue()


def suite(manifest: list[dict]) -> dict:
    """Run each manifest entry; an entry is {"name", "params", "seed", "trials"}."""
    reports = []
    for entry in manifest:
        cfg = ExperimentConfig(
            name=entry["name"],
            params=dict(entry.get("params", {})),
            seed=int(entry.get("seed", 0)),
            trials=entry.get("trials"),
        )
        try:
            reports.append(run(cfg))
        except WotroLabError as exc:
            reports.append({"schema": SCHEMA, "config": asdict(cfg), "metrics": {}, "checks": {"error": False},
                            "pass": False, "error": f"{type(exc).__name__}: {exc}"})
    summary = [{"name": r["config"]["name"], "seed": r["config"]["seed"], "pass": r["pass"],
                "failed": sorted(k for k, v in r["checks"].items() if not v)} for r in reports]
    return {"schema": SCHEMA, "summary": summary, "reports": reports, "pass": all(r["pass"] for r in reports)}


def _emit(payload: dict, reports: list[dict], fmt: str, out: str | None) -> None:
    text = to_csv(reports) if fmt == "csv" else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_param(s: str) -> tuple[str, Any]:
    if "=" not in s:
        raise argparse.ArgumentTypeError("expected key=value")
    k, v = s.split("=", 1)
    try:
        return k, int(v)
    except ValueError:
        try:
            return k, float(v)
        except ValueError:
            return k, v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wotrolab", description="Seeded experiments for one-message random oracle protocols.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    for name in REGISTRY:
        sp = sub.add_parser(name, parents=[common])
        for flag in ("p", "n", "m", "k", "q"):
            sp.add_argument(f"--{flag}", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--param", type=_parse_param, action="append", default=[], help="extra key=value")
    sp = sub.add_parser("suite", parents=[common])
    sp.add_argument("manifest", help="JSON file holding a list of experiment entries")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            with open(args.manifest) as fh:
                manifest = json.load(fh)
            res = suite(manifest)
            _emit(res, res["reports"], args.format, args.out)
            return 0 if res["pass"] else 1
        params = {k: getattr(args, k) for k in ("p", "n", "m", "k", "q", "alpha") if getattr(args, k) is not None}
        params.update(dict(args.param))
        cfg = ExperimentConfig(args.command, params, args.seed, args.trials, args.out)
        rep = run(cfg)
    except WotroLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(rep, [rep], args.format, args.out)
    return 0 if rep["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
