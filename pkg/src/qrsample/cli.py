"""Batch front-end: read an instance file, run one module, emit JSON or CSV.

Exit codes: 0 success, 1 malformed input, 2 infeasible instance (p above
p_max), 3 numerical invariant violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import hiddenshift as hs
from .errors import InfeasibleError, NumericalError, QRSError, ValidationError
from .linear import QLEInstance, expected_query_scale, solve_qle, truncated_weights
from .metropolis import QMMInstance, metropolis_move, move_weights, transition_matrix
from .qrs import plan_exact, run_AQRS, target_state
from .report import binomial_se, constants, jsonable, level_statistics, summarize
from .sqrs import Schedule, fidelity, level_failure_probability, resampling_epsilon, resampling_target, run_ASQRS
from .statevector import ReflectionOracle, make_preparation_oracle, random_hidden_states, weighted_superposition
from .waterfill import compute_bounds, dual_witness, verify_duality, waterfill

STOCHASTIC = {"qrs", "sqrs", "qle", "qmm", "bhsp", "bhsp-boost"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are malformed input, not infeasibility
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read instance {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("instance file must hold a JSON object")
    return data


def load_function(path: str) -> hs.BooleanFunction:
    """First line ``n``; second line ``2^n`` bits, or hex digits (optionally ``0x``-prefixed)."""
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ValidationError(f"cannot read function file {path}: {exc}") from exc
    if len(lines) < 2:
        raise ValidationError("function file needs two lines: n, then the truth table")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValidationError("first line must be the number of bits") from exc
    body = "".join(lines[1:]).replace(" ", "")
    if len(body) == 1 << n and set(body) <= {"0", "1"} and not body.lower().startswith("0x"):
        return hs.BooleanFunction.from_bits(n, body)
    try:
        return hs.BooleanFunction.from_hex(n, body[2:] if body.lower().startswith("0x") else body)
    except ValueError as exc:
        raise ValidationError(f"truth table is neither {1 << n} bits nor hex") from exc


def _vec(data: dict, key: str) -> np.ndarray:
    if key not in data:
        raise ValidationError(f"instance is missing '{key}'")
    try:
        return np.asarray(data[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'{key}' must be a list of numbers") from exc


def _shift(text: str | None, n: int) -> int:
    if text is None:
        raise ValidationError("--shift is required")
    t = text.strip()
    try:
        return int(t, 2) if len(t) == n and set(t) <= {"0", "1"} else int(t, 0)
    except ValueError as exc:
        raise ValidationError(f"cannot parse shift {text!r}") from exc


def cmd_waterfill(args) -> tuple[dict, list]:
    data = load_json(args.instance)
    pi, sigma, p = _vec(data, "pi"), _vec(data, "sigma"), float(data.get("p", args.p if args.p is not None else 1.0))
    sol = waterfill(pi, sigma, p)
    cert = verify_duality(pi, sigma, p)
    b = sol.bounds
    out = {
        "gamma_bar": sol.gamma_bar, "epsilon": sol.epsilon, "objective": sol.objective, "p": sol.p,
        "bounds": {"p_min": b.p_min, "p_max": b.p_max, "gamma_min": b.gamma_min, "gamma_max": b.gamma_max},
        "certificate": "pass" if cert.passed else "fail",
        "checks": {k: {"ok": ok, "slack": s} for k, (ok, s) in cert.checks.items()},
        "plan": _plan_dict(plan_exact(pi, sigma, p)),
    }
    if cert.objective_dual is not None:
        w = dual_witness(pi, sigma, sol.p, sol)
        out["dual"] = {"lambda": w.lam, "mu": w.mu, "objective": w.objective}
    return out, []


def _plan_dict(plan) -> dict:
    return {"theta": plan.theta, "t_tilde": plan.t_tilde, "theta_tilde": plan.theta_tilde, "r": plan.r,
            "queries": plan.queries, "epsilon_norm": float(np.linalg.norm(plan.epsilon))}


def cmd_certify(args) -> tuple[dict, list]:
    rows = []
    if args.instance:
        data = load_json(args.instance)
        instances = data.get("instances", [data])
        for inst in instances:
            rows.append((_vec(inst, "pi"), _vec(inst, "sigma"), float(inst["p"])))
    else:
        if args.seed is None:
            raise ValidationError("a random campaign needs --seed")
        rng = np.random.default_rng(args.seed)
        for _ in range(args.trials):
            n = int(rng.integers(1, args.n_max + 1))
            pi, sigma = np.abs(rng.normal(size=n)), np.abs(rng.normal(size=n))
            pi, sigma = pi / np.linalg.norm(pi), sigma / np.linalg.norm(sigma)
            b = compute_bounds(pi, sigma)
            rows.append((pi, sigma, float(rng.uniform(b.p_min, b.p_max))))
    table = []
    for k, (pi, sigma, p) in enumerate(rows):
        c = verify_duality(pi, sigma, p)
        table.append({"index": k, "n": pi.size, "p": p, "primal": c.objective_primal,
                      "dual": c.objective_dual if c.objective_dual is not None else "",
                      "passed": c.passed, "violations": ";".join(c.violations())})
    passed = sum(r["passed"] for r in table)
    return {"instances": len(table), "passed": passed, "certificate": "pass" if passed == len(table) else "fail",
            "results": table}, table


def cmd_qrs(args) -> tuple[dict, list]:
    data = load_json(args.instance)
    pi, sigma = _vec(data, "pi"), _vec(data, "sigma")
    p = float(data.get("p", args.p if args.p is not None else 1.0))
    d = int(data.get("d", 1))
    rng = np.random.default_rng(args.seed)
    table = []
    for trial in range(args.trials):
        hidden = random_hidden_states(pi.size, d, rng)
        oracle = make_preparation_oracle(pi, hidden, seed=args.seed + trial)
        res = run_AQRS(oracle, pi, sigma, p, rng, target=target_state(sigma, hidden))
        table.append({"trial": trial, "queries": res.queries, "accept": res.accept,
                      "accept_probability": res.accept_probability, "overlap_squared": res.success_overlap ** 2})
    plan = plan_exact(pi, sigma, p)
    return {"p": plan.p, "plan": _plan_dict(plan), "trials": table,
            "queries": summarize([r["queries"] for r in table])}, table


def cmd_sqrs(args) -> tuple[dict, list]:
    data = load_json(args.instance)
    tau = _vec(data, "tau")
    pi = _vec(data, "pi") if "pi" in data else np.full(tau.size, 1 / math.sqrt(tau.size))
    alpha = float(data.get("alpha", 1.0))
    d = int(data.get("d", 1))
    schedule = Schedule()
    rng = np.random.default_rng(args.seed)
    hidden = random_hidden_states(pi.size, d, rng)
    source = weighted_superposition(pi, hidden)
    target = weighted_superposition(resampling_target(pi, tau), hidden)
    eps_norm = float(np.linalg.norm(resampling_epsilon(pi, tau, alpha, schedule.r)))
    table, levels = [], []
    for trial in range(args.trials):
        ref = ReflectionOracle(source)
        res = run_ASQRS(source, ref, tau, alpha, rng, schedule)
        levels.append(res.levels)
        table.append({"trial": trial, "queries": res.queries, "accepted_level": res.accepted_level,
                      "fidelity": fidelity(res.output_state, target)})
    stats = level_statistics(levels)
    for l, s in stats.items():
        s["failure_rate"] = s["failures"] / s["visits"]
        s["bound"] = level_failure_probability(s["T"], eps_norm)
        s["standard_error"] = binomial_se(s["bound"], s["visits"])
    return {"epsilon_norm": eps_norm, "query_bound": schedule.expected_query_bound(eps_norm),
            "queries": summarize([r["queries"] for r in table]),
            "fidelity": summarize([r["fidelity"] for r in table]),
            "levels": stats, "trials": table}, table


def cmd_qle(args) -> tuple[dict, list]:
    data = load_json(args.instance)
    lam, b = _vec(data, "lambda"), _vec(data, "b")
    kappa = float(data.get("kappa", 1 / lam.min()))
    kt = float(data.get("kappa_tilde", kappa))
    inst = QLEInstance.diagonal(lam, b, kappa)
    w = truncated_weights(inst, kt)
    rng = np.random.default_rng(args.seed)
    table = []
    for trial in range(args.trials):
        r = solve_qle(inst, kt, rng)
        table.append({"trial": trial, "queries": r.queries, "reflections": r.reflections,
                      "p_measured": r.p_measured, "fidelity": r.fidelity_truncated})
    return {"p_predicted": w.p, "overlap_predicted": w.overlap, "w": w.w, "w_tilde": w.w_tilde,
            "p_measured": table[-1]["p_measured"],
            "queries_mean": summarize([r["queries"] for r in table])["mean"],
            "reflections_mean": summarize([r["reflections"] for r in table])["mean"],
            "query_scale": expected_query_scale(inst, kt),
            "fidelity": table[-1]["fidelity"], "trials": table}, table


def _qmm_instance(data: dict) -> QMMInstance:
    E = _vec(data, "E")
    beta = float(data.get("beta", 1.0))
    gates = data.get("gates", 0)
    if isinstance(gates, int):
        return QMMInstance.random(E, beta, seed=gates, n_gates=int(data.get("n_gates", 2)))
    mats = [np.asarray(g, dtype=float)[..., 0] + 1j * np.asarray(g, dtype=float)[..., 1]
            if np.asarray(g).ndim == 3 else np.asarray(g, dtype=complex) for g in gates]
    return QMMInstance(E, np.eye(E.size), tuple(mats), beta)


def cmd_qmm(args) -> tuple[dict, list]:
    data = load_json(args.instance)
    inst = _qmm_instance(data)
    i = int(data.get("start", 0))
    steps = int(data.get("steps", args.trials))
    rng = np.random.default_rng(args.seed)
    table = []
    hist = {j: 0 for j in range(inst.d)}
    hist[i] += 1
    for step in range(steps):
        mw = move_weights(inst, i)
        m = metropolis_move(inst, i, rng)
        table.append({"step": step, "from": i, "j": m.j, "queries": m.queries, "reflections": m.reflections,
                      "weight_norm": mw.norm})
        i = m.j
        hist[i] += 1
    return {"transition_matrix": transition_matrix(inst), "histogram": hist, "moves": table,
            "queries": summarize([r["queries"] for r in table])}, table


def cmd_bhsp(args) -> tuple[dict, list]:
    f = load_function(args.instance)
    s = _shift(args.shift, f.n)
    p = 1.0 if args.p is None else args.p
    rng = np.random.default_rng(args.seed)
    i_f = hs.check_promise(f)
    table = []
    for trial in range(args.trials):
        res = hs.run_bhsp(hs.ShiftOracle(f, s), f, p, rng)
        table.append({"trial": trial, "s_hat": res.s_hat, "correct": res.s_hat == s, "queries": res.queries,
                      "p": res.p, "epsilon_norm": res.epsilon_norm, "I_f": i_f,
                      "prob_correct": float(res.distribution[s])})
    first = table[0]
    return {"s_hat": first["s_hat"], "queries": first["queries"], "p": first["p"],
            "epsilon_norm": first["epsilon_norm"], "I_f": i_f, "trials": table}, table


def cmd_bhsp_boost(args) -> tuple[dict, list]:
    f = load_function(args.instance)
    s = _shift(args.shift, f.n)
    gamma = 1.0 if args.gamma is None else args.gamma
    delta = 0.05 if args.delta is None else args.delta
    rng = np.random.default_rng(args.seed)
    table = []
    for trial in range(args.trials):
        res = hs.boosted_bhsp(hs.ShiftOracle(f, s), f, gamma, delta, rng)
        table.append({"trial": trial, "s_hat": res.s_hat, "correct": res.s_hat == s, "queries": res.queries,
                      "attempts": res.attempts, "rounds": res.rounds, "p": res.p, "p_l1": res.p_l1,
                      "epsilon_norm": res.epsilon_norm, "I_f": res.min_influence})
    wrong = sum(not r["correct"] for r in table)
    return {"s_hat": table[0]["s_hat"], "queries": summarize([r["queries"] for r in table]),
            "failure_rate": wrong / len(table), "delta": delta, "gamma": gamma, "trials": table}, table


COMMANDS = {
    "waterfill": cmd_waterfill, "certify": cmd_certify, "qrs": cmd_qrs, "sqrs": cmd_sqrs,
    "qle": cmd_qle, "qmm": cmd_qmm, "bhsp": cmd_bhsp, "bhsp-boost": cmd_bhsp_boost,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrsample", description="Quantum rejection sampling experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--instance", required=name != "certify", help="instance file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--out", default=None, help="write here instead of stdout")
        sp.add_argument("--p", type=float, default=None, help="target success probability")
        if name.startswith("bhsp"):
            sp.add_argument("--shift", default=None, help="hidden shift as bits or integer")
            sp.add_argument("--gamma", type=float, default=None)
            sp.add_argument("--delta", type=float, default=None)
        if name == "certify":
            sp.add_argument("--n-max", type=int, default=16)
    return parser


def render(doc: dict, table: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    rows = jsonable(table) if table else [jsonable({k: v for k, v in doc.items() if not isinstance(v, (dict, list))})]
    fields = sorted({k for r in rows for k in r})
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.trials < 1:
            raise ValidationError("--trials must be at least 1")
        if args.command in STOCHASTIC and args.seed is None:
            raise ValidationError(f"'{args.command}' is stochastic and needs --seed")
        doc, table = COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (QRSError, ValueError, KeyError, TypeError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return 1
    doc = {"command": args.command, "seed": args.seed, "trials": args.trials,
           "constants": constants(), "result": doc}
    text = render(doc["result"] if args.format == "csv" else doc, table, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
