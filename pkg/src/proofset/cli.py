"""Batch pipelines over JSONL datasets.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .datagen import (
    GenConfig, NoiseConfig, PROFILES, dataset_stats, generate_example, profile,
    simulate_probabilities,
)
from .decoder import (
    DEFAULT_P_MAX, decode_proof_set, decode_top_p_threshold, read_probability_file,
    slots_from_json, slots_to_json,
)
from .metrics import aggregate, sample_metrics
from .proofs import DEFAULT_LIMIT, ProofSet, enumerate_proofs, proof_from_json, proof_to_json, validate
from .reasoner import answer as answer_question, closure
from .rulebase import (
    Literal, Question, RulebaseError, example_from_json, example_to_json, parse_context,
    read_jsonl,
)
from .setloss import hungarian_loss, sequential_loss

SEED_ENV = "PROOFSET_SEED"


class DataError(Exception):
    def __init__(self, message, example_id=None):
        super().__init__(message)
        self.example_id = example_id


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise DataError(f"{SEED_ENV}={env!r} is not an integer") from None


def _pmap(fn, items, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(fn, items, chunksize=16)
    else:
        yield from map(fn, items)


def _write_jsonl(path, records) -> int:
    n = 0
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            n += 1
    return n


def _load_examples(path):
    try:
        for obj in read_jsonl(path):
            try:
                yield example_from_json(obj)
            except (RulebaseError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"bad example: {exc}", obj.get("id")) from None
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except RulebaseError as exc:
        raise DataError(str(exc)) from None


def write_manifest(out_path, command, argv, config, seed, inputs, wall_time):
    """Append this run to the single ``manifest.json`` of the output directory."""
    folder = Path(out_path).resolve().parent
    manifest = folder / "manifest.json"
    runs = []
    if manifest.exists():
        try:
            runs = json.loads(manifest.read_text()).get("runs", [])
        except (json.JSONDecodeError, AttributeError):
            runs = []
    runs.append({
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "output": str(out_path),
        "version": __version__,
        "wall_time": round(wall_time, 3),
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    })
    manifest.write_text(json.dumps({"runs": runs}, indent=2) + "\n")


# ------------------------------------------------------------ commands -----


def _gen_one(args):
    cfg, index = args
    return example_to_json(generate_example(cfg, index))


def cmd_gen(ns):
    seed = _seed(ns.seed)
    overrides = {"seed": seed, "num_examples": ns.n}
    if ns.max_depth is not None:
        overrides["max_depth"] = ns.max_depth
    if ns.multiproof_rate is not None:
        overrides["multiproof_rate"] = ns.multiproof_rate
    if ns.p_max is not None:
        overrides["p_max"] = ns.p_max
    cfg = profile(ns.profile, **overrides)
    cfg.validate()
    n = _write_jsonl(ns.out, _pmap(_gen_one, [(cfg, i) for i in range(cfg.num_examples)], ns.jobs))
    return {"config": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}, "seed": seed,
            "inputs": [], "count": n}


def _question_arg(text):
    neg = text.strip().startswith("~")
    body = text.strip().lstrip("~").strip().strip("()")
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != 3:
        raise DataError(f"question must look like (s, p, o) or ~(s, p, o): {text!r}")
    return Literal(*parts, negated=neg)


def _single_theory(ns):
    try:
        ctx = parse_context(Path(ns.theory).read_text())
    except FileNotFoundError:
        raise DataError(f"no such file: {ns.theory}") from None
    except RulebaseError as exc:
        raise DataError(str(exc)) from None
    if not ns.question:
        raise DataError("--theory needs --question")
    return ctx, _question_arg(ns.question)


def cmd_answer(ns):
    if ns.theory:
        ctx, q = _single_theory(ns)
        ans, depth = answer_question(ctx, Question(q))
        records = [{"question": str(q), "answer": ans, "label_depth": depth}]
        inputs = [ns.theory]
    else:
        records = []
        for ex in _load_examples(ns.data):
            ans, depth = answer_question(ex.context, ex.question)
            records.append({"id": ex.id, "answer": ans, "label_depth": depth,
                            "matches_gold": ans == ex.answer})
        inputs = [ns.data]
    _emit(ns.out, records)
    return {"config": {}, "seed": None, "inputs": inputs}


def _proofs_one(args):
    ex_json, limit = args
    ex = example_from_json(ex_json)
    proofs, truncated = enumerate_proofs(ex.context, ex.question, limit)
    return {"id": ex.id, "proofs": [proof_to_json(g) for g in proofs], "truncated": truncated}


def cmd_proofs(ns):
    if ns.theory:
        ctx, q = _single_theory(ns)
        proofs, truncated = enumerate_proofs(ctx, q, ns.limit)
        records = [{"question": str(q), "proofs": [proof_to_json(g) for g in proofs],
                    "truncated": truncated}]
        inputs = [ns.theory]
    else:
        items = [(example_to_json(ex), ns.limit) for ex in _load_examples(ns.data)]
        records = list(_pmap(_proofs_one, items, ns.jobs))
        inputs = [ns.data]
    for rec in records:
        if rec["truncated"]:
            print(f"warning: {rec.get('id', rec.get('question'))}: more than {ns.limit} "
                  "proofs, output truncated", file=sys.stderr)
    _emit(ns.out, records)
    return {"config": {"limit": ns.limit}, "seed": None, "inputs": inputs}


def cmd_simulate(ns):
    seed = _seed(ns.seed)
    noise = NoiseConfig(ns.sigma, seed)
    records = []
    import numpy as np

    for index, ex in enumerate(_load_examples(ns.data)):
        if len(ex.gold_proofs) > ns.p_max:
            raise DataError(f"{len(ex.gold_proofs)} gold proofs exceed --p-max {ns.p_max}", ex.id)
        slots = simulate_probabilities(ex.gold_proofs, ex.context, ns.p_max, noise, stream=index)
        rng = np.random.default_rng([seed & (2**64 - 1), index, 1])
        u = rng.uniform(0.0, ns.sigma) if ns.sigma else 0.0
        records.append(slots_to_json(ex.id, slots, abs(float(ex.answer) - u)))
    _write_jsonl(ns.out, records)
    return {"config": {"sigma": ns.sigma, "p_max": ns.p_max}, "seed": seed, "inputs": [ns.data]}


def _examples_with_probs(data_path, probs_path):
    try:
        probs = read_probability_file(probs_path)
    except FileNotFoundError:
        raise DataError(f"no such file: {probs_path}") from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"bad probability file: {exc}") from None
    for ex in _load_examples(data_path):
        if ex.id not in probs:
            raise DataError("no probabilities for example", ex.id)
        obj = probs[ex.id]
        try:
            slots = slots_from_json(obj)
        except (ValueError, KeyError) as exc:
            raise DataError(f"bad probability record: {exc}", ex.id) from None
        if slots and slots[0].k != ex.context.k:
            raise DataError(f"k={slots[0].k} but context has k={ex.context.k}", ex.id)
        yield ex, slots, obj.get("answer_prob")


def _decode_one(args):
    ex_json, probs_json, mode, theta, p_max = args
    ex = example_from_json(ex_json)
    slots = slots_from_json(probs_json)
    if mode == "slots":
        res = decode_proof_set(slots, ex.context)
    else:
        res = decode_top_p_threshold(slots[0].node_probs, slots[0].edge_probs, ex.context,
                                     p_max, theta)
    answer_prob = probs_json.get("answer_prob")
    if answer_prob is None:
        ans = answer_question(ex.context, ex.question)[0]
    else:
        ans = answer_prob >= 0.5
    return {"id": ex.id, "answer": bool(ans), "proofs": [proof_to_json(g) for g in res.proofs],
            "infeasible": res.infeasible}


def cmd_decode(ns):
    theta = math.inf if ns.theta is None else ns.theta
    items = []
    for ex, _, _ in _examples_with_probs(ns.data, ns.probs):
        items.append(ex)
    probs = read_probability_file(ns.probs)
    args = [(example_to_json(ex), probs[ex.id], ns.mode, theta, ns.p_max) for ex in items]
    records = list(_pmap(_decode_one, args, ns.jobs))
    skipped = sum(r["infeasible"] for r in records)
    if skipped:
        print(f"warning: {skipped} infeasible node sets skipped", file=sys.stderr)
    _write_jsonl(ns.out, records)
    return {"config": {"mode": ns.mode, "theta": None if math.isinf(theta) else theta,
                       "p_max": ns.p_max},
            "seed": None, "inputs": [ns.data, ns.probs]}


def cmd_score(ns):
    records = []
    for ex, slots, _ in _examples_with_probs(ns.data, ns.probs):
        p = ns.p or max(len(slots), len(ex.gold_proofs))
        try:
            loss, match = hungarian_loss(slots, ex.gold_proofs, ex.context, p)
        except ValueError as exc:
            raise DataError(str(exc), ex.id) from None
        rec = {"id": ex.id, "hungarian_loss": loss, "matching": list(match.perm)}
        if ns.sequential:
            rec["sequential_loss"] = sequential_loss(slots, ex.gold_proofs, ex.context, p)
        records.append(rec)
    _emit(ns.out, records)
    return {"config": {"p": ns.p, "sequential": ns.sequential}, "seed": None,
            "inputs": [ns.data, ns.probs]}


def cmd_eval(ns):
    gold = list(_load_examples(ns.gold))
    try:
        preds = list(read_jsonl(ns.pred))
    except FileNotFoundError:
        raise DataError(f"no such file: {ns.pred}") from None
    by_id = {}
    for rec in preds:
        if "id" not in rec:
            raise DataError("prediction without an id")
        by_id[str(rec["id"])] = rec
    gold_ids = {ex.id for ex in gold}
    for pid in by_id:
        if pid not in gold_ids:
            raise DataError("prediction has no gold example", pid)
    samples = []
    for ex in gold:
        rec = by_id.get(ex.id)
        if rec is None:
            raise DataError("gold example has no prediction", ex.id)
        if "proofs" not in rec:
            raise DataError("prediction has no proofs field", ex.id)
        try:
            pred = ProofSet(proof_from_json(p) for p in rec["proofs"])
        except ValueError as exc:
            raise DataError(str(exc), ex.id) from None
        ans = rec.get("answer")
        if ans is None:
            ans = answer_question(ex.context, ex.question)[0]
        samples.append(sample_metrics(pred, ProofSet(ex.gold_proofs), bool(ans), ex.answer))
    row = aggregate(samples).table_row()
    text = json.dumps(row, indent=2)
    if ns.out:
        Path(ns.out).write_text(text + "\n")
    print(text)
    return {"config": {}, "seed": None, "inputs": [ns.gold, ns.pred]}


def cmd_validate(ns):
    examples = {ex.id: ex for ex in _load_examples(ns.data)}
    bad = 0
    if ns.pred:
        sources = [(str(r.get("id")), r.get("proofs", [])) for r in read_jsonl(ns.pred)]
    else:
        sources = [(ex.id, [proof_to_json(g) for g in ex.gold_proofs]) for ex in examples.values()]
    for eid, proofs in sources:
        ex = examples.get(eid)
        if ex is None:
            raise DataError("no context for proofs", eid)
        for p in proofs:
            g = proof_from_json(p)
            try:
                problems = validate(g, ex.context)
            except RulebaseError as exc:
                problems = [("UnknownNode", str(exc))]
            if problems:
                bad += 1
                kinds = ", ".join(v[0] for v in problems)
                print(f"{eid}: {g.key}: {kinds}", file=sys.stderr)
    print(json.dumps({"checked": sum(len(p) for _, p in sources), "invalid": bad}))
    return bad


def cmd_stats(ns):
    stats = dataset_stats(_load_examples(ns.data))
    text = json.dumps(stats, indent=2)
    if ns.out:
        Path(ns.out).write_text(text + "\n")
    print(text)
    return {"config": {}, "seed": None, "inputs": [ns.data]}


def _emit(out, records):
    if out:
        _write_jsonl(out, records)
    else:
        for rec in records:
            print(json.dumps(rec))


# -------------------------------------------------------------- parser -----


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proofset", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--profile", default="du3", choices=sorted(PROFILES))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--multiproof-rate", type=float)
    p.add_argument("--p-max", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    for name, helptext in (("answer", "answer questions"), ("proofs", "enumerate proofs")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--data")
        src.add_argument("--theory", help="theory in the text DSL")
        p.add_argument("--question", help="(s, p, o) or ~(s, p, o), with --theory")
        p.add_argument("--out")
        if name == "proofs":
            p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
            p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("simulate", help="noisy probability slots from gold proofs")
    p.add_argument("--data", required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--p-max", type=int, default=DEFAULT_P_MAX)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decode", help="decode proof sets from probabilities")
    p.add_argument("--data", required=True)
    p.add_argument("--probs", required=True)
    p.add_argument("--mode", choices=["slots", "top-p-threshold"], default="slots")
    p.add_argument("--theta", type=float)
    p.add_argument("--p-max", type=int, default=DEFAULT_P_MAX)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("score", help="Hungarian loss of probabilities against gold")
    p.add_argument("--data", required=True)
    p.add_argument("--probs", required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--sequential", action="store_true",
                   help="also report the unmatched slot-i/gold-i loss")
    p.add_argument("--out")

    p = sub.add_parser("eval", help="proof metrics of predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")

    p = sub.add_parser("validate", help="check proof graphs for structural validity")
    p.add_argument("--data", required=True)
    p.add_argument("--pred")

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    return parser


COMMANDS = {
    "gen": cmd_gen, "answer": cmd_answer, "proofs": cmd_proofs, "simulate": cmd_simulate,
    "decode": cmd_decode, "score": cmd_score, "eval": cmd_eval, "validate": cmd_validate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        result = COMMANDS[ns.command](ns)
    except DataError as exc:
        where = f" [example {exc.example_id}]" if exc.example_id is not None else ""
        print(f"proofset {ns.command}: error{where}: {exc}", file=sys.stderr)
        return 2
    except (RulebaseError, ValueError) as exc:
        print(f"proofset {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    if ns.command == "validate":
        return 1 if result else 0
    out = getattr(ns, "out", None)
    if out:
        write_manifest(out, ns.command, argv, result.get("config"), result.get("seed"),
                       result.get("inputs", []), time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
