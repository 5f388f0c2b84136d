"""Command-line front end.

Every subcommand reads model files (JSON, see :func:`model.parse_model`) and
writes either readable text or a single JSON object with ``kind``,
``inputs`` and ``result`` fields.

Exit status: 0 on a completed analysis (whatever the verdict), 1 on a usage
error, 2 when a model file cannot be read or does not fit the request.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from .ioeq import coefficient_map, io_equations
from .model import ModelError, dump_model, load_model, reverse_model
from .rules import RULE_NAMES, godfrey_rules
from .transforms import (
    ParamBijection,
    enumerate_family,
    leak_to_terminal_cycle,
    move_leak,
    shift_detour,
)
from .verify import (
    DEFAULT_SEED,
    PermutationIndistinguishable,
    coefficient_relations,
    compare,
    local_identifiability,
)

EXIT_OK, EXIT_USAGE, EXIT_MODEL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text: str):
    if text == "random":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer or 'random'") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compartment-indist", description="Indistinguishability of linear compartmental models.")
    p.add_argument("--format", choices=("pretty", "json"), default="pretty")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="integer, or 'random'")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("io-eq", help="input-output equations and coefficient map")
    s.add_argument("model")

    for name, helptext in (("compare", "decide indistinguishability of two models"),
                           ("rules", "Godfrey-Chapman necessary conditions")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("model_a")
        s.add_argument("model_b")

    s = sub.add_parser("transform", help="apply a constructive transform")
    s.add_argument("model")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--move-leak", nargs=2, type=int, metavar=("I", "J"))
    g.add_argument("--terminal-cycle", action="store_true")
    g.add_argument("--shift-detour", action="store_true")
    g.add_argument("--reverse", action="store_true")
    s.add_argument("--out", help="write the transformed model here")

    s = sub.add_parser("identifiability", help="generic local identifiability via Jacobian rank")
    s.add_argument("model")
    s.add_argument("--samples", type=int, default=3)

    s = sub.add_parser("relations", help="algebraic relations among the coefficients")
    s.add_argument("model")

    s = sub.add_parser("enumerate", help="closure under the constructive transforms")
    s.add_argument("model")
    s.add_argument("--depth", type=int, default=2)
    return p


# ---------------------------------------------------------------------------
# Commands return (inputs, result, pretty text)


def _load(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise ModelError(f"{path}: cannot read model file: {exc.strerror or exc}") from None
    except ModelError as exc:
        exc.args = (f"{path}: {exc.args[0]}",) + exc.args[1:]
        raise


def cmd_io_eq(args, rng):
    m = _load(args.model)
    eqs = io_equations(m)
    cmap = coefficient_map(m, eqs)
    result = {
        "equations": [{"output": e.output, "vertices": list(e.vertices), "text": e.render()} for e in eqs],
        "coefficients": cmap.to_list(),
    }
    lines = [e.render() for e in eqs]
    lines.append("")
    lines += [f"c{k}: {c['coefficient']}    [{c['monomial']} in eq y{c['equation']}]"
              for k, c in enumerate(result["coefficients"], 1)]
    return {"model": args.model}, result, "\n".join(lines)


def _verdict_text(v) -> str:
    d = v.to_dict()
    lines = [d["kind"] + (f" ({d['reason']})" if "reason" in d else "")]
    if isinstance(v, PermutationIndistinguishable):
        lines += [f"  {src} -> {dst}" for src, dst in d["phi"]]
    for key, val in d.get("witness", {}).items():
        lines.append(f"  {key}: {json.dumps(val)}")
    lines += [f"  note: {n}" for n in d.get("notes", [])]
    return "\n".join(lines)


def cmd_compare(args, rng):
    a, b = _load(args.model_a), _load(args.model_b)
    v = compare(a, b)
    return {"model_a": args.model_a, "model_b": args.model_b}, v.to_dict(), _verdict_text(v)


def cmd_rules(args, rng):
    a, b = _load(args.model_a), _load(args.model_b)
    rep = godfrey_rules(a, b)
    lines = []
    for r in rep.to_dict()["rules"]:
        mark = "pass" if r["passed"] else "FAIL"
        lines.append(f"rule {r['rule']} ({RULE_NAMES[r['rule']]}): {mark}  a={r['witness']['a']} b={r['witness']['b']}")
    return {"model_a": args.model_a, "model_b": args.model_b}, rep.to_dict(), "\n".join(lines)


def _phi_text(phi: ParamBijection) -> str:
    return "\n".join(f"  {src} -> {dst}" for src, dst in phi.to_pairs())


def cmd_transform(args, rng):
    m = _load(args.model)
    if args.move_leak:
        i, j = args.move_leak
        out, phi = move_leak(m, i, j)
        kind = {"transform": "move-leak", "i": i, "j": j}
    elif args.terminal_cycle:
        out, phi = leak_to_terminal_cycle(m)
        kind = {"transform": "terminal-cycle"}
    elif args.shift_detour:
        out, phi = shift_detour(m)
        kind = {"transform": "shift-detour"}
    else:
        out, mapping = reverse_model(m)
        phi = ParamBijection(mapping)
        kind = {"transform": "reverse"}
    text = dump_model(out, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    result = {"model": out.to_dict(), "phi": phi.to_pairs()}
    pretty = f"{text}\nphi:\n{_phi_text(phi)}"
    return {"model": args.model, **kind, "out": args.out}, result, pretty


def cmd_identifiability(args, rng):
    m = _load(args.model)
    res = local_identifiability(m, samples=args.samples, rng=rng)
    pretty = (f"{res.verdict}: Jacobian rank {res.rank} of {res.param_count} parameters "
              f"(max over {res.sample_points_used} points; ranks {list(res.ranks)})")
    return {"model": args.model, "samples": args.samples}, res.to_dict(), pretty


def cmd_relations(args, rng):
    m = _load(args.model)
    cmap = coefficient_map(m)
    rels = coefficient_relations(m)
    result = {
        "coefficients": [{"symbol": f"c{k}", **c} for k, c in enumerate(cmap.to_list(), 1)],
        "relations": [r.render() for r in rels],
    }
    lines = [f"c{k} = {c['coefficient']}" for k, c in enumerate(cmap.to_list(), 1)]
    lines.append("relations:" if rels else "relations: none")
    lines += [f"  {r.render()} = 0" for r in rels]
    return {"model": args.model}, result, "\n".join(lines)


def cmd_enumerate(args, rng):
    if args.depth < 0:
        raise UsageError("--depth must be non-negative")
    m = _load(args.model)
    fam = enumerate_family(m, args.depth)
    result = [{"model": x.to_dict(), "phi": phi.to_pairs()} for x, phi in fam]
    lines = []
    for k, (x, phi) in enumerate(fam):
        lines.append(f"[{k}] {x}")
        lines.append(_phi_text(phi))
    return {"model": args.model, "depth": args.depth}, result, "\n".join(lines)


COMMANDS = {
    "io-eq": cmd_io_eq,
    "compare": cmd_compare,
    "rules": cmd_rules,
    "transform": cmd_transform,
    "identifiability": cmd_identifiability,
    "relations": cmd_relations,
    "enumerate": cmd_enumerate,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        seed = random.SystemRandom().randrange(2**32) if args.seed == "random" else args.seed
        inputs, result, pretty = COMMANDS[args.command](args, random.Random(seed))
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_MODEL
    if args.format == "json":
        inputs = {"seed": seed, **inputs} if args.command == "identifiability" else inputs
        doc = {"kind": args.command, "inputs": inputs, "result": result}
        print(json.dumps(doc, indent=2, sort_keys=True), file=stdout)
    else:
        print(pretty, file=stdout)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
