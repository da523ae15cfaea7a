"""Command-line entry point.

Exit codes: 0 certified/success, 2 refuted, 3 inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .chain import build_chain_graph, decompose, r_delta, verify_cyclic_properties
from .scenarios import SCENARIOS, verify_example
from .shadowing import (CERTIFIED, DEFAULT_STATE_CAP, INCONCLUSIVE, PERIODIC, PSEUDO, REFUTED, STRICT,
                        check_periodic_shadowing, check_shadowing, replay_periodic_certificate,
                        replay_periodic_refutation, replay_shadowing_refutation)
from .space import as_scalar, format_scalar, random_interval_model
from .stability import stability_probe, verify_semiconjugacy
from .systems import (SystemFamily, SystemLevel, build_identity, build_odometer, build_paper_example,
                      embed_binary_odometer, identity_model, system_power)

EXIT_OK, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


def _scalar(text: str) -> Fraction:
    try:
        return as_scalar(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(doc: dict, output: str | None):
    text = dump(doc)
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_system(name: str, level: int, m=None, atoms=None, seed: int = 0) -> SystemFamily:
    if name == "odometer":
        chain = [int(x) for x in (m or ",".join(str(2 ** k) for k in range(1, level + 1))).split(",")]
        return build_odometer(chain, level)
    if name == "paper-example":
        return build_paper_example(level)
    if name == "embed-binary-odometer":
        return embed_binary_odometer(level)
    if name == "identity":
        n = atoms or 2
        return SystemFamily((build_identity(identity_model(n)),), (), None)
    if name == "random-identity":
        import random
        return SystemFamily((build_identity(random_interval_model(random.Random(seed), atoms or 4)),), (), None)
    raise UsageError(f"unknown system {name!r}")


def load_family(args) -> tuple[SystemFamily, dict]:
    """System from --system-file or from a built-in name; returns it with its input record."""
    if getattr(args, "system_file", None):
        with open(args.system_file) as fh:
            doc = json.load(fh)
        family = SystemFamily.from_json(doc)
        record = {"system_file": doc}
    elif getattr(args, "system", None):
        family = build_system(args.system, args.level, getattr(args, "m", None),
                              getattr(args, "atoms", None), args.seed)
        record = {"system": args.system, "level": args.level, "m": getattr(args, "m", None),
                  "atoms": getattr(args, "atoms", None)}
        if args.system == "random-identity":
            record["seed"] = args.seed
    else:
        raise UsageError("give --system-file or --system")
    power = getattr(args, "power", 1) or 1
    if power != 1:
        family = system_power(family, power)
        record["power"] = power
    return family, record


def _exit_for(result: str) -> int:
    return {CERTIFIED: EXIT_OK, REFUTED: EXIT_REFUTED}.get(result, EXIT_INCONCLUSIVE)


def cmd_build(args) -> tuple[dict, int]:
    family = build_system(args.system, args.level, args.m, args.atoms, args.seed)
    return family.to_json(), EXIT_OK


def cmd_analyze_chain(args) -> tuple[dict, int]:
    family, record = load_family(args)
    sys_ = family.finest
    graph = build_chain_graph(sys_, args.delta, args.mode)
    decomp = decompose(graph)
    report = verify_cyclic_properties(decomp, graph, sys_ if args.mode == "existential" else None)
    doc = {"command": "analyze chain", "inputs": {**record, "delta": format_scalar(args.delta),
                                                  "mode": args.mode},
           **decomp.to_json(), "properties": report.to_json()}
    if args.mode == "existential":
        doc["r_delta"] = format_scalar(r_delta(sys_, args.delta))
    return doc, EXIT_OK if report.ok else EXIT_REFUTED


def cmd_check(args) -> tuple[dict, int]:
    family, record = load_family(args)
    sys_ = family.finest
    inputs = {**record, "epsilon": format_scalar(args.eps), "delta": format_scalar(args.delta),
              "state_cap": args.state_cap}
    if args.kind == "shadowing":
        verdict = check_shadowing(sys_, args.eps, args.delta, args.state_cap)
    else:
        variant = STRICT if args.strict else PSEUDO if args.pseudo else PERIODIC
        inputs["variant"] = variant
        verdict = check_periodic_shadowing(sys_, args.eps, args.delta, variant, args.state_cap)
    doc = {"command": f"check {args.kind}", "inputs": inputs, **verdict.to_json()}
    return doc, _exit_for(verdict.result)


def cmd_stability_probe(args) -> tuple[dict, int]:
    family, record = load_family(args)
    rep = stability_probe(family, args.eps, args.seed, args.samples, state_cap=args.state_cap)
    doc = {"command": "stability probe", "inputs": {**record, "epsilon": format_scalar(args.eps),
                                                    "seed": args.seed, "samples": args.samples},
           **rep.to_json()}
    code = {"constructive": EXIT_OK, "refuted_by_necessary_condition": EXIT_REFUTED}.get(rep.mode, EXIT_INCONCLUSIVE)
    return doc, code


def cmd_stability_conjugacy(args) -> tuple[dict, int]:
    def level(path):
        with open(path) as fh:
            return SystemFamily.from_json(json.load(fh)).finest
    f, g = level(args.f), level(args.g)
    with open(args.h) as fh:
        hdoc = json.load(fh)
    h = hdoc["h"] if isinstance(hdoc, dict) else hdoc
    sc = verify_semiconjugacy(f, g, h)
    doc = {"command": "stability conjugacy", "inputs": {"f": args.f, "g": args.g, "h": list(h)},
           **sc.to_json()}
    return doc, EXIT_OK if sc.equation_verified else EXIT_REFUTED


def cmd_verify_example(args) -> tuple[dict, int]:
    if args.level < 2:
        raise UsageError("verify-example needs --level >= 2")
    res = verify_example(args.level, args.eps or None, args.state_cap)
    doc = {"command": "verify-example", **res.to_json(args.timing)}
    return doc, EXIT_OK if res.passed else EXIT_REFUTED


def cmd_scenarios(args) -> tuple[dict, int]:
    res = SCENARIOS[args.name]()
    doc = {"command": "scenarios", **res.to_json(args.timing)}
    return doc, EXIT_OK if res.passed else EXIT_REFUTED


def _rebuild(inputs: dict) -> SystemFamily:
    if "system_file" in inputs:
        family = SystemFamily.from_json(inputs["system_file"])
    else:
        family = build_system(inputs["system"], inputs["level"], inputs.get("m"), inputs.get("atoms"),
                              inputs.get("seed", 0))
    if inputs.get("power", 1) != 1:
        family = system_power(family, inputs["power"])
    return family


def cmd_replay(args) -> tuple[dict, int]:
    """Independently re-check the witness or certificates embedded in a report."""
    with open(args.report) as fh:
        doc = json.load(fh)
    command = doc.get("command", "")
    checks = []
    if command.startswith("check"):
        inputs = doc["inputs"]
        sys_ = _rebuild(inputs).finest
        eps, delta = inputs["epsilon"], inputs["delta"]
        if doc["result"] == REFUTED and command == "check shadowing":
            checks.append(("refutation witness", replay_shadowing_refutation(sys_, eps, delta, doc["witness"])))
        elif doc["result"] == REFUTED:
            checks.append(("refutation witness",
                           replay_periodic_refutation(sys_, eps, delta, inputs["variant"], doc["witness"])))
        elif doc["result"] == CERTIFIED and command == "check periodic":
            for c in doc["certificate"]["components"]:
                checks.append((f"cycle at {c['cycle'][0]}", replay_periodic_certificate(sys_, eps, delta, c)))
        # the verdict itself is re-derived from the embedded inputs
        if command == "check shadowing":
            again = check_shadowing(sys_, eps, delta, inputs.get("state_cap", DEFAULT_STATE_CAP))
        else:
            again = check_periodic_shadowing(sys_, eps, delta, inputs["variant"],
                                             inputs.get("state_cap", DEFAULT_STATE_CAP))
        checks.append(("verdict reproduced", again.result == doc["result"]))
    elif command == "stability conjugacy":
        checks.append(("recorded", doc["equation_verified"]))
    elif command in ("verify-example", "scenarios"):
        for v in doc["verdicts"]:
            checks.append((v["name"], v["passed"]))
    else:
        raise UsageError(f"cannot replay report of command {command!r}")
    ok = all(passed for _, passed in checks)
    out = {"command": "replay", "report": args.report, "replayed": command,
           "checks": [{"name": n, "passed": p} for n, p in checks], "result": "valid" if ok else "invalid"}
    return out, EXIT_OK if ok else EXIT_REFUTED


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)
    common.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--system-file")
    source.add_argument("--system", choices=["odometer", "paper-example", "identity",
                                             "embed-binary-odometer", "random-identity"])
    source.add_argument("--level", type=int, default=4)
    source.add_argument("--m", help="periodic structure, e.g. 2,4,8")
    source.add_argument("--atoms", type=int)
    source.add_argument("--power", type=int, default=1)

    parser = argparse.ArgumentParser(prog="zerodim", parents=[common],
                                     description="Exact shadowing and stability checks on zero-dimensional systems.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", parents=[common])
    p.add_argument("--system", required=True,
                   choices=["odometer", "paper-example", "identity", "embed-binary-odometer", "random-identity"])
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--m")
    p.add_argument("--atoms", type=int)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("analyze")
    asub = p.add_subparsers(dest="what", required=True)
    q = asub.add_parser("chain", parents=[common, source])
    q.add_argument("--delta", type=_scalar, required=True)
    q.add_argument("--mode", choices=["existential", "universal"], default="existential")
    q.set_defaults(func=cmd_analyze_chain)

    p = sub.add_parser("check")
    csub = p.add_subparsers(dest="kind", required=True)
    for kind in ("shadowing", "periodic"):
        q = csub.add_parser(kind, parents=[common, source])
        q.add_argument("--eps", type=_scalar, required=True)
        q.add_argument("--delta", type=_scalar, required=True)
        if kind == "periodic":
            g = q.add_mutually_exclusive_group()
            g.add_argument("--strict", action="store_true")
            g.add_argument("--pseudo", action="store_true")
        q.set_defaults(func=cmd_check)

    p = sub.add_parser("stability")
    ssub = p.add_subparsers(dest="what", required=True)
    q = ssub.add_parser("probe", parents=[common, source])
    q.add_argument("--eps", type=_scalar, required=True)
    q.add_argument("--samples", type=int, default=50)
    q.set_defaults(func=cmd_stability_probe)
    q = ssub.add_parser("conjugacy", parents=[common])
    q.add_argument("--f", required=True)
    q.add_argument("--g", required=True)
    q.add_argument("--h", required=True)
    q.set_defaults(func=cmd_stability_conjugacy)

    p = sub.add_parser("verify-example", parents=[common])
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--eps", type=_scalar, action="append")
    p.set_defaults(func=cmd_verify_example)

    p = sub.add_parser("scenarios", parents=[common])
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("replay", parents=[common])
    p.add_argument("report")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        doc, code = args.func(args)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    emit(doc, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
