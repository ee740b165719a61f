"""``prs-mc`` command-line front end.

Exit status: 0 Yes, 1 No, 2 Unknown, 3 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

from .altl import FormulaSyntaxError, NotInFragment, parse_formula, show
from .construct import reachable_rules
from .decide import Decider, model_check_infinite
from .gen import random_formula, random_mbrs
from .oracle import DEPTH_BUDGET, bf_finite_accepting, bf_infinite_accepting, bf_model_check, explore
from .sysfile import SystemSyntaxError, load_system
from .system import Mbrs, is_normal_form, subsets
from .terms import var
from .witness import check_witness, witness_from_json, witness_json

log = logging.getLogger("prsmc")

EXIT = {"Yes": 0, "No": 1, "Unknown": 2}
USAGE = 3
FIXTURE_DIR = Path(__file__).parent / "fixtures"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _default_budget() -> int:
    raw = os.environ.get("PRSMC_BUDGET_NODES")
    if raw is None:
        return 20000
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"PRSMC_BUDGET_NODES must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("PRSMC_BUDGET_NODES must be positive")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _kset(text: str | None) -> frozenset[int] | None:
    if text is None:
        return None
    text = text.strip().strip("{}")
    if not text:
        return frozenset()
    try:
        return frozenset(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad component list {text!r}; expected e.g. 1,2") from None


def _load(path: str) -> Mbrs:
    p = Path(path)
    if not p.exists():
        for bundled in (FIXTURE_DIR / path, FIXTURE_DIR / f"{path}.prs"):
            if p.name == path and bundled.is_file():
                p = bundled
                break
    try:
        return load_system(p)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except SystemSyntaxError as exc:
        raise UsageError(exc.located(path)) from None


def _check_range(m: Mbrs, k, what: str) -> None:
    bad = sorted(i for i in k if not 1 <= i <= m.n)
    if bad:
        raise UsageError(f"{what} index {bad[0]} outside 1..{m.n}")


def _start(m: Mbrs, x: str) -> str:
    if x not in m.vars:
        raise UsageError(f"unknown start variable {x!r}")
    return x


def _report(args, v) -> int:
    if args.validate and v.witness is not None:
        data = witness_json(v)
        check_witness(args.system_obj, witness_from_json(data, args.system_obj.vars | {"_ZF", "_Zinf"}))
    if args.json:
        print(json.dumps(witness_json(v), indent=2))
    else:
        print(v)
        if v.witness is not None:
            w = witness_json(v)
            print(f"start: {w['start']}")
            for s in w["steps"]:
                print(f"  --{s['rule']}--> {s['term_after']}")
            if "lasso" in w:
                print(f"lasso: stem {' '.join(w['lasso']['stem'])} ; cycle {' '.join(w['lasso']['cycle'])}")
    return EXIT[v.kind]


# ------------------------------------------------------------ commands


def cmd_check(args) -> int:
    m = args.system_obj
    x = _start(m, args.start)
    if not is_normal_form(m):
        raise UsageError("system is not in normal form")
    try:
        phi = parse_formula(args.formula)
        v = model_check_infinite(m, x, phi, args.node_budget)
    except FormulaSyntaxError as exc:
        raise UsageError(f"formula: {exc}") from None
    except NotInFragment as exc:
        raise UsageError(f"not in fragment: {exc}") from None
    return _report(args, v)


def cmd_decide(args) -> int:
    m = args.system_obj
    x = _start(m, args.start)
    if not is_normal_form(m):
        raise UsageError("system is not in normal form")
    k, kw = _kset(args.K), _kset(args.Komega)
    if k is None:
        raise UsageError("--K is required")
    _check_range(m, k, "--K")
    d = Decider(reachable_rules(m, x), args.node_budget)
    if kw is None:
        v = d.problem1(x, k)
    else:
        _check_range(m, kw, "--Komega")
        v = d.problem2(x, k, kw)
    return _report(args, v)


def cmd_dump(args) -> int:
    m = args.system_obj
    if not is_normal_form(m):
        raise UsageError("system is not in normal form")
    k = _kset(args.K)
    if k is None:
        raise UsageError("--K is required")
    _check_range(m, k, "--K")
    d = Decider(m, args.node_budget)
    match args.what:
        case "par":
            cm = d.mk(k)
            out = cm.dump()
        case "seq":
            cm = d.seq_system(k)
            out = cm.dump()
        case "paromega":
            kw = _kset(args.Komega)
            if kw is None:
                raise UsageError("--Komega is required for --what paromega")
            _check_range(m, kw, "--Komega")
            if not kw <= k:
                raise UsageError("--Komega must be a subset of --K")
            cm, m_inf = d.omega(k, kw)
            inf_lines = [f"# infinitely-often {i} :" + "".join(f" {r}" for r in sorted(c))
                         for i, c in enumerate(m_inf.components, 1)]
            out = cm.dump() + "\n".join(inf_lines) + "\n"
    if cm.undersaturated:
        print("warning: construction is under-saturated (an engine query was inconclusive)", file=sys.stderr)
    sys.stdout.write(out)
    return 0


def oracle_compare(seed: int, count: int, node_budget: int = 5000, depth_budget: int = 12,
                   max_vars: int = 5, max_rules: int = 8, max_components: int = 2, formulas: int = 1):
    """Engine-vs-oracle comparison on ``count`` random oracle-decisive systems.
    Returns (report lines, number of disagreements)."""
    rng = random.Random(seed)
    lines, bad, used, tried = [], 0, 0, 0
    while used < count and tried < 50 * count:
        tried += 1
        m = random_mbrs(rng, max_vars, max_rules, max_components)
        if not explore(m, var("X"), node_budget).closed:
            continue
        used += 1
        d = Decider(reachable_rules(m, "X"), node_budget)
        for k in subsets(range(1, m.n + 1)):
            ref = bf_finite_accepting(m, "X", k, depth_budget, node_budget)
            if not ref.unknown:
                v = d.problem1("X", k)
                bad += _compare(lines, used, f"problem1 K={sorted(k)}", v, ref)
            for kw in subsets(k):
                ref = bf_infinite_accepting(m, "X", k, kw, node_budget)
                v = d.problem2("X", k, kw)
                bad += _compare(lines, used, f"problem2 K={sorted(k)} Kw={sorted(kw)}", v, ref)
        actions = sorted(a.name for a in m.alphabet)
        for _ in range(formulas):
            phi = random_formula(rng, actions, 4)
            ref = bf_model_check(m, "X", phi, node_budget)
            v = model_check_infinite(m, "X", phi, node_budget)
            bad += _compare(lines, used, f"check {show(phi)}", v, ref)
    lines.append(f"systems {used}, disagreements {bad}")
    return lines, bad


def _compare(lines, i, what, v, ref) -> int:
    same = v.kind == ref.kind
    lines.append(f"#{i} {what}: engine {v.kind}, oracle {ref.kind}{'' if same else '  DISAGREE'}")
    return 0 if same else 1


def cmd_oracle_compare(args) -> int:
    lines, bad = oracle_compare(args.seed, args.count, min(args.node_budget, 5000), args.depth_budget,
                                max_components=args.max_components)
    print("\n".join(lines))
    return 1 if bad else 0


# ------------------------------------------------------------ arguments


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prs-mc", description="Acceptance and model checking for process rewrite systems in normal form.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, system=True):
        if system:
            sp.add_argument("-s", "--system", required=True, help="system file (or bundled name S1, S1prime, S2)")
        sp.add_argument("--node-budget", type=_positive, default=None, help="state budget for the engines")
        sp.add_argument("--depth-budget", type=_positive, default=DEPTH_BUDGET, help="depth bound for the bounded oracle")
        sp.add_argument("--json", action="store_true", help="print the verdict and witness as JSON")
        sp.add_argument("--validate", action="store_true", help="replay the printed witness before exiting")

    c = sub.add_parser("check", help="does every infinite run from X satisfy the formula?")
    common(c)
    c.add_argument("-x", "--start", required=True)
    c.add_argument("-f", "--formula", required=True)
    c.set_defaults(run=cmd_check)

    d = sub.add_parser("decide", help="accepting finite (--K) or infinite (--K, --Komega) derivations")
    common(d)
    d.add_argument("-x", "--start", required=True)
    d.add_argument("--K", required=True)
    d.add_argument("--Komega")
    d.set_defaults(run=cmd_decide)

    u = sub.add_parser("dump", help="print a constructed system")
    common(u)
    u.add_argument("--what", choices=("par", "paromega", "seq"), default="par")
    u.add_argument("--K", required=True)
    u.add_argument("--Komega")
    u.set_defaults(run=cmd_dump)

    o = sub.add_parser("oracle-compare", help="differential test against the bounded oracle")
    common(o, system=False)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--count", type=_positive, default=20)
    o.add_argument("--max-components", type=int, default=2, choices=range(0, 5))
    o.set_defaults(run=cmd_oracle_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.node_budget is None:
            args.node_budget = _default_budget()
        if getattr(args, "system", None):
            args.system_obj = _load(args.system)
        return args.run(args)
    except UsageError as exc:
        print(f"prs-mc: {exc}", file=sys.stderr)
        return USAGE
    except ValueError as exc:
        print(f"prs-mc: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
