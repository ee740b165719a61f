"""Line-oriented system files.

    alphabet a b c
    vars X Y Z
    rule r1 : X -a-> Y.(Z)
    accepting 1 : r1

``#`` starts a comment.  Constructed systems are dumped with set labels
(``-{1,2}->``) or pair labels (``-{1}/{}->``); both are read back.
"""

from __future__ import annotations

import re
from pathlib import Path

from .system import Action, KLabel, KPair, Mbrs, Rule, fmt_kset
from .terms import RESERVED, TermSyntaxError, parse_term

_RULE = re.compile(r"rule\s+(\S+)\s*:\s*(.+?)\s*-([^\s>]+)->\s*(.+?)\s*$")
_ACC = re.compile(r"accepting\s+(\d+)\s*:(.*)$")
_KSET = re.compile(r"\{\s*(\d+(?:\s*,\s*\d+)*)?\s*\}")


class SystemSyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.msg, self.line, self.col = msg, line, col

    def located(self, path) -> str:
        """``path:line:col: message`` for command-line reporting."""
        where = f"{self.line}:{self.col}" if self.line else "1:1"
        return f"{path}:{where}: {self.msg}"


def _parse_kset(text: str) -> frozenset[int] | None:
    m = _KSET.fullmatch(text)
    if not m:
        return None
    body = m.group(1)
    return frozenset(int(x) for x in body.split(",")) if body else frozenset()


def _parse_label(text: str):
    if "/" in text:
        left, right = text.split("/", 1)
        k, kw = _parse_kset(left), _parse_kset(right)
        if k is None or kw is None:
            raise SystemSyntaxError(f"bad pair label {text!r}")
        return KPair(k, kw)
    if text.startswith("{"):
        k = _parse_kset(text)
        if k is None:
            raise SystemSyntaxError(f"bad set label {text!r}")
        return KLabel(k)
    if not re.fullmatch(r"[A-Za-z0-9_]+", text):
        raise SystemSyntaxError(f"bad action {text!r}")
    return Action(text)


def parse_system(text: str) -> Mbrs:
    alphabet: list[str] = []
    variables: list[str] = []
    rules: list[Rule] = []
    comps: dict[int, set[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word = line.split(None, 1)[0]
        indent = len(raw) - len(raw.lstrip())
        col = 1
        try:
            match word:
                case "alphabet":
                    alphabet.extend(line.split()[1:])
                case "vars":
                    for v in line.split()[1:]:
                        if v in RESERVED or not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", v):
                            raise SystemSyntaxError(f"bad variable name {v!r}")
                        variables.append(v)
                case "rule":
                    m = _RULE.match(line)
                    if not m:
                        raise SystemSyntaxError("expected 'rule <id> : <term> -<label>-> <term>'")
                    rid, lhs, label, rhs = m.groups()
                    col = indent + m.start(3) + 1
                    lab = _parse_label(label)
                    if isinstance(lab, Action) and alphabet and lab.name not in alphabet:
                        raise SystemSyntaxError(f"action {lab.name!r} not in the alphabet")
                    col = indent + m.start(2) + 1
                    left = parse_term(lhs, variables)
                    col = indent + m.start(4) + 1
                    rules.append(Rule(rid, left, lab, parse_term(rhs, variables)))
                case "accepting":
                    m = _ACC.match(line)
                    if not m or int(m.group(1)) < 1:
                        raise SystemSyntaxError("expected 'accepting <i> : <rule ids>'")
                    comps.setdefault(int(m.group(1)), set()).update(m.group(2).split())
                case _:
                    raise SystemSyntaxError(f"unknown directive {word!r}")
        except TermSyntaxError as exc:
            at = col + exc.pos if exc.pos >= 0 else col
            raise SystemSyntaxError(str(exc), lineno, at) from None
        except (SystemSyntaxError, ValueError) as exc:
            raise SystemSyntaxError(getattr(exc, "msg", str(exc)), lineno, col) from None
    n = max(comps, default=0)
    labels = {Action(a) for a in alphabet} | {r.label for r in rules}
    try:
        return Mbrs(
            frozenset(variables),
            frozenset(labels),
            tuple(rules),
            tuple(frozenset(comps.get(i, ())) for i in range(1, n + 1)),
        )
    except ValueError as exc:
        raise SystemSyntaxError(str(exc)) from None


def load_system(path: str | Path) -> Mbrs:
    return parse_system(Path(path).read_text(encoding="utf-8"))


def dump_system(m: Mbrs) -> str:
    actions = sorted(a.name for a in m.alphabet if isinstance(a, Action))
    lines = []
    if actions:
        lines.append("alphabet " + " ".join(actions))
    lines.append("vars " + " ".join(sorted(m.vars - set(RESERVED))))
    lines.extend(f"rule {r}" for r in m.rules)
    for i, comp in enumerate(m.components, 1):
        ids = [r.id for r in m.rules if r.id in comp]
        lines.append(f"accepting {i} :" + "".join(f" {x}" for x in ids))
    return "\n".join(lines) + "\n"


__all__ = ["parse_system", "load_system", "dump_system", "SystemSyntaxError", "fmt_kset"]
