"""Priority-ordered rule engine and its structured-text rule format.

Rules are deliberately a white box: one line each, a boolean condition
over named process variables, and a named action. Evaluation is a single
forward pass per cycle in ascending priority; within a priority tier the
first matching rule wins and the rest of the tier is skipped, so a tier
works like an ordered SELECT-CASE. Different tiers fire independently.

Rule file grammar, one rule per line::

    rule <id> priority=<n> when <condition> then <action> [arg ...]

Conditions support: names, numeric/string literals, True/False,
comparisons (== != < <= > >=), and/or/not, + - * / and parentheses.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field
from typing import Any, Callable

_ALLOWED_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}

_ALLOWED_CMPOPS = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


class RuleSyntaxError(ValueError):
    pass


class UnknownVariable(KeyError):
    pass


def compile_condition(source: str) -> Callable[[dict[str, Any]], bool]:
    """Compile a side-effect-free boolean expression over a namespace."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as e:
        raise RuleSyntaxError(f"bad condition {source!r}: {e}") from None

    def check(node: ast.AST) -> None:
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BoolOp):
            for v in node.values:
                check(v)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.Not, ast.USub)):
            check(node.operand)
        elif isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.Compare):
            if not all(type(op) in _ALLOWED_CMPOPS for op in node.ops):
                raise RuleSyntaxError(f"operator not allowed in {source!r}")
            check(node.left)
            for c in node.comparators:
                check(c)
        elif isinstance(node, ast.Name):
            pass
        elif isinstance(node, ast.Constant) and isinstance(
            node.value, (int, float, str, bool)
        ):
            pass
        else:
            raise RuleSyntaxError(
                f"{type(node).__name__} not allowed in condition {source!r}"
            )

    check(tree)

    def evaluate(node: ast.AST, ns: dict[str, Any]) -> Any:
        if isinstance(node, ast.Expression):
            return evaluate(node.body, ns)
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                result = True
                for v in node.values:
                    result = bool(evaluate(v, ns))
                    if not result:
                        return False
                return result
            result = False
            for v in node.values:
                result = bool(evaluate(v, ns))
                if result:
                    return True
            return result
        if isinstance(node, ast.UnaryOp):
            val = evaluate(node.operand, ns)
            return (not val) if isinstance(node.op, ast.Not) else -val
        if isinstance(node, ast.BinOp):
            return _ALLOWED_BINOPS[type(node.op)](
                evaluate(node.left, ns), evaluate(node.right, ns)
            )
        if isinstance(node, ast.Compare):
            left = evaluate(node.left, ns)
            for op, comparator in zip(node.ops, node.comparators):
                right = evaluate(comparator, ns)
                if not _ALLOWED_CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.Name):
            if node.id == "True":
                return True
            if node.id == "False":
                return False
            if node.id not in ns:
                raise UnknownVariable(node.id)
            return ns[node.id]
        if isinstance(node, ast.Constant):
            return node.value
        raise AssertionError(f"unreachable node {node!r}")

    def fn(ns: dict[str, Any]) -> bool:
        return bool(evaluate(tree, ns))

    fn.source = source  # type: ignore[attr-defined]
    return fn


@dataclass(frozen=True)
class Rule:
    id: str
    priority: int
    condition: Callable[[dict[str, Any]], bool]
    action: str
    args: tuple[str, ...] = ()
    source: str = ""


@dataclass(frozen=True)
class FiredRule:
    rule: Rule


def parse_rules(text: str) -> list[Rule]:
    rules = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.startswith("rule "):
            raise RuleSyntaxError(f"line {lineno}: expected 'rule <id> ...'")
        rest = line[5:]
        try:
            head, when_part = rest.split(" when ", 1)
            cond_src, then_part = when_part.split(" then ", 1)
        except ValueError:
            raise RuleSyntaxError(
                f"line {lineno}: expected 'rule <id> priority=<n> when <cond> then <action>'"
            ) from None
        head_tokens = head.split()
        if len(head_tokens) != 2 or not head_tokens[1].startswith("priority="):
            raise RuleSyntaxError(f"line {lineno}: expected '<id> priority=<n>'")
        rule_id = head_tokens[0]
        if rule_id in seen:
            raise RuleSyntaxError(f"line {lineno}: duplicate rule id {rule_id!r}")
        seen.add(rule_id)
        try:
            priority = int(head_tokens[1][9:])
        except ValueError:
            raise RuleSyntaxError(f"line {lineno}: bad priority") from None
        action_tokens = then_part.split()
        if not action_tokens:
            raise RuleSyntaxError(f"line {lineno}: missing action")
        rules.append(
            Rule(
                id=rule_id,
                priority=priority,
                condition=compile_condition(cond_src.strip()),
                action=action_tokens[0],
                args=tuple(action_tokens[1:]),
                source=line,
            )
        )
    return rules


def load_rules(path) -> list[Rule]:
    with open(path) as f:
        return parse_rules(f.read())


class RuleEngine:
    """Single-pass forward evaluation, one winner per priority tier."""

    def __init__(self, rules: list[Rule]):
        order = {id(r): i for i, r in enumerate(rules)}
        self.rules = sorted(rules, key=lambda r: (r.priority, order[id(r)]))

    def evaluate(
        self, namespace: dict[str, Any], on_error=None
    ) -> list[FiredRule]:
        fired: list[FiredRule] = []
        current_tier: int | None = None
        tier_won = False
        for rule in self.rules:
            if rule.priority != current_tier:
                current_tier = rule.priority
                tier_won = False
            if tier_won:
                continue
            try:
                matched = rule.condition(namespace)
            except (UnknownVariable, ArithmeticError, TypeError) as e:
                if on_error is not None:
                    on_error(rule, e)
                continue
            if matched:
                fired.append(FiredRule(rule))
                tier_won = True
        return fired


#: The shipped rule set. Tier 10 selects the major state (order within the
#: tier is the precedence: trouble beats directives beats optimization);
#: tier 20 handles maintenance economics; tier 90 reports.
DEFAULT_RULES_TEXT = """\
rule stator_trouble    priority=10 when alarm_stator then enter_temperature_trouble
rule vibration_trouble priority=10 when alarm_vibration then enter_vibration_trouble
rule plant_flow_change priority=10 when flow_directive_pending then enter_plant_flow
rule generation_goal   priority=10 when generation_directive_active then enter_generation
rule optimize          priority=10 when True then enter_steady_state

rule eject_worthwhile  priority=20 when mode == 'steady_state' and eject_beneficial and not settling then request_load_eject

rule report            priority=90 when True then emit_status
"""


def default_rules() -> list[Rule]:
    return parse_rules(DEFAULT_RULES_TEXT)
