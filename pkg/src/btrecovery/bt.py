"""Reactive behavior-tree engine.

Trees are built from five node kinds: sequence (logical AND), selector
(logical OR), action, condition, and decorator.  A tick re-evaluates the whole
tree from the root, so composites keep no memory between ticks; the only
stateful construct is the retry decorator, whose counter is scoped to a single
traversal.

Action callables receive the :class:`TickContext` and return a
:class:`NodeStatus`; condition callables return a plain bool and therefore can
never report RUNNING.

Trees serialize to a JSON document (see :func:`tree_to_doc`); leaf callables
are referenced by binding name and resolved against a registry when loading.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional


class NodeStatus(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class NodeKind(Enum):
    SEQUENCE = "sequence"
    SELECTOR = "selector"
    ACTION = "action"
    CONDITION = "condition"
    DECORATOR = "decorator"


class MalformedTree(Exception):
    """Composite without children, or decorator without exactly one child."""


class UnknownBinding(Exception):
    """Tree document references a leaf binding absent from the registry."""


@dataclass
class DecoratorRule:
    """Status transform applied by a decorator node.

    ``retries > 1`` re-ticks the child on FAILURE up to ``retries`` total
    child ticks within one traversal.
    """

    name: str
    retries: int = 1

    def transform(self, status: NodeStatus) -> NodeStatus:
        if self.name == "inverter":
            if status is NodeStatus.SUCCESS:
                return NodeStatus.FAILURE
            if status is NodeStatus.FAILURE:
                return NodeStatus.SUCCESS
            return NodeStatus.RUNNING
        if self.name == "force_success":
            if status is NodeStatus.FAILURE:
                return NodeStatus.SUCCESS
            return status
        if self.name == "retry":
            return status
        raise MalformedTree(f"unknown decorator rule {self.name!r}")


INVERTER = DecoratorRule("inverter")
FORCE_SUCCESS = DecoratorRule("force_success")


def retry(n: int) -> DecoratorRule:
    if n < 1:
        raise MalformedTree("retry count must be >= 1")
    return DecoratorRule("retry", retries=n)


@dataclass
class BtNode:
    kind: NodeKind
    name: str
    children: tuple["BtNode", ...] = ()
    action_fn: Optional[Callable[["TickContext"], NodeStatus]] = None
    condition_fn: Optional[Callable[["TickContext"], bool]] = None
    rule: Optional[DecoratorRule] = None
    # (binding name, arguments) for serialization; None on hand-built leaves
    binding: Optional[str] = None
    args: Optional[dict] = None


@dataclass
class TickContext:
    """Mutable carrier threaded through one or more ticks.

    ``world`` is whatever state the leaf callables operate on; the engine
    never touches it.  ``trace`` appends one (node name, status) pair per
    node visit, in visit order.
    """

    world: Any = None
    tick_index: int = 0
    trace: list = field(default_factory=list)


def sequence(name: str, *children: BtNode) -> BtNode:
    return BtNode(NodeKind.SEQUENCE, name, children=tuple(children))


def selector(name: str, *children: BtNode) -> BtNode:
    return BtNode(NodeKind.SELECTOR, name, children=tuple(children))


def action(name: str, fn: Callable[[TickContext], NodeStatus],
           binding: str | None = None, args: dict | None = None) -> BtNode:
    return BtNode(NodeKind.ACTION, name, action_fn=fn, binding=binding, args=args)


def condition(name: str, fn: Callable[[TickContext], bool],
              binding: str | None = None, args: dict | None = None) -> BtNode:
    return BtNode(NodeKind.CONDITION, name, condition_fn=fn, binding=binding, args=args)


def decorator(name: str, rule: DecoratorRule, child: BtNode) -> BtNode:
    return BtNode(NodeKind.DECORATOR, name, children=(child,), rule=rule)


def validate(root: BtNode) -> None:
    """Raise MalformedTree unless every node satisfies its arity contract."""
    if root.kind in (NodeKind.SEQUENCE, NodeKind.SELECTOR):
        if not root.children:
            raise MalformedTree(f"{root.kind.value} node {root.name!r} has no children")
    elif root.kind is NodeKind.DECORATOR:
        if len(root.children) != 1:
            raise MalformedTree(f"decorator {root.name!r} must have exactly 1 child")
        if root.rule is None:
            raise MalformedTree(f"decorator {root.name!r} has no rule")
    else:
        if root.children:
            raise MalformedTree(f"leaf {root.name!r} cannot have children")
        if root.kind is NodeKind.ACTION and root.action_fn is None:
            raise MalformedTree(f"action {root.name!r} has no callable")
        if root.kind is NodeKind.CONDITION and root.condition_fn is None:
            raise MalformedTree(f"condition {root.name!r} has no callable")
    for child in root.children:
        validate(child)


def combine_sequence(statuses) -> NodeStatus:
    """Left-to-right AND: first non-SUCCESS wins, SUCCESS iff all succeed."""
    for status in statuses:
        if status is not NodeStatus.SUCCESS:
            return status
    return NodeStatus.SUCCESS


def combine_selector(statuses) -> NodeStatus:
    """Left-to-right OR: first non-FAILURE wins, FAILURE iff all fail."""
    for status in statuses:
        if status is not NodeStatus.FAILURE:
            return status
    return NodeStatus.FAILURE


def tick(root: BtNode, ctx: TickContext) -> NodeStatus:
    """Run one depth-first traversal and return the root status.

    Children of a composite are generated lazily, so nodes to the right of
    the deciding child are never visited and never appear in the trace.
    """
    validate(root)
    return _tick(root, ctx)


def _tick(node: BtNode, ctx: TickContext) -> NodeStatus:
    if node.kind is NodeKind.SEQUENCE:
        status = combine_sequence(_tick(c, ctx) for c in node.children)
    elif node.kind is NodeKind.SELECTOR:
        status = combine_selector(_tick(c, ctx) for c in node.children)
    elif node.kind is NodeKind.ACTION:
        status = node.action_fn(ctx)
        if not isinstance(status, NodeStatus):
            raise MalformedTree(f"action {node.name!r} returned {status!r}")
    elif node.kind is NodeKind.CONDITION:
        status = NodeStatus.SUCCESS if node.condition_fn(ctx) else NodeStatus.FAILURE
    else:  # decorator
        child = node.children[0]
        status = _tick(child, ctx)
        attempts = 1
        while (node.rule.retries > attempts and status is NodeStatus.FAILURE):
            status = _tick(child, ctx)
            attempts += 1
        status = node.rule.transform(status)
    ctx.trace.append((node.name, status))
    return status


# --- serialization ------------------------------------------------------

def tree_to_doc(root: BtNode) -> dict:
    """Dump a tree to a plain dict (JSON-compatible).

    Leaves must carry a binding name; hand-built leaves with bare callables
    are not serializable.
    """
    if root.kind in (NodeKind.SEQUENCE, NodeKind.SELECTOR):
        return {"kind": root.kind.value, "name": root.name,
                "children": [tree_to_doc(c) for c in root.children]}
    if root.kind is NodeKind.DECORATOR:
        rule = root.rule.name if root.rule.name != "retry" else ["retry", root.rule.retries]
        return {"kind": "decorator", "name": root.name, "rule": rule,
                "child": tree_to_doc(root.children[0])}
    if root.binding is None:
        raise MalformedTree(f"leaf {root.name!r} has no binding name; cannot serialize")
    return {"kind": root.kind.value, "name": root.name,
            "binding": root.binding, "args": root.args or {}}


def tree_from_doc(doc: dict, registry: dict) -> BtNode:
    """Rebuild a tree from :func:`tree_to_doc` output.

    ``registry`` maps binding names to ``factory(**args) -> callable``; the
    factory result becomes the leaf's action or condition callable.
    """
    kind = doc["kind"]
    name = doc["name"]
    if kind in ("sequence", "selector"):
        children = tuple(tree_from_doc(c, registry) for c in doc["children"])
        return BtNode(NodeKind(kind), name, children=children)
    if kind == "decorator":
        rule = doc["rule"]
        rule = retry(rule[1]) if isinstance(rule, list) else DecoratorRule(rule)
        return decorator(name, rule, tree_from_doc(doc["child"], registry))
    binding = doc["binding"]
    if binding not in registry:
        raise UnknownBinding(binding)
    fn = registry[binding](**doc.get("args", {}))
    if kind == "action":
        return action(name, fn, binding=binding, args=doc.get("args", {}))
    if kind == "condition":
        return condition(name, fn, binding=binding, args=doc.get("args", {}))
    raise MalformedTree(f"unknown node kind {kind!r}")


def tree_dumps(root: BtNode) -> str:
    return json.dumps(tree_to_doc(root), indent=2, sort_keys=True)


def tree_loads(text: str, registry: dict) -> BtNode:
    return tree_from_doc(json.loads(text), registry)
