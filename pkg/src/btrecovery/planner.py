"""Condition monitoring and recovery-plan synthesis.

Skills declare preconditions and postconditions over a closed vocabulary of
seven predicates evaluable on any :class:`~btrecovery.world.WorldState`.
When a production skill's preconditions fail, :func:`plan_recovery` backward
chains over the recovery catalog: it picks behaviors whose postconditions
entail the unmet conditions, recursively plans for their own unmet
preconditions, and validates the assembled sequence by condition-level
simulation.  Plans are bounded at four steps; the shipped scenarios need at
most two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import config, world as wd


class UnknownPredicate(Exception):
    pass


class NoPlanFound(Exception):
    pass


@dataclass(frozen=True)
class Condition:
    predicate: str
    args: tuple = ()
    negated: bool = False

    def key(self) -> tuple:
        return (self.predicate, self.args)

    def __str__(self) -> str:
        inner = f"{self.predicate}({', '.join(self.args)})"
        return f"not {inner}" if self.negated else inner


@dataclass(frozen=True)
class AnyOf:
    """Disjunction of conditions; satisfied when any alternative holds."""

    alternatives: tuple

    def __str__(self) -> str:
        return " or ".join(str(c) for c in self.alternatives)


def _pred_blocked(world: wd.WorldState, *args) -> bool:
    return wd.hole_blocked(world)


def _pred_peg_held(world: wd.WorldState, arm_id: str) -> bool:
    return world.peg.holder == arm_id


def _pred_peg_at(world: wd.WorldState, place: str) -> bool:
    return world.peg.holder == place


def _pred_gripper_free(world: wd.WorldState, arm_id: str) -> bool:
    return world.arm(arm_id).held is None


def _pred_at_approach(world: wd.WorldState, arm_id: str) -> bool:
    arm = world.arm(arm_id)
    app = wd.approach_pose(world)
    d2 = (arm.ee.x - app.x) ** 2 + (arm.ee.y - app.y) ** 2 + (arm.ee.z - app.z) ** 2
    return d2 <= (2 * config.GOTO_TOL) ** 2


def _pred_inserted(world: wd.WorldState, *args) -> bool:
    return world.peg.holder == wd.INSERTED


def _pred_graspable(world: wd.WorldState, obj: str) -> bool:
    if obj == wd.PEG:
        return world.peg.holder != wd.INSERTED
    try:
        ob = world.obstacle(obj)
    except KeyError:
        return False
    return ob.kind is wd.ObstacleKind.LIGHT


PREDICATES: dict = {
    "blocked": _pred_blocked,
    "peg_held": _pred_peg_held,
    "peg_at": _pred_peg_at,
    "gripper_free": _pred_gripper_free,
    "at_approach": _pred_at_approach,
    "inserted": _pred_inserted,
    "graspable": _pred_graspable,
}


def eval_condition(cond, world: wd.WorldState) -> bool:
    if isinstance(cond, AnyOf):
        return any(eval_condition(c, world) for c in cond.alternatives)
    fn = PREDICATES.get(cond.predicate)
    if fn is None:
        raise UnknownPredicate(cond.predicate)
    truth = fn(world, *cond.args)
    return (not truth) if cond.negated else truth


def unmet_preconditions(skill_spec, world: wd.WorldState) -> list:
    """Preconditions of ``skill_spec`` that evaluate false, in declaration
    order; an empty list means the skill is executable as-is."""
    return [c for c in skill_spec.preconditions if not eval_condition(c, world)]


class _SymbolicState:
    """Atom truth assignment for condition-level plan simulation.

    Atoms not overridden by an applied postcondition keep their value from
    the triggering world (pure declared-effects semantics).
    """

    def __init__(self, world: wd.WorldState, overrides: Optional[dict] = None):
        self.world = world
        self.overrides = dict(overrides or {})

    def copy(self) -> "_SymbolicState":
        return _SymbolicState(self.world, self.overrides)

    def truth(self, cond) -> bool:
        if isinstance(cond, AnyOf):
            return any(self.truth(c) for c in cond.alternatives)
        key = cond.key()
        if key in self.overrides:
            value = self.overrides[key]
        else:
            fn = PREDICATES.get(cond.predicate)
            if fn is None:
                raise UnknownPredicate(cond.predicate)
            value = fn(self.world, *cond.args)
        return (not value) if cond.negated else value

    def apply(self, cond: Condition) -> None:
        self.overrides[cond.key()] = not cond.negated


def _entails(post: Condition, goal) -> bool:
    if isinstance(goal, AnyOf):
        return any(_entails(post, g) for g in goal.alternatives)
    return post.key() == goal.key() and post.negated == goal.negated


@dataclass
class Plan:
    steps: tuple          # SkillSpec sequence, manual bindings already bound
    trigger: tuple        # the unmet conditions that caused planning
    expansions: int = 0   # search nodes expanded


@dataclass
class ExecutionProgram:
    steps: tuple          # recovery specs followed by the production spec
    production: object
    trigger: tuple = ()
    expansions: int = 0

    @property
    def planned(self) -> bool:
        return len(self.steps) > 1


class _Counter:
    __slots__ = ("expansions",)

    def __init__(self):
        self.expansions = 0


def plan_recovery(unmet: list, catalog, world: wd.WorldState,
                  max_steps: int = 4) -> Plan:
    """Backward-chain a recovery sequence for the unmet conditions.

    Candidate behaviors are considered in catalog order; a candidate whose
    own preconditions do not hold is recursively planned for within the
    remaining step budget.  Raises :class:`NoPlanFound` when no sequence of
    at most ``max_steps`` behaviors resolves every condition.
    """
    if not unmet:
        raise ValueError("plan_recovery requires a non-empty unmet list")
    counter = _Counter()
    state = _SymbolicState(world)
    result = _satisfy(list(unmet), state, tuple(catalog), max_steps, counter)
    if result is None:
        raise NoPlanFound([str(c) for c in unmet])
    steps, final = result
    # a later step may clobber an earlier goal; reject instead of returning
    # an invalid sequence
    if not all(final.truth(c) for c in unmet):
        raise NoPlanFound([str(c) for c in unmet])
    return Plan(steps=tuple(steps), trigger=tuple(unmet), expansions=counter.expansions)


def _satisfy(goals, state: _SymbolicState, catalog, budget: int, counter: _Counter):
    """Return (steps, state) achieving all goals within the step budget."""
    state = state.copy()
    steps: list = []
    for goal in goals:
        if state.truth(goal):
            continue
        achieved = False
        for spec in catalog:
            if not any(_entails(p, goal) for p in spec.postconditions):
                continue
            counter.expansions += 1
            remaining = budget - len(steps) - 1
            if remaining < 0:
                continue
            sub = _satisfy(list(spec.preconditions), state, catalog, remaining, counter)
            if sub is None:
                continue
            sub_steps, sub_state = sub
            state = sub_state
            for post in spec.postconditions:
                state.apply(post)
            steps.extend(sub_steps)
            steps.append(spec)
            if state.truth(goal):
                achieved = True
                break
        if not achieved:
            return None
    return steps, state


def simulate_plan(plan_steps, world: wd.WorldState):
    """Condition-level forward check: preconditions must hold at each step.

    Returns the final symbolic state; raises NoPlanFound on violation.
    """
    state = _SymbolicState(world)
    for spec in plan_steps:
        for pre in spec.preconditions:
            if not state.truth(pre):
                raise NoPlanFound(f"{spec.name}: precondition {pre} fails in simulation")
        for post in spec.postconditions:
            state.apply(post)
    return state


def monitor_and_dispatch(production, world: wd.WorldState, catalog) -> ExecutionProgram:
    """Check the production skill's preconditions and, only when some fail,
    plan recovery; the returned program ends with the production skill."""
    unmet = unmet_preconditions(production, world)
    if not unmet:
        return ExecutionProgram(steps=(production,), production=production)
    plan = plan_recovery(unmet, catalog, world)
    final = simulate_plan(plan.steps, world)
    for pre in production.preconditions:
        if not final.truth(pre):
            raise NoPlanFound(f"plan does not restore {pre}")
    return ExecutionProgram(
        steps=plan.steps + (production,),
        production=production,
        trigger=plan.trigger,
        expansions=plan.expansions,
    )
