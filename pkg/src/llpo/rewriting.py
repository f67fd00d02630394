"""One-step rewriting, normalization, the metered call-by-value evaluator,
and a brute-force reachability oracle for derivation heights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .terms import (
    App, Program, Rule, Term, TrsError, Var, height, is_ground,
    match_pattern, size, substitute, term_to_str,
)

__all__ = [
    "RewriteStep", "NormalizeResult", "EvalResult",
    "StuckTermError", "FuelExhausted",
    "rewrite_step", "derivation", "normalize", "cbv_eval",
    "max_reachable_height",
]


class StuckTermError(TrsError):
    """A defined symbol met arguments no rule matches: the result is undefined."""

    def __init__(self, term: Term):
        super().__init__(f"no rule matches {term_to_str(term)}")
        self.term = term


class FuelExhausted(TrsError):
    def __init__(self, message: str, last_term: Optional[Term] = None):
        super().__init__(message)
        self.last_term = last_term


@dataclass(frozen=True)
class RewriteStep:
    result: Term
    position: tuple[int, ...]
    rule_index: int


@dataclass(frozen=True)
class NormalizeResult:
    term: Term
    steps: int
    exhausted: bool


@dataclass(frozen=True)
class EvalResult:
    """Outcome of a call-by-value run: the constructor value, the height h
    of the evaluation tree, and the peak footprint of the live environment
    stack (total bindings, largest bound value)."""

    value: Term
    h: int
    max_bindings: int
    max_binding_size: int


def _head_index(program: Program) -> dict[str, list[tuple[int, Rule]]]:
    index: dict[str, list[tuple[int, Rule]]] = {}
    for i, rule in enumerate(program.rules):
        index.setdefault(rule.lhs.symbol, []).append((i, rule))
    return index


def _step_at(index: dict[str, list[tuple[int, Rule]]], t: Term,
             position: tuple[int, ...]) -> Optional[RewriteStep]:
    if not isinstance(t, App):
        return None
    for i, arg in enumerate(t.args):
        inner = _step_at(index, arg, position + (i,))
        if inner is not None:
            new_args = t.args[:i] + (inner.result,) + t.args[i + 1:]
            return RewriteStep(App(t.symbol, new_args), inner.position, inner.rule_index)
    for rule_index, rule in index.get(t.symbol, ()):
        theta = match_pattern(rule.lhs, t)
        if theta is not None:
            return RewriteStep(substitute(rule.rhs, theta), position, rule_index)
    return None


def rewrite_step(program: Program, t: Term) -> Optional[RewriteStep]:
    """Contract the leftmost-innermost redex with the first matching rule in
    file order; None iff t is a normal form."""
    if not is_ground(t):
        raise TrsError("rewriting expects a ground term")
    return _step_at(_head_index(program), t, ())


def derivation(program: Program, t: Term, fuel: int = 10 ** 6
               ) -> Iterator[RewriteStep]:
    """The leftmost-innermost derivation from t, one step at a time.

    Raises FuelExhausted if the term is still reducible after `fuel` steps.
    """
    if not is_ground(t):
        raise TrsError("rewriting expects a ground term")
    index = _head_index(program)
    current = t
    for _ in range(fuel):
        step = _step_at(index, current, ())
        if step is None:
            return
        yield step
        current = step.result
    if _step_at(index, current, ()) is not None:
        raise FuelExhausted(f"not in normal form after {fuel} steps", current)


def normalize(program: Program, t: Term, fuel: int = 10 ** 6) -> NormalizeResult:
    """Iterate rewrite steps up to `fuel` times; reports rather than raises
    when the fuel runs out, carrying the last term reached."""
    steps = 0
    current = t
    try:
        for step in derivation(program, t, fuel):
            steps += 1
            current = step.result
    except FuelExhausted as e:
        return NormalizeResult(e.last_term if e.last_term is not None else current,
                               steps, True)
    return NormalizeResult(current, steps, False)


def cbv_eval(program: Program, t: Term, sigma: dict[str, Term],
             fuel: int = 10 ** 6) -> EvalResult:
    """Call-by-value evaluation with height metering.

    Heights: a variable costs the size of its binding, a constant costs 1,
    a constructor application adds 1 to its argument's height, and a defined
    symbol costs max over (each argument height + 1) and the height of the
    rule body evaluated under the matching substitution.
    """
    for name in sorted(set(_free_vars(t))):
        if name not in sigma:
            raise TrsError(f"unbound variable {name}")
    for value in sigma.values():
        if not is_ground(value):
            raise TrsError("cbv bindings must be ground")

    index = _head_index(program)
    sig = program.signature
    state = _Meter()
    state.push(sigma)
    try:
        value, h = _cbv(index, sig, t, sigma, state, [fuel])
    finally:
        state.pop(sigma)
    return EvalResult(value, h, state.max_bindings, state.max_binding_size)


class _Meter:
    __slots__ = ("live_bindings", "max_bindings", "max_binding_size")

    def __init__(self):
        self.live_bindings = 0
        self.max_bindings = 0
        self.max_binding_size = 0

    def push(self, env: dict[str, Term]) -> None:
        self.live_bindings += len(env)
        if self.live_bindings > self.max_bindings:
            self.max_bindings = self.live_bindings
        for value in env.values():
            s = size(value)
            if s > self.max_binding_size:
                self.max_binding_size = s

    def pop(self, env: dict[str, Term]) -> None:
        self.live_bindings -= len(env)


def _free_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    else:
        for a in t.args:
            yield from _free_vars(a)


def _cbv(index, sig, t: Term, env: dict[str, Term], state: _Meter,
         fuel: list[int]) -> tuple[Term, int]:
    if isinstance(t, Var):
        value = env[t.name]
        return value, size(value)
    if sig.is_constructor(t.symbol):
        if not t.args:
            return t, 1
        value, h = _cbv(index, sig, t.args[0], env, state, fuel)
        return App(t.symbol, (value,)), h + 1
    if not sig.is_defined(t.symbol):
        raise TrsError(f"undeclared symbol: {t.symbol}")

    arg_results = [_cbv(index, sig, a, env, state, fuel) for a in t.args]
    redex = App(t.symbol, tuple(v for v, _ in arg_results))
    for _, rule in index.get(t.symbol, ()):
        theta = match_pattern(rule.lhs, redex)
        if theta is not None:
            fuel[0] -= 1
            if fuel[0] < 0:
                raise FuelExhausted("call-by-value fuel exhausted", redex)
            state.push(theta)
            try:
                value, h0 = _cbv(index, sig, rule.rhs, theta, state, fuel)
            finally:
                state.pop(theta)
            h = max(max(h_i + 1 for _, h_i in arg_results), h0)
            return value, h
    raise StuckTermError(redex)


def _all_successors(index, t: Term) -> Iterator[Term]:
    """Every term reachable in one step: any redex position, any rule."""
    if not isinstance(t, App):
        return
    for rule_index, rule in index.get(t.symbol, ()):
        theta = match_pattern(rule.lhs, t)
        if theta is not None:
            yield substitute(rule.rhs, theta)
    for i, arg in enumerate(t.args):
        for new_arg in _all_successors(index, arg):
            yield App(t.symbol, t.args[:i] + (new_arg,) + t.args[i + 1:])


def max_reachable_height(program: Program, t: Term, fuel: int = 10 ** 6) -> int:
    """Max height over every term reachable from t by rewriting, found by
    exhaustive exploration. A desk-scale oracle, not an efficient procedure.
    """
    if not is_ground(t):
        raise TrsError("rewriting expects a ground term")
    index = _head_index(program)
    seen = {t}
    frontier = [t]
    best = height(t)
    expansions = 0
    while frontier:
        u = frontier.pop()
        expansions += 1
        if expansions > fuel:
            raise FuelExhausted(f"reachability exploration exceeded {fuel} expansions", u)
        for v in _all_successors(index, u):
            if v not in seen:
                seen.add(v)
                hv = height(v)
                if hv > best:
                    best = hv
                frontier.append(v)
    return best
