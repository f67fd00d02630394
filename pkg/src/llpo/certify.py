"""Certification of programs under the layered path ordering: checking a
given valency/precedence assignment, searching for one, and emitting the
two ramified-recursion rule templates (which are certifiable by
construction)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .orderings import (
    OrderProof, Precedence, _OrderSearch, proof_from_json, proof_to_json,
    replay_proof, validate_precedence,
)
from .terms import (
    App, FunctionDecl, Program, Rule, Signature, Term, TrsError, Var,
    term_to_str, validate_program,
)

__all__ = [
    "Certificate", "RuleFailure", "CheckResult", "SchemaSpec",
    "SearchSpaceExceeded", "SchemaError",
    "check_llpo", "infer_certificate",
    "emit_flat_recursion", "emit_param_subst_recursion",
    "certificate_to_json", "certificate_from_json", "replay_certificate",
]


class SearchSpaceExceeded(TrsError):
    """The certificate search hit its candidate cap before exhausting the
    space; "gave up" rather than "not certifiable"."""

    def __init__(self, cap: int):
        super().__init__(f"certificate search gave up after {cap} candidates")
        self.cap = cap


class SchemaError(TrsError):
    pass


@dataclass
class Certificate:
    """Witness that every rule's right side sits below its left side in the
    outer layered ordering, under the recorded valencies and precedence."""

    valency: dict[str, tuple[int, ...]]
    precedence: Precedence
    proofs: tuple[OrderProof, ...]        # one proof per rule, in rule order


@dataclass(frozen=True)
class RuleFailure:
    rule_index: int
    relation: str                         # relation of the deepest failed obligation
    left: Term
    right: Term

    def __str__(self) -> str:
        rel = {"prec1": "<1", "prec0": "<0"}.get(self.relation, self.relation)
        return (f"rule {self.rule_index + 1}: could not establish "
                f"{term_to_str(self.left)} {rel} {term_to_str(self.right)}")


@dataclass
class CheckResult:
    certificate: Optional[Certificate]
    failures: tuple[RuleFailure, ...] = ()

    @property
    def ok(self) -> bool:
        return self.certificate is not None


def _require_valid(program: Program) -> None:
    errors = [d for d in validate_program(program) if d.severity == "error"]
    if errors:
        raise TrsError("program has validation errors: "
                       + "; ".join(str(d) for d in errors))


def check_llpo(program: Program,
               valency: dict[str, tuple[int, ...]],
               precedence: Precedence) -> CheckResult:
    """Check rhs <0 lhs for every rule under the given assignment."""
    _require_valid(program)
    sig = program.signature.with_valencies(valency)
    for name in sig.defined:
        if name not in valency and sig.defined[name].valency is None:
            raise TrsError(f"valency assignment misses {name}")
    validate_precedence(sig, precedence)

    proofs: list[OrderProof] = []
    failures: list[RuleFailure] = []
    for i, rule in enumerate(program.rules):
        search = _OrderSearch(sig, precedence)
        proof = search.prec0(rule.rhs, rule.lhs)
        if proof is not None:
            proofs.append(proof)
        else:
            deepest = search.deepest_failure
            if deepest is None:
                failures.append(RuleFailure(i, "prec0", rule.rhs, rule.lhs))
            else:
                _, relation, left, right = deepest
                failures.append(RuleFailure(i, relation, left, right))
    if failures:
        return CheckResult(None, tuple(failures))
    full_valency = {name: sig.valency(name) for name in sig.defined}
    return CheckResult(Certificate(full_valency, precedence, tuple(proofs)))


# ---------------------------------------------------------------------------
# Certificate search


def _valency_vectors(arity: int):
    """All 0/1 vectors of the given length, all-ones first, then flipping
    later positions before earlier ones."""
    for mask in range(2 ** arity):
        yield tuple(1 - ((mask >> (arity - 1 - i)) & 1) for i in range(arity))


def _rank_maps(names: list[str]):
    """Canonical total pre-orders: surjections onto {0..q-1}, coarsest first,
    lexicographic in declaration order within each class count."""
    n = len(names)
    for q in range(1, n + 1):
        for ranks in itertools.product(range(q), repeat=n):
            if len(set(ranks)) == q:
                yield dict(zip(names, ranks))


def infer_certificate(program: Program, search_cap: int = 10 ** 6
                      ) -> Optional[Certificate]:
    """Exhaustive search over valency assignments and canonical precedences.

    Returns the first certificate in enumeration order, None once the space
    is exhausted, and raises SearchSpaceExceeded when the candidate cap is
    hit first.
    """
    _require_valid(program)
    sig = program.signature
    names = list(sig.defined)
    arities = [sig.defined[n].arity for n in names]

    tried = 0
    for choice in itertools.product(*[_valency_vectors(a) for a in arities]):
        valency = dict(zip(names, choice))
        for ranks in _rank_maps(names):
            tried += 1
            if tried > search_cap:
                raise SearchSpaceExceeded(search_cap)
            prec = Precedence(ranks)
            if not _classes_agree(sig, valency, prec):
                continue
            result = check_llpo(program, valency, prec)
            if result.ok:
                return result.certificate
    return None


def _classes_agree(sig: Signature, valency: dict[str, tuple[int, ...]],
                   prec: Precedence) -> bool:
    for group in prec.classes():
        arities = {sig.defined[n].arity for n in group}
        if len(arities) > 1:
            return False
        if len({valency[n] for n in group}) > 1:
            return False
    return True


def replay_certificate(program: Program, cert: Certificate) -> bool:
    """Verify a stored certificate without re-running the search: each proof
    must replay and must conclude rhs <0 lhs for its rule."""
    if len(cert.proofs) != len(program.rules):
        return False
    sig = program.signature.with_valencies(cert.valency)
    try:
        validate_precedence(sig, cert.precedence)
    except TrsError:
        return False
    for rule, proof in zip(program.rules, cert.proofs):
        if proof.relation != "prec0" or proof.left != rule.rhs or proof.right != rule.lhs:
            return False
        if not replay_proof(proof, sig, cert.precedence):
            return False
    return True


def certificate_to_json(cert: Certificate) -> dict:
    return {
        "valency": {name: list(nu) for name, nu in cert.valency.items()},
        "precedence": [list(group) for group in cert.precedence.classes()],
        "proofs": [proof_to_json(p) for p in cert.proofs],
    }


def certificate_from_json(obj: dict) -> Certificate:
    valency = {name: tuple(nu) for name, nu in obj["valency"].items()}
    prec = Precedence.from_classes([tuple(g) for g in obj["precedence"]])
    proofs = tuple(proof_from_json(p) for p in obj["proofs"])
    return Certificate(valency, prec, proofs)


# ---------------------------------------------------------------------------
# Recursion-template emitters


@dataclass
class SchemaSpec:
    """Description of a recursion template over tiered data copies.

    The recursion argument carries tier ``recursion_tier``; the n side
    parameters carry ``arg_tiers``; results live at ``output_tier``. The
    derived valency marks a position 0 exactly when its tier equals the
    output tier. ``branching`` is the number of recursive calls per step
    rule (parameter-substitution kind only).
    """

    kind: str                                   # "flat" or "param_subst"
    recursion_tier: int
    output_tier: int
    arg_tiers: tuple[int, ...] = ()
    branching: int = 1
    constructors: tuple[tuple[str, int], ...] = (("b", 0), ("c", 1))
    target: str = "f"
    base: str = "g"
    step: str = "h"
    subst: str = "delta"
    # Optional pre-declared arities to check the generated symbols against.
    declared: Optional[dict[str, int]] = None


def _tier_valency(spec: SchemaSpec) -> tuple[int, ...]:
    k = spec.output_tier
    head = 0 if spec.recursion_tier == k else 1
    return (head,) + tuple(0 if tier == k else 1 for tier in spec.arg_tiers)


def _check_schema_constructors(spec: SchemaSpec) -> tuple[list[str], list[str]]:
    nullary = [n for n, a in spec.constructors if a == 0]
    unary = [n for n, a in spec.constructors if a == 1]
    if len(nullary) + len(unary) != len(spec.constructors):
        raise SchemaError("schema constructors must have arity 0 or 1")
    if not nullary:
        raise SchemaError("schema needs at least one 0-ary constructor")
    return nullary, unary


def _check_declared(spec: SchemaSpec, name: str, want_arity: int) -> None:
    if spec.declared is None:
        return
    if name not in spec.declared:
        raise SchemaError(f"{name} undeclared")
    if spec.declared[name] != want_arity:
        raise SchemaError(f"arity mismatch for {name}: "
                          f"declared {spec.declared[name]}, template needs {want_arity}")


def _params(n: int) -> list[Var]:
    return [Var(f"x{i + 1}") for i in range(n)]


def emit_flat_recursion(spec: SchemaSpec) -> Program:
    """Case-split template: one base rule per constant sending the scrutinee
    on to the base function, one step rule per successor sending the
    predecessor to the step function."""
    if spec.kind != "flat":
        raise SchemaError("spec kind must be 'flat'")
    nullary, unary = _check_schema_constructors(spec)
    n = len(spec.arg_tiers)
    f, g, h = spec.target, spec.base, spec.step
    if len({f, g, h}) != 3 or not (f and g and h):
        raise SchemaError("template symbols must be three distinct names")
    _check_declared(spec, g, n + 1)
    _check_declared(spec, h, n + 1)

    nu = _tier_valency(spec)
    defined = {
        g: FunctionDecl(n + 1, nu),
        h: FunctionDecl(n + 1, nu),
        f: FunctionDecl(n + 1, nu),
    }
    sig = Signature(dict(spec.constructors), defined, f)
    sig.check()

    xs = _params(n)
    z = Var("z")
    rules = []
    for b in nullary:
        rules.append(Rule(App(f, (App(b), *xs)), App(g, (App(b), *xs))))
    for c in unary:
        rules.append(Rule(App(f, (App(c, (z,)), *xs)), App(h, (z, *xs))))
    classes = ((g,), (h,), (f,))
    return Program(sig, tuple(rules), classes)


def emit_param_subst_recursion(spec: SchemaSpec) -> Program:
    """Recursion with parameter substitution: each step rule hands the step
    function the predecessor, the parameters, and ``branching`` recursive
    calls whose output-tier parameters pass through fresh substitution
    functions. Requires the recursion tier to exceed the output tier."""
    if spec.kind != "param_subst":
        raise SchemaError("spec kind must be 'param_subst'")
    if spec.recursion_tier <= spec.output_tier:
        raise SchemaError(
            f"recursion tier {spec.recursion_tier} must exceed output tier "
            f"{spec.output_tier}")
    nullary, unary = _check_schema_constructors(spec)
    n = len(spec.arg_tiers)
    m = spec.branching
    if m < 1:
        raise SchemaError("branching must be at least 1")
    f, g, h = spec.target, spec.base, spec.step
    if len({f, g, h}) != 3 or not (f and g and h):
        raise SchemaError("template symbols must be three distinct names")
    if n >= 1:
        _check_declared(spec, g, n)
    _check_declared(spec, h, 1 + n + m)

    k = spec.output_tier
    nu_f = _tier_valency(spec)
    side_nu = tuple(0 if tier == k else 1 for tier in spec.arg_tiers)
    subst_positions = [i for i, tier in enumerate(spec.arg_tiers) if tier == k]

    def subst_name(j: int, i: int) -> str:
        if len(subst_positions) == 1:
            return f"{spec.subst}{j}"
        return f"{spec.subst}{j}_p{i + 1}"

    defined: dict[str, FunctionDecl] = {}
    subst_names: list[str] = []
    for j in range(m):
        for i in subst_positions:
            name = subst_name(j, i)
            _check_declared(spec, name, n)
            defined[name] = FunctionDecl(n, side_nu)
            subst_names.append(name)
    if n >= 1:
        defined[g] = FunctionDecl(n, side_nu)
    defined[h] = FunctionDecl(1 + n + m, (nu_f[0],) + side_nu + (0,) * m)
    defined[f] = FunctionDecl(n + 1, nu_f)
    sig = Signature(dict(spec.constructors), defined, f)
    sig.check()

    xs = _params(n)
    z = Var("z")
    rules = []
    for b in nullary:
        base_rhs: Term = App(g, tuple(xs)) if n >= 1 else App(b)
        rules.append(Rule(App(f, (App(b), *xs)), base_rhs))
    for c in unary:
        calls = []
        for j in range(m):
            call_args: list[Term] = [z]
            for i, x in enumerate(xs):
                if i in subst_positions:
                    call_args.append(App(subst_name(j, i), tuple(xs)))
                else:
                    call_args.append(x)
            calls.append(App(f, tuple(call_args)))
        rhs = App(h, (z, *xs, *calls))
        rules.append(Rule(App(f, (App(c, (z,)), *xs)), rhs))

    classes: list[tuple[str, ...]] = []
    if subst_names:
        classes.append(tuple(subst_names))
    if n >= 1:
        classes.append((g,))
    classes.append((h,))
    classes.append((f,))
    return Program(sig, tuple(rules), tuple(classes))
