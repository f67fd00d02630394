"""The two layered path orderings with checkable proof trees, plus the
classic lexicographic and multiset path orderings as baselines.

The layered pair (written <1 and <0 below) restricts the lexicographic
path ordering: <1 compares through recursion-driving (valency-1) argument
positions only, and <0 extends <1 with the subterm property, a
head-decrease clause layered by the left symbol's valencies, and a
lexicographic clause whose later positions are constrained by valency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    App, Signature, Term, TrsError, Var, app_symbols, subterms, term_to_str,
)

__all__ = [
    "Precedence", "OrderProof",
    "prec1", "prec0", "lpo", "mpo",
    "render_proof", "proof_to_json", "proof_from_json", "replay_proof",
    "validate_precedence",
]


@dataclass
class Precedence:
    """A total pre-order on the defined symbols, as a rank map.

    g is strictly below f iff rank(g) < rank(f); equal ranks mean the two
    symbols are interchangeable for ordering purposes, which is only sound
    when they agree on arity and valency (see validate_precedence).
    """

    ranks: dict[str, int]

    @classmethod
    def trivial(cls, names) -> "Precedence":
        return cls({n: 0 for n in names})

    @classmethod
    def from_classes(cls, classes) -> "Precedence":
        """Build from ascending equivalence classes, e.g. (("d0","d1"),("f",))."""
        ranks = {}
        for r, group in enumerate(classes):
            for name in group:
                ranks[name] = r
        return cls(ranks)

    def rank(self, name: str) -> int:
        try:
            return self.ranks[name]
        except KeyError:
            raise TrsError(f"no precedence rank for {name}") from None

    def less(self, g: str, f: str) -> bool:
        return self.rank(g) < self.rank(f)

    def equiv(self, g: str, f: str) -> bool:
        return self.rank(g) == self.rank(f)

    def below(self, f: str) -> frozenset[str]:
        r = self.rank(f)
        return frozenset(n for n, q in self.ranks.items() if q < r)

    def classes(self) -> tuple[tuple[str, ...], ...]:
        """Equivalence classes in ascending order, names sorted within."""
        by_rank: dict[int, list[str]] = {}
        for name, r in self.ranks.items():
            by_rank.setdefault(r, []).append(name)
        return tuple(tuple(sorted(by_rank[r])) for r in sorted(by_rank))

    def normalized_ranks(self) -> dict[str, int]:
        """Rank of each symbol as its 1-based class index (coarse gaps removed)."""
        order = {r: i + 1 for i, r in enumerate(sorted(set(self.ranks.values())))}
        return {name: order[r] for name, r in self.ranks.items()}


def validate_precedence(sig: Signature, prec: Precedence) -> None:
    """Equivalent symbols must share arity and valency; ranks must cover D."""
    for name in sig.defined:
        prec.rank(name)
    for group in prec.classes():
        decls = [sig.defined[n] for n in group if n in sig.defined]
        if len(decls) != len(group):
            unknown = [n for n in group if n not in sig.defined]
            raise TrsError(f"precedence ranks undeclared symbols: {unknown}")
        arities = {d.arity for d in decls}
        if len(arities) > 1:
            raise TrsError(f"equivalent symbols {group} disagree on arity")
        valencies = {d.valency for d in decls}
        if len(valencies) > 1:
            raise TrsError(f"equivalent symbols {group} disagree on valency")


@dataclass(frozen=True)
class OrderProof:
    """One inference node: which clause of which relation justified
    left-below-right, with the premise proofs as children."""

    relation: str                 # "prec1", "prec0", or "eq"
    clause: str                   # "1".."4", or "identity"
    left: Term
    right: Term
    children: tuple["OrderProof", ...] = ()


def _eq_leaf(t: Term) -> OrderProof:
    return OrderProof("eq", "identity", t, t)


class _OrderSearch:
    """Memoized clause-by-clause decision procedure.

    Clauses are tried in their numbered order and the first derivation found
    is returned; both relations are least fixed points, so any derivation is
    as good as any other. Each recursive premise strictly shrinks the
    combined size of the compared terms, so the search terminates, and the
    memo table makes it polynomial in |s| * |t|.
    """

    def __init__(self, sig: Signature, prec: Precedence):
        self.sig = sig
        self.prec = prec
        self.memo: dict[tuple[str, Term, Term], Optional[OrderProof]] = {}
        self.deepest_failure: Optional[tuple[int, str, Term, Term]] = None

    # -- failure bookkeeping (for "which obligation broke" reports) --------

    def _note_failure(self, depth: int, relation: str, s: Term, t: Term) -> None:
        if self.deepest_failure is None or depth > self.deepest_failure[0]:
            self.deepest_failure = (depth, relation, s, t)

    # -- helpers ------------------------------------------------------------

    def _is_con(self, name: str) -> bool:
        return self.sig.is_constructor(name)

    def _is_def(self, name: str) -> bool:
        return self.sig.is_defined(name)

    def _leq1(self, s: Term, t: Term, depth: int) -> Optional[OrderProof]:
        if s == t:
            return _eq_leaf(s)
        return self.prec1(s, t, depth)

    def _leq0(self, s: Term, t: Term, depth: int) -> Optional[OrderProof]:
        if s == t:
            return _eq_leaf(s)
        return self.prec0(s, t, depth)

    def _in_lower_fragment(self, t: Term, f: str) -> bool:
        """t uses only constructors, variables, and symbols strictly below f."""
        rank_f = self.prec.rank(f)
        for name in app_symbols(t):
            if self._is_con(name):
                continue
            if self._is_def(name) and self.prec.rank(name) < rank_f:
                continue
            return False
        return True

    # -- the strict relations ------------------------------------------------

    def prec1(self, s: Term, t: Term, depth: int = 0) -> Optional[OrderProof]:
        key = ("prec1", s, t)
        if key in self.memo:
            proof = self.memo[key]
            if proof is None:
                self._note_failure(depth, "prec1", s, t)
            return proof
        proof = self._prec1_clauses(s, t, depth)
        self.memo[key] = proof
        if proof is None:
            self._note_failure(depth, "prec1", s, t)
        return proof

    def _prec1_clauses(self, s: Term, t: Term, depth: int) -> Optional[OrderProof]:
        # clause 1: right side wraps a constructor around something above s
        if isinstance(t, App) and self._is_con(t.symbol) and t.args:
            sub = self._leq1(s, t.args[0], depth + 1)
            if sub is not None:
                return OrderProof("prec1", "1", s, t, (sub,))
        if isinstance(t, App) and self._is_def(t.symbol):
            # clause 2: peel a constructor off the left side
            if isinstance(s, App) and self._is_con(s.symbol) and s.args:
                sub = self.prec1(s.args[0], t, depth + 1)
                if sub is not None:
                    return OrderProof("prec1", "2", s, t, (sub,))
            # clause 3: at-or-below an argument in a driving position
            nu = self.sig.valency(t.symbol)
            for i, ti in enumerate(t.args):
                if nu[i] == 1:
                    sub = self._leq1(s, ti, depth + 1)
                    if sub is not None:
                        return OrderProof("prec1", "3", s, t, (sub,))
            # clause 4: strictly smaller head, every argument below the whole
            if (isinstance(s, App) and self._is_def(s.symbol)
                    and self.prec.less(s.symbol, t.symbol)):
                subs = []
                for si in s.args:
                    pr = self.prec1(si, t, depth + 1)
                    if pr is None:
                        break
                    subs.append(pr)
                else:
                    return OrderProof("prec1", "4", s, t, tuple(subs))
        return None

    def prec0(self, s: Term, t: Term, depth: int = 0) -> Optional[OrderProof]:
        key = ("prec0", s, t)
        if key in self.memo:
            proof = self.memo[key]
            if proof is None:
                self._note_failure(depth, "prec0", s, t)
            return proof
        proof = self._prec0_clauses(s, t, depth)
        self.memo[key] = proof
        if proof is None:
            self._note_failure(depth, "prec0", s, t)
        return proof

    def _prec0_clauses(self, s: Term, t: Term, depth: int) -> Optional[OrderProof]:
        if not isinstance(t, App):
            return None
        # clause 1: at-or-below some argument; the head may be any declared symbol
        if t.args and self.sig.is_declared(t.symbol):
            for ti in t.args:
                sub = self._leq0(s, ti, depth + 1)
                if sub is not None:
                    return OrderProof("prec0", "1", s, t, (sub,))
        if not self._is_def(t.symbol):
            return None
        # clause 2: peel a constructor off the left side
        if isinstance(s, App) and self._is_con(s.symbol) and s.args:
            sub = self.prec0(s.args[0], t, depth + 1)
            if sub is not None:
                return OrderProof("prec0", "2", s, t, (sub,))
        if isinstance(s, App) and self._is_def(s.symbol):
            if self.prec.less(s.symbol, t.symbol):
                # clause 3: smaller head; each argument is compared at the
                # layer named by the LEFT symbol's valency at that position
                nu_g = self.sig.valency(s.symbol)
                subs = []
                for i, si in enumerate(s.args):
                    if nu_g[i] == 1:
                        pr = self.prec1(si, t, depth + 1)
                    else:
                        pr = self.prec0(si, t, depth + 1)
                    if pr is None:
                        break
                    subs.append(pr)
                else:
                    return OrderProof("prec0", "3", s, t, tuple(subs))
            elif self.prec.equiv(s.symbol, t.symbol):
                pf = self._clause4(s, t, depth)
                if pf is not None:
                    return pf
        return None

    def _clause4(self, s: App, t: App, depth: int) -> Optional[OrderProof]:
        """Equivalent heads: an equal prefix, a strict <1 step at a driving
        position p, and every later position either staying <=1 within its
        (driving) slot or dropping, as a term over the lower signature
        fragment, below the whole right side at a substitutable slot."""
        ss, ts = s.args, t.args
        if len(ss) != len(ts):
            return None
        n = len(ss)
        nu = self.sig.valency(t.symbol)
        for p in range(n):
            if nu[p] == 1 and ss[p] != ts[p]:
                pivot = self.prec1(ss[p], ts[p], depth + 1)
                if pivot is not None:
                    children = [_eq_leaf(ss[i]) for i in range(p)]
                    children.append(pivot)
                    ok = True
                    for j in range(p + 1, n):
                        if nu[j] == 1:
                            sub = self._leq1(ss[j], ts[j], depth + 1)
                        elif self._in_lower_fragment(ss[j], t.symbol):
                            sub = self.prec0(ss[j], t, depth + 1)
                        else:
                            sub = None
                        if sub is None:
                            ok = False
                            break
                        children.append(sub)
                    if ok:
                        return OrderProof("prec0", "4", s, t, tuple(children))
            if ss[p] != ts[p]:
                break
        return None


def _check_inputs(s: Term, t: Term, sig: Signature) -> None:
    for term in (s, t):
        for name in app_symbols(term):
            if not sig.is_declared(name):
                raise TrsError(f"undeclared symbol: {name}")


def prec1(s: Term, t: Term, sig: Signature, prec: Precedence) -> Optional[OrderProof]:
    """Decide the inner layered ordering; returns a replayable proof or None."""
    _check_inputs(s, t, sig)
    return _OrderSearch(sig, prec).prec1(s, t)


def prec0(s: Term, t: Term, sig: Signature, prec: Precedence) -> Optional[OrderProof]:
    """Decide the outer layered ordering; returns a replayable proof or None."""
    _check_inputs(s, t, sig)
    return _OrderSearch(sig, prec).prec0(s, t)


# ---------------------------------------------------------------------------
# Baseline orderings: classic LPO and MPO with constructors minimal


class _Baseline:
    """Classic path orderings over the full signature. Constructors sit below
    every defined symbol, are mutually incomparable, and are equivalent only
    to themselves; defined symbols follow the given precedence, with the
    lexicographic/multiset head clause extended to equivalent heads."""

    def __init__(self, sig: Signature, prec: Precedence):
        self.sig = sig
        self.prec = prec
        self.memo: dict[tuple[str, Term, Term], bool] = {}

    def sym_less(self, g: str, f: str) -> bool:
        if self.sig.is_constructor(g):
            return self.sig.is_defined(f)
        return self.sig.is_defined(f) and self.prec.less(g, f)

    def sym_equiv(self, g: str, f: str) -> bool:
        if g == f:
            return True
        return (self.sig.is_defined(g) and self.sig.is_defined(f)
                and self.prec.equiv(g, f))

    def lpo(self, s: Term, t: Term) -> bool:
        if not isinstance(t, App):
            return False
        key = ("lpo", s, t)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        result = self._lpo(s, t)
        self.memo[key] = result
        return result

    def _lpo(self, s: Term, t: App) -> bool:
        if any(s == ti or self.lpo(s, ti) for ti in t.args):
            return True
        if not isinstance(s, App):
            return False
        if self.sym_less(s.symbol, t.symbol):
            return all(self.lpo(si, t) for si in s.args)
        if self.sym_equiv(s.symbol, t.symbol) and len(s.args) == len(t.args):
            for i in range(len(s.args)):
                if s.args[i] == t.args[i]:
                    continue
                return (self.lpo(s.args[i], t.args[i])
                        and all(self.lpo(sj, t) for sj in s.args[i + 1:]))
        return False

    def mpo(self, s: Term, t: Term) -> bool:
        if not isinstance(t, App):
            return False
        key = ("mpo", s, t)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        result = self._mpo(s, t)
        self.memo[key] = result
        return result

    def _mpo(self, s: Term, t: App) -> bool:
        if any(s == ti or self.mpo(s, ti) for ti in t.args):
            return True
        if not isinstance(s, App):
            return False
        if self.sym_less(s.symbol, t.symbol):
            return all(self.mpo(si, t) for si in s.args)
        if self.sym_equiv(s.symbol, t.symbol):
            return self._multiset_less(list(s.args), list(t.args))
        return False

    def _multiset_less(self, ms: list[Term], ns: list[Term]) -> bool:
        # Drop pairwise equal elements, then every survivor on the left must
        # sit strictly below some survivor on the right.
        ns = list(ns)
        rest = []
        for m in ms:
            if m in ns:
                ns.remove(m)
            else:
                rest.append(m)
        if not ns:
            return False
        return all(any(self.mpo(m, n) for n in ns) for m in rest)


def lpo(s: Term, t: Term, sig: Signature, prec: Precedence) -> bool:
    """Classic lexicographic path ordering (strict), constructors minimal."""
    _check_inputs(s, t, sig)
    return _Baseline(sig, prec).lpo(s, t)


def mpo(s: Term, t: Term, sig: Signature, prec: Precedence) -> bool:
    """Classic multiset path ordering (strict), constructors minimal."""
    _check_inputs(s, t, sig)
    return _Baseline(sig, prec).mpo(s, t)


# ---------------------------------------------------------------------------
# Proof rendering, serialization, replay

_REL_TEXT = {"prec1": "<1", "prec0": "<0", "eq": "="}


def render_proof(pf: OrderProof, style: str = "text") -> str:
    """Render a proof tree; "text" gives an indented inference tree, "json"
    a lossless machine-readable form."""
    if style == "json":
        return json.dumps(proof_to_json(pf), indent=2)
    if style != "text":
        raise ValueError(f"unknown style {style!r}")
    lines: list[str] = []

    def walk(node: OrderProof, depth: int) -> None:
        label = "identity" if node.relation == "eq" else f"clause {node.clause}"
        lines.append("  " * depth
                     + f"{term_to_str(node.left)} {_REL_TEXT[node.relation]} "
                       f"{term_to_str(node.right)}   [{label}]")
        for child in node.children:
            walk(child, depth + 1)

    walk(pf, 0)
    return "\n".join(lines)


def _term_to_obj(t: Term):
    if isinstance(t, Var):
        return {"var": t.name}
    return {"symbol": t.symbol, "args": [_term_to_obj(a) for a in t.args]}


def _term_from_obj(obj) -> Term:
    if "var" in obj:
        return Var(obj["var"])
    return App(obj["symbol"], tuple(_term_from_obj(a) for a in obj["args"]))


def proof_to_json(pf: OrderProof) -> dict:
    return {
        "relation": pf.relation,
        "clause": pf.clause,
        "left": _term_to_obj(pf.left),
        "right": _term_to_obj(pf.right),
        "children": [proof_to_json(c) for c in pf.children],
    }


def proof_from_json(obj: dict) -> OrderProof:
    return OrderProof(
        obj["relation"], obj["clause"],
        _term_from_obj(obj["left"]), _term_from_obj(obj["right"]),
        tuple(proof_from_json(c) for c in obj["children"]),
    )


def replay_proof(pf: OrderProof, sig: Signature, prec: Precedence) -> bool:
    """Re-check every node: the children must establish exactly the premises
    of the node's clause. Written independently of the search so a stored
    certificate is verified rather than trusted."""
    try:
        return _replay(pf, sig, prec)
    except (TrsError, IndexError):
        return False


def _replay(pf: OrderProof, sig: Signature, prec: Precedence) -> bool:
    s, t = pf.left, pf.right
    kids = pf.children

    def child_proves(child: OrderProof, rel_options, left: Term, right: Term) -> bool:
        if child.relation not in rel_options:
            return False
        if child.relation == "eq":
            return child.left == child.right == left == right and not child.children
        return (child.left == left and child.right == right
                and _replay(child, sig, prec))

    if pf.relation == "eq":
        return pf.clause == "identity" and s == t and not kids

    if pf.relation == "prec1":
        if not isinstance(t, App):
            return False
        if pf.clause == "1":
            return (sig.is_constructor(t.symbol) and len(t.args) == 1
                    and len(kids) == 1
                    and child_proves(kids[0], ("eq", "prec1"), s, t.args[0]))
        if not sig.is_defined(t.symbol):
            return False
        if pf.clause == "2":
            return (isinstance(s, App) and sig.is_constructor(s.symbol)
                    and len(s.args) == 1 and len(kids) == 1
                    and child_proves(kids[0], ("prec1",), s.args[0], t))
        if pf.clause == "3":
            nu = sig.valency(t.symbol)
            return len(kids) == 1 and any(
                nu[i] == 1 and child_proves(kids[0], ("eq", "prec1"), s, ti)
                for i, ti in enumerate(t.args))
        if pf.clause == "4":
            if not (isinstance(s, App) and sig.is_defined(s.symbol)
                    and prec.less(s.symbol, t.symbol)):
                return False
            return len(kids) == len(s.args) and all(
                child_proves(kids[i], ("prec1",), s.args[i], t)
                for i in range(len(s.args)))
        return False

    if pf.relation == "prec0":
        if not isinstance(t, App):
            return False
        if pf.clause == "1":
            return (sig.is_declared(t.symbol) and len(kids) == 1 and any(
                child_proves(kids[0], ("eq", "prec0"), s, ti) for ti in t.args))
        if not sig.is_defined(t.symbol):
            return False
        if pf.clause == "2":
            return (isinstance(s, App) and sig.is_constructor(s.symbol)
                    and len(s.args) == 1 and len(kids) == 1
                    and child_proves(kids[0], ("prec0",), s.args[0], t))
        if pf.clause == "3":
            if not (isinstance(s, App) and sig.is_defined(s.symbol)
                    and prec.less(s.symbol, t.symbol)):
                return False
            nu = sig.valency(s.symbol)
            if len(kids) != len(s.args):
                return False
            for i, si in enumerate(s.args):
                want = ("prec1",) if nu[i] == 1 else ("prec0",)
                if not child_proves(kids[i], want, si, t):
                    return False
            return True
        if pf.clause == "4":
            if not (isinstance(s, App) and sig.is_defined(s.symbol)
                    and prec.equiv(s.symbol, t.symbol)
                    and len(s.args) == len(t.args)):
                return False
            n = len(s.args)
            if len(kids) != n:
                return False
            nu = sig.valency(t.symbol)
            p = 0
            while p < n and kids[p].relation == "eq":
                if not (s.args[p] == t.args[p]
                        and child_proves(kids[p], ("eq",), s.args[p], t.args[p])):
                    return False
                p += 1
            if p >= n or nu[p] != 1:
                return False
            if not child_proves(kids[p], ("prec1",), s.args[p], t.args[p]):
                return False
            search = _OrderSearch(sig, prec)
            for j in range(p + 1, n):
                child = kids[j]
                if nu[j] == 1:
                    if not child_proves(child, ("eq", "prec1"), s.args[j], t.args[j]):
                        return False
                else:
                    if not search._in_lower_fragment(s.args[j], t.symbol):
                        return False
                    if not child_proves(child, ("prec0",), s.args[j], t):
                        return False
            return True
        return False

    return False
