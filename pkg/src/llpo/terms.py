"""Terms, signatures, programs, and the line-oriented .trs format.

Data terms are built from constructors of arity 0 (constants) or 1
(successors); computation is given by rewrite rules over defined symbols
of arity >= 1. Every value here is immutable after construction and all
operations are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

__all__ = [
    "Var", "App", "Term",
    "FunctionDecl", "Signature", "Rule", "Program", "Diagnostic",
    "TrsError", "ParseError",
    "size", "height", "substitute", "match_pattern", "unify",
    "variables", "var_set", "app_symbols", "subterms", "subterm_at",
    "is_ground", "is_constructor_term", "is_pattern_term",
    "term_to_str", "parse_program", "parse_term", "program_to_trs",
    "validate_program",
]


class TrsError(Exception):
    """An input is structurally unusable (bad declarations, bad terms)."""


class ParseError(TrsError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class Var:
    """A variable occurrence: any identifier the signature does not declare."""

    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("Var", name))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return type(other) is Var and other.name == self.name

    def __repr__(self) -> str:
        return f"Var({self.name!r})"

    def __str__(self) -> str:
        return self.name


class App:
    """A symbol applied to child terms; constants are nullary applications."""

    __slots__ = ("symbol", "args", "_hash")

    def __init__(self, symbol: str, args: tuple = ()):
        self.symbol = symbol
        self.args = tuple(args)
        # Hash is cached so large shared terms are cheap dict keys.
        self._hash = hash((symbol, self.args))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (type(other) is App and other._hash == self._hash
                and other.symbol == self.symbol and other.args == self.args)

    def __repr__(self) -> str:
        return f"App({self.symbol!r}, {self.args!r})"

    def __str__(self) -> str:
        return term_to_str(self)


Term = Union[Var, App]


def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(term_to_str(a) for a in t.args)})"


# ---------------------------------------------------------------------------
# Signatures and programs


@dataclass
class FunctionDecl:
    """A defined symbol: its arity and, optionally, a 0/1 flag per argument
    marking it as recursion-driving (1) or substitutable (0)."""

    arity: int
    valency: Optional[tuple[int, ...]] = None


@dataclass
class Signature:
    constructors: dict[str, int]          # name -> arity in {0, 1}
    defined: dict[str, FunctionDecl]      # name -> declaration
    main: str

    def is_constructor(self, name: str) -> bool:
        return name in self.constructors

    def is_defined(self, name: str) -> bool:
        return name in self.defined

    def is_declared(self, name: str) -> bool:
        return name in self.constructors or name in self.defined

    def arity(self, name: str) -> int:
        if name in self.constructors:
            return self.constructors[name]
        if name in self.defined:
            return self.defined[name].arity
        raise TrsError(f"undeclared symbol: {name}")

    def valency(self, name: str) -> tuple[int, ...]:
        decl = self.defined.get(name)
        if decl is None:
            raise TrsError(f"undeclared defined symbol: {name}")
        if decl.valency is None:
            raise TrsError(f"no valency declared for {name}")
        return decl.valency

    def has_valencies(self) -> bool:
        return all(d.valency is not None for d in self.defined.values())

    def with_valencies(self, valency: dict[str, tuple[int, ...]]) -> "Signature":
        """Copy of this signature with the given valency assignment applied."""
        defined = {}
        for name, decl in self.defined.items():
            nu = valency.get(name, decl.valency)
            defined[name] = FunctionDecl(decl.arity, nu)
        return Signature(dict(self.constructors), defined, self.main)

    def check(self) -> None:
        if not any(a == 0 for a in self.constructors.values()):
            raise TrsError("signature needs at least one 0-ary constructor")
        for name, a in self.constructors.items():
            if a not in (0, 1):
                raise TrsError(f"constructor {name} has arity {a}, must be 0 or 1")
        overlap = set(self.constructors) & set(self.defined)
        if overlap:
            raise TrsError(f"symbols declared twice: {', '.join(sorted(overlap))}")
        for name, decl in self.defined.items():
            if decl.arity < 1:
                raise TrsError(f"defined symbol {name} must have arity >= 1")
            if decl.valency is not None:
                if len(decl.valency) != decl.arity:
                    raise TrsError(f"valency of {name} has wrong length")
                if any(v not in (0, 1) for v in decl.valency):
                    raise TrsError(f"valency of {name} must use 0/1 flags")
        if self.main not in self.defined:
            raise TrsError(f"main symbol {self.main} is not a declared function")


@dataclass(frozen=True)
class Rule:
    lhs: App
    rhs: Term


@dataclass
class Program:
    signature: Signature
    rules: tuple[Rule, ...]
    # Ascending precedence classes from the file, e.g. (("d0","d1"),("h",),("f",)).
    precedence_classes: Optional[tuple[tuple[str, ...], ...]] = None


@dataclass(frozen=True)
class Diagnostic:
    severity: str                 # "error" or "warning"
    message: str
    rule_index: Optional[int] = None

    def __str__(self) -> str:
        where = "" if self.rule_index is None else f"rule {self.rule_index + 1}: "
        return f"{self.severity}: {where}{self.message}"


# ---------------------------------------------------------------------------
# Structural measures and operations


def size(t: Term) -> int:
    """Number of symbols in t; variables count 1, like constants do in height."""
    if isinstance(t, Var):
        return 1
    return 1 + sum(size(a) for a in t.args)


def height(t: Term) -> int:
    """Length of the longest branch; constants and variables have height 1."""
    if isinstance(t, Var) or not t.args:
        return 1
    return 1 + max(height(a) for a in t.args)


def substitute(t: Term, sigma: dict[str, Term]) -> Term:
    """Replace variables by their images; unmapped variables stay put."""
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    return App(t.symbol, tuple(substitute(a, sigma) for a in t.args))


def match_pattern(pattern: Term, subject: Term) -> Optional[dict[str, Term]]:
    """Match subject against pattern, returning the witnessing substitution.

    Repeated pattern variables must bind syntactically equal subterms.
    """
    bindings: dict[str, Term] = {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            seen = bindings.get(p.name)
            if seen is None:
                bindings[p.name] = s
            elif seen != s:
                return None
        else:
            if not isinstance(s, App) or s.symbol != p.symbol or len(s.args) != len(p.args):
                return None
            stack.extend(zip(p.args, s.args))
    return bindings


def unify(s: Term, t: Term) -> Optional[dict[str, Term]]:
    """Most general unifier of two terms, or None (with occurs check)."""
    subst: dict[str, Term] = {}

    def walk(u: Term) -> Term:
        while isinstance(u, Var) and u.name in subst:
            u = subst[u.name]
        return u

    def occurs(name: str, u: Term) -> bool:
        u = walk(u)
        if isinstance(u, Var):
            return u.name == name
        return any(occurs(name, a) for a in u.args)

    work = [(s, t)]
    while work:
        a, b = work.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Var):
            if occurs(a.name, b):
                return None
            subst[a.name] = b
        elif isinstance(b, Var):
            if occurs(b.name, a):
                return None
            subst[b.name] = a
        else:
            if a.symbol != b.symbol or len(a.args) != len(b.args):
                return None
            work.extend(zip(a.args, b.args))
    return subst


def variables(t: Term) -> Iterator[str]:
    """Variable names in t, with multiplicity, left to right."""
    if isinstance(t, Var):
        yield t.name
    else:
        for a in t.args:
            yield from variables(a)


def var_set(t: Term) -> frozenset[str]:
    return frozenset(variables(t))


def app_symbols(t: Term) -> Iterator[str]:
    if isinstance(t, App):
        yield t.symbol
        for a in t.args:
            yield from app_symbols(a)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def subterm_at(t: Term, position: tuple[int, ...]) -> Term:
    for i in position:
        if not isinstance(t, App) or i >= len(t.args):
            raise TrsError(f"no subterm at position {position}")
        t = t.args[i]
    return t


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return all(is_ground(a) for a in t.args)


def is_constructor_term(t: Term, sig: Signature) -> bool:
    """Ground term built from constructors only (a data value)."""
    if isinstance(t, Var):
        return False
    return sig.is_constructor(t.symbol) and all(is_constructor_term(a, sig) for a in t.args)


def is_pattern_term(t: Term, sig: Signature) -> bool:
    """Term over constructors and variables only (a rule argument pattern)."""
    if isinstance(t, Var):
        return True
    return sig.is_constructor(t.symbol) and all(is_pattern_term(a, sig) for a in t.args)


# ---------------------------------------------------------------------------
# Parsing the .trs format

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SECTION_RE = re.compile(r"^\s*(constructors|functions|precedence|main|rules)\s*:")
_DECL_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*"
    r"(?:valency\s*\(\s*([01](?:\s*,\s*[01])*)?\s*\))?\s*$"
)


class _TermScanner:
    """Token scanner for a single line fragment, tracking columns."""

    def __init__(self, text: str, line_no: int, col_offset: int):
        self.text = text
        self.pos = 0
        self.line_no = line_no
        self.col_offset = col_offset

    def col(self) -> int:
        return self.col_offset + self.pos + 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line_no, self.col())

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise self.error(f"expected '{ch}'")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = _IDENT_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected an identifier")
        self.pos = m.end()
        return m.group(0)

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _scan_term(sc: _TermScanner, sig: Signature) -> Term:
    start_col = None
    sc.skip_ws()
    start_col = sc.col()
    name = sc.ident()
    args: list[Term] = []
    applied = False
    if sc.peek() == "(":
        applied = True
        sc.take("(")
        if sc.peek() != ")":
            args.append(_scan_term(sc, sig))
            while sc.peek() == ",":
                sc.take(",")
                args.append(_scan_term(sc, sig))
        sc.take(")")
    if sig.is_declared(name):
        want = sig.arity(name)
        if len(args) != want:
            raise ParseError(
                f"arity mismatch: {name} declared with arity {want}, used with {len(args)}",
                sc.line_no, start_col)
        return App(name, tuple(args))
    if applied:
        raise ParseError(f"undeclared symbol: {name}", sc.line_no, start_col)
    return Var(name)


def parse_term(text: str, sig: Signature, line_no: int = 1, col_offset: int = 0) -> Term:
    """Parse a single term over the given signature.

    Undeclared bare identifiers become variables; applying an undeclared
    identifier is an error.
    """
    sc = _TermScanner(text, line_no, col_offset)
    t = _scan_term(sc, sig)
    if not sc.at_end():
        raise sc.error("trailing input after term")
    return t


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_program(text: str) -> Program:
    """Parse the .trs format: declaration sections plus a rules section."""
    single: dict[str, tuple[str, int, int]] = {}   # section -> (content, line, col)
    rule_lines: list[tuple[str, int, int]] = []
    current_rules = False
    rules_seen = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section == "rules":
                if rules_seen:
                    raise ParseError("duplicate rules section", line_no, m.start(1) + 1)
                rules_seen = True
                current_rules = True
                rest = line[m.end():]
                if rest.strip():
                    raise ParseError("rules must start on the following lines",
                                     line_no, m.end() + 1)
            else:
                if section in single:
                    raise ParseError(f"duplicate {section} section", line_no, m.start(1) + 1)
                current_rules = False
                single[section] = (line[m.end():], line_no, m.end())
        elif current_rules:
            indent = len(line) - len(line.lstrip())
            rule_lines.append((line.strip(), line_no, indent))
        else:
            raise ParseError("expected a section header like 'constructors:'",
                             line_no, len(line) - len(line.lstrip()) + 1)

    for required in ("constructors", "functions", "main"):
        if required not in single:
            raise ParseError(f"missing {required} section", 1, 1)

    constructors: dict[str, int] = {}
    content, line_no, col = single["constructors"]
    for item in _split_decl_items(content):
        name, arity, valency = _parse_decl_item(item, line_no, col)
        if valency is not None:
            raise ParseError(f"constructor {name} cannot carry a valency", line_no, col + 1)
        if arity > 1:
            raise ParseError(f"constructor {name} has arity {arity}, must be 0 or 1",
                             line_no, col + 1)
        if name in constructors:
            raise ParseError(f"constructor {name} declared twice", line_no, col + 1)
        constructors[name] = arity

    defined: dict[str, FunctionDecl] = {}
    content, line_no, col = single["functions"]
    for item in _split_decl_items(content):
        name, arity, valency = _parse_decl_item(item, line_no, col)
        if arity < 1:
            raise ParseError(f"defined symbol {name} must have arity >= 1", line_no, col + 1)
        if name in defined or name in constructors:
            raise ParseError(f"symbol {name} declared twice", line_no, col + 1)
        if valency is not None and len(valency) != arity:
            raise ParseError(f"valency of {name} must list {arity} flags", line_no, col + 1)
        defined[name] = FunctionDecl(arity, valency)

    content, line_no, col = single["main"]
    main = content.strip()
    if not _IDENT_RE.fullmatch(main):
        raise ParseError("main must name one defined symbol", line_no, col + 1)

    sig = Signature(constructors, defined, main)
    sig.check()

    precedence_classes: Optional[tuple[tuple[str, ...], ...]] = None
    if "precedence" in single:
        content, line_no, col = single["precedence"]
        if content.strip():
            precedence_classes = _parse_precedence(content, sig, line_no, col)

    rules: list[Rule] = []
    for line, line_no, col in rule_lines:
        if "->" not in line:
            raise ParseError("rule must be 'lhs -> rhs'", line_no, col + 1)
        lhs_text, _, rhs_text = line.partition("->")
        lhs = parse_term(lhs_text.strip(), sig, line_no, col)
        rhs = parse_term(rhs_text.strip(), sig, line_no,
                         col + line.index("->") + 2)
        if not isinstance(lhs, App) or not sig.is_defined(lhs.symbol):
            raise ParseError("rule left-hand side must apply a defined symbol",
                             line_no, col + 1)
        rules.append(Rule(lhs, rhs))

    return Program(sig, tuple(rules), precedence_classes)


def _split_decl_items(content: str) -> list[str]:
    items = [part.strip() for part in content.split(",")]
    # A declaration may itself contain commas inside valency(...); re-join those.
    merged: list[str] = []
    depth = 0
    for part in items:
        if depth > 0:
            merged[-1] += ", " + part
        else:
            merged.append(part)
        depth += part.count("(") - part.count(")")
    return [m for m in merged if m]


def _parse_decl_item(item: str, line_no: int, col: int) -> tuple[str, int, Optional[tuple[int, ...]]]:
    m = _DECL_RE.match(item)
    if not m:
        raise ParseError(f"bad declaration {item!r}, expected name/arity", line_no, col + 1)
    name, arity = m.group(1), int(m.group(2))
    valency: Optional[tuple[int, ...]] = None
    if m.group(3) is not None or "valency" in item:
        flags = m.group(3) or ""
        valency = tuple(int(f.strip()) for f in flags.split(",")) if flags.strip() else ()
    return name, arity, valency


def _parse_precedence(content: str, sig: Signature, line_no: int, col: int
                      ) -> tuple[tuple[str, ...], ...]:
    classes: list[tuple[str, ...]] = []
    seen: set[str] = set()
    for chunk in content.split("<"):
        names = tuple(n.strip() for n in chunk.split("="))
        for n in names:
            if not sig.is_defined(n):
                raise ParseError(f"precedence names undeclared function {n!r}", line_no, col + 1)
            if n in seen:
                raise ParseError(f"precedence lists {n} twice", line_no, col + 1)
            seen.add(n)
        classes.append(names)
    missing = set(sig.defined) - seen
    if missing:
        raise ParseError(f"precedence must mention every function (missing: "
                         f"{', '.join(sorted(missing))})", line_no, col + 1)
    return tuple(classes)


def program_to_trs(p: Program) -> str:
    """Serialize a program back to the .trs format."""
    sig = p.signature
    cons = ", ".join(f"{n}/{a}" for n, a in sig.constructors.items())
    funcs = []
    for n, d in sig.defined.items():
        if d.valency is None:
            funcs.append(f"{n}/{d.arity}")
        else:
            funcs.append(f"{n}/{d.arity} valency({','.join(str(v) for v in d.valency)})")
    lines = [f"constructors: {cons}", f"functions:    {', '.join(funcs)}"]
    if p.precedence_classes:
        lines.append("precedence:   "
                     + " < ".join(" = ".join(c) for c in p.precedence_classes))
    lines.append(f"main:         {sig.main}")
    lines.append("rules:")
    for rule in p.rules:
        lines.append(f"  {term_to_str(rule.lhs)} -> {term_to_str(rule.rhs)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation


def validate_program(p: Program) -> list[Diagnostic]:
    """Structural diagnostics; an empty list means the program is orthogonal
    (left-linear, no overlapping left-hand sides) and hence confluent."""
    out: list[Diagnostic] = []
    sig = p.signature

    for i, rule in enumerate(p.rules):
        for t, side in ((rule.lhs, "lhs"), (rule.rhs, "rhs")):
            for u in subterms(t):
                if isinstance(u, App):
                    if not sig.is_declared(u.symbol):
                        out.append(Diagnostic("error", f"undeclared symbol {u.symbol} in {side}", i))
                    elif len(u.args) != sig.arity(u.symbol):
                        out.append(Diagnostic(
                            "error",
                            f"arity violation: {u.symbol} used with {len(u.args)} "
                            f"arguments in {side}", i))
        if not isinstance(rule.lhs, App) or not sig.is_defined(rule.lhs.symbol):
            out.append(Diagnostic("error", "lhs must apply a defined symbol", i))
        elif not all(is_pattern_term(a, sig) for a in rule.lhs.args):
            out.append(Diagnostic(
                "error", "lhs arguments must be constructor-and-variable patterns", i))
        extra = var_set(rule.rhs) - var_set(rule.lhs)
        for name in sorted(extra):
            out.append(Diagnostic("error", f"{name} not in Var(lhs)", i))
        names = list(variables(rule.lhs))
        if len(names) != len(set(names)):
            out.append(Diagnostic("warning", "lhs is not left-linear", i))

    for i in range(len(p.rules)):
        for j in range(i + 1, len(p.rules)):
            li = p.rules[i].lhs
            lj = _rename_apart(p.rules[j].lhs)
            if li.symbol == lj.symbol and unify(li, lj) is not None:
                out.append(Diagnostic(
                    "warning", f"rules {i + 1} and {j + 1} overlap (critical pair)", i))
    return out


def _rename_apart(t: Term) -> Term:
    if isinstance(t, Var):
        return Var(t.name + "'")
    return App(t.symbol, tuple(_rename_apart(a) for a in t.args))
