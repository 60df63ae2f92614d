"""Boolean attribute policies: parsing, canonical rendering and evaluation.

Grammar (AND binds tighter than OR, keywords case-insensitive)::

    expr   := term (OR term)*
    term   := factor (AND factor)*
    factor := ATTR | '(' expr ')'

NOT is rejected: the access-tree construction used for CP-ABE has no negation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from ..errors import PolicySyntaxError


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


PolicyExpr = Union[Attr, And, Or]

_KEYWORDS = {"AND", "OR", "NOT"}
_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise PolicySyntaxError("unexpected character", pos)
            break
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(("(", "(", start))
        elif m.group(2):
            tokens.append((")", ")", start))
        else:
            word = m.group(3)
            upper = word.upper()
            tokens.append((upper if upper in _KEYWORDS else "ATTR", word, start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self) -> int:
        return self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)

    def expr(self) -> PolicyExpr:
        terms = [self.term()]
        while self.peek() == "OR":
            self.i += 1
            terms.append(self.term())
        return _combine(Or, terms)

    def term(self) -> PolicyExpr:
        factors = [self.factor()]
        while self.peek() == "AND":
            self.i += 1
            factors.append(self.factor())
        return _combine(And, factors)

    def factor(self) -> PolicyExpr:
        kind = self.peek()
        if kind == "(":
            open_pos = self.pos()
            self.i += 1
            inner = self.expr()
            if self.peek() != ")":
                raise PolicySyntaxError("unbalanced '('", open_pos)
            self.i += 1
            return inner
        if kind == "ATTR":
            _, word, start = self.tokens[self.i]
            if "/" in word:
                raise PolicySyntaxError(f"attribute {word!r} is not a single name component", start)
            self.i += 1
            return Attr(word)
        if kind == "NOT":
            raise PolicySyntaxError("NOT is not supported", self.pos())
        if kind is None:
            raise PolicySyntaxError("unexpected end of policy", self.pos())
        raise PolicySyntaxError(f"unexpected {self.tokens[self.i][1]!r}", self.pos())


def _combine(cls, parts: list) -> PolicyExpr:
    if len(parts) == 1:
        return parts[0]
    flat: list = []
    for p in parts:
        flat.extend(p.children if isinstance(p, cls) else (p,))
    return cls(tuple(flat))


def parse_policy(text: str) -> PolicyExpr:
    if not text or not text.strip():
        raise PolicySyntaxError("empty policy", 0)
    parser = _Parser(text)
    tree = parser.expr()
    if parser.peek() is not None:
        raise PolicySyntaxError(f"unexpected {parser.tokens[parser.i][1]!r}", parser.pos())
    return tree


def render(policy: PolicyExpr) -> str:
    """Canonical text: uppercase keywords, parentheses around nested gates only."""
    if isinstance(policy, Attr):
        return policy.name
    op = " AND " if isinstance(policy, And) else " OR "
    return op.join(render(c) if isinstance(c, Attr) else f"({render(c)})" for c in policy.children)


def satisfies(attrs: Iterable[str], policy: PolicyExpr) -> bool:
    held = attrs if isinstance(attrs, (set, frozenset)) else set(attrs)
    if isinstance(policy, Attr):
        return policy.name in held
    if isinstance(policy, And):
        return all(satisfies(held, c) for c in policy.children)
    return any(satisfies(held, c) for c in policy.children)


def leaves(policy: PolicyExpr) -> list[str]:
    """Leaf attribute names in depth-first order (duplicates kept)."""
    if isinstance(policy, Attr):
        return [policy.name]
    return [name for c in policy.children for name in leaves(c)]


def map_leaves(policy: PolicyExpr, fn) -> PolicyExpr:
    if isinstance(policy, Attr):
        return Attr(fn(policy.name))
    return type(policy)(tuple(map_leaves(c, fn) for c in policy.children))
