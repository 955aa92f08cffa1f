"""Concrete grammar and recursive-descent parser for static expressions.

Grammar sketch (binary operators from tightest to loosest: `;`, `[]`, `||`;
postfix relabel/restrict/sync bind tighter than any binary operator):

    par      := choice ('||' choice)*
    choice   := seq ('[]' seq)*
    seq      := postfix (';' postfix)*
    postfix  := primary ('[' renames ']' | 'rs' name | 'sy' name | '^' int)*
    primary  := activity | 'stop' | '(' par ')' | '[' par '*' par '*' par ']'
    activity := '(' '{' actions? '}' ',' rate ')'
    rate     := number ('/' number)? | '#' int ':' number ('/' number)?

Actions are `[a-z][a-z0-9_]*`, conjugates are written `~a`.  Probabilities
must lie in (0;1), weights must be positive, delays are non-negative
integers.  `stop` expands to a restricted internal action that user syntax
cannot name, so it can never be re-enabled.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from .activities import Action, Activity, Deterministic, Multiaction, RelabelMap, Stochastic
from .errors import ParseError
from .syntax import (Act, Choice, Iter, Par, Relabel, Restrict, Seq, StaticExpr,
                     Sync, STOP_ACTION)

_PUNCT = ("||", "[]", "->", "{", "}", "(", ")", "[", "]", ",", ";", "*", "~",
          "#", ":", "/", "^")
_KEYWORDS = ("rs", "sy", "stop")


@dataclass(frozen=True)
class Token:
    kind: str  # 'punct' | 'name' | 'number' | 'int' | 'eof'
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == "%":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "$":
            raise ParseError("unbound parameter (bind it with -p name=value)", line, col)
        two = text[i:i + 2]
        if two in ("||", "[]", "->"):
            tokens.append(Token("punct", two, line, col))
            i, col = i + 2, col + 2
            continue
        if c in "{}()[],;*~#:/^":
            tokens.append(Token("punct", c, line, col))
            i, col = i + 1, col + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                tokens.append(Token("number", text[i:j], line, col))
            else:
                tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() and c.islower():
            j = i
            while j < n and (text[j].islower() or text[j].isdigit() or text[j] == "_"):
                j += 1
            tokens.append(Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def error(self, msg: str) -> ParseError:
        tok = self.peek()
        return ParseError(msg, tok.line, tok.col)

    # expression levels ------------------------------------------------

    def parse_par(self) -> StaticExpr:
        left = self.parse_choice()
        while self.peek().text == "||":
            self.next()
            left = Par(left, self.parse_choice())
        return left

    def parse_choice(self) -> StaticExpr:
        left = self.parse_seq()
        while self.peek().text == "[]":
            self.next()
            left = Choice(left, self.parse_seq())
        return left

    def parse_seq(self) -> StaticExpr:
        left = self.parse_postfix()
        while self.peek().text == ";":
            self.next()
            left = Seq(left, self.parse_postfix())
        return left

    def parse_postfix(self) -> StaticExpr:
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.text == "rs" and tok.kind == "name":
                self.next()
                expr = Restrict(expr, self.parse_base_action())
            elif tok.text == "sy" and tok.kind == "name":
                self.next()
                expr = Sync(expr, self.parse_base_action())
            elif tok.text == "[" and self.peek(1).kind == "name" and self.peek(2).text == "->":
                expr = Relabel(expr, self.parse_relabel_map())
            elif tok.text == "^":
                self.next()
                expr = self.attach_stamp(expr)
            else:
                return expr

    def attach_stamp(self, expr: StaticExpr) -> StaticExpr:
        tok = self.peek()
        if tok.kind != "int":
            raise self.error("expected an integer timer stamp after '^'")
        self.next()
        stamp = int(tok.text)
        if not isinstance(expr, Act) or not expr.activity.is_waiting:
            raise ParseError("timer stamp only applies to a waiting activity",
                             tok.line, tok.col)
        delay = expr.activity.delay
        if not (1 <= stamp <= delay):
            raise ParseError(f"timer stamp {stamp} outside 1..{delay}", tok.line, tok.col)
        return Act(expr.activity, stamp)

    def parse_primary(self) -> StaticExpr:
        tok = self.peek()
        if tok.text == "stop" and tok.kind == "name":
            self.next()
            return Restrict(
                Act(Activity(Multiaction.of((STOP_ACTION,)), Stochastic(Fraction(1, 2)))),
                STOP_ACTION)
        if tok.text == "(":
            if self.peek(1).text == "{":
                return self.parse_activity()
            self.next()
            expr = self.parse_par()
            self.expect(")")
            return expr
        if tok.text == "[":
            self.next()
            init = self.parse_par()
            self.expect("*")
            body = self.parse_par()
            self.expect("*")
            term = self.parse_par()
            self.expect("]")
            return Iter(init, body, term)
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    # leaves -------------------------------------------------------------

    def parse_activity(self) -> StaticExpr:
        self.expect("(")
        self.expect("{")
        actions: list[Action] = []
        if self.peek().text != "}":
            actions.append(self.parse_action())
            while self.peek().text == ",":
                self.next()
                actions.append(self.parse_action())
        self.expect("}")
        self.expect(",")
        tok = self.peek()
        if tok.text == "#":
            self.next()
            delay_tok = self.peek()
            if delay_tok.kind != "int":
                raise self.error("expected an integer delay after '#'")
            self.next()
            self.expect(":")
            weight = self.parse_rational()
            if weight <= 0:
                raise ParseError("weight must be positive", tok.line, tok.col)
            kind = Deterministic(int(delay_tok.text), weight)
        else:
            prob = self.parse_rational()
            if not (0 < prob < 1):
                raise ParseError("probability must lie in (0;1)", tok.line, tok.col)
            kind = Stochastic(prob)
        self.expect(")")
        return Act(Activity(Multiaction.of(actions), kind))

    def parse_action(self) -> Action:
        if self.peek().text == "~":
            self.next()
            return self.parse_base_action().conjugate()
        return self.parse_base_action()

    def parse_base_action(self) -> Action:
        tok = self.peek()
        if tok.kind != "name" or tok.text in _KEYWORDS:
            raise self.error("expected an action name")
        self.next()
        return Action(tok.text)

    def parse_rational(self) -> Fraction:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return Fraction(tok.text)
        if tok.kind == "int":
            self.next()
            value = Fraction(int(tok.text))
            if self.peek().text == "/":
                self.next()
                den = self.peek()
                if den.kind != "int":
                    raise self.error("expected an integer denominator")
                self.next()
                if int(den.text) == 0:
                    raise ParseError("zero denominator", den.line, den.col)
                value = Fraction(int(tok.text), int(den.text))
            return value
        raise self.error("expected a number")

    def parse_relabel_map(self) -> RelabelMap:
        start = self.expect("[")
        pairs: list[tuple[Action, Action]] = []
        while True:
            src = self.parse_base_action()
            self.expect("->")
            dst = self.parse_action()
            pairs.append((src, dst))
            if self.peek().text == ",":
                self.next()
                continue
            break
        self.expect("]")
        try:
            return RelabelMap.of(pairs)
        except ValueError as exc:
            raise ParseError(str(exc), start.line, start.col) from exc


def parse_static(text: str) -> StaticExpr:
    """Parse a static expression; raises ParseError with line/column info."""
    parser = _Parser(_lex(text))
    try:
        expr = parser.parse_par()
    except ValueError as exc:  # range errors from activity constructors
        tok = parser.peek()
        raise ParseError(str(exc), tok.line, tok.col) from exc
    trailing = parser.peek()
    if trailing.kind != "eof":
        raise ParseError(f"unexpected trailing input {trailing.text!r}",
                         trailing.line, trailing.col)
    return expr
