"""Recursive-descent parser for the global query language.

Each _parse_x method assumes the cursor sits on the first token of its
fragment and leaves it one past the last token consumed.  Parsing is
purely syntactic; name and type resolution happen in typecheck.
"""
from __future__ import annotations

from mdbs.errors import GqlSyntaxError
from mdbs.gql.ast import (
    And,
    AttrRef,
    Comparison,
    Delete,
    Insert,
    Literal,
    Or,
    Predicate,
    Select,
    Statement,
    Update,
)
from mdbs.gql.tokens import Token, TokenType, tokenize


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type is not TokenType.EOF:
            self.pos += 1
        return tok

    def fail(self, expected: str) -> GqlSyntaxError:
        tok = self.current()
        got = tok.value if tok.type is not TokenType.EOF else "end of input"
        return GqlSyntaxError(f"expected {expected}, got {got!r}", tok.position)

    def expect_keyword(self, word: str) -> Token:
        tok = self.current()
        if tok.type is TokenType.KEYWORD and tok.value == word:
            return self.advance()
        raise self.fail(word)

    def expect(self, ttype: TokenType, expected: str) -> Token:
        tok = self.current()
        if tok.type is ttype:
            return self.advance()
        raise self.fail(expected)

    def at_keyword(self, word: str) -> bool:
        tok = self.current()
        return tok.type is TokenType.KEYWORD and tok.value == word

    # -- statements ------------------------------------------------------

    def parse_statement(self) -> Statement:
        tok = self.current()
        if tok.type is not TokenType.KEYWORD:
            raise self.fail("SELECT, INSERT, UPDATE or DELETE")
        if tok.value == "SELECT":
            return self.parse_select()
        if tok.value == "INSERT":
            return self.parse_insert()
        if tok.value == "UPDATE":
            return self.parse_update()
        if tok.value == "DELETE":
            return self.parse_delete()
        raise self.fail("SELECT, INSERT, UPDATE or DELETE")

    def parse_select(self) -> Select:
        self.expect_keyword("SELECT")
        projection: tuple[str, ...] | None
        if self.current().type is TokenType.STAR:
            self.advance()
            projection = None
        else:
            names = [self.expect(TokenType.IDENT, "projection attribute").value]
            while self.current().type is TokenType.COMMA:
                self.advance()
                names.append(self.expect(TokenType.IDENT, "attribute").value)
            projection = tuple(names)
        self.expect_keyword("FROM")
        target = self.expect(TokenType.IDENT, "class or view name").value
        predicate = None
        if self.at_keyword("WHERE"):
            self.advance()
            predicate = self.parse_predicate()
        order_by = None
        if self.at_keyword("ORDER"):
            self.advance()
            self.expect_keyword("BY")
            attr = self.expect(TokenType.IDENT, "order attribute").value
            direction = "ASC"
            if self.at_keyword("ASC"):
                self.advance()
            elif self.at_keyword("DESC"):
                self.advance()
                direction = "DESC"
            order_by = (attr, direction)
        limit = None
        if self.at_keyword("LIMIT"):
            self.advance()
            tok = self.expect(TokenType.INT, "row limit")
            if tok.value < 0:
                raise GqlSyntaxError("LIMIT must be non-negative", tok.position)
            limit = tok.value
        return Select(target, projection, predicate, order_by, limit)

    def parse_insert(self) -> Insert:
        self.expect_keyword("INSERT")
        self.expect_keyword("INTO")
        target = self.expect(TokenType.IDENT, "class name").value
        self.expect(TokenType.LPAREN, "(")
        attrs = [self.expect(TokenType.IDENT, "attribute").value]
        while self.current().type is TokenType.COMMA:
            self.advance()
            attrs.append(self.expect(TokenType.IDENT, "attribute").value)
        self.expect(TokenType.RPAREN, ")")
        self.expect_keyword("VALUES")
        self.expect(TokenType.LPAREN, "(")
        values = [self.parse_literal()]
        while self.current().type is TokenType.COMMA:
            self.advance()
            values.append(self.parse_literal())
        self.expect(TokenType.RPAREN, ")")
        return Insert(target, tuple(attrs), tuple(values))

    def parse_update(self) -> Update:
        self.expect_keyword("UPDATE")
        target = self.expect(TokenType.IDENT, "class name").value
        self.expect_keyword("SET")
        sets = [self.parse_assignment()]
        while self.current().type is TokenType.COMMA:
            self.advance()
            sets.append(self.parse_assignment())
        predicate = None
        if self.at_keyword("WHERE"):
            self.advance()
            predicate = self.parse_predicate()
        return Update(target, tuple(sets), predicate)

    def parse_assignment(self) -> tuple[str, Literal]:
        attr = self.expect(TokenType.IDENT, "attribute").value
        tok = self.current()
        if tok.type is not TokenType.OP or tok.value != "=":
            raise self.fail("=")
        self.advance()
        return attr, self.parse_literal()

    def parse_delete(self) -> Delete:
        self.expect_keyword("DELETE")
        self.expect_keyword("FROM")
        target = self.expect(TokenType.IDENT, "class name").value
        predicate = None
        if self.at_keyword("WHERE"):
            self.advance()
            predicate = self.parse_predicate()
        return Delete(target, predicate)

    # -- predicates --------------------------------------------------------

    def parse_predicate(self) -> Predicate:
        disjuncts = [self.parse_conjunction()]
        while self.at_keyword("OR"):
            self.advance()
            disjuncts.append(self.parse_conjunction())
        if len(disjuncts) == 1:
            return disjuncts[0]
        return Or(tuple(disjuncts))

    def parse_conjunction(self) -> Predicate:
        comparisons = [self.parse_comparison()]
        while self.at_keyword("AND"):
            self.advance()
            comparisons.append(self.parse_comparison())
        if len(comparisons) == 1:
            return comparisons[0]
        return And(tuple(comparisons))

    def parse_comparison(self) -> Comparison:
        left = self.expect(TokenType.IDENT, "attribute").value
        tok = self.current()
        if tok.type is not TokenType.OP:
            raise self.fail("comparison operator")
        op = self.advance().value
        rhs = self.current()
        if rhs.type is TokenType.IDENT:
            self.advance()
            return Comparison(left, op, AttrRef(rhs.value))
        return Comparison(left, op, self.parse_literal())

    def parse_literal(self) -> Literal:
        tok = self.current()
        if tok.type is TokenType.INT or tok.type is TokenType.FLOAT:
            self.advance()
            return Literal(tok.value)
        if tok.type is TokenType.STRING:
            self.advance()
            return Literal(tok.value)
        if tok.type is TokenType.KEYWORD and tok.value in ("TRUE", "FALSE", "NULL"):
            self.advance()
            if tok.value == "NULL":
                return Literal(None)
            return Literal(tok.value == "TRUE")
        raise self.fail("literal")


def parse(tokens: list[Token]) -> Statement:
    parser = _Parser(tokens)
    statement = parser.parse_statement()
    tail = parser.current()
    if tail.type is not TokenType.EOF:
        raise GqlSyntaxError(f"unexpected trailing input {tail.value!r}", tail.position)
    return statement


def parse_statement(text: str) -> Statement:
    return parse(tokenize(text))


def parse_predicate(text: str) -> Predicate:
    parser = _Parser(tokenize(text))
    predicate = parser.parse_predicate()
    tail = parser.current()
    if tail.type is not TokenType.EOF:
        raise GqlSyntaxError(f"unexpected trailing input {tail.value!r}", tail.position)
    return predicate
