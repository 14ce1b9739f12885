"""Global query language: scanner, parser and catalog-bound validation.

Import order matters here: ``mdbs.gql.typecheck`` depends on the catalog
model, which itself uses the predicate AST, so this package only exports
the catalog-independent pieces eagerly.
"""
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
    render_predicate,
    render_statement,
)
from mdbs.gql.parser import parse, parse_predicate, parse_statement
from mdbs.gql.tokens import Token, TokenType, tokenize

__all__ = [
    "And",
    "AttrRef",
    "Comparison",
    "Delete",
    "Insert",
    "Literal",
    "Or",
    "Predicate",
    "Select",
    "Statement",
    "Update",
    "render_predicate",
    "render_statement",
    "parse",
    "parse_predicate",
    "parse_statement",
    "Token",
    "TokenType",
    "tokenize",
]
