"""Parsing SQL text into complete partial-query trees.

Only the supported SPJA subset is accepted: inner FK-PK joins, flat predicate
chains (explicit parentheses must agree with AND/OR precedence), a single
aggregate HAVING predicate, one ORDER BY item, and LIMIT.  Set operations,
subqueries, outer joins, and genuinely nested mixed logic raise `ScopeError`.
Top-level DISTINCT is accepted and ignored (it never changes the supported
queries' semantics in canonical comparisons).
"""

from __future__ import annotations

import re

from .ast import (
    AGGREGATES, HOLE, HavingClause, JoinPath, KW_GROUP, KW_ORDER, KW_WHERE,
    OrderClause, PartialQuery, Predicate, PredicateChain, STAR, ScopeError,
    SelectItem,
)
from .catalog import ColumnRef, SchemaCatalog


class ParseError(Exception):
    """Input is not parseable as a supported query."""


_OUT_OF_SCOPE = ("UNION", "INTERSECT", "EXCEPT", "EXISTS", "IN", "NOT",
                 "LEFT", "RIGHT", "OUTER", "FULL", "CROSS", "CASE")

_TOKEN_RE = re.compile(r"""
      '(?:[^']|'')*'          # string literal
    | \d+\.\d+ | \.\d+ | \d+  # number
    | [A-Za-z_][A-Za-z_0-9]*  # identifier / keyword
    | >= | <= | != | <>
    | [(),.*=<>;]
""", re.VERBOSE)


def _tokenize(sql: str) -> list[str]:
    tokens = []
    pos = 0
    text = sql.strip()
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if text[pos] == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise ParseError("unterminated quoted identifier")
            tokens.append(text[pos + 1:end])
            pos = end + 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(f"cannot tokenize near: {text[pos:pos + 20]!r}")
        tokens.append(match.group(0))
        pos = match.end()
    return tokens


class _Tokens:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> str | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def peek_upper(self, offset: int = 0) -> str | None:
        tok = self.peek(offset)
        return tok.upper() if tok is not None else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def accept(self, word: str) -> bool:
        if self.peek_upper() == word.upper():
            self.pos += 1
            return True
        return False

    def expect(self, word: str) -> None:
        if not self.accept(word):
            raise ParseError(f"expected {word!r}, found {self.peek()!r}")

    def done(self) -> bool:
        while self.peek() == ";":
            self.pos += 1
        return self.peek() is None


def _is_identifier(tok: str | None) -> bool:
    return tok is not None and re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok) is not None


def _literal_value(tok: str):
    if tok.startswith("'"):
        return tok[1:-1].replace("''", "'")
    if re.fullmatch(r"\d+", tok):
        return int(tok)
    if re.fullmatch(r"\d*\.\d+|\d+\.\d*", tok):
        return float(tok)
    raise ParseError(f"expected a literal, found {tok!r}")


class _Resolver:
    """Alias and bare-column resolution against the catalog."""

    def __init__(self, catalog: SchemaCatalog):
        self.catalog = catalog
        self.alias_to_table: dict[str, str] = {}
        self.tables: list[str] = []

    def add_table(self, table: str, alias: str | None):
        if not self.catalog.has_table(table):
            raise ParseError(f"unknown table {table!r}")
        self.tables.append(table)
        self.alias_to_table[table.lower()] = table
        if alias:
            self.alias_to_table[alias.lower()] = table

    def resolve(self, qualifier: str | None, column: str) -> ColumnRef:
        if qualifier is not None:
            table = self.alias_to_table.get(qualifier.lower())
            if table is None:
                raise ParseError(f"unknown table or alias {qualifier!r}")
            ref = ColumnRef(table, column)
            self.catalog.column_type(ref)  # raises if the column is missing
            return ref
        owners = [t for t in dict.fromkeys(self.tables)
                  if any(c.name == column for c in self.catalog.table(t).columns)]
        if not owners:
            raise ParseError(f"unknown column {column!r}")
        if len(owners) > 1:
            raise ParseError(f"ambiguous column {column!r} (in {owners})")
        return ColumnRef(owners[0], column)


def _parse_column(tokens: _Tokens, resolver: _Resolver) -> ColumnRef:
    first = tokens.next()
    if not _is_identifier(first):
        raise ParseError(f"expected a column reference, found {first!r}")
    if tokens.peek() == ".":
        tokens.next()
        second = tokens.next()
        return resolver.resolve(first, second)
    return resolver.resolve(None, first)


def _parse_term(tokens: _Tokens, resolver: _Resolver) -> SelectItem:
    """A select/order/having term: column, or AGG(column | *)."""
    tok = tokens.peek_upper()
    if tok in AGGREGATES:
        tokens.next()
        tokens.expect("(")
        if tokens.peek_upper() == "DISTINCT":
            raise ScopeError("DISTINCT inside aggregates is out of scope")
        if tokens.peek() == "*":
            tokens.next()
            column: object = STAR
        else:
            column = _parse_column(tokens, resolver)
        tokens.expect(")")
        if column is STAR and tok != "COUNT":
            raise ScopeError("star is only allowed under COUNT")
        return SelectItem(column, tok)
    if tokens.peek() == "*":
        raise ScopeError("bare star projections are out of scope")
    return SelectItem(_parse_column(tokens, resolver), None)


# -- boolean expressions -----------------------------------------------------


def _parse_atom(tokens: _Tokens, resolver: _Resolver) -> Predicate:
    if tokens.peek_upper() in _OUT_OF_SCOPE:
        raise ScopeError(f"{tokens.peek_upper()} is out of scope")
    column = _parse_column(tokens, resolver)
    op_tok = tokens.next().upper()
    if op_tok in ("IN", "NOT", "IS"):
        raise ScopeError(f"{op_tok} predicates are out of scope")
    if op_tok == "<>":
        op_tok = "!="
    if op_tok == "BETWEEN":
        lo = _literal_value(tokens.next())
        tokens.expect("AND")
        hi = _literal_value(tokens.next())
        return Predicate(column, "BETWEEN", (lo, hi))
    if op_tok == "LIKE":
        return Predicate(column, "LIKE", _literal_value(tokens.next()))
    if op_tok not in ("=", "!=", ">", "<", ">=", "<="):
        raise ParseError(f"unsupported operator {op_tok!r}")
    if tokens.peek() == "(":
        raise ScopeError("subqueries are out of scope")
    return Predicate(column, op_tok, _literal_value(tokens.next()))


def _parse_bool(tokens: _Tokens, resolver: _Resolver):
    """Parse with precedence into an OR-list of AND-lists, flagging parens."""

    def parse_primary():
        if tokens.peek() == "(":
            tokens.next()
            node = parse_or()
            tokens.expect(")")
            return node
        atom = _parse_atom(tokens, resolver)
        return ("atom", atom)

    def parse_and():
        parts = [parse_primary()]
        while tokens.peek_upper() == "AND":
            tokens.next()
            parts.append(parse_primary())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def parse_or():
        parts = [parse_and()]
        while tokens.peek_upper() == "OR":
            tokens.next()
            parts.append(parse_and())
        return parts[0] if len(parts) == 1 else ("or", parts)

    return parse_or()


def _normalize_bool(node):
    """Collapse same-connective nesting (redundant parentheses)."""
    if node[0] == "atom":
        return node
    kind, parts = node
    flat = []
    for part in (_normalize_bool(p) for p in parts):
        if part[0] == kind:
            flat.extend(part[1])
        else:
            flat.append(part)
    return (kind, flat)


def _flatten_bool(node) -> PredicateChain:
    """Flatten the tree to a precedence chain; reject nested mixed logic.

    Accepted shapes reduce to a disjunction of conjunctions of atoms (what a
    flat chain under SQL precedence can express).  An OR nested inside an AND
    cannot be flattened and is rejected.
    """
    def as_group(sub) -> list[Predicate]:
        kind = sub[0]
        if kind == "atom":
            return [sub[1]]
        if kind == "and":
            atoms = []
            for part in sub[1]:
                if part[0] != "atom":
                    raise ScopeError(
                        "nested expressions with mixed logical operators are out of scope")
                atoms.append(part[1])
            return atoms
        raise ScopeError(
            "nested expressions with mixed logical operators are out of scope")

    node = _normalize_bool(node)
    kind = node[0]
    groups = [as_group(node)] if kind in ("atom", "and") else \
        [as_group(part) for part in node[1]]
    predicates: list[Predicate] = []
    connectives: list[str] = []
    for gi, group in enumerate(groups):
        for pi, pred in enumerate(group):
            if predicates:
                connectives.append("AND" if pi > 0 else "OR")
            predicates.append(pred)
    # the first connective of each non-initial group is OR; inside groups AND
    return PredicateChain(tuple(predicates), tuple(connectives))


# -- top level ----------------------------------------------------------------


def parse_gold(sql: str, catalog: SchemaCatalog) -> PartialQuery:
    """Parse a complete in-scope query; raises ScopeError / ParseError."""
    upper_tokens = [t.upper() for t in _tokenize(sql)]
    for word in ("UNION", "INTERSECT", "EXCEPT"):
        if word in upper_tokens:
            raise ScopeError(f"set operation {word} is out of scope")

    tokens = _Tokens(_tokenize(sql))
    resolver = _Resolver(catalog)
    tokens.expect("SELECT")
    tokens.accept("DISTINCT")  # canonicalization noise; not a search dimension

    # select items are parsed after FROM resolves aliases; scan ahead
    select_start = tokens.pos
    depth = 0
    while True:
        tok = tokens.peek_upper()
        if tok is None:
            raise ParseError("missing FROM clause")
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth -= 1
        elif tok == "FROM" and depth == 0:
            break
        tokens.next()
    select_end = tokens.pos
    tokens.expect("FROM")

    def parse_table_intro():
        table = tokens.next()
        alias = None
        if tokens.accept("AS"):
            alias = tokens.next()
        elif _is_identifier(tokens.peek()) and tokens.peek_upper() not in (
                "JOIN", "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "ON"):
            alias = tokens.next()
        resolver.add_table(table, alias)
        return resolver.alias_to_table[(alias or table).lower()]

    if tokens.peek() == "(":
        raise ScopeError("subqueries in FROM are out of scope")
    first_table = parse_table_intro()
    join_tables = [first_table]
    join_conditions = []
    while tokens.peek_upper() in ("JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS"):
        word = tokens.peek_upper()
        if word in ("LEFT", "RIGHT", "FULL", "CROSS"):
            raise ScopeError(f"{word} joins are out of scope")
        if word == "INNER":
            tokens.next()
        tokens.expect("JOIN")
        join_tables.append(parse_table_intro())
        tokens.expect("ON")
        left = _parse_column(tokens, resolver)
        tokens.expect("=")
        right = _parse_column(tokens, resolver)
        join_conditions.append((left, right))

    # select items, now that aliases exist
    select_tokens = _Tokens(tokens.tokens[select_start:select_end])
    items = [_parse_term(select_tokens, resolver)]
    while select_tokens.accept(","):
        items.append(_parse_term(select_tokens, resolver))
    if not select_tokens.done():
        raise ParseError(f"trailing select tokens: {select_tokens.peek()!r}")

    where_chain = None
    if tokens.accept("WHERE"):
        where_chain = _flatten_bool(_parse_bool(tokens, resolver))

    group_cols = None
    having = None
    if tokens.accept("GROUP"):
        tokens.expect("BY")
        group_cols = [_parse_column(tokens, resolver)]
        while tokens.accept(","):
            group_cols.append(_parse_column(tokens, resolver))
        if tokens.accept("HAVING"):
            paren = tokens.accept("(")
            term = _parse_term(tokens, resolver)
            if not term.is_aggregate():
                raise ScopeError("HAVING supports a single aggregate predicate")
            op = tokens.next().upper()
            if op == "<>":
                op = "!="
            if op == "BETWEEN":
                lo = _literal_value(tokens.next())
                tokens.expect("AND")
                value: object = (lo, _literal_value(tokens.next()))
            elif op in ("=", "!=", ">", "<", ">=", "<="):
                value = _literal_value(tokens.next())
            else:
                raise ParseError(f"unsupported HAVING operator {op!r}")
            if paren:
                tokens.expect(")")
            if tokens.peek_upper() in ("AND", "OR"):
                raise ScopeError("HAVING supports a single aggregate predicate")
            having = HavingClause(term, op, value)

    order_clause = None
    if tokens.accept("ORDER"):
        tokens.expect("BY")
        term = _parse_term(tokens, resolver)
        direction = "ASC"
        if tokens.peek_upper() in ("ASC", "DESC"):
            direction = tokens.next().upper()
        if tokens.peek() == ",":
            raise ScopeError("multiple ORDER BY items are out of scope")
        order_clause = OrderClause(term, direction)

    limit = 0
    if tokens.accept("LIMIT"):
        limit = int(_literal_value(tokens.next()))

    if not tokens.done():
        raise ParseError(f"trailing tokens: {tokens.peek()!r}")

    # join path: every ON pair must be a declared FK-PK edge
    edges = []
    for left, right in join_conditions:
        edge = None
        for candidate in catalog.edges:
            pair = {candidate.from_ref, candidate.to_ref}
            if pair == {left, right}:
                edge = candidate
                break
        if edge is None:
            raise ScopeError(f"join on {left} = {right} is not a declared FK-PK edge")
        edges.append(edge)
    join_path = JoinPath(frozenset(join_tables), tuple(edges))

    declared = frozenset(
        kw for kw, present in (
            (KW_WHERE, where_chain is not None),
            (KW_GROUP, group_cols is not None),
            (KW_ORDER, order_clause is not None),
        ) if present)

    return PartialQuery(
        select=tuple(items),
        declared=declared,
        where=where_chain,
        group_by=tuple(group_cols) if group_cols is not None else None,
        having=having,
        order_by=order_clause,
        limit=limit,
        join_path=join_path,
    )
