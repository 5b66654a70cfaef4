"""Partial query tree: schedule, rendering, canonical equality, traces."""

import pytest

import builders as b
from sqlsynth import (
    HOLE, apply_decision, canonical_eq, canonical_key, holes, new_root,
    render_sql,
)
from sqlsynth.ast import (
    DecisionPoint, DecisionTrace, PartialQuery, QueryBuildError, replay,
)
from sqlsynth.ast import next_decision


def test_root_is_single_placeholder():
    root = new_root()
    assert not root.is_complete()
    assert render_sql(root, "display") == "SELECT ?"
    assert holes(root) == [DecisionPoint("COL", ("select",))]
    assert DecisionTrace().confidence() == 1.0


def test_apply_select_decision_display(movie_catalog):
    root = new_root()
    pq = apply_decision(root, next_decision(root), (b.MOVIE_NAME,))
    pq = apply_decision(pq, next_decision(pq), None)
    assert render_sql(pq, "display") == "SELECT movies.name FROM ?"
    # the input query is untouched
    assert root.select is HOLE


def test_kw_choice_gains_order_placeholder(movie_catalog):
    pq = b.drive([
        ("COL", (b.ACTOR_NAME,)), ("AGG", None), ("join", {"actor"}),
    ], movie_catalog)
    before = holes(pq)
    after_pq = apply_decision(pq, next_decision(pq), frozenset({"ORDER BY"}))
    after = holes(after_pq)
    assert DecisionPoint("KW", ("kw",)) in before
    assert DecisionPoint("COL", ("order",)) in after


def test_where_hole_rendering(movie_catalog):
    cq1 = b.walkthrough_cq1(movie_catalog)
    assert render_sql(cq1, "display") == \
        "SELECT name, birth_yr FROM actor WHERE ?"
    assert render_sql(cq1, "executable") == "SELECT name, birth_yr FROM actor"
    assert holes(cq1) == [DecisionPoint("COL", ("where",))]


def test_illegal_choice_rejected(movie_catalog):
    root = new_root()
    with pytest.raises(QueryBuildError):
        apply_decision(root, next_decision(root), ())
    pq = apply_decision(root, next_decision(root), (b.ACTOR_NAME,))
    with pytest.raises(QueryBuildError):
        apply_decision(pq, next_decision(pq), "MEDIAN")
    with pytest.raises(QueryBuildError):
        apply_decision(pq, DecisionPoint("KW", ("kw",)), frozenset())


def test_executable_render_requires_resolved_select():
    with pytest.raises(QueryBuildError):
        render_sql(new_root(), "executable")


def test_cq3_complete_render(movie_catalog):
    cq3 = b.movie_cq3(movie_catalog)
    assert cq3.is_complete()
    assert holes(cq3) == []
    assert render_sql(cq3, "executable") == (
        "SELECT t3.name, t1.name, t3.year "
        "FROM actor AS t1 "
        "JOIN starring AS t2 ON t1.aid = t2.aid "
        "JOIN movies AS t3 ON t2.mid = t3.mid "
        "WHERE t1.gender = 'male' AND t3.year < 1995 OR t3.year > 2000 "
        "ORDER BY t3.year ASC"
    )


def test_mixed_chain_drops_out_of_executable_render_until_complete(movie_catalog):
    steps = [
        ("COL", (b.MOVIE_NAME, b.ACTOR_NAME, b.MOVIE_YEAR)),
        ("AGG", None), ("AGG", None), ("AGG", None),
        ("join", {"actor", "movies"}),
        ("KW", frozenset({"WHERE"})),
        ("COL", (b.ACTOR_GENDER, b.MOVIE_YEAR)),
        ("AND/OR", "OR"),
        ("OP", "="), ("VALUE", "male"),
    ]
    pq = b.drive(steps, movie_catalog)
    # disjunctive chain with an unresolved arm: nothing may be rendered
    assert "WHERE" not in render_sql(pq, "executable")
    pq = b.drive(steps + [("OP", ">"), ("VALUE", 2000)], movie_catalog)
    assert "WHERE t1.gender = 'male' OR t3.year > 2000" in render_sql(pq, "executable")


def test_and_chain_renders_resolved_prefix(movie_catalog):
    steps = [
        ("COL", (b.ACTOR_NAME,)), ("AGG", None), ("join", {"actor"}),
        ("KW", frozenset({"WHERE"})),
        ("COL", (b.ACTOR_GENDER, b.ACTOR_BIRTH)),
    ]
    pq = b.drive(steps, movie_catalog)
    # connective still open: no predicate may be rendered
    assert "WHERE" not in render_sql(pq, "executable")
    steps += [("AND/OR", "AND"), ("OP", "="), ("VALUE", "male"), ("OP", "<")]
    pq = b.drive(steps, movie_catalog)
    # conjunctive chain: the resolved predicate renders while one is pending
    assert render_sql(pq, "executable").endswith("WHERE gender = 'male'")
    pq = b.drive(steps + [("VALUE", 1960)], movie_catalog)
    assert render_sql(pq, "executable").endswith(
        "WHERE gender = 'male' AND birth_yr < 1960")


def test_canonical_eq_reordered_or_groups(movie_catalog):
    cq3 = b.movie_cq3(movie_catalog)
    swapped = b.drive([
        ("COL", (b.MOVIE_NAME, b.ACTOR_NAME, b.MOVIE_YEAR)),
        ("AGG", None), ("AGG", None), ("AGG", None),
        ("join", {"actor", "movies"}),
        ("KW", frozenset({"WHERE", "ORDER BY"})),
        ("COL", (b.MOVIE_YEAR, b.ACTOR_GENDER, b.MOVIE_YEAR)),
        ("AND/OR", "OR"), ("AND/OR", "AND"),
        ("OP", ">"), ("VALUE", 2000),
        ("OP", "="), ("VALUE", "male"),
        ("OP", "<"), ("VALUE", 1995),
        ("COL", b.MOVIE_YEAR), ("AGG", None), ("DESC/ASC", ("ASC", 0)),
    ], movie_catalog)
    assert canonical_eq(cq3, swapped)


def test_canonical_eq_distinguishes_cq1_cq3(movie_catalog):
    assert not canonical_eq(b.movie_cq1_semantics(movie_catalog),
                            b.movie_cq3(movie_catalog))
    assert not canonical_eq(b.movie_cq2(movie_catalog),
                            b.movie_cq3(movie_catalog))


def test_canonical_key_requires_complete(movie_catalog):
    with pytest.raises(QueryBuildError):
        canonical_key(b.walkthrough_cq1(movie_catalog))


def test_select_order_is_significant(movie_catalog):
    a = b.drive([("COL", (b.MOVIE_NAME, b.ACTOR_NAME)), ("AGG", None),
                 ("AGG", None), ("join", {"actor", "movies"}),
                 ("KW", frozenset())], movie_catalog)
    c = b.drive([("COL", (b.ACTOR_NAME, b.MOVIE_NAME)), ("AGG", None),
                 ("AGG", None), ("join", {"actor", "movies"}),
                 ("KW", frozenset())], movie_catalog)
    assert not canonical_eq(a, c)


def test_trace_replay_reproduces_query(movie_catalog):
    from sqlsynth.catalog import join_graph
    from sqlsynth.guidance import uniform_model
    from sqlsynth.search import EnumConfig, children, root_state

    graph = join_graph(movie_catalog)
    config = EnumConfig(max_set_size=2, timeout=30)
    model = uniform_model()
    literals = [__import__("sqlsynth").Literal("number", 1995)]
    state = root_state()
    import random
    rng = random.Random(7)
    for _ in range(400):
        if state.pq.is_complete():
            assert replay(state.trace) == state.pq
            state = root_state()
            continue
        kids = children(state, model, "names of movies", literals,
                        movie_catalog, graph, config)
        if not kids:
            state = root_state()
            continue
        state = rng.choice(kids)
        assert replay(state.trace) == state.pq
        assert abs(state.trace.confidence() - state.confidence) < 1e-12
