"""Shared fixture databases for the test suite.

The movie database is seeded so that every narrative fact the golden tests
rely on holds: Tom Hanks (male, born 1956) starred in Forrest Gump (1994),
Sandra Bullock (female, born 1964) in Gravity (2013), no actor was born in
[2010, 2017], no revenue falls in [1950, 1960], and "Ed Wood" appears both as
an actor name and a movie name.
"""

from __future__ import annotations

import json
import sqlite3
from pathlib import Path

MOVIE_DDL = """
CREATE TABLE actor (
    aid INTEGER PRIMARY KEY,
    name TEXT,
    gender TEXT,
    birth_yr INTEGER,
    birthplace TEXT,
    debut_yr INTEGER
);
CREATE TABLE movies (
    mid INTEGER PRIMARY KEY,
    name TEXT,
    year INTEGER,
    revenue INTEGER
);
CREATE TABLE starring (
    aid INTEGER REFERENCES actor(aid),
    mid INTEGER REFERENCES movies(mid)
);
"""

MOVIE_ACTORS = [
    (1, "Tom Hanks", "male", 1956, "Concord", 1980),
    (2, "Sandra Bullock", "female", 1964, "Arlington", 1987),
    (3, "Brad Pitt", "male", 1963, "Shawnee", 1987),
    (4, "Meryl Streep", "female", 1949, "Summit", 1977),
    (5, "Ed Wood", "male", 1924, "Poughkeepsie", 1948),
]

MOVIE_MOVIES = [
    (1, "Forrest Gump", 1994, 678),
    (2, "Gravity", 2013, 723),
    (3, "Apollo 13", 1995, 355),
    (4, "Speed", 1994, 350),
    (5, "The Martian", 2015, 630),
    (6, "Ed Wood", 1994, 6),
    (7, "Ocean's Eleven", 2001, 450),
]

MOVIE_STARRING = [(1, 1), (2, 2), (1, 3), (2, 4), (3, 7), (4, 5), (5, 6)]


def make_movie_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    conn.executescript(MOVIE_DDL)
    conn.executemany("INSERT INTO actor VALUES (?,?,?,?,?,?)", MOVIE_ACTORS)
    conn.executemany("INSERT INTO movies VALUES (?,?,?,?)", MOVIE_MOVIES)
    conn.executemany("INSERT INTO starring VALUES (?,?)", MOVIE_STARRING)
    conn.commit()
    conn.close()
    return path


PUBS_DDL = """
CREATE TABLE organization (
    oid INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE author (
    aid INTEGER PRIMARY KEY,
    name TEXT,
    oid INTEGER REFERENCES organization(oid)
);
CREATE TABLE conference (
    cid INTEGER PRIMARY KEY,
    name TEXT
);
CREATE TABLE publication (
    pid INTEGER PRIMARY KEY,
    title TEXT,
    year INTEGER,
    cid INTEGER REFERENCES conference(cid)
);
CREATE TABLE writes (
    aid INTEGER REFERENCES author(aid),
    pid INTEGER REFERENCES publication(pid)
);
"""

PUBS_ROWS = {
    "organization": [(1, "Redwood Lab"), (2, "Summit Institute")],
    "author": [
        (1, "Alice Lau", 1), (2, "Bob Chen", 1), (3, "Carol Diaz", 2),
        (4, "Dmitri Volkov", 2), (5, "Erin Moss", 1),
    ],
    "conference": [(1, "SIGMOD"), (2, "VLDB"), (3, "KDD")],
    "publication": [
        (1, "Query Sketching", 2018, 1),
        (2, "Join Paths at Scale", 2019, 1),
        (3, "Learning to Rank", 2019, 2),
        (4, "Sampling Tricks", 2020, 2),
        (5, "Tuple Provenance", 2020, 1),
        (6, "Graph Motifs", 2021, 3),
        (7, "Index Advisors", 2021, 1),
        (8, "Stream Joins", 2022, 2),
    ],
    "writes": [
        (1, 1), (1, 2), (1, 5), (1, 7),
        (2, 2), (2, 3), (2, 8),
        (3, 3), (3, 4), (3, 6),
        (4, 4), (4, 8),
        (5, 1), (5, 6), (5, 7), (5, 8),
    ],
}


def make_pubs_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    conn.executescript(PUBS_DDL)
    for table, rows in PUBS_ROWS.items():
        marks = ",".join("?" for _ in rows[0])
        conn.executemany(f"INSERT INTO {table} VALUES ({marks})", rows)
    conn.commit()
    conn.close()
    return path


def make_chain_db(path: Path) -> Path:
    """Four tables joined in a chain: a - b - c - d."""
    conn = sqlite3.connect(path)
    conn.executescript("""
        CREATE TABLE a (a_id INTEGER PRIMARY KEY, a_val TEXT);
        CREATE TABLE b (b_id INTEGER PRIMARY KEY, a_id INTEGER REFERENCES a(a_id), b_val TEXT);
        CREATE TABLE c (c_id INTEGER PRIMARY KEY, b_id INTEGER REFERENCES b(b_id), c_val TEXT);
        CREATE TABLE d (d_id INTEGER PRIMARY KEY, c_id INTEGER REFERENCES c(c_id), d_val TEXT);
    """)
    conn.executemany("INSERT INTO a VALUES (?,?)", [(1, "a1"), (2, "a2")])
    conn.executemany("INSERT INTO b VALUES (?,?,?)", [(1, 1, "b1"), (2, 2, "b2")])
    conn.executemany("INSERT INTO c VALUES (?,?,?)", [(1, 1, "c1"), (2, 2, "c2")])
    conn.executemany("INSERT INTO d VALUES (?,?,?)", [(1, 1, "d1"), (2, 2, "d2")])
    conn.commit()
    conn.close()
    return path


def make_parallel_edge_db(path: Path) -> Path:
    """Two FK edges between the same table pair (sender and receiver)."""
    conn = sqlite3.connect(path)
    conn.executescript("""
        CREATE TABLE person (pid INTEGER PRIMARY KEY, name TEXT);
        CREATE TABLE message (
            msg_id INTEGER PRIMARY KEY,
            sender INTEGER REFERENCES person(pid),
            receiver INTEGER REFERENCES person(pid),
            body TEXT
        );
    """)
    conn.executemany("INSERT INTO person VALUES (?,?)",
                     [(1, "Ann"), (2, "Ben")])
    conn.executemany("INSERT INTO message VALUES (?,?,?,?)",
                     [(1, 1, 2, "hi"), (2, 2, 1, "hello")])
    conn.commit()
    conn.close()
    return path


def make_single_column_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    conn.executescript("CREATE TABLE t (x INTEGER);")
    conn.executemany("INSERT INTO t VALUES (?)", [(1,), (2,), (3,)])
    conn.commit()
    conn.close()
    return path


# The 15-table academic-search style descriptor: 19 declared FK edges.
MAS_SCHEMA = {
    "tables": [
        {"name": "author", "columns": [
            {"name": "aid", "type": "number"}, {"name": "name", "type": "text"},
            {"name": "oid", "type": "number"}], "primary_key": ["aid"]},
        {"name": "organization", "columns": [
            {"name": "oid", "type": "number"}, {"name": "name", "type": "text"},
            {"name": "continent", "type": "text"}], "primary_key": ["oid"]},
        {"name": "publication", "columns": [
            {"name": "pid", "type": "number"}, {"name": "title", "type": "text"},
            {"name": "year", "type": "number"}, {"name": "cid", "type": "number"},
            {"name": "jid", "type": "number"}], "primary_key": ["pid"]},
        {"name": "conference", "columns": [
            {"name": "cid", "type": "number"}, {"name": "name", "type": "text"},
            {"name": "homepage", "type": "text"}], "primary_key": ["cid"]},
        {"name": "journal", "columns": [
            {"name": "jid", "type": "number"}, {"name": "name", "type": "text"},
            {"name": "homepage", "type": "text"}], "primary_key": ["jid"]},
        {"name": "keyword", "columns": [
            {"name": "kid", "type": "number"}, {"name": "keyword", "type": "text"}],
         "primary_key": ["kid"]},
        {"name": "domain", "columns": [
            {"name": "did", "type": "number"}, {"name": "name", "type": "text"}],
         "primary_key": ["did"]},
        {"name": "writes", "columns": [
            {"name": "aid", "type": "number"}, {"name": "pid", "type": "number"}],
         "primary_key": []},
        {"name": "cite", "columns": [
            {"name": "citing", "type": "number"}, {"name": "cited", "type": "number"}],
         "primary_key": []},
        {"name": "domain_author", "columns": [
            {"name": "aid", "type": "number"}, {"name": "did", "type": "number"}],
         "primary_key": []},
        {"name": "domain_conference", "columns": [
            {"name": "cid", "type": "number"}, {"name": "did", "type": "number"}],
         "primary_key": []},
        {"name": "domain_journal", "columns": [
            {"name": "jid", "type": "number"}, {"name": "did", "type": "number"}],
         "primary_key": []},
        {"name": "domain_keyword", "columns": [
            {"name": "kid", "type": "number"}, {"name": "did", "type": "number"}],
         "primary_key": []},
        {"name": "domain_publication", "columns": [
            {"name": "did", "type": "number"}, {"name": "pid", "type": "number"}],
         "primary_key": []},
        {"name": "publication_keyword", "columns": [
            {"name": "pid", "type": "number"}, {"name": "kid", "type": "number"}],
         "primary_key": []},
    ],
    "foreign_keys": [
        {"from": ["author", "oid"], "to": ["organization", "oid"]},
        {"from": ["publication", "cid"], "to": ["conference", "cid"]},
        {"from": ["publication", "jid"], "to": ["journal", "jid"]},
        {"from": ["writes", "aid"], "to": ["author", "aid"]},
        {"from": ["writes", "pid"], "to": ["publication", "pid"]},
        {"from": ["cite", "citing"], "to": ["publication", "pid"]},
        {"from": ["cite", "cited"], "to": ["publication", "pid"]},
        {"from": ["domain_author", "aid"], "to": ["author", "aid"]},
        {"from": ["domain_author", "did"], "to": ["domain", "did"]},
        {"from": ["domain_conference", "cid"], "to": ["conference", "cid"]},
        {"from": ["domain_conference", "did"], "to": ["domain", "did"]},
        {"from": ["domain_journal", "jid"], "to": ["journal", "jid"]},
        {"from": ["domain_journal", "did"], "to": ["domain", "did"]},
        {"from": ["domain_keyword", "kid"], "to": ["keyword", "kid"]},
        {"from": ["domain_keyword", "did"], "to": ["domain", "did"]},
        {"from": ["domain_publication", "did"], "to": ["domain", "did"]},
        {"from": ["domain_publication", "pid"], "to": ["publication", "pid"]},
        {"from": ["publication_keyword", "pid"], "to": ["publication", "pid"]},
        {"from": ["publication_keyword", "kid"], "to": ["keyword", "kid"]},
    ],
}


def make_mas_csv_dir(path: Path) -> Path:
    """A CSV-directory source carrying the 15-table descriptor (no rows)."""
    path.mkdir(parents=True, exist_ok=True)
    (path / "schema.json").write_text(json.dumps(MAS_SCHEMA, indent=1))
    for table in MAS_SCHEMA["tables"]:
        headers = ",".join(c["name"] for c in table["columns"])
        (path / f"{table['name']}.csv").write_text(headers + "\n")
    return path
