import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixtures import (  # noqa: E402
    make_chain_db, make_mas_csv_dir, make_movie_db, make_parallel_edge_db,
    make_pubs_db, make_single_column_db,
)

from sqlsynth import Database, build_value_index, load_catalog  # noqa: E402


@pytest.fixture(scope="session")
def movie_db_path(tmp_path_factory) -> Path:
    return make_movie_db(tmp_path_factory.mktemp("movie") / "movie.sqlite")


@pytest.fixture(scope="session")
def movie_catalog(movie_db_path):
    return load_catalog(movie_db_path)


@pytest.fixture()
def movie_db(movie_db_path):
    db = Database.open(movie_db_path)
    yield db
    db.close()


@pytest.fixture(scope="session")
def movie_index(movie_catalog, movie_db_path):
    db = Database.open(movie_db_path)
    try:
        return build_value_index(movie_catalog, db)
    finally:
        db.close()


@pytest.fixture(scope="session")
def pubs_db_path(tmp_path_factory) -> Path:
    return make_pubs_db(tmp_path_factory.mktemp("pubs") / "pubs.sqlite")


@pytest.fixture(scope="session")
def pubs_catalog(pubs_db_path):
    return load_catalog(pubs_db_path)


@pytest.fixture()
def pubs_db(pubs_db_path):
    db = Database.open(pubs_db_path)
    yield db
    db.close()


@pytest.fixture(scope="session")
def chain_db_path(tmp_path_factory) -> Path:
    return make_chain_db(tmp_path_factory.mktemp("chain") / "chain.sqlite")


@pytest.fixture(scope="session")
def chain_catalog(chain_db_path):
    return load_catalog(chain_db_path)


@pytest.fixture(scope="session")
def parallel_db_path(tmp_path_factory) -> Path:
    return make_parallel_edge_db(
        tmp_path_factory.mktemp("parallel") / "parallel.sqlite")


@pytest.fixture(scope="session")
def single_column_db_path(tmp_path_factory) -> Path:
    return make_single_column_db(
        tmp_path_factory.mktemp("single") / "single.sqlite")


@pytest.fixture(scope="session")
def mas_dir(tmp_path_factory) -> Path:
    return make_mas_csv_dir(tmp_path_factory.mktemp("mas") / "mas_csv")
