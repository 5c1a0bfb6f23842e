"""Shared dataset and model fixtures for the test suite.

Synthetic datasets are forward-sampled from fixed ground-truth parameters
via ``sample_dataset`` so tests can compare recovered structure against a
known answer.
"""
from __future__ import annotations

import numpy as np

from mwz import (
    CGaussian, Column, DataTable, INPUT, Indexed, Missing, STR_T, Schema,
    State, Table, Upto, ValidState, cdiscrete, sample_dataset, type_cast,
    validate_state,
)
from mwz.typing_ops import ToReal, ToUpto
from mwz.model_ops import model_discrete, model_gaussian, quad_reg, lin_reg

# ---------------------------------------------------------------------------
# Apple freefall

APPLE_ROWS = [
    ("0", "200"), ("1", "196"), ("2", "179"), ("3", "155.1"),
    ("4", Missing), ("5", Missing), ("6.5", "0"), ("7", Missing),
    (Missing, "50"),
]
APPLE_OBSERVED = [r for r in APPLE_ROWS if Missing not in r]

APPLE_CSV = "Time,Elevation\n0,200\n1,196\n2,179\n3,155.1\n4,\n5,\n6.5,0\n7,\n,50\n"


def apple_state(rows=None) -> ValidState:
    """Typed apple table with Time modeled Gaussian, Elevation still input."""
    rows = APPLE_ROWS if rows is None else rows
    t = Table("tmain", (Column("Time", STR_T), Column("Elevation", STR_T)))
    dt = DataTable("tmain", ("Time", "Elevation"), tuple(rows))
    vs = validate_state(Schema((t,)), (dt,))
    for op in (type_cast("tmain", "Time", ToReal()),
               type_cast("tmain", "Elevation", ToReal()),
               model_gaussian("tmain", "Time")):
        _, vs = op.run(vs)
    return vs


# ---------------------------------------------------------------------------
# Sprinkler Bayesian network

SPRINKLER_COLS = ("cloudy", "sprinkler", "wetGrass", "rain")

# ground truth: cloudy; sprinkler|cloudy; wetGrass|sprinkler; rain|cloudy,wetGrass
SPRINKLER_TRUTH = {
    "tmain.cloudy": {"probs": [0.5, 0.5]},
    "tmain.sprinkler": {"probs": {(0,): [0.5, 0.5], (1,): [0.9, 0.1]}},
    "tmain.wetGrass": {"probs": {(0,): [0.8, 0.2], (1,): [0.1, 0.9]}},
    "tmain.rain": {"probs": {(0, 0): [0.9, 0.1], (0, 1): [0.4, 0.6],
                             (1, 0): [0.7, 0.3], (1, 1): [0.1, 0.9]}},
}


def sprinkler_truth_state() -> ValidState:
    cols = (
        Column("cloudy", Upto(2), cdiscrete(2)),
        Column("sprinkler", Upto(2), Indexed(cdiscrete(2), (), "cloudy")),
        Column("wetGrass", Upto(2), Indexed(cdiscrete(2), (), "sprinkler")),
        Column("rain", Upto(2),
               Indexed(Indexed(cdiscrete(2), (), "cloudy"), (), "wetGrass")),
    )
    t = Table("tmain", cols)
    return validate_state(Schema((t,)), (DataTable("tmain", SPRINKLER_COLS, ()),))


def sprinkler_data(n_rows: int = 1000, seed: int = 0) -> ValidState:
    """All-input Upto(2) table with rows sampled from the ground truth."""
    (dt,) = sample_dataset(sprinkler_truth_state(), SPRINKLER_TRUTH,
                           {"tmain": n_rows}, seed=seed)
    cols = tuple(Column(c, Upto(2), INPUT) for c in SPRINKLER_COLS)
    return validate_state(Schema((Table("tmain", cols),)), (dt,))


def sprinkler_csv(n_rows: int = 1000, seed: int = 0) -> str:
    (dt,) = sample_dataset(sprinkler_truth_state(), SPRINKLER_TRUTH,
                           {"tmain": n_rows}, seed=seed)
    lines = [",".join(SPRINKLER_COLS)]
    for row in dt.grid:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Plants functional-dependency table

PLANT_PAIRS = [
    ("Quercus", "robur"), ("Quercus", "suber"), ("Acer", "rubrum"),
    ("Acer", "palmatum"), ("Pinus", "nigra"), ("Pinus", "mugo"),
    ("Salix", "alba"), ("Salix", "caprea"), ("Betula", "pendula"),
    ("Betula", "nana"),
]
PLANT_PRIORITY = {p: str(i % 4) for i, p in enumerate(PLANT_PAIRS)}
PLANT_CITES = {p: ("yes" if i % 3 == 0 else "no")
               for i, p in enumerate(PLANT_PAIRS)}
PLANT_COUNTRIES = ["FR", "DE", "ES", "PL", "IT"]


def plants_state(n_rows: int = 200, seed: int = 7) -> ValidState:
    """(Genus, Species) determines conserve_priority and On_CITES; price and
    country vary within pairs, so only those two columns are dependent."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for i in range(n_rows):
        pair = PLANT_PAIRS[int(rng.integers(len(PLANT_PAIRS)))]
        rows.append((pair[0], pair[1], PLANT_PRIORITY[pair], PLANT_CITES[pair],
                     f"{rng.uniform(1, 100):.2f}",
                     PLANT_COUNTRIES[int(rng.integers(len(PLANT_COUNTRIES)))]))
    names = ("Genus", "Species", "conserve_priority", "On_CITES", "price",
             "country")
    t = Table("tmain", tuple(Column(n, STR_T) for n in names))
    dt = DataTable("tmain", names, tuple(rows))
    return validate_state(Schema((t,)), (dt,))


# ---------------------------------------------------------------------------
# Movie ratings

def denormalized_movies(seed: int = 3) -> ValidState:
    """Single ratings table carrying user and movie attributes redundantly."""
    rng = np.random.Generator(np.random.PCG64(seed))
    users = {u: (str(20 + int(rng.integers(40))), "mf"[int(rng.integers(2))])
             for u in ("u1", "u2", "u3", "u4", "u5")}
    movies = {m: str(1980 + int(rng.integers(40)))
              for m in ("m1", "m2", "m3", "m4", "m5", "m6")}
    rows = []
    for u in users:
        for m in movies:
            if rng.random() < 0.6:
                rows.append((u, users[u][0], users[u][1], m, movies[m],
                             str(int(rng.integers(1, 6)))))
    names = ("userId", "age", "gender", "movieId", "year", "rating")
    t = Table("tmain", tuple(Column(n, STR_T) for n in names))
    dt = DataTable("tmain", names, tuple(rows))
    return validate_state(Schema((t,)), (dt,))


def normalized_movies(seed: int = 11) -> ValidState:
    """Three linked tables sized so users contribute 40 attribute cells,
    movies 60 and ratings 25 — 125 cells total for hold-out analysis."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n_users, n_movies, n_ratings = 20, 30, 25
    user_cluster = [int(rng.integers(2)) for _ in range(n_users)]
    movie_cluster = [int(rng.integers(2)) for _ in range(n_movies)]
    users = []
    for u in range(n_users):
        base = 25.0 if user_cluster[u] == 0 else 55.0
        users.append((f"u{u}", round(base + rng.normal(0, 3.0), 2),
                      user_cluster[u]))
    movies = []
    for m in range(n_movies):
        base = 1985.0 if movie_cluster[m] == 0 else 2015.0
        movies.append((f"m{m}", round(base + rng.normal(0, 4.0), 1),
                       movie_cluster[m]))
    pairs = set()
    while len(pairs) < n_ratings:
        pairs.add((int(rng.integers(n_users)), int(rng.integers(n_movies))))
    ratings = []
    for u, m in sorted(pairs):
        mean = {(0, 0): 1.0, (0, 1): 4.0, (1, 0): 4.0, (1, 1): 2.0}[
            (user_cluster[u], movie_cluster[m])]
        r = int(np.clip(round(mean + rng.normal(0, 0.5)), 0, 4))
        ratings.append((u, m, r))

    t_users = Table("users", (
        Column("userId", STR_T, INPUT, is_pk=True),
        Column("age", STR_T), Column("ageGroup", STR_T)))
    t_movies = Table("movies", (
        Column("movieId", STR_T, INPUT, is_pk=True),
        Column("year", STR_T), Column("genre", STR_T)))
    t_ratings = Table("ratings", (
        Column("user", STR_T), Column("movie", STR_T), Column("rating", STR_T)))
    d_users = DataTable("users", ("userId", "age", "ageGroup"), tuple(
        (u, str(age), "young" if cl == 0 else "old")
        for u, age, cl in users))
    d_movies = DataTable("movies", ("movieId", "year", "genre"), tuple(
        (m, str(y), "classic" if cl == 0 else "modern")
        for m, y, cl in movies))
    d_ratings = DataTable("ratings", ("user", "movie", "rating"), tuple(
        (f"u{u}", f"m{m}", str(r)) for u, m, r in ratings))
    vs = validate_state(Schema((t_users, t_movies, t_ratings)),
                        (d_users, d_movies, d_ratings))
    from mwz import link
    for op in (type_cast("users", "age", ToReal()),
               type_cast("movies", "year", ToReal()),
               type_cast("ratings", "rating", ToUpto(5)),
               link("users", [("user", "userId")], "ratings", "user"),
               link("movies", [("movie", "movieId")], "ratings", "movie")):
        _, vs = op.run(vs)
    return vs


# ---------------------------------------------------------------------------
# Two-cluster synthetic for the sweep

def two_cluster_data(seed: int = 5):
    """Users/titles with 2 strongly separated latent clusters each and a
    ratings table whose value depends on the cluster pair."""
    from mwz import REAL_T, LinkT

    n_users, n_titles, n_ratings = 10, 10, 30
    t_users = Table("users", (
        Column("userId", STR_T, INPUT, is_pk=True),
        Column("cluster", Upto(2), cdiscrete(2), is_latent=True),
        Column("score", REAL_T, Indexed(CGaussian(), (), "cluster"))))
    t_titles = Table("titles", (
        Column("titleId", STR_T, INPUT, is_pk=True),
        Column("cluster", Upto(2), cdiscrete(2), is_latent=True),
        Column("length", REAL_T, Indexed(CGaussian(), (), "cluster"))))
    t_ratings = Table("ratings", (
        Column("user", LinkT("users"), INPUT),
        Column("title", LinkT("titles"), INPUT),
        Column("rating", REAL_T,
               Indexed(Indexed(CGaussian(), ("user",), "cluster"),
                       ("title",), "cluster"))))
    schema = Schema((t_users, t_titles, t_ratings))
    empty = validate_state(schema, (
        DataTable("users", ("userId", "cluster", "score"), ()),
        DataTable("titles", ("titleId", "cluster", "length"), ()),
        DataTable("ratings", ("user", "title", "rating"), ())))

    rng = np.random.Generator(np.random.PCG64(seed))
    truth = {
        "users.userId": {"values": [f"u{i}" for i in range(n_users)]},
        "users.cluster": {"probs": [0.5, 0.5]},
        "users.score": {"mean": {(0,): -10.0, (1,): 10.0},
                        "prec": {(0,): 4.0, (1,): 4.0}},
        "titles.titleId": {"values": [f"t{i}" for i in range(n_titles)]},
        "titles.cluster": {"probs": [0.5, 0.5]},
        "titles.length": {"mean": {(0,): 60.0, (1,): 120.0},
                          "prec": {(0,): 0.25, (1,): 0.25}},
        "ratings.user": {"values": [int(rng.integers(n_users))
                                    for _ in range(n_ratings)]},
        "ratings.title": {"values": [int(rng.integers(n_titles))
                                     for _ in range(n_ratings)]},
        "ratings.rating": {"mean": {(0, 0): 0.0, (0, 1): 8.0,
                                    (1, 0): 8.0, (1, 1): 2.0},
                           "prec": {c: 16.0 for c in
                                    ((0, 0), (0, 1), (1, 0), (1, 1))}},
    }
    data = sample_dataset(empty, truth, {"users": n_users, "titles": n_titles,
                                         "ratings": n_ratings}, seed=seed)

    # rebuild as an all-input state (links kept, clusters dropped)
    def strip(table, dt, drop):
        keep = [i for i, c in enumerate(table.columns) if c.name not in drop]
        cols = tuple(replace_input(table.columns[i]) for i in keep)
        grid = tuple(tuple(row[i] for i in keep) for row in dt.grid)
        names = tuple(table.columns[i].name for i in keep)
        return Table(table.name, cols), DataTable(table.name, names, grid)

    def replace_input(c: Column) -> Column:
        return Column(c.name, c.ctype, INPUT, is_pk=c.is_pk)

    tu, du = strip(t_users, data[0], {"cluster"})
    tt, dtt = strip(t_titles, data[1], {"cluster"})
    tr, dr = strip(t_ratings, data[2], set())
    return validate_state(Schema((tu, tt, tr)), (du, dtt, dr))
