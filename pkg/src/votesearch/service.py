"""HTTP facade over the search pipeline.

One app serves one dataset. Endpoints:

  GET  /healthz    liveness plus dataset shape
  GET  /movies     case-insensitive title lookup for typeahead
  POST /search     run a committee query, mirrors the CLI JSON plus timing
  POST /embedding  extension set -> dissimilarity graph -> 2-D layout

Error shape follows the pipeline's taxonomy: unknown resource ids are 404,
structurally hopeless queries (no supporters, or supporters who approve
nothing else) are 422, and anything malformed in the request itself is 400.
FastAPI's native validation errors are downgraded from 422 to 400 so that
422 stays reserved for the two degenerate-query cases.

The app holds a shared rank-table cache for the default gamma; it is the
only mutable state and is internally locked.
"""

from __future__ import annotations

import secrets
import time
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .analysis import RankTableCache, build_dissimilarity_graph, build_extension, embed
from .elections import ApprovalElection
from .ingest import Catalog, MovieInfo
from .search import (
    NoSupportersError,
    Query,
    UnknownResourceError,
    format_p,
    parse_p,
    search,
)
from .synthetic import SyntheticConfig, generate_election

_TO_INTERNAL = {"exact": "exact0", "greedy": "greedy", "anneal": "annealing"}
_TO_SERVICE = {v: k for k, v in _TO_INTERNAL.items()}

MAX_EMBED_ITERATIONS = 200_000


class SearchRequest(BaseModel):
    query: list[int] = Field(min_length=1)
    p: str = "0"
    k: int = 10
    algorithm: Literal["exact", "greedy", "anneal"] = "greedy"
    gamma: float = 2.0
    seed: int | None = None


class EmbeddingRequest(BaseModel):
    ids: list[int]
    k: int = 10
    p_values: list[str] = ["0", "1", "2", "3"]
    gamma: float = 2.0
    iterations: int = 2000
    seed: int = 0


def synthetic_fixture(
    seed: int = 0, voters: int = 500, draws: int = 120
) -> tuple[ApprovalElection, Catalog]:
    """Self-contained dataset for demos and end-to-end tests.

    Titles encode the planted grid cell ("Movie 3.7.04") and the genre pair
    names the category and subcategory, so structure is visible in the UI.
    """
    cfg = SyntheticConfig(seed=seed, voters=voters, draws_per_voter=draws)
    generated = generate_election(cfg)
    entries = {}
    for mid in range(cfg.num_movies):
        u, v, i = cfg.movie_label(mid)
        entries[mid] = MovieInfo(
            title=f"Movie {u}.{v}.{i:02d}",
            genres=(f"Category {u}", f"Subcategory {u}.{v}"),
        )
    return generated.election, Catalog(entries)


def create_app(
    election: ApprovalElection,
    catalog: Catalog,
    *,
    gamma_default: float = 2.0,
    node_cap: int = 200,
    rank_cache_size: int = 256,
) -> FastAPI:
    app = FastAPI(title="votesearch", docs_url="/docs")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    approval_counts = election.approval_counts
    shared_cache = RankTableCache(election, gamma_default, maxsize=rank_cache_size)

    @app.exception_handler(RequestValidationError)
    def downgrade_validation_error(request, exc):
        detail = [
            {"loc": list(e["loc"]), "msg": e["msg"], "type": e["type"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "agents": election.num_agents,
            "resources": len(election.resources),
        }

    @app.get("/movies")
    def movies(q: str | None = None, limit: int = 20):
        if not q:
            raise HTTPException(400, "q must be a non-empty string")
        if limit < 1:
            raise HTTPException(400, "limit must be >= 1")
        hits = catalog.search(q)
        hits.sort(key=lambda mid: (-approval_counts.get(mid, 0), mid))
        return [
            {
                "id": mid,
                "title": catalog.get(mid).title,
                "genres": list(catalog.get(mid).genres),
                "global_approvals": approval_counts.get(mid, 0),
            }
            for mid in hits[:limit]
        ]

    @app.post("/search")
    def run_search(req: SearchRequest):
        algorithm = _TO_INTERNAL[req.algorithm]
        seed = req.seed
        if algorithm == "annealing" and seed is None:
            seed = secrets.randbits(32)
        try:
            query = Query(
                resources=frozenset(req.query),
                p=parse_p(req.p),
                gamma=req.gamma,
                k=req.k,
                algorithm=algorithm,
                seed=seed,
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc))

        started = time.perf_counter()
        try:
            result = search(election, catalog, query)
        except UnknownResourceError as exc:
            raise HTTPException(404, str(exc))
        except NoSupportersError as exc:
            raise HTTPException(422, str(exc))
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if result.no_results:
            raise HTTPException(
                422, "supporters of the query approve nothing else"
            )

        body = result.to_json_dict()
        return {
            "query": body["query"],
            "p": body["p"],
            "k": body["k"],
            "algorithm": _TO_SERVICE[result.algorithm],
            "gamma": req.gamma,
            "seed": result.seed,
            "members": body["members"],
            "score": body["score"],
            "truncated": body["truncated"],
            "timing_ms": round(elapsed_ms, 3),
        }

    @app.post("/embedding")
    def run_embedding(req: EmbeddingRequest):
        if not req.ids:
            raise HTTPException(400, "ids must name at least one resource")
        if req.k < 1:
            raise HTTPException(400, "k must be >= 1")
        if not 1 <= req.iterations <= MAX_EMBED_ITERATIONS:
            raise HTTPException(
                400, f"iterations must be in 1..{MAX_EMBED_ITERATIONS}"
            )
        try:
            p_values = [parse_p(text) for text in req.p_values]
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        if not p_values:
            raise HTTPException(400, "p_values must not be empty")

        ids = sorted(set(req.ids))
        try:
            ext = build_extension(
                election, ids, k=req.k, p_values=p_values, gamma=req.gamma
            )
        except UnknownResourceError as exc:
            raise HTTPException(404, str(exc))
        if len(ext) > node_cap:
            raise HTTPException(
                413,
                f"extension has {len(ext)} nodes, exceeding the cap of {node_cap}",
            )

        cache = shared_cache if req.gamma == gamma_default else None
        graph = build_dissimilarity_graph(election, ext, gamma=req.gamma, cache=cache)
        layout = embed(graph, iterations=req.iterations, seed=req.seed)

        committees = []
        for x in ids:
            for p in p_values:
                try:
                    result = search(
                        election,
                        catalog,
                        Query(
                            resources=frozenset({x}),
                            p=p,
                            gamma=req.gamma,
                            k=req.k,
                            algorithm="greedy",
                        ),
                    )
                except NoSupportersError:
                    continue
                if result.no_results:
                    continue
                committees.append(
                    {
                        "query": x,
                        "p": format_p(p),
                        "members": [m.id for m in result.members],
                    }
                )

        nodes = []
        for mid in sorted(graph.nodes):
            x, y = layout.positions[mid]
            if mid in catalog:
                info = catalog.get(mid)
                title, genres = info.title, list(info.genres)
            else:
                title, genres = f"movie-{mid}", []
            nodes.append(
                {
                    "id": mid,
                    "title": title,
                    "genre": genres[0] if genres else "",
                    "genres": genres,
                    "x": x,
                    "y": y,
                }
            )
        edges = [
            {"a": a, "b": b, "diss": value}
            for (a, b), value in sorted(graph.diss.items())
        ]
        return {
            "nodes": nodes,
            "edges": edges,
            "committees": committees,
            "k": req.k,
            "p_values": [format_p(p) for p in p_values],
            "gamma": req.gamma,
            "seed": req.seed,
            "iterations": req.iterations,
        }

    return app
