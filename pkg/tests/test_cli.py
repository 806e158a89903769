"""Command line contract tests.

Everything runs in-process through main(argv) so exit codes and output
streams are asserted directly; one subprocess test checks the real
entry point wiring.
"""

import filecmp
import json
import subprocess
import sys
from pathlib import Path

import pytest

from votesearch import cli
from votesearch.ingest import load_cache

GOLDEN = Path(__file__).parent / "golden"

RATINGS = """userId,movieId,rating,timestamp
1,100,2.0,0
1,100,5.0,1
1,1,4.0,2
1,2,4.5,3
1,999,2.0,4
2,100,4.0,5
2,1,5.0,6
2,3,4.0,7
3,100,4.5,8
3,2,4.0,9
3,3,5.0,10
3,4,4.0,11
4,1,4.0,12
4,2,4.0,13
5,100,5.0,14
6,5,4.5,15
"""

MOVIES = """movieId,title,genres
100,The Matrix (1999),Action|Sci-Fi
1,Toy Story (1995),Animation|Children
2,Toy Story 2 (1999),Animation|Children
3,Jumanji (1995),Adventure|Children
4,Heat (1995),Action|Crime
5,Solaris (1972),Drama|Sci-Fi
999,Obscure Gem (2001),Documentary
7777,Unrated Movie (2000),Drama
"""


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-data")
    (root / "ratings.csv").write_text(RATINGS)
    (root / "movies.csv").write_text(MOVIES)
    return root


@pytest.fixture(scope="module")
def cache_path(data_dir):
    cache = data_dir / "small.cache"
    rc = cli.main(
        [
            "ingest",
            "--ratings", str(data_dir / "ratings.csv"),
            "--movies", str(data_dir / "movies.csv"),
            "--min-approvals", "1",
            "--out", str(cache),
        ]
    )
    assert rc == 0
    return cache


class TestTopLevel:
    def test_no_arguments_is_usage_error(self, capsys):
        assert cli.main([]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_help_exits_zero(self, capsys):
        assert cli.main(["--help"]) == 0
        assert "usage" in capsys.readouterr().out.lower()

    def test_unknown_subcommand(self, capsys):
        assert cli.main(["frobnicate"]) == 2

    def test_subcommand_help(self, capsys):
        assert cli.main(["query", "--help"]) == 0
        out = capsys.readouterr().out
        assert "--movie" in out


class TestIngest:
    def test_report_and_cache(self, data_dir, tmp_path, capsys):
        out = tmp_path / "x.cache"
        rc = cli.main(
            [
                "ingest",
                "--ratings", str(data_dir / "ratings.csv"),
                "--movies", str(data_dir / "movies.csv"),
                "--min-approvals", "1",
                "--out", str(out),
            ]
        )
        assert rc == 0
        text = capsys.readouterr().out
        assert "agents: 6" in text
        assert "duplicate" in text
        assert "dropped" in text
        ds = load_cache(out)
        assert ds.election.num_agents == 6
        assert ds.election.resources == frozenset({100, 1, 2, 3, 4, 5})
        # catalog is restricted to surviving resources
        assert 999 not in ds.catalog
        assert 7777 not in ds.catalog

    def test_missing_ratings_file(self, data_dir, tmp_path, capsys):
        rc = cli.main(
            [
                "ingest",
                "--ratings", str(data_dir / "nope.csv"),
                "--movies", str(data_dir / "movies.csv"),
                "--out", str(tmp_path / "x.cache"),
            ]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert len(err.strip().splitlines()) == 1

    def test_malformed_header(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("user,item,score\n1,2,5.0\n")
        movies = tmp_path / "movies.csv"
        movies.write_text(MOVIES)
        rc = cli.main(
            [
                "ingest",
                "--ratings", str(bad),
                "--movies", str(movies),
                "--out", str(tmp_path / "x.cache"),
            ]
        )
        assert rc == 1


class TestQuery:
    def test_json_output_golden(self, cache_path, capsys):
        rc = cli.main(
            [
                "query",
                "--cache", str(cache_path),
                "--movie", "100",
                "--p", "0",
                "--k", "3",
                "--json",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert out == (GOLDEN / "query_matrix_p0.json").read_text()

    def test_json_schema_keys(self, cache_path, capsys):
        cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100", "--p", "0",
             "--k", "3", "--json"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert list(doc) == [
            "query", "p", "k", "algorithm", "members", "score", "truncated",
        ]
        assert doc["query"] == [100]
        assert [m["id"] for m in doc["members"]] == [3, 4, 1]
        assert doc["members"][0]["title"] == "Jumanji (1995)"

    def test_table_output(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100", "--p", "0",
             "--k", "3"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "Jumanji (1995)" in out
        assert "score" in out

    def test_title_exact_match_beats_substring(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "Toy Story (1995)",
             "--p", "0", "--json"]
        )
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["query"] == [1]

    def test_title_unique_substring(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "jumanji",
             "--p", "0", "--json"]
        )
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["query"] == [3]

    def test_title_ambiguous_lists_candidates(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "toy story",
             "--p", "0"]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert "Toy Story (1995)" in err
        assert "Toy Story 2 (1999)" in err

    def test_title_typo_gets_suggestions(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "The Matrxi",
             "--p", "0"]
        )
        assert rc == 1
        assert "The Matrix (1999)" in capsys.readouterr().err

    def test_unknown_id(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "31337", "--p", "0"]
        )
        assert rc == 1
        assert "31337" in capsys.readouterr().err

    def test_multi_movie_query(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100",
             "--movie", "Toy Story (1995)", "--p", "0", "--json"]
        )
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["query"] == [1, 100]

    def test_p_inf(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100",
             "--p", "inf", "--k", "2", "--json"]
        )
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["p"] == "inf"
        assert len(doc["members"]) == 2

    def test_bad_p_is_usage_error(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100", "--p", "many"]
        )
        assert rc == 2

    def test_exact_algo_requires_p0(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "100",
             "--p", "1", "--algo", "exact"]
        )
        assert rc == 2

    def test_anneal_deterministic_with_seed(self, cache_path, capsys):
        argv = ["query", "--cache", str(cache_path), "--movie", "100",
                "--p", "2", "--k", "2", "--algo", "anneal", "--seed", "7",
                "--json"]
        assert cli.main(argv) == 0
        first = capsys.readouterr().out
        assert cli.main(argv) == 0
        assert capsys.readouterr().out == first

    def test_degenerate_query_is_data_error(self, cache_path, capsys):
        rc = cli.main(
            ["query", "--cache", str(cache_path), "--movie", "Solaris (1972)",
             "--p", "0"]
        )
        assert rc == 1
        assert "approve nothing else" in capsys.readouterr().err

    def test_missing_cache_flag(self, capsys):
        rc = cli.main(["query", "--movie", "100", "--p", "0"])
        assert rc == 2

    def test_unreadable_cache(self, tmp_path, capsys):
        bogus = tmp_path / "bogus.cache"
        bogus.write_bytes(b"not a cache")
        rc = cli.main(
            ["query", "--cache", str(bogus), "--movie", "100", "--p", "0"]
        )
        assert rc == 1


class TestConfigFile:
    def test_config_supplies_defaults(self, cache_path, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"cache = {cache_path}\nk = 2\n")
        rc = cli.main(
            ["query", "--config", str(cfg), "--movie", "100", "--p", "0",
             "--json"]
        )
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["k"] == 2

    def test_flag_beats_config(self, cache_path, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"cache = {cache_path}\nk = 2\n")
        rc = cli.main(
            ["query", "--config", str(cfg), "--movie", "100", "--p", "0",
             "--k", "3", "--json"]
        )
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["k"] == 3

    def test_comments_and_blank_lines(self, cache_path, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"# run defaults\n\ncache = {cache_path}\nk = 2  # small committees\n"
        )
        rc = cli.main(
            ["query", "--config", str(cfg), "--movie", "100", "--p", "0",
             "--json"]
        )
        assert rc == 0

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("committee_size = 2\n")
        rc = cli.main(["query", "--config", str(cfg), "--movie", "100", "--p", "0"])
        assert rc == 2
        assert "committee_size" in capsys.readouterr().err

    def test_malformed_line(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("k 2\n")
        assert (
            cli.main(["query", "--config", str(cfg), "--movie", "1", "--p", "0"])
            == 2
        )

    def test_missing_config_file(self, capsys):
        rc = cli.main(
            ["query", "--config", "/nonexistent/run.cfg", "--movie", "1",
             "--p", "0"]
        )
        assert rc == 2

    def test_config_seed_reaches_experiments(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 5\n")
        out = tmp_path / "synth"
        rc = cli.main(
            ["synth", "--config", str(cfg), "--trials", "1", "--k", "2",
             "--p-values", "0", "--algos", "greedy", "--voters", "60",
             "--draws", "25", "--out", str(out)]
        )
        assert rc == 0
        assert "seed: 5" in capsys.readouterr().out


class TestSynth:
    def run_synth(self, out_dir, seed="9"):
        return cli.main(
            ["synth", "--trials", "2", "--k", "3", "--p-values", "0,1",
             "--algos", "greedy,anneal", "--voters", "80", "--draws", "30",
             "--steps", "200", "--seed", seed, "--out", str(out_dir)]
        )

    def test_outputs(self, tmp_path, capsys):
        out = tmp_path / "exp"
        assert self.run_synth(out) == 0
        stdout = capsys.readouterr().out
        assert "seed: 9" in stdout
        summary = (out / "summary.tsv").read_text().splitlines()
        assert summary[0] == "p\talgorithm\tx\ty\tz\ttotal"
        assert len(summary) == 5  # header + 2 p-values x 2 algorithms
        for name in (
            "grid_p0_greedy.tsv", "grid_p0_annealing.tsv",
            "grid_p1_greedy.tsv", "grid_p1_annealing.tsv",
        ):
            grid = (out / name).read_text().splitlines()
            assert len(grid) == 9
            values = [int(v) for line in grid for v in line.split("\t")]
            assert len(values) == 81
            assert 2 <= sum(values) <= 6  # between trials x 1 and trials x k
        for line in summary[1:]:
            p, algo, x, y, z, total = line.split("\t")
            assert int(x) + int(y) + int(z) == int(total)

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert self.run_synth(a) == 0
        assert self.run_synth(b) == 0
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        assert mismatch == [] and errors == []

    def test_p0_rows_shared_across_algorithms(self, tmp_path):
        out = tmp_path / "exp"
        assert self.run_synth(out) == 0
        greedy = (out / "grid_p0_greedy.tsv").read_bytes()
        anneal = (out / "grid_p0_annealing.tsv").read_bytes()
        assert greedy == anneal


class TestCalibrate:
    def test_table(self, cache_path, capsys):
        rc = cli.main(
            ["calibrate", "--cache", str(cache_path), "--movie", "100",
             "--movie", "Toy Story (1995)", "--movie", "2",
             "--gammas", "1.0,2.0"]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        header = lines[0].split("\t")
        assert header[0] == "gamma"
        assert header[-1] == "mean"
        assert len(lines) == 3
        for line in lines[1:]:
            cells = line.split("\t")
            assert float(cells[0]) in (1.0, 2.0)
            float(cells[-1])  # mean parses

    def test_requires_two_movies(self, cache_path, capsys):
        rc = cli.main(
            ["calibrate", "--cache", str(cache_path), "--movie", "100"]
        )
        assert rc == 2


class TestEmbed:
    def test_json_document(self, cache_path, tmp_path, capsys):
        out = tmp_path / "emb.json"
        rc = cli.main(
            ["embed", "--cache", str(cache_path), "--movie", "100", "--k", "3",
             "--iterations", "200", "--seed", "1", "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        ids = {node["id"] for node in doc["nodes"]}
        assert 100 in ids
        assert ids <= {100, 1, 2, 3, 4}
        assert len(ids) >= 4
        for node in doc["nodes"]:
            assert set(node) == {"id", "title", "genre", "x", "y"}
            assert 0.0 <= node["x"] <= 1.0
            assert 0.0 <= node["y"] <= 1.0
        for edge in doc.get("edges", []):
            assert edge["diss"] >= 1.0

    def test_stdout_when_no_outfile(self, cache_path, capsys):
        rc = cli.main(
            ["embed", "--cache", str(cache_path), "--movie", "100", "--k", "3",
             "--iterations", "100", "--seed", "1"]
        )
        assert rc == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert doc["nodes"]
        assert "seed: 1" in captured.err

    def test_byte_identical_reruns(self, cache_path, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["embed", "--cache", str(cache_path), "--movie", "100",
                "--k", "3", "--iterations", "150", "--seed", "2"]
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestBench:
    def test_summary_and_rows(self, cache_path, tmp_path, capsys):
        rows_file = tmp_path / "bench.tsv"
        rc = cli.main(
            ["bench", "--cache", str(cache_path), "--sample", "5",
             "--p-values", "1", "--k", "2", "--steps", "200", "--seed", "4",
             "--out", str(rows_file)]
        )
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "seed: 4" in stdout
        assert "p\tmean\tstd\trows" in stdout
        lines = rows_file.read_text().splitlines()
        assert lines[0] == "movie\tp\tratio\tgreedy_score\tannealing_score\tglobal_approvals"
        assert len(lines) >= 2
        for line in lines[1:]:
            cells = line.split("\t")
            assert float(cells[2]) > 0

    def test_byte_identical_reruns(self, cache_path, tmp_path):
        argv = ["bench", "--cache", str(cache_path), "--sample", "4",
                "--p-values", "1,2", "--k", "2", "--steps", "150", "--seed", "6"]
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestServe:
    def test_builds_app_from_cache(self, cache_path, monkeypatch):
        captured = {}

        def fake_run(app, host, port):
            captured.update(app=app, host=host, port=port)

        monkeypatch.setattr(cli, "_run_server", fake_run)
        rc = cli.main(["serve", "--cache", str(cache_path), "--port", "9999"])
        assert rc == 0
        assert captured["port"] == 9999
        paths = {route.path for route in captured["app"].routes}
        assert {"/healthz", "/movies", "/search", "/embedding"} <= paths

    def test_synthetic_fixture_mode(self, monkeypatch):
        captured = {}
        monkeypatch.setattr(
            cli, "_run_server", lambda app, host, port: captured.update(app=app)
        )
        rc = cli.main(
            ["serve", "--synthetic-seed", "3", "--voters", "30", "--draws", "20"]
        )
        assert rc == 0
        from fastapi.testclient import TestClient

        with TestClient(captured["app"]) as client:
            body = client.get("/healthz").json()
            assert body["agents"] == 30
            assert body["resources"] == 2025

    def test_requires_exactly_one_source(self, cache_path, capsys):
        assert cli.main(["serve"]) == 2
        assert (
            cli.main(
                ["serve", "--cache", str(cache_path), "--synthetic-seed", "1"]
            )
            == 2
        )


class TestPlots:
    def test_synth_plot(self, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "exp"
        png = tmp_path / "grids.png"
        rc = cli.main(
            ["synth", "--trials", "1", "--k", "2", "--p-values", "0",
             "--algos", "greedy", "--voters", "60", "--draws", "25",
             "--seed", "1", "--out", str(out), "--plot", str(png)]
        )
        assert rc == 0
        assert png.stat().st_size > 0

    def test_embed_plot(self, cache_path, tmp_path):
        pytest.importorskip("matplotlib")
        png = tmp_path / "map.png"
        rc = cli.main(
            ["embed", "--cache", str(cache_path), "--movie", "100", "--k", "3",
             "--iterations", "100", "--seed", "1", "--out",
             str(tmp_path / "e.json"), "--plot", str(png)]
        )
        assert rc == 0
        assert png.stat().st_size > 0


class TestEntryPoint:
    def test_module_invocation(self, cache_path):
        proc = subprocess.run(
            [sys.executable, "-m", "votesearch", "query", "--cache",
             str(cache_path), "--movie", "100", "--p", "0", "--k", "2",
             "--json"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc["k"] == 2
