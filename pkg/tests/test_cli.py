"""Command-line surface: stage subcommands, chaining, exit codes."""

import json

import pytest
from conftest import c_file_with_scopes, write_repo

from scopekit.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main


@pytest.fixture
def repo(tmp_path):
    root = tmp_path / "repo"
    write_repo(
        root,
        {
            "src/alpha.c": "/* alpha */\n" + c_file_with_scopes(3),
            "src/beta.c": "/* beta */\n" + c_file_with_scopes(2),
            "notes.txt": "not source",
        },
    )
    return root


def run(argv):
    return main([str(a) for a in argv])


def test_stage_chain(tmp_path, repo, capsys):
    out = tmp_path / "work"
    out.mkdir()
    assert run(["ingest", "--root", repo, "--out", out / "ingest"]) == EXIT_OK
    assert "ingested 2 files" in capsys.readouterr().out
    assert run(
        ["scopes", "--manifest", out / "ingest", "--out", out / "scopes.jsonl"]
    ) == EXIT_OK
    assert run(
        [
            "pairs",
            "--scopes", out / "scopes.jsonl",
            "--manifest", out / "ingest",
            "--random-starts", 1,
            "--seed", 3,
            "--out", out / "pairs.jsonl",
        ]
    ) == EXIT_OK
    n_pairs = len((out / "pairs.jsonl").read_text().splitlines())
    assert n_pairs > 0
    assert run(
        [
            "index", "build",
            "--pairs", out / "pairs.jsonl",
            "--dimension", 32,
            "--out", out / "train.index",
        ]
    ) == EXIT_OK
    assert (out / "train.index").stat().st_size > 0


def test_index_query_roundtrip(tmp_path, repo, capsys, monkeypatch):
    out = tmp_path / "work"
    out.mkdir()
    run(["ingest", "--root", repo, "--out", out / "ingest"])
    run(["scopes", "--manifest", out / "ingest", "--out", out / "scopes.jsonl"])
    run(
        [
            "pairs", "--scopes", out / "scopes.jsonl", "--manifest", out / "ingest",
            "--out", out / "pairs.jsonl",
        ]
    )
    run(
        [
            "index", "build", "--pairs", out / "pairs.jsonl", "--dimension", 32,
            "--out", out / "t.index",
        ]
    )
    capsys.readouterr()

    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("int compute_0(int step) {"))
    assert run(["index", "query", "--index", out / "t.index", "--top", 2, "--augment"]) == EXIT_OK
    printed = capsys.readouterr().out
    results = json.loads(printed[: printed.index("]") + 1])
    assert len(results) == 2
    assert all(set(r) == {"pair_id", "similarity"} for r in results)
    assert "/* retrieved example 1 */" in printed


def test_index_query_rejects_other_embedder_dim(tmp_path, repo, capsys, monkeypatch):
    out = tmp_path / "w"
    out.mkdir()
    run(["ingest", "--root", repo, "--out", out / "ingest"])
    run(["scopes", "--manifest", out / "ingest", "--out", out / "scopes.jsonl"])
    run(
        [
            "pairs", "--scopes", out / "scopes.jsonl", "--manifest", out / "ingest",
            "--out", out / "pairs.jsonl",
        ]
    )
    run(
        [
            "index", "build", "--pairs", out / "pairs.jsonl", "--dimension", 32,
            "--embedder", "builtin", "--out", out / "t.index",
        ]
    )
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("query"))
    code = run(
        ["index", "query", "--index", out / "t.index", "--embedder", "remote:http://h:1"]
    )
    assert code == EXIT_CONFIG


def test_leak_scan_command(tmp_path, repo, capsys):
    out = tmp_path / "w"
    out.mkdir()
    run(["ingest", "--root", repo, "--out", out / "ingest"])
    run(["scopes", "--manifest", out / "ingest", "--out", out / "scopes.jsonl"])
    run(
        [
            "pairs", "--scopes", out / "scopes.jsonl", "--manifest", out / "ingest",
            "--out", out / "pairs.jsonl",
        ]
    )
    first = json.loads((out / "pairs.jsonl").read_text().splitlines()[0])
    tests_file = tmp_path / "tests.jsonl"
    tests_file.write_text(
        json.dumps({"test_id": "t0", "ground_truth": first["label"]}) + "\n"
    )
    capsys.readouterr()
    assert run(
        [
            "leak-scan", "--train", out / "pairs.jsonl", "--tests", tests_file,
            "--out", out / "leaks.jsonl",
        ]
    ) == EXIT_OK
    assert "leakage finding(s)" in capsys.readouterr().out
    findings = [json.loads(x) for x in (out / "leaks.jsonl").read_text().splitlines()]
    assert any(f["test_pair_id"] == "t0" for f in findings)


def test_predict_command(tmp_path, stub_service):
    stub_service.default_text = "predicted;"
    tests_file = tmp_path / "prompts.jsonl"
    tests_file.write_text(
        "\n".join(
            json.dumps({"test_id": f"t{i}", "prompt": f"prompt {i}"}) for i in range(3)
        )
        + "\n"
    )
    out_file = tmp_path / "preds.jsonl"
    assert run(
        [
            "predict", "--endpoint", stub_service.generate_url, "--tests", tests_file,
            "--max-new-tokens", 32, "--out", out_file,
        ]
    ) == EXIT_OK
    rows = [json.loads(x) for x in out_file.read_text().splitlines()]
    assert [r["test_id"] for r in rows] == ["t0", "t1", "t2"]
    assert all(r["text"] == "predicted;" for r in rows)


def test_eval_command(tmp_path, capsys):
    tests_file = tmp_path / "tests.jsonl"
    rows = [
        {"test_id": "a", "category": "for_body", "prediction": "i++;", "ground_truth": "i++;"},
        {"test_id": "b", "category": "for_body", "prediction": "j--;xx", "ground_truth": "j--;"},
    ]
    tests_file.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    assert run(
        [
            "eval", "--tests", tests_file,
            "--out", tmp_path / "records.jsonl",
            "--report", tmp_path / "report.csv",
        ]
    ) == EXIT_OK
    printed = capsys.readouterr().out
    assert "for_body: n=2 mean_opt=0.00" in printed
    csv_lines = (tmp_path / "report.csv").read_text().splitlines()
    assert csv_lines[0] == "category,n,mean_opt,median_opt,mean_full,median_full"
    assert csv_lines[1].startswith("for_body,2,")


def test_run_and_sweep_via_config(tmp_path, repo, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "repo_root": str(repo),
                "output_dir": str(tmp_path / "out"),
                "sweep": {"filters.min_scope_bytes": [0, 50]},
            }
        )
    )
    assert run(["run", "--config", cfg_path, "--mode", "ft_export"]) == EXIT_OK
    assert (tmp_path / "out" / "train_pairs.jsonl").is_file()
    assert run(["sweep", "--config", cfg_path]) == EXIT_OK
    assert (tmp_path / "out" / "sweep_summary.json").is_file()


def test_run_eval_only_with_predictions_flag(tmp_path, repo):
    preds = tmp_path / "p.jsonl"
    preds.write_text(
        json.dumps(
            {"test_id": "x", "category": "if_body", "prediction": "a", "ground_truth": "a"}
        )
        + "\n"
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps({"repo_root": str(repo), "output_dir": str(tmp_path / "out")})
    )
    assert run(
        ["run", "--config", cfg_path, "--mode", "eval_only", "--predictions", preds]
    ) == EXIT_OK
    assert (tmp_path / "out" / "report.csv").is_file()


def test_bad_config_exit_code(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"output_dir": "x", "filters": {"min_scope_bytes": -4}}))
    assert run(["run", "--config", cfg_path, "--mode", "ft_export"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "config error" in err and "repo_root is required" in err


def test_operational_failure_exit_code(tmp_path, capsys):
    assert run(
        ["scopes", "--manifest", tmp_path / "absent", "--out", tmp_path / "s.jsonl"]
    ) == EXIT_FAILURE
    assert "error" in capsys.readouterr().err


def test_ingest_missing_root_is_failure(tmp_path, capsys):
    assert run(["ingest", "--root", tmp_path / "nope", "--out", tmp_path / "o"]) == EXIT_FAILURE


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert "scopekit" in capsys.readouterr().out
