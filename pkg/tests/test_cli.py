import re
import subprocess
import sys

import numpy as np
import pytest

from kge_translate.cli import build_parser, main
from kge_translate.evaluation import evaluate, format_report
from kge_translate.kb_data import Dictionary, parse_triples, read_triple_file
from kge_translate.model import Dissimilarity, EmbeddingModel, load_model, save_model

from synthetic import tree_records, write_dataset


@pytest.fixture
def tree_paths(tmp_path):
    return write_dataset(tmp_path / "data", tree_records(depth=3))


def train_args(tree_paths, out, epochs=20, extra=()):
    train_file, valid_file, test_file = tree_paths
    return [
        "train",
        "--train", str(train_file),
        "--valid", str(valid_file),
        "--test", str(test_file),
        "--k", "4",
        "--margin", "1",
        "--lr", "0.01",
        "--epochs", str(epochs),
        "--eval-every", "10",
        "--dissim", "l1",
        "--seed", "42",
        "--out", str(out),
        *extra,
    ]


def test_parser_defaults_match_large_graph_settings():
    args = build_parser().parse_args(
        ["train", "--train", "a", "--valid", "b", "--test", "c", "--out", "d"]
    )
    assert args.k == 50
    assert args.margin == 1.0
    assert args.lr == 0.01
    assert args.epochs == 1000
    assert args.dissim == "l1"


def test_missing_required_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["train", "--valid", "v", "--test", "t", "--out", "m"])
    assert excinfo.value.code == 2
    assert "--train" in capsys.readouterr().err


def test_train_writes_model_and_report(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    assert main(train_args(tree_paths, out)) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert re.fullmatch(r"entities=\d+ relations=2 train=\d+ valid=\d+ test=\d+", lines[0])
    assert sum(bool(re.fullmatch(r"epoch=\d+ mean_loss=\d+\.\d{6}", line)) for line in lines) == 20
    eval_lines = [line for line in lines if line.startswith("epoch=") and "valid_mean_rank" in line]
    assert len(eval_lines) == 2
    assert all(
        re.fullmatch(r"epoch=\d+ valid_mean_rank=\d+\.\d{3} best=(true|false)", line)
        for line in eval_lines
    )
    assert any(line.startswith("best_epoch=") for line in lines)
    assert out.exists()
    model, entities, relations = load_model(out)
    assert model.k == 4
    assert len(relations) == 2


def test_train_is_bit_reproducible(tree_paths, tmp_path, capsys):
    first = tmp_path / "first.kge"
    second = tmp_path / "second.kge"
    assert main(train_args(tree_paths, first, epochs=10)) == 0
    out_first = capsys.readouterr().out.replace(str(first), "OUT")
    assert main(train_args(tree_paths, second, epochs=10)) == 0
    out_second = capsys.readouterr().out.replace(str(second), "OUT")
    assert first.read_bytes() == second.read_bytes()
    assert out_first == out_second


def test_eval_report_matches_in_process_evaluation(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    main(train_args(tree_paths, out, epochs=10))
    capsys.readouterr()
    assert main(["eval", "--model", str(out), "--triples", str(tree_paths[2])]) == 0
    printed = capsys.readouterr().out.strip().split("\n")

    model, entities, relations = load_model(out)
    triples = parse_triples(read_triple_file(tree_paths[2]), entities, relations)
    expected = format_report(*evaluate(model, triples))
    assert printed == expected


def test_eval_unstructured_scorer_wiring(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    main(train_args(tree_paths, out, epochs=10))
    capsys.readouterr()
    assert main(
        ["eval", "--model", str(out), "--triples", str(tree_paths[2]), "--scorer", "unstructured"]
    ) == 0
    printed = capsys.readouterr().out.strip().split("\n")

    model, entities, relations = load_model(out)
    triples = parse_triples(read_triple_file(tree_paths[2]), entities, relations)
    expected = format_report(*evaluate(model, triples, scorer="unstructured"))
    assert printed == expected


def test_eval_threads_give_same_report(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    main(train_args(tree_paths, out, epochs=10))
    capsys.readouterr()
    main(["eval", "--model", str(out), "--triples", str(tree_paths[2])])
    sequential = capsys.readouterr().out
    main(["eval", "--model", str(out), "--triples", str(tree_paths[2]), "--threads", "4"])
    threaded = capsys.readouterr().out
    assert sequential == threaded


def test_eval_unknown_name_fails(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    main(train_args(tree_paths, out, epochs=10))
    stray = tmp_path / "stray.tsv"
    stray.write_text("n001\tparent\tmystery\n", encoding="utf-8")
    capsys.readouterr()
    assert main(["eval", "--model", str(out), "--triples", str(stray)]) == 1
    assert "error:" in capsys.readouterr().err


def _toy_translation_model(tmp_path):
    entity_emb = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    relation_emb = np.array([[-1.0, 1.0]])
    model = EmbeddingModel(entity_emb, relation_emb, Dissimilarity.L1)
    entities = Dictionary(["alpha", "beta", "gamma"])
    relations = Dictionary(["shift"])
    path = tmp_path / "toy.kge"
    save_model(model, entities, relations, path)
    return path


def test_predict_exact_tail_first(tmp_path, capsys):
    path = _toy_translation_model(tmp_path)
    # alpha + shift = (0, 1) = beta exactly.
    assert main(["predict", "--model", str(path), "--head", "alpha", "--label", "shift", "--n", "1"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines == ["1\tbeta\t0.000000"]


def test_predict_lists_all_when_n_too_large(tmp_path, capsys):
    path = _toy_translation_model(tmp_path)
    assert main(["predict", "--model", str(path), "--head", "alpha", "--label", "shift", "--n", "99"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3
    assert [line.split("\t")[0] for line in lines] == ["1", "2", "3"]


def test_predict_unknown_head_fails(tmp_path, capsys):
    path = _toy_translation_model(tmp_path)
    assert main(["predict", "--model", str(path), "--head", "nope", "--label", "shift"]) == 1
    assert "unknown entity" in capsys.readouterr().err


def test_predict_unknown_label_fails(tmp_path, capsys):
    path = _toy_translation_model(tmp_path)
    assert main(["predict", "--model", str(path), "--head", "alpha", "--label", "nope"]) == 1
    assert "unknown relation" in capsys.readouterr().err


def test_eval_corrupt_model_file_fails(tmp_path, capsys):
    bad = tmp_path / "bad.kge"
    bad.write_text("not a model\n", encoding="utf-8")
    triples = tmp_path / "t.tsv"
    triples.write_text("a\tr\tb\n", encoding="utf-8")
    assert main(["eval", "--model", str(bad), "--triples", str(triples)]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_dataset_file_fails(tmp_path, capsys):
    args = [
        "train",
        "--train", str(tmp_path / "absent.tsv"),
        "--valid", str(tmp_path / "absent.tsv"),
        "--test", str(tmp_path / "absent.tsv"),
        "--out", str(tmp_path / "m.kge"),
    ]
    assert main(args) == 1
    assert "error:" in capsys.readouterr().err


def test_train_plot_writes_figure(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    plot = tmp_path / "curves.png"
    assert main(train_args(tree_paths, out, epochs=10, extra=["--plot", str(plot)])) == 0
    assert plot.exists() and plot.stat().st_size > 0
    assert f"plot={plot}" in capsys.readouterr().out


def test_eval_plot_writes_figure(tree_paths, tmp_path, capsys):
    out = tmp_path / "tree.kge"
    main(train_args(tree_paths, out, epochs=10))
    plot = tmp_path / "ranks.png"
    assert main(
        ["eval", "--model", str(out), "--triples", str(tree_paths[2]), "--plot", str(plot)]
    ) == 0
    assert plot.exists() and plot.stat().st_size > 0


def test_module_entry_point_version():
    result = subprocess.run(
        [sys.executable, "-m", "kge_translate", "--version"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "kge-translate" in result.stdout
