from pathlib import Path

import numpy as np
import pytest

import scope_probe as sp

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


@pytest.fixture(scope="module")
def golden():
    corpus = sp.ingest(
        (FIXTURES / "golden.conllu").read_text(), (FIXTURES / "golden.ptb").read_text()
    )
    return {s.id: s for s in corpus}


def test_ingest_and_hash(golden):
    corpus = list(golden.values())
    assert len(corpus) == 9
    assert len(sp.corpus_hash(corpus)) == 16
    assert golden["big-dog"].words == ["The", "big", "dog", "slept", "."]


def test_parse_error_has_line():
    with pytest.raises(sp.ParseError, match="line 1"):
        sp.parse_conllu("1\tI\t_\n\n")


def test_annotate_table_three(golden):
    ann = sp.annotate(golden["know-anyone"])
    assert ann["pattern"] == "P12"
    assert ann["zones"][:5] == ["PRE", "PRE", "PRE_IN", "NOT", "NOT"]
    assert sp.annotate(golden["big-dog"]) is None


def test_project_zones_positions(golden):
    s = golden["know-anyone"]
    toks = sp.project_zones(s, sp.word_level_tokenization(s))
    assert [t["position"] for t in toks] == [-3, -2, -1, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8]
    assert sum(t["eligible"] for t in toks) == 11


def test_corpus_file_round_trip(golden, tmp_path):
    path = str(tmp_path / "corpus.db")
    sp.write_corpus(path, list(golden.values()))
    back = sp.read_corpus(path)
    assert [s.id for s in back] == list(golden)


def test_notnpi_dataset_and_embeddings(golden, tmp_path):
    corpus = list(golden.values())
    toks = [sp.word_level_tokenization(s) for s in corpus]
    manifest, examples = sp.build_dataset("notnpi", corpus, toks)
    assert manifest["family"] == "NOTNPI"
    assert {e["sentence_id"] for e in examples} >= {"know-anyone", "fairy-tale-any"}
    path = str(tmp_path / "emb.bin")
    sp.synth_embeddings(corpus, toks, "neg-scope", 8, 3.0, 1.0, 1, path)
    emb = sp.read_embeddings(path)
    assert emb["know-anyone"].shape == (13, 8)


def test_train_and_evaluate(tmp_path):
    rng = np.random.default_rng(0)
    y = np.arange(600) % 2
    x = rng.normal(size=(600, 4)).astype(np.float32)
    x[:, 0] += 5.0 * y
    model = sp.train_probe(x, y.tolist(), {"hidden_layers": 1, "hidden_width": 16,
                                           "learning_rate": 0.1, "epochs": 10})
    acc, correct = sp.evaluate(model, x, y.tolist())
    assert acc > 0.95 and len(correct) == 600
    path = str(tmp_path / "probe.spmd")
    model.save(path)
    assert sp.load_probe(path).predict(x) == model.predict(x)
    with pytest.raises(sp.DataError):
        sp.train_probe(x, [1] * 600)


def test_perm_test_and_reports():
    res = sp.perm_test([1, 1, 1, 1], [0, 0, 0, 0], 2000, 1)
    assert res["statistic"] == 1.0
    assert 0.0 < res["p_value"] < 0.05
    records = [
        {"run": 0, "sentence_id": "a", "piece": 0, "zone": "IN", "position": 1, "correct": True,
         "flagged": False, "in_clause": True},
        {"run": 0, "sentence_id": "a", "piece": 1, "zone": "PRE", "position": -1,
         "correct": False, "flagged": False, "in_clause": False},
    ]
    report = sp.breakdown(records)
    assert report["gap"] is None
    gap = sp.clause_gap(records)
    assert gap["gap"] == pytest.approx(1.0)
