import json

import numpy as np
import pytest

from program.corpus.io import read_corpus, write_corpus, write_embeddings
from program.utils.cli import UsageError, build_parser, parse_allocation, parse_layer, run, settings_overrides


@pytest.fixture(autouse=True)
def isolated_backends(clean_di, monkeypatch):
    for name in ("SYNCS_SEED", "SYNCS_PAIR", "SYNCS_API_KEY"):
        monkeypatch.delenv(name, raising=False)
    yield


@pytest.fixture
def cs_types_path(test_data):
    return test_data / "cs_types.jsonl"


def read_report(path):
    return json.loads(path.read_text(encoding="utf-8"))


def jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


class TestArguments:
    def test_help(self, capsys):
        assert run(["--help"]) == 0
        assert "detect" in capsys.readouterr().out

    def test_no_command(self):
        assert run([]) == 2

    def test_missing_required_argument(self):
        assert run(["detect", "--in", "corpus.jsonl"]) == 2

    def test_unknown_choice(self):
        assert run(["stats", "--in", "x.jsonl", "--format", "yaml"]) == 2

    def test_only_given_flags_become_overrides(self):
        args = build_parser().parse_args(
            ["detect", "--in", "a.jsonl", "--out", "b.jsonl", "--window", "3", "--no-prefilter", "--lexicon", "lex.tsv"]
        )
        assert settings_overrides(args) == {
            "detector": {"alignment_window": 3, "character_prefilter": False},
            "backends": {"lexicon": "lex.tsv"},
        }

    def test_budget_flag_depends_on_command(self):
        synthesize = build_parser().parse_args(["synthesize", "--in", "a", "--out", "b", "--budget", "7", "--cap", "1"])
        assert settings_overrides(synthesize)["synthesis"] == {"token_budget": 7, "doc_eligibility_cap": 1.0}
        mix = build_parser().parse_args(["mix", "--in", "a", "--out-dir", "o", "--budget", "7", "--preset", "extreme"])
        assert settings_overrides(mix)["mix"] == {"preset": "extreme", "total_budget": 7}

    def test_parse_allocation(self):
        allocation = parse_allocation("secondary:sent-annt:40")
        assert allocation.name == "secondary:sent-annt"
        assert allocation.token_budget == 40
        for bad in ("primary:token-repl", "tertiary:token-repl:1", "primary:token-repl:many"):
            with pytest.raises(UsageError):
                parse_allocation(bad)

    def test_parse_layer(self, tmp_path):
        assert parse_layer("e.emb:f.emb")[1].name == "f.emb"
        with pytest.raises(UsageError):
            parse_layer("e.emb")

    def test_invalid_setting_is_fatal(self, tmp_path, cs_types_path, lexicon_path):
        argv = ["detect", "--in", str(cs_types_path), "--out", str(tmp_path / "d.jsonl"), "--lexicon", str(lexicon_path)]
        assert run([*argv, "--threshold", "2"]) == 2
        report = read_report(tmp_path / "d.jsonl.report.json")
        assert report["status"] == "fatal"
        assert report["settings"] is None
        assert "annt_similarity_threshold" in report["error"]


class TestDetect:
    def test_detect_writes_segments_and_report(self, tmp_path, cs_types_path, lexicon_path):
        out = tmp_path / "detections.jsonl"
        assert run(["detect", "--in", str(cs_types_path), "--out", str(out), "--lexicon", str(lexicon_path)]) == 0

        lines = jsonl(out)
        assert [line["id"] for line in lines] == ["sent-annt", "sent-repl", "token-annt", "token-repl"]
        report = read_report(tmp_path / "detections.jsonl.report.json")
        assert report["command"] == "detect"
        assert report["exit_code"] == 0
        assert report["status"] == "ok"
        assert report["result"]["segments"] == 6
        assert report["settings"]["backends"]["lexicon"] == str(lexicon_path)

    def test_detect_needs_an_encoder(self, tmp_path, cs_types_path):
        assert run(["detect", "--in", str(cs_types_path), "--out", str(tmp_path / "d.jsonl")]) == 2

    def test_malformed_lines_make_a_partial_run(self, tmp_path, cs_types_path, lexicon_path):
        messy = tmp_path / "messy.jsonl"
        messy.write_text(cs_types_path.read_text(encoding="utf-8") + "not json\n", encoding="utf-8")
        out = tmp_path / "d.jsonl"
        assert run(["detect", "--in", str(messy), "--out", str(out), "--lexicon", str(lexicon_path)]) == 1
        report = read_report(tmp_path / "d.jsonl.report.json")
        assert report["status"] == "partial"
        assert report["result"]["ingest_warnings"] == 1
        assert len(jsonl(out)) == 4

    def test_strict_mode_aborts(self, tmp_path, cs_types_path, lexicon_path):
        messy = tmp_path / "messy.jsonl"
        messy.write_text("not json\n" + cs_types_path.read_text(encoding="utf-8"), encoding="utf-8")
        argv = ["detect", "--in", str(messy), "--out", str(tmp_path / "d.jsonl"), "--lexicon", str(lexicon_path)]
        assert run([*argv, "--strict"]) == 2
        report = read_report(tmp_path / "d.jsonl.report.json")
        assert report["exit_code"] == 2
        assert report["status"] == "fatal"
        assert "line 1" in report["error"]
        assert report["result"] == {}


def test_stats_from_detections(tmp_path, cs_types_path, lexicon_path):
    detections = tmp_path / "detections.jsonl"
    run(["detect", "--in", str(cs_types_path), "--out", str(detections), "--lexicon", str(lexicon_path)])
    out = tmp_path / "stats.csv"
    assert run(["stats", "--in", str(detections), "--format", "csv", "--out", str(out)]) == 0
    rows = out.read_text(encoding="utf-8").splitlines()
    assert "token-repl,2,0.3333" in rows
    assert "sent-annt,1,0.1667" in rows
    assert read_report(tmp_path / "stats.csv.report.json")["result"]["doc_total"] == 4


def test_stats_to_stdout(tmp_path, cs_types_path, lexicon_path, capsys):
    detections = tmp_path / "detections.jsonl"
    run(["detect", "--in", str(cs_types_path), "--out", str(detections), "--lexicon", str(lexicon_path)])
    capsys.readouterr()
    assert run(["stats", "--in", str(detections)]) == 0
    assert json.loads(capsys.readouterr().out)["total_segments"] == 6
    assert read_report(tmp_path / "detections.jsonl.stats.report.json")["exit_code"] == 0


def test_ablate_end_to_end(tmp_path, cs_types_path, lexicon_path, corpus_factory):
    pool = tmp_path / "pool.jsonl"
    write_corpus(corpus_factory(6, "en", prefix="pool"), pool)
    main_det, pool_det = tmp_path / "main.det.jsonl", tmp_path / "pool.det.jsonl"
    for source, out in ((cs_types_path, main_det), (pool, pool_det)):
        assert run(["detect", "--in", str(source), "--out", str(out), "--lexicon", str(lexicon_path)]) == 0

    out = tmp_path / "cs-free.jsonl"
    argv = ["ablate", "--mode", "cs-free", "--main", str(main_det), "--pool", str(pool_det), "--out", str(out), "--seed", "4"]
    assert run(argv) == 0
    ids = [line["id"] for line in jsonl(out)]
    assert len(ids) == 4
    assert all(i.startswith("pool-en-") for i in ids)
    manifest = jsonl(tmp_path / "cs-free.jsonl.manifest.jsonl")
    assert manifest[0]["manifest"] == "cs-free"
    assert read_report(tmp_path / "cs-free.jsonl.report.json")["result"]["removed"] == 4


def test_synthesize(tmp_path, lexicon_path, corpus_factory, pair):
    source, out = tmp_path / "corpus.jsonl", tmp_path / "synthetic.jsonl"
    write_corpus(corpus_factory(40), source)
    argv = [
        "synthesize", "--in", str(source), "--out", str(out), "--lexicon", str(lexicon_path),
        "--type", "token-repl", "--budget", "10", "--cap", "1.0", "--seed", "2",
    ]
    assert run(argv) == 0
    docs = list(read_corpus(out, pair))
    assert len(docs) == 40
    assert sum("syncs" in d.meta for d in docs) >= 1
    details = read_report(tmp_path / "synthetic.jsonl.report.json")["result"]["details"]
    assert details["budget_tokens"] >= 10
    assert details["shortfall"] == 0


def test_synthesize_is_reproducible(tmp_path, lexicon_path, corpus_factory):
    source = tmp_path / "corpus.jsonl"
    write_corpus(corpus_factory(20), source)
    outputs = []
    for name, threads in (("a.jsonl", "1"), ("b.jsonl", "3")):
        out = tmp_path / name
        run(["synthesize", "--in", str(source), "--out", str(out), "--lexicon", str(lexicon_path),
             "--type", "sent-annt", "--seed", "9", "--threads", threads])
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


class TestMix:
    @pytest.fixture
    def inputs(self, tmp_path, corpus_factory):
        en, zh = tmp_path / "en.jsonl", tmp_path / "zh.jsonl"
        write_corpus(corpus_factory(20, "en"), en)
        write_corpus(corpus_factory(10, "zh", sentences_per_doc=3), zh)
        return en, zh

    def test_explicit_allocations(self, tmp_path, inputs, lexicon_path, pair):
        out_dir = tmp_path / "mixed"
        argv = [
            "mix", "--in", *map(str, inputs), "--out-dir", str(out_dir), "--lexicon", str(lexicon_path),
            "--allocation", "primary:token-repl:5", "--allocation", "secondary:token-annt:2",
        ]
        assert run(argv) == 0
        assert len(list(read_corpus(out_dir / "en.jsonl", pair))) == 20
        assert len(list(read_corpus(out_dir / "zh.jsonl", pair))) == 10
        report = read_report(out_dir / "mix.report.json")
        assert set(report["result"]["accounting"]) == {"primary:token-repl", "secondary:token-annt", "total"}

    def test_bad_allocation(self, tmp_path, inputs, lexicon_path):
        argv = [
            "mix", "--in", *map(str, inputs), "--out-dir", str(tmp_path / "mixed"), "--lexicon", str(lexicon_path),
            "--allocation", "both:token-repl:5",
        ]
        assert run(argv) == 2


def test_sft_export(tmp_path, pair):
    source = tmp_path / "generated.jsonl"
    rows = [
        {"source": "Let's buy some fruit.", "target": "我们买点儿水果吧。",
         "annotation": "Let's buy some fruit (水果).", "replacement": "Let's buy some 水果."},
        {"source": "The teacher reads.", "target": "老师在读书。",
         "annotation": "The teacher (老师) reads.", "replacement": "The 老师 reads."},
    ]
    source.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")
    out = tmp_path / "sft.jsonl"
    assert run(["sft-export", "--in", str(source), "--out", str(out)]) == 0
    records = jsonl(out)
    assert len(records) == 4
    assert all("我们买点儿水果吧" not in r["instruction"] for r in records)
    by_task = read_report(tmp_path / "sft.jsonl.report.json")["result"]["by_task"]
    assert by_task["annotation:en-zh"] == 2
    assert by_task["annotation:zh-en"] == 0


def test_sft_export_partial_field_is_fatal(tmp_path):
    source = tmp_path / "generated.jsonl"
    source.write_text(
        '{"source": "a", "target": "b", "annotation": "x"}\n{"source": "c", "target": "d"}\n', encoding="utf-8"
    )
    assert run(["sft-export", "--in", str(source), "--out", str(tmp_path / "sft.jsonl")]) == 2


def test_mexa_prints_scores(tmp_path, capsys):
    write_embeddings(np.eye(3), tmp_path / "e1.emb")
    write_embeddings(np.eye(3), tmp_path / "f1.emb")
    (tmp_path / "f2.emb").write_bytes(b"EMB1")
    layers = [f"{tmp_path / 'e1.emb'}:{tmp_path / 'f1.emb'}", f"{tmp_path / 'e1.emb'}:{tmp_path / 'f2.emb'}"]
    out, csv_path = tmp_path / "mexa.json", tmp_path / "mexa.csv"
    assert run(["mexa", "--layers", *layers, "--out", str(out), "--csv", str(csv_path)]) == 1
    assert capsys.readouterr().out == "1\t1.0000\n2\terror\n"
    assert json.loads(out.read_text())["method"] == "mutual-nn-cosine"
    assert csv_path.read_text().splitlines()[1] == "1,1.000000"


def test_count_tokens(tmp_path, cs_types_path):
    out = tmp_path / "counts.json"
    assert run(["count-tokens", "--in", str(cs_types_path), "--out", str(out)]) == 0
    counts = json.loads(out.read_text(encoding="utf-8"))
    assert counts["en"]["documents"] == 4
    assert counts["zh"] == {"documents": 0, "tokens": {"en": 0, "zh": 0}}
    assert counts["en"]["tokens"]["zh"] > 0


def test_mexa_without_outputs_reports_in_working_directory(tmp_path, monkeypatch, capsys):
    write_embeddings(np.eye(3), tmp_path / "e.emb")
    monkeypatch.chdir(tmp_path)
    assert run(["mexa", "--layers", f"{tmp_path / 'e.emb'}:{tmp_path / 'e.emb'}"]) == 0
    report = read_report(tmp_path / "mexa.report.json")
    assert report["status"] == "ok"
    assert report["result"]["layers"][0]["score"] == 1.0


def test_count_tokens_to_stdout_reports_beside_input(tmp_path, corpus_factory, capsys):
    source = tmp_path / "corpus.jsonl"
    write_corpus(corpus_factory(3), source)
    assert run(["count-tokens", "--in", str(source)]) == 0
    assert json.loads(capsys.readouterr().out)["en"]["documents"] == 3
    assert read_report(tmp_path / "corpus.jsonl.count-tokens.report.json")["result"]["totals"]["en"]["documents"] == 3


def test_unreadable_config_is_reported(tmp_path, cs_types_path):
    argv = ["stats", "--in", str(cs_types_path), "--out", str(tmp_path / "s.json"), "--config", str(tmp_path / "absent.json")]
    assert run(argv) == 2
    assert read_report(tmp_path / "s.json.report.json")["status"] == "fatal"
