import pytest

from program.corpus.models import Document
from program.synthesis.mixing import (
    EQUAL_CELLS,
    Allocation,
    ChainedCorpus,
    MixError,
    execute_mix,
    partition_documents,
    plan_mix,
)
from program.types import CsType, MixPreset, Side


class TestPlanMix:
    def test_equal_split_gives_remainder_to_first_cells(self):
        mix = plan_mix(MixPreset.Equal, 100)
        assert [a.token_budget for a in mix.allocations] == [13, 13, 13, 13, 12, 12, 12, 12]
        assert [(a.side, a.cs_type) for a in mix.allocations] == list(EQUAL_CELLS)
        assert mix.total_budget == 100

    @pytest.mark.parametrize("budget, primary, secondary", [(1100, 1000, 100), (22, 20, 2), (0, 0, 0), (1, 1, 0)])
    def test_extreme_is_proportional(self, budget, primary, secondary):
        mix = plan_mix(MixPreset.Extreme, budget)
        assert [a.name for a in mix.allocations] == ["primary:token-repl", "secondary:token-annt"]
        assert [a.token_budget for a in mix.allocations] == [primary, secondary]

    def test_english_replacement_equal(self):
        mix = plan_mix(MixPreset.EnReplEqual, 7)
        assert [a.name for a in mix.allocations] == ["primary:token-repl", "primary:sent-repl"]
        assert [a.token_budget for a in mix.allocations] == [4, 3]

    def test_explicit_allocations(self):
        allocations = [Allocation(side=Side.InSecondary, cs_type=CsType.SentAnnt, token_budget=9)]
        mix = plan_mix(allocations=allocations)
        assert mix.allocations == allocations
        assert mix.preset is None

    def test_invalid_requests(self):
        with pytest.raises(MixError):
            plan_mix()
        with pytest.raises(MixError):
            plan_mix(MixPreset.Equal, -1)


class TestChainedCorpus:
    @pytest.fixture
    def chained(self, corpus_factory):
        return ChainedCorpus([corpus_factory(3, "en"), corpus_factory(2, "zh")])

    def test_indexing(self, chained):
        assert len(chained) == 5
        assert chained[0].id == "doc-en-0000"
        assert chained[3].id == "doc-zh-0000"
        assert chained[-1].id == "doc-zh-0001"
        assert [d.id for d in chained[2:4]] == ["doc-en-0002", "doc-zh-0000"]
        assert [d.id for d in chained] == [chained[i].id for i in range(5)]

    def test_out_of_range(self, chained):
        with pytest.raises(IndexError):
            chained[5]


def test_partition_is_disjoint_and_complete(en_corpus, zh_corpus, pair):
    mix = plan_mix(MixPreset.Equal, 800)
    corpus = ChainedCorpus([en_corpus, zh_corpus])
    catalogs = partition_documents(corpus, mix, pair, seed=4)
    ids = [doc_id for catalog in catalogs for _, doc_id in catalog]
    assert sorted(ids) == sorted(d.id for d in corpus)
    for allocation, catalog in zip(mix.allocations, catalogs):
        lang = "en" if allocation.side == Side.InPrimary else "zh"
        assert all(corpus[position].lang == lang for position, _ in catalog)


def test_partition_follows_budget_weights(en_corpus, pair):
    allocations = [
        Allocation(side=Side.InPrimary, cs_type=CsType.TokenRepl, token_budget=100),
        Allocation(side=Side.InPrimary, cs_type=CsType.SentRepl, token_budget=0),
    ]
    catalogs = partition_documents(en_corpus, plan_mix(allocations=allocations), pair, seed=0)
    assert len(catalogs[0]) == len(en_corpus)
    assert catalogs[1] == []


def test_partition_without_budgets_shares_equally(en_corpus, pair):
    allocations = [Allocation(side=Side.InPrimary, cs_type=t, token_budget=0) for t in (CsType.TokenRepl, CsType.SentRepl)]
    catalogs = partition_documents(en_corpus, plan_mix(allocations=allocations), pair, seed=0)
    assert all(catalogs)


def test_duplicate_ids_across_corpora(pair):
    first = [Document("same", "en", "Hello.")]
    second = [Document("same", "zh", "你好。")]
    with pytest.raises(MixError):
        partition_documents(ChainedCorpus([first, second]), plan_mix(MixPreset.Equal, 8), pair, seed=0)


class TestExecuteMix:
    @pytest.fixture
    def result(self, en_corpus, zh_corpus, pair, translator, generator, counter):
        mix = plan_mix(MixPreset.Extreme, 44)
        return execute_mix(
            [en_corpus, zh_corpus], mix, pair, translator, generator, counter,
            seed=3, doc_eligibility_cap=1.0,
        )

    def test_each_document_gets_one_type(self, result):
        for doc in result.replacements.values():
            expected = "token-repl" if doc.lang == "en" else "token-annt"
            assert doc.meta["syncs"]["cs_type"] == expected

    def test_budgets_are_met(self, result):
        primary, secondary = result.reports
        assert primary.allocation == "primary:token-repl"
        assert primary.budget_tokens >= 40
        assert secondary.budget_tokens >= 4
        assert result.failures == 0

    def test_consolidated_report(self, result):
        report = result.consolidated()
        assert set(report) == {"primary:token-repl", "secondary:token-annt", "total"}
        assert report["total"]["docs_touched"] == len(result.replacements)
        total_zh = report["primary:token-repl"]["tokens_added_by_lang"]["zh"] + \
            report["secondary:token-annt"]["tokens_added_by_lang"].get("zh", 0)
        assert report["total"]["tokens_added_by_lang"]["zh"] == total_zh

    def test_thread_count_does_not_change_output(self, en_corpus, zh_corpus, pair, translator, generator, counter, result):
        pooled = execute_mix(
            [en_corpus, zh_corpus], plan_mix(MixPreset.Extreme, 44), pair, translator, generator, counter,
            seed=3, doc_eligibility_cap=1.0, threads=3,
        )
        assert pooled.replacements == result.replacements

    def test_apply_keeps_unmodified_documents(self, result, zh_corpus):
        output = list(result.apply(zh_corpus))
        assert [d.id for d in output] == [d.id for d in zh_corpus]
        assert any(d.text != original.text for d, original in zip(output, zh_corpus))
