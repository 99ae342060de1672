import pytest

from program.ablation.builder import (
    AblationError,
    AblationSpec,
    IdCollisionError,
    InsufficientPoolError,
    build,
    materialize,
    partition,
    read_manifest,
    write_manifest,
)
from program.corpus.models import CsSegment, DetectedDocument, Document, Span
from program.types import AblationMode, Category, Level, SizeUnit
from program.utils.sampling import Xoshiro256


def _doc(doc_id, words=3, category=None):
    text = " ".join(["word"] * words) + " 饺子"
    segments = ()
    if category is not None:
        span = Span(len(text) - 2, len(text))
        segments = (CsSegment(doc_id, span, Level.TokenLevel, category, confidence=0.7),)
    return DetectedDocument(Document(doc_id, "en", text), segments)


@pytest.fixture
def main():
    docs = [_doc(f"m{i}", words=i + 1) for i in range(10)]
    for i in (0, 1, 2):
        docs[i] = _doc(f"m{i}", words=i + 1, category=Category.Replacement)
    docs[3] = _doc("m3", words=4, category=Category.Unrelated)
    return docs


@pytest.fixture
def pool():
    docs = [_doc(f"p{i}", words=2 * i + 1) for i in range(8)]
    docs[0] = _doc("p0", category=Category.Replacement)
    return docs


def test_partition(main, pool):
    parts = partition(main, pool)
    assert parts.m_wcs == ["m0", "m1", "m2"]
    assert "m3" in parts.m_wocs
    assert parts.p_wcs == ["p0"]
    assert len(parts.p_wocs) == 7


def test_id_collision(main):
    with pytest.raises(IdCollisionError):
        partition(main, [_doc("m5")])


class TestCsFree:
    def test_removes_every_wcs_document(self, main, pool):
        result = build(partition(main, pool), AblationSpec(mode=AblationMode.CsFree, seed=3))
        assert result.removed == {"m0", "m1", "m2"}
        assert len(result.added) == 3
        assert not set(result.added) & {"p0"}
        assert len(result.output_ids) == len(main)
        assert result.residual == 0

    def test_is_deterministic(self, main, pool):
        spec = AblationSpec(mode=AblationMode.CsFree, seed=11)
        assert build(partition(main, pool), spec).added == build(partition(main, pool), spec).added

    def test_insufficient_pool(self, main):
        pool = [_doc("p0"), _doc("p1"), _doc("p2", category=Category.Replacement)]
        with pytest.raises(InsufficientPoolError) as error:
            build(partition(main, pool), AblationSpec(mode=AblationMode.CsFree))
        assert error.value.shortfall == 1


def test_control_shares_substitutes_with_cs_free(main, pool):
    parts = partition(main, pool)
    cs_free = build(parts, AblationSpec(mode=AblationMode.CsFree, seed=5))
    control = build(parts, AblationSpec(mode=AblationMode.Control, seed=5))
    assert control.added == cs_free.added
    assert len(control.removed) == 3
    assert control.removed <= set(parts.m_wocs)
    assert {"m0", "m1", "m2"} <= set(control.output_ids)
    assert len(control.output_ids) == len(main)


def test_token_sized_ablation(main, pool, counter):
    parts = partition(main, pool, counter)
    spec = AblationSpec(mode=AblationMode.CsFree, seed=2, size_unit=SizeUnit.tokens)
    result = build(parts, spec)
    largest = max(parts.tokens[i] for i in parts.p_wocs)
    assert result.target == sum(parts.tokens[i] for i in parts.main_ids)
    assert 0 <= result.residual < largest
    assert result.header()["size_unit"] == "tokens"


def test_token_unit_needs_counter(main, pool):
    with pytest.raises(AblationError):
        build(partition(main, pool), AblationSpec(mode=AblationMode.CsFree, size_unit=SizeUnit.tokens))


def test_monolingual_addition(main, pool, counter):
    parts = partition(main, pool, counter)
    result = build(parts, AblationSpec(mode=AblationMode.Monolingual, token_budget=10))
    added_tokens = sum(parts.tokens[i] for i in result.added)
    assert added_tokens >= 10
    assert result.removed == set()
    assert result.achieved - result.target == added_tokens - 10


def test_manifest_round_trip(tmp_path, main, pool):
    result = build(partition(main, pool), AblationSpec(mode=AblationMode.CsFree, seed=1))
    path = tmp_path / "cs-free.manifest.jsonl"
    assert write_manifest(result, path) == len(main) + len(result.added)

    header, entries = read_manifest(path)
    assert header["manifest"] == "cs-free"
    assert header["removed"] == 3 and header["added"] == 3
    roles = {e["id"]: e["role"] for e in entries}
    assert roles["m0"] == "substituted-out"
    assert roles["m4"] == "kept"
    assert all(roles[i] == "substituted-in" for i in result.added)
    assert {e["origin"] for e in entries if e["id"] in result.added} == {"P"}


def test_manifest_without_header(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "m0"}\n')
    with pytest.raises(AblationError):
        read_manifest(path)


def test_materialize_order(main, pool):
    result = build(partition(main, pool), AblationSpec(mode=AblationMode.CsFree, seed=1))
    docs = list(materialize(result, (d.document for d in main), (d.document for d in pool)))
    ids = [d.id for d in docs]
    assert ids[:7] == [f"m{i}" for i in range(3, 10)]
    assert ids[7:] == sorted(result.added, key=lambda i: int(i[1:]))


def _random_fixture(seed):
    """Main and pool of random sizes; at most half of main is wcs, so Control always has room."""
    rng = Xoshiro256.for_stream(seed, "fixture")
    n_main = 10 + rng.below(20)
    main_wcs = set(rng.sample(range(n_main), rng.below(n_main // 2 + 1)))
    n_pool = n_main + 5 + rng.below(10)
    pool_wcs = set(rng.sample(range(n_pool), rng.below(5)))
    main = [
        _doc(f"m{i}", words=1 + rng.below(6), category=Category.Replacement if i in main_wcs else None)
        for i in range(n_main)
    ]
    pool = [_doc(f"p{i}", category=Category.Replacement if i in pool_wcs else None) for i in range(n_pool)]
    return main, pool


@pytest.mark.parametrize("seed", range(100))
def test_ablation_identities(seed):
    main, pool = _random_fixture(seed)
    parts = partition(main, pool)
    cs_free = build(parts, AblationSpec(mode=AblationMode.CsFree, seed=seed))
    control = build(parts, AblationSpec(mode=AblationMode.Control, seed=seed))

    assert len(cs_free.output_ids) == len(main)
    assert len(control.output_ids) == len(main)
    assert not set(cs_free.output_ids) & parts.wcs
    assert set(parts.m_wcs) <= set(control.output_ids)
    assert cs_free.added == control.added
    assert set(cs_free.added) <= set(parts.p_wocs)


def test_substitute_inclusion_is_uniform():
    main = [_doc(f"m{i}", category=Category.Replacement if i < 4 else None) for i in range(10)]
    pool = [_doc(f"p{i}", category=Category.Replacement if i < 2 else None) for i in range(12)]
    parts = partition(main, pool)
    seeds = 200
    counts = {doc_id: 0 for doc_id in parts.p_wocs}
    for seed in range(seeds):
        for doc_id in build(parts, AblationSpec(mode=AblationMode.Control, seed=seed)).added:
            counts[doc_id] += 1

    p = len(parts.m_wcs) / len(parts.p_wocs)
    mean, sigma = seeds * p, (seeds * p * (1 - p)) ** 0.5
    assert sum(counts.values()) == seeds * len(parts.m_wcs)
    for doc_id, count in counts.items():
        assert abs(count - mean) <= 3 * sigma, doc_id
