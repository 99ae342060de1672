import json

import pytest

from program.corpus.models import Document, LanguagePair
from program.tagging.scripts import (
    BUILTIN_PROFILES,
    CharClass,
    ScriptProfile,
    ScriptProfileError,
    get_profile,
    load_profiles,
    parse_range,
    with_min_chars,
)
from program.tagging.splitter import split_text
from program.tagging.tagger import DiacriticHeuristicClassifier, tag_document, tag_sentence_language
from program.types import LanguageTag


@pytest.fixture
def en_zh():
    return get_profile("en-zh")


@pytest.mark.parametrize("char, expected", [
    ("a", CharClass.Primary),
    ("Z", CharClass.Primary),
    ("中", CharClass.Secondary),
    ("，", CharClass.SecondaryNeutral),
    ("。", CharClass.SecondaryNeutral),
    ("あ", CharClass.OtherScript),
    ("1", CharClass.Neutral),
    ("!", CharClass.Neutral),
    ("😀", CharClass.Neutral),
])
def test_char_classes(en_zh, char, expected):
    assert en_zh.char_class(char) == expected


def test_script_counts(en_zh):
    counts = en_zh.count("Hello 世界! 123")
    assert counts.primary == 5
    assert counts.secondary == 2
    assert counts.letters == 7


def test_prefilter(en_zh):
    assert en_zh.has_both_scripts("I like 饺子")
    assert not en_zh.has_both_scripts("I like dumplings")
    assert get_profile("en-ro").has_both_scripts("any text at all")


def test_other_script_presence(en_zh):
    assert en_zh.has_other_script("我们去商店。お客様、こちらです。")
    assert not en_zh.has_other_script("I like 饺子")
    assert not ScriptProfile("plain", ((0x41, 0x5A),)).has_other_script("あ")


@pytest.mark.parametrize("profile", BUILTIN_PROFILES, ids=lambda p: p.name)
def test_builtin_profiles_compile(profile):
    lo, hi = profile.primary_ranges[0]
    counts = profile.count(chr(lo) + chr(hi) + " 1")
    assert counts.primary == 2
    assert counts.neutral == 2
    if profile.secondary_ranges:
        lo, hi = profile.secondary_ranges[-1]
        assert profile.count(chr(hi)).secondary == 1


def test_astral_ranges_compile():
    profile = ScriptProfile("en-emoji", ((0x41, 0x5A),), ((0x1F600, 0x1F64F),))
    assert profile.count("A😀😀").secondary == 2
    assert profile.char_class("😀") == CharClass.Secondary


@pytest.mark.parametrize("text, tag", [
    ("Hello world.", LanguageTag.PurePrimary),
    ("你好世界。", LanguageTag.PureSecondary),
    ("I like 饺子 a lot.", LanguageTag.Mixed),
    ("a", LanguageTag.Other),
    ("好", LanguageTag.Other),
    ("123 !!! 😀", LanguageTag.Other),
    ("こんにちは", LanguageTag.Other),
])
def test_tag_sentence_language(en_zh, text, tag):
    assert tag_sentence_language(text, en_zh) == tag


def test_min_chars_changes_pure_threshold(en_zh):
    assert tag_sentence_language("Hi", en_zh) == LanguageTag.PurePrimary
    assert tag_sentence_language("Hi", with_min_chars(en_zh, 3)) == LanguageTag.Other


class TestSplitter:
    def _sentences(self, text):
        return [span.of(text) for span in split_text(text)]

    def test_latin_sentences(self):
        assert self._sentences("It rains. We stay in! Do you?") == ["It rains.", "We stay in!", "Do you?"]

    def test_cjk_terminators_need_no_space(self):
        assert self._sentences("你好。我很好！") == ["你好。", "我很好！"]

    def test_abbreviations(self):
        text = "Dr. Smith likes fruit, e.g. apples. No. 5 is his favourite."
        assert self._sentences(text) == ["Dr. Smith likes fruit, e.g. apples.", "No. 5 is his favourite."]

    def test_enumerator_after_colon(self):
        text = "The customs of the spring festival: 1. Putting up Spring Couplet."
        assert self._sentences(text) == [text]

    def test_closing_bracket_stays_with_sentence(self):
        assert self._sentences("He left. (他走了。) Then") == ["He left.", "(他走了。)", "Then"]

    def test_newlines_always_split(self):
        assert self._sentences("first line\nsecond line") == ["first line", "second line"]

    def test_decimal_is_not_a_boundary(self):
        assert self._sentences("It costs 3.5 dollars.") == ["It costs 3.5 dollars."]

    @pytest.mark.parametrize("joiner", [" ", "\n", "  \n "])
    def test_reference_sentences(self, test_data, joiner):
        expected = (test_data / "sentences_50.txt").read_text(encoding="utf-8").splitlines()
        assert len(expected) == 50
        assert self._sentences(joiner.join(expected)) == expected


def test_tag_document_cs_types(cs_types, pair):
    doc = next(d for d in cs_types if d.id == "sent-repl")
    sentences = tag_document(doc, pair)
    assert len(sentences) == 6
    tags = [s.tag for s in sentences]
    assert tags.count(LanguageTag.PureSecondary) == 1
    assert sentences[3].text(doc.text).startswith("这道题")


def test_romanian_uses_sentence_classifier():
    pair = LanguagePair.parse("en-ro")
    doc = Document("r", "en", "This is the book of the year. Aceasta este o carte și un caiet pentru școală.")
    tags = [s.tag for s in tag_document(doc, pair)]
    assert tags == [LanguageTag.PurePrimary, LanguageTag.PureSecondary]


def test_diacritic_classifier_without_evidence():
    assert DiacriticHeuristicClassifier().classify("xyz qwerty") == ("en", 0.0)


class TestProfiles:
    def test_parse_range(self):
        assert parse_range("U+0041..U+005A") == (0x41, 0x5A)
        assert parse_range("U+3000") == (0x3000, 0x3000)

    @pytest.mark.parametrize("value", ["0041..005A", "U+005A..U+0041", "U+110000"])
    def test_parse_range_rejects(self, value):
        with pytest.raises(ScriptProfileError):
            parse_range(value)

    def test_overlapping_ranges(self):
        with pytest.raises(ScriptProfileError, match="overlap"):
            ScriptProfile("xx-yy", ((0x41, 0x5A),), ((0x50, 0x60),))

    def test_load_profiles(self, tmp_path):
        path = tmp_path / "profiles.json"
        path.write_text(json.dumps({
            "profiles": {
                "en-tq": {
                    "primary": ["U+0041..U+005A", "U+0061..U+007A"],
                    "secondary": ["U+3040..U+30FF"],
                    "min_chars": 3,
                }
            }
        }))
        [profile] = load_profiles(path)
        assert get_profile("en-tq") is profile
        assert profile.min_chars == 3
        assert tag_sentence_language("カタカナ", profile) == LanguageTag.PureSecondary
        assert LanguagePair.parse("en-tq").secondary_lang == "tq"

    def test_unknown_profile(self):
        with pytest.raises(ScriptProfileError, match="Unknown"):
            get_profile("en-qq")
