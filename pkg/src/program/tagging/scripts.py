"""Unicode script profiles.

A profile names the codepoint ranges that count as each language's script for
a language pair. Everything outside the named ranges is neutral: digits, ASCII
punctuation, whitespace, symbols and emoji never count toward either language.

Profiles can be loaded from JSON::

    {
        "profiles": {
            "en-ja": {
                "primary": ["U+0041..U+005A", "U+0061..U+007A"],
                "secondary": ["U+3040..U+30FF"],
                "secondary_neutral": ["U+3000..U+303F"],
                "other_script": [],
                "min_chars": 2
            }
        }
    }
"""
import json
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from threading import Lock

import regex

from program.utils.logging import logger

Range = tuple[int, int]

RANGE_PATTERN = regex.compile(r"^U\+([0-9A-Fa-f]{4,6})(?:\.\.U\+([0-9A-Fa-f]{4,6}))?$")


class ScriptProfileError(Exception):
    """Raised for invalid or unknown script profiles"""


class CharClass(str, Enum):
    Primary = "primary"
    Secondary = "secondary"
    SecondaryNeutral = "secondary-neutral"
    OtherScript = "other-script"
    Neutral = "neutral"


@dataclass(frozen=True)
class ScriptCounts:
    primary: int = 0
    secondary: int = 0
    other_script: int = 0
    neutral: int = 0

    @property
    def letters(self) -> int:
        """Characters that belong to some tracked script."""
        return self.primary + self.secondary + self.other_script


def _char_class_pattern(ranges: tuple[Range, ...]) -> regex.Pattern | None:
    if not ranges:
        return None
    body = "".join(f"\\U{lo:08X}-\\U{hi:08X}" for lo, hi in ranges)
    return regex.compile(f"[{body}]")


def _merge(ranges) -> tuple[Range, ...]:
    merged: list[list[int]] = []
    for lo, hi in sorted(ranges):
        if lo > hi:
            raise ScriptProfileError(f"Range U+{lo:04X}..U+{hi:04X} is reversed")
        if merged and lo <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def _intersects(a: tuple[Range, ...], b: tuple[Range, ...]) -> bool:
    return any(lo1 <= hi2 and lo2 <= hi1 for lo1, hi1 in a for lo2, hi2 in b)


@dataclass(frozen=True)
class ScriptProfile:
    """Codepoint ranges for one language pair.

    A profile with no secondary ranges describes a same-script pair; tagging
    such a pair needs a sentence classifier.
    """
    name: str
    primary_ranges: tuple[Range, ...]
    secondary_ranges: tuple[Range, ...] = ()
    secondary_neutral_ranges: tuple[Range, ...] = ()
    other_script_ranges: tuple[Range, ...] = ()
    min_chars: int = 2
    _table: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        for attr in ("primary_ranges", "secondary_ranges", "secondary_neutral_ranges", "other_script_ranges"):
            object.__setattr__(self, attr, _merge(getattr(self, attr)))
        if self.min_chars < 1:
            raise ScriptProfileError(f"Profile {self.name}: min_chars must be >= 1, got {self.min_chars}")
        if not self.primary_ranges:
            raise ScriptProfileError(f"Profile {self.name}: primary ranges are empty")
        classes = [
            (self.primary_ranges, CharClass.Primary),
            (self.secondary_ranges, CharClass.Secondary),
            (self.secondary_neutral_ranges, CharClass.SecondaryNeutral),
            (self.other_script_ranges, CharClass.OtherScript),
        ]
        for i, (left, left_cls) in enumerate(classes):
            for right, right_cls in classes[i + 1:]:
                if _intersects(left, right):
                    raise ScriptProfileError(
                        f"Profile {self.name}: {left_cls.value} and {right_cls.value} ranges overlap"
                    )
        table = sorted((lo, hi, cls) for ranges, cls in classes for lo, hi in ranges)
        object.__setattr__(self, "_table", (tuple(t[0] for t in table), tuple(table)))
        object.__setattr__(self, "_patterns", {
            CharClass.Primary: _char_class_pattern(self.primary_ranges),
            CharClass.Secondary: _char_class_pattern(self.secondary_ranges),
            CharClass.OtherScript: _char_class_pattern(self.other_script_ranges),
        })

    @property
    def same_script(self) -> bool:
        return not self.secondary_ranges

    def char_class(self, char: str) -> CharClass:
        starts, table = self._table
        cp = ord(char)
        i = bisect_right(starts, cp) - 1
        if i >= 0 and table[i][0] <= cp <= table[i][1]:
            return table[i][2]
        return CharClass.Neutral

    def count(self, text: str) -> ScriptCounts:
        patterns = self._patterns
        primary = len(patterns[CharClass.Primary].findall(text))
        secondary = len(patterns[CharClass.Secondary].findall(text)) if patterns[CharClass.Secondary] else 0
        other = len(patterns[CharClass.OtherScript].findall(text)) if patterns[CharClass.OtherScript] else 0
        return ScriptCounts(primary, secondary, other, len(text) - primary - secondary - other)

    def has_both_scripts(self, text: str) -> bool:
        """Character pre-filter: does the text contain both scripts at all?

        Same-script pairs cannot be pre-filtered and always pass.
        """
        if self.same_script:
            return True
        return bool(self._patterns[CharClass.Primary].search(text)) and bool(
            self._patterns[CharClass.Secondary].search(text)
        )

    def has_other_script(self, text: str) -> bool:
        pattern = self._patterns[CharClass.OtherScript]
        return bool(pattern and pattern.search(text))

    def to_config(self) -> dict:
        def fmt(ranges):
            return [f"U+{lo:04X}..U+{hi:04X}" for lo, hi in ranges]
        return {
            "primary": fmt(self.primary_ranges),
            "secondary": fmt(self.secondary_ranges),
            "secondary_neutral": fmt(self.secondary_neutral_ranges),
            "other_script": fmt(self.other_script_ranges),
            "min_chars": self.min_chars,
        }


LATIN_BASIC = ((0x41, 0x5A), (0x61, 0x7A))
LATIN_EXTENDED = LATIN_BASIC + ((0xC0, 0xD6), (0xD8, 0xF6), (0xF8, 0x17F), (0x218, 0x21B))
CJK_IDEOGRAPHS = ((0x4E00, 0x9FFF),)
CJK_PUNCTUATION = ((0x3000, 0x303F), (0xFF01, 0xFF0F), (0xFF1A, 0xFF20), (0xFF3B, 0xFF40), (0xFF5B, 0xFF60))
KANA = ((0x3040, 0x309F), (0x30A0, 0x30FF), (0xFF66, 0xFF9F))
BENGALI = ((0x0980, 0x09FF),)

BUILTIN_PROFILES = (
    ScriptProfile("en-zh", LATIN_BASIC, CJK_IDEOGRAPHS, CJK_PUNCTUATION, KANA),
    ScriptProfile("en-bn", LATIN_BASIC, BENGALI, (), KANA + CJK_IDEOGRAPHS),
    ScriptProfile("en-ro", LATIN_EXTENDED, (), (), KANA + CJK_IDEOGRAPHS),
)

_registry: dict[str, ScriptProfile] = {p.name: p for p in BUILTIN_PROFILES}
_registry_lock = Lock()


def register_profile(profile: ScriptProfile, replace: bool = False):
    with _registry_lock:
        if profile.name in _registry and not replace:
            raise ScriptProfileError(f"Script profile '{profile.name}' is already registered")
        _registry[profile.name] = profile
    logger.log("TAGGER", f"Registered script profile {profile.name}")


def is_registered(name: str) -> bool:
    return name in _registry


def get_profile(name: str) -> ScriptProfile:
    try:
        return _registry[name]
    except KeyError:
        raise ScriptProfileError(f"Unknown script profile '{name}' (known: {', '.join(sorted(_registry))})")


def parse_range(value: str) -> Range:
    """Parse ``U+XXXX..U+YYYY`` (or a single ``U+XXXX``)."""
    match = RANGE_PATTERN.match(value.strip())
    if not match:
        raise ScriptProfileError(f"Invalid codepoint range '{value}', expected U+XXXX..U+YYYY")
    lo = int(match.group(1), 16)
    hi = int(match.group(2), 16) if match.group(2) else lo
    if lo > hi:
        raise ScriptProfileError(f"Range '{value}' is reversed")
    if hi > 0x10FFFF:
        raise ScriptProfileError(f"Range '{value}' is outside Unicode")
    return lo, hi


def profile_from_config(name: str, config: dict) -> ScriptProfile:
    if not isinstance(config, dict) or "primary" not in config:
        raise ScriptProfileError(f"Profile {name}: 'primary' ranges are required")
    try:
        return ScriptProfile(
            name=name,
            primary_ranges=tuple(parse_range(r) for r in config["primary"]),
            secondary_ranges=tuple(parse_range(r) for r in config.get("secondary", [])),
            secondary_neutral_ranges=tuple(parse_range(r) for r in config.get("secondary_neutral", [])),
            other_script_ranges=tuple(parse_range(r) for r in config.get("other_script", [])),
            min_chars=int(config.get("min_chars", 2)),
        )
    except (TypeError, ValueError) as e:
        raise ScriptProfileError(f"Profile {name}: {e}")


def load_profiles(path: Path, replace: bool = True) -> list[ScriptProfile]:
    """Load and register every profile in a JSON profile file."""
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = json.load(file)
    except json.JSONDecodeError as e:
        raise ScriptProfileError(f"{path}: invalid JSON ({e.msg})")
    profiles = [profile_from_config(name, config) for name, config in data.get("profiles", {}).items()]
    for profile in profiles:
        register_profile(profile, replace=replace)
    return profiles


def with_min_chars(profile: ScriptProfile, min_chars: int) -> ScriptProfile:
    if min_chars == profile.min_chars:
        return profile
    return ScriptProfile(
        profile.name,
        profile.primary_ranges,
        profile.secondary_ranges,
        profile.secondary_neutral_ranges,
        profile.other_script_ranges,
        min_chars,
    )
