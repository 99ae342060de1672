"""syncs settings models"""
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

from program.types import CsType, MixPreset, Side
from program.utils import get_version

MAX_SEED = 2**64 - 1


class CorpusModel(BaseModel):
    strict: bool = False


class TaggingModel(BaseModel):
    min_chars: int = Field(2, ge=1)
    profiles_file: Optional[Path] = None


class DetectorConfig(BaseModel):
    annt_similarity_threshold: float = Field(0.70, gt=0.0, le=1.0)
    alignment_window: int = Field(2, ge=1)
    unrelated_other_script_ratio: float = Field(0.30, ge=0.0, le=1.0)
    unrelated_symbol_ratio: float = Field(0.50, ge=0.0, le=1.0)
    remote_unrelated_screen: bool = False
    character_prefilter: bool = True


class SynthesisModel(BaseModel):
    side: Side = Side.InPrimary
    cs_type: CsType = CsType.TokenRepl
    token_budget: Optional[int] = Field(None, ge=0)  # None: density-driven run
    sentence_density: float = Field(0.5, ge=0.0, le=1.0)
    doc_eligibility_cap: Optional[float] = Field(None, ge=0.0, le=1.0)  # None: 0.2 InPrimary, 1.0 InSecondary
    term_density: float = Field(0.3, gt=0.0, le=1.0)


class MixModel(BaseModel):
    preset: MixPreset = MixPreset.Equal
    total_budget: int = Field(0, ge=0)
    sentence_density: float = Field(0.5, ge=0.0, le=1.0)


class BackendsModel(BaseModel):
    translator: Literal["dictionary", "remote"] = "dictionary"
    generator: Literal["dictionary", "remote"] = "dictionary"
    encoder: Literal["dictionary"] = "dictionary"
    token_classifier: Literal["heuristic", "remote"] = "heuristic"
    counter: Literal["builtin"] = "builtin"
    lexicon: Optional[Path] = None
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "SYNCS_API_KEY"  # name of the variable holding the key, never the key
    timeout: float = Field(60.0, gt=0.0)
    retries: int = Field(3, ge=0)
    backoff_factor: float = Field(0.5, ge=0.0)
    requests_per_minute: Optional[int] = Field(None, ge=1)

    @property
    def needs_remote(self) -> bool:
        return "remote" in (self.translator, self.generator, self.token_classifier)


class AppModel(BaseModel):
    version: str = get_version()
    pair: str = "en-zh"
    seed: int = Field(0, ge=0, le=MAX_SEED)
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"
    corpus: CorpusModel = CorpusModel()
    tagging: TaggingModel = TaggingModel()
    detector: DetectorConfig = DetectorConfig()
    synthesis: SynthesisModel = SynthesisModel()
    mix: MixModel = MixModel()
    backends: BackendsModel = BackendsModel()

    @field_validator("log_level")
    def check_log_level(cls, v):
        level = v.upper()
        if level not in ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{v}'")
        return level
