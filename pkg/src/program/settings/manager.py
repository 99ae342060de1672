import json
import os
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from program.settings.models import AppModel
from program.utils.logging import logger

ENV_PREFIX = "SYNCS"


class SettingsManager:
    """Resolves settings: model defaults, then a JSON config file, then
    ``SYNCS_<SECTION>_<KEY>`` environment variables, then CLI overrides."""

    def __init__(self, config_file: Optional[Path] = None, overrides: Optional[dict] = None):
        self.config_file = config_file
        self.settings = self.load(config_file, overrides)

    def check_environment(self, settings: dict, prefix: str = "") -> dict:
        """Overlay ``<PREFIX>_<SECTION>_<KEY>`` variables, cast to the type of the current value."""
        checked = {}
        for key, value in settings.items():
            name = f"{prefix}_{key}".upper()
            if isinstance(value, dict):
                checked[key] = self.check_environment(value, name)
                continue
            raw = os.getenv(name)
            checked[key] = value if not raw else _cast_like(value, raw)
        return checked

    def load(self, config_file: Optional[Path] = None, overrides: Optional[dict] = None) -> AppModel:
        """Build the resolved AppModel, raising on invalid input."""
        settings_dict = json.loads(AppModel().model_dump_json())
        try:
            if config_file:
                with open(config_file, "r", encoding="utf-8") as file:
                    deep_update(settings_dict, json.load(file))
            settings_dict = self.check_environment(settings_dict, ENV_PREFIX)
            if overrides:
                deep_update(settings_dict, overrides)
            return AppModel.model_validate(settings_dict)
        except ValidationError as e:
            formatted_error = format_validation_error(e)
            logger.error(f"Settings validation failed:\n{formatted_error}")
            raise
        except json.JSONDecodeError as e:
            logger.error(f"Error parsing settings file: {e}")
            raise
        except FileNotFoundError:
            logger.error(f"Error loading settings: {config_file} does not exist")
            raise

    def resolved(self) -> dict:
        """The resolved settings as echoed into run reports."""
        return json.loads(self.settings.model_dump_json())


def _cast_like(current: Any, raw: str) -> Any:
    # unset (None) values stay strings; pydantic coerces them
    if isinstance(current, bool):
        return raw.lower() in ("true", "1")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return json.loads(raw)
    return raw


def deep_update(target: dict, source: dict[str, Any]) -> dict:
    for key, value in source.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            deep_update(target[key], value)
        else:
            target[key] = value
    return target


def format_validation_error(e: ValidationError) -> str:
    """Format validation errors in a user-friendly way"""
    messages = []
    for error in e.errors():
        field = ".".join(str(x) for x in error["loc"])
        message = error.get("msg")
        messages.append(f"• {field}: {message}")
    return "\n".join(messages)
