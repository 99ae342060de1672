"""Logging utils"""

import os
import sys
from datetime import datetime
from pathlib import Path

from loguru import logger
from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
)

from program.utils import data_dir_path

# name: (severity, default colour, default icon)
LOG_LEVELS = {
    "PROGRAM": (36, "cc6600", "🤖"),
    "CORPUS": (37, "d834eb", "🗃️ "),
    "TAGGER": (38, "92a1cf", "🏷️ "),
    "DETECT": (39, "3D5A80", "🔍"),
    "STATS": (40, "F9E79F", "📊"),
    "ABLATE": (41, "cc3333", "✂️ "),
    "SYNTH": (42, "e63946", "✨"),
    "MIX": (43, "e56c49", "🧪"),
    "SFT": (44, "527826", "📜"),
    "MEXA": (45, "006989", "📐"),
    "BACKEND": (46, "DAD3BE", "🔗"),
    "COMPLETED": (47, "FFFFFF", "🟢"),
}

LOG_FORMAT = (
    "<fg #818589>{time:YY-MM-DD} {time:HH:mm:ss}</fg #818589> | "
    "<level>{level.icon}</level> <level>{level: <9}</level> | "
    "<fg #990066>{module}</fg #990066>.<fg #990066>{function}</fg #990066> - <level>{message}</level>"
)


def get_log_settings(name: str, default_color: str, default_icon: str) -> tuple[str, str]:
    """Colour and icon for a level, overridable from the environment."""
    color = os.getenv(f"SYNCS_LOGGER_{name}_FG", default_color)
    icon = os.getenv(f"SYNCS_LOGGER_{name}_ICON", default_icon)
    return f"<fg #{color}>", icon


def register_levels():
    """Register the custom levels once; loguru refuses to redefine a level's number."""
    for name, (no, default_color, default_icon) in LOG_LEVELS.items():
        color, icon = get_log_settings(name, default_color, default_icon)
        try:
            logger.level(name, no=no, color=color, icon=icon)
        except (TypeError, ValueError):
            logger.level(name, color=color, icon=icon)

    for name, default_color, default_icon in (
        ("DEBUG", "98C1D9", "🐞"),
        ("INFO", "818589", "📰"),
        ("WARNING", "ffcc00", "⚠️ "),
        ("CRITICAL", "ff0000", ""),
        ("SUCCESS", "00ff00", "✔️ "),
    ):
        color, icon = get_log_settings(name, default_color, default_icon)
        logger.level(name, color=color, icon=icon)


def setup_logger(level: str, log_dir: Path | None = None):
    """Setup the logger"""
    handlers = [
        {
            "sink": sys.stderr,
            "level": level.upper() or "INFO",
            "format": LOG_FORMAT,
            "backtrace": False,
            "diagnose": False,
            "enqueue": True,
        }
    ]
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d-%H%M")
        handlers.append(
            {
                "sink": log_dir / f"syncs-{timestamp}.log",
                "level": level.upper(),
                "format": LOG_FORMAT,
                "rotation": "25 MB",
                "retention": "24 hours",
                "compression": None,
                "backtrace": False,
                "diagnose": True,
                "enqueue": True,
            }
        )
    logger.configure(handlers=handlers)


def log_cleaner(log_dir: Path | None = None) -> int:
    """Remove log files older than 8 hours. Returns the number removed."""
    removed = 0
    logs_dir_path = log_dir or data_dir_path / "logs"
    try:
        for log_file in logs_dir_path.glob("syncs-*.log"):
            if (datetime.now() - datetime.fromtimestamp(log_file.stat().st_mtime)).total_seconds() / 3600 > 8:
                log_file.unlink()
                removed += 1
        if removed:
            logger.log("COMPLETED", f"Cleaned up {removed} logs older than 8 hours.")
    except Exception as e:
        logger.error(f"Failed to clean old logs: {e}")
    return removed


def create_progress_bar(total_items: int | None = None) -> tuple[Progress, Console]:
    console = Console(stderr=True)
    progress = Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[progress.completed]{task.completed}" + (f"/{total_items}" if total_items else ""), justify="right"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )
    return progress, console


register_levels()
