import hashlib
import re
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from pathlib import Path
from typing import TypeVar

root_dir = Path(__file__).resolve().parents[3]

data_dir_path = root_dir / "data"

T = TypeVar("T")
R = TypeVar("R")


def get_version() -> str:
    with open(root_dir / "pyproject.toml") as file:
        pyproject_toml = file.read()

    match = re.search(r'version = "(.+)"', pyproject_toml)
    if match:
        version = match.group(1)
    else:
        raise ValueError("Could not find version in pyproject.toml")
    return version


def hash64(*parts: object) -> int:
    """Stable 64-bit hash of the given parts (blake2b, independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "little")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1, chunk_size: int = 64) -> Iterator[R]:
    """Map ``fn`` over ``items`` on a thread pool, yielding results in input order.

    Items are submitted in bounded chunks so arbitrarily long streams never
    sit in memory at once.
    """
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    iterator = iter(items)
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="syncs") as executor:
        while chunk := list(islice(iterator, chunk_size * threads)):
            yield from executor.map(fn, chunk)
