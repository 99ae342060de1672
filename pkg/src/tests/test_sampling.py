import threading
import time

import pytest

from program.utils import hash64, ordered_map
from program.utils.sampling import Xoshiro256, splitmix64


def test_splitmix64_reference_outputs():
    state, outputs = 0, []
    for _ in range(4):
        state, out = splitmix64(state)
        outputs.append(out)
    assert outputs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]


def test_generator_is_seeded_with_splitmix64():
    assert Xoshiro256(0).s == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]


def test_same_seed_same_stream():
    first, second = Xoshiro256(42), Xoshiro256(42)
    assert [first.next_u64() for _ in range(10)] == [second.next_u64() for _ in range(10)]
    assert Xoshiro256(42).next_u64() != Xoshiro256(43).next_u64()


def test_seed_wraps_to_64_bits():
    assert Xoshiro256(2**64 + 5).s == Xoshiro256(5).s


def test_streams_are_labelled():
    assert Xoshiro256.for_stream(1, "doc-1").s == Xoshiro256.for_stream(1, "doc-1").s
    assert Xoshiro256.for_stream(1, "doc-1").s != Xoshiro256.for_stream(1, "doc-2").s


def test_hash64_separates_parts():
    assert hash64("ab", "c") != hash64("a", "bc")
    assert 0 <= hash64(7, "x") < 2**64


def test_random_and_below_ranges():
    rng = Xoshiro256(9)
    assert all(0.0 <= rng.random() < 1.0 for _ in range(1000))
    draws = [rng.below(6) for _ in range(3000)]
    assert set(draws) == set(range(6))
    with pytest.raises(ValueError):
        rng.below(0)


def test_shuffle_is_a_permutation():
    items = list(range(50))
    shuffled = Xoshiro256(1).shuffle(list(items))
    assert sorted(shuffled) == items
    assert shuffled != items
    assert Xoshiro256(1).shuffle(list(items)) == shuffled


def test_sample_without_replacement():
    picked = Xoshiro256(3).sample("abcdefgh", 5)
    assert len(set(picked)) == 5
    assert set(picked) <= set("abcdefgh")
    with pytest.raises(ValueError):
        Xoshiro256(3).sample([1, 2], 3)


@pytest.mark.parametrize("threads", [1, 4])
def test_ordered_map_keeps_input_order(threads):
    def slow_square(x):
        time.sleep(0.001 * (x % 3))
        return x * x

    assert list(ordered_map(slow_square, range(300), threads, chunk_size=8)) == [x * x for x in range(300)]


def test_ordered_map_uses_worker_threads():
    names = set(ordered_map(lambda _: threading.current_thread().name, range(64), threads=4))
    assert all(name.startswith("syncs") for name in names)
