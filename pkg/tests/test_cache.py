import json

import pytest
import torch

from utils.cache import RoundCache, atomic_directory, atomic_write_json, atomic_write_text
from utils.seeding import derive_seed, derive_seeds, torch_generator


def test_round_cache_round_trip(tmp_path):
    cache = RoundCache(tmp_path / "synth_cache")
    images = {"000000": torch.rand(1, 8, 8), "000001": torch.rand(1, 8, 8)}
    target = cache.write_round(3, images, {"labels": [0, 1]})

    assert target.name == "round_0003"
    assert cache.rounds() == [3]
    loaded, manifest = cache.read_round(3)
    assert manifest == {"labels": [0, 1]}
    assert set(loaded) == set(images)
    for name, image in images.items():
        assert float((loaded[name] - image).abs().max()) <= 1 / 255 + 1e-6


def test_round_cache_rgb(tmp_path):
    cache = RoundCache(tmp_path / "cache")
    cache.write_round(0, {"a": torch.rand(3, 4, 4)}, {})
    images, _ = cache.read_round(0, channels=3)
    assert images["a"].shape == (3, 4, 4)


def test_missing_round(tmp_path):
    cache = RoundCache(tmp_path / "cache")
    assert cache.read_manifest(5) is None
    assert cache.read_round(5) == ({}, {})
    assert cache.rounds() == []


def test_rewriting_a_round_replaces_it(tmp_path):
    cache = RoundCache(tmp_path / "cache")
    cache.write_round(0, {"a": torch.zeros(1, 4, 4), "b": torch.zeros(1, 4, 4)}, {"v": 1})
    cache.write_round(0, {"c": torch.ones(1, 4, 4)}, {"v": 2})
    images, manifest = cache.read_round(0)
    assert set(images) == {"c"}
    assert manifest == {"v": 2}


def test_atomic_writes(tmp_path):
    atomic_write_text(tmp_path / "nested" / "a.txt", "é")
    assert (tmp_path / "nested" / "a.txt").read_text(encoding="utf-8") == "é"
    atomic_write_json(tmp_path / "b.json", {"b": 1, "a": float("inf")})
    assert json.loads((tmp_path / "b.json").read_text(encoding="utf-8"))["b"] == 1
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []


def test_failed_atomic_directory_keeps_previous_content(tmp_path):
    target = tmp_path / "last"
    with atomic_directory(target) as tmp:
        (tmp / "state.json").write_text("1", encoding="utf-8")

    with pytest.raises(RuntimeError):
        with atomic_directory(target) as tmp:
            (tmp / "state.json").write_text("2", encoding="utf-8")
            raise RuntimeError("interrompu")

    assert (target / "state.json").read_text(encoding="utf-8") == "1"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["last"]


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert 0 <= derive_seed(7) < 2 ** 63
    seeds = derive_seeds(5, 3, 4)
    assert seeds == derive_seeds(5, 3, 4)
    assert len(set(seeds)) == 5


def test_torch_generator_is_reproducible():
    first = torch.rand(3, generator=torch_generator(1, 2))
    second = torch.rand(3, generator=torch_generator(1, 2))
    assert torch.equal(first, second)
