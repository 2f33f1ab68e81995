"""Path-keyed deterministic random streams.

A stream is a 64-bit seed plus a path of labels such as
``["replica", 42, "paste", 3]``. Equal (seed, path) pairs give identical
draws; different paths give statistically independent streams, so work can
be split across threads in any order without changing results.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _label_key(label) -> int:
    tag = f"{type(label).__name__}:{label}".encode()
    return int.from_bytes(hashlib.blake2b(tag, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple = ()

    def __init__(self, seed: int, path=()):
        object.__setattr__(self, "seed", int(seed) & 0xFFFFFFFFFFFFFFFF)
        object.__setattr__(self, "path", tuple(path))

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, self.path + labels)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(_label_key(p) for p in self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def bytes(self, n: int) -> bytes:
        return self.generator().bytes(n)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
