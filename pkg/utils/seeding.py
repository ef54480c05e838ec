"""
Named seed derivation.

All randomness in the toolkit flows from one master seed. Stages never share a
generator; each derives its own from (master, stage name, indices) so that
scheduling order and unrelated parameters cannot shift a stream.
"""
import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(master: int, *names) -> int:
    digest = hashlib.blake2b(digest_size=8)
    digest.update(str(int(master) & SEED_MASK).encode())
    for name in names:
        digest.update(b"/")
        digest.update(str(name).encode())
    return int.from_bytes(digest.digest(), "big")


def rng_for(master: int, *names) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *names))
