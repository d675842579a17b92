"""Counter-based random substreams keyed by ``(seed, tag, index)``.

Every stream is a Philox generator seeded from a ``SeedSequence`` whose spawn
key encodes the purpose and position of the draw, so results do not depend on
how work is split between workers.
"""

from __future__ import annotations

import numpy as np

TAGS = {"lemma": 1, "trial": 2, "boot": 3, "test": 4}


def substream(seed: int, tag: str, *index: int) -> np.random.Generator:
    key = (TAGS[tag],) + tuple(int(i) for i in index)
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
