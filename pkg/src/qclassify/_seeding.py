from __future__ import annotations

import hashlib
import math


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts; independent of PYTHONHASHSEED."""
    text = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


def round_half_up(x: float) -> int:
    # round(.., 9) absorbs float noise such as 10 * 0.15 = 1.5000000000000002
    return int(math.floor(round(x, 9) + 0.5))
