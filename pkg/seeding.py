"""
Deterministic seed derivation shared by the generator, the relations and the controller
"""
import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts (independent of PYTHONHASHSEED)"""
    text = '\x1f'.join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def rng_for(*parts) -> np.random.Generator:
    """numpy Generator seeded from derive_seed(*parts)"""
    return np.random.default_rng(derive_seed(*parts))


def unit_direction(*parts) -> np.ndarray:
    """Horizontal unit vector whose angle is drawn from the given seed parts"""
    angle = rng_for(*parts).uniform(0.0, 2.0 * np.pi)
    return np.array([np.cos(angle), np.sin(angle), 0.0])
