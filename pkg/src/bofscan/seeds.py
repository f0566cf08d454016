"""Deterministic fan-out of one master seed into per-stage seeds.

Each pipeline stage gets seed = splitmix64(master XOR fnv1a64(stage name)),
so stages are independently reproducible from the master seed alone.
"""

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def stage_seed(master_seed: int, stage: str) -> int:
    """Derive a 64-bit stage seed from the master seed and a stage name."""
    return splitmix64((master_seed & _MASK) ^ fnv1a64(stage))
