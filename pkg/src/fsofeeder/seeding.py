"""Seed derivation for reproducible per-step random streams."""

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 20190901


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, step: int) -> int:
    """Mix ``(master_seed, step)`` into a 64-bit seed.

    Two splitmix64 finalizer rounds; the step is folded in between them so
    neighbouring steps land far apart.
    """
    h = _splitmix64(master_seed & MASK64)
    return _splitmix64(h ^ (step & MASK64))
