"""Fixed 64-bit seed mixing (SplitMix64 finaliser)."""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix(base_seed, *coords):
    """Derive a child seed from ``base_seed`` and integer coordinates.

    ``mix(s, i, j)`` is a pure function of its arguments, so per-trial seeds
    do not depend on execution order.
    """
    h = splitmix64(int(base_seed) & _MASK)
    for c in coords:
        h = splitmix64(h ^ (int(c) & _MASK))
    return h
