"""Deterministic seed derivation for sweep points and sub-simulations.

Per-point seeds come from mixing the master seed with the point index
through a splitmix64-style finalizer, so sweep points are reproducible
and independent of execution order.  Constants: increment
0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
"""

_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 output function over a 64-bit state."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Seed for sub-stream `index` of a master seed: mix64(master XOR index)."""
    return mix64((master ^ index) & _MASK64)
