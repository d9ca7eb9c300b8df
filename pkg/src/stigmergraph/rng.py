"""Deterministic random number generation.

Every stochastic component in the package draws from SplitMix64 streams.  The
generator is implemented here with plain masked integer arithmetic and again,
operation for operation, inside the compiled kernel module, so that a run
produces bit-identical trajectories no matter which backend executes it.
stdlib `random` is deliberately not used on any simulation path: its Mersenne
Twister state is awkward to reproduce in C and ties determinism to CPython
internals.
"""

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
# 2**-53; multiplying a 53-bit integer by this yields a double in [0, 1).
_FLOAT_SCALE = 1.0 / 9007199254740992.0


def mix64(z):
    """One SplitMix64 output step applied to the 64-bit value ``z``."""
    z = z & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(base, *indices):
    """Fold run/cell/trial indices into a base seed.

    Used by the sweep harness: every (cell, trial) gets an independent,
    reproducible stream regardless of scheduling order.
    """
    state = (base ^ 0x5851F42D4C957F2D) & _MASK
    for value in indices:
        state = mix64((state + _GAMMA + (value & _MASK)) & _MASK)
    return mix64((state + _GAMMA) & _MASK)


class DetRng:
    """SplitMix64 stream with the few draw shapes the engines need."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = seed & _MASK

    def next_u64(self):
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)

    def next_float(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _FLOAT_SCALE

    def next_below(self, n):
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        # floor(u * n) keeps the pure and compiled backends bit-identical;
        # the clamp guards the (never observed) u*n == n rounding corner.
        value = int(self.next_float() * n)
        return n - 1 if value >= n else value

    def getstate(self):
        return self.state

    def setstate(self, state):
        self.state = state & _MASK
