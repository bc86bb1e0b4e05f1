"""Named random-number streams derived from a single master seed.

Every run consumes randomness from a fixed set of purpose-named streams so
that two runs with the same (config, seed) are bit-identical, and so that
the arrival and channel streams never depend on scheduling decisions
(common-random-numbers contract: policies are compared on identical
arrival/channel realizations; only the switching stream is policy-driven).

Derivation rule, for anyone re-implementing the streams elsewhere:
``SeedSequence(master_seed).spawn(5)`` and assign the children in the
order of ``PURPOSES`` below, each feeding a PCG64 generator.  Arrival and
channel variates are drawn as whole (horizon x n_queues) blocks in slot-major
order before the simulation loop starts, so their values depend only on
(seed, slot, queue).
"""

from dataclasses import dataclass

from numpy.random import Generator, PCG64, SeedSequence

PURPOSES = ("arrivals", "channel", "switching", "calibration", "acquisition")


@dataclass
class Streams:
    arrivals: Generator
    channel: Generator
    switching: Generator
    calibration: Generator
    acquisition: Generator


def derive_streams(master_seed: int) -> Streams:
    root = SeedSequence(master_seed)
    children = root.spawn(len(PURPOSES))
    return Streams(**{name: Generator(PCG64(child))
                      for name, child in zip(PURPOSES, children)})


def replication_seeds(base_seed: int, n: int) -> list[int]:
    """Distinct master seeds for n replications of one experiment."""
    return [base_seed + 1000 * k for k in range(n)]
