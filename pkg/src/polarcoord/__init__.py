"""Strong coordination over noisy channels with nested polar codes.

Subpackages and modules
-----------------------
probkit
    Dense finite-alphabet pmf containers and information measures.
channels
    Discrete memoryless channels, capacity (Blahut-Arimoto), cascades.
rate_region
    Achievable-rate regions for joint and separate coordination schemes,
    plus the binary-symmetric worked example and its sweep curves.
polar
    Polar transform, successive-cancellation conditionals, Monte Carlo
    entropy profiles, and the index-set algebra used by the codec.
codec
    Block-chained joint coordination encoder/decoder with an exact
    randomness ledger.
sep
    Separation baseline: polar channel code, noise recovery, randomness
    extraction, and the end-to-end separate pipeline.
config / cli
    Experiment configuration and the command-line harness.
"""

__version__ = "0.1.0"
