"""Shared constants for the parallel bootstrap simulator."""

# Accounting width of one sample point on the wire and in memory.
FLOAT_BYTES: int = 4

# Default global seed.
DEFAULT_SEED: int = 205

MASK64: int = (1 << 64) - 1

# SplitMix64
SPLITMIX_GAMMA: int = 0x9E3779B97F4A7C15
SPLITMIX_MIX1: int = 0xBF58476D1CE4E5B9
SPLITMIX_MIX2: int = 0x94D049BB133111EB

# Uniform doubles take the top 53 bits of a 64-bit output.
DOUBLE_UNIT: float = 2.0 ** -53

# Stream index reserved for synthetic data, above any process rank.
SYNTHETIC_DATA_STREAM: int = 2 ** 32

ROOT_RANK: int = 0

# Fabric byte channels
CHANNEL_DATA_OUT: str = "data_out"
CHANNEL_RESULTS_BACK: str = "results_back"
CHANNEL_VERIFICATION: str = "verification"
CHANNELS = (CHANNEL_DATA_OUT, CHANNEL_RESULTS_BACK, CHANNEL_VERIFICATION)

# (m1, m2) pair and DDRS (partial_sum, partial_count) pair
STATS_PAYLOAD_FLOATS: int = 2
DDRS_PAIR_FLOATS: int = 2

# Counts travel as floats; keep them exactly representable in 4 bytes.
MAX_EXACT_COUNT: int = 2 ** 24

ORACLE_REL_TOL: float = 1e-9
POOLED_REL_TOL: float = 1e-12

DEFAULT_BANDWIDTH: float = 1e8  # bytes/s
DEFAULT_COMPUTE_SPEED: float = 1e8  # sample points/s
