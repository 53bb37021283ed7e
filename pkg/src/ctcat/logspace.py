"""Log-domain constants shared by the aligner and the reference kernels."""

# Finite stand-in for ln(0). Kept finite so that adding frame log-scores to an
# unreached state never produces NaN (as IEEE -inf could with exotic inputs);
# comparisons treat anything this low as "no path".
LOG_ZERO = -1.0e30

# Scores above this are considered reachable. Unreached states drift from
# LOG_ZERO by at most the accumulated per-frame log-scores, which stays many
# orders of magnitude below this line for any realistic stream length.
VALID_MIN = -1.0e29
