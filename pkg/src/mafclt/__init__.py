"""Heavy-tailed moving averages, Skorokhod M2 distances, and stable limits.

Subpackages cover the innovation laws (`tails`), coefficient sequences
(`coefficients`), partial-sum step paths (`ma_paths`), the M2 metric
(`m2_metric`), the limit process (`stable_limit`), and the Monte-Carlo
experiment harness (`harness`).
"""

from . import coefficients, harness, m2_metric, ma_paths, stable_limit, tails  # noqa: F401

__version__ = "0.1.0"
