"""tracelab: deletion-channel trace statistics and separation bounds."""

__version__ = "0.1.0"

from tracelab.channel import (
    ChannelParams,
    DistributionTable,
    Trace,
    sample_trace,
    subsequence_count,
    trace_distribution,
    trace_probability,
    tv_distance,
)

__all__ = [
    "ChannelParams",
    "DistributionTable",
    "Trace",
    "sample_trace",
    "subsequence_count",
    "trace_distribution",
    "trace_probability",
    "tv_distance",
    "__version__",
]
