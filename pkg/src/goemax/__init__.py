"""Goal-oriented multiple access toolkit.

Analytical effectiveness metrics, a KKT-based activation optimizer, threshold
decision policies, and a Monte Carlo simulator of the full agent/channel loop.
"""

__version__ = "0.1.0"

from goemax.model import AttributeChain, MetaValueModel, QuerySchedule, Topology, sample_topology
from goemax.channel import LinkBudget, success_probability, success_probability_mc

__all__ = [
    "AttributeChain",
    "MetaValueModel",
    "QuerySchedule",
    "Topology",
    "LinkBudget",
    "sample_topology",
    "success_probability",
    "success_probability_mc",
    "__version__",
]
