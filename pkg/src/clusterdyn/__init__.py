"""Information-theoretic dynamics of clustered temporal networks.

Measures how a sequence of clusterings changes through the Variation of
Information, splits the change into a formation-driven and a
composition-driven part, attributes it to nodes and teams, and relates its
peaks to tagged events.
"""
from .core import (
    Clustering,
    ClusteringError,
    ConfusionMatrix,
    Formation,
    Node,
    Profile,
    Role,
    Team,
    canonical_key,
    confusion,
    formation_of,
    make_clustering,
)
from .formation import (
    count_spaces,
    min_formation_vi_exact,
    min_formation_vi_heuristic,
    vif_for_transition,
)
from .metric import breakdown, node_contribution, vi, vi_bounds, vi_ceiling, vi_rate

__version__ = "0.1.0"
