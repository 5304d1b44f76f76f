"""spoch: parallel contraction hierarchies.

Build a hierarchy with :func:`build`, answer distance queries with
:meth:`ContractionHierarchy.query`.
"""

from .builder import BuildConfig, BuildResult, build, build_sequential
from .cmap import CapacityError, PhaseConcurrentMap
from .graph import (GraphError, ParseError, WeightedDigraph, dijkstra_oracle, gen_chain, gen_knn,
                    gen_grid, gen_random, load_dimacs, load_graph, save_graph)
from .overlay import ContractViolation, OverlayGraph
from .query import ContractionHierarchy, FormatError, batch_query, deserialize, serialize

__version__ = "0.1.0"

__all__ = [
    "BuildConfig", "BuildResult", "build", "build_sequential",
    "CapacityError", "PhaseConcurrentMap",
    "GraphError", "ParseError", "WeightedDigraph", "dijkstra_oracle",
    "gen_chain", "gen_grid", "gen_knn", "gen_random", "load_dimacs", "load_graph", "save_graph",
    "ContractViolation", "OverlayGraph",
    "ContractionHierarchy", "FormatError", "batch_query", "deserialize", "serialize",
]
