"""Band structure of associated Lame potentials.

    V(x) = a(a+1) m sn^2(x|m) + b(b+1) m cd^2(x|m)

Closed-form band edges and mid-band states come from an exact closure
engine (``lamebands.qes``); all edges come from a Floquet discriminant
solver (``lamebands.floquet``); ``lamebands.catalog`` ties the two
together.
"""

from .elliptic import JacobiTriple, complete_K, jacobi, sqrt_dn_plus_cn
from .floquet import (
    BandChart,
    BandEdge,
    BandStructure,
    analyze,
    count_nodes,
    discriminant,
    find_band_edges,
    find_midband,
    monodromy,
    scan_m,
)
from .integrate import IntegratorError
from .model import CaseTag, GapBounds, PotentialParams, classify, gap_bounds, ince_reduce, potential_value

__version__ = "0.1.0"

__all__ = [
    "JacobiTriple",
    "complete_K",
    "jacobi",
    "sqrt_dn_plus_cn",
    "BandChart",
    "BandEdge",
    "BandStructure",
    "analyze",
    "count_nodes",
    "discriminant",
    "find_band_edges",
    "find_midband",
    "monodromy",
    "scan_m",
    "IntegratorError",
    "CaseTag",
    "GapBounds",
    "PotentialParams",
    "classify",
    "gap_bounds",
    "ince_reduce",
    "potential_value",
]
