"""Exact closure engine for quasi-exactly solvable states."""

from .algebra import M, Poly, RatFunc, UPoly
from .combination import EllipticCombination, EllipticMonomial
from .kernel import (
    MIDBAND_UNIONS,
    SECTORS,
    BandEdge,
    MidBand,
    NotClosedError,
    OperatorImage,
    QesEigenproblem,
    Wavefunction,
    apply_operator,
    detect_closure,
    qes_energies,
    residual,
    search_closures,
    wavefunction,
)
from .sturm import ComplexRootsError, real_roots
