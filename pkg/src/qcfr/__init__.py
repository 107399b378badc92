"""Quasi-cyclic flexible regenerating codes.

Submodules: ``gf`` (finite fields and matrices), ``qcfmsr`` (the [2k, k, k+1]
code), ``analysis`` (MDS checks and coefficient search), ``mbr`` (graph-based
minimum-bandwidth codes), ``tradeoff`` (storage/bandwidth curve), ``simulator``
(failure injection) and ``cli``.
"""

from .errors import QcfrError
from .gf import FieldCtx, count_ops, field_new
from .mbr import MbrCode, RegularGraph, build_mbr_code, build_regular_graph, solve_mbr_params
from .qcfmsr import CodeParams, NodeStore, encode, reconstruct, regenerate

__all__ = [
    "CodeParams",
    "FieldCtx",
    "MbrCode",
    "NodeStore",
    "QcfrError",
    "RegularGraph",
    "build_mbr_code",
    "build_regular_graph",
    "count_ops",
    "encode",
    "field_new",
    "reconstruct",
    "regenerate",
    "solve_mbr_params",
]

__version__ = "0.1.0"
