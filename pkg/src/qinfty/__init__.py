"""Infinite-alphabet generalized-Luroth numeration with certified coverings.

The package splits into six layers: weight sequences (`qvector`), the
digit codec and cylinder geometry (`expansion`), block coverings with
certified alpha-volume bounds (`covering`), the faithfulness inequality
checker (`faithfulness`), the non-faithful Cantor construction (`cantor`),
and a command-line front end (`cli`).
"""

from .qvector import QVectorSpec
from .expansion import CylinderAddress, Cylinder, QRational, UNIT_END, encode, decode
from .covering import (
    Block,
    CoverCertificate,
    CoverParams,
    MODE_CERTIFIED_RESIDUAL,
    MODE_LAZY_STREAM,
    cover_interval,
    kappa,
    lemma1_partition,
)
from .faithfulness import (
    ConditionQuery,
    ConditionVerdict,
    check_condition,
    scan_condition_region,
)
from .cantor import (
    CantorAddress,
    CantorLevel,
    CantorSpec,
    assemble_cantor,
    build_cantor,
    dimension_gap,
    estimate_critical_exponent,
    level_volume,
    local_dim_ratio,
    measure_cylinder,
)
from .errors import QinftyError

__all__ = [
    "QVectorSpec",
    "CylinderAddress",
    "Cylinder",
    "QRational",
    "UNIT_END",
    "encode",
    "decode",
    "Block",
    "CoverCertificate",
    "CoverParams",
    "MODE_CERTIFIED_RESIDUAL",
    "MODE_LAZY_STREAM",
    "cover_interval",
    "kappa",
    "lemma1_partition",
    "ConditionQuery",
    "ConditionVerdict",
    "check_condition",
    "scan_condition_region",
    "CantorAddress",
    "CantorLevel",
    "CantorSpec",
    "assemble_cantor",
    "build_cantor",
    "dimension_gap",
    "estimate_critical_exponent",
    "level_volume",
    "local_dim_ratio",
    "measure_cylinder",
    "QinftyError",
]

__version__ = "0.1.0"
