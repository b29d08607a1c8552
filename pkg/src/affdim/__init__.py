"""Computable dimension theory for random affine code-tree fractals.

Singular value functions, neck code trees, partition-sum pressure and its
zero, optimal antichain cover measures, the cover/slab tree decomposition,
and attractor box-counting, plus a CLI tying them together.
"""

__version__ = "0.1.0"

from .attractor import (
    BoxCountResult,
    ExperimentReport,
    PointCloud,
    TranslationScheme,
    box_dimension,
    dimension_experiment,
    finest_classes,
    generate_points,
    sample_translations,
)
from .codetree import (
    BlockMeasure,
    BlockTemplate,
    IfsFamily,
    NeckCodeTree,
    ValidationReport,
    neck_word_count,
    sample_tree,
    shift,
    uniform_block,
    validate_family,
    words_at,
)
from .config import ExperimentConfig, parse_config
from .decomposer import (
    DecompositionTree,
    DecompositionUnit,
    StarReport,
    decompose,
    membership,
    q_l,
    verify_star,
)
from .errors import (
    AffdimError,
    ConfigError,
    DepthError,
    DomainError,
    EmptyShiftError,
    FeasibilityError,
    InvalidMatrixError,
    ResolutionError,
    SchemeError,
    ShapeError,
)
from .netmeasure import (
    CoverSolution,
    DimensionEstimate,
    SandwichReport,
    affinity_dim,
    best_cover,
    f_n,
    sandwich_check,
    witness_cover,
)
from .pressure import (
    PressureEstimate,
    ZeroBracket,
    partition_sum,
    partition_sum_mc,
    pressure_curve,
    pressure_zero,
)
from .svf import (
    TOL,
    AffineMap,
    Tolerances,
    compose,
    log_phi,
    log_sum_exp,
    phi,
    phi_bounds,
    singular_values,
)
