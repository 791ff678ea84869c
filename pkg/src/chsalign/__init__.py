"""Pairwise alignment of RNA secondary structures with coaxial helical stacking."""

__version__ = "0.1.0"

from .structure_io import (  # noqa: E402
    SecondaryStructure,
    emit_bpseq,
    emit_dotbracket,
    parse_bpseq,
    parse_dotbracket,
    read_structure,
    remove_pseudoknots,
    validate_for_alignment,
)
from .tree_model import (  # noqa: E402
    ChsStatus,
    StructureForest,
    annotate,
    build_forest,
    decompose,
    forest_from_structure,
    parse_annotations,
    predict_chs_baseline,
)
from .scoring import ScoringScheme, load_scheme  # noqa: E402
from .tree_align import AlignParams, AlignmentResult, align  # noqa: E402

__all__ = [
    "SecondaryStructure", "parse_bpseq", "parse_dotbracket", "emit_bpseq", "emit_dotbracket",
    "read_structure", "remove_pseudoknots", "validate_for_alignment",
    "ChsStatus", "StructureForest", "decompose", "build_forest", "forest_from_structure",
    "annotate", "parse_annotations", "predict_chs_baseline",
    "ScoringScheme", "load_scheme", "AlignParams", "AlignmentResult", "align",
]
