"""Parametric NACA wing finite-element pipeline: spec, geometry, mesh, solve and analytics."""

__version__ = "0.1.0"

from .errors import WingFeaError  # noqa: E402
from .knowledge import AL7075_T6, KnowledgeBase, MaterialRecord  # noqa: E402
from .spec import AnalysisSpec, expand_parameter_space, parse_range_phrase, parse_spec, validate_spec  # noqa: E402

__all__ = [
    "AL7075_T6",
    "AnalysisSpec",
    "KnowledgeBase",
    "MaterialRecord",
    "WingFeaError",
    "__version__",
    "expand_parameter_space",
    "parse_range_phrase",
    "parse_spec",
    "validate_spec",
]
