"""Profile files and the synthetic profile generator."""

from .fileformat import (
    DuplicateSample,
    ParseError,
    ProfileFormatError,
    SchemaVersionUnsupported,
    UnresolvedRegion,
    load_profile,
    load_xml_profile,
    save_profile,
)
from .generator import (
    CompositeImbalance,
    GroundTruth,
    HeavyRegion,
    ImbalancedRegion,
    InvalidSpec,
    PlantSpec,
    RegionProfile,
    Shape,
    generate,
)

__all__ = [
    "CompositeImbalance", "DuplicateSample", "GroundTruth", "HeavyRegion", "ImbalancedRegion",
    "InvalidSpec", "ParseError", "PlantSpec", "ProfileFormatError", "RegionProfile",
    "SchemaVersionUnsupported", "Shape", "UnresolvedRegion", "generate", "load_profile",
    "load_xml_profile", "save_profile",
]
