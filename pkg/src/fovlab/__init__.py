"""fovlab: a pinhole-camera laboratory for the shape ambiguity that image
crops suffer under perspective distortion, and the field-of-view positional
encodings that resolve it."""

from .geometry import CropRegion, PinholeCamera, Sphere
from .encoding import DenseEncoding, FieldAngles, SparseEncoding
from .ambiguity import (
    AmbiguityRecord,
    MinerConfig,
    MinerResult,
    Parallelepiped,
    Placement,
)
from .datagen import Dataset, Sample, SampleRanges
from .mlp import LossCurve, MlpParams, TrainConfig

__all__ = [
    "AmbiguityRecord",
    "CropRegion",
    "Dataset",
    "DenseEncoding",
    "FieldAngles",
    "LossCurve",
    "MinerConfig",
    "MinerResult",
    "MlpParams",
    "Parallelepiped",
    "PinholeCamera",
    "Placement",
    "Sample",
    "SampleRanges",
    "SparseEncoding",
    "Sphere",
    "TrainConfig",
]
