"""Refiner network: fusion of the three inpainting branches."""

from .layers import ConvLayer
from .network import (
    FuuWeights,
    RefinerOutput,
    RefinerResult,
    RefinerWeights,
    WeightPlanError,
    backward,
    forward,
    frames_to_batch,
    fuu_update,
    refiner_backward,
    refiner_forward,
)
from .serialize import (
    BadMagicError,
    TruncatedFileError,
    VersionMismatchError,
    WeightsFormatError,
    load_weights,
    save_weights,
)
