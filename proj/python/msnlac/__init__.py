"""Multiscale non-local active contours for speckled images."""

from ._core import (
    DimensionMismatch,
    Error,
    InputError,
    NumericalError,
    classic_segment,
    divergence,
    estimate,
    load_image,
    load_mask,
    make_shapes,
    patch_moments,
    random_init,
    rfe,
    save_mask,
    segment,
    simulate,
)

__all__ = [
    "DimensionMismatch",
    "Error",
    "InputError",
    "NumericalError",
    "classic_segment",
    "divergence",
    "estimate",
    "load_image",
    "load_mask",
    "make_shapes",
    "patch_moments",
    "random_init",
    "rfe",
    "save_mask",
    "segment",
    "simulate",
]
