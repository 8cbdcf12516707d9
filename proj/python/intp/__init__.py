"""Training-free frame and context extension utilities for video LLMs."""

from ._core import (
    IntpError,
    analyze,
    calibrate,
    decode,
    dequantize,
    frequencies,
    interleave,
    interpolate_position,
    ntk_base,
    plan_subsequences,
    quantize,
    rotate,
    sample_frame_indices,
    split,
)

__all__ = [
    "IntpError",
    "analyze",
    "calibrate",
    "decode",
    "dequantize",
    "frequencies",
    "interleave",
    "interpolate_position",
    "ntk_base",
    "plan_subsequences",
    "quantize",
    "rotate",
    "sample_frame_indices",
    "split",
]
