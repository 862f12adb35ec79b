"""Lossless octree point-cloud geometry codec with learned entropy models."""

from ._pcgc import (
    CodecModels,
    DataError,
    QuantizedCloud,
    VerificationError,
    decode,
    demo_ce_paradox,
    dequantize,
    encode,
    encode_with_stats,
    gaussian_center,
    gaussian_map,
    generate_cloud,
    number_vector,
    quantize,
    read_ply,
    read_quantized,
    train_acnp,
    train_model,
    write_quantized,
)

__all__ = [
    "CodecModels",
    "DataError",
    "QuantizedCloud",
    "VerificationError",
    "decode",
    "demo_ce_paradox",
    "dequantize",
    "encode",
    "encode_with_stats",
    "gaussian_center",
    "gaussian_map",
    "generate_cloud",
    "number_vector",
    "quantize",
    "read_ply",
    "read_quantized",
    "train_acnp",
    "train_model",
    "write_quantized",
]
