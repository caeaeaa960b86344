"""Python access to the localhealth C++ core."""

from ._core import (
    FLAG_CELL_MEAN,
    FLAG_TOKEN_MEAN_POOLED,
    Error,
    ValidationError,
    accuracy,
    build_prompt,
    collection_radius,
    conv_output_len,
    derive_seq_len,
    hash_encode,
    macro_f1,
    param_count,
    parse_response,
    pearson,
    read_lteb,
    read_manifest,
    template_sha256,
    validate_lteb,
    write_lteb,
)

__all__ = [
    "FLAG_CELL_MEAN",
    "FLAG_TOKEN_MEAN_POOLED",
    "Error",
    "ValidationError",
    "accuracy",
    "build_prompt",
    "collection_radius",
    "conv_output_len",
    "derive_seq_len",
    "hash_encode",
    "macro_f1",
    "param_count",
    "parse_response",
    "pearson",
    "read_lteb",
    "read_manifest",
    "template_sha256",
    "validate_lteb",
    "write_lteb",
]
