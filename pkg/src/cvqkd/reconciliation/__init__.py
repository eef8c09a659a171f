"""Multidimensional reverse reconciliation with LDPC syndrome decoding."""
from importlib import resources

from .ldpc import AlistError, DecodeResult, ParityCheckMatrix, ldpc_decode
from .multidim import (
    DIMENSIONS,
    apply_map,
    bits_to_u,
    conj,
    complex_to_real,
    left_matrix,
    md_demap,
    md_map,
    multiply,
)
from .reconcile import (
    AboveCapacityWarning,
    ReconciliationResult,
    beta_efficiency,
    capacity,
    linear_model,
    run_reconciliation,
)

SHIPPED_CODE = "ldpc_n1024_r050.alist"


def load_shipped_code() -> ParityCheckMatrix:
    """The bundled (3, 6)-regular rate-1/2 test code, n = 1024."""
    ref = resources.files("cvqkd.data").joinpath(SHIPPED_CODE)
    return ParityCheckMatrix.from_alist(ref.read_text())


__all__ = [
    "AboveCapacityWarning", "AlistError", "DIMENSIONS", "DecodeResult",
    "ParityCheckMatrix", "ReconciliationResult", "SHIPPED_CODE", "apply_map",
    "beta_efficiency", "bits_to_u", "capacity", "complex_to_real", "ldpc_decode",
    "left_matrix", "linear_model", "load_shipped_code", "md_demap", "md_map",
    "multiply", "run_reconciliation",
]
