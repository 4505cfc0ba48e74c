"""K-TanH: integer-only TanH approximation for BFloat16."""

from .kernel import (
    KTanhActivation,
    ParamTable,
    TableValidationError,
    canonical_table,
    index_of,
    kgelu_eval,
    ksigmoid_eval,
    kswish_eval,
    ktanh_array,
    ktanh_eval,
)
from .numerics import decode, encode

__version__ = "0.1.0"
