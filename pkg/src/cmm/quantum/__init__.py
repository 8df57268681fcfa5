"""Quantum backends: von Neumann observables and quantum instruments."""

from .instruments import (
    Instrument,
    InstrumentResult,
    JointPovm,
    Povm,
    atomic,
    choi_matrix,
    cp_check,
    general,
    instrument_apply,
    jpd_product,
    jpd_sequential,
    luders_instrument,
    measure_and_prepare,
    povm_compat_verify,
    povm_from_instrument,
    product_table,
    transpose_superop,
)
from .model import QuantumModel, quantum_interference, vn_model
from .search import CHSHResult, OERRESearch, chsh_maximize, search_oe_rre, singlet_witness
from .states import (
    DensityMatrix,
    HermitianObservable,
    born_prob,
    function_of_observable,
    luders_update,
    pushforward_check,
    random_density,
    random_pure_state,
    random_unitary,
)

__all__ = [name for name in dir() if not name.startswith("_")]
