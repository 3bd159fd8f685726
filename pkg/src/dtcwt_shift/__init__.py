"""Dual-tree complex wavelet transform for modulated wavelets and its shift-error analysis."""
from .signal_core import (
    GridMismatchError,
    GridSpec,
    SampledSignal,
    dilate_translate,
    fourier_transform,
    fractional_hilbert,
    hilbert_transform,
    inner_product,
    norm,
    translate,
)
from .wavelet_atoms import (
    WaveletPair,
    complex_wavelet,
    extract_modulation,
    make_gabor_pair,
    make_raised_cosine_pair,
    make_shannon_pair,
)
from .dtcwt import (
    CoeffGrid,
    amplitude_phase_synthesize,
    analyze,
    parseval_check,
    predict_dyadic_shift,
    synthesize,
)
from .checks import BoundCheck
from .shift_metrics import (
    ShiftErrorReport,
    decay_bound_check,
    epsilon_identity,
    sensitivity,
    shift_errors,
    window_carrier_split,
)

__version__ = "0.1.0"
