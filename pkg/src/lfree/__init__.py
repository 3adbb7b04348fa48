"""L-free sets, Leinert sets and optimal paving: exact word computations and matrix models."""

__version__ = "0.1.0"

from .words import GroupPresentation, LeinertVerdict, ReducedWord, WordError, leinert_bounded, parse_word
from .folding import leinert_exact
from .moments import Convolver, MomentRecord, kesten_laplacian, moment, norm_lower_bound
from .rmt import RngSpec, lfree_defect, op_norm, sample_haar_unitary

__all__ = [
    "Convolver", "GroupPresentation", "LeinertVerdict", "MomentRecord", "ReducedWord", "RngSpec",
    "WordError", "kesten_laplacian", "leinert_bounded", "leinert_exact", "lfree_defect", "moment",
    "norm_lower_bound", "op_norm", "parse_word", "sample_haar_unitary",
]
