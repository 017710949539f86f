"""Shannon, rate-distortion, Information Bottleneck and semantic information tools."""
from .bottleneck import IbResult, ib_lagrangian, ib_solve, ib_terms
from .ratedistortion import (
    RdPoint,
    blahut_arimoto,
    gaussian_rd,
    indirect_rd_scalar,
    rate_utility,
    rd_at_distortion,
    reverse_water_filling,
)
from .semantic import TruthTable, semantic_distortion, semantic_mi
from .shannon import (
    as_distribution,
    binary_entropy,
    conditional_entropy,
    conditional_mi,
    entropy,
    kl_divergence,
    mutual_information,
)

__all__ = [
    "IbResult", "ib_lagrangian", "ib_solve", "ib_terms",
    "RdPoint", "blahut_arimoto", "gaussian_rd", "indirect_rd_scalar", "rate_utility",
    "rd_at_distortion", "reverse_water_filling",
    "TruthTable", "semantic_distortion", "semantic_mi",
    "as_distribution", "binary_entropy", "conditional_entropy", "conditional_mi", "entropy",
    "kl_divergence", "mutual_information",
]
