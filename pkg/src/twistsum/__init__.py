"""Explicit integer sets with prescribed sums of n^(-1-it), and zero scans of 1 + sum n^(-1-it)."""

from .construct import TargetSpec, clamp, clamp_radius, construct, lemma_block, step, verify
from .powersum import CertifiedSum, harmonic_mass, interval_sum, interval_sum_direct, interval_sum_em, phase, term
from .scanner import FiniteSet, ScanReport, g, lipschitz_bound, refine_min, scan
from .setrep import Block, BlockSet, append_block, load, save

__all__ = [
    "Block", "BlockSet", "CertifiedSum", "FiniteSet", "ScanReport", "TargetSpec",
    "append_block", "clamp", "clamp_radius", "construct", "g", "harmonic_mass",
    "interval_sum", "interval_sum_direct", "interval_sum_em", "lemma_block",
    "lipschitz_bound", "load", "phase", "refine_min", "save", "scan", "step", "term", "verify",
]
