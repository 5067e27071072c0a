"""Topological protection on the RHG lattice: error chains, samplers, MWPM and the gauge model."""

from .chains import ErrorChain, Syndrome, extract_syndrome, read_chain, read_syndrome, write_chain, write_syndrome
from .crpgm import (
    FreeEnergyResult,
    GaugeChain,
    GaugeConfig,
    QuenchedDisorder,
    crpgm_energy,
    crpgm_internal_energy,
    free_energy_decode,
    homology_classes,
    logical_representative,
)
from .decoding import OddSyndromeError, decode_verdict, logical_failure, match_defects, matching_weight, mwpm_decode
from .noise import IchErrorSampler, ScReducedErrorSampler, sample_fch_errors, sample_ich_errors, sample_sc_reduced_errors
