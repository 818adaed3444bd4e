"""Signal-droop SNR models for amplified fiber links, with a split-step reference simulator."""

from .droop import (
    E_DB, UNBOUNDED, DomainError, PhysicalNoiseSpec, RedistributionSpec, HomogeneousChain,
    ase_beta, addition_droop, redistribution_droop, power_evolution, gdf_osnr,
    gdf_snr_explicit, gn_snr, gdf_bounds, optimal_powers, spectral_efficiency, se_gap,
)
from .chain import (
    MultiplexSpec, SpanStage, cg_gdf_snr, closed_form_ledger, cop_gdf_snr,
    fill_in_efficiency, propagate_ledger, tributary_snr, tu_tl_snr,
)

__version__ = "0.1.0"
