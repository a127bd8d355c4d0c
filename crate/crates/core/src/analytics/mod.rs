//! Measurements over latent and token streams: codebook utilization, quantization
//! distortion, packing efficiency, pairwise mutual information, and ablation sweeps.

pub mod distortion;
pub mod mi;
pub mod sweep;
pub mod utilization;

pub use distortion::{
    hexagonal_lattice_nsm, monte_carlo_mse, packing_efficiency, packing_efficiency_in, quantization_mse, MseReport,
    PackingReport, Region, SQUARE_LATTICE_NSM,
};
pub use mi::{discrete_mi, histogram_mi, mi_report, mutual_information, MiEstimate, MiMode, MiReport};
pub use sweep::{matched_rectangle, run_sweep, sweep_row, uniform_latents, SweepRow, SWEEP_CSV_HEADER};
pub use utilization::{measure_utilization, UtilizationAccumulator, UtilizationReport};
