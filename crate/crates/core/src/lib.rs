//! Reachability under thermal operations on classical energy populations:
//! thermomajorisation curves, elementary two-level processes, reachable-set
//! extreme points, catalytic advantages, and energy-preserving unitary
//! decompositions.

pub mod catalysis;
pub mod cooling;
pub mod curve;
pub mod divergence;
pub mod error;
pub mod lp;
pub mod order;
pub mod reach;
pub mod state;
pub mod swaps;
pub mod unitary;

pub use catalysis::{
    ceto2_scan, composite_beta_order, decompose_mixture, optimal_qubit_catalyst_c1, tensor,
    trajectory_report, CetoHandle, CompositeContext, Decomposition, FreeEnergyTriple, ScanPoint,
    TrajectoryRecord,
};
pub use cooling::{
    cooling_scan, is_minimally_disturbing, CoolingConfig, CoolingDimResult, CoolingMode,
    CoolingReport,
};
pub use curve::{
    is_tightly_thermomajorised, thermo_curve, thermo_curve_for_order, thermomajorises,
    tight_state, ThermoCurve,
};
pub use divergence::{
    catalyst_marginal, free_energy_delta, mutual_information, renyi_divergence, shannon_entropy,
    system_marginal,
};
pub use error::{Result, ThermoError};
pub use lp::{LinearProgram, LpOutcome};
pub use order::{all_beta_orders, beta_order, BetaOrder, RATIO_TIE_TOL};
pub use reach::{
    eto_extreme_points_monotonic, eto_extremes_bruteforce, eto_vertex_cloud,
    gibbs_stochastic_feasible, hull_membership, hull_reduce_indices, membership,
    mto_extreme_candidates, plt_sequence, standard_formation, to_extreme_points, Membership,
    MixtureCertificate, Provenance, ReachClass, ReachableSet, DEFAULT_NODE_BUDGET,
};
pub use state::{
    barycentric, barycentric_inverse, gibbs_population, PopulationVector, ThermalContext,
};
pub use swaps::{
    is_gibbs_stochastic, is_neighbouring, order_after_neighbouring_swap, SwapSequence,
    TwoLevelProcess,
};
pub use unitary::{
    decompose, is_energy_preserving, reconstruct, ComplexUnitary, TwoLevelUnitary,
};
