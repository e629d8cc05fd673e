//! Constructions on higher-dimensional spheres: non-distal instances, the
//! coefficient ledger of normalized systems, power/conjugate searches and
//! non-expansive pairs.

mod instance;
mod ledger;
mod nonexpansive;
mod search;

pub use instance::{
    construct_nondistal_instance, convergence_steps, proximal_instance, InstanceCase, NondistalInstance,
    MAX_CONVERGENCE_STEPS,
};
pub use ledger::{sm_ledger, SmLedger, TOL_NORMALIZED};
pub use nonexpansive::{
    nonexpansive_witness, nonexpansive_witness_anywhere, nonexpansive_witness_on_plane, nonexpansive_witness_seeded,
    plane_through_offset, MAX_HALVINGS, PLANE_TOL,
};
pub use search::{conjugate_or_power_search, conjugate_search, SearchKind, SearchResult};
