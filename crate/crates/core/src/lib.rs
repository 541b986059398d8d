//! Numerical bifurcation toolkit for the center `ẋ = y, ẏ = -x` under
//! piecewise polynomial perturbations switched across `y = x²` and/or
//! `y = -x²`.
//!
//! The first-order Melnikov function is computed two ways (direct arc
//! quadrature and an exact reduced form), its positive zeros are counted and
//! compared with the known upper bounds, maximal configurations for degree one
//! are realized, and limit cycles are cross-checked by simulating the
//! piecewise flow.

pub mod basis;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod melnikov;
pub mod ode;
pub mod perturbation;
pub mod poly;
pub mod quadrature;
pub mod simulator;
pub mod specfile;
pub mod zeros;

pub use basis::{base_integrals, moment, reduce_moment, BaseIntegral, BaseValues, Family, MomentId, ReducedMoment};
pub use error::{Error, Result};
pub use geometry::{
    corner_points, h_of_u, u_of_h, zone_of, CornerPoints, Curve, EnergyLevel, Mode, Point, UCoord, ZoneClass,
    ZoneId,
};
pub use melnikov::{
    canonical_form, eval_w, melnikov_canonical, melnikov_direct, phi_factors, u_form, CanonicalForm, UForm,
};
pub use perturbation::{PerturbationSpec, Table};
pub use quadrature::{arc_moment, integrate_1d, Arc, ArcLabel, Form};
pub use simulator::{cross_validate, find_limit_cycles, return_map, ReturnMapSample, SimConfig};
pub use specfile::SpecFile;
pub use zeros::{count_zeros, lambda_coeffs, realize_max_zeros, theoretical_bound, ZeroReport};
