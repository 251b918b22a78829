//! Deterministic water-heater simulator with a MAPE-K managing system,
//! dynamic safety cases and an executable Type 0-III adaptation taxonomy.
//!
//! The numeric kernels ([`plant`], [`controller`], operational domains and
//! admission statistics) are generic over [`Scalar`]; the aliases below fix
//! them to `f32` or `f64`.

pub mod assurance;
pub mod controller;
pub mod harness;
pub mod mapek;
pub mod model;
pub mod plant;
pub mod scalar;
pub mod spi;
pub mod taxonomy;

pub use scalar::Scalar;

pub type PlantParams64 = plant::PlantParams<f64>;
pub type PlantParams32 = plant::PlantParams<f32>;
pub type PlantState64 = plant::PlantState<f64>;
pub type PlantState32 = plant::PlantState<f32>;
pub type GuardState64 = plant::GuardState<f64>;
pub type GuardState32 = plant::GuardState<f32>;
pub type PidConfig64 = controller::PidConfig<f64>;
pub type PidConfig32 = controller::PidConfig<f32>;
pub type PidState64 = controller::PidState<f64>;
pub type PidState32 = controller::PidState<f32>;
pub type NetSpec64 = controller::NetControllerSpec<f64>;
pub type NetSpec32 = controller::NetControllerSpec<f32>;
pub type Domain64 = model::OperationalDomain<f64>;
pub type Domain32 = model::OperationalDomain<f32>;
pub type Sample64 = model::EnvironmentSample<f64>;
pub type Sample32 = model::EnvironmentSample<f32>;
