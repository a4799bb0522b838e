//! Numerical laboratory for partition functions of determinantal point
//! processes on CP^n, Bergman kernel expansions, and the energy functionals
//! that govern their large-k asymptotics, restricted to U(n)-invariant
//! (radial) Kahler metrics and to general metrics on CP^1.

pub mod error;
pub mod balanced;
pub mod bergman;
pub mod forms;
pub mod functionals;
pub mod futaki;
pub mod jet;
pub mod metric;
pub mod potential;
pub mod quadrature;
pub mod sphere;

pub use error::{Error, Result};
pub use metric::{build_metric, RadialKahlerMetric, ScalarField};
pub use potential::{Profile, RadialPotential};
pub use quadrature::{radial_rule, RadialQuadrature};
