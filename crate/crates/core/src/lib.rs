//! Lyapunov exponents of analytic quasi-periodic 2x2 cocycles, with the
//! extended Harper model as the main worked case.
//!
//! The crate is organised bottom-up:
//!
//! * [`trig`], [`mat2`] and [`roots`]: trigonometric polynomials, 2x2 complex
//!   matrices, and zeros of trigonometric polynomials on the cylinder.
//! * [`cocycle`] and [`profile`]: transfer products, Lyapunov exponent
//!   estimators and sweeps in the complexification parameter.
//! * [`jensen`]: strip averages `I_eps(c)` by quadrature and from root data.
//! * [`harper`]: couplings, regions and closed forms for the extended Harper model.
//! * [`spectrum`]: finite-section and Floquet approximations of the spectrum.
//!
//! All exponents are in natural-log units.

pub mod cocycle;
pub mod error;
pub mod frequency;
pub mod harper;
pub mod jensen;
pub mod mat2;
pub mod profile;
pub mod quad;
pub mod roots;
pub mod spectrum;
pub mod trig;

pub use cocycle::{le_iterative, le_rational, solution_growth, transfer_product, Cocycle, LeEstimate};
pub use error::{Error, Result};
pub use frequency::Frequency;
pub use harper::{Coupling, Criticality, HarperVerdict, Region, RegionTag, Which};
pub use jensen::{i_eps_exact, i_eps_quadrature, JensenProfile};
pub use mat2::Mat2C;
pub use profile::{acceleration_at, epsilon_sweep, Acceleration, Backend, LEProfile};
pub use roots::{roots_on_cylinder, CylinderRoot, RootList};
pub use spectrum::{hausdorff, spectrum_floquet, spectrum_truncation, SpectrumApprox};
pub use trig::TrigPoly;
