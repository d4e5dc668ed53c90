//! Zero-temperature Casimir pressure, interaction energy and torque between
//! two uniaxial birefringent plates separated by an isotropic dispersive
//! medium, evaluated on the imaginary frequency axis.
//!
//! The calculation proceeds in layers:
//!
//! * [`materials`] — permittivity/permeability models ε(iξ), μ(iξ) and the
//!   problem statement ([`materials::Scenario`]);
//! * [`scattering`] — per-mode wavenumbers, polarization bases and the two
//!   3×3 reflection operators;
//! * [`kernel`] — the six λ scalar products, the invariants A and B, and the
//!   pressure/energy integrands;
//! * [`quadrature`] — adaptive evaluation of the triple integrals and the
//!   torque derivative;
//! * [`oracle`] — independent reference implementations (Fresnel, scalar
//!   Lifshitz, boundary-condition solve) used by the test suites.
//!
//! Sign convention: the interaction energy `E` is negative for binding
//! configurations and tends to zero from below as the separation grows; the
//! pressure is reported as `F = -dE/da`, so an attractive force is negative.
//! The torque is `Q = -dE/dθ`.

pub mod kernel;
pub mod materials;
pub mod oracle;
pub mod quadrature;
pub mod scattering;

/// Speed of light in vacuum (m/s, CODATA).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J·s, CODATA).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Complex 3-vector (components carry explicit factors of i).
pub type CVec3 = nalgebra::Vector3<C64>;

/// Complex 3×3 matrix.
pub type CMat3 = nalgebra::Matrix3<C64>;
