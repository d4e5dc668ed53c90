//! Evaluation of the pressure, energy and torque triple integrals.
//!
//! The integrals over (κ, u, v) are taken in polar transverse coordinates
//! (u, v) = (r cos φ, r sin φ) with a fixed-order Gauss-Legendre rule in φ
//! and nested adaptive Gauss-Kronrod rules in r and κ, both mapped to the
//! unit interval. Internally everything is dimensionless — lengths in units
//! of the separation `a`, wavenumbers in 1/a — and converted to SI at the
//! boundary, which also makes the a⁻⁴/a⁻³ scaling laws exact for
//! dispersionless materials.
//!
//! The angular rule is offset so no node ever lands on u = 0, v = 0,
//! u′ = 0 or v′ = 0, where individual plate scalars diverge.
//!
//! The torque is computed by differentiating the energy integrand in θ
//! (Richardson-extrapolated central differences on shared quadrature
//! nodes), never by differencing two independently adapted integrals.

mod engine;
mod gauss;

pub(crate) use engine::{integrate_unit, AdaptOptions, Estimate, NodeValue};

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::kernel::{
    energy_integrand, kernel_values, kernel_values_checked, pressure_integrand, KernelValues,
};
use crate::materials::{MaterialsAt, Scenario};
use crate::scattering::{
    plate1_response, plate2_response, polarization_basis, PlateResponse, PolarizationBasis,
    TransverseMode,
};
use crate::{HBAR, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
}

/// Change of variable from the unit interval onto [0, ∞), in units of the
/// inverse plate separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMap {
    /// x = t/(1−t).
    Rational,
    /// x = −ln(1−t).
    ExpTail,
}

impl DomainMap {
    /// Returns (x(t), dx/dt).
    pub(crate) fn apply(&self, t: f64) -> (f64, f64) {
        let rest = 1.0 - t;
        match self {
            DomainMap::Rational => (t / rest, 1.0 / (rest * rest)),
            DomainMap::ExpTail => (-rest.ln(), 1.0 / rest),
        }
    }
}

/// Tolerances and discretization choices for the triple integrals. All
/// summation uses a deterministic pairwise tree, so results are independent
/// of thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Requested relative tolerance on each integral.
    pub rel_tol: f64,
    /// Absolute floor, in units of the natural scale ħc/a⁴ (pressure) or
    /// ħc/a³ (energy, torque); stops refinement of vanishing integrals.
    pub abs_floor: f64,
    /// Maximum bisection depth per panel in the adaptive directions.
    pub max_refinement_depth: u32,
    /// Order of the fixed Gauss-Legendre angular rule (even).
    pub angular_order: usize,
    /// Base rotation of the angular rule, keeping nodes off the axes.
    pub angular_offset: f64,
    /// Map for the radial transverse direction.
    pub radial_map: DomainMap,
    /// Map for the imaginary-frequency direction.
    pub kappa_map: DomainMap,
    /// Central-difference step (radians) for the torque integrand.
    pub torque_step: f64,
    /// Verify A, B against the matrix invariants of R₁R₂ every n-th kernel
    /// evaluation (0 disables the check).
    pub check_interval: u64,
}

/// Default angular offset for a given order: π/(4·order).
pub fn default_angular_offset(angular_order: usize) -> f64 {
    std::f64::consts::PI / (4.0 * angular_order as f64)
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_floor: 1e-30,
            max_refinement_depth: 30,
            angular_order: 32,
            angular_offset: default_angular_offset(32),
            radial_map: DomainMap::Rational,
            kappa_map: DomainMap::Rational,
            torque_step: 1e-3,
            check_interval: 997,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        let bad = |m: &str| Err(QuadratureError::InvalidSpec(m.to_string()));
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0 && self.rel_tol < 0.1) {
            return bad("rel_tol must lie in (0, 0.1)");
        }
        if !(self.abs_floor.is_finite() && self.abs_floor >= 0.0) {
            return bad("abs_floor must be non-negative");
        }
        if self.max_refinement_depth > 60 {
            return bad("max_refinement_depth must be at most 60");
        }
        if self.angular_order < 2 || self.angular_order % 2 != 0 || self.angular_order > 4096 {
            return bad("angular_order must be an even integer in [2, 4096]");
        }
        if !(self.angular_offset.is_finite() && self.angular_offset > 0.0) {
            return bad("angular_offset must be positive");
        }
        if !(self.torque_step.is_finite() && self.torque_step > 0.0 && self.torque_step < 0.1) {
            return bad("torque_step must lie in (0, 0.1) radians");
        }
        Ok(())
    }
}

/// Minimum angular distance kept between any node and the axes of either
/// plate frame; reflection scalars are oracle-verified down to this scale.
const MIN_AXIS_DISTANCE: f64 = 1e-8;

struct AngularRule {
    phi: Vec<f64>,
    weight: Vec<f64>,
}

impl AngularRule {
    /// Gauss-Legendre nodes on [δ, 2π + δ], with δ nudged deterministically
    /// until every node clears u = 0, v = 0 and the primed axes for every
    /// orientation in `thetas`.
    fn build(order: usize, base_offset: f64, thetas: &[f64]) -> Self {
        let (x, w) = gauss::gauss_legendre(order);
        let pi = std::f64::consts::PI;
        for attempt in 0..4096 {
            let offset = base_offset + attempt as f64 * (base_offset / 997.0);
            let phi: Vec<f64> = x.iter().map(|&xi| pi * (xi + 1.0) + offset).collect();
            let clear = phi.iter().all(|&p| {
                quarter_distance(p) > MIN_AXIS_DISTANCE
                    && thetas
                        .iter()
                        .all(|&t| quarter_distance(p + t) > MIN_AXIS_DISTANCE)
            });
            if clear {
                let weight: Vec<f64> = w.iter().map(|&wi| pi * wi).collect();
                return Self { phi, weight };
            }
        }
        panic!("could not place angular nodes clear of the coordinate axes");
    }
}

/// Distance of x to the nearest multiple of π/2.
fn quarter_distance(x: f64) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2;
    let m = x.rem_euclid(quarter);
    m.min(quarter - m)
}

/// One converged (or flagged) integral in SI units.
#[derive(Debug, Clone, Copy)]
pub struct Integrated {
    pub value: f64,
    pub error: f64,
    pub nodes: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Pressure,
    Energy,
    TorqueDerivative,
}

struct TripleContext<'a> {
    scenario: &'a Scenario,
    spec: &'a QuadratureSpec,
    angular: AngularRule,
    kind: Kind,
    check_counter: AtomicU64,
}

impl TripleContext<'_> {
    fn kernel_for(
        &self,
        r1: &PlateResponse,
        r2: &PlateResponse,
        basis: &PolarizationBasis,
        location: (f64, f64, f64),
    ) -> KernelValues {
        let n = self.check_counter.fetch_add(1, Ordering::Relaxed) + 1;
        let check = self.spec.check_interval > 0 && n % self.spec.check_interval == 0;
        let result = if check {
            kernel_values_checked(r1, r2, basis)
        } else {
            kernel_values(r1, r2, basis)
        };
        result.unwrap_or_else(|e| {
            panic!(
                "kernel inconsistency at (kappa, u, v) = {:?} (in units of 1/a): {e}",
                location
            )
        })
    }

    fn mode_value(&self, mats: &MaterialsAt, kappa: f64, u: f64, v: f64) -> NodeValue {
        let theta = self.scenario.angle();
        let base = TransverseMode::with_materials(mats, theta, kappa, u, v)
            .expect("quadrature nodes avoid singular modes");
        debug_assert!(
            u != 0.0 && v != 0.0 && base.u_rot != 0.0 && base.v_rot != 0.0,
            "axis-avoidance violated at phi node"
        );
        let basis = polarization_basis(&base).expect("node off the axes");
        let r2 = plate2_response(&base).expect("node off the axes");
        match self.kind {
            Kind::Pressure | Kind::Energy => {
                let r1 = plate1_response(&base, theta).expect("node off the axes");
                let kv = self.kernel_for(&r1, &r2, &basis, (kappa, u, v));
                let value = match self.kind {
                    Kind::Pressure => pressure_integrand(&kv, base.w, 1.0),
                    _ => energy_integrand(&kv, base.w, 1.0),
                };
                NodeValue {
                    value,
                    aux: 0.0,
                    cost: 1,
                    ok: true,
                }
            }
            Kind::TorqueDerivative => {
                let h = self.spec.torque_step;
                let energy_at = |angle: f64| -> f64 {
                    let mode = TransverseMode::with_materials(mats, angle, kappa, u, v)
                        .expect("quadrature nodes avoid singular modes");
                    let r1 = plate1_response(&mode, angle).expect("node off the rotated axes");
                    let kv = self.kernel_for(&r1, &r2, &basis, (kappa, u, v));
                    energy_integrand(&kv, mode.w, 1.0)
                };
                let d_full = (energy_at(theta + h) - energy_at(theta - h)) / (2.0 * h);
                let d_half = (energy_at(theta + 0.5 * h) - energy_at(theta - 0.5 * h)) / h;
                NodeValue {
                    value: (4.0 * d_half - d_full) / 3.0,
                    aux: (d_half - d_full).abs() / 3.0,
                    cost: 4,
                    ok: true,
                }
            }
        }
    }

    fn radial_node(&self, mats: &MaterialsAt, kappa: f64, t_r: f64) -> NodeValue {
        let (r, jac) = self.spec.radial_map.apply(t_r);
        let mut value = 0.0;
        let mut aux = 0.0;
        let mut cost = 0;
        let mut ok = true;
        for (phi, weight) in self.angular.phi.iter().zip(&self.angular.weight) {
            let (sin_p, cos_p) = phi.sin_cos();
            let node = self.mode_value(mats, kappa, r * cos_p, r * sin_p);
            value += weight * node.value;
            aux += weight * node.aux;
            cost += node.cost;
            ok &= node.ok;
        }
        NodeValue {
            value: jac * r * value,
            aux: jac * r * aux,
            cost,
            ok,
        }
    }

    fn outer_node(&self, t_kappa: f64) -> NodeValue {
        let (kappa, jac) = self.spec.kappa_map.apply(t_kappa);
        let xi = SPEED_OF_LIGHT * kappa / self.scenario.separation();
        let mats = self.scenario.materials_at(xi);
        let inner = |t_r: f64| self.radial_node(&mats, kappa, t_r);
        let estimate = integrate_unit(
            &inner,
            &AdaptOptions {
                rel_tol: 0.25 * self.spec.rel_tol,
                abs_floor: 0.25 * self.spec.abs_floor,
                max_depth: self.spec.max_refinement_depth,
                initial_panels: 6,
                max_panels: 1024,
                parallel: false,
            },
        );
        NodeValue {
            value: jac * estimate.value,
            aux: jac * estimate.total_err(),
            cost: estimate.nodes,
            ok: estimate.converged,
        }
    }
}

/// Dimensionless triple integral of the requested integrand.
fn triple_estimate(scenario: &Scenario, spec: &QuadratureSpec, kind: Kind) -> Estimate {
    spec.validate().expect("quadrature settings validated");
    let theta = scenario.angle();
    let h = spec.torque_step;
    let thetas: Vec<f64> = match kind {
        Kind::TorqueDerivative => vec![
            theta,
            theta + h,
            theta - h,
            theta + 0.5 * h,
            theta - 0.5 * h,
        ],
        _ => vec![theta],
    };
    let context = TripleContext {
        scenario,
        spec,
        angular: AngularRule::build(spec.angular_order, spec.angular_offset, &thetas),
        kind,
        check_counter: AtomicU64::new(0),
    };
    integrate_unit(
        &|t| context.outer_node(t),
        &AdaptOptions {
            rel_tol: 0.5 * spec.rel_tol,
            abs_floor: spec.abs_floor,
            max_depth: spec.max_refinement_depth,
            initial_panels: 8,
            max_panels: 4096,
            parallel: true,
        },
    )
}

fn prefactor(separation: f64, length_power: i32) -> f64 {
    HBAR * SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI.powi(3) * separation.powi(length_power))
}

/// Perpendicular Casimir force per unit area (Pa). Negative = attractive,
/// per F = −∂E/∂a with E the (negative) binding energy.
pub fn integrate_pressure(scenario: &Scenario, spec: &QuadratureSpec) -> Integrated {
    let estimate = triple_estimate(scenario, spec, Kind::Pressure);
    let scale = prefactor(scenario.separation(), 4);
    Integrated {
        value: -scale * estimate.value,
        error: scale * estimate.total_err().max(spec.abs_floor),
        nodes: estimate.nodes,
        converged: estimate.converged,
    }
}

/// Casimir interaction energy per unit area (J/m²); → 0 as a → ∞ and
/// negative for binding configurations.
pub fn integrate_energy(scenario: &Scenario, spec: &QuadratureSpec) -> Integrated {
    let estimate = triple_estimate(scenario, spec, Kind::Energy);
    let scale = prefactor(scenario.separation(), 3);
    Integrated {
        value: -scale * estimate.value,
        error: scale * estimate.total_err().max(spec.abs_floor),
        nodes: estimate.nodes,
        converged: estimate.converged,
    }
}

/// Casimir torque per unit area, Q = −∂E/∂θ (J/m²/rad). Obtained by
/// differentiating the energy integrand under the integral sign.
pub fn torque(scenario: &Scenario, spec: &QuadratureSpec) -> Integrated {
    let estimate = triple_estimate(scenario, spec, Kind::TorqueDerivative);
    let scale = prefactor(scenario.separation(), 3);
    Integrated {
        value: scale * estimate.value,
        error: scale * estimate.total_err().max(spec.abs_floor),
        nodes: estimate.nodes,
        converged: estimate.converged,
    }
}

/// One fully evaluated sweep point.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub separation: f64,
    pub angle: f64,
    pub pressure: f64,
    pub pressure_err: f64,
    pub energy: f64,
    pub energy_err: f64,
    pub torque: f64,
    pub torque_err: f64,
    pub converged: bool,
    pub nodes: u64,
    pub seconds: f64,
    /// Panic message when the point failed outright (numeric fields NaN).
    pub failure: Option<String>,
}

/// Evaluates pressure, energy and torque for one scenario, catching
/// per-point failures so sweeps survive hard corner points.
pub fn evaluate_point(scenario: &Scenario, spec: &QuadratureSpec) -> SweepResult {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let pressure = integrate_pressure(scenario, spec);
        let energy = integrate_energy(scenario, spec);
        let torque = torque(scenario, spec);
        (pressure, energy, torque)
    }));
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((pressure, energy, torque)) => SweepResult {
            separation: scenario.separation(),
            angle: scenario.angle(),
            pressure: pressure.value,
            pressure_err: pressure.error,
            energy: energy.value,
            energy_err: energy.error,
            torque: torque.value,
            torque_err: torque.error,
            converged: pressure.converged && energy.converged && torque.converged,
            nodes: pressure.nodes + energy.nodes + torque.nodes,
            seconds,
            failure: None,
        },
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            SweepResult {
                separation: scenario.separation(),
                angle: scenario.angle(),
                pressure: f64::NAN,
                pressure_err: f64::NAN,
                energy: f64::NAN,
                energy_err: f64::NAN,
                torque: f64::NAN,
                torque_err: f64::NAN,
                converged: false,
                nodes: 0,
                seconds,
                failure: Some(message),
            }
        }
    }
}

/// Evaluates every scenario (in parallel) and returns results in input
/// order. Identical inputs give bit-identical numeric results regardless of
/// thread count.
pub fn sweep(scenarios: &[Scenario], spec: &QuadratureSpec) -> Vec<SweepResult> {
    scenarios
        .par_iter()
        .map(|scenario| evaluate_point(scenario, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{MaterialModel, UniaxialPlate};
    use approx::assert_relative_eq;

    fn plate(perp: f64, par: f64) -> UniaxialPlate {
        UniaxialPlate::new(MaterialModel::Constant(perp), MaterialModel::Constant(par)).unwrap()
    }

    fn scenario(perp: f64, par: f64, a: f64, theta: f64) -> Scenario {
        Scenario::new(
            plate(perp, par),
            plate(perp, par),
            MaterialModel::Constant(1.0),
            MaterialModel::Constant(1.0),
            a,
            theta,
        )
        .unwrap()
    }

    fn quick_spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-4,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn domain_maps_cover_the_half_line() {
        for map in [DomainMap::Rational, DomainMap::ExpTail] {
            let (x0, _) = map.apply(1e-6);
            assert!(x0 > 0.0 && x0 < 1e-5);
            let (x1, j1) = map.apply(0.9);
            assert!(x1 > 1.0 && j1 > 1.0);
        }
        let (x, j) = DomainMap::Rational.apply(0.5);
        assert_relative_eq!(x, 1.0);
        assert_relative_eq!(j, 4.0);
    }

    #[test]
    fn angular_rule_avoids_axes() {
        let thetas = [0.0, 1e-3, -1e-3, 5e-4, -5e-4];
        let rule = AngularRule::build(32, default_angular_offset(32), &thetas);
        assert_eq!(rule.phi.len(), 32);
        let total: f64 = rule.weight.iter().sum();
        assert_relative_eq!(total, 2.0 * std::f64::consts::PI, max_relative = 1e-13);
        for &p in &rule.phi {
            assert!(quarter_distance(p) > MIN_AXIS_DISTANCE);
            for &t in &thetas {
                assert!(quarter_distance(p + t) > MIN_AXIS_DISTANCE);
            }
        }
        // an adversarial theta exactly on a node of the unshifted rule
        let rule0 = AngularRule::build(32, default_angular_offset(32), &[0.0]);
        let adversarial = std::f64::consts::FRAC_PI_2 - rule0.phi[3];
        let nudged = AngularRule::build(32, default_angular_offset(32), &[adversarial]);
        for &p in &nudged.phi {
            assert!(quarter_distance(p + adversarial) > MIN_AXIS_DISTANCE);
        }
    }

    #[test]
    fn matched_plates_give_zero_observables() {
        let scn = Scenario::new(
            plate(1.0, 1.0),
            plate(1.0, 1.0),
            MaterialModel::Constant(1.0),
            MaterialModel::Constant(1.0),
            1e-6,
            0.7,
        )
        .unwrap();
        let spec = quick_spec();
        let f = integrate_pressure(&scn, &spec);
        let e = integrate_energy(&scn, &spec);
        assert!(f.converged && e.converged);
        let f_hat = f.value * scn.separation().powi(4) / (HBAR * SPEED_OF_LIGHT);
        let e_hat = e.value * scn.separation().powi(3) / (HBAR * SPEED_OF_LIGHT);
        assert!(f_hat.abs() <= spec.abs_floor, "F_hat = {f_hat:e}");
        assert!(e_hat.abs() <= spec.abs_floor, "E_hat = {e_hat:e}");
    }

    #[test]
    fn energy_is_negative_and_force_attractive_for_identical_plates() {
        let scn = scenario(2.0, 3.0, 1e-7, 0.6);
        let spec = quick_spec();
        let f = integrate_pressure(&scn, &spec);
        let e = integrate_energy(&scn, &spec);
        assert!(f.converged && e.converged);
        assert!(e.value < 0.0, "E = {}", e.value);
        assert!(f.value < 0.0, "F = {}", f.value);
        // |E| shrinks with separation (binding energy → 0 from below)
        let further = integrate_energy(&scn.with_separation(2e-7).unwrap(), &spec);
        assert!(further.value > e.value && further.value < 0.0);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let scn = scenario(2.0, 3.0, 1e-7, 0.4);
        let spec = QuadratureSpec {
            rel_tol: 1e-3,
            ..QuadratureSpec::default()
        };
        let scans = vec![scn.clone(), scn.with_angle(0.9).unwrap()];
        let first = sweep(&scans, &spec);
        let second = sweep(&scans, &spec);
        assert_eq!(first.len(), 2);
        for (x, y) in first.iter().zip(&second) {
            assert_eq!(x.pressure.to_bits(), y.pressure.to_bits());
            assert_eq!(x.energy.to_bits(), y.energy.to_bits());
            assert_eq!(x.torque.to_bits(), y.torque.to_bits());
            assert_eq!(x.nodes, y.nodes);
        }
        assert_relative_eq!(first[0].separation, 1e-7);
        assert!(first.iter().all(|r| r.failure.is_none()));
        assert!(first.iter().all(|r| r.pressure_err > 0.0 && r.energy_err > 0.0));
    }

    #[test]
    fn spec_validation_catches_misconfiguration() {
        let mut spec = QuadratureSpec::default();
        spec.angular_order = 31;
        assert!(spec.validate().is_err());
        spec.angular_order = 32;
        spec.rel_tol = -1.0;
        assert!(spec.validate().is_err());
        spec.rel_tol = 1e-6;
        assert!(spec.validate().is_ok());
    }
}
