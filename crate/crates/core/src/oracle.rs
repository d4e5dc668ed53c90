//! Independent reference implementations used by the test and acceptance
//! suites: imaginary-axis Fresnel coefficients, the scalar two-channel
//! Lifshitz integral for isotropic plates, and a direct numerical solve of
//! the Maxwell matching conditions for the reflection off either plate.
//!
//! These share the quadrature engine and the trivially-stated mode
//! structure (wavenumbers and crystal polarization patterns) with the main
//! pipeline, but never its closed-form plate scalars, m-vectors or λ
//! products — independence from that algebra is the point.

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use crate::materials::{rotation_matrix, Scenario};
use crate::quadrature::{
    integrate_unit, AdaptOptions, Integrated, NodeValue, QuadratureSpec,
};
use crate::scattering::{PlateIndex, TransverseMode};
use crate::{C64, CVec3, HBAR, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("scalar Lifshitz route requires isotropic plates")]
    AnisotropicInput,
    #[error("boundary-condition system is singular")]
    SingularSystem,
}

/// Scalar reflection amplitudes for E- and B-polarization at imaginary
/// frequency, off an isotropic plate.
#[derive(Debug, Clone, Copy)]
pub struct FresnelPair {
    pub r_e: f64,
    pub r_b: f64,
}

/// Textbook Fresnel coefficients with imaginary-axis decay constants:
/// r_E = (μₚw − μwₚ)/(μₚw + μwₚ), r_B = (εₚw − εwₚ)/(εₚw + εwₚ),
/// wₚ = √(u² + v² + εₚμₚκ²).
pub fn fresnel(mode: &TransverseMode, eps_plate: f64, mu_plate: f64) -> FresnelPair {
    let s2 = mode.u * mode.u + mode.v * mode.v;
    let w_plate = (s2 + eps_plate * mu_plate * mode.kappa * mode.kappa).sqrt();
    let (eps, mu, w) = (mode.mats.eps, mode.mats.mu, mode.w);
    FresnelPair {
        r_e: (mu_plate * w - mu * w_plate) / (mu_plate * w + mu * w_plate),
        r_b: (eps_plate * w - eps * w_plate) / (eps_plate * w + eps * w_plate),
    }
}

fn cross(a: &CVec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

const I: C64 = C64::new(0.0, 1.0);

/// Solves the four Maxwell matching conditions (tangential E and H
/// continuity) at one plate for the reflected vector-potential amplitude.
///
/// The four unknowns are the reflected E/B amplitudes and the transmitted
/// ordinary/extraordinary amplitudes; the crystal mode structure enters
/// only through its wavenumbers and polarization patterns. For plate 1 the
/// solve runs in the frame rotated by θ (where the plate's dielectric
/// tensor is diagonal) and the result is rotated back.
pub fn boundary_solve(
    mode: &TransverseMode,
    theta: f64,
    plate: PlateIndex,
    incident: &CVec3,
) -> Result<CVec3, OracleError> {
    match plate {
        PlateIndex::Two => interface_reflection(
            mode.u,
            mode.v,
            mode.w,
            mode.w2o,
            mode.w2e,
            mode.kappa,
            mode.mats.eps,
            mode.mats.mu,
            mode.mats.eps2_perp,
            1.0,
            incident,
        ),
        PlateIndex::One => {
            let lambda = rotation_matrix(theta).map(|x| C64::new(x, 0.0));
            let primed = lambda.transpose() * incident;
            let reflected = interface_reflection(
                mode.u_rot,
                mode.v_rot,
                mode.w,
                mode.w1o,
                mode.w1e,
                mode.kappa,
                mode.mats.eps,
                mode.mats.mu,
                mode.mats.eps1_perp,
                -1.0,
                &primed,
            )?;
            Ok(lambda * reflected)
        }
    }
}

/// Reflection at a single gap/crystal interface for a wave travelling in
/// the ±x direction (`direction` = +1 toward plate 2, −1 toward plate 1).
#[allow(clippy::too_many_arguments)]
fn interface_reflection(
    u: f64,
    v: f64,
    w: f64,
    w_o: f64,
    w_e: f64,
    kappa: f64,
    eps: f64,
    mu: f64,
    eps_perp: f64,
    direction: f64,
    incident: &CVec3,
) -> Result<CVec3, OracleError> {
    let s2 = u * u + v * v;
    let s = s2.sqrt();
    let norm = 1.0 / (kappa * (eps * mu).sqrt() * s);
    let sigma = direction;

    let k_inc = CVec3::new(I * c(sigma * w), c(u), c(v));
    let k_ref = CVec3::new(-I * c(sigma * w), c(u), c(v));
    let n_e = CVec3::new(c(0.0), c(-v / s), c(u / s));
    let n_b_ref = CVec3::new(
        I * c(s2 * norm),
        c(-sigma * u * w * norm),
        c(-sigma * v * w * norm),
    );
    let k_o = CVec3::new(I * c(sigma * w_o), c(u), c(v));
    let p_o = CVec3::new(c(u), -I * c(sigma * w_o), c(0.0));
    let k_e = CVec3::new(I * c(sigma * w_e), c(u), c(v));
    let p_e = CVec3::new(
        I * c(sigma * w_e * v),
        c(u * v),
        c(v * v + eps_perp * kappa * kappa),
    );

    let inv_mu = c(1.0 / mu);
    let h_refl_e = cross(&k_ref, &n_e) * inv_mu;
    let h_refl_b = cross(&k_ref, &n_b_ref) * inv_mu;
    let h_trans_o = cross(&k_o, &p_o);
    let h_trans_e = cross(&k_e, &p_e);
    let h_inc = cross(&k_inc, incident) * inv_mu;

    // rows: A_y, A_z, H_y, H_z; columns: r_E, r_B, t_o, t_e
    let matrix = Matrix4::new(
        n_e[1], n_b_ref[1], -p_o[1], -p_e[1], //
        n_e[2], n_b_ref[2], -p_o[2], -p_e[2], //
        h_refl_e[1], h_refl_b[1], -h_trans_o[1], -h_trans_e[1], //
        h_refl_e[2], h_refl_b[2], -h_trans_o[2], -h_trans_e[2],
    );
    let rhs = Vector4::new(-incident[1], -incident[2], -h_inc[1], -h_inc[2]);
    let solution = matrix.lu().solve(&rhs).ok_or(OracleError::SingularSystem)?;
    Ok(n_e * solution[0] + n_b_ref * solution[1])
}

/// Pressure and energy for isotropic plates via the two-channel scalar
/// kernel, per-polarization 1 − r₁r₂e^{−2aw}. Shares the quadrature engine
/// and maps with the main pipeline, but none of its reflection algebra.
pub fn lifshitz_isotropic(
    scenario: &Scenario,
    spec: &QuadratureSpec,
) -> Result<(Integrated, Integrated), OracleError> {
    if !scenario.is_isotropic() {
        return Err(OracleError::AnisotropicInput);
    }
    let pressure = lifshitz_integral(scenario, spec, false);
    let energy = lifshitz_integral(scenario, spec, true);
    let a = scenario.separation();
    let pi3 = std::f64::consts::PI.powi(3);
    let scale_f = HBAR * SPEED_OF_LIGHT / (4.0 * pi3 * a.powi(4));
    let scale_e = HBAR * SPEED_OF_LIGHT / (4.0 * pi3 * a.powi(3));
    Ok((
        Integrated {
            value: -scale_f * pressure.value,
            error: scale_f * pressure.total_err().max(spec.abs_floor),
            nodes: pressure.nodes,
            converged: pressure.converged,
        },
        Integrated {
            value: -scale_e * energy.value,
            error: scale_e * energy.total_err().max(spec.abs_floor),
            nodes: energy.nodes,
            converged: energy.converged,
        },
    ))
}

fn lifshitz_integral(
    scenario: &Scenario,
    spec: &QuadratureSpec,
    energy: bool,
) -> crate::quadrature::Estimate {
    let tau = 2.0 * std::f64::consts::PI;
    let outer = |t_kappa: f64| -> NodeValue {
        let (kappa, jac_k) = spec.kappa_map.apply(t_kappa);
        let xi = SPEED_OF_LIGHT * kappa / scenario.separation();
        let mats = scenario.materials_at(xi);
        let inner = |t_r: f64| -> NodeValue {
            let (r, jac_r) = spec.radial_map.apply(t_r);
            // the integrand is independent of the transverse angle
            let mode = TransverseMode::with_materials(&mats, 0.0, kappa, r, 0.0)
                .expect("nodes stay off the origin");
            let pair1 = fresnel(&mode, mats.eps1_perp, 1.0);
            let pair2 = fresnel(&mode, mats.eps2_perp, 1.0);
            let decay = (-2.0 * mode.w).exp();
            let x_e = pair1.r_e * pair2.r_e * decay;
            let x_b = pair1.r_b * pair2.r_b * decay;
            let f = if energy {
                -0.5 * ((-x_e).ln_1p() + (-x_b).ln_1p())
            } else {
                mode.w * (x_e / (1.0 - x_e) + x_b / (1.0 - x_b))
            };
            NodeValue::exact(jac_r * r * tau * f)
        };
        let estimate = integrate_unit(
            &inner,
            &AdaptOptions {
                rel_tol: 0.25 * spec.rel_tol,
                abs_floor: 0.25 * spec.abs_floor,
                max_depth: spec.max_refinement_depth,
                initial_panels: 6,
                max_panels: 1024,
                parallel: false,
            },
        );
        NodeValue {
            value: jac_k * estimate.value,
            aux: jac_k * estimate.total_err(),
            cost: estimate.nodes,
            ok: estimate.converged,
        }
    };
    integrate_unit(
        &outer,
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
