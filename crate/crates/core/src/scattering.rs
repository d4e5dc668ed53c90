//! Reflection of imaginary-frequency plane waves off the two plates.
//!
//! For one transverse mode (κ, u, v) this module computes the decay
//! constants in the gap and in both crystals, the E/B polarization bases,
//! the four plate scalars (α, β, γ, δ), the m-vectors describing the
//! reflected polarization mix, and the 3×3 reflection operators R₁ and R₂
//! acting on vector-potential amplitudes.
//!
//! Everything is complex-valued even though the final observables are real:
//! the vectors carry explicit factors of i, and realness is asserted
//! downstream rather than assumed, so transcription errors surface as
//! complex residuals.
//!
//! Modes lying on a coordinate axis of either plate frame (u = 0, v = 0,
//! u′ = 0 or v′ = 0) make individual scalars diverge even though the
//! reflection operators stay finite; they are rejected here and dodged by
//! the quadrature's angular offset.

use thiserror::Error;

use crate::materials::{rotation_matrix, MaterialsAt, Scenario};
use crate::{C64, CMat3, CVec3, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScatteringError {
    #[error("mode (kappa, u, v) = (0, 0, 0) is singular (w = 0)")]
    ZeroMode,
    #[error("kappa must be non-negative")]
    NegativeFrequency,
    #[error("transverse polarization basis undefined for u = v = 0")]
    BasisUndefined,
    #[error("B-polarization basis undefined at kappa = 0")]
    StaticMode,
    #[error("axis mode (u = 0 or v = 0 in the plate frame) — use limit path")]
    AxisMode,
}

/// One quadrature point with every derived wavenumber and the material
/// values frozen at ξ = cκ. Lengths may be SI (1/m) or expressed in units
/// of the inverse separation; all downstream scalars are homogeneous of
/// degree zero, so both conventions give identical reflection operators.
#[derive(Debug, Clone, Copy)]
pub struct TransverseMode {
    pub kappa: f64,
    pub u: f64,
    pub v: f64,
    /// Gap decay constant w = √(u² + v² + εμκ²).
    pub w: f64,
    /// Ordinary/extraordinary decay constants in plate 1 (rotated frame).
    pub w1o: f64,
    pub w1e: f64,
    /// Ordinary/extraordinary decay constants in plate 2.
    pub w2o: f64,
    pub w2e: f64,
    /// Transverse components in the frame of plate 1's optical axis.
    pub u_rot: f64,
    pub v_rot: f64,
    /// The six response values at ξ = cκ.
    pub mats: MaterialsAt,
}

impl TransverseMode {
    /// Builds a mode from already-evaluated material values; `theta` is the
    /// optical-axis angle of plate 1.
    pub fn with_materials(
        mats: &MaterialsAt,
        theta: f64,
        kappa: f64,
        u: f64,
        v: f64,
    ) -> Result<Self, ScatteringError> {
        if kappa < 0.0 {
            return Err(ScatteringError::NegativeFrequency);
        }
        if kappa == 0.0 && u == 0.0 && v == 0.0 {
            return Err(ScatteringError::ZeroMode);
        }
        let s2 = u * u + v * v;
        let k2 = kappa * kappa;
        let w = (s2 + mats.eps * mats.mu * k2).sqrt();
        let w2o = (s2 + mats.eps2_perp * k2).sqrt();
        let w2e = (u * u + v * v * mats.eps2_par / mats.eps2_perp + mats.eps2_par * k2).sqrt();
        let (sin_t, cos_t) = theta.sin_cos();
        let u_rot = u * cos_t - v * sin_t;
        let v_rot = v * cos_t + u * sin_t;
        let w1o = (u_rot * u_rot + v_rot * v_rot + mats.eps1_perp * k2).sqrt();
        let w1e = (u_rot * u_rot
            + v_rot * v_rot * mats.eps1_par / mats.eps1_perp
            + mats.eps1_par * k2)
            .sqrt();
        Ok(Self {
            kappa,
            u,
            v,
            w,
            w1o,
            w1e,
            w2o,
            w2e,
            u_rot,
            v_rot,
            mats: *mats,
        })
    }
}

/// Builds the mode for a scenario at SI wavenumbers (1/m), evaluating the
/// six material models at ξ = cκ.
pub fn make_mode(
    scenario: &Scenario,
    kappa: f64,
    u: f64,
    v: f64,
) -> Result<TransverseMode, ScatteringError> {
    let mats = scenario.materials_at(SPEED_OF_LIGHT * kappa.max(0.0));
    TransverseMode::with_materials(&mats, scenario.angle(), kappa, u, v)
}

/// E- and B-polarization directions for the right-moving (`n_b2`) and
/// left-moving (`n_b1`) waves; `n_e` is shared.
#[derive(Debug, Clone)]
pub struct PolarizationBasis {
    pub n_e: CVec3,
    pub n_b1: CVec3,
    pub n_b2: CVec3,
}

pub fn polarization_basis(mode: &TransverseMode) -> Result<PolarizationBasis, ScatteringError> {
    let s2 = mode.u * mode.u + mode.v * mode.v;
    if s2 == 0.0 {
        return Err(ScatteringError::BasisUndefined);
    }
    if mode.kappa <= 0.0 {
        return Err(ScatteringError::StaticMode);
    }
    let s = s2.sqrt();
    let n_e = CVec3::new(
        C64::new(0.0, 0.0),
        C64::new(-mode.v / s, 0.0),
        C64::new(mode.u / s, 0.0),
    );
    let norm = 1.0 / (mode.kappa * (mode.mats.eps * mode.mats.mu).sqrt() * s);
    let n_b2 = CVec3::new(
        C64::new(0.0, s2 * norm),
        C64::new(mode.u * mode.w * norm, 0.0),
        C64::new(mode.v * mode.w * norm, 0.0),
    );
    let n_b1 = CVec3::new(
        C64::new(0.0, s2 * norm),
        C64::new(-mode.u * mode.w * norm, 0.0),
        C64::new(-mode.v * mode.w * norm, 0.0),
    );
    Ok(PolarizationBasis { n_e, n_b1, n_b2 })
}

/// Which plate a response belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateIndex {
    One,
    Two,
}

/// Per-plate scalars, m-vectors (lab frame) and the reflection operator.
#[derive(Debug, Clone)]
pub struct PlateResponse {
    pub plate: PlateIndex,
    /// Ratio of extraordinary to ordinary transmitted amplitude, E-polarized incidence.
    pub alpha: C64,
    /// Transmitted ordinary amplitude per incident E amplitude.
    pub beta: C64,
    /// Ratio of extraordinary to ordinary transmitted amplitude, B-polarized incidence.
    pub gamma: C64,
    /// Transmitted ordinary amplitude per incident B amplitude.
    pub delta: C64,
    pub m_e: CVec3,
    pub m_b: CVec3,
    /// Rank-2 reflection operator on vector-potential amplitudes.
    pub reflection: CMat3,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

const I: C64 = C64::new(0.0, 1.0);

fn outer(a: &CVec3, b: &CVec3) -> CMat3 {
    a * b.transpose()
}

/// Reflection off plate 2 (optical axis along z) for the right-moving wave.
pub fn plate2_response(mode: &TransverseMode) -> Result<PlateResponse, ScatteringError> {
    if mode.kappa <= 0.0 {
        return Err(ScatteringError::StaticMode);
    }
    if mode.u == 0.0 || mode.v == 0.0 {
        return Err(ScatteringError::AxisMode);
    }
    let basis = polarization_basis(mode)?;
    let MaterialsAt { eps, mu, .. } = mode.mats;
    let ep = mode.mats.eps2_perp;
    let (u, v, w, wo, we, kappa) = (mode.u, mode.v, mode.w, mode.w2o, mode.w2e, mode.kappa);
    let s2 = u * u + v * v;
    let s = s2.sqrt();
    let k2 = kappa * kappa;

    let alpha = I * c(u * (eps * wo + ep * w)) / c(v * (eps * wo * wo + ep * we * w));
    let gamma = -I * c(v * wo * (w + mu * wo)) / c(ep * u * k2 * (w + mu * we));
    let beta = I * c(2.0 * eps * v * w)
        / (c(eps * wo * w + ep * u * u + eps * mu * (v * v + ep * k2))
            + I * c(u * v) * alpha * c(eps * w + ep * we));
    let delta = c(2.0 * eps * w * s2)
        / (c(eps * u * wo)
            + I * c(eps * v * wo * wo) * gamma
            + c(ep * w) * (c(u) + I * c(v * we) * gamma));

    let m_e = CVec3::new(
        c(ep / eps) * beta * (c(u) + I * alpha * c(v * we)),
        beta * (-I * c(wo) + alpha * c(u * v)),
        alpha * beta * c(v * v + ep * k2),
    ) / c(s);
    let bnorm = 1.0 / (kappa * (eps * mu).sqrt() * s);
    let m_b = CVec3::new(
        c(ep / eps) * delta * (-I * c(u) + gamma * c(v * we)),
        -delta * (c(wo) + I * gamma * c(u * v)),
        -I * gamma * delta * c(v * v + ep * k2),
    ) * c(bnorm);

    let reflection = -outer(&(basis.n_e + m_e), &basis.n_e) - outer(&(basis.n_b2 + m_b), &basis.n_b2);
    Ok(PlateResponse {
        plate: PlateIndex::Two,
        alpha,
        beta,
        gamma,
        delta,
        m_e,
        m_b,
        reflection,
    })
}

/// Reflection off plate 1 (optical axis at angle θ) for the left-moving
/// wave. The response is assembled in the frame rotated so the optical axis
/// lies along z — where it takes the plate-2 form with w → −w — and carried
/// back by R₁ = Λ·R′₁·Λᵀ.
pub fn plate1_response(
    mode: &TransverseMode,
    theta: f64,
) -> Result<PlateResponse, ScatteringError> {
    if mode.kappa <= 0.0 {
        return Err(ScatteringError::StaticMode);
    }
    if mode.u_rot == 0.0 || mode.v_rot == 0.0 {
        return Err(ScatteringError::AxisMode);
    }
    let MaterialsAt { eps, mu, .. } = mode.mats;
    let ep = mode.mats.eps1_perp;
    let (up, vp, w, wo, we, kappa) = (
        mode.u_rot,
        mode.v_rot,
        mode.w,
        mode.w1o,
        mode.w1e,
        mode.kappa,
    );
    let s2 = up * up + vp * vp;
    let s = s2.sqrt();
    let k2 = kappa * kappa;

    let alpha = -I * c(up * (eps * wo + ep * w)) / c(vp * (eps * wo * wo + ep * we * w));
    let gamma = I * c(vp * wo * (w + mu * wo)) / c(ep * up * k2 * (w + mu * we));
    let beta = -I * c(2.0 * eps * vp * w)
        / (c(eps * wo * w + ep * up * up + eps * mu * (vp * vp + ep * k2))
            - I * c(up * vp) * alpha * c(eps * w + ep * we));
    let delta = c(2.0 * eps * w * s2)
        / (c(eps * up * wo) - I * c(eps * vp * wo * wo) * gamma
            + c(ep * w) * (c(up) - I * c(vp * we) * gamma));

    // m-vectors and basis in the rotated (primed) frame
    let m_e_p = CVec3::new(
        c(ep / eps) * beta * (c(up) - I * alpha * c(vp * we)),
        beta * (I * c(wo) + alpha * c(up * vp)),
        alpha * beta * c(vp * vp + ep * k2),
    ) / c(s);
    let bnorm = 1.0 / (kappa * (eps * mu).sqrt() * s);
    let m_b_p = CVec3::new(
        c(ep / eps) * delta * (-I * c(up) - gamma * c(vp * we)),
        -delta * (-c(wo) + I * gamma * c(up * vp)),
        -I * gamma * delta * c(vp * vp + ep * k2),
    ) * c(bnorm);

    let n_e_p = CVec3::new(c(0.0), c(-vp / s), c(up / s));
    let n_b1_p = CVec3::new(
        C64::new(0.0, s2 * bnorm),
        c(-up * w * bnorm),
        c(-vp * w * bnorm),
    );
    let r_primed = -outer(&(n_e_p + m_e_p), &n_e_p) - outer(&(n_b1_p + m_b_p), &n_b1_p);

    let lambda = rotation_matrix(theta).map(|x| C64::new(x, 0.0));
    let reflection = lambda * r_primed * lambda.transpose();
    Ok(PlateResponse {
        plate: PlateIndex::One,
        alpha,
        beta,
        gamma,
        delta,
        m_e: lambda * m_e_p,
        m_b: lambda * m_b_p,
        reflection,
    })
}
