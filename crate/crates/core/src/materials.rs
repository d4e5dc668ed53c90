//! Dispersion models on the imaginary frequency axis and the problem statement.
//!
//! Every response function here is a real-valued function of ξ ≥ 0 (the
//! magnitude of the imaginary frequency ω = iξ): a constant, a sum of
//! Drude-Lorentz oscillators, or a monotone-cubic interpolant through
//! tabulated points. Real-frequency data and Kramers-Kronig transforms are
//! out of scope; tables are assumed to be already on the imaginary axis.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Errors from building, validating or loading material models.
#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: non-monotone frequency grid")]
    NonMonotoneGrid { path: String, line: usize },
    #[error("tabulated grid must be strictly increasing (row {index})")]
    GridNotIncreasing { index: usize },
    #[error("tabulated grid needs at least 4 rows, got {0}")]
    TooFewRows(usize),
    #[error("value at row {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("permittivity must be >= 1 for a passive medium, got {0}")]
    PermittivityBelowOne(f64),
    #[error("permeability must be > 0, got {0}")]
    NonPositivePermeability(f64),
    #[error("permeability models must be Constant or Tabulated")]
    UnsupportedPermeabilityModel,
    #[error("oscillator {index}: {message}")]
    InvalidOscillator { index: usize, message: String },
    #[error("plate separation must be positive and finite, got {0}")]
    InvalidSeparation(f64),
    #[error("angle must be finite, got {0}")]
    InvalidAngle(f64),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One Drude-Lorentz resonance, contributing ωₚ²/(ω₀² + ξ² + γξ) at ω = iξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    /// Oscillator strength ωₚ² (rad²/s²).
    pub strength: f64,
    /// Resonance frequency ω₀ (rad/s).
    pub resonance: f64,
    /// Damping rate γ (rad/s).
    pub damping: f64,
}

/// A scalar response function of imaginary frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialModel {
    /// Frequency-independent value.
    Constant(f64),
    /// 1 + Σ ωₚ²/(ω₀² + ξ² + γξ); real, ≥ 1 and non-increasing in ξ.
    OscillatorSum(Vec<Oscillator>),
    /// Monotone-cubic interpolant through tabulated (ξ, value) points.
    Tabulated(TabulatedModel),
}

impl MaterialModel {
    /// Evaluates the model at imaginary frequency ξ (rad/s).
    pub fn evaluate(&self, xi: f64) -> f64 {
        debug_assert!(xi >= 0.0, "imaginary frequency must be non-negative");
        match self {
            Self::Constant(c) => *c,
            Self::OscillatorSum(oscillators) => {
                1.0 + oscillators
                    .iter()
                    .map(|o| o.strength / (o.resonance * o.resonance + xi * xi + o.damping * xi))
                    .sum::<f64>()
            }
            Self::Tabulated(table) => table.evaluate(xi),
        }
    }

    /// Checks the passivity constraints for a permittivity: value ≥ 1 at all ξ.
    pub fn validate_permittivity(&self) -> Result<(), MaterialError> {
        match self {
            Self::Constant(c) => {
                if !c.is_finite() || *c < 1.0 {
                    return Err(MaterialError::PermittivityBelowOne(*c));
                }
            }
            Self::OscillatorSum(oscillators) => validate_oscillators(oscillators)?,
            Self::Tabulated(table) => {
                if let Some(&bad) = table.value.iter().find(|v| **v < 1.0) {
                    return Err(MaterialError::PermittivityBelowOne(bad));
                }
            }
        }
        Ok(())
    }

    /// Checks the constraints for a permeability: Constant or Tabulated, values > 0.
    pub fn validate_permeability(&self) -> Result<(), MaterialError> {
        match self {
            Self::Constant(c) => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(MaterialError::NonPositivePermeability(*c));
                }
            }
            Self::Tabulated(table) => {
                if let Some(&bad) = table.value.iter().find(|v| **v <= 0.0) {
                    return Err(MaterialError::NonPositivePermeability(bad));
                }
            }
            Self::OscillatorSum(_) => return Err(MaterialError::UnsupportedPermeabilityModel),
        }
        Ok(())
    }
}

fn validate_oscillators(oscillators: &[Oscillator]) -> Result<(), MaterialError> {
    for (index, o) in oscillators.iter().enumerate() {
        let bad = |message: &str| MaterialError::InvalidOscillator {
            index,
            message: message.to_string(),
        };
        if !(o.strength.is_finite() && o.resonance.is_finite() && o.damping.is_finite()) {
            return Err(bad("parameters must be finite"));
        }
        if o.strength < 0.0 {
            return Err(bad("strength must be non-negative"));
        }
        if o.resonance <= 0.0 {
            return Err(bad("resonance must be positive (the value diverges at xi = 0 otherwise)"));
        }
        if o.damping < 0.0 {
            return Err(bad("damping must be non-negative"));
        }
    }
    Ok(())
}

/// Monotone-cubic (Fritsch-Carlson) interpolant over a strictly increasing
/// ξ grid, with a constant extension below the grid and a 1/ξ² transparency
/// tail above it: 1 + (v_last − 1)·(ξ_last/ξ)².
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedModel {
    xi: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedModel {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, MaterialError> {
        if points.len() < 4 {
            return Err(MaterialError::TooFewRows(points.len()));
        }
        for (index, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(MaterialError::NonFiniteValue { index });
            }
            if index > 0 && x <= points[index - 1].0 {
                return Err(MaterialError::GridNotIncreasing { index });
            }
        }
        if points[0].0 < 0.0 {
            return Err(MaterialError::NonFiniteValue { index: 0 });
        }
        let xi: Vec<f64> = points.iter().map(|p| p.0).collect();
        let value: Vec<f64> = points.iter().map(|p| p.1).collect();
        let slope = pchip_slopes(&xi, &value);
        Ok(Self { xi, value, slope })
    }

    pub fn grid(&self) -> (&[f64], &[f64]) {
        (&self.xi, &self.value)
    }

    fn evaluate(&self, xi: f64) -> f64 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.value[0];
        }
        if xi >= self.xi[n - 1] {
            let ratio = self.xi[n - 1] / xi;
            return 1.0 + (self.value[n - 1] - 1.0) * ratio * ratio;
        }
        // binary search for the interval containing xi
        let k = match self.xi.partition_point(|&x| x <= xi) {
            0 => 0,
            p => p - 1,
        };
        let h = self.xi[k + 1] - self.xi[k];
        let t = (xi - self.xi[k]) / h;
        let (y0, y1) = (self.value[k], self.value[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        // cubic Hermite basis
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }
}

/// Fritsch-Carlson monotone slopes with the usual one-sided endpoint rule.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] <= 0.0 {
            m[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    m[0] = edge_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Loads a tabulated model from a plain-text file: `#`-prefixed comment
/// lines, then whitespace-separated rows `xi_rad_per_s  value`, with a
/// strictly increasing first column and at least 4 rows.
pub fn load_tabulated(path: impl AsRef<Path>) -> Result<MaterialModel, MaterialError> {
    load_tabulated_columns(path, 0, 1)
}

/// As [`load_tabulated`], reading ξ and the value from the given
/// zero-based columns (rows may carry extra columns).
pub fn load_tabulated_columns(
    path: impl AsRef<Path>,
    xi_column: usize,
    value_column: usize,
) -> Result<MaterialModel, MaterialError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| MaterialError::Io {
        path: display.clone(),
        source,
    })?;
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let need = xi_column.max(value_column) + 1;
        if fields.len() < need {
            return Err(MaterialError::Parse {
                path: display,
                line: lineno + 1,
                message: format!("expected at least {need} columns, got {}", fields.len()),
            });
        }
        let parse = |col: usize| -> Result<f64, MaterialError> {
            fields[col].parse::<f64>().map_err(|e| MaterialError::Parse {
                path: display.clone(),
                line: lineno + 1,
                message: format!("column {}: {e}", col + 1),
            })
        };
        points.push((parse(xi_column)?, parse(value_column)?));
        lines.push(lineno + 1);
    }
    let table = TabulatedModel::new(&points).map_err(|e| match e {
        MaterialError::GridNotIncreasing { index } => MaterialError::NonMonotoneGrid {
            path: display.clone(),
            line: lines[index],
        },
        MaterialError::NonFiniteValue { index } => MaterialError::Parse {
            path: display.clone(),
            line: lines[index],
            message: "non-finite value".to_string(),
        },
        other => other,
    })?;
    Ok(MaterialModel::Tabulated(table))
}

/// The rotation Λ about the x-axis that carries the optical axis of plate 1.
pub fn rotation_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, c, s, //
        0.0, -s, c,
    )
}

/// A uniaxial plate: permittivity ε∥ along the optical axis, ε⊥ transverse.
#[derive(Debug, Clone, PartialEq)]
pub struct UniaxialPlate {
    pub eps_perp: MaterialModel,
    pub eps_par: MaterialModel,
}

impl UniaxialPlate {
    pub fn new(eps_perp: MaterialModel, eps_par: MaterialModel) -> Result<Self, MaterialError> {
        eps_perp.validate_permittivity()?;
        eps_par.validate_permittivity()?;
        Ok(Self { eps_perp, eps_par })
    }

    /// True when both axes carry the same model.
    pub fn is_isotropic(&self) -> bool {
        self.eps_perp == self.eps_par
    }
}

/// Dielectric tensor of a plate whose optical axis lies in the boundary
/// plane at angle θ to the z-axis: Λ·diag(ε⊥, ε⊥, ε∥)·Λᵀ.
pub fn dielectric_tensor(plate: &UniaxialPlate, theta: f64, xi: f64) -> Matrix3<f64> {
    let lambda = rotation_matrix(theta);
    let perp = plate.eps_perp.evaluate(xi);
    let par = plate.eps_par.evaluate(xi);
    lambda * Matrix3::from_diagonal(&Vector3::new(perp, perp, par)) * lambda.transpose()
}

/// The six response values frozen at one imaginary frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialsAt {
    pub eps: f64,
    pub mu: f64,
    pub eps1_perp: f64,
    pub eps1_par: f64,
    pub eps2_perp: f64,
    pub eps2_par: f64,
}

/// Full problem statement: two uniaxial plates in the yz-plane separated by
/// an isotropic gap of width `a`, plate 2's optical axis along z and plate
/// 1's at angle θ. The angle is stored reduced to [0, π) — the optical axis
/// is a director, so every quantity has period π in θ.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plate1: UniaxialPlate,
    pub plate2: UniaxialPlate,
    pub gap_eps: MaterialModel,
    pub gap_mu: MaterialModel,
    separation: f64,
    angle: f64,
}

impl Scenario {
    pub fn new(
        plate1: UniaxialPlate,
        plate2: UniaxialPlate,
        gap_eps: MaterialModel,
        gap_mu: MaterialModel,
        separation: f64,
        angle: f64,
    ) -> Result<Self, MaterialError> {
        gap_eps.validate_permittivity()?;
        gap_mu.validate_permeability()?;
        if !separation.is_finite() || separation <= 0.0 {
            return Err(MaterialError::InvalidSeparation(separation));
        }
        if !angle.is_finite() {
            return Err(MaterialError::InvalidAngle(angle));
        }
        let mut reduced = angle.rem_euclid(std::f64::consts::PI);
        if reduced >= std::f64::consts::PI {
            reduced = 0.0;
        }
        Ok(Self {
            plate1,
            plate2,
            gap_eps,
            gap_mu,
            separation,
            angle: reduced,
        })
    }

    /// Plate separation a (m).
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Orientation angle of plate 1, reduced to [0, π).
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Same scenario at a different separation.
    pub fn with_separation(&self, separation: f64) -> Result<Self, MaterialError> {
        Self::new(
            self.plate1.clone(),
            self.plate2.clone(),
            self.gap_eps.clone(),
            self.gap_mu.clone(),
            separation,
            self.angle,
        )
    }

    /// Same scenario at a different orientation angle.
    pub fn with_angle(&self, angle: f64) -> Result<Self, MaterialError> {
        Self::new(
            self.plate1.clone(),
            self.plate2.clone(),
            self.gap_eps.clone(),
            self.gap_mu.clone(),
            self.separation,
            angle,
        )
    }

    /// Evaluates all six response functions at ξ (rad/s).
    pub fn materials_at(&self, xi: f64) -> MaterialsAt {
        MaterialsAt {
            eps: self.gap_eps.evaluate(xi),
            mu: self.gap_mu.evaluate(xi),
            eps1_perp: self.plate1.eps_perp.evaluate(xi),
            eps1_par: self.plate1.eps_par.evaluate(xi),
            eps2_perp: self.plate2.eps_perp.evaluate(xi),
            eps2_par: self.plate2.eps_par.evaluate(xi),
        }
    }

    /// True when both plates are isotropic (per-axis models identical).
    pub fn is_isotropic(&self) -> bool {
        self.plate1.is_isotropic() && self.plate2.is_isotropic()
    }
}
