//! Generation of compatible Gevrey-class initial data.
//!
//! Built-in families are finite sums of x modes times entire y-profiles that
//! vanish at the wall, so the compatibility conditions `u0(x,0) = u1(x,0) = 0`
//! hold exactly at the nodes and every Gevrey-space norm of the data is
//! finite at any radius.
//!
//! The profiles are also lifted so they vanish exactly at the top of the
//! strip: the raw exponential tail is O(e^{-ymax}) there, and clipping that
//! residue at a single collocation node would plant a kink whose high
//! Chebyshev derivatives dwarf the field itself. Subtracting
//! `p(ymax) (y/ymax)^2` keeps the profile entire and changes it by less than
//! the tail it removes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{self, FieldGrid, ScalarField};
use std::sync::Arc;

/// Wall-vanishing vertical profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YProfile {
    /// `y e^{-y}`
    YExp,
    /// `y^2 e^{-y}`
    Y2Exp,
    /// `y e^{-y^2/2}`: odd in `y`, so every even wall derivative vanishes.
    /// The relaxation equation pins `d2u/dy2 = 0` on the wall; data built
    /// from this profile meets that corner condition exactly instead of
    /// only to leading order, which keeps the wall layer of `phi` at the
    /// quadratic-in-amplitude level.
    YGauss,
}

impl YProfile {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            YProfile::YExp => y * (-y).exp(),
            YProfile::Y2Exp => y * y * (-y).exp(),
            YProfile::YGauss => y * (-0.5 * y * y).exp(),
        }
    }

    /// Profile with the top trace lifted off, so it vanishes exactly at both
    /// ends of `[0, ymax]`.
    pub fn eval_lifted(&self, y: f64, ymax: f64) -> f64 {
        let r = y / ymax;
        self.eval(y) - self.eval(ymax) * r * r
    }
}

/// How the tangential content is built.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// `sin(wavenumber x + phase)`
    SingleMode { wavenumber: usize, phase: f64 },
    /// Sum of sine modes with individual phases.
    ModeSum { modes: Vec<(usize, f64)> },
    /// Field dump in the shared binary format.
    CustomFile { path: std::path::PathBuf },
}

/// Recipe for one initial-data field (`u0` or `u1`).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DataSpec {
    #[serde(flatten)]
    pub family: Family,
    pub amplitude: f64,
    #[serde(default = "default_profile")]
    pub y_profile: YProfile,
}

fn default_profile() -> YProfile {
    YProfile::YExp
}

impl DataSpec {
    /// Largest wavenumber the family populates (None for file data).
    pub fn max_mode(&self) -> Option<usize> {
        match &self.family {
            Family::SingleMode { wavenumber, .. } => Some(*wavenumber),
            Family::ModeSum { modes } => modes.iter().map(|&(k, _)| k).max().or(Some(0)),
            Family::CustomFile { .. } => None,
        }
    }
}

/// Sample the recipe on a grid. Built-in families vanish identically at the
/// wall; file data is checked for a zero wall trace.
pub fn generate(spec: &DataSpec, grid: &Arc<FieldGrid>) -> Result<ScalarField> {
    if let Some(kmax) = spec.max_mode() {
        if kmax >= grid.nx / 2 {
            return Err(Error::Config(format!(
                "wavenumber {kmax} is not representable on {} x-points (need < {})",
                grid.nx,
                grid.nx / 2
            )));
        }
    }
    let field = match &spec.family {
        Family::SingleMode { wavenumber, phase } => {
            let (k, ph) = (*wavenumber as f64, *phase);
            let p = spec.y_profile;
            let ymax = grid.ymax;
            ScalarField::from_fn(grid, |x, y| {
                spec.amplitude * (k * x + ph).sin() * p.eval_lifted(y, ymax)
            })
        }
        Family::ModeSum { modes } => {
            let p = spec.y_profile;
            let modes = modes.clone();
            let ymax = grid.ymax;
            ScalarField::from_fn(grid, |x, y| {
                let s: f64 = modes.iter().map(|&(k, ph)| (k as f64 * x + ph).sin()).sum();
                spec.amplitude * s * p.eval_lifted(y, ymax)
            })
        }
        Family::CustomFile { path } => {
            let (f, _) = grid::read_field(path, grid)?;
            let trace = f.boundary_residual();
            if trace > 0.0 {
                return Err(Error::IncompatibleData { residual: trace });
            }
            f.scaled(spec.amplitude)
        }
    };
    Ok(field)
}

/// Generate with an arbitrary vertical profile; rejects profiles that do not
/// vanish at the wall.
pub fn generate_custom_profile(
    grid: &Arc<FieldGrid>,
    modes: &[(usize, f64)],
    amplitude: f64,
    profile: impl Fn(f64) -> f64,
) -> Result<ScalarField> {
    let trace = profile(0.0).abs();
    if trace != 0.0 {
        return Err(Error::IncompatibleData { residual: trace });
    }
    Ok(ScalarField::from_fn(grid, |x, y| {
        let s: f64 = modes.iter().map(|&(k, ph)| (k as f64 * x + ph).sin()).sum();
        amplitude * s * profile(y)
    }))
}

/// Store a data field in the shared dump format (time stamp 0).
pub fn store(path: &Path, field: &ScalarField) -> Result<()> {
    grid::write_field(path, field, 0.0)
}

/// Load a data field, enforcing grid agreement.
pub fn load(path: &Path, grid: &Arc<FieldGrid>) -> Result<ScalarField> {
    Ok(grid::read_field(path, grid)?.0)
}
