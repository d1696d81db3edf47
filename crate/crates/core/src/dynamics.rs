//! Time evolution of the first-order system
//!
//! ```text
//!   du/dt   = phi - u du/dx - v du/dy,        v = -int_0^y du/dx,
//!   dphi/dt = (d2u/dy2 - phi) / eta,
//! ```
//!
//! together with the auxiliary fields: the vertical primitive `f` of the
//! transported field `U` (so `U = df/dy`), evolved by
//! `(d/dt + u dx + v dy) f = -dv/dx` with `f(x,0) = 0` and `f = 0` at `t = 0`,
//! and an evolved copy of `lambda`. The algebraic combination
//! `lambda = du/dx - (du/dy) f` is definitional and is what downstream norm
//! evaluation consumes; the evolved copy exists purely as a consistency
//! oracle for the derived transport equation
//! `dlambda/dt = -u dlambda/dx - v dlambda/dy + dphi/dx - (du/dx)^2 - (dphi/dy) f`.
//!
//! Stepping is classical RK4 with boundary re-injection after every stage and
//! an adaptive step from the CFL bound
//! `dt <= safety * min(dx / max|u|, dy_min / max|v|, sqrt(eta) * dy_min / 2)`;
//! the last term is the vertical wave limit of the relaxation system, whose
//! characteristic speed is `1/sqrt(eta)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, ScalarField};

/// Smallest relaxation parameter the explicit scheme accepts; below this the
/// `-phi/eta` term is too stiff for RK4 at practical step sizes.
pub const ETA_MIN: f64 = 0.05;

/// Complete prognostic state at one instant. The normal velocity and the
/// transported field `U` are derived quantities; see [`StateSnapshot::velocity_v`]
/// and [`StateSnapshot::uaux`].
#[derive(Debug, Clone)]
pub struct StateSnapshot {
    pub t: f64,
    pub eta: f64,
    pub u: ScalarField,
    pub phi: ScalarField,
    /// Vertical primitive of the transported auxiliary field.
    pub f: ScalarField,
    /// Evolved copy of lambda (consistency oracle only).
    pub lambda: ScalarField,
}

impl StateSnapshot {
    pub fn grid(&self) -> &Arc<FieldGrid> {
        &self.u.grid
    }

    /// Normal velocity `v = -int_0^y du/dx`; vanishes at the wall by
    /// construction of the integral operator.
    pub fn velocity_v(&self) -> Result<ScalarField> {
        Ok(self.u.dx()?.vertical_integral()?.scaled(-1.0))
    }

    /// Transported auxiliary field `U = df/dy`.
    pub fn uaux(&self) -> Result<ScalarField> {
        self.f.dy()
    }

    /// Definitional combination `lambda = du/dx - (du/dy) f`.
    pub fn lambda_algebraic(&self) -> Result<ScalarField> {
        let transport = self.u.dy()?.mul_dealiased(&self.f)?;
        self.u.dx()?.sub(&transport)
    }

    /// `||lambda_evolved - lambda_algebraic|| / (||lambda_algebraic|| + eps)`.
    pub fn lambda_defect(&self) -> Result<f64> {
        let alg = self.lambda_algebraic()?;
        let diff = self.lambda.sub(&alg)?.weighted_l2(0.0);
        Ok(diff / (alg.weighted_l2(0.0) + f64::EPSILON))
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.phi, &self.f, &self.lambda]
            .iter()
            .all(|f| f.values.iter().all(|v| v.is_finite()))
    }

    fn apply_boundaries(&mut self) {
        self.u.set_wall_zero();
        self.u.set_top_zero();
        self.phi.set_wall_zero();
        self.f.set_wall_zero();
    }

    /// Largest boundary-condition violation over the wall nodes of `u`, `phi`,
    /// `f` and the top nodes of `u`.
    pub fn boundary_residual(&self) -> f64 {
        let top = (0..self.u.grid.nx)
            .fold(0.0f64, |a, i| a.max(self.u.values[[i, self.u.grid.ny - 1]].abs()));
        self.u
            .boundary_residual()
            .max(self.phi.boundary_residual())
            .max(self.f.boundary_residual())
            .max(top)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Config(format!("eta must lie in (0, 1], got {eta}")));
    }
    if eta < ETA_MIN {
        return Err(Error::Config(format!(
            "eta = {eta} is below {ETA_MIN}; the explicit scheme cannot handle the relaxation stiffness"
        )));
    }
    Ok(())
}

/// Build the initial snapshot from position and velocity data `(u0, u1)`:
/// `phi0 = u1 + u0 du0/dx - (du0/dy) int_0^y du0/dx`, `f0 = 0`,
/// `lambda0 = du0/dx`. Rejects data violating the wall conditions.
pub fn make_initial_state(u0: &ScalarField, u1: &ScalarField, eta: f64) -> Result<StateSnapshot> {
    check_eta(eta)?;
    u0.assert_finite("initial u0")?;
    u1.assert_finite("initial u1")?;
    let residual = u0.boundary_residual().max(u1.boundary_residual());
    if residual > 1e-12 {
        return Err(Error::IncompatibleData { residual });
    }
    let du0_dx = u0.dx()?;
    let v0 = du0_dx.vertical_integral()?.scaled(-1.0);
    let phi0 = u1
        .add(&u0.mul_dealiased(&du0_dx)?)?
        .add(&v0.mul_dealiased(&u0.dy()?)?)?;
    let mut s = StateSnapshot {
        t: 0.0,
        eta,
        phi: phi0,
        f: ScalarField::zeros(&u0.grid),
        lambda: du0_dx,
        u: u0.clone(),
    };
    s.apply_boundaries();
    Ok(s)
}

/// Optional source terms on the `u` and `phi` equations (method of
/// manufactured solutions); evaluated pointwise at each RK stage time.
pub trait Forcing {
    fn force_u(&self, x: f64, y: f64, t: f64) -> f64;
    fn force_phi(&self, x: f64, y: f64, t: f64) -> f64;
}

/// Tendencies of all prognostic fields at one instant.
#[derive(Debug, Clone)]
pub struct Tendencies {
    pub u: ScalarField,
    pub phi: ScalarField,
    pub f: ScalarField,
    pub lambda: ScalarField,
}

/// Tendencies of `(u, phi)` only.
pub fn rhs_main(s: &StateSnapshot) -> Result<(ScalarField, ScalarField)> {
    let all = rhs_all(s, None)?;
    Ok((all.u, all.phi))
}

/// Tendency of the vertical primitive `f`.
pub fn rhs_aux_f(s: &StateSnapshot) -> Result<ScalarField> {
    Ok(rhs_all(s, None)?.f)
}

/// Tendency of the evolved lambda copy.
pub fn rhs_lambda(s: &StateSnapshot) -> Result<ScalarField> {
    Ok(rhs_all(s, None)?.lambda)
}

/// All tendencies in one pass (shares `v` and the velocity gradients).
pub fn rhs_all(s: &StateSnapshot, forcing: Option<(&dyn Forcing, f64)>) -> Result<Tendencies> {
    let blow = |e: Error| match e {
        Error::Domain(msg) => Error::Blowup { t: s.t, context: msg },
        other => other,
    };
    let inner = || -> Result<Tendencies> {
        let du_dx = s.u.dx()?;
        let du_dy = s.u.dy()?;
        let v = du_dx.vertical_integral()?.scaled(-1.0);

        let mut du_dt = s
            .phi
            .sub(&s.u.mul_dealiased(&du_dx)?)?
            .sub(&v.mul_dealiased(&du_dy)?)?;
        let mut dphi_dt = du_dy.dy()?.sub(&s.phi)?.scaled(1.0 / s.eta);

        let df_dt = v
            .dx()?
            .scaled(-1.0)
            .sub(&s.u.mul_dealiased(&s.f.dx()?)?)?
            .sub(&v.mul_dealiased(&s.f.dy()?)?)?;

        let dlam_dt = s
            .phi
            .dx()?
            .sub(&du_dx.mul_dealiased(&du_dx)?)?
            .sub(&s.phi.dy()?.mul_dealiased(&s.f)?)?
            .sub(&s.u.mul_dealiased(&s.lambda.dx()?)?)?
            .sub(&v.mul_dealiased(&s.lambda.dy()?)?)?;

        if let Some((force, t)) = forcing {
            let g = s.grid();
            du_dt = du_dt.add(&ScalarField::from_fn(g, |x, y| force.force_u(x, y, t)))?;
            dphi_dt = dphi_dt.add(&ScalarField::from_fn(g, |x, y| force.force_phi(x, y, t)))?;
        }
        Ok(Tendencies { u: du_dt, phi: dphi_dt, f: df_dt, lambda: dlam_dt })
    };
    inner().map_err(blow)
}

/// Residual of the transport relation for `U = df/dy`:
/// `dU/dt + u dU/dx + v dU/dy - dlambda/dx - (d2u/dxdy) f - (du/dx) U`,
/// with `dU/dt` supplied by the caller (finite difference in time).
pub fn uaux_relation_rhs(s: &StateSnapshot) -> Result<ScalarField> {
    let uaux = s.uaux()?;
    let du_dx = s.u.dx()?;
    let v = du_dx.vertical_integral()?.scaled(-1.0);
    let lambda = s.lambda_algebraic()?;
    lambda
        .dx()?
        .add(&du_dx.dy()?.mul_dealiased(&s.f)?)?
        .add(&du_dx.mul_dealiased(&uaux)?)?
        .sub(&s.u.mul_dealiased(&uaux.dx()?)?)?
        .sub(&v.mul_dealiased(&uaux.dy()?)?)
}

#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub dt: f64,
    pub halvings: u32,
}

/// Adaptive RK4 driver.
#[derive(Debug, Clone)]
pub struct TimeStepper {
    pub cfl_safety: f64,
    pub dt_max: f64,
}

impl TimeStepper {
    pub fn new(cfl_safety: f64, dt_max: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1], got {cfl_safety}")));
        }
        if !(dt_max > 0.0) {
            return Err(Error::Config(format!("dt_max must be positive, got {dt_max}")));
        }
        Ok(TimeStepper { cfl_safety, dt_max })
    }

    /// CFL-limited step size for the current state.
    pub fn cfl_dt(&self, s: &StateSnapshot) -> Result<f64> {
        let g = s.grid();
        let umax = s.u.max_abs();
        let vmax = s.velocity_v()?.max_abs();
        let dy = g.dy_min();
        // vertical waves travel at 1/sqrt(eta); the factor 1/2 absorbs the
        // spread of spurious Chebyshev eigenvalues beyond the physical ones
        let mut dt = 0.5 * s.eta.sqrt() * dy;
        if umax > 0.0 {
            dt = dt.min(g.dx() / umax);
        }
        if vmax > 0.0 {
            dt = dt.min(dy / vmax);
        }
        Ok(self.cfl_safety * dt)
    }

    /// One adaptive step; halves the step up to 8 times before declaring blowup.
    pub fn step(&self, s: &StateSnapshot) -> Result<(StateSnapshot, StepInfo)> {
        if !s.is_finite() {
            return Err(Error::Blowup { t: s.t, context: "non-finite state".into() });
        }
        let mut dt = self.cfl_dt(s)?.min(self.dt_max);
        for halvings in 0..=8u32 {
            match rk4(s, dt, None) {
                Ok(next) if next.is_finite() => {
                    return Ok((next, StepInfo { dt, halvings }));
                }
                _ => dt *= 0.5,
            }
        }
        Err(Error::Blowup {
            t: s.t,
            context: "step rejected after 8 halvings of the CFL step".into(),
        })
    }

    /// Fixed-step RK4, optionally forced (convergence studies).
    pub fn step_fixed_dt(
        &self,
        s: &StateSnapshot,
        dt: f64,
        forcing: Option<&dyn Forcing>,
    ) -> Result<StateSnapshot> {
        let next = rk4(s, dt, forcing)?;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::Blowup { t: s.t, context: format!("non-finite state after dt = {dt}") })
        }
    }
}

fn stage_state(base: &StateSnapshot, k: &Tendencies, c: f64, t: f64) -> StateSnapshot {
    let mut s = base.clone();
    s.t = t;
    s.u.axpy(c, &k.u);
    s.phi.axpy(c, &k.phi);
    s.f.axpy(c, &k.f);
    s.lambda.axpy(c, &k.lambda);
    s.apply_boundaries();
    s
}

fn rk4(s: &StateSnapshot, dt: f64, forcing: Option<&dyn Forcing>) -> Result<StateSnapshot> {
    let at = |t: f64| forcing.map(|f| (f, t));
    let h = dt / 2.0;
    let k1 = rhs_all(s, at(s.t))?;
    let s2 = stage_state(s, &k1, h, s.t + h);
    let k2 = rhs_all(&s2, at(s.t + h))?;
    let s3 = stage_state(s, &k2, h, s.t + h);
    let k3 = rhs_all(&s3, at(s.t + h))?;
    let s4 = stage_state(s, &k3, dt, s.t + dt);
    let k4 = rhs_all(&s4, at(s.t + dt))?;

    let mut next = s.clone();
    next.t = s.t + dt;
    for (field, parts) in [
        (&mut next.u, [&k1.u, &k2.u, &k3.u, &k4.u]),
        (&mut next.phi, [&k1.phi, &k2.phi, &k3.phi, &k4.phi]),
        (&mut next.f, [&k1.f, &k2.f, &k3.f, &k4.f]),
        (&mut next.lambda, [&k1.lambda, &k2.lambda, &k3.lambda, &k4.lambda]),
    ] {
        field.axpy(dt / 6.0, parts[0]);
        field.axpy(dt / 3.0, parts[1]);
        field.axpy(dt / 3.0, parts[2]);
        field.axpy(dt / 6.0, parts[3]);
        *field = field.y_filtered();
    }
    next.apply_boundaries();
    Ok(next)
}
