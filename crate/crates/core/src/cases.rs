//! Manufactured solutions with constant coefficients.
//!
//! Every case fixes `A`, `beta`, `gamma` and a smooth `u` vanishing on the
//! boundary of the unit square; the source is
//! `f = du/dt - div(A grad u) + beta . grad u + gamma u`.

use std::f64::consts::PI;

use crate::assembly::PdeCoefficients;
use crate::{DpgError, Point, Result};

pub const CASE_IDS: [&str; 4] = ["heat-decay", "adr-decay", "stationary-adr", "aniso"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `sin(pi x) sin(pi y)`
    SineProduct,
    /// `x (1 - x) y (1 - y)`
    Bubble,
}

impl Profile {
    pub fn value(self, x: Point) -> f64 {
        match self {
            Profile::SineProduct => (PI * x[0]).sin() * (PI * x[1]).sin(),
            Profile::Bubble => x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]),
        }
    }

    pub fn gradient(self, x: Point) -> Point {
        match self {
            Profile::SineProduct => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                [PI * cx * sy, PI * sx * cy]
            }
            Profile::Bubble => [
                (1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
                x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
            ],
        }
    }

    pub fn hessian(self, x: Point) -> [[f64; 2]; 2] {
        match self {
            Profile::SineProduct => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                let d = -PI * PI * sx * sy;
                let m = PI * PI * cx * cy;
                [[d, m], [m, d]]
            }
            Profile::Bubble => {
                let m = (1.0 - 2.0 * x[0]) * (1.0 - 2.0 * x[1]);
                [[-2.0 * x[1] * (1.0 - x[1]), m], [m, -2.0 * x[0] * (1.0 - x[0])]]
            }
        }
    }
}

/// A manufactured problem `u(t, x) = tau(t) phi(x)` with `tau = e^{-t}` or `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeCase {
    pub id: String,
    pub diffusion: [[f64; 2]; 2],
    pub advection: Point,
    pub reaction: f64,
    pub profile: Profile,
    pub decays: bool,
}

impl PdeCase {
    pub fn from_id(id: &str) -> Result<Self> {
        let identity = [[1.0, 0.0], [0.0, 1.0]];
        let (diffusion, advection, reaction, profile, decays) = match id {
            "heat-decay" => (identity, [0.0, 0.0], 0.0, Profile::SineProduct, true),
            "adr-decay" => (identity, [1.0, 0.5], 1.0, Profile::SineProduct, true),
            "stationary-adr" => (identity, [1.0, 0.5], 1.0, Profile::SineProduct, false),
            "aniso" => ([[2.0, 0.5], [0.5, 1.0]], [0.3, -0.2], 0.5, Profile::Bubble, true),
            other => return Err(DpgError::UnknownCase(other.to_string())),
        };
        Ok(PdeCase {
            id: id.to_string(),
            diffusion,
            advection,
            reaction,
            profile,
            decays,
        })
    }

    pub fn coefficients(&self, time_step: f64, end_time: f64) -> PdeCoefficients {
        PdeCoefficients {
            diffusion: self.diffusion,
            advection: self.advection,
            reaction: self.reaction,
            time_step,
            end_time,
        }
    }

    fn time_factor(&self, t: f64) -> f64 {
        if self.decays {
            (-t).exp()
        } else {
            1.0
        }
    }

    pub fn u(&self, t: f64, x: Point) -> f64 {
        self.time_factor(t) * self.profile.value(x)
    }

    pub fn grad_u(&self, t: f64, x: Point) -> Point {
        let tau = self.time_factor(t);
        let g = self.profile.gradient(x);
        [tau * g[0], tau * g[1]]
    }

    pub fn u_dot(&self, t: f64, x: Point) -> f64 {
        if self.decays {
            -self.u(t, x)
        } else {
            0.0
        }
    }

    /// The diffusive flux `A grad u`, whose normal component is the trace unknown.
    pub fn flux(&self, t: f64, x: Point) -> Point {
        let g = self.grad_u(t, x);
        let a = self.diffusion;
        [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]]
    }

    pub fn source(&self, t: f64, x: Point) -> f64 {
        let h = self.profile.hessian(x);
        let a = self.diffusion;
        let div_flux = self.time_factor(t)
            * (a[0][0] * h[0][0] + a[0][1] * h[1][0] + a[1][0] * h[0][1] + a[1][1] * h[1][1]);
        let g = self.grad_u(t, x);
        self.u_dot(t, x) - div_flux
            + self.advection[0] * g[0]
            + self.advection[1] * g[1]
            + self.reaction * self.u(t, x)
    }
}
