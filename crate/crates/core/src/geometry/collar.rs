//! Smoothing collars of a boundary point in C² = R⁴.
//!
//! Local real coordinates are `x = (x1, y1, x2, y2)` with `z1 = x1 + i y1`,
//! `z2 = x2 + i y2`, the base point at the origin and the inner normal along
//! `-x1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::C64;

pub type Vec4 = [f64; 4];

/// Value and gradient of a remainder term.
pub type RemainderFn = dyn Fn(Vec4) -> (f64, Vec4) + Send + Sync;

/// Remainder of the local defining function beyond its quadratic model.
#[derive(Clone)]
pub struct Remainder {
    pub eval: Arc<RemainderFn>,
    /// Declared bound on the C² norm of the remainder on the collar.
    pub c2_bound: f64,
}

impl fmt::Debug for Remainder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Remainder").field("c2_bound", &self.c2_bound).finish()
    }
}

/// Local defining function `ρ(x) = x1 + ½ xᵀHx + R(x)`.
#[derive(Clone, Debug)]
pub struct RhoModel {
    pub hessian: [[f64; 4]; 4],
    pub remainder: Option<Remainder>,
    /// Radius of the internally tangent ball at the base point.
    pub tangent_radius: f64,
}

impl RhoModel {
    /// The tangent ball itself: `ρ = φ`.
    pub fn ball(r: f64) -> Self {
        let mut h = [[0.0; 4]; 4];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1.0 / r;
        }
        RhoModel { hessian: h, remainder: None, tangent_radius: r }
    }

    /// `ρ = φ + c·x1²`.
    pub fn perturbed_ball(r: f64, c: f64) -> Self {
        let mut m = Self::ball(r);
        m.hessian[0][0] += 2.0 * c;
        m
    }

    pub fn with_remainder(mut self, remainder: Remainder) -> Self {
        self.remainder = Some(remainder);
        self
    }

    pub fn value_grad(&self, x: Vec4) -> (f64, Vec4) {
        let mut hx = [0.0; 4];
        for (i, row) in self.hessian.iter().enumerate() {
            hx[i] = (0..4).map(|j| row[j] * x[j]).sum();
        }
        let mut v = x[0] + 0.5 * (0..4).map(|i| x[i] * hx[i]).sum::<f64>();
        let mut g = [1.0 + hx[0], hx[1], hx[2], hx[3]];
        if let Some(rem) = &self.remainder {
            let (rv, rg) = (rem.eval)(x);
            v += rv;
            for i in 0..4 {
                g[i] += rg[i];
            }
        }
        (v, g)
    }

    pub fn value(&self, x: Vec4) -> f64 {
        self.value_grad(x).0
    }
}

/// Rigid frame placing the local coordinates in ambient C²:
/// `z1 = P1 + local z1`, `z2 = P2 + e^{iθ} local z2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: [C64; 2],
    pub phase: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame { origin: [C64::new(0.0, 0.0); 2], phase: 0.0 }
    }
}

impl Frame {
    pub fn to_local(&self, p: [C64; 2]) -> [C64; 2] {
        let rot = C64::from_polar(1.0, -self.phase);
        [p[0] - self.origin[0], (p[1] - self.origin[1]) * rot]
    }

    pub fn to_ambient(&self, p: [C64; 2]) -> [C64; 2] {
        let rot = C64::from_polar(1.0, self.phase);
        [p[0] + self.origin[0], p[1] * rot + self.origin[1]]
    }
}

pub fn to_vec4(p: [C64; 2]) -> Vec4 {
    [p[0].re, p[0].im, p[1].re, p[1].im]
}

pub fn norm4(x: Vec4) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radial C² bump: 1 on `s <= 1`, 0 on `s >= 2`, quintic smoothstep between.
pub fn psi(s: f64) -> (f64, f64) {
    if s <= 1.0 {
        (1.0, 0.0)
    } else if s >= 2.0 {
        (0.0, 0.0)
    } else {
        let u = s - 1.0;
        let v = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let dv = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        (1.0 - v, -dv)
    }
}

/// The collar `ρ_ε = φ + ψ_ε (ρ − φ)` around a boundary point.
#[derive(Clone, Debug)]
pub struct SmoothedCollar {
    pub frame: Frame,
    pub rho: RhoModel,
    pub epsilon: f64,
    /// Largest sampled `|dρ_ε − dφ|` on `|x| <= 2ε`.
    pub max_deviation: f64,
}

/// Grid size per sampled coordinate plane in the collar check.
pub const COLLAR_GRID: usize = 200;

impl SmoothedCollar {
    /// Validates the normalization of `rho` and the gradient condition on
    /// `200 × 200` grids in the coordinate planes through `x1`.
    pub fn new(rho: RhoModel, frame: Frame, epsilon: f64) -> Result<Self> {
        let r = rho.tangent_radius;
        if !(r > 0.0) {
            return Err(Error::invalid("tangent radius must be positive"));
        }
        if !(epsilon > 0.0) || epsilon >= r / 4.0 {
            return Err(Error::invalid(format!(
                "epsilon = {epsilon} must lie in (0, r/4) with r = {r}"
            )));
        }
        let (v0, g0) = rho.value_grad([0.0; 4]);
        let e1 = [1.0, 0.0, 0.0, 0.0];
        if v0.abs() > 1e-12 || (0..4).any(|i| (g0[i] - e1[i]).abs() > 1e-12) {
            return Err(Error::invalid("rho is not normalized: need rho(0)=0, d rho(0)=e1"));
        }
        let mut collar = SmoothedCollar { frame, rho, epsilon, max_deviation: 0.0 };
        let mut worst = (0.0f64, [0.0; 4]);
        let n = COLLAR_GRID;
        let span = 2.0 * epsilon;
        for plane in 1..4 {
            for i in 0..n {
                for j in 0..n {
                    let a = -span + 2.0 * span * i as f64 / (n - 1) as f64;
                    let b = -span + 2.0 * span * j as f64 / (n - 1) as f64;
                    let mut x = [0.0; 4];
                    x[0] = a;
                    x[plane] = b;
                    if norm4(x) > span {
                        continue;
                    }
                    let d = collar.gradient_deviation(x);
                    if d > worst.0 {
                        worst = (d, x);
                    }
                }
            }
        }
        if worst.0 > 0.25 {
            return Err(Error::CollarViolation { point: worst.1, value: worst.0 });
        }
        collar.max_deviation = worst.0;
        Ok(collar)
    }

    pub fn tangent_radius(&self) -> f64 {
        self.rho.tangent_radius
    }

    /// Ball defining function and its gradient.
    pub fn phi(&self, x: Vec4) -> (f64, Vec4) {
        let r = self.tangent_radius();
        let v = x[0] + (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]) / (2.0 * r);
        (v, [(x[0] + r) / r, x[1] / r, x[2] / r, x[3] / r])
    }

    /// `ρ_ε` and its gradient.
    pub fn rho_eps(&self, x: Vec4) -> (f64, Vec4) {
        let (p, dp) = self.phi(x);
        let (q, dq) = self.rho.value_grad(x);
        let s = norm4(x);
        let (w, dw) = psi(s / self.epsilon);
        let mut g = [0.0; 4];
        for i in 0..4 {
            let ds = if s > 0.0 { x[i] / (s * self.epsilon) } else { 0.0 };
            g[i] = dp[i] + w * (dq[i] - dp[i]) + (q - p) * dw * ds;
        }
        (p + w * (q - p), g)
    }

    /// `|dρ_ε − dφ|` at `x`.
    pub fn gradient_deviation(&self, x: Vec4) -> f64 {
        let (_, dp) = self.phi(x);
        let (_, dr) = self.rho_eps(x);
        norm4([dr[0] - dp[0], dr[1] - dp[1], dr[2] - dp[2], dr[3] - dp[3]])
    }

    /// Distance from `x` to the zero set `{ρ = 0}` and the foot point, via
    /// Gauss-Newton on the graph `x1 = g(y1, x2, y2)`.
    pub fn distance_to_boundary(&self, x: Vec4) -> (f64, Vec4) {
        let mut u = [x[1], x[2], x[3]];
        let mut foot = [0.0; 4];
        for _ in 0..100 {
            let x1 = self.graph(u, foot[0]);
            foot = [x1, u[0], u[1], u[2]];
            let (_, g) = self.rho.value_grad(foot);
            let grad_g = [-g[1] / g[0], -g[2] / g[0], -g[3] / g[0]];
            let res0 = x1 - x[0];
            let res_u = [u[0] - x[1], u[1] - x[2], u[2] - x[3]];
            // Jᵀr with J = [∇g; I].
            let rhs: Vec<f64> = (0..3).map(|k| grad_g[k] * res0 + res_u[k]).collect();
            // (I + a aᵀ)⁻¹ b = b − a (aᵀb)/(1 + aᵀa).
            let aa: f64 = grad_g.iter().map(|v| v * v).sum();
            let ab: f64 = (0..3).map(|k| grad_g[k] * rhs[k]).sum();
            let step: Vec<f64> = (0..3).map(|k| -(rhs[k] - grad_g[k] * ab / (1.0 + aa))).collect();
            for k in 0..3 {
                u[k] += step[k];
            }
            if step.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-15 {
                break;
            }
        }
        let x1 = self.graph(u, foot[0]);
        foot = [x1, u[0], u[1], u[2]];
        let d = norm4([x[0] - foot[0], x[1] - foot[1], x[2] - foot[2], x[3] - foot[3]]);
        (d, foot)
    }

    /// Solves `ρ(x1, u) = 0` for `x1` by Newton from `start`.
    pub fn graph(&self, u: [f64; 3], start: f64) -> f64 {
        let mut x1 = start;
        for _ in 0..60 {
            let (v, g) = self.rho.value_grad([x1, u[0], u[1], u[2]]);
            let step = v / g[0];
            x1 -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x1
    }
}
