//! Physical and scaling parameters, the interaction potential and envelope,
//! initial wave packets, and the mode-coupling matrix V_{nm}(R).
//!
//! Scaling conventions: ℏ = ε², m = ε, ω = 1/ε, σ = γ = δ = ε, λ = ε², M = 1.
//! The test-particle carrier momentum is ±v₀/ε² and the oscillator levels are
//! ε(n + 1/2), so one oscillator quantum trades against an O(ε)-small
//! momentum change of the particle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::HermiteTable;
use crate::error::{Error, Result};
use crate::spectral::{Field, OscillatoryQuad, SpatialGrid, TailBound};

/// Sign of the carrier momentum of the initial packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// All scaling and scenario parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub v0: f64,
    pub r0: f64,
    pub a: f64,
    pub branch: Branch,
    pub t_final: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if self.v0 <= 0.0 {
            return Err(Error::InvalidInput("v0 must be positive".into()));
        }
        if self.t_final < 0.0 {
            return Err(Error::InvalidInput("t must be nonnegative".into()));
        }
        Ok(())
    }

    /// Classical impact time τ = |R₀ − a| / v₀.
    pub fn impact_time(&self) -> f64 {
        (self.r0 - self.a).abs() / self.v0
    }

    /// Whether the packet actually crosses the oscillator (the phase of the
    /// interaction integrals then has a critical point inside the domain).
    pub fn is_stationary(&self) -> bool {
        match self.branch {
            Branch::Plus => self.r0 < self.a,
            Branch::Minus => self.r0 > self.a,
        }
    }

    pub fn carrier_momentum(&self) -> f64 {
        self.branch.sign() * self.v0 / (self.epsilon * self.epsilon)
    }

    /// Stationary scenario defaults: the packet hits the oscillator and t > τ.
    pub fn stationary_default(epsilon: f64) -> Self {
        Self { epsilon, v0: 1.0, r0: 0.5, a: 1.0, branch: Branch::Plus, t_final: 1.0 }
    }

    /// Non-stationary defaults: same geometry but starting past the oscillator.
    pub fn nonstationary_default(epsilon: f64) -> Self {
        Self { epsilon, v0: 1.0, r0: 1.5, a: 1.0, branch: Branch::Plus, t_final: 1.0 }
    }
}

/// Smooth interaction potential with an analytic Fourier transform and decay
/// certificate. V(x) = amplitude · e^{−x²/(2 width²)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for Potential {
    fn default() -> Self {
        Self { amplitude: 1.0, width: 1.0 }
    }
}

/// Derivatives of e^{−a x²/2} by the recurrence D_j = −a(x·D_{j−1} + (j−1)·D_{j−2}).
fn gaussian_derivs(a: f64, x: f64, up_to: usize) -> Vec<f64> {
    let mut d = vec![0.0; up_to + 1];
    d[0] = (-0.5 * a * x * x).exp();
    if up_to >= 1 {
        d[1] = -a * x * d[0];
    }
    for j in 2..=up_to {
        d[j] = -a * (x * d[j - 1] + (j as f64 - 1.0) * d[j - 2]);
    }
    d
}

impl Potential {
    pub fn zero() -> Self {
        Self { amplitude: 0.0, width: 1.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    pub fn v(&self, x: f64) -> f64 {
        self.amplitude * (-0.5 * x * x / (self.width * self.width)).exp()
    }

    /// V̂(ξ) = amplitude · width · e^{−width² ξ²/2} under f̂ = (2π)^{-1/2}∫f e^{-iξx}.
    pub fn v_hat(&self, xi: f64) -> f64 {
        self.amplitude * self.width * (-0.5 * self.width * self.width * xi * xi).exp()
    }

    pub fn v_hat_deriv(&self, j: usize, xi: f64) -> f64 {
        self.amplitude * self.width * gaussian_derivs(self.width * self.width, xi, j)[j]
    }

    pub fn v_deriv(&self, j: usize, x: f64) -> f64 {
        self.amplitude * gaussian_derivs(1.0 / (self.width * self.width), x, j)[j]
    }

    pub fn sup(&self) -> f64 {
        self.amplitude.abs()
    }

    /// Decay certificate for ξ-integrals weighted by V̂.
    pub fn v_hat_tail(&self) -> TailBound {
        TailBound::Gaussian {
            amp: (self.amplitude * self.width).abs(),
            a: 0.5 * self.width * self.width,
        }
    }
}

/// L²-normalized envelope η(x) = π^{-1/4} e^{−x²/2}, with analytic
/// derivatives and Fourier transform (itself).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope;

impl Envelope {
    pub fn eval(&self, x: f64) -> f64 {
        PI.powf(-0.25) * (-0.5 * x * x).exp()
    }

    pub fn deriv(&self, j: usize, x: f64) -> f64 {
        PI.powf(-0.25) * gaussian_derivs(1.0, x, j)[j]
    }

    pub fn hat(&self, w: f64) -> f64 {
        self.eval(w)
    }

    pub fn tail(&self) -> TailBound {
        TailBound::Gaussian { amp: PI.powf(-0.25), a: 0.5 }
    }
}

/// Full model: scenario parameters plus the interaction and envelope shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ModelParams,
    pub potential: Potential,
    pub envelope: Envelope,
}

impl Model {
    pub fn new(params: ModelParams, potential: Potential) -> Self {
        Self { params, potential, envelope: Envelope }
    }
}

/// ψ±_ε(R) = ε^{-1/2} e^{±i v₀ R/ε²} η(ε^{-1}(R − R₀)) on the grid, for a
/// packet centered at `center`.
pub fn packet(
    grid: SpatialGrid,
    epsilon: f64,
    v0: f64,
    center: f64,
    branch: Branch,
    envelope: &Envelope,
) -> Result<Field> {
    let lambda = TAU * epsilon * epsilon / v0;
    let pts_per_wavelength = lambda / grid.dx;
    if pts_per_wavelength < 4.0 {
        let needed = (4.0 * grid.length() / lambda).ceil() as usize;
        return Err(Error::Resolution(format!(
            "carrier wavelength {lambda:.3e} has {pts_per_wavelength:.2} points per period; \
             need at least 4 ({} grid points for this domain)",
            needed.next_power_of_two()
        )));
    }
    let k0 = branch.sign() * v0 / (epsilon * epsilon);
    let amp = epsilon.powf(-0.5);
    Ok(Field::from_fn(grid, |r| {
        C64::from_polar(amp * envelope.eval((r - center) / epsilon), k0 * r)
    }))
}

/// The coupling matrix element V_{nm}(R) = ∫ φ_n(x) φ_m(x) V(ε^{-1}(R−a) − x) dx,
/// by direct quadrature on the Hermite table's grid.
pub fn coupling_matrix(model: &Model, table: &HermiteTable, n: usize, m: usize, r: f64) -> f64 {
    let u = (r - model.params.a) / model.params.epsilon;
    let dx = table.grid.dx;
    let phi_n = table.phi(n);
    let phi_m = table.phi(m);
    let mut acc = 0.0;
    for (j, x) in table.grid.points().enumerate() {
        acc += phi_n[j] * phi_m[j] * model.potential.v(u - x);
    }
    acc * dx
}

/// Same element through the Fourier route,
/// ∫ V̂(ξ) · (2π)^{-1/2} D_{nm}(ξ) · e^{iξ(R−a)/ε} dξ; agrees with the direct
/// quadrature for real smooth V.
pub fn coupling_matrix_fourier(model: &Model, n: usize, m: usize, r: f64) -> Result<f64> {
    let u = (r - model.params.a) / model.params.epsilon;
    let q = OscillatoryQuad { step: 0.02, tol: 1e-13, max_window: 80.0 };
    let tail = model.potential.v_hat_tail();
    let v = q.integrate(
        |xi| {
            model.potential.v_hat(xi)
                * crate::basis::displacement_element(n, m, xi)
                * C64::from_polar((TAU).powf(-0.5), xi * u)
        },
        tail,
    )?;
    Ok(v.re)
}

/// Weighted Sobolev-type norm Σ_{j≤k} ‖f^{(j)} ⟨·⟩^{k−j}‖_{L^p}, p ∈ {1,2,∞},
/// by quadrature on [-x_max, x_max]. Reports non-convergence when the tail
/// beyond the window contributes more than 1% of the value.
pub fn weighted_norm(
    f: &dyn Fn(usize, f64) -> f64,
    k: usize,
    p: f64,
    x_max: f64,
    n_points: usize,
) -> Result<f64> {
    if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
        return Err(Error::InvalidInput("p must be 1, 2, or ∞".into()));
    }
    let h = 2.0 * x_max / (n_points - 1) as f64;
    let mut total = 0.0;
    for j in 0..=k {
        let weight_pow = (k - j) as f64;
        let term = |x: f64| f(j, x).abs() * (1.0 + x * x).sqrt().powf(weight_pow);
        if p.is_infinite() {
            let mut sup = 0.0_f64;
            for i in 0..n_points {
                sup = sup.max(term(-x_max + i as f64 * h));
            }
            total += sup;
        } else {
            let mut acc = 0.0;
            let mut edge = 0.0_f64;
            for i in 0..n_points {
                let x = -x_max + i as f64 * h;
                let v = term(x).powf(p);
                if i == 0 || i == n_points - 1 {
                    acc += 0.5 * v;
                    edge = edge.max(v);
                } else {
                    acc += v;
                }
            }
            let integral = acc * h;
            // crude tail estimate: edge value times a unit of further decay length
            if edge * x_max > 0.01 * integral && integral > 0.0 {
                return Err(Error::Accuracy(format!(
                    "weighted norm tail beyond |x| = {x_max} exceeds 1% of the value"
                )));
            }
            total += integral.powf(1.0 / p);
        }
    }
    Ok(total)
}

/// Initial product state: every mode empty except f₀ = ψ±_ε.
pub fn initial_mode_fields(
    model: &Model,
    grid: SpatialGrid,
    n_max: usize,
) -> Result<Vec<Field>> {
    let p = model.params;
    p.validate()?;
    let f0 = packet(grid, p.epsilon, p.v0, p.r0, p.branch, &model.envelope)?;
    let norm = f0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Resolution(format!(
            "initial packet norm {norm} deviates from 1 beyond 1e-8; grid under-resolved"
        )));
    }
    let mut fields = vec![Field::zeros(grid); n_max + 1];
    fields[0] = f0;
    Ok(fields)
}
