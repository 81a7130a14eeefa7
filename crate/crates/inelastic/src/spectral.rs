//! Uniform periodic grids, discrete Fourier transforms with continuum
//! normalization, the free test-particle propagator, and the special
//! quadratures (principal value, decaying oscillatory integrals) used by the
//! expansion coefficients.
//!
//! Fourier convention, fixed crate-wide: f̂(k) = (2π)^{-1/2} ∫ f(x) e^{-ikx} dx.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = PLANS.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unnormalized in-place DFT, F_m = Σ_j f_j e^{-2πi jm/N}.
pub fn fft_inplace(data: &mut [C64]) {
    plan(data.len(), false).process(data);
}

/// Unnormalized in-place inverse DFT (no 1/N).
pub fn ifft_inplace(data: &mut [C64]) {
    plan(data.len(), true).process(data);
}

/// Uniform periodic spatial grid: points x_j = left + j·dx, j = 0..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub n: usize,
    pub left: f64,
    pub dx: f64,
}

impl SpatialGrid {
    pub fn new(n: usize, left: f64, dx: f64) -> Self {
        assert!(n.is_power_of_two(), "grid size must be a power of two");
        Self { n, left, dx }
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.left + j as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Momentum of DFT bin m, in FFT order (0, dk, …, -dk).
    pub fn k(&self, m: usize) -> f64 {
        let dk = TAU / self.length();
        if m <= self.n / 2 {
            m as f64 * dk
        } else {
            (m as f64 - self.n as f64) * dk
        }
    }

    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// Grid sized for a wave packet of width ε with carrier momentum v0/ε²
    /// travelling for time `t`: the domain covers every initial center with a
    /// 3-unit margin plus the travel distance, the carrier wavelength 2πε²/v0
    /// gets at least `pts_per_wavelength` points, the envelope width ε at
    /// least 8, and the Nyquist momentum is at least twice the carrier.
    pub fn for_packets(
        centers: &[f64],
        moving_left: bool,
        moving_right: bool,
        epsilon: f64,
        v0: f64,
        t: f64,
        pts_per_wavelength: f64,
        max_points: usize,
    ) -> Result<Self> {
        let cmin = centers.iter().cloned().fold(f64::INFINITY, f64::min);
        let cmax = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let left = cmin - 3.0 - if moving_left { v0 * t } else { 0.0 };
        let right = cmax + 3.0 + if moving_right { v0 * t } else { 0.0 };
        let span = right - left;
        let lambda = TAU * epsilon * epsilon / v0;
        let n_carrier = (pts_per_wavelength * span / lambda).ceil();
        let n_envelope = (8.0 * span / epsilon).ceil();
        let n_nyquist = (2.0 * v0 / (epsilon * epsilon) * span / PI).ceil();
        let n_req = n_carrier.max(n_envelope).max(n_nyquist) as usize;
        let n = n_req.next_power_of_two().max(256);
        if n > max_points {
            return Err(Error::Resolution(format!(
                "grid for epsilon = {epsilon} needs {n} points (budget {max_points})"
            )));
        }
        Ok(Self::new(n, left, span / n as f64))
    }
}

/// Complex samples on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: SpatialGrid,
    pub data: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, data: vec![C64::new(0.0, 0.0); grid.n] }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> C64) -> Self {
        let data = grid.points().map(f).collect();
        Self { grid, data }
    }

    /// L² norm with the grid measure, (dx Σ|f_j|²)^{1/2}.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.dx * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// ⟨self, other⟩ = dx Σ conj(self_j)·other_j.
    pub fn inner(&self, other: &Field) -> C64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.dx
            * self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
    }

    pub fn sub(&self, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Continuum Fourier samples f̂(k_m) in FFT bin order.
    ///
    /// Includes the e^{-ik·left} phase so the values are true transform
    /// samples, not bare DFT output.
    pub fn to_momentum(&self) -> Field {
        let mut data = self.data.clone();
        fft_inplace(&mut data);
        let scale = self.grid.dx / TAU.sqrt();
        for (m, z) in data.iter_mut().enumerate() {
            let k = self.grid.k(m);
            *z *= scale * C64::from_polar(1.0, -k * self.grid.left);
        }
        let dk = TAU / self.grid.length();
        Field { grid: SpatialGrid { n: self.grid.n, left: 0.0, dx: dk }, data }
    }

    /// Multiply f̂(k) by `m(k)` and return the position-space field.
    pub fn apply_momentum_multiplier(&self, mult: impl Fn(f64) -> C64) -> Field {
        let mut data = self.data.clone();
        fft_inplace(&mut data);
        for (m, z) in data.iter_mut().enumerate() {
            *z *= mult(self.grid.k(m));
        }
        ifft_inplace(&mut data);
        let inv_n = 1.0 / self.grid.n as f64;
        for z in data.iter_mut() {
            *z *= inv_n;
        }
        Field { grid: self.grid, data }
    }
}

/// e^{-i(t/ε²)h₀^ε} f: the free test-particle evolution, a pure momentum
/// multiplier e^{-i t ε² k²/2}.
pub fn free_propagate(f: &Field, t: f64, epsilon: f64) -> Field {
    let half_eps_sq = 0.5 * t * epsilon * epsilon;
    f.apply_momentum_multiplier(|k| C64::from_polar(1.0, -half_eps_sq * k * k))
}

/// Decay certificate for an integrand on the ξ-axis.
#[derive(Debug, Clone, Copy)]
pub enum TailBound {
    /// |g(ξ)| ≤ amp·e^{-a ξ²} for all ξ.
    Gaussian { amp: f64, a: f64 },
}

impl TailBound {
    /// Bound on ∫_{|ξ|>x} |g|.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            TailBound::Gaussian { amp, a } => {
                if amp == 0.0 {
                    0.0
                } else {
                    amp * (-a * x * x).exp() / (a * x).max(1e-300)
                }
            }
        }
    }

    /// Smallest half-window with tail below `tol`, refusing anything beyond
    /// `max` and reporting the enlargement that would be required.
    pub fn window(&self, tol: f64, max: f64) -> Result<f64> {
        let mut x: f64 = 1.0;
        for _ in 0..240 {
            if self.tail(x) <= tol {
                return if x <= max {
                    Ok(x)
                } else {
                    Err(Error::Accuracy(format!(
                        "tail bound {tol:.2e} needs half-window {x:.1} > allowed {max:.1}; \
                         enlarge the window"
                    )))
                };
            }
            x *= 1.25;
        }
        Err(Error::Accuracy(format!(
            "tail bound not below {tol:.2e} within window {x:.1e}; integrand decays too slowly"
        )))
    }
}

/// Trapezoid quadrature on a symmetric window sized from a tail certificate.
///
/// For smooth integrands with the certified decay the trapezoid rule on a
/// uniform grid is spectrally accurate, so `step` dominates nothing and the
/// window is what the tolerance controls.
#[derive(Debug, Clone, Copy)]
pub struct OscillatoryQuad {
    pub step: f64,
    pub tol: f64,
    pub max_window: f64,
}

impl Default for OscillatoryQuad {
    fn default() -> Self {
        Self { step: 0.05, tol: 1e-13, max_window: 80.0 }
    }
}

impl OscillatoryQuad {
    pub fn integrate(&self, g: impl Fn(f64) -> C64, tail: TailBound) -> Result<C64> {
        let x = tail.window(self.tol, self.max_window)?;
        let n = (2.0 * x / self.step).ceil() as usize + 1;
        let h = 2.0 * x / (n - 1) as f64;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let xi = -x + j as f64 * h;
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += w * g(xi);
        }
        Ok(acc * h)
    }
}

/// Principal-value quadrature, PV ∫ g(x)/(x-x₀) dx.
///
/// Symmetric excision of [x₀-h, x₀+h]; the excised part is restored from the
/// odd-part series, 2h·g'(x₀) + (h³/9)·g'''(x₀), with derivatives taken by
/// central differences at a step independent of h. The outer part pairs the
/// two sides, (g(x₀+u) − g(x₀−u))/u, and uses composite Simpson in u. The
/// evaluation runs at excision h and h/2; the h⁵ series tail is removed by
/// Richardson extrapolation and the h-vs-h/2 spread is the resolution check.
#[derive(Debug, Clone, Copy)]
pub struct PvQuad {
    /// Half width of the outer integration window around x₀.
    pub half_window: f64,
    /// Outer Simpson step.
    pub step: f64,
    /// Central-difference step for the excision correction.
    pub fd_step: f64,
    /// Agreement required between the h and h/2 evaluations.
    pub check_tol: f64,
}

impl Default for PvQuad {
    fn default() -> Self {
        Self { half_window: 30.0, step: 0.01, fd_step: 2.5e-3, check_tol: 1e-7 }
    }
}

impl PvQuad {
    pub fn integrate(&self, g: &dyn Fn(f64) -> C64, x0: f64, halfwidth: f64) -> Result<C64> {
        let a = self.eval(g, x0, halfwidth);
        let b = self.eval(g, x0, 0.5 * halfwidth);
        let richardson = (32.0 * b - a) / 31.0;
        let scale = richardson.norm().max(1.0);
        if (a - b).norm() > self.check_tol * scale {
            return Err(Error::Accuracy(format!(
                "PV integrand not resolved near x0 = {x0}: excision h vs h/2 differ by {:.3e}; \
                 shrink the excision halfwidth",
                (a - b).norm()
            )));
        }
        Ok(richardson)
    }

    fn eval(&self, g: &dyn Fn(f64) -> C64, x0: f64, h: f64) -> C64 {
        let w = self.half_window;
        let n_panels = (((w - h) / self.step).ceil() as usize).max(2);
        let dx = (w - h) / n_panels as f64;
        let mut acc = C64::new(0.0, 0.0);
        let eval_pair = |u: f64| -> C64 { (g(x0 + u) - g(x0 - u)) / u };
        // composite Simpson in the offset variable u ∈ [h, W]
        for p in 0..n_panels {
            let u0 = h + p as f64 * dx;
            acc += (dx / 6.0)
                * (eval_pair(u0) + 4.0 * eval_pair(u0 + 0.5 * dx) + eval_pair(u0 + dx));
        }
        // excised odd-part series: ∫_{-h}^{h} g(x0+u)/u du = 2h g' + h³ g'''/9 + O(h⁵)
        let d = self.fd_step;
        let g1 = (8.0 * (g(x0 + d) - g(x0 - d)) - (g(x0 + 2.0 * d) - g(x0 - 2.0 * d)))
            / (12.0 * d);
        let g3 = (g(x0 + 2.0 * d) - 2.0 * g(x0 + d) + 2.0 * g(x0 - d) - g(x0 - 2.0 * d))
            / (2.0 * d * d * d);
        acc + 2.0 * h * g1 + h * h * h / 9.0 * g3
    }
}

/// Least-squares line through (ln ε, ln err): returns (slope, intercept, R²).
pub fn log_log_fit(epsilons: &[f64], errors: &[f64]) -> Result<(f64, f64, f64)> {
    if epsilons.len() != errors.len() || epsilons.len() < 3 {
        return Err(Error::InvalidInput(
            "slope fit needs at least 3 (epsilon, error) pairs".into(),
        ));
    }
    if errors.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidInput("slope fit needs positive errors".into()));
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn gaussian_packet(grid: SpatialGrid, x0: f64, k0: f64, width: f64) -> Field {
        Field::from_fn(grid, |x| {
            let u = (x - x0) / width;
            C64::from_polar((-0.5 * u * u).exp(), k0 * x)
                * (PI.sqrt() * width).powf(-0.5)
        })
    }

    /// Dawson function by RK4 on D' = 1 - 2xD, used as an independent oracle
    /// for the Hilbert transform of a Gaussian.
    fn dawson(x: f64) -> f64 {
        let (sign, x) = if x < 0.0 { (-1.0, -x) } else { (1.0, x) };
        let h = 1e-4;
        let n = (x / h).ceil() as usize;
        let h = if n > 0 { x / n as f64 } else { 0.0 };
        let mut d = 0.0_f64;
        let mut t = 0.0_f64;
        let f = |t: f64, d: f64| 1.0 - 2.0 * t * d;
        for _ in 0..n {
            let k1 = f(t, d);
            let k2 = f(t + 0.5 * h, d + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, d + 0.5 * h * k2);
            let k4 = f(t + h, d + h * k3);
            d += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        sign * d
    }

    #[test]
    fn parseval_and_roundtrip() {
        let grid = SpatialGrid::new(1024, -10.0, 20.0 / 1024.0);
        let f = gaussian_packet(grid, 1.0, 40.0, 0.7);
        let fh = f.to_momentum();
        assert!((f.norm_sq() - fh.norm_sq()).abs() < 1e-10);
        let back = f.apply_momentum_multiplier(|_| c(1.0, 0.0));
        let diff: f64 = f
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn free_propagation_is_unitary_and_a_semigroup() {
        let grid = SpatialGrid::new(2048, -12.0, 24.0 / 2048.0);
        let f = gaussian_packet(grid, -2.0, 55.0, 0.4);
        let eps = 0.3;
        let g = free_propagate(&f, 0.8, eps);
        assert!((g.norm() - f.norm()).abs() < 1e-12);
        let h1 = free_propagate(&free_propagate(&f, 0.3, eps), 0.5, eps);
        let h2 = free_propagate(&f, 0.8, eps);
        assert!(h1.sub(&h2).norm() < 1e-10);
    }

    #[test]
    fn plane_wave_gets_the_kinetic_phase() {
        let grid = SpatialGrid::new(256, 0.0, 1.0 / 16.0);
        let k0 = grid.k(3);
        let f = Field::from_fn(grid, |x| C64::from_polar(1.0, k0 * x));
        let eps = 0.5;
        let t = 0.37;
        let g = free_propagate(&f, t, eps);
        let expected = C64::from_polar(1.0, -0.5 * t * eps * eps * k0 * k0);
        for (a, b) in f.data.iter().zip(&g.data) {
            assert!((a * expected - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_dispersion_matches_closed_form() {
        // Free evolution of (πa₀)^{-1/4} e^{-x²/(2a₀)}: the closed form is the
        // same Gaussian with a₀ → a₀ + i t ε².
        let grid = SpatialGrid::new(4096, -20.0, 40.0 / 4096.0);
        let a0 = 0.5;
        let f = Field::from_fn(grid, |x| c((PI * a0).powf(-0.25) * (-x * x / (2.0 * a0)).exp(), 0.0));
        let eps = 0.4;
        let t = 3.0;
        let g = free_propagate(&f, t, eps);
        let at = C64::new(a0, t * eps * eps);
        let norm = (PI * a0).powf(-0.25) * (a0 / at).sqrt();
        let mut max_err = 0.0_f64;
        for (j, x) in grid.points().enumerate() {
            let expect = norm * (-x * x / (2.0 * at)).exp();
            max_err = max_err.max((g.data[j] - expect).norm());
        }
        assert!(max_err < 1e-8, "max pointwise error {max_err}");
    }

    #[test]
    fn oscillatory_quad_gaussian_moments() {
        let q = OscillatoryQuad::default();
        let tail = TailBound::Gaussian { amp: 1.0, a: 0.5 };
        let v = q
            .integrate(|xi| c((-0.5 * xi * xi).exp(), 0.0), tail)
            .unwrap();
        assert!((v.re - TAU.sqrt()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-14);

        // zero integrand
        let z = q.integrate(|_| c(0.0, 0.0), TailBound::Gaussian { amp: 0.0, a: 0.5 }).unwrap();
        assert_eq!(z, c(0.0, 0.0));
    }

    #[test]
    fn oscillatory_quad_complex_gaussian_oracle() {
        // ∫ e^{-ξ²/2} e^{iτξ²/2} e^{-iξz} dξ = √(2π/(1-iτ)) exp(-z²/(2(1-iτ)))
        let q = OscillatoryQuad { step: 0.02, tol: 1e-13, max_window: 80.0 };
        let tau = 0.5;
        let z = 1.3;
        let tail = TailBound::Gaussian { amp: 1.0, a: 0.5 };
        let v = q
            .integrate(
                |xi| {
                    C64::from_polar((-0.5 * xi * xi).exp(), 0.5 * tau * xi * xi - xi * z)
                },
                tail,
            )
            .unwrap();
        let a = C64::new(1.0, -tau);
        let expect = (TAU / a).sqrt() * (-z * z / (2.0 * a)).exp();
        assert!((v - expect).norm() < 1e-9, "err {}", (v - expect).norm());
    }

    #[test]
    fn tail_violation_reports_required_window() {
        let q = OscillatoryQuad { step: 0.05, tol: 1e-12, max_window: 10.0 };
        // decay too slow for the allowed window
        let tail = TailBound::Gaussian { amp: 1.0, a: 0.05 };
        let err = q.integrate(|_| c(1.0, 0.0), tail).err().unwrap();
        let msg = format!("{err}");
        assert!(msg.contains("window"), "{msg}");
    }

    #[test]
    fn pv_symmetry_about_the_pole() {
        // Even numerator about x0 makes the integrand odd, so the PV vanishes;
        // an odd numerator turns it into an ordinary Gaussian integral.
        let pv = PvQuad::default();
        let v_even = pv
            .integrate(&|x: f64| c((-(x - 2.0) * (x - 2.0)).exp(), 0.0), 2.0, 0.05)
            .unwrap();
        assert!(v_even.norm() < 1e-12, "even numerator PV should vanish, got {v_even}");
        let v_odd = pv
            .integrate(&|x: f64| c((-(x - 2.0) * (x - 2.0)).exp() * (x - 2.0), 0.0), 2.0, 0.05)
            .unwrap();
        assert!((v_odd.re - PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn pv_classical_exponential_identity() {
        // PV ∫ e^{iax} e^{-x²/σ²}/x dx = iπ erf(aσ/2); for aσ ≫ 1 this is iπ sign(a).
        let pv = PvQuad { half_window: 40.0, step: 0.005, fd_step: 2e-3, check_tol: 1e-6 };
        let a = 3.0;
        let sigma = 6.0;
        let v = pv
            .integrate(
                &|x: f64| C64::from_polar((-x * x / (sigma * sigma)).exp(), a * x),
                0.0,
                0.02,
            )
            .unwrap();
        assert!((v - c(0.0, PI)).norm() < 1e-8, "got {v}");
        let vneg = pv
            .integrate(
                &|x: f64| C64::from_polar((-x * x / (sigma * sigma)).exp(), -a * x),
                0.0,
                0.02,
            )
            .unwrap();
        assert!((vneg - c(0.0, -PI)).norm() < 1e-8);
    }

    #[test]
    fn pv_gaussian_vs_dawson_oracle() {
        // PV ∫ e^{-t²}/(x-t) dt = 2√π D(x)  (our integrand: g(t) = -e^{-t²},
        // since PV ∫ g(t)/(t-x) dt = -PV ∫ e^{-t²}/(x-t) dt)
        let pv = PvQuad { half_window: 30.0, step: 0.005, fd_step: 2.5e-3, check_tol: 1e-7 };
        for &x in &[0.0, 0.5, 1.0, 2.3] {
            let v = pv.integrate(&|t: f64| c((-t * t).exp(), 0.0), x, 0.05).unwrap();
            let expect = -2.0 * PI.sqrt() * dawson(x);
            assert!(
                (v.re - expect).abs() < 1e-7,
                "x = {x}: got {}, expected {expect}",
                v.re
            );
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let errs: Vec<f64> = eps.iter().map(|e: &f64| 3.1 * e.powf(2.0)).collect();
        let (slope, _, r2) = log_log_fit(&eps, &errs).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(r2 > 1.0 - 1e-12);
        assert!(log_log_fit(&eps[..2], &errs[..2]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn transform_roundtrip_preserves_field(seed in 0u64..1000) {
            // random smooth-ish field from a few plane waves
            let grid = SpatialGrid::new(256, -4.0, 8.0 / 256.0);
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut rnd = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let coefs: Vec<(f64, f64, f64)> = (0..6).map(|_| (rnd(), rnd(), (rnd() * 20.0).round())).collect();
            let f = Field::from_fn(grid, |x| {
                coefs.iter().map(|&(re, im, m)| C64::new(re, im) * C64::from_polar(1.0, TAU * m * x / grid.length())).sum()
            });
            // Parseval
            let fh = f.to_momentum();
            prop_assert!((f.norm_sq() - fh.norm_sq()).abs() < 1e-9 * f.norm_sq().max(1e-12));
            // unitary multiplier preserves the norm
            let g = f.apply_momentum_multiplier(|k| C64::from_polar(1.0, 0.1 * k * k));
            prop_assert!((g.norm() - f.norm()).abs() < 1e-9);
        }
    }
}
