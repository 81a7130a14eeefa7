//! Normalized Hermite functions φ_n, the oscillator spectrum, displacement
//! matrix elements ∫φ_n φ_m e^{-iξx} dx, and the harmonic-oscillator
//! propagator U(t) (eigen-sum and Mehler-kernel paths).
//!
//! The recurrence runs on the normalized functions, not the polynomials, so
//! values stay representable up to n of a few hundred; beyond the resolved
//! window entries underflow to zero.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spectral::{Field, SpatialGrid};

/// Oscillator level energy E_n = ℏω(n + 1/2).
pub fn oscillator_energy(n: usize, hbar: f64, omega: f64) -> f64 {
    hbar * omega * (n as f64 + 0.5)
}

/// Normalized Hermite function φ_n(x), with ∫φ_n φ_m = δ_{nm}.
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    hermite_values(n, x)[n]
}

/// φ_0(x) … φ_{n_max}(x) by the three-term recurrence on the normalized
/// functions: φ_{n+1} = x√(2/(n+1)) φ_n − √(n/(n+1)) φ_{n-1}.
pub fn hermite_values(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let phi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out[0] = phi0;
    if n_max == 0 {
        return out;
    }
    out[1] = x * std::f64::consts::SQRT_2 * phi0;
    for n in 1..n_max {
        let a = x * (2.0 / (n as f64 + 1.0)).sqrt();
        let b = (n as f64 / (n as f64 + 1.0)).sqrt();
        out[n + 1] = a * out[n] - b * out[n - 1];
    }
    out
}

/// Hermite functions tabulated on a grid; rows are modes.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub grid: SpatialGrid,
    pub n_max: usize,
    values: Vec<Vec<f64>>,
}

impl HermiteTable {
    pub fn new(grid: SpatialGrid, n_max: usize) -> Self {
        let mut values = vec![vec![0.0; grid.n]; n_max + 1];
        for (j, x) in grid.points().enumerate() {
            let col = hermite_values(n_max, x);
            for (n, row) in values.iter_mut().enumerate() {
                row[j] = col[n];
            }
        }
        Self { grid, n_max, values }
    }

    pub fn phi(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    /// c_n = ⟨φ_n, ψ⟩ by grid quadrature, for n ≤ n_max.
    pub fn project(&self, psi: &Field) -> Vec<C64> {
        debug_assert_eq!(psi.grid, self.grid);
        (0..=self.n_max)
            .map(|n| {
                self.grid.dx
                    * self.values[n]
                        .iter()
                        .zip(&psi.data)
                        .map(|(&p, z)| p * z)
                        .sum::<C64>()
            })
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[C64]) -> Field {
        let mut f = Field::zeros(self.grid);
        for (n, c) in coeffs.iter().enumerate() {
            for (j, z) in f.data.iter_mut().enumerate() {
                *z += c * self.values[n][j];
            }
        }
        f
    }

    /// max |⟨φ_n, φ_m⟩ − δ_{nm}| over n, m ≤ n_max, as a grid-quality check.
    pub fn orthonormality_defect(&self) -> f64 {
        let dx = self.grid.dx;
        let mut worst = 0.0_f64;
        for n in 0..=self.n_max {
            for m in n..=self.n_max {
                let ip: f64 = self.values[n]
                    .iter()
                    .zip(&self.values[m])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * dx;
                let target = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Displacement matrix element D_{nm}(ξ) = ∫ φ_n(x) φ_m(x) e^{-iξx} dx.
///
/// Closed form √(m!/n!)·(−iξ/√2)^{n−m}·e^{−ξ²/4}·L_m^{(n−m)}(ξ²/2) for n ≥ m
/// (symmetric in n, m), with the Laguerre value from its upward recurrence.
pub fn displacement_element(n: usize, m: usize, xi: f64) -> C64 {
    let (hi, lo) = if n >= m { (n, m) } else { (m, n) };
    let d = hi - lo;
    let x = 0.5 * xi * xi;
    // L_lo^{(d)}(x)
    let mut l_prev = 1.0;
    let mut l = 1.0 + d as f64 - x;
    if lo == 0 {
        l = l_prev;
    } else {
        for k in 1..lo {
            let next = ((2 * k + 1 + d) as f64 - x) * l - (k + d) as f64 * l_prev;
            let next = next / (k as f64 + 1.0);
            l_prev = l;
            l = next;
        }
    }
    let ln_amp = 0.5 * (ln_factorial(lo) - ln_factorial(hi))
        + d as f64 * (xi.abs() / std::f64::consts::SQRT_2).max(1e-300).ln()
        - 0.25 * xi * xi;
    let amp = if d > 0 && xi == 0.0 { 0.0 } else { ln_amp.exp() };
    // (−i·sign(ξ))^d carries the phase of (−iξ/√2)^d
    let phase = C64::new(0.0, -xi.signum()).powu(d as u32);
    phase * amp * l
}

/// d/dξ D_{nm}(ξ) = −i⟨φ_n, x e^{-iξx} φ_m⟩, via xφ_m = √(m/2)φ_{m-1} + √((m+1)/2)φ_{m+1}.
pub fn displacement_element_deriv(n: usize, m: usize, xi: f64) -> C64 {
    let mut v = ((m as f64 + 1.0) / 2.0).sqrt() * displacement_element(n, m + 1, xi);
    if m > 0 {
        v += (m as f64 / 2.0).sqrt() * displacement_element(n, m - 1, xi);
    }
    -C64::i() * v
}

/// How to apply the oscillator propagator to a grid field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorPath {
    EigenSum,
    MehlerKernel,
    /// Mehler kernel, switching to the eigen sum within 0.05 of t = kπ where
    /// the closed form degenerates (1 − e^{−2it} → 0).
    Auto,
}

/// Mehler kernel U(t; x, y) for t away from multiples of π.
///
/// For t ∈ (0, π): U = (2πi sin t)^{-1/2} exp(i[(x²+y²)cos t − 2xy]/(2 sin t));
/// other t reduce by U(t+kπ; x, y) = (−i)^k U(t; x, (−1)^k y) and U(−t) = U(t)*.
pub fn mehler_kernel(t: f64, x: f64, y: f64) -> C64 {
    if t < 0.0 {
        return mehler_kernel(-t, x, y).conj();
    }
    let k = (t / PI).floor() as i64;
    let tr = t - k as f64 * PI;
    let y = if k % 2 == 0 { y } else { -y };
    let s = tr.sin();
    let c = tr.cos();
    let pref = (2.0 * PI * s).powf(-0.5) * C64::from_polar(1.0, -PI / 4.0);
    let phase = ((x * x + y * y) * c - 2.0 * x * y) / (2.0 * s);
    let quarter_turns = (k % 4 + 4) % 4;
    let branch = C64::new(0.0, -1.0).powu(quarter_turns as u32);
    branch * pref * C64::from_polar(1.0, phase)
}

/// U(t)ψ for a field on the oscillator axis.
///
/// The eigen-sum path projects onto φ_0..φ_{n_max} and rephases; it reports a
/// loss of accuracy when ψ has significant weight above n_max. The Mehler
/// path is a dense kernel quadrature. The two agree away from t = kπ and are
/// used as mutual oracles in the tests.
pub fn apply_oscillator_propagator(
    table: &HermiteTable,
    psi: &Field,
    t: f64,
    path: PropagatorPath,
) -> Result<Field> {
    let near_pole = (t / PI - (t / PI).round()).abs() < 0.05 / PI;
    let use_eigen = match path {
        PropagatorPath::EigenSum => true,
        PropagatorPath::MehlerKernel => false,
        PropagatorPath::Auto => near_pole,
    };
    if use_eigen {
        let mut coeffs = table.project(psi);
        let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let total = psi.norm_sq();
        if total > 0.0 && (total - captured) > 1e-8 * total {
            return Err(Error::Accuracy(format!(
                "field has weight {:.3e} above mode {} (relative); raise n_max",
                (total - captured) / total,
                table.n_max
            )));
        }
        for (n, c) in coeffs.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -(n as f64 + 0.5) * t);
        }
        Ok(table.synthesize(&coeffs))
    } else {
        if near_pole {
            return Err(Error::Accuracy(format!(
                "Mehler kernel degenerates at t = {t}; use the eigen-sum path"
            )));
        }
        let grid = psi.grid;
        let mut out = Field::zeros(grid);
        for (j, x) in grid.points().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (l, y) in grid.points().enumerate() {
                acc += mehler_kernel(t, x, y) * psi.data[l];
            }
            out.data[j] = acc * grid.dx;
        }
        Ok(out)
    }
}

/// Truncated oscillator-mode space with the position operator diagonalized,
/// used to apply displacement phases e^{-iξx} and propagators exactly (up to
/// truncation) to coefficient vectors.
pub struct ModeSpace {
    pub n_max: usize,
    evals: DVector<f64>,
    evecs: DMatrix<f64>,
}

impl ModeSpace {
    pub fn new(n_max: usize) -> Self {
        let dim = n_max + 1;
        let mut y = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..n_max {
            let v = ((n as f64 + 1.0) / 2.0).sqrt();
            y[(n, n + 1)] = v;
            y[(n + 1, n)] = v;
        }
        let eig = SymmetricEigen::new(y);
        Self { n_max, evals: eig.eigenvalues, evecs: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn ground_state(&self) -> DVector<C64> {
        let mut v = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// c ← e^{-iξ x̂} c in the truncated space (exactly unitary).
    pub fn displace(&self, xi: f64, c: &DVector<C64>) -> DVector<C64> {
        let mut w = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        // w = Qᵀ c
        for j in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..self.dim() {
                acc += self.evecs[(i, j)] * c[i];
            }
            w[j] = acc * C64::from_polar(1.0, -xi * self.evals[j]);
        }
        let mut out = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        for i in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.dim() {
                acc += self.evecs[(i, j)] * w[j];
            }
            out[i] = acc;
        }
        out
    }

    /// c_n ← e^{-i(n+1/2)t} c_n.
    pub fn evolve(&self, t: f64, c: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.dim(),
            c.iter()
                .enumerate()
                .map(|(n, z)| z * C64::from_polar(1.0, -(n as f64 + 0.5) * t)),
        )
    }

    /// ζ(ξ; t) = e^{-iξ_L·} U(t_{L-1}) ⋯ U(t_1) e^{-iξ_1·} φ_0, as mode
    /// coefficients. Requires xis.len() == ts.len() + 1.
    pub fn zeta_chain(&self, xis: &[f64], ts: &[f64]) -> Result<DVector<C64>> {
        if xis.is_empty() || xis.len() != ts.len() + 1 {
            return Err(Error::InvalidInput(
                "zeta chain needs k ≥ 1 phases and k-1 propagation times".into(),
            ));
        }
        let mut c = self.displace(xis[0], &self.ground_state());
        for (j, &t) in ts.iter().enumerate() {
            c = self.evolve(t, &c);
            c = self.displace(xis[j + 1], &c);
        }
        // spill monitor: occupancy of the top tenth of the basis
        let dim = self.dim();
        let top: f64 = (dim - dim / 10..dim).map(|n| c[n].norm_sqr()).sum();
        if top > 1e-10 {
            return Err(Error::Spill(format!(
                "zeta chain leaks {top:.2e} into the top modes; raise n_max"
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::OscillatoryQuad;
    use proptest::prelude::*;

    fn osc_grid() -> SpatialGrid {
        SpatialGrid::new(2048, -28.0, 56.0 / 2048.0)
    }

    #[test]
    fn ground_state_normalization_and_parity() {
        assert!((hermite_fn(0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(hermite_fn(1, 0.0), 0.0);
        for n in 0..12 {
            for &x in &[0.3, 1.7, 4.2] {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((hermite_fn(n, -x) - sign * hermite_fn(n, x)).abs() < 1e-14);
            }
        }
        // far outside the resolved window values underflow to zero
        assert_eq!(hermite_fn(4, 60.0), 0.0);
    }

    #[test]
    fn high_order_norm_by_quadrature() {
        let grid = osc_grid();
        let dx = grid.dx;
        let norm7: f64 = grid.points().map(|x| hermite_fn(7, x).powi(2)).sum::<f64>() * dx;
        assert!((norm7 - 1.0).abs() < 1e-10, "‖φ₇‖² = {norm7}");
    }

    #[test]
    fn orthonormality_to_n80() {
        let table = HermiteTable::new(osc_grid(), 80);
        assert!(table.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn displacement_element_closed_form_examples() {
        assert!((displacement_element(0, 0, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        for n in 0..6 {
            for m in 0..6 {
                let target = if n == m { 1.0 } else { 0.0 };
                assert!((displacement_element(n, m, 0.0) - C64::new(target, 0.0)).norm() < 1e-15);
            }
        }
        // D_{10}(ξ) = (−iξ/√2) e^{−ξ²/4}
        let xi = 1.5;
        let expect = C64::new(0.0, -xi / std::f64::consts::SQRT_2) * (-xi * xi / 4.0).exp();
        assert!((displacement_element(1, 0, xi) - expect).norm() < 1e-14);
        assert!((expect.im + 0.604345948756293).abs() < 1e-12);
    }

    #[test]
    fn displacement_element_matches_quadrature_grid() {
        // closed form vs direct quadrature of ∫φ_nφ_m e^{-iξx}dx on ξ ∈ [-10, 10]
        let q = OscillatoryQuad { step: 0.02, tol: 1e-14, max_window: 80.0 };
        let tail = crate::spectral::TailBound::Gaussian { amp: 10.0, a: 0.25 };
        for n in 0..=8usize {
            for m in 0..=n {
                for k in 0..11 {
                    let xi = -10.0 + 2.0 * k as f64;
                    let direct = q
                        .integrate(
                            |x| {
                                C64::from_polar(1.0, -xi * x)
                                    * (hermite_fn(n, x) * hermite_fn(m, x))
                            },
                            tail,
                        )
                        .unwrap();
                    let closed = displacement_element(n, m, xi);
                    assert!(
                        (direct - closed).norm() < 1e-8,
                        "n={n} m={m} ξ={xi}: {direct} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn displacement_deriv_matches_finite_difference() {
        let h = 1e-5;
        for (n, m) in [(0usize, 0usize), (1, 0), (3, 2), (5, 1)] {
            for &xi in &[0.0, 0.7, 2.1] {
                let fd = (displacement_element(n, m, xi + h)
                    - displacement_element(n, m, xi - h))
                    / (2.0 * h);
                let an = displacement_element_deriv(n, m, xi);
                assert!((fd - an).norm() < 1e-8, "n={n} m={m} xi={xi}");
            }
        }
    }

    #[test]
    fn propagator_spectral_identities() {
        let grid = osc_grid();
        let table = HermiteTable::new(grid, 60);
        // a mild mixture with weight in the low modes
        let psi = Field::from_fn(grid, |x| {
            C64::new(hermite_fn(0, x) + 0.4 * hermite_fn(2, x) - 0.2 * hermite_fn(5, x), 0.0)
        });
        let full = apply_oscillator_propagator(&table, &psi, 2.0 * PI, PropagatorPath::EigenSum)
            .unwrap();
        let diff: f64 = full
            .data
            .iter()
            .zip(&psi.data)
            .map(|(a, b)| (a + b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "U(2π)ψ ≠ -ψ: {diff}");

        let u = apply_oscillator_propagator(&table, &psi, 0.9, PropagatorPath::EigenSum).unwrap();
        assert!((u.norm() - psi.norm()).abs() < 1e-10);
    }

    #[test]
    fn eigen_and_mehler_paths_agree() {
        let grid = SpatialGrid::new(1024, -16.0, 32.0 / 1024.0);
        let table = HermiteTable::new(grid, 80);
        let psi = Field::from_fn(grid, |x| {
            C64::from_polar((-0.5 * (x - 0.8) * (x - 0.8)).exp(), 1.3 * x) * PI.powf(-0.25)
        });
        let a = apply_oscillator_propagator(&table, &psi, 0.7, PropagatorPath::EigenSum).unwrap();
        let b = apply_oscillator_propagator(&table, &psi, 0.7, PropagatorPath::MehlerKernel).unwrap();
        let diff: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "paths differ by {diff}");
    }

    #[test]
    fn propagator_semigroup() {
        let grid = SpatialGrid::new(1024, -16.0, 32.0 / 1024.0);
        let table = HermiteTable::new(grid, 80);
        let psi = Field::from_fn(grid, |x| {
            C64::from_polar((-0.5 * x * x).exp(), -0.6 * x) * PI.powf(-0.25)
        });
        let one = apply_oscillator_propagator(&table, &psi, 0.4, PropagatorPath::MehlerKernel).unwrap();
        let two = apply_oscillator_propagator(&table, &one, 0.9, PropagatorPath::MehlerKernel).unwrap();
        let direct = apply_oscillator_propagator(&table, &psi, 1.3, PropagatorPath::MehlerKernel).unwrap();
        let diff: f64 = two.data.iter().zip(&direct.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8);
    }

    #[test]
    fn auto_path_avoids_kernel_poles() {
        let grid = SpatialGrid::new(512, -12.0, 24.0 / 512.0);
        let table = HermiteTable::new(grid, 40);
        let psi = Field::from_fn(grid, |x| C64::new(hermite_fn(0, x), 0.0));
        // right at π the kernel path must refuse and Auto must succeed
        assert!(apply_oscillator_propagator(&table, &psi, PI, PropagatorPath::MehlerKernel).is_err());
        let v = apply_oscillator_propagator(&table, &psi, PI, PropagatorPath::Auto).unwrap();
        // U(π)φ₀ = e^{-iπ/2}φ₀ = -iφ₀
        let expect = C64::new(0.0, -1.0);
        let diff: f64 = v
            .data
            .iter()
            .zip(&psi.data)
            .map(|(a, b)| (a - expect * b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn eigen_path_reports_underresolved_mode_content() {
        let grid = osc_grid();
        let table = HermiteTable::new(grid, 3);
        let psi = Field::from_fn(grid, |x| C64::new(hermite_fn(9, x), 0.0));
        assert!(apply_oscillator_propagator(&table, &psi, 0.5, PropagatorPath::EigenSum).is_err());
    }

    #[test]
    fn mode_space_displacement_matches_closed_form() {
        let space = ModeSpace::new(48);
        let xi = 1.7;
        let c = space.displace(xi, &space.ground_state());
        for n in 0..6 {
            let expect = displacement_element(n, 0, xi);
            assert!((c[n] - expect).norm() < 1e-12, "n={n}: {} vs {expect}", c[n]);
        }
    }

    #[test]
    fn zeta_chain_is_normalized() {
        let space = ModeSpace::new(160);
        let c = space.zeta_chain(&[2.0, -3.5, 1.2], &[0.7, 2.9]).unwrap();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12, "‖ζ‖ = {norm}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn displacement_hermitian_symmetry(n in 0usize..8, m in 0usize..8, xi in -6.0f64..6.0) {
            let a = displacement_element(n, m, xi);
            let b = displacement_element(m, n, -xi).conj();
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
