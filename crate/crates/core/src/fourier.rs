//! Real trigonometric polynomials on the circle of circumference 2π.
//!
//! A [`PeriodicFn`] with `modes = M` stores, for each of its `dim` components,
//! the 2M+1 coefficients ordered `[s_M, …, s_1, c_0, c_1, …, c_M]` against the
//! basis `sin(kt)`, `1/2`, `cos(kt)`. Index `k` of [`PeriodicFn::coeff`] runs
//! over `-M..=M`; negative indices address sine coefficients. With the `1/2`
//! basis function the stored constant coefficient is twice the mean.
//!
//! Transforms between samples and coefficients use the odd grid
//! `t_j = -π + 2πj/(2M+1)`, on which analysis and synthesis are exact inverses.

pub mod decay;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub use decay::{fit_log_ratio, qnl_norm_estimate, DecayFit};

/// Oversampling factor used for sup-norm and Lipschitz estimates.
pub const REFINE_FACTOR: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Collocation times `t_j = -π + 2πj/(2M+1)`.
pub fn grid(modes: usize) -> Vec<f64> {
    uniform_grid(2 * modes + 1, -PI)
}

/// `count` equispaced times on `[start, start + 2π)`.
pub fn uniform_grid(count: usize, start: f64) -> Vec<f64> {
    (0..count)
        .map(|j| start + 2.0 * PI * j as f64 / count as f64)
        .collect()
}

/// Odd number of points of the refined grid used for norm estimates.
pub fn refined_count(modes: usize) -> usize {
    REFINE_FACTOR * (2 * modes + 1) + 1
}

/// Which complementary projector to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Keep harmonics `0..=N`.
    P,
    /// Keep harmonics above `N`.
    Q,
}

/// A vector-valued 2π-periodic trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFn {
    dim: usize,
    modes: usize,
    coeffs: Vec<f64>,
}

impl PeriodicFn {
    pub fn new(dim: usize, modes: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        if coeffs.len() != dim * (2 * modes + 1) {
            return Err(Error::Dimension(format!(
                "expected {} coefficients for dim {dim} and {modes} modes, got {}",
                dim * (2 * modes + 1),
                coeffs.len()
            )));
        }
        Ok(Self { dim, modes, coeffs })
    }

    pub fn zeros(dim: usize, modes: usize) -> Self {
        Self {
            dim,
            modes,
            coeffs: vec![0.0; dim * (2 * modes + 1)],
        }
    }

    /// The constant function with the given value.
    pub fn constant(value: &[f64], modes: usize) -> Self {
        let mut x = Self::zeros(value.len(), modes);
        for (i, v) in value.iter().enumerate() {
            x.set_coeff(i, 0, 2.0 * v);
        }
        x
    }

    /// Interpolates `f` on the collocation grid of `modes`.
    pub fn from_fn(dim: usize, modes: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let pts = grid(modes);
        let width = pts.len();
        let mut samples = vec![0.0; dim * width];
        for (j, &t) in pts.iter().enumerate() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "sampled function returned {} components, expected {dim}",
                    v.len()
                )));
            }
            for i in 0..dim {
                samples[i * width + j] = v[i];
            }
        }
        analyze(dim, &samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn width(&self) -> usize {
        2 * self.modes + 1
    }

    fn index(&self, component: usize, k: isize) -> usize {
        debug_assert!(k.unsigned_abs() <= self.modes);
        component * self.width() + (k + self.modes as isize) as usize
    }

    /// Coefficient of harmonic `k` (negative: sine) of `component`; zero beyond `modes`.
    pub fn coeff(&self, component: usize, k: isize) -> f64 {
        if k.unsigned_abs() > self.modes {
            0.0
        } else {
            self.coeffs[self.index(component, k)]
        }
    }

    pub fn set_coeff(&mut self, component: usize, k: isize, value: f64) {
        let idx = self.index(component, k);
        self.coeffs[idx] = value;
    }

    /// Coefficients of one component.
    pub fn row(&self, component: usize) -> &[f64] {
        let w = self.width();
        &self.coeffs[component * w..(component + 1) * w]
    }

    /// Mean value of every component.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|i| 0.5 * self.coeff(i, 0)).collect()
    }

    /// Same function with `modes` harmonics: zero padded or truncated.
    pub fn resized(&self, modes: usize) -> Self {
        let mut out = Self::zeros(self.dim, modes);
        let keep = modes.min(self.modes) as isize;
        for i in 0..self.dim {
            for k in -keep..=keep {
                out.set_coeff(i, k, self.coeff(i, k));
            }
        }
        out
    }

    /// Value at any real `t`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let t = t.rem_euclid(2.0 * PI);
        let m = self.modes as isize;
        for (i, o) in out.iter_mut().enumerate() {
            *o = 0.5 * self.coeff(i, 0);
        }
        for k in 1..=m {
            let (s, c) = (k as f64 * t).sin_cos();
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.coeff(i, k) * c + self.coeff(i, -k) * s;
            }
        }
    }

    /// Samples at `count` equispaced times starting at `-π`, row-major per component.
    pub fn sample(&self, count: usize) -> Vec<f64> {
        self.sample_from(count, -PI)
    }

    /// Samples at `start + 2πj/count`, row-major per component.
    pub fn sample_from(&self, count: usize, start: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * count];
        let mut buf = vec![Complex64::new(0.0, 0.0); count];
        for i in 0..self.dim {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for k in 1..=self.modes {
                let ki = k as isize;
                let c = Complex64::new(self.coeff(i, ki), -self.coeff(i, -ki))
                    * Complex64::from_polar(1.0, k as f64 * start);
                buf[k % count] += c;
            }
            fft_inverse(&mut buf);
            let c0 = 0.5 * self.coeff(i, 0);
            for (j, b) in buf.iter().enumerate() {
                out[i * count + j] = c0 + b.re;
            }
        }
        out
    }

    /// Sup-norm over all components, sampled on the refined grid.
    pub fn sup_norm(&self) -> f64 {
        self.sample(refined_count(self.modes))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Lipschitz constant estimate (sup of the derivative on the refined grid).
    pub fn lipschitz(&self) -> f64 {
        differentiate(self).sup_norm()
    }

    /// `‖x‖_{0,1}`: sup-norm plus Lipschitz constant.
    pub fn norm_01(&self) -> f64 {
        self.sup_norm() + self.lipschitz()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `R_N`: the leading `2N+1` coefficients.
    pub fn restrict(&self, harmonics: usize) -> CoeffVec {
        let r = self.resized(harmonics);
        CoeffVec {
            dim: self.dim,
            harmonics,
            data: r.coeffs,
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let modes = self.modes.max(other.modes);
        let a = self.resized(modes);
        let b = other.resized(modes);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Self {
            dim: self.dim,
            modes,
            coeffs,
        }
    }
}

impl Add for &PeriodicFn {
    type Output = PeriodicFn;
    fn add(self, rhs: &PeriodicFn) -> PeriodicFn {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &PeriodicFn {
    type Output = PeriodicFn;
    fn sub(self, rhs: &PeriodicFn) -> PeriodicFn {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &PeriodicFn {
    type Output = PeriodicFn;
    fn mul(self, rhs: f64) -> PeriodicFn {
        PeriodicFn {
            dim: self.dim,
            modes: self.modes,
            coeffs: self.coeffs.iter().map(|c| c * rhs).collect(),
        }
    }
}

/// The unknown of the algebraic system: `2N+1` Fourier coefficients per component.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVec {
    dim: usize,
    harmonics: usize,
    data: Vec<f64>,
}

impl CoeffVec {
    pub fn new(dim: usize, harmonics: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * (2 * harmonics + 1) {
            return Err(Error::Dimension(format!(
                "expected {} coefficients for dim {dim} and N = {harmonics}, got {}",
                dim * (2 * harmonics + 1),
                data.len()
            )));
        }
        Ok(Self {
            dim,
            harmonics,
            data,
        })
    }

    pub fn zeros(dim: usize, harmonics: usize) -> Self {
        Self {
            dim,
            harmonics,
            data: vec![0.0; dim * (2 * harmonics + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flat position of harmonic `k` of `component`.
    pub fn index(&self, component: usize, k: isize) -> usize {
        assert!(k.unsigned_abs() <= self.harmonics, "harmonic {k} out of range");
        component * (2 * self.harmonics + 1) + (k + self.harmonics as isize) as usize
    }

    pub fn get(&self, component: usize, k: isize) -> f64 {
        self.data[self.index(component, k)]
    }

    pub fn set(&mut self, component: usize, k: isize, value: f64) {
        let idx = self.index(component, k);
        self.data[idx] = value;
    }

    /// Unit coefficient vector with a one at flat position `idx`.
    pub fn unit(dim: usize, harmonics: usize, idx: usize) -> Self {
        let mut e = Self::zeros(dim, harmonics);
        e.data[idx] = 1.0;
        e
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `E_N`: the trigonometric polynomial with these coefficients.
    pub fn embed(&self) -> PeriodicFn {
        PeriodicFn {
            dim: self.dim,
            modes: self.harmonics,
            coeffs: self.data.clone(),
        }
    }

    /// Zero padded or truncated to `harmonics`.
    pub fn resized(&self, harmonics: usize) -> Self {
        self.embed().restrict(harmonics)
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        Self {
            dim: self.dim,
            harmonics: self.harmonics,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            harmonics: self.harmonics,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }
}

/// Coefficients of the trigonometric polynomial through the samples on the
/// odd grid `t_j = -π + 2πj/(2M+1)`. `samples` is row-major, `dim` rows.
pub fn analyze(dim: usize, samples: &[f64]) -> Result<PeriodicFn> {
    if dim == 0 || samples.len() % dim != 0 {
        return Err(Error::Dimension(format!(
            "{} samples cannot be split into {dim} components",
            samples.len()
        )));
    }
    let count = samples.len() / dim;
    if count % 2 == 0 {
        return Err(Error::EvenSampleCount { count });
    }
    analyze_grid(dim, samples, (count - 1) / 2, -PI)
}

/// Discrete projection onto `modes` harmonics of samples taken at
/// `start + 2πj/P`. Needs `P > 2·modes`; exact for polynomials of degree `< P - modes`.
pub fn analyze_grid(dim: usize, samples: &[f64], modes: usize, start: f64) -> Result<PeriodicFn> {
    if dim == 0 || samples.len() % dim != 0 {
        return Err(Error::Dimension(format!(
            "{} samples cannot be split into {dim} components",
            samples.len()
        )));
    }
    let count = samples.len() / dim;
    if count <= 2 * modes {
        return Err(Error::Dimension(format!(
            "{count} samples cannot resolve {modes} harmonics"
        )));
    }
    let mut out = PeriodicFn::zeros(dim, modes);
    let mut buf = vec![Complex64::new(0.0, 0.0); count];
    let scale = 2.0 / count as f64;
    for i in 0..dim {
        for (b, &s) in buf.iter_mut().zip(&samples[i * count..(i + 1) * count]) {
            *b = Complex64::new(s, 0.0);
        }
        fft_forward(&mut buf);
        out.set_coeff(i, 0, scale * buf[0].re);
        for k in 1..=modes {
            let z = buf[k] * Complex64::from_polar(1.0, -(k as f64) * start);
            out.set_coeff(i, k as isize, scale * z.re);
            out.set_coeff(i, -(k as isize), -scale * z.im);
        }
    }
    Ok(out)
}

/// Value of `x` at `t`.
pub fn eval_at(x: &PeriodicFn, t: f64) -> Vec<f64> {
    x.eval(t)
}

/// `P_N x` or `Q_N x = x - P_N x`.
pub fn project(x: &PeriodicFn, harmonics: usize, kind: Projection) -> PeriodicFn {
    let mut out = x.clone();
    let m = x.modes as isize;
    for i in 0..x.dim {
        for k in -m..=m {
            let low = k.unsigned_abs() <= harmonics;
            if low != (kind == Projection::P) {
                out.set_coeff(i, k, 0.0);
            }
        }
    }
    out
}

/// `L x`: the antiderivative of `x` minus its mean, normalised so that `(Lx)(0) = 0`.
pub fn antiderivative(x: &PeriodicFn) -> PeriodicFn {
    let mut out = PeriodicFn::zeros(x.dim, x.modes);
    let m = x.modes as isize;
    for i in 0..x.dim {
        let mut at_zero = 0.0;
        for k in 1..=m {
            let kf = k as f64;
            let (a, b) = (x.coeff(i, k), x.coeff(i, -k));
            out.set_coeff(i, -k, a / kf);
            out.set_coeff(i, k, -b / kf);
            at_zero += -b / kf;
        }
        out.set_coeff(i, 0, -2.0 * at_zero);
    }
    out
}

/// `Δ_t x`: the function `s ↦ x(t + s)`.
pub fn shift(x: &PeriodicFn, t: f64) -> PeriodicFn {
    let mut out = x.clone();
    let m = x.modes as isize;
    for k in 1..=m {
        let (s, c) = (k as f64 * t).sin_cos();
        for i in 0..x.dim {
            let (a, b) = (x.coeff(i, k), x.coeff(i, -k));
            out.set_coeff(i, k, a * c + b * s);
            out.set_coeff(i, -k, b * c - a * s);
        }
    }
    out
}

/// Term-by-term derivative.
pub fn differentiate(x: &PeriodicFn) -> PeriodicFn {
    let mut out = PeriodicFn::zeros(x.dim, x.modes);
    let m = x.modes as isize;
    for i in 0..x.dim {
        for k in 1..=m {
            let kf = k as f64;
            out.set_coeff(i, k, kf * x.coeff(i, -k));
            out.set_coeff(i, -k, -kf * x.coeff(i, k));
        }
    }
    out
}

/// `Q_N L x` computed directly on coefficients.
pub fn qn_antiderivative(x: &PeriodicFn, harmonics: usize) -> PeriodicFn {
    project(&antiderivative(x), harmonics, Projection::Q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(rng: &mut ChaCha8Rng, dim: usize, modes: usize) -> PeriodicFn {
        let coeffs = (0..dim * (2 * modes + 1))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        PeriodicFn::new(dim, modes, coeffs).unwrap()
    }

    fn max_diff(a: &PeriodicFn, b: &PeriodicFn) -> f64 {
        (a - b).coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn analyze_cosine_hits_first_cosine_slot() {
        let x = PeriodicFn::from_fn(1, 2, |t| vec![t.cos()]).unwrap();
        for k in -2..=2 {
            let expect = if k == 1 { 1.0 } else { 0.0 };
            assert!((x.coeff(0, k) - expect).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn analyze_constant_stores_twice_the_value() {
        let x = PeriodicFn::from_fn(1, 2, |_| vec![0.7]).unwrap();
        assert!((x.coeff(0, 0) - 1.4).abs() < 1e-15);
        assert!(x.row(0).iter().enumerate().all(|(j, c)| j == 2 || c.abs() < 1e-15));
    }

    #[test]
    fn analyze_aliases_like_a_least_squares_grid_fit() {
        // sin 3t on the 5-point grid; oracle: normal equations of the grid fit.
        let pts = grid(2);
        let samples: Vec<f64> = pts.iter().map(|t| (3.0 * t).sin()).collect();
        let x = analyze(1, &samples).unwrap();

        let basis = |t: f64| {
            vec![
                (2.0 * t).sin(),
                t.sin(),
                0.5,
                t.cos(),
                (2.0 * t).cos(),
            ]
        };
        let mut ata = nalgebra::DMatrix::<f64>::zeros(5, 5);
        let mut atb = nalgebra::DVector::<f64>::zeros(5);
        for (&t, &y) in pts.iter().zip(&samples) {
            let row = basis(t);
            for a in 0..5 {
                atb[a] += row[a] * y;
                for b in 0..5 {
                    ata[(a, b)] += row[a] * row[b];
                }
            }
        }
        let fit = ata.lu().solve(&atb).unwrap();
        for (j, k) in (-2..=2).enumerate() {
            assert!((x.coeff(0, k) - fit[j]).abs() < 1e-12, "k = {k}");
        }
        // e^{5it_j} = -1 on this grid, so sin 3t aliases onto sin 2t.
        assert!((x.coeff(0, -2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analyze_rejects_even_counts() {
        assert_eq!(
            analyze(1, &[0.0; 4]),
            Err(Error::EvenSampleCount { count: 4 })
        );
    }

    #[test]
    fn eval_examples() {
        let c = PeriodicFn::from_fn(1, 3, |t| vec![t.cos()]).unwrap();
        assert!((c.eval(PI / 3.0)[0] - 0.5).abs() < 1e-15);
        let mut b0 = PeriodicFn::zeros(1, 2);
        b0.set_coeff(0, 0, 1.0);
        for t in [-3.0, 0.0, 0.4, 11.0] {
            assert_eq!(b0.eval(t)[0], 0.5);
        }
        let s = PeriodicFn::from_fn(1, 1, |t| vec![t.sin()]).unwrap();
        assert!((s.eval(3.5 * PI)[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn round_trip_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_fn(&mut rng, 3, 7);
        let y = analyze(3, &x.sample(15)).unwrap();
        assert!(max_diff(&x, &y) < 1e-13);
        let pts = grid(7);
        let s = x.sample(15);
        for (j, &t) in pts.iter().enumerate() {
            let v = x.eval(t);
            for i in 0..3 {
                assert!((v[i] - s[i * 15 + j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn analyze_grid_accepts_even_oversampled_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_fn(&mut rng, 2, 5);
        let samples = x.sample_from(64, 0.0);
        let y = analyze_grid(2, &samples, 5, 0.0).unwrap();
        assert!(max_diff(&x, &y) < 1e-13);
    }

    #[test]
    fn projection_examples() {
        let x = PeriodicFn::from_fn(1, 6, |t| vec![t.cos() + (5.0 * t).cos()]).unwrap();
        let p = project(&x, 2, Projection::P);
        let c = PeriodicFn::from_fn(1, 6, |t| vec![t.cos()]).unwrap();
        assert!(max_diff(&p, &c) < 1e-14);
        assert_eq!(project(&x, 6, Projection::P), x);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_fn(&mut rng, 2, 8);
        let sum = &project(&y, 3, Projection::P) + &project(&y, 3, Projection::Q);
        assert!(max_diff(&sum, &y) < 1e-14);
    }

    #[test]
    fn projector_factors_through_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_fn(&mut rng, 2, 9);
        let via = y.restrict(4).embed();
        assert!(max_diff(&via, &project(&y, 4, Projection::P)) < 1e-15);
        let p = y.restrict(4);
        assert_eq!(p.embed().restrict(4), p);
    }

    #[test]
    fn antiderivative_examples() {
        for k in 1..=3 {
            let kf = k as f64;
            let x = PeriodicFn::from_fn(1, 4, |t| vec![(kf * t).cos()]).unwrap();
            let want = PeriodicFn::from_fn(1, 4, |t| vec![(kf * t).sin() / kf]).unwrap();
            assert!(max_diff(&antiderivative(&x), &want) < 1e-14);
        }
        let c = PeriodicFn::constant(&[2.5], 3);
        assert!(antiderivative(&c).coeff_norm() == 0.0);
        let s = PeriodicFn::from_fn(1, 2, |t| vec![t.sin()]).unwrap();
        let want = PeriodicFn::from_fn(1, 2, |t| vec![1.0 - t.cos()]).unwrap();
        let l = antiderivative(&s);
        assert!(max_diff(&l, &want) < 1e-14);
        assert!(l.eval(0.0)[0].abs() < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let c = PeriodicFn::from_fn(1, 2, |t| vec![t.cos()]).unwrap();
        let s = PeriodicFn::from_fn(1, 2, |t| vec![-t.sin()]).unwrap();
        assert!(max_diff(&shift(&c, PI / 2.0), &s) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_fn(&mut rng, 2, 6);
        assert!(max_diff(&shift(&x, 2.0 * PI), &x) < 1e-13);
        assert!(max_diff(&shift(&shift(&x, 0.3), -0.3), &x) < 1e-13);
        for s in [-1.0, 0.2, 2.9] {
            assert!((shift(&x, 0.7).eval(s)[1] - x.eval(0.7 + s)[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn differentiate_examples() {
        for k in 1..=3 {
            let kf = k as f64;
            let x = PeriodicFn::from_fn(1, 4, |t| vec![(kf * t).sin()]).unwrap();
            let want = PeriodicFn::from_fn(1, 4, |t| vec![kf * (kf * t).cos()]).unwrap();
            assert!(max_diff(&differentiate(&x), &want) < 1e-13);
        }
        assert_eq!(differentiate(&PeriodicFn::constant(&[3.0], 2)).coeff_norm(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_fn(&mut rng, 2, 10);
        let back = differentiate(&antiderivative(&x));
        let mut centered = x.clone();
        centered.set_coeff(0, 0, 0.0);
        centered.set_coeff(1, 0, 0.0);
        assert!(max_diff(&back, &centered) < 1e-12);
    }

    #[test]
    fn shift_preserves_sup_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_fn(&mut rng, 1, 6);
        let dense = |y: &PeriodicFn| y.sample(20_001).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n0 = dense(&x);
        for t in [0.1, 1.3, -2.2] {
            assert!((dense(&shift(&x, t)) - n0).abs() < 1e-5 * n0);
        }
    }

    #[test]
    fn resize_and_restrict_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_fn(&mut rng, 2, 3);
        assert_eq!(x.resized(8).resized(3), x);
        assert_eq!(x.restrict(6).resized(3), x.restrict(3));
    }
}
