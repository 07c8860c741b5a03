//! Trigonometric polynomials on the torus T^d (d = 1, 2), their uniform-grid
//! samples, normalized L_p quasi-norms and difference operators.
//!
//! The torus carries the normalized measure dx/(2π)^d, so every L_p
//! quasi-norm is a plain average over the torus and ‖1‖_p = 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Frequency vector. For d = 1 the second component is always zero.
pub type FreqIndex = [i64; 2];

/// Default oversampling factor of [`quasi_norm`] grids relative to 2N+1.
pub const DEFAULT_OVERSAMPLE: usize = 8;

/// Relative change tolerated between a quasi-norm and its refined value.
pub const REFINE_TOL: f64 = 1e-3;

/// Refined grids larger than this are refused.
const MAX_GRID_POINTS: usize = 1 << 26;

/// Smallest quasi-norm grid per axis for d = 1 and d = 2. Low-degree
/// polynomials with zeros give |f|^p cusps that coarse grids resolve poorly.
const MIN_NORM_GRID: [usize; 2] = [4096, 256];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn check_dim(d: usize) -> Result<()> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension must be 1 or 2, got {d}")))
    }
}

/// A trigonometric polynomial Σ_{k ∈ [-N,N]^d} c_k e^{i(k,x)}.
///
/// Coefficients are stored densely, row-major, with k_j + N as the axis index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffRepr", into = "CoeffRepr")]
pub struct TrigPoly {
    d: usize,
    degree: usize,
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffRepr {
    d: usize,
    degree: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<TrigPoly> for CoeffRepr {
    fn from(p: TrigPoly) -> Self {
        CoeffRepr {
            d: p.d,
            degree: p.degree,
            re: p.coeffs.iter().map(|c| c.re).collect(),
            im: p.coeffs.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<CoeffRepr> for TrigPoly {
    type Error = Error;

    fn try_from(r: CoeffRepr) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::invalid("re and im arrays differ in length"));
        }
        let coeffs = r
            .re
            .into_iter()
            .zip(r.im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        TrigPoly::from_coeffs(r.d, r.degree, coeffs)
    }
}

impl TrigPoly {
    pub fn zeros(d: usize, degree: usize) -> Result<Self> {
        check_dim(d)?;
        let side = 2 * degree + 1;
        Ok(TrigPoly {
            d,
            degree,
            coeffs: vec![ZERO; side.pow(d as u32)],
        })
    }

    pub fn constant(d: usize, c: Complex64) -> Result<Self> {
        let mut p = Self::zeros(d, 0)?;
        p.coeffs[0] = c;
        Ok(p)
    }

    /// c·e^{i(k,x)}, with degree max_j |k_j|.
    pub fn monomial(d: usize, k: &[i64], c: Complex64) -> Result<Self> {
        if k.len() != d {
            return Err(Error::invalid("frequency length must equal dimension"));
        }
        let degree = k.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
        let mut p = Self::zeros(d, degree)?;
        p.set_coeff(k, c);
        Ok(p)
    }

    pub fn from_coeffs(d: usize, degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_dim(d)?;
        let expected = (2 * degree + 1).pow(d as u32);
        if coeffs.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} coefficients for d={d}, degree={degree}, got {}",
                coeffs.len()
            )));
        }
        Ok(TrigPoly { d, degree, coeffs })
    }

    /// Builds the polynomial with coefficient `f(k)` on [-N, N]^d.
    pub fn from_fn(d: usize, degree: usize, mut f: impl FnMut(FreqIndex) -> Complex64) -> Result<Self> {
        let mut p = Self::zeros(d, degree)?;
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            *c = f(freq_of(d, degree, i));
        }
        Ok(p)
    }

    /// Parallel [`TrigPoly::from_fn`] for large kernels.
    pub fn from_fn_par(
        d: usize,
        degree: usize,
        f: impl Fn(FreqIndex) -> Complex64 + Sync,
    ) -> Result<Self> {
        use rayon::prelude::*;
        let mut p = Self::zeros(d, degree)?;
        p.coeffs
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, c)| *c = f(freq_of(d, degree, i)));
        Ok(p)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Points per axis of the coefficient box, 2N+1.
    pub fn side(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn freq(&self, flat: usize) -> FreqIndex {
        freq_of(self.d, self.degree, flat)
    }

    fn index(&self, k: &[i64]) -> Option<usize> {
        let n = self.degree as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &kj in k.iter().take(self.d) {
            if kj.abs() > n {
                return None;
            }
            idx = idx * side + (kj + n) as usize;
        }
        Some(idx)
    }

    /// Coefficient at `k`; zero outside the coefficient box.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.index(k).map_or(ZERO, |i| self.coeffs[i])
    }

    /// Panics if `k` lies outside the coefficient box.
    pub fn set_coeff(&mut self, k: &[i64], c: Complex64) {
        let i = self
            .index(k)
            .unwrap_or_else(|| panic!("frequency {k:?} outside degree {}", self.degree));
        self.coeffs[i] = c;
    }

    /// The mean value f̂(0).
    pub fn mean(&self) -> Complex64 {
        self.coeff(&[0, 0][..self.d])
    }

    /// Coefficient-wise map c_k -> f(k, c_k).
    pub fn map(&self, f: impl Fn(FreqIndex, Complex64) -> Complex64) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.freq(i), c))
            .collect();
        TrigPoly {
            d: self.d,
            degree: self.degree,
            coeffs,
        }
    }

    /// Zero-pads or truncates to a new degree.
    pub fn with_degree(&self, degree: usize) -> TrigPoly {
        let mut out = TrigPoly::zeros(self.d, degree).expect("dimension already validated");
        for (i, &c) in self.coeffs.iter().enumerate() {
            let k = self.freq(i);
            if let Some(j) = out.index(&k[..self.d]) {
                out.coeffs[j] = c;
            }
        }
        out
    }

    /// Largest max-norm |k|_∞ carrying a nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, _)| {
                let k = self.freq(i);
                k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize
            })
            .max()
            .unwrap_or(0)
    }

    /// Direct evaluation Σ c_k e^{i(k,x)}.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.d, "point dimension mismatch");
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, &c)| {
                let k = self.freq(i);
                let phase: f64 = x.iter().zip(k.iter()).map(|(xj, &kj)| xj * kj as f64).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> TrigPoly {
        self.map(|_, c| c * s)
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &TrigPoly, op: impl Fn(Complex64, Complex64) -> Complex64) -> TrigPoly {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let degree = self.degree.max(other.degree);
        let a = if self.degree == degree { self.clone() } else { self.with_degree(degree) };
        let b = if other.degree == degree { other.clone() } else { other.with_degree(degree) };
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| op(x, y)).collect();
        TrigPoly { d: self.d, degree, coeffs }
    }

    /// Spectral product (convolution on the torus): coefficients multiply.
    pub fn convolve(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let degree = self.degree.min(other.degree);
        TrigPoly::from_fn(self.d, degree, |k| {
            self.coeff(&k[..self.d]) * other.coeff(&k[..self.d])
        })
        .expect("dimension already validated")
    }

    /// Whether f̂(-k) = conj f̂(k) for all k, i.e. the polynomial is real-valued.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().enumerate().all(|(i, &c)| {
            let k = self.freq(i);
            let neg = [-k[0], -k[1]];
            (self.coeff(&neg[..self.d]) - c.conj()).norm() <= tol
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max |a_k - b_k| over the union of the two coefficient boxes.
    pub fn max_coeff_deviation(&self, other: &TrigPoly) -> f64 {
        self.sub(other).max_abs_coeff()
    }
}

fn freq_of(d: usize, degree: usize, flat: usize) -> FreqIndex {
    let side = 2 * degree + 1;
    let n = degree as i64;
    match d {
        1 => [flat as i64 - n, 0],
        _ => [(flat / side) as i64 - n, (flat % side) as i64 - n],
    }
}

/// Samples on the uniform grid x_j = 2πj/M per axis, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSignal {
    d: usize,
    sizes: Vec<usize>,
    samples: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    d: usize,
    sizes: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<GridSignal> for GridRepr {
    fn from(g: GridSignal) -> Self {
        GridRepr {
            d: g.d,
            sizes: g.sizes,
            re: g.samples.iter().map(|c| c.re).collect(),
            im: g.samples.iter().map(|c| c.im).collect(),
        }
    }
}

impl TryFrom<GridRepr> for GridSignal {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::invalid("re and im arrays differ in length"));
        }
        let samples = r
            .re
            .into_iter()
            .zip(r.im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        GridSignal::new(r.d, r.sizes, samples)
    }
}

impl GridSignal {
    pub fn new(d: usize, sizes: Vec<usize>, samples: Vec<Complex64>) -> Result<Self> {
        check_dim(d)?;
        if sizes.len() != d || sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("one positive size per axis required"));
        }
        if samples.len() != sizes.iter().product::<usize>() {
            return Err(Error::invalid("sample count does not match grid sizes"));
        }
        Ok(GridSignal { d, sizes, samples })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(d: usize, sizes: Vec<usize>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        check_dim(d)?;
        let total: usize = sizes.iter().product();
        let samples = (0..total)
            .map(|flat| {
                let x = grid_point(&sizes, flat);
                f(&x[..d])
            })
            .collect();
        GridSignal::new(d, sizes, samples)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        grid_point(&self.sizes, flat)[..self.d].to_vec()
    }
}

fn grid_point(sizes: &[usize], flat: usize) -> [f64; 2] {
    match sizes {
        [m] => [2.0 * PI * flat as f64 / *m as f64, 0.0],
        [r, c] => [
            2.0 * PI * (flat / c) as f64 / *r as f64,
            2.0 * PI * (flat % c) as f64 / *c as f64,
        ],
        _ => unreachable!(),
    }
}

fn check_sizes(poly_d: usize, degree: usize, sizes: &[usize]) -> Result<()> {
    if sizes.len() != poly_d {
        return Err(Error::invalid("one grid size per axis required"));
    }
    let needed = 2 * degree + 1;
    if let Some(&size) = sizes.iter().find(|&&s| s < needed) {
        return Err(Error::UndersampledGrid { size, degree, needed });
    }
    Ok(())
}

/// Exact samples of `poly` on any uniform grid. Frequencies are folded modulo the
/// grid size, which leaves sample values unchanged even when the grid is too
/// coarse to recover the coefficients.
pub fn sample_folded(poly: &TrigPoly, sizes: &[usize]) -> GridSignal {
    assert_eq!(sizes.len(), poly.d(), "one grid size per axis required");
    let total: usize = sizes.iter().product();
    let mut buf = vec![ZERO; total];
    for (i, &c) in poly.coeffs().iter().enumerate() {
        if c == ZERO {
            continue;
        }
        let k = poly.freq(i);
        let mut idx = 0usize;
        for (j, &m) in sizes.iter().enumerate() {
            idx = idx * m + k[j].rem_euclid(m as i64) as usize;
        }
        buf[idx] += c;
    }
    fft::fftn_in_place(&mut buf, sizes, true);
    GridSignal {
        d: poly.d(),
        sizes: sizes.to_vec(),
        samples: buf,
    }
}

/// Samples of `poly` at x_j = 2πj/M via a fast transform.
pub fn dft_synthesize(poly: &TrigPoly, sizes: &[usize]) -> Result<GridSignal> {
    check_sizes(poly.d(), poly.degree(), sizes)?;
    Ok(sample_folded(poly, sizes))
}

/// The unique polynomial of degree ≤ `degree` matching band-limited samples;
/// content outside [-N, N]^d is discarded.
pub fn dft_analyze(signal: &GridSignal, degree: usize) -> Result<TrigPoly> {
    check_sizes(signal.d(), degree, signal.sizes())?;
    let mut buf = signal.samples().to_vec();
    fft::fftn_in_place(&mut buf, signal.sizes(), false);
    let total = buf.len() as f64;
    let sizes = signal.sizes();
    TrigPoly::from_fn(signal.d(), degree, |k| {
        let mut idx = 0usize;
        for (j, &m) in sizes.iter().enumerate() {
            idx = idx * m + k[j].rem_euclid(m as i64) as usize;
        }
        buf[idx] / total
    })
}

/// Normalized L_p quasi-norm of grid samples: the plain average of |f|^p, or max for p = ∞.
pub fn grid_quasi_norm(samples: &[Complex64], p: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    let sum: f64 = samples.iter().map(|c| c.norm().powf(p)).sum();
    (sum / samples.len() as f64).powf(1.0 / p)
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent must lie in (0, ∞], got {p}")))
    }
}

pub(crate) fn rel_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// ‖poly‖_p over the normalized torus, computed on a grid of
/// `oversample·(2N+1)` points per axis (at least 4096 for d = 1, 256 for d = 2),
/// refined by doubling until two successive values agree to [`REFINE_TOL`]
/// (at most three doublings).
pub fn quasi_norm(poly: &TrigPoly, p: f64, oversample: usize) -> Result<f64> {
    check_exponent(p)?;
    if oversample < 2 {
        return Err(Error::invalid("oversample must be at least 2"));
    }
    let eval = |factor: usize| -> Result<f64> {
        let m = (factor * poly.side()).max(MIN_NORM_GRID[poly.d() - 1] * factor / oversample);
        if m.pow(poly.d() as u32) > MAX_GRID_POINTS {
            return Err(Error::invalid(format!("quasi-norm grid of {m} points per axis is too large")));
        }
        let sizes = vec![m; poly.d()];
        Ok(grid_quasi_norm(sample_folded(poly, &sizes).samples(), p))
    };
    let mut factor = oversample;
    let mut prev = eval(factor)?;
    let mut change = f64::INFINITY;
    for _ in 0..3 {
        factor *= 2;
        let next = eval(factor)?;
        change = rel_change(prev, next);
        if change <= REFINE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergedQuadrature { rel_change: change })
}

/// [`quasi_norm`] with [`DEFAULT_OVERSAMPLE`].
pub fn quasi_norm_default(poly: &TrigPoly, p: f64) -> Result<f64> {
    quasi_norm(poly, p, DEFAULT_OVERSAMPLE)
}

/// Δ_h^r f(x) = Σ_ν (-1)^ν C(r,ν) f(x - (r/2 - ν)h), applied in the spectral domain.
///
/// The coefficient multiplier is (-2i sin((k,h)/2))^r.
pub fn symmetric_difference(poly: &TrigPoly, h: &[f64], r: u32) -> TrigPoly {
    assert_eq!(h.len(), poly.d(), "step dimension mismatch");
    poly.map(|k, c| {
        let theta: f64 = h.iter().zip(k.iter()).map(|(hj, &kj)| hj * kj as f64).sum();
        let factor = Complex64::new(0.0, -2.0 * (theta / 2.0).sin()).powu(r);
        c * factor
    })
}

/// f(x - t): coefficients pick up e^{-i(k,t)}.
pub fn translate(poly: &TrigPoly, t: &[f64]) -> TrigPoly {
    assert_eq!(t.len(), poly.d(), "shift dimension mismatch");
    poly.map(|k, c| {
        let phase: f64 = t.iter().zip(k.iter()).map(|(tj, &kj)| tj * kj as f64).sum();
        c * Complex64::from_polar(1.0, -phase)
    })
}

/// The pair (p, q) together with q₁ = min(q, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    #[serde(with = "crate::serde_exponent")]
    pub p: f64,
    #[serde(with = "crate::serde_exponent")]
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        Ok(ExponentPair { p, q })
    }

    pub fn q1(&self) -> f64 {
        self.q.min(1.0)
    }

    /// 1/q, with 1/∞ = 0.
    pub fn inv_q(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            1.0 / self.q
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn random_poly(rng: &mut ChaCha8Rng, d: usize, degree: usize) -> TrigPoly {
        TrigPoly::from_fn(d, degree, |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn random_real_poly(rng: &mut ChaCha8Rng, degree: usize) -> TrigPoly {
        let mut p = TrigPoly::zeros(1, degree).unwrap();
        p.set_coeff(&[0], c(rng.gen_range(-1.0..1.0), 0.0));
        for k in 1..=degree as i64 {
            let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            p.set_coeff(&[k], v);
            p.set_coeff(&[-k], v.conj());
        }
        p
    }

    #[test]
    fn synthesize_constant() {
        let p = TrigPoly::constant(1, c(1.0, 0.0)).unwrap();
        let g = dft_synthesize(&p, &[8]).unwrap();
        assert!(g.samples().iter().all(|s| (s - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn synthesize_single_mode() {
        let p = TrigPoly::monomial(1, &[3], c(1.0, 0.0)).unwrap();
        let g = dft_synthesize(&p, &[8]).unwrap();
        for (j, s) in g.samples().iter().enumerate() {
            let want = Complex64::from_polar(1.0, 3.0 * 2.0 * PI * j as f64 / 8.0);
            assert!((s - want).norm() < 1e-14);
        }
    }

    #[test]
    fn synthesize_rejects_undersampled_grid() {
        let p = TrigPoly::monomial(1, &[5], c(1.0, 0.0)).unwrap();
        assert!(matches!(
            dft_synthesize(&p, &[10]),
            Err(Error::UndersampledGrid { size: 10, degree: 5, needed: 11 })
        ));
        assert!(matches!(
            dft_analyze(&GridSignal::new(1, vec![4], vec![ZERO; 4]).unwrap(), 2),
            Err(Error::UndersampledGrid { .. })
        ));
    }

    #[test]
    fn round_trip_real_poly_degree_16_on_64_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_real_poly(&mut rng, 16);
        assert!(p.is_real(0.0));
        let back = dft_analyze(&dft_synthesize(&p, &[64]).unwrap(), 16).unwrap();
        assert!(back.max_coeff_deviation(&p) < 1e-12);
        // Samples of a real polynomial are real.
        let g = dft_synthesize(&p, &[64]).unwrap();
        assert!(g.samples().iter().all(|s| s.im.abs() < 1e-12));
    }

    #[test]
    fn analyze_constant_and_mode() {
        let g = GridSignal::new(1, vec![16], vec![c(1.0, 0.0); 16]).unwrap();
        let p = dft_analyze(&g, 0).unwrap();
        assert!((p.coeff(&[0]) - c(1.0, 0.0)).norm() < 1e-14);

        let g = GridSignal::from_fn(1, vec![16], |x| Complex64::from_polar(1.0, 2.0 * x[0])).unwrap();
        let p = dft_analyze(&g, 2).unwrap();
        for k in -2..=2 {
            let want = if k == 2 { 1.0 } else { 0.0 };
            assert!((p.coeff(&[k]) - c(want, 0.0)).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn samples_match_direct_evaluation_in_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_poly(&mut rng, 2, 3);
        let g = dft_synthesize(&p, &[7, 9]).unwrap();
        for flat in [0, 5, 17, 40, 62] {
            let x = g.point(flat);
            assert!((g.samples()[flat] - p.eval(&x)).norm() < 1e-12);
        }
        let back = dft_analyze(&g, 3).unwrap();
        assert!(back.max_coeff_deviation(&p) < 1e-12);
    }

    #[test]
    fn folded_sampling_is_exact_on_coarse_grids() {
        let p = TrigPoly::monomial(1, &[9], c(0.5, -1.0)).unwrap();
        let g = sample_folded(&p, &[5]);
        for (j, s) in g.samples().iter().enumerate() {
            let x = 2.0 * PI * j as f64 / 5.0;
            assert!((s - p.eval(&[x])).norm() < 1e-13);
        }
    }

    #[test]
    fn quasi_norm_trivial_values() {
        let one = TrigPoly::constant(1, c(1.0, 0.0)).unwrap();
        for p in [0.3, 0.5, 1.0, 2.0, f64::INFINITY] {
            assert_relative_eq!(quasi_norm_default(&one, p).unwrap(), 1.0, max_relative = 1e-14);
        }
        let e1 = TrigPoly::monomial(1, &[1], c(1.0, 0.0)).unwrap();
        assert_relative_eq!(quasi_norm_default(&e1, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        let zero = TrigPoly::zeros(1, 4).unwrap();
        assert_eq!(quasi_norm_default(&zero, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quasi_norm_half_of_one_plus_mode_matches_dense_reference() {
        // Independent reference: 10^6-point midpoint rule of |1 + e^{ix}|^{1/2}.
        let n = 1_000_000;
        let mut acc = 0.0;
        for j in 0..n {
            let x = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            acc += (2.0 + 2.0 * x.cos()).sqrt().sqrt();
        }
        let reference = (acc / n as f64).powi(2);

        let mut f = TrigPoly::zeros(1, 1).unwrap();
        f.set_coeff(&[0], c(1.0, 0.0));
        f.set_coeff(&[1], c(1.0, 0.0));
        let got = quasi_norm_default(&f, 0.5).unwrap();
        assert_relative_eq!(got, reference, max_relative = 1e-4);
    }

    #[test]
    fn quasi_norm_rejects_bad_arguments() {
        let one = TrigPoly::constant(1, c(1.0, 0.0)).unwrap();
        assert!(matches!(quasi_norm(&one, 0.0, 8), Err(Error::InvalidArgument(_))));
        assert!(matches!(quasi_norm(&one, 1.0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn second_difference_of_first_mode() {
        let f = TrigPoly::monomial(1, &[1], c(1.0, 0.0)).unwrap();
        let g = symmetric_difference(&f, &[1.0], 2);
        let want = -4.0 * (0.5f64).sin().powi(2);
        assert!((g.coeff(&[1]) - c(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn difference_annihilates_constants() {
        let f = TrigPoly::constant(2, c(3.0, 1.0)).unwrap();
        for r in 1..=4 {
            let g = symmetric_difference(&f, &[0.3, -1.2], r);
            assert_eq!(g.max_abs_coeff(), 0.0);
        }
    }

    fn binom(r: u32, nu: u32) -> f64 {
        (0..nu).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64)
    }

    fn stencil(f: &TrigPoly, x: &[f64], h: &[f64], r: u32) -> Complex64 {
        (0..=r)
            .map(|nu| {
                let s = r as f64 / 2.0 - nu as f64;
                let pt: Vec<f64> = x.iter().zip(h).map(|(xi, hi)| xi - s * hi).collect();
                let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
                f.eval(&pt) * (sign * binom(r, nu))
            })
            .sum()
    }

    #[test]
    fn spectral_difference_matches_stencil_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_poly(&mut rng, 1, 12);
        for r in 1..=4 {
            let h = [rng.gen_range(-2.0..2.0)];
            let g = symmetric_difference(&f, &h, r);
            for _ in 0..100 {
                let x = [rng.gen_range(0.0..2.0 * PI)];
                let err = (g.eval(&x) - stencil(&f, &x, &h, r)).norm();
                assert!(err < 1e-10, "r={r} err={err}");
            }
        }
    }

    #[test]
    fn translate_identities() {
        let f = TrigPoly::monomial(1, &[1], c(1.0, 0.0)).unwrap();
        let g = translate(&f, &[PI]);
        assert!((g.coeff(&[1]) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(translate(&f, &[0.0]), f);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_poly(&mut rng, 2, 6);
        let t = [0.7, -2.1];
        let back = translate(&translate(&f, &t), &[-0.7, 2.1]);
        assert!(back.max_coeff_deviation(&f) < 1e-14);
        let x = [0.4, 1.9];
        let shifted = translate(&f, &t).eval(&x);
        assert!((shifted - f.eval(&[x[0] - t[0], x[1] - t[1]])).norm() < 1e-12);
    }

    #[test]
    fn exponent_pair_q1() {
        assert_eq!(ExponentPair::new(0.5, 0.3).unwrap().q1(), 0.3);
        assert_eq!(ExponentPair::new(0.5, 2.0).unwrap().q1(), 1.0);
        assert_eq!(ExponentPair::new(0.5, f64::INFINITY).unwrap().q1(), 1.0);
        assert!(ExponentPair::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_poly(&mut rng, 2, 2);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"degree\":2") && s.contains("\"re\""));
        let back: TrigPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);

        let g = dft_synthesize(&p, &[5, 6]).unwrap();
        let back: GridSignal = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);

        let bad = r#"{"d":1,"degree":1,"re":[1.0],"im":[0.0]}"#;
        assert!(serde_json::from_str::<TrigPoly>(bad).is_err());

        let e = ExponentPair::new(0.5, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<ExponentPair>(&s).unwrap(), e);
    }
}
