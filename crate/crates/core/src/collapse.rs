//! Constructive upper bounds for K(f, δ; L_q(T^d), W_p^ψ(T^d)) with 0 < p < 1.
//!
//! Given T_μ close to f, the lattice identity
//!
//! T_μ(x) = (2M+1)^{-d} Σ_ℓ ψ₁(D)T_μ(t_ℓ) · ψ̃(D)𝒱_{2^m}(x - t_ℓ) + T̂_μ(0)
//!
//! holds exactly once 2^m ≥ μ and M = μ + 2^{m+1}. Replacing 𝒱_{2^m} by
//! 𝒱_{2^n}, n > m, gives a competitor g with ‖T_μ - g‖_q small for large m and
//! ‖ψ(D)g‖_p small for large n, which is where p < 1 enters.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Leg, Result};
use crate::fft;
use crate::symbols::{apply_multiplier, sin2_sum, CutoffProfile, HomogeneousSymbol, Multiplier};
use crate::torus::{quasi_norm, sample_folded, translate, ExponentPair, TrigPoly, DEFAULT_OVERSAMPLE};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Tolerance of the two-path consistency checks inside [`build_candidate`],
/// relative to the largest coefficient involved.
const CROSS_CHECK_TOL: f64 = 1e-9;

/// Identity deviations above this indicate an implementation fault.
const IDENTITY_FAIL_TOL: f64 = 1e-6;

/// Named inputs f on the torus. All are real-valued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// An explicit polynomial.
    Poly { poly: TrigPoly },
    /// Σ_{j=0}^{levels} 2^{-j} cos(2^j x₁), of degree 2^levels.
    Lacunary { levels: u32 },
    /// Σ_{0<|k|≤degree} |k|^{-decay} e^{ikx₁}, a sawtooth-like series.
    PowerDecay { degree: usize, decay: f64 },
}

impl TestFunction {
    pub fn to_poly(&self, d: usize) -> Result<TrigPoly> {
        match self {
            TestFunction::Poly { poly } => {
                if poly.d() != d {
                    return Err(Error::invalid("test polynomial has the wrong dimension"));
                }
                Ok(poly.clone())
            }
            TestFunction::Lacunary { levels } => {
                if *levels > 24 {
                    return Err(Error::invalid("lacunary test function limited to 24 levels"));
                }
                let mut p = TrigPoly::zeros(d, 1usize << levels)?;
                for j in 0..=*levels {
                    let k = 1i64 << j;
                    let a = Complex64::new(0.5 * 2f64.powi(-(j as i32)), 0.0);
                    let (kp, km) = ([k, 0], [-k, 0]);
                    p.set_coeff(&kp[..d], a);
                    p.set_coeff(&km[..d], a);
                }
                Ok(p)
            }
            TestFunction::PowerDecay { degree, decay } => {
                let n = *degree as i64;
                TrigPoly::from_fn(d, *degree, |k| {
                    let rest_zero = k[1..d].iter().all(|&v| v == 0);
                    if k[0] == 0 || !rest_zero || k[0].abs() > n {
                        ZERO
                    } else {
                        Complex64::new((k[0].abs() as f64).powf(-decay), 0.0)
                    }
                })
            }
        }
    }
}

/// Upper limits of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_m: u32,
    pub max_n: u32,
    /// Largest degree tried for T_μ before giving up on the approximation leg.
    #[serde(default = "default_max_mu")]
    pub max_mu: usize,
}

fn default_max_mu() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseConfig {
    #[serde(default = "default_dim")]
    pub d: usize,
    pub f: TestFunction,
    pub exponents: ExponentPair,
    pub symbol: HomogeneousSymbol,
    pub delta: f64,
    pub epsilon: f64,
    pub mu: usize,
    pub limits: SearchLimits,
    /// Permits p ≥ 1, for control runs where no collapse is expected.
    #[serde(default)]
    pub contrast: bool,
}

fn default_dim() -> usize {
    1
}

impl CollapseConfig {
    pub fn validate(&self) -> Result<()> {
        let ExponentPair { p, q } = self.exponents;
        if self.d != 1 && self.d != 2 {
            return Err(Error::invalid("d must be 1 or 2"));
        }
        if !self.symbol.supports_dim(self.d) {
            return Err(Error::invalid("symbol is not defined in this dimension"));
        }
        if !(p > 0.0) || (!self.contrast && p >= 1.0) || p.is_infinite() {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
        }
        if !(q > 0.0) {
            return Err(Error::invalid(format!("q must lie in (0, ∞], got {q}")));
        }
        let floor = (self.d as f64 * (1.0 - self.exponents.inv_q())).max(0.0);
        if self.symbol.alpha() <= floor {
            return Err(Error::invalid(format!(
                "α = {} must exceed max(0, d(1 - 1/q)) = {floor}",
                self.symbol.alpha()
            )));
        }
        if !(self.delta > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::invalid("δ and ε must be positive"));
        }
        if self.mu == 0 {
            return Err(Error::invalid("μ must be at least 1"));
        }
        if self.limits.max_n <= self.limits.max_m && self.limits.max_n < 1 {
            return Err(Error::invalid("max_n must allow at least one n > m"));
        }
        Ok(())
    }
}

/// Right-hand sides of the I₁ and I₂ bounds with all absolute constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryShapes {
    /// (2^{m+2}+2μ+1)^{d(1-q₁)} 2^{-q₁(α+d(1/q-1))m} ‖ψ₁(D)T_μ‖_{q₁}^{q₁}, a bound shape for I₁^{q₁}.
    pub i1_pow: f64,
    /// (2M+1)^{d(1-p)} 2^{d(p-1)n} ‖ψ₁(D)T_μ‖_p^p, a bound shape for I₂^p.
    pub i2_pow: f64,
    pub shape_only: bool,
}

/// One evaluated (m, n) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub mu: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u32>,
    pub m: u32,
    pub n: u32,
    pub i1: f64,
    pub i2: f64,
    pub k_upper: f64,
    pub theory_i1: f64,
    pub theory_i2: f64,
    /// Whether this probe lowered the best bound so far.
    pub accepted: bool,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// The certificate of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    /// "T" for the torus, "R" for the line.
    pub domain: String,
    pub mu: usize,
    pub m: u32,
    pub n: u32,
    /// M = μ + 2^{m+1}.
    pub big_m: usize,
    pub i1: f64,
    pub i2: f64,
    pub approx_err: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub q1: f64,
    /// (approx_err^{q₁} + (I₁ + δ I₂)^{q₁})^{1/q₁}.
    pub k_upper: f64,
    /// approx_err^{q₁} + I₁^{q₁} + (δ I₂)^{q₁}, the quantity compared with ε.
    pub budget_used: f64,
    pub theory_i1: f64,
    pub theory_i2: f64,
    pub shape_only: bool,
    pub identity_deviation: f64,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<f64>,
    pub probes: Vec<Probe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<TrigPoly>,
}

impl CollapseReport {
    pub(crate) fn empty(domain: &str, delta: f64, epsilon: f64, q1: f64) -> Self {
        CollapseReport {
            domain: domain.to_string(),
            mu: 0,
            m: 0,
            n: 0,
            big_m: 0,
            i1: f64::NAN,
            i2: f64::NAN,
            approx_err: f64::NAN,
            delta,
            epsilon,
            q1,
            k_upper: f64::INFINITY,
            budget_used: f64::INFINITY,
            theory_i1: f64::NAN,
            theory_i2: f64::NAN,
            shape_only: true,
            identity_deviation: f64::NAN,
            certified: false,
            lambda: None,
            j1: None,
            j2: None,
            probes: Vec::new(),
            g: None,
        }
    }
}

/// (a^{q₁} + (b + δc)^{q₁})^{1/q₁}.
pub fn k_upper(approx_err: f64, i1: f64, i2: f64, delta: f64, q1: f64) -> f64 {
    (approx_err.powf(q1) + (i1 + delta * i2).powf(q1)).powf(1.0 / q1)
}

fn v_scale(m: u32) -> f64 {
    (1u64 << m) as f64
}

/// M = μ + 2^{m+1}.
pub fn lattice_m(mu: usize, m: u32) -> usize {
    mu + (2usize << m)
}

/// T_μ as the de la Vallée Poussin mean of f at scale μ/2, with ‖f - T_μ‖_q.
/// A polynomial of degree ≤ μ is returned unchanged with error 0.
pub fn initial_approximant(f: &TrigPoly, mu: usize, q: f64) -> Result<(TrigPoly, f64)> {
    if mu == 0 {
        return Err(Error::invalid("μ must be at least 1"));
    }
    if f.effective_degree() <= mu {
        return Ok((f.with_degree(mu), 0.0));
    }
    let v = CutoffProfile;
    let d = f.d();
    let scale = mu as f64 / 2.0;
    let t = f
        .with_degree(mu)
        .map(|k, c| c * v.at_scaled_freq(k, d, scale));
    let err = quasi_norm(&f.sub(&t), q, DEFAULT_OVERSAMPLE)?;
    Ok((t, err))
}

/// [`initial_approximant`] that fails when ‖f - T_μ‖_q exceeds `budget`.
pub fn approximant_within(f: &TrigPoly, mu: usize, q: f64, budget: f64) -> Result<(TrigPoly, f64)> {
    let (t, err) = initial_approximant(f, mu, q)?;
    if err > budget {
        return Err(Error::ApproximationTargetMissed { achieved: err, budget });
    }
    Ok((t, err))
}

fn check_scales(t_mu: &TrigPoly, m: u32, sym: &HomogeneousSymbol) -> Result<usize> {
    let mu = t_mu.degree().max(1);
    if (1usize << m) < mu {
        return Err(Error::invalid(format!("2^m = {} must be at least μ = {mu}", 1usize << m)));
    }
    if !sym.supports_dim(t_mu.d()) {
        return Err(Error::invalid("symbol is not defined in this dimension"));
    }
    Ok(mu)
}

/// ψ̃(D)𝒱_{2^m}: coefficients (Σ sin²k_j) v(k/2^m)/ψ(k).
pub fn tilde_kernel(m: u32, sym: &HomogeneousSymbol, v: &CutoffProfile, d: usize) -> Result<TrigPoly> {
    let scale = v_scale(m);
    TrigPoly::from_fn_par(d, 2usize << m, |k| {
        let w = v.at_scaled_freq(k, d, scale);
        if w == 0.0 || k[..d].iter().all(|&x| x == 0) {
            return ZERO;
        }
        sin2_sum(k, d) * w / sym.at_freq(k, d)
    })
}

fn node_point(flat: usize, side: usize, d: usize) -> Vec<f64> {
    let h = 2.0 * PI / side as f64;
    match d {
        1 => vec![h * flat as f64],
        _ => vec![h * (flat / side) as f64, h * (flat % side) as f64],
    }
}

/// Assembles the right-hand side of the lattice identity term by term
/// (translate, scale, sum over all (2M+1)^d nodes) and returns the largest
/// coefficient deviation from T_μ.
pub fn representation_identity_check(
    t_mu: &TrigPoly,
    m: u32,
    sym: &HomogeneousSymbol,
    v: &CutoffProfile,
) -> Result<f64> {
    let mu = check_scales(t_mu, m, sym)?;
    let d = t_mu.d();
    let side = 2 * lattice_m(mu, m) + 1;
    let weights = sample_folded(&apply_multiplier(t_mu, Multiplier::PsiOne, sym), &vec![side; d]).into_samples();
    let kernel = tilde_kernel(m, sym, v, d)?;
    let total = weights.len();
    let zero = || TrigPoly::zeros(d, kernel.degree()).expect("validated dimension");
    let sum = (0..total)
        .into_par_iter()
        .fold(zero, |acc, flat| {
            let a = weights[flat];
            if a == ZERO {
                return acc;
            }
            acc.add(&translate(&kernel, &node_point(flat, side, d)).scale(a))
        })
        .reduce(zero, |a, b| a.add(&b));
    let mut rhs = sum.scale(Complex64::new(1.0 / total as f64, 0.0));
    let origin = [0i64, 0];
    let c0 = rhs.coeff(&origin[..d]) + t_mu.mean();
    rhs.set_coeff(&origin[..d], c0);
    let deviation = rhs.max_coeff_deviation(t_mu);
    if deviation > IDENTITY_FAIL_TOL {
        return Err(Error::IdentityBroken { deviation });
    }
    Ok(deviation)
}

/// The competitor g at scales (m, n) with its image ψ(D)g and the residual T_μ - g.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub big_m: usize,
    pub g: TrigPoly,
    pub psi_dg: TrigPoly,
    pub residual: TrigPoly,
}

/// Builds g = T̂_μ(0) + (2M+1)^{-d} Σ_ℓ ψ₁(D)T_μ(t_ℓ) ψ̃(D)𝒱_{2^n}(· - t_ℓ)
/// and ψ(D)g in the spectral domain.
///
/// The node sum is a product of kernel coefficients with the discrete Fourier
/// transform of the node samples, so the whole assembly costs one transform
/// of size (2M+1)^d plus a pass over the 2^{n+1} box. ψ(D)g and T_μ - g are
/// assembled independently and checked against apply_multiplier(g, ψ) and
/// the subtraction.
pub fn build_candidate(
    t_mu: &TrigPoly,
    m: u32,
    n: u32,
    sym: &HomogeneousSymbol,
    v: &CutoffProfile,
) -> Result<Candidate> {
    if n < m {
        return Err(Error::invalid("n must be at least m"));
    }
    let mu = check_scales(t_mu, m, sym)?;
    let d = t_mu.d();
    let big_m = lattice_m(mu, m);
    let side = 2 * big_m + 1;
    let sizes = vec![side; d];
    let mut ahat = sample_folded(&apply_multiplier(t_mu, Multiplier::PsiOne, sym), &sizes).into_samples();
    fft::fftn_in_place(&mut ahat, &sizes, false);
    let norm = 1.0 / ahat.len() as f64;
    let lookup = |k: [i64; 2]| -> Complex64 {
        let mut idx = 0usize;
        for &kj in &k[..d] {
            idx = idx * side + kj.rem_euclid(side as i64) as usize;
        }
        ahat[idx] * norm
    };

    let deg = 2usize << n;
    let (sm, sn) = (v_scale(m), v_scale(n));
    let t0 = t_mu.mean();
    let is_origin = |k: [i64; 2]| k[..d].iter().all(|&x| x == 0);

    let psi_dg = TrigPoly::from_fn_par(d, deg, |k| {
        let w = v.at_scaled_freq(k, d, sn);
        if w == 0.0 || is_origin(k) {
            return ZERO;
        }
        sin2_sum(k, d) * w * lookup(k)
    })?;
    let g = TrigPoly::from_fn_par(d, deg, |k| {
        if is_origin(k) {
            return t0;
        }
        let w = v.at_scaled_freq(k, d, sn);
        if w == 0.0 {
            return ZERO;
        }
        sin2_sum(k, d) * w * lookup(k) / sym.at_freq(k, d)
    })?;
    let residual = TrigPoly::from_fn_par(d, deg, |k| {
        if is_origin(k) {
            return ZERO;
        }
        let dw = v.at_scaled_freq(k, d, sm) - v.at_scaled_freq(k, d, sn);
        if dw == 0.0 {
            return ZERO;
        }
        sin2_sum(k, d) * dw * lookup(k) / sym.at_freq(k, d)
    })?;

    let via_mult = apply_multiplier(&g, Multiplier::Psi, sym);
    let dev = via_mult.max_coeff_deviation(&psi_dg);
    if dev > CROSS_CHECK_TOL * psi_dg.max_abs_coeff().max(1.0) {
        return Err(Error::IdentityBroken { deviation: dev });
    }
    let direct = t_mu.sub(&g);
    let dev = direct.max_coeff_deviation(&residual);
    if dev > CROSS_CHECK_TOL * t_mu.max_abs_coeff().max(1.0) {
        return Err(Error::IdentityBroken { deviation: dev });
    }
    Ok(Candidate {
        big_m,
        g,
        psi_dg,
        residual,
    })
}

/// (I₁, I₂) = (‖T_μ - g‖_q, ‖ψ(D)g‖_p).
pub fn measure_split(candidate: &Candidate, exponents: &ExponentPair) -> Result<(f64, f64)> {
    let i1 = quasi_norm(&candidate.residual, exponents.q, DEFAULT_OVERSAMPLE)?;
    let i2 = quasi_norm(&candidate.psi_dg, exponents.p, DEFAULT_OVERSAMPLE)?;
    Ok((i1, i2))
}

/// ‖ψ₁(D)T_μ‖_{q₁} and ‖ψ₁(D)T_μ‖_p, the data-dependent factors of the bounds.
pub fn psi_one_norms(t_mu: &TrigPoly, sym: &HomogeneousSymbol, exponents: &ExponentPair) -> Result<(f64, f64)> {
    let a = apply_multiplier(t_mu, Multiplier::PsiOne, sym);
    Ok((
        quasi_norm(&a, exponents.q1(), DEFAULT_OVERSAMPLE)?,
        quasi_norm(&a, exponents.p, DEFAULT_OVERSAMPLE)?,
    ))
}

/// The explicit m- and n-dependence of the I₁^{q₁} and I₂^p bounds times the
/// measured ψ₁ norms; absolute constants are 1.
pub fn theoretical_bounds(
    mu: usize,
    m: u32,
    n: u32,
    d: usize,
    alpha: f64,
    exponents: &ExponentPair,
    psi_one_q1: f64,
    psi_one_p: f64,
) -> TheoryShapes {
    let (p, q1) = (exponents.p, exponents.q1());
    let df = d as f64;
    let rate = alpha + df * (exponents.inv_q() - 1.0);
    let nodes = 2f64.powi(m as i32 + 2) + 2.0 * mu as f64 + 1.0;
    let i1_pow = nodes.powf(df * (1.0 - q1)) * 2f64.powf(-q1 * rate * m as f64) * psi_one_q1.powf(q1);
    let big_m = lattice_m(mu, m) as f64;
    let i2_pow = (2.0 * big_m + 1.0).powf(df * (1.0 - p)) * 2f64.powf(df * (p - 1.0) * n as f64) * psi_one_p.powf(p);
    TheoryShapes {
        i1_pow,
        i2_pow,
        shape_only: true,
    }
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Runs the dyadic search over (m, n) and returns the first certificate with
/// approx_err^{q₁} + I₁^{q₁} + (δ I₂)^{q₁} < ε.
///
/// μ doubles until the approximation leg is within ε/3. Then m starts at
/// ⌈log₂ μ⌉ and for each m, n climbs from m+1; once I₁^{q₁} ≥ ε/3 the next n
/// cannot help, so m advances. Every evaluated pair is recorded as a probe.
pub fn collapse_search(cfg: &CollapseConfig) -> Result<CollapseReport> {
    cfg.validate()?;
    let v = CutoffProfile;
    let ex = cfg.exponents;
    let q1 = ex.q1();
    let third = cfg.epsilon / 3.0;
    let f = cfg.f.to_poly(cfg.d)?;
    let mut report = CollapseReport::empty("T", cfg.delta, cfg.epsilon, q1);

    let mut mu = cfg.mu;
    let (t_mu, approx_err) = loop {
        let (t, err) = initial_approximant(&f, mu, ex.q)?;
        if err.powf(q1) < third {
            break (t, err);
        }
        report.mu = mu;
        report.approx_err = err;
        if mu * 2 > cfg.limits.max_mu {
            return Err(Error::BudgetExhausted {
                leg: Leg::Approximation,
                report: Box::new(report),
            });
        }
        mu *= 2;
    };
    report.mu = mu;
    report.approx_err = approx_err;

    let m_start = ceil_log2(mu);
    if m_start > cfg.limits.max_m {
        return Err(Error::BudgetExhausted {
            leg: Leg::I1,
            report: Box::new(report),
        });
    }
    report.identity_deviation = representation_identity_check(&t_mu, m_start, &cfg.symbol, &v)?;
    let (norm_q1, norm_p) = psi_one_norms(&t_mu, &cfg.symbol, &ex)?;

    let mut best: Option<(Probe, Candidate)> = None;
    for m in m_start..=cfg.limits.max_m {
        for n in (m + 1)..=cfg.limits.max_n {
            let started = Instant::now();
            let cand = build_candidate(&t_mu, m, n, &cfg.symbol, &v)?;
            let (i1, i2) = measure_split(&cand, &ex)?;
            let shapes = theoretical_bounds(mu, m, n, cfg.d, cfg.symbol.alpha(), &ex, norm_q1, norm_p);
            let k = k_upper(approx_err, i1, i2, cfg.delta, q1);
            let improves = best.as_ref().map_or(true, |(b, _)| k < b.k_upper);
            let probe = Probe {
                mu,
                lambda: None,
                m,
                n,
                i1,
                i2,
                k_upper: k,
                theory_i1: shapes.i1_pow,
                theory_i2: shapes.i2_pow,
                accepted: improves,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            };
            report.probes.push(probe.clone());
            let used = approx_err.powf(q1) + i1.powf(q1) + (cfg.delta * i2).powf(q1);
            if improves {
                best = Some((probe, cand));
            }
            if used < cfg.epsilon {
                let (probe, cand) = best.take().expect("just stored");
                fill(&mut report, &probe, &cand, used, true);
                return Ok(report);
            }
            if i1.powf(q1) >= third {
                break;
            }
        }
    }
    // The failing leg is the one that keeps the best probe over budget.
    let mut leg = Leg::I2;
    if let Some((probe, cand)) = best {
        let used = approx_err.powf(q1) + probe.i1.powf(q1) + (cfg.delta * probe.i2).powf(q1);
        if probe.i1.powf(q1) >= third {
            leg = Leg::I1;
        }
        fill(&mut report, &probe, &cand, used, false);
    }
    Err(Error::BudgetExhausted {
        leg,
        report: Box::new(report),
    })
}

fn fill(report: &mut CollapseReport, probe: &Probe, cand: &Candidate, used: f64, certified: bool) {
    report.m = probe.m;
    report.n = probe.n;
    report.big_m = cand.big_m;
    report.i1 = probe.i1;
    report.i2 = probe.i2;
    report.k_upper = probe.k_upper;
    report.budget_used = used;
    report.theory_i1 = probe.theory_i1;
    report.theory_i2 = probe.theory_i2;
    report.certified = certified;
    report.g = Some(cand.g.clone());
}
