use kcollapse::bandlimited::{lowfreq_split, BandlimitedFn};
use kcollapse::collapse::{build_candidate, collapse_search, CollapseConfig, SearchLimits, TestFunction};
use kcollapse::quadrature::{quadrature_mean, NodeSet};
use kcollapse::symbols::{make_modified_vallee, make_shell, make_vallee, multiplier_value};
use kcollapse::torus::{dft_analyze, dft_synthesize, quasi_norm_default, symmetric_difference};
use kcollapse::{CutoffProfile, ExponentPair, HomogeneousSymbol, Multiplier, TrigPoly};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn poly(seed: u64, d: usize, degree: usize) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TrigPoly::from_fn(d, degree, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
}

fn l2(p: &TrigPoly) -> f64 {
    p.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn symbols() -> Vec<HomogeneousSymbol> {
    vec![
        HomogeneousSymbol::weyl(0.5).unwrap(),
        HomogeneousSymbol::fractional_laplacian(1.0).unwrap(),
        HomogeneousSymbol::fractional_laplacian(1.7).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dft_round_trip(seed in any::<u64>(), degree in 0usize..=64, extra in 1usize..40) {
        let f = poly(seed, 1, degree);
        let grid = dft_synthesize(&f, &[2 * degree + extra]).unwrap();
        let back = dft_analyze(&grid, degree).unwrap();
        prop_assert!(l2(&back.sub(&f)) <= 1e-12 * l2(&f).max(1e-300));
    }

    #[test]
    fn dft_round_trip_2d(seed in any::<u64>(), degree in 0usize..=12) {
        let f = poly(seed, 2, degree);
        let grid = dft_synthesize(&f, &[2 * degree + 1, 2 * degree + 3]).unwrap();
        let back = dft_analyze(&grid, degree).unwrap();
        prop_assert!(l2(&back.sub(&f)) <= 1e-12 * l2(&f));
    }

    #[test]
    fn quasi_triangle(seed in any::<u64>(), degree in 1usize..24, pi in 0usize..3) {
        let p = [0.3, 0.5, 0.7][pi];
        let f = poly(seed, 1, degree);
        let g = poly(seed ^ 0x5555, 1, degree);
        let lhs = quasi_norm_default(&f.add(&g), p).unwrap().powf(p);
        let rhs = quasi_norm_default(&f, p).unwrap().powf(p) + quasi_norm_default(&g, p).unwrap().powf(p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-6), "{lhs} > {rhs}");
    }

    #[test]
    fn symmetric_difference_matches_stencil(seed in any::<u64>(), h in -3.0f64..3.0, r in 1u32..=4, x in 0.0f64..6.28) {
        let f = poly(seed, 1, 10);
        let spectral = symmetric_difference(&f, &[h], r).eval(&[x]);
        let mut stencil = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        for nu in 0..=r {
            let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
            stencil += f.eval(&[x - (r as f64 / 2.0 - nu as f64) * h]) * (sign * binom);
            binom = binom * (r - nu) as f64 / (nu + 1) as f64;
        }
        prop_assert!((spectral - stencil).norm() <= 1e-10 * (1.0 + stencil.norm()));
    }

    #[test]
    fn quasi_norm_scales(seed in any::<u64>(), c in -10.0f64..10.0, p in 0.2f64..2.0) {
        let f = poly(seed, 1, 12);
        let base = quasi_norm_default(&f, p).unwrap();
        let scaled = quasi_norm_default(&f.scale(Complex64::new(c, 0.0)), p).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * c.abs().max(1.0) * base);
    }

    #[test]
    fn symbol_homogeneity(x in -50.0f64..50.0, y in -50.0f64..50.0, si in 0usize..3) {
        prop_assume!(x.abs() + y.abs() > 1e-3);
        let sym = &symbols()[si];
        let a = sym.eval(&[x]).unwrap();
        let b = sym.eval(&[2.0 * x]).unwrap();
        prop_assert!((b - a * 2f64.powf(sym.alpha())).norm() <= 1e-10 * a.norm());
        if sym.supports_dim(2) {
            let a = sym.eval(&[x, y]).unwrap();
            let b = sym.eval(&[2.0 * x, 2.0 * y]).unwrap();
            prop_assert!((b - a * 2f64.powf(sym.alpha())).norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn multipliers_annihilate_constants(c in -5.0f64..5.0, si in 0usize..3) {
        let sym = &symbols()[si];
        let t = TrigPoly::constant(1, Complex64::new(c, 1.0)).unwrap();
        for mult in [Multiplier::Psi, Multiplier::PsiTilde, Multiplier::PsiOne] {
            prop_assert_eq!(kcollapse::symbols::apply_multiplier(&t, mult, sym).max_abs_coeff(), 0.0);
            prop_assert_eq!(multiplier_value(mult, sym, [0, 0], 2), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn vallee_reproduces_low_degree(seed in any::<u64>(), n in 2usize..32, frac in 0.0f64..=1.0) {
        let degree = (frac * n as f64) as usize;
        let t = poly(seed, 1, degree);
        let kernel = make_vallee(n, &CutoffProfile, 1).unwrap();
        let out = kernel.convolve(&t);
        prop_assert!(out.max_coeff_deviation(&t) <= 1e-12 * (1.0 + t.max_abs_coeff()));
    }

    #[test]
    fn quadrature_is_exact(seed in any::<u64>(), n in 1usize..64, frac in 0.0f64..=1.0) {
        let degree = (frac * (2 * n) as f64) as usize;
        let t = poly(seed, 1, degree);
        let q = quadrature_mean(&t, &NodeSet::new(n, 1).unwrap()).unwrap();
        prop_assert!((q - t.mean()).norm() <= 1e-12 * (1.0 + t.max_abs_coeff()));
    }

    #[test]
    fn quadrature_is_exact_2d(seed in any::<u64>(), n in 1usize..10) {
        let t = poly(seed, 2, 2 * n);
        let q = quadrature_mean(&t, &NodeSet::new(n, 2).unwrap()).unwrap();
        prop_assert!((q - t.mean()).norm() <= 1e-12 * (1.0 + t.max_abs_coeff()));
    }

    #[test]
    fn candidate_multiplier_consistency(m in 3u32..6, dn in 0u32..3, si in 0usize..3) {
        let t = TestFunction::Lacunary { levels: 3 }.to_poly(1).unwrap();
        let sym = &symbols()[si];
        let c = build_candidate(&t, m, m + dn, sym, &CutoffProfile).unwrap();
        let via = kcollapse::symbols::apply_multiplier(&c.g, Multiplier::Psi, sym);
        prop_assert!(via.max_coeff_deviation(&c.psi_dg) <= 1e-9 * c.psi_dg.max_abs_coeff().max(1.0));
        prop_assert!(t.sub(&c.g).max_coeff_deviation(&c.residual) <= 1e-9 * t.max_abs_coeff());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lowfreq_split_partitions(mu in 0i32..3, lambda in -2i32..6, xi in -20.0f64..20.0) {
        let g = BandlimitedFn::bump(mu);
        let (low, high) = lowfreq_split(&g, lambda);
        let total = low.spectrum(xi) + high.spectrum(xi);
        prop_assert!((total - g.spectrum(xi)).norm() <= 1e-12 * (1.0 + g.spectrum(xi).norm()));
        prop_assert!(low.sigma() <= g.sigma());
    }

    #[test]
    fn accepted_bounds_decrease(levels in 1u32..4, mu in 4usize..10) {
        let cfg = CollapseConfig {
            d: 1,
            f: TestFunction::Lacunary { levels },
            exponents: ExponentPair::new(0.5, 1.0).unwrap(),
            symbol: HomogeneousSymbol::weyl(0.5).unwrap(),
            delta: 1.0,
            epsilon: 1e-12,
            mu,
            limits: SearchLimits { max_m: 6, max_n: 8, max_mu: 64 },
            contrast: false,
        };
        let report = match collapse_search(&cfg) {
            Ok(r) => r,
            Err(kcollapse::Error::BudgetExhausted { report, .. }) => *report,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let accepted: Vec<f64> = report.probes.iter().filter(|p| p.accepted).map(|p| p.k_upper).collect();
        prop_assert!(!accepted.is_empty());
        prop_assert!(accepted.windows(2).all(|w| w[1] < w[0]));
        for p in &report.probes {
            prop_assert!(p.i1.is_finite() && p.i2.is_finite() && p.k_upper.is_finite());
        }
    }
}

#[test]
fn kernels_have_zero_mean() {
    for d in [1, 2] {
        for m in 1..5 {
            assert!(make_modified_vallee(m, &CutoffProfile, d).unwrap().mean().norm() < 1e-14);
        }
        for sym in symbols().iter().filter(|s| s.supports_dim(d)) {
            for nu in 1..5 {
                assert!(make_shell(nu, sym, &CutoffProfile, d).unwrap().mean().norm() < 1e-14);
            }
        }
    }
}

#[test]
fn multipliers_are_finite_near_the_origin() {
    for sym in symbols() {
        for k in [[1, 0], [-1, 0], [0, 1], [1, -1]] {
            for mult in [Multiplier::Psi, Multiplier::PsiTilde, Multiplier::PsiOne] {
                let d = if sym.supports_dim(2) { 2 } else { 1 };
                if d == 1 && k[0] == 0 {
                    continue;
                }
                assert!(multiplier_value(mult, &sym, k, d).norm().is_finite());
            }
        }
    }
}
