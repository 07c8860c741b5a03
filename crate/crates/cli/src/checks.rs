//! The property battery behind `kcollapse checks`.

use kcollapse::bandlimited::{nikolskii_conv_ratio, pp_sum_ratio, probe_points, sampling_identity_check, BandlimitedFn};
use kcollapse::quadrature::{mz_ratio, quadrature_mean, NodeSet};
use kcollapse::{Result, TrigPoly};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Sizes {
    Tiny,
    Default,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChecksConfig {
    pub seed: u64,
    pub sizes: Sizes,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub config_hash: String,
    pub check: &'static str,
    pub passed: bool,
    /// The measured quantity compared against `limit`.
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

struct Plan {
    quadrature_polys: usize,
    mz_instances: usize,
    mz_degree: usize,
    band_instances: usize,
}

impl Sizes {
    fn plan(self) -> Plan {
        match self {
            Sizes::Tiny => Plan {
                quadrature_polys: 20,
                mz_instances: 40,
                mz_degree: 8,
                band_instances: 3,
            },
            Sizes::Default => Plan {
                quadrature_polys: 200,
                mz_instances: 500,
                mz_degree: 16,
                band_instances: 20,
            },
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> Result<TrigPoly> {
    TrigPoly::from_fn(1, degree, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn check(hash: &str, name: &'static str, value: f64, limit: f64, detail: String) -> CheckResult {
    CheckResult {
        config_hash: hash.to_string(),
        check: name,
        passed: value <= limit,
        value,
        limit,
        detail,
    }
}

/// Runs every check. Each sub-check consumes its own stream derived from the seed.
pub fn run(cfg: &ChecksConfig, hash: &str) -> Result<Vec<CheckResult>> {
    let plan = cfg.sizes.plan();
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k));
    let mut out = Vec::new();

    let mut rng = stream(1);
    let mut worst: f64 = 0.0;
    for _ in 0..plan.quadrature_polys {
        let n = rng.gen_range(1..=128usize);
        let degree = rng.gen_range(0..=2 * n);
        let t = random_poly(&mut rng, degree)?;
        worst = worst.max((quadrature_mean(&t, &NodeSet::new(n, 1)?)? - t.mean()).norm());
    }
    out.push(check(
        hash,
        "exact_quadrature",
        worst,
        1e-12,
        format!("{} polynomials of degree ≤ 2n on 2n+1 nodes", plan.quadrature_polys),
    ));

    let mut rng = stream(2);
    for p in [0.3, 0.5, 1.0] {
        let maxes: Vec<f64> = [plan.mz_degree, 2 * plan.mz_degree]
            .iter()
            .map(|&n| -> Result<f64> {
                let nodes = NodeSet::new(n, 1)?;
                let mut max: f64 = 0.0;
                for _ in 0..plan.mz_instances {
                    max = max.max(mz_ratio(&random_poly(&mut rng, n)?, &nodes, p)?);
                }
                Ok(max)
            })
            .collect::<Result<_>>()?;
        out.push(check(
            hash,
            "mz_stability",
            maxes[1] / maxes[0] - 1.0,
            0.1,
            format!("p={p}: max ratio {:.4} at n={} and {:.4} at n={}", maxes[0], plan.mz_degree, maxes[1], 2 * plan.mz_degree),
        ));
    }

    let mut rng = stream(3);
    let mut worst: f64 = 0.0;
    for _ in 0..plan.band_instances {
        let g = BandlimitedFn::random(&mut rng, 8.0);
        let h = BandlimitedFn::random(&mut rng, 8.0);
        worst = worst.max(sampling_identity_check(&g, &h, 8.0, &probe_points(8, 4.0))?);
    }
    out.push(check(
        hash,
        "sampling_identity",
        worst,
        1e-6,
        format!("{} random pairs, 8 probe points each", plan.band_instances),
    ));

    let mut rng = stream(4);
    let shapes: Vec<BandlimitedFn> = (0..plan.band_instances).map(|_| BandlimitedFn::random(&mut rng, 1.0)).collect();
    let maxes: Vec<f64> = [8.0, 16.0]
        .iter()
        .map(|&s| -> Result<f64> {
            let mut max: f64 = 0.0;
            for g in &shapes {
                max = max.max(pp_sum_ratio(&g.dilate(s), s, 0.5)?);
            }
            Ok(max)
        })
        .collect::<Result<_>>()?;
    out.push(check(
        hash,
        "pp_stability",
        (maxes[1] / maxes[0] - 1.0).abs(),
        0.1,
        format!("p=1/2: max ratio {:.4} at σ=8 and {:.4} at σ=16", maxes[0], maxes[1]),
    ));

    let shape = BandlimitedFn::bump(0);
    let ratios: Vec<f64> = [4.0, 8.0]
        .iter()
        .map(|&s| {
            let g = shape.dilate(s);
            nikolskii_conv_ratio(&g, &g, s, 0.5)
        })
        .collect::<Result<_>>()?;
    out.push(check(
        hash,
        "nikolskii_stability",
        (ratios[1] / ratios[0] - 1.0).abs(),
        0.1,
        format!("p=1/2: ratio {:.4} at σ=4 and {:.4} at σ=8", ratios[0], ratios[1]),
    ));
    Ok(out)
}
