//! Equispaced quadrature on T^d: the exact mean rule on 2n+1 nodes per axis
//! and the empirical Marcinkiewicz–Zygmund constant.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{grid_quasi_norm, quasi_norm_default, sample_folded, TrigPoly};

/// Nodes t_k = 2πk/(2n+1), k ∈ [0, 2n]^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSet {
    pub n: usize,
    pub d: usize,
}

impl NodeSet {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {d}")));
        }
        Ok(NodeSet { n, d })
    }

    /// Nodes per axis, 2n+1.
    pub fn per_axis(&self) -> usize {
        2 * self.n + 1
    }

    pub fn node_count(&self) -> usize {
        self.per_axis().pow(self.d as u32)
    }

    pub fn sizes(&self) -> Vec<usize> {
        vec![self.per_axis(); self.d]
    }

    /// All nodes, row-major.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let s = self.per_axis();
        let h = 2.0 * PI / s as f64;
        (0..self.node_count())
            .map(|flat| match self.d {
                1 => vec![h * flat as f64],
                _ => vec![h * (flat / s) as f64, h * (flat % s) as f64],
            })
            .collect()
    }

    fn check(&self, t: &TrigPoly) -> Result<()> {
        if t.d() != self.d {
            return Err(Error::invalid("node set and polynomial differ in dimension"));
        }
        Ok(())
    }

    /// Values of `t` at every node, via one fast transform on the node grid.
    pub fn sample(&self, t: &TrigPoly) -> Result<Vec<Complex64>> {
        self.check(t)?;
        Ok(sample_folded(t, &self.sizes()).into_samples())
    }
}

/// The node average (2n+1)^{-d} Σ T(t_k).
///
/// It equals T̂(0) whenever deg T ≤ 2n. Beyond that range the frequency 2n+1
/// aliases onto 0 and [`Error::ExactnessViolated`] is returned with the
/// computed average.
pub fn quadrature_mean(t: &TrigPoly, nodes: &NodeSet) -> Result<Complex64> {
    let samples = nodes.sample(t)?;
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    let degree = t.effective_degree();
    if degree > 2 * nodes.n {
        return Err(Error::ExactnessViolated {
            nodes: nodes.node_count(),
            degree,
            value: mean,
        });
    }
    Ok(mean)
}

/// [(2n+1)^{-d} Σ |T(t_k)|^p] / ‖T‖_p^p, the Marcinkiewicz–Zygmund ratio of one
/// polynomial of degree ≤ n.
pub fn mz_ratio(t: &TrigPoly, nodes: &NodeSet, p: f64) -> Result<f64> {
    if !(p > 0.0) || p.is_infinite() {
        return Err(Error::invalid(format!("p must lie in (0, ∞), got {p}")));
    }
    let degree = t.effective_degree();
    if degree > nodes.n {
        return Err(Error::invalid(format!(
            "degree {degree} exceeds the node parameter n = {}",
            nodes.n
        )));
    }
    let norm = quasi_norm_default(t, p)?;
    if norm == 0.0 {
        return Err(Error::DegenerateNorm);
    }
    let discrete = grid_quasi_norm(&nodes.sample(t)?, p);
    Ok((discrete / norm).powf(p))
}
