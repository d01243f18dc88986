//! Integer variation operators: random sampling, bounded simulated binary
//! crossover, one-point crossover and bounded polynomial mutation.
//!
//! Genes live on `[0, upper]`. Real-valued offspring are rounded to the
//! nearest integer and clamped.

use rand::Rng;

use crate::error::{Error, Result};

const EPS: f64 = 1e-14;

pub fn sample_genes<R: Rng + ?Sized>(len: usize, upper: usize, rng: &mut R) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..=upper)).collect()
}

fn to_gene(x: f64, upper: usize) -> usize {
    x.round().clamp(0.0, upper as f64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbxParams {
    pub prob: f64,
    pub eta: f64,
    /// Chance that a given gene pair takes part once the pair is crossed.
    pub prob_var: f64,
    /// Chance of exchanging the two children values of a gene.
    pub prob_exch: f64,
}

impl Default for SbxParams {
    fn default() -> Self {
        Self {
            prob: 0.9,
            eta: 15.0,
            prob_var: 0.5,
            prob_exch: 0.5,
        }
    }
}

/// Simulated binary crossover. RNG use: one draw for the pair, then per gene
/// one participation draw and, for participating genes with differing
/// values, one spread draw and one exchange draw.
pub fn sbx<R: Rng + ?Sized>(
    a: &[usize],
    b: &[usize],
    upper: usize,
    p: &SbxParams,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("parent lengths differ: {} vs {}", a.len(), b.len())));
    }
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    if rng.random::<f64>() >= p.prob {
        return Ok((c1, c2));
    }
    let (xl, xu) = (0.0, upper as f64);
    for i in 0..a.len() {
        if rng.random::<f64>() >= p.prob_var {
            continue;
        }
        let (pa, pb) = (a[i] as f64, b[i] as f64);
        if (pa - pb).abs() <= EPS {
            continue;
        }
        let (y1, y2) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let u: f64 = rng.random();
        let delta = y2 - y1;
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(p.eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (p.eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (p.eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - xl) / delta);
        let bq2 = spread(1.0 + 2.0 * (xu - y2) / delta);
        let mut v1 = 0.5 * ((y1 + y2) - bq1 * delta);
        let mut v2 = 0.5 * ((y1 + y2) + bq2 * delta);
        if rng.random::<f64>() < p.prob_exch {
            std::mem::swap(&mut v1, &mut v2);
        }
        c1[i] = to_gene(v1, upper);
        c2[i] = to_gene(v2, upper);
    }
    Ok((c1, c2))
}

/// One-point crossover. RNG use: one draw for the pair and one for the cut.
pub fn one_point<R: Rng + ?Sized>(
    a: &[usize],
    b: &[usize],
    prob: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("parent lengths differ: {} vs {}", a.len(), b.len())));
    }
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    if rng.random::<f64>() >= prob || a.len() < 2 {
        return Ok((c1, c2));
    }
    let cut = rng.random_range(1..a.len());
    c1[cut..].copy_from_slice(&b[cut..]);
    c2[cut..].copy_from_slice(&a[cut..]);
    Ok((c1, c2))
}

/// Perturbation `delta` (in units of the domain width) of the polynomial
/// mutation for a uniform draw `u`.
pub fn polynomial_delta(y: f64, xl: f64, xu: f64, eta: f64, u: f64) -> f64 {
    let width = xu - xl;
    let d1 = (y - xl) / width;
    let d2 = (xu - y) / width;
    let pow = 1.0 / (eta + 1.0);
    if u < 0.5 {
        let xy = 1.0 - d1;
        let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
        val.powf(pow) - 1.0
    } else {
        let xy = 1.0 - d2;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(pow)
    }
}

/// Polynomial mutation in place. RNG use: one draw per gene for selection,
/// one more per selected gene.
pub fn polynomial_mutation<R: Rng + ?Sized>(genes: &mut [usize], upper: usize, prob: f64, eta: f64, rng: &mut R) {
    if upper == 0 {
        return;
    }
    let (xl, xu) = (0.0, upper as f64);
    for g in genes.iter_mut() {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let u: f64 = rng.random();
        let y = *g as f64;
        *g = to_gene(y + polynomial_delta(y, xl, xu, eta, u) * (xu - xl), upper);
    }
}
