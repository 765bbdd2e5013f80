//! Gauss–Hermite rules for expectations over a standard normal variable.
//!
//! Nodes come from Newton iteration on the orthonormal Hermite recurrence,
//! which is accurate to machine precision well past the few hundred nodes
//! anyone needs here. Rules are returned in probabilists' normalization:
//! `Σ wᵢ f(xᵢ) ≈ E[f(Z)]` with `Z ~ N(0, 1)`, weights summing to one.

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// The same rule for `N(0, variance)`.
    pub fn scaled(&self, variance: f64) -> GaussRule {
        let s = variance.sqrt();
        GaussRule {
            nodes: self.nodes.iter().map(|x| s * x).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// `n`-point Gauss–Hermite rule for the standard normal; exact for
/// polynomials of degree ≤ 2n − 1. Panics if `n == 0`.
pub fn gauss_hermite(n: usize) -> GaussRule {
    assert!(n > 0, "Gauss-Hermite rule needs at least one node");
    // π^{-1/4}
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0f64);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // physicists' (weight e^{-x²}) -> probabilists' (standard normal)
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| (std::f64::consts::SQRT_2 * x, w / sqrt_pi))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `E[Z^k]` for a standard normal: `(k−1)!!` for even `k`, zero for odd.
pub fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|j| j as f64).product()
}
