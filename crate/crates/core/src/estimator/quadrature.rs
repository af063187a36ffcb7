use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss-Hermite rule rescaled to integrate against the standard normal
/// density: `E[f(V)] ~ sum_k weights[k] * f(nodes[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub ln_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Configuration(format!(
                "quadrature needs at least 2 nodes, got {n}"
            )));
        }
        let (x, ln_w) = physicists_rule(n);
        let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
        let nodes: Vec<f64> = x.iter().map(|xi| std::f64::consts::SQRT_2 * xi).collect();
        let ln_weights: Vec<f64> = ln_w.iter().map(|lw| lw - ln_sqrt_pi).collect();
        let weights = ln_weights.iter().map(|lw| lw.exp()).collect();
        Ok(GaussHermite {
            nodes,
            weights,
            ln_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Roots of the degree-`n` Hermite polynomial as eigenvalues of the Jacobi
/// matrix, in descending order.
fn jacobi_eigenvalues(n: usize) -> Vec<f64> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let mut ev: Vec<f64> = j.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Nodes and log-weights for `int exp(-x^2) f(x) dx`: Jacobi-matrix
/// eigenvalues polished by Newton iteration on the orthonormal Hermite
/// recurrence. The recurrence is rescaled as it
/// runs so that large rules do not overflow.
fn physicists_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const BIG: f64 = 1e150;
    let mut x = vec![0.0; n];
    let mut ln_w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let guesses = jacobi_eigenvalues(n);
    for i in 0..m {
        let mut z = guesses[i];
        let mut pp = 0.0;
        let mut ln_scale = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            ln_scale = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                if p1.abs() > BIG {
                    p1 /= BIG;
                    p2 /= BIG;
                    ln_scale += BIG.ln();
                }
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        ln_w[i] = 2f64.ln() - 2.0 * (pp.abs().ln() + ln_scale);
        ln_w[n - 1 - i] = ln_w[i];
    }
    (x, ln_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect(rule: &GaussHermite, f: impl Fn(f64) -> f64) -> f64 {
        rule.nodes.iter().zip(&rule.weights).map(|(v, w)| w * f(*v)).sum()
    }

    #[test]
    fn normal_moments_are_exact() {
        for n in [2, 5, 12, 32, 50, 200, 400] {
            let rule = GaussHermite::new(n).unwrap();
            assert!((expect(&rule, |_| 1.0) - 1.0).abs() < 1e-13, "n={n}");
            assert!(expect(&rule, |v| v).abs() < 1e-13);
            assert!((expect(&rule, |v| v * v) - 1.0).abs() < 1e-12, "n={n}");
            if n >= 3 {
                assert!((expect(&rule, |v| v.powi(4)) - 3.0).abs() < 1e-11, "n={n}");
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussHermite::new(32).unwrap();
        for k in 0..16 {
            assert_eq!(rule.nodes[k], -rule.nodes[31 - k]);
            assert!(rule.nodes[k] > rule.nodes[k + 1]);
        }
    }

    #[test]
    fn mgf_converges() {
        // E[exp(V)] = exp(1/2).
        let rule = GaussHermite::new(32).unwrap();
        assert!((expect(&rule, f64::exp) - 0.5f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn large_rules_have_distinct_nodes() {
        let rule = GaussHermite::new(300).unwrap();
        assert!(rule.nodes.windows(2).all(|w| w[0] > w[1]));
        assert!(rule.ln_weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn too_few_nodes() {
        assert!(matches!(GaussHermite::new(1), Err(Error::Configuration(_))));
    }
}
