#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `f(x) = 0.5 x'Ax - b'x` with `A = Q diag(lambda) Q'` and its minimizer.
pub struct Quadratic {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub minimizer: Array1<f64>,
}

impl Quadratic {
    /// Random SPD quadratic of dimension `q`. Eigenvalues are uniform on
    /// `[1, condition]` with both ends attained, so the condition number is exact.
    pub fn random(q: usize, condition: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut basis: Vec<Array1<f64>> = Vec::with_capacity(q);
        while basis.len() < q {
            let mut v: Array1<f64> = (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            // two Gram-Schmidt passes for orthogonality to rounding level
            for _ in 0..2 {
                for u in &basis {
                    let p = v.dot(u);
                    v.scaled_add(-p, u);
                }
            }
            let norm = v.dot(&v).sqrt();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
        let lambdas: Vec<f64> = (0..q)
            .map(|i| match i {
                0 => 1.0,
                1 => condition,
                _ => rng.random_range(1.0..condition),
            })
            .collect();
        let mut a = Array2::<f64>::zeros((q, q));
        for (u, &l) in basis.iter().zip(&lambdas) {
            for r in 0..q {
                for c in 0..q {
                    a[[r, c]] += l * u[r] * u[c];
                }
            }
        }
        let b: Array1<f64> = (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut minimizer = Array1::<f64>::zeros(q);
        for (u, &l) in basis.iter().zip(&lambdas) {
            minimizer.scaled_add(u.dot(&b) / l, u);
        }
        Quadratic { a, b, minimizer }
    }

    /// Value shifted so the minimum is zero, written in terms of `x - minimizer`
    /// to keep full relative precision near the minimum. The gradient is `Ax - b`.
    pub fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let e = Array1::from(x.to_vec()) - &self.minimizer;
        let ae = self.a.dot(&e);
        g.copy_from_slice(ae.as_slice().unwrap());
        0.5 * e.dot(&ae)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central finite-difference gradient.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Fourth-order central difference of `f` along coordinate `i`.
pub fn central_difference_4<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], i: usize, h: f64) -> f64 {
    let mut probe = x.to_vec();
    let mut at = |t: f64| {
        probe[i] = x[i] + t;
        f(&probe)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}
