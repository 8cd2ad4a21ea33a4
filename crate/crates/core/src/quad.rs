//! Quadrature: Gauss–Legendre nodes and product rules over the unit sphere.
//!
//! d = 2 and d = 3 use product Gauss–Legendre in the angles; d > 3 falls back
//! to a seeded Monte Carlo sphere rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    let nf = R::of_usize(n);
    for k in 0..(n + 1) / 2 {
        let kf = R::of_usize(k);
        // Tricomi initial guess
        let mut x = (R::PI() * (kf + R::of(0.75)) / (nf + R::of(0.5))).cos();
        let mut pp = R::zero();
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by recurrence
            let mut p0 = R::one();
            let mut p1 = x;
            for j in 2..=n {
                let jf = R::of_usize(j);
                let p2 = ((R::of(2.0) * jf - R::one()) * x * p1 - (jf - R::one()) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            pp = nf * (x * p1 - p0) / (x * x - R::one());
            let dx = p1 / pp;
            x = x - dx;
            if dx.abs() < R::of(1e-15) {
                break;
            }
        }
        let w = R::of(2.0) / ((R::one() - x * x) * pp * pp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

/// Quadrature rule over the unit sphere S^{d-1}: points and weights for the
/// surface measure sigma (weights sum to |S^{d-1}|).
#[derive(Debug, Clone)]
pub struct SphereRule<R> {
    pub d: usize,
    pub points: Vec<Vec<R>>,
    pub weights: Vec<R>,
}

impl<R: Real> SphereRule<R> {
    /// Product rule of the given angular order (d = 2, 3) or a seeded Monte
    /// Carlo rule with at least 10^5 points (d > 3).
    pub fn new(d: usize, order: usize) -> Self {
        match d {
            2 => Self::circle(order),
            3 => Self::sphere3(order),
            _ => Self::monte_carlo(d, 100_000.max(order)),
        }
    }

    fn circle(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre::<R>(n);
        let pi = R::PI();
        let points = nodes
            .iter()
            .map(|&u| {
                let theta = pi * (u + R::one()); // map [-1,1] -> [0, 2pi]
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        let weights = weights.iter().map(|&w| w * pi).collect();
        Self { d: 2, points, weights }
    }

    fn sphere3(n: usize) -> Self {
        // sigma(dxi) = dtheta d(cos(polar)); product GL in theta and u = cos(polar)
        let (unodes, uweights) = gauss_legendre::<R>(n);
        let (tnodes, tweights) = gauss_legendre::<R>(n);
        let pi = R::PI();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (u, wu) in unodes.iter().zip(&uweights) {
            let s = (R::one() - *u * *u).max(R::zero()).sqrt();
            for (tv, wt) in tnodes.iter().zip(&tweights) {
                let theta = pi * (*tv + R::one());
                points.push(vec![s * theta.cos(), s * theta.sin(), *u]);
                weights.push(*wu * *wt * pi);
            }
        }
        Self { d: 3, points, weights }
    }

    fn monte_carlo(d: usize, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5f3759df);
        let surface = sphere_surface::<R>(d);
        let w = surface / R::of_usize(n);
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v: Vec<R> = (0..d).map(|_| R::std_normal(&mut rng)).collect();
            let norm = v.iter().map(|x| *x * *x).sum::<R>().sqrt();
            for x in &mut v {
                *x = *x / norm;
            }
            points.push(v);
        }
        Self { d, points, weights: vec![w; n] }
    }

    /// Integrate f over the sphere against sigma.
    pub fn integrate<F: Fn(&[R]) -> R>(&self, f: F) -> R {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * f(p))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
pub fn sphere_surface<R: Real>(d: usize) -> R {
    // Gamma(d/2) via the half-integer recurrence, avoiding a gamma dependency.
    let pi = R::PI();
    let mut g = if d % 2 == 0 { R::one() } else { pi.sqrt() };
    let mut x = if d % 2 == 0 { R::one() } else { R::of(0.5) };
    while x.as_f64() < d as f64 / 2.0 - 0.25 {
        g = g * x;
        x += R::one();
    }
    R::of(2.0) * pi.powf(R::of_usize(d) / R::of(2.0)) / g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (n, w) = gauss_legendre::<f64>(8);
        let int_x6: f64 = n.iter().zip(&w).map(|(&x, &w)| w * x.powi(6)).sum();
        assert!((int_x6 - 2.0 / 7.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rule_total_mass() {
        for d in 2..=5 {
            let rule = SphereRule::<f64>::new(d, 32);
            let mass = rule.integrate(|_| 1.0);
            let expect = sphere_surface::<f64>(d);
            let tol = if d > 3 { 1e-9 } else { 1e-12 };
            assert!(
                (mass - expect).abs() < tol * expect.max(1.0),
                "d={d}: {mass} vs {expect}"
            );
        }
    }

    #[test]
    fn sphere_surface_matches_known_values() {
        assert!((sphere_surface::<f64>(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_surface::<f64>(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        // |S^3| = 2 pi^2
        assert!((sphere_surface::<f64>(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn circle_rule_second_moment() {
        let rule = SphereRule::<f64>::new(2, 64);
        let m = rule.integrate(|p| p[0] * p[0]);
        assert!((m - std::f64::consts::PI).abs() < 1e-12);
    }
}
