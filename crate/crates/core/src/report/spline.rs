//! Cubic smoothing spline with the smoothing parameter chosen by
//! generalized cross-validation.
//!
//! Minimizes `sum w_i (y_i - g(t_i))^2 + lambda * integral g''(t)^2 dt` over
//! natural cubic splines with knots at the distinct abscissae, using the
//! value/second-derivative (Reinsch) representation: with the banded `Q`
//! (n x n-2) and `R` (n-2 x n-2) matrices the roughness is `g' K g` where
//! `K = Q R^-1 Q'`. The weighted penalty `W^-1/2 K W^-1/2` is diagonalized
//! once so every trial `lambda` costs O(n^2).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Abscissae closer than this fraction of the data range are merged.
const TIE_FRACTION: f64 = 1e-9;

/// Grid over `log10(lambda * penalty scale)` before golden-section refinement.
const LOG_LAMBDA_RANGE: (f64, f64) = (-8.0, 8.0);
const GRID_POINTS: usize = 161;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative at each knot; zero at both ends.
    second: Vec<f64>,
    pub lambda: f64,
    /// Trace of the smoother matrix.
    pub effective_df: f64,
    pub gcv: f64,
}

struct Prepared {
    knots: Vec<f64>,
    y: DVector<f64>,
    sqrt_w: DVector<f64>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    scale: f64,
}

/// Sorts, merges ties (mean response, count as weight) and drops
/// non-finite pairs.
fn collapse(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a, b))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (lo, hi) = match (pairs.first(), pairs.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return (vec![], vec![], vec![]),
    };
    let tie = TIE_FRACTION * (hi - lo).max(f64::MIN_POSITIVE);
    let (mut xs, mut sums, mut counts) = (Vec::new(), Vec::new(), Vec::<f64>::new());
    for (a, b) in pairs {
        match xs.last() {
            Some(&last) if a - last <= tie => {
                *sums.last_mut().unwrap() += b;
                *counts.last_mut().unwrap() += 1.0;
            }
            _ => {
                xs.push(a);
                sums.push(b);
                counts.push(1.0);
            }
        }
    }
    let ys = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    (xs, ys, counts)
}

fn band_matrices(knots: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let mut q = DMatrix::zeros(n, n - 2);
    let mut r = DMatrix::zeros(n - 2, n - 2);
    for j in 1..n - 1 {
        let col = j - 1;
        q[(j - 1, col)] = 1.0 / h[j - 1];
        q[(j, col)] = -1.0 / h[j - 1] - 1.0 / h[j];
        q[(j + 1, col)] = 1.0 / h[j];
        r[(col, col)] = (h[j - 1] + h[j]) / 3.0;
        if col + 1 < n - 2 {
            r[(col, col + 1)] = h[j] / 6.0;
            r[(col + 1, col)] = h[j] / 6.0;
        }
    }
    (q, r)
}

impl Prepared {
    fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        let (knots, ys, weights) = collapse(x, y);
        if knots.len() < 3 {
            return None;
        }
        let (q, r) = band_matrices(&knots);
        let r_chol = r.clone().cholesky()?;
        // K = Q R^-1 Q'
        let k = &q * r_chol.solve(&q.transpose());
        let sqrt_w = DVector::from_iterator(weights.len(), weights.iter().map(|w| w.sqrt()));
        let inv_sqrt_w = sqrt_w.map(|s| 1.0 / s);
        let mut m = k;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] *= inv_sqrt_w[i] * inv_sqrt_w[j];
            }
        }
        m = (&m + m.transpose()) * 0.5;
        let scale = m.trace() / m.nrows() as f64;
        let eig = SymmetricEigen::new(m);
        // The two linear functions span the null space; snap their rounding
        // noise to exact zeros so they are never shrunk.
        let top = eig.eigenvalues.amax();
        Some(Self {
            knots,
            y: DVector::from_vec(ys),
            sqrt_w,
            eigvals: eig.eigenvalues.map(|v| if v <= 1e-10 * top { 0.0 } else { v }),
            eigvecs: eig.eigenvectors,
            q,
            r,
            scale,
        })
    }

    /// Fitted values, smoother trace and GCV score at `lambda`.
    fn evaluate(&self, lambda: f64) -> (DVector<f64>, f64, f64) {
        let n = self.knots.len() as f64;
        let z = self.y.component_mul(&self.sqrt_w);
        let shrink = self.eigvals.map(|mu| 1.0 / (1.0 + lambda * mu));
        let coeffs = (self.eigvecs.transpose() * z).component_mul(&shrink);
        let fitted = (&self.eigvecs * coeffs).component_div(&self.sqrt_w);
        let trace = shrink.sum();
        let rss: f64 = (0..self.y.len())
            .map(|i| (self.sqrt_w[i] * (self.y[i] - fitted[i])).powi(2))
            .sum();
        let denom = 1.0 - trace / n;
        let gcv = if denom > 0.0 {
            (rss / n) / (denom * denom)
        } else {
            f64::INFINITY
        };
        (fitted, trace, gcv)
    }

    fn lambda_at(&self, log_scaled: f64) -> f64 {
        10f64.powf(log_scaled) / self.scale.max(f64::MIN_POSITIVE)
    }

    fn select_lambda(&self) -> f64 {
        let (lo, hi) = LOG_LAMBDA_RANGE;
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let score = |s: f64| self.evaluate(self.lambda_at(s)).2;
        let mut best = (lo, score(lo));
        for i in 1..GRID_POINTS {
            let s = lo + step * i as f64;
            let g = score(s);
            if g < best.1 {
                best = (s, g);
            }
        }
        // golden-section search inside the bracketing grid cells
        let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (score(c), score(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = score(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = score(d);
            }
        }
        let refined = 0.5 * (a + b);
        if score(refined) <= best.1 {
            self.lambda_at(refined)
        } else {
            self.lambda_at(best.0)
        }
    }

    fn finish(self, lambda: f64) -> SmoothingSpline {
        let (fitted, trace, gcv) = self.evaluate(lambda);
        let rhs = self.q.transpose() * &fitted;
        let interior = self
            .r
            .clone()
            .cholesky()
            .expect("R is positive definite")
            .solve(&rhs);
        let mut second = vec![0.0; self.knots.len()];
        for (i, g) in interior.iter().enumerate() {
            second[i + 1] = *g;
        }
        SmoothingSpline {
            knots: self.knots,
            values: fitted.iter().copied().collect(),
            second,
            lambda,
            effective_df: trace,
            gcv,
        }
    }
}

impl SmoothingSpline {
    /// GCV-selected fit. `None` when fewer than three distinct finite
    /// abscissae remain.
    pub fn fit(x: &[f64], y: &[f64]) -> Option<Self> {
        let prepared = Prepared::new(x, y)?;
        let lambda = prepared.select_lambda();
        Some(prepared.finish(lambda))
    }

    pub fn fit_with_lambda(x: &[f64], y: &[f64], lambda: f64) -> Option<Self> {
        Some(Prepared::new(x, y)?.finish(lambda))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn fitted(&self) -> &[f64] {
        &self.values
    }

    /// Natural cubic spline value; linear beyond the end knots.
    pub fn eval(&self, x: f64) -> f64 {
        let t = &self.knots;
        let g = &self.values;
        let s = &self.second;
        let n = t.len();
        if x <= t[0] {
            let h = t[1] - t[0];
            let slope = (g[1] - g[0]) / h - h * s[1] / 6.0;
            return g[0] + slope * (x - t[0]);
        }
        if x >= t[n - 1] {
            let h = t[n - 1] - t[n - 2];
            let slope = (g[n - 1] - g[n - 2]) / h + h * s[n - 2] / 6.0;
            return g[n - 1] + slope * (x - t[n - 1]);
        }
        let i = t.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let h = t[i + 1] - t[i];
        let left = x - t[i];
        let right = t[i + 1] - x;
        (left * g[i + 1] + right * g[i]) / h
            - left * right / 6.0 * ((1.0 + left / h) * s[i + 1] + (1.0 + right / h) * s[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_data_is_reproduced() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = SmoothingSpline::fit(&x, &y).unwrap();
        for (&a, &b) in x.iter().zip(&y) {
            assert_relative_eq!(s.eval(a), b, epsilon = 1e-8);
        }
        assert_relative_eq!(s.eval(-1.0), -3.0, epsilon = 1e-8);
        assert_relative_eq!(s.eval(10.0), 19.0, epsilon = 1e-8);
    }

    #[test]
    fn tiny_lambda_interpolates() {
        let x = [0.0, 1.0, 2.5, 3.0, 4.2];
        let y = [1.0, -1.0, 0.5, 2.0, 0.0];
        let s = SmoothingSpline::fit_with_lambda(&x, &y, 1e-12).unwrap();
        for (a, b) in x.iter().zip(y) {
            assert_relative_eq!(s.eval(*a), b, epsilon = 1e-6);
        }
        assert!(s.effective_df > 4.99);
    }

    #[test]
    fn huge_lambda_gives_least_squares_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 2.0, 1.0, 3.0, 4.0];
        let s = SmoothingSpline::fit_with_lambda(&x, &y, 1e12).unwrap();
        // OLS: slope 0.9, intercept 0.2
        for &a in &x {
            assert_relative_eq!(s.eval(a), 0.2 + 0.9 * a, epsilon = 1e-6);
        }
        assert_relative_eq!(s.effective_df, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn spline_is_continuous_with_natural_ends() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + rng.random_range(-0.1..0.1)).collect();
        let s = SmoothingSpline::fit(&x, &y).unwrap();
        for &k in s.knots() {
            assert_relative_eq!(s.eval(k - 1e-10), s.eval(k + 1e-10), epsilon = 1e-7);
        }
        assert!(s.lambda > 0.0);
        assert!(s.effective_df > 2.0 && s.effective_df < 50.0);
        // smoothing reduces roughness relative to the data
        assert!(s.eval(0.0).abs() < 0.1);
    }

    #[test]
    fn ties_are_merged() {
        let x = [0.0, 1.0, 1.0, 2.0, 3.0];
        let y = [0.0, 0.0, 2.0, 2.0, 3.0];
        let s = SmoothingSpline::fit_with_lambda(&x, &y, 1e-12).unwrap();
        assert_eq!(s.knots().len(), 4);
        assert_relative_eq!(s.eval(1.0), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn too_few_points() {
        assert!(SmoothingSpline::fit(&[0.0, 1.0], &[1.0, 2.0]).is_none());
        assert!(SmoothingSpline::fit(&[0.0, 1.0, f64::INFINITY], &[1.0, 2.0, 3.0]).is_none());
    }
}
