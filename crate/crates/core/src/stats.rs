//! Small numerical helpers: least squares, Simpson quadrature, order-stable sums.

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateWindow { points: n, required: 2 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow { points: 1, required: 2 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r_squared, n_points: n })
}

/// Composite Simpson rule on `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Element-wise pairwise sum of equally long rows.
pub fn pairwise_sum_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    match rows.len() {
        0 => Vec::new(),
        1 => rows[0].clone(),
        n => {
            let (l, r) = rows.split_at(n / 2);
            let mut acc = pairwise_sum_rows(l);
            for (a, b) in acc.iter_mut().zip(pairwise_sum_rows(r)) {
                *a += b;
            }
            acc
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&dev) / (xs.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 1.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(ols(&[1.0], &[2.0]).is_err());
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 4);
        assert!((v - 0.0).abs() < 1e-14);
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 200);
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn pairwise_rows() {
        let rows = vec![vec![1.0, 2.0]; 37];
        assert_eq!(pairwise_sum_rows(&rows), vec![37.0, 74.0]);
        assert_eq!(pairwise_sum(&vec![0.5; 100]), 50.0);
    }
}
