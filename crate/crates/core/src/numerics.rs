//! Log-space helpers shared by the exact moment formulas.

use statrs::function::factorial::ln_factorial;

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `(1 - x)^m` as `exp(m * log1p(-x))`.
pub fn pow_one_minus(x: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    (m * (-x).ln_1p()).exp()
}

/// `ln C(total, k)`.
pub fn ln_binomial(total: usize, k: usize) -> f64 {
    debug_assert!(k <= total);
    ln_factorial(total as u64) - ln_factorial(k as u64) - ln_factorial((total - k) as u64)
}

/// `ln (total! / prod(parts!))` for parts summing to `total`.
pub fn ln_multinomial(total: usize, parts: &[usize]) -> f64 {
    debug_assert_eq!(parts.iter().sum::<usize>(), total);
    parts
        .iter()
        .fold(ln_factorial(total as u64), |acc, &p| acc - ln_factorial(p as u64))
}

/// Log of the Binomial(`trials`, `p`) pmf at `k`, with `ln_p = ln p` and `ln_q = ln(1 - p)`.
pub fn ln_binomial_pmf(trials: usize, k: usize, ln_p: f64, ln_q: f64) -> f64 {
    ln_binomial(trials, k) + k as f64 * ln_p + (trials - k) as f64 * ln_q
}

/// `k * ln_x`, with the convention `0 * ln 0 = 0`.
pub(crate) fn scaled_ln(k: usize, ln_x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_x
    }
}
