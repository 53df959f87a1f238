//! Small numeric helpers shared by the summation paths.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice, in index order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value()
}

/// Table of `ln Γ(n + 1) = ln n!` for `n = 0..=max`.
///
/// Built by compensated accumulation of `ln k`, which keeps the absolute
/// error of every entry near a few ulps of the largest term.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = CompensatedSum::new();
        for k in 1..=max {
            acc.add((k as f64).ln());
            table.push(acc.value());
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    #[inline]
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.table[n]
    }

    /// `ln C(n, r)`; callers guarantee `r <= n <= max`.
    #[inline]
    pub fn ln_binomial(&self, n: usize, r: usize) -> f64 {
        debug_assert!(r <= n);
        self.table[n] - self.table[r] - self.table[n - r]
    }
}

/// `n · ln q` with `0^0 = 1` and `0^n = 0` for `n > 0`.
#[inline]
pub fn ln_pow(ln_q: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * ln_q
    }
}

/// Formats `value` with 12 significant digits, trailing zeros trimmed.
pub fn format_sig12(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0".to_string() } else { value.to_string() };
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{value:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
