//! Small numeric helpers shared by the exact and empirical estimators.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

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

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Shannon entropy in bits of a (not necessarily normalized) nonnegative vector,
/// taken relative to its own total mass. `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let total = compensated_sum(p.iter().copied());
    if total <= 0.0 {
        return 0.0;
    }
    compensated_sum(
        p.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -(x / total) * (x / total).log2()),
    )
}

/// Conditional entropy contribution `sum_y p(c,y) log2(p(c)/p(c,y))` of one
/// context row given the unnormalized joint masses `row[y] = p(c, y)`.
pub fn conditional_row_bits(row: &[f64]) -> f64 {
    let mass = compensated_sum(row.iter().copied());
    if mass <= 0.0 {
        return 0.0;
    }
    compensated_sum(
        row.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x * (mass / x).log2()),
    )
}

/// Mean and normal-approximation standard error of a Bernoulli proportion.
pub fn proportion_with_se(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 0.0);
    }
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// `base^exp` with overflow detection, for table sizes.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}
