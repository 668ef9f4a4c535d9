//! Compensated (Kahan–Neumaier) summation for plain `f64` accumulations.

/// Running sum with a Neumaier correction term.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    corr: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let s = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.corr += (self.sum - s) + x;
        } else {
            self.corr += (x - s) + self.sum;
        }
        self.sum = s;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.corr
    }
}

/// Compensated sum of a slice.
pub fn sum_compensated(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}
