//! Small statistics helpers.

/// Running integer sums of `±1` products for a fixed number of orders.
///
/// Integer accumulation keeps parallel reductions exact and order independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSums {
    pub shots: u64,
    pub sums: Vec<i64>,
}

impl SignSums {
    pub fn new(orders: usize) -> Self {
        SignSums { shots: 0, sums: vec![0; orders] }
    }

    pub fn merge(mut self, other: SignSums) -> SignSums {
        self.shots += other.shots;
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
        self
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|&s| s as f64 / self.shots as f64).collect()
    }

    /// Plug-in standard error of a `±1` mean, `√((1 − p̂²)/n)`.
    pub fn stderrs(&self) -> Vec<f64> {
        self.means().iter().map(|&p| sign_stderr(p, self.shots)).collect()
    }
}

pub fn sign_stderr(mean: f64, shots: u64) -> f64 {
    ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); zero for fewer than two points.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
