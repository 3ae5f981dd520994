use super::McError;

/// Streaming mean and centered sum of squares.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    s: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Running mean `J`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Centered sum of squares `S`.
    pub fn sum_sq(&self) -> f64 {
        self.s
    }

    pub fn push(&mut self, q: f64) -> Result<(), McError> {
        if !q.is_finite() {
            return Err(McError::NonFiniteSample(q));
        }
        self.push_finite(q);
        Ok(())
    }

    #[inline]
    pub(crate) fn push_finite(&mut self, q: f64) {
        let n = self.n as f64;
        let delta = q - self.mean;
        self.mean += delta / (n + 1.0);
        self.s += (n / (n + 1.0)) * delta * delta;
        self.n += 1;
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        Accumulator {
            n: self.n + other.n,
            mean: self.mean + delta * (nb / n),
            s: self.s + other.s + delta * delta * (na * nb / n),
        }
    }

    /// `(Î, ê)` with `ê = sqrt((S/N)/(N-1))`, dividing by `N` first.
    pub fn estimate(&self) -> Result<(f64, f64), McError> {
        if self.n < 2 {
            return Err(McError::InsufficientSamples(self.n));
        }
        let n = self.n as f64;
        Ok((self.mean, ((self.s / n) / (n - 1.0)).sqrt()))
    }
}
