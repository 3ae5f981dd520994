//! Flat, allocation-free polynomial evaluation for the sampling hot loop.

use super::poly::{Polynomial, RationalFunction};

#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coefs: Vec<f64>,
    /// `offsets[i]..offsets[i+1]` indexes the factors of term `i`.
    offsets: Vec<u32>,
    factors: Vec<(u16, u16)>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let mut coefs = Vec::with_capacity(p.num_terms());
        let mut offsets = vec![0u32];
        let mut factors = Vec::new();
        for (m, c) in p.terms() {
            coefs.push(c);
            for (slot, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    factors.push((slot as u16, e as u16));
                }
            }
            offsets.push(factors.len() as u32);
        }
        Self {
            coefs,
            offsets,
            factors,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.coefs.iter().enumerate() {
            let mut term = c;
            let lo = self.offsets[i] as usize;
            let hi = self.offsets[i + 1] as usize;
            for &(slot, e) in &self.factors[lo..hi] {
                let v = x[slot as usize];
                term *= match e {
                    1 => v,
                    2 => v * v,
                    _ => v.powi(e as i32),
                };
            }
            sum += term;
        }
        sum
    }

    /// Sum of absolute term values, a scale for judging cancellation.
    pub fn eval_abs(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.coefs.iter().enumerate() {
            let mut term = c.abs();
            let lo = self.offsets[i] as usize;
            let hi = self.offsets[i + 1] as usize;
            for &(slot, e) in &self.factors[lo..hi] {
                term *= x[slot as usize].abs().powi(e as i32);
            }
            sum += term;
        }
        sum
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRational {
    pub num: CompiledPoly,
    pub den: CompiledPoly,
}

impl CompiledRational {
    pub fn new(r: &RationalFunction) -> Self {
        Self {
            num: CompiledPoly::new(&r.num),
            den: CompiledPoly::new(&r.den),
        }
    }

    /// `(num, den)` at `x`.
    #[inline]
    pub fn eval_parts(&self, x: &[f64]) -> (f64, f64) {
        (self.num.eval(x), self.den.eval(x))
    }
}
