//! Compensated (Neumaier) summation.

use super::Precision;
use num_complex::Complex64;

/// Running sum with optional Neumaier compensation.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
    mode: Precision,
}

impl Accumulator {
    pub fn new(mode: Precision) -> Self {
        Accumulator {
            sum: 0.0,
            comp: 0.0,
            mode,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        match self.mode {
            Precision::Double => self.sum += x,
            Precision::Extended => {
                let t = self.sum + x;
                if self.sum.abs() >= x.abs() {
                    self.comp += (self.sum - t) + x;
                } else {
                    self.comp += (x - t) + self.sum;
                }
                self.sum = t;
            }
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Complex sum built from two real accumulators.
#[derive(Debug, Clone, Copy)]
pub struct ComplexAccumulator {
    re: Accumulator,
    im: Accumulator,
}

impl ComplexAccumulator {
    pub fn new(mode: Precision) -> Self {
        ComplexAccumulator {
            re: Accumulator::new(mode),
            im: Accumulator::new(mode),
        }
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}
