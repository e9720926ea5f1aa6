//! Small numerical helpers: double-double accumulation for the alternating
//! sum-of-products forms, and log-space binomial masses.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` carrying roughly 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    /// Exact conversion for integers up to 2^106 in magnitude.
    pub fn from_i128(v: i128) -> Self {
        let hi = v as f64;
        let rest = v - hi as i128;
        let (hi, lo) = quick_two_sum(hi, rest as f64);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn powi(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // Long division: two correction steps.
        let q1 = self.hi / o.hi;
        let r = self - o * Self::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact rational `Π_{j=lo..=hi, j≠pivot} j / (j − pivot)` as a
/// double-double. `None` when the intermediate integers overflow.
pub fn pivot_product(lo: usize, hi: usize, pivot: usize) -> Option<DoubleDouble> {
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for j in lo..=hi {
        if j == pivot {
            continue;
        }
        let a = j as i128;
        let b = j as i128 - pivot as i128;
        num = num.checked_mul(a)?;
        den = den.checked_mul(b)?;
        if num == 0 {
            return Some(DoubleDouble::ZERO);
        }
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    if den < 0 {
        num = -num;
        den = -den;
    }
    Some(DoubleDouble::from_i128(num) / DoubleDouble::from_i128(den))
}

/// `ln C(n, k)`.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Binomial(n, ·) masses given `ln p` and `ln(1 − p)` for the success
/// probability p; evaluating in log space keeps every term nonnegative and
/// avoids underflow of the individual powers.
pub fn binomial_masses(n: usize, ln_p: f64, ln_q: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let mut lv = ln_choose(n, j);
            if j > 0 {
                lv += j as f64 * ln_p;
            }
            if j < n {
                lv += (n - j) as f64 * ln_q;
            }
            lv.exp()
        })
        .collect()
}
