//! Exact dyadic rationals `num / 2^exp`.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Sub};

/// Non-negative dyadic rational, kept normalized (odd numerator or zero).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dyadic {
    num: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: u128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_int(x: u128) -> Self {
        Dyadic { num: x, exp: 0 }
    }

    /// `2^-k`.
    pub fn pow2_inv(k: u32) -> Self {
        Dyadic { num: 1, exp: k }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> u128 {
        if self.exp >= 128 {
            0
        } else {
            self.num >> self.exp
        }
    }

    /// `self * k`.
    pub fn mul_int(self, k: u128) -> Dyadic {
        Dyadic::new(self.num.checked_mul(k).expect("dyadic overflow"), self.exp)
    }

    pub fn to_f64(&self) -> f64 {
        let mut x = self.num as f64;
        let mut e = self.exp;
        while e > 0 {
            let step = e.min(60);
            x /= (1u64 << step) as f64;
            e -= step;
        }
        x
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    fn align(a: Dyadic, b: Dyadic) -> (u128, u128, u32) {
        let e = a.exp.max(b.exp);
        let x = shl(a.num, e - a.exp);
        let y = shl(b.num, e - b.exp);
        (x, y, e)
    }

    /// `self - other`, or `None` if negative.
    pub fn checked_sub(self, other: Dyadic) -> Option<Dyadic> {
        let (x, y, e) = Self::align(self, other);
        x.checked_sub(y).map(|d| Dyadic::new(d, e))
    }
}

fn shl(x: u128, k: u32) -> u128 {
    if x == 0 {
        return 0;
    }
    assert!(k < 128 && x.leading_zeros() >= k, "dyadic overflow");
    x << k
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, o: Dyadic) -> Dyadic {
        let (x, y, e) = Self::align(self, o);
        Dyadic::new(x.checked_add(y).expect("dyadic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, o: Dyadic) -> Dyadic {
        self.checked_sub(o).expect("negative dyadic")
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, o: Dyadic) -> Dyadic {
        Dyadic::new(self.num.checked_mul(o.num).expect("dyadic overflow"), self.exp + o.exp)
    }
}

impl core::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, |a, b| a + b)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, o: &Dyadic) -> Ordering {
        let e = self.exp.max(o.exp);
        let (sa, sb) = (e - self.exp, e - o.exp);
        let fits = |x: u128, k: u32| x == 0 || (k < 128 && x.leading_zeros() >= k);
        if fits(self.num, sa) && fits(o.num, sb) {
            let x = if self.num == 0 { 0 } else { self.num << sa };
            let y = if o.num == 0 { 0 } else { o.num << sb };
            return x.cmp(&y);
        }
        let x = num_bigint::BigUint::from(self.num) << sa as usize;
        let y = num_bigint::BigUint::from(o.num) << sb as usize;
        x.cmp(&y)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, o: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}
