//! Exact angular-momentum algebra: half-integers, Wigner 3-j and 6-j symbols,
//! Clebsch-Gordan coefficients and enumeration of product bases.
//!
//! All angular momenta are stored doubled so that half-integer values stay
//! exact. The symbols are evaluated with the Racah sums in big-rational
//! arithmetic and only converted to `f64` at the very end.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative or signed half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(v: i32) -> Self {
        HalfInt(2 * v)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Projections `j, j-1, ..., -j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j).map(move |k| HalfInt(j - 2 * k))
    }

    /// Number of projections, `2j + 1`.
    pub fn multiplicity(self) -> usize {
        (self.0 + 1).max(0) as usize
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl std::str::FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("not a half-integer: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            if den.trim() != "2" {
                return Err(bad());
            }
            let n: i32 = num.trim().parse().map_err(|_| bad())?;
            if n % 2 == 0 {
                return Err(bad());
            }
            Ok(HalfInt(n))
        } else {
            let n: i32 = s.parse().map_err(|_| bad())?;
            Ok(HalfInt(2 * n))
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

fn factorial(n: i32) -> BigInt {
    static TABLE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(vec![BigInt::one()]));
    let mut t = table.lock().expect("factorial table poisoned");
    while t.len() <= n as usize {
        let k = t.len();
        let next = &t[k - 1] * BigInt::from(k);
        t.push(next);
    }
    t[n as usize].clone()
}

fn triangle(a: i32, b: i32, c: i32) -> bool {
    // doubled arguments
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Triangle coefficient Delta(abc) with doubled arguments, as an exact rational.
fn delta(a: i32, b: i32, c: i32) -> BigRational {
    BigRational::new(
        factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2),
        factorial((a + b + c) / 2 + 1),
    )
}

/// Converts `sign * sqrt(square)` into f64 where `square` is exact.
fn signed_sqrt(negative: bool, square: &BigRational) -> f64 {
    let v = square.to_f64().unwrap_or(f64::NAN).sqrt();
    if negative {
        -v
    } else {
        v
    }
}

type Key = [i32; 6];

fn cache_3j() -> &'static Mutex<HashMap<Key, f64>> {
    static C: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cache_6j() -> &'static Mutex<HashMap<Key, f64>> {
    static C: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly zero whenever a selection rule is violated.
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    let key = [j1.0, j2.0, j3.0, m1.0, m2.0, m3.0];
    if let Some(v) = cache_3j().lock().expect("3j cache poisoned").get(&key) {
        return *v;
    }
    let v = wigner3j_uncached(key);
    cache_3j().lock().expect("3j cache poisoned").insert(key, v);
    v
}

fn wigner3j_uncached([j1, j2, j3, m1, m2, m3]: Key) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j - m) % 2 != 0 {
            return 0.0;
        }
    }
    // Racah sum, everything in doubled units converted to plain integers
    let a = (j1 + j2 - j3) / 2;
    let b = (j1 - m1) / 2;
    let c = (j2 + m2) / 2;
    let d = (j3 - j2 + m1) / 2;
    let e = (j3 - j1 - m2) / 2;
    let kmin = 0.max(-d).max(-e);
    let kmax = a.min(b).min(c);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) * factorial(d + k) * factorial(e + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let pref = delta(j1, j2, j3)
        * BigRational::from_integer(
            factorial((j1 + m1) / 2)
                * factorial((j1 - m1) / 2)
                * factorial((j2 + m2) / 2)
                * factorial((j2 - m2) / 2)
                * factorial((j3 + m3) / 2)
                * factorial((j3 - m3) / 2),
        );
    let phase_odd = ((j1 - j2 - m3) / 2).rem_euclid(2) == 1;
    let negative = phase_odd ^ sum.is_negative();
    let square = pref * &sum * &sum;
    signed_sqrt(negative, &square)
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}`. Zero on any violated triad.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    let key = [j1.0, j2.0, j3.0, j4.0, j5.0, j6.0];
    if let Some(v) = cache_6j().lock().expect("6j cache poisoned").get(&key) {
        return *v;
    }
    let v = wigner6j_uncached(key);
    cache_6j().lock().expect("6j cache poisoned").insert(key, v);
    v
}

fn wigner6j_uncached([j1, j2, j3, j4, j5, j6]: Key) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return 0.0;
    }
    let a1 = (j1 + j2 + j3) / 2;
    let a2 = (j1 + j5 + j6) / 2;
    let a3 = (j4 + j2 + j6) / 2;
    let a4 = (j4 + j5 + j3) / 2;
    let b1 = (j1 + j2 + j4 + j5) / 2;
    let b2 = (j2 + j3 + j5 + j6) / 2;
    let b3 = (j3 + j1 + j6 + j4) / 2;
    let tmin = a1.max(a2).max(a3).max(a4);
    let tmax = b1.min(b2).min(b3);
    let mut sum = BigRational::zero();
    for t in tmin..=tmax {
        let num = factorial(t + 1);
        let den = factorial(t - a1)
            * factorial(t - a2)
            * factorial(t - a3)
            * factorial(t - a4)
            * factorial(b1 - t)
            * factorial(b2 - t)
            * factorial(b3 - t);
        let term = BigRational::new(num, den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let pref = triads.iter().fold(BigRational::one(), |acc, &(a, b, c)| acc * delta(a, b, c));
    let negative = sum.is_negative();
    let square = pref * &sum * &sum;
    signed_sqrt(negative, &square)
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>`.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
    let phase = ((j1.0 - j2.0 + m.0) / 2).rem_euclid(2);
    let sign = if phase == 0 { 1.0 } else { -1.0 };
    sign * ((j.0 + 1) as f64).sqrt() * wigner3j(j1, j2, j, m1, m2, -m)
}

/// Number of entries currently held by the 3-j/6-j memo caches.
pub fn cache_len() -> usize {
    cache_3j().lock().map(|c| c.len()).unwrap_or(0) + cache_6j().lock().map(|c| c.len()).unwrap_or(0)
}

/// Drops every memoized 3-j and 6-j value.
pub fn clear_cache() {
    if let Ok(mut c) = cache_3j().lock() {
        c.clear();
    }
    if let Ok(mut c) = cache_6j().lock() {
        c.clear();
    }
}

/// Electron and nuclear spins of a molecule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spins {
    pub s: HalfInt,
    pub i1: HalfInt,
    pub i2: HalfInt,
}

impl Spins {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("S", self.s), ("I1", self.i1), ("I2", self.i2)] {
            if v.0 < 0 {
                return Err(Error::InvalidArgument(format!("negative spin {name} = {v}")));
            }
        }
        Ok(())
    }

    /// Closed-form level count of rotational manifold `n`.
    pub fn manifold_size(&self, n: u32) -> usize {
        (2 * n as usize + 1) * self.s.multiplicity() * self.i1.multiplicity() * self.i2.multiplicity()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Uncoupled,
    Coupled,
}

/// One basis vector.
///
/// Uncoupled states are `|N m_N>|S m_S>|I1 m_1>|I2 m_2>`. Coupled states use
/// `I12 = I1 + I2`, `G = S + I12`, `F = N + G` and carry only `F` and its
/// projection besides the intermediate labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisState {
    Uncoupled {
        n: u32,
        m_n: HalfInt,
        m_s: HalfInt,
        m_i1: HalfInt,
        m_i2: HalfInt,
    },
    Coupled {
        n: u32,
        i12: HalfInt,
        g: HalfInt,
        f: HalfInt,
        m_f: HalfInt,
    },
}

impl BasisState {
    pub fn n(&self) -> u32 {
        match *self {
            BasisState::Uncoupled { n, .. } | BasisState::Coupled { n, .. } => n,
        }
    }

    /// Total projection `M_F`.
    pub fn m_f(&self) -> HalfInt {
        match *self {
            BasisState::Uncoupled { m_n, m_s, m_i1, m_i2, .. } => m_n + m_s + m_i1 + m_i2,
            BasisState::Coupled { m_f, .. } => m_f,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            BasisState::Uncoupled { .. } => Scheme::Uncoupled,
            BasisState::Coupled { .. } => Scheme::Coupled,
        }
    }
}

/// Enumerates the basis up to rotational quantum number `n_max` in canonical
/// order: by `N`, then `M_F`, then the remaining quantum numbers in
/// descending order.
pub fn enumerate_basis(spins: Spins, n_max: i32, scheme: Scheme) -> Result<Vec<BasisState>> {
    spins.validate()?;
    if n_max < 0 {
        return Err(Error::InvalidArgument(format!("negative N_max {n_max}")));
    }
    let mut out = Vec::new();
    for n in 0..=n_max as u32 {
        let nn = HalfInt::from_int(n as i32);
        let mut manifold = Vec::new();
        match scheme {
            Scheme::Uncoupled => {
                for m_n in nn.projections() {
                    for m_s in spins.s.projections() {
                        for m_i1 in spins.i1.projections() {
                            for m_i2 in spins.i2.projections() {
                                manifold.push(BasisState::Uncoupled { n, m_n, m_s, m_i1, m_i2 });
                            }
                        }
                    }
                }
                manifold.sort_by_key(|b| match *b {
                    BasisState::Uncoupled { m_n, m_s, m_i1, m_i2, .. } => (b.m_f(), -m_n, -m_s, -m_i1, -m_i2),
                    _ => unreachable!(),
                });
            }
            Scheme::Coupled => {
                for i12 in coupled_range(spins.i1, spins.i2) {
                    for g in coupled_range(spins.s, i12) {
                        for f in coupled_range(nn, g) {
                            for m_f in f.projections() {
                                manifold.push(BasisState::Coupled { n, i12, g, f, m_f });
                            }
                        }
                    }
                }
                manifold.sort_by_key(|b| match *b {
                    BasisState::Coupled { i12, g, f, m_f, .. } => (m_f, i12, g, f),
                    _ => unreachable!(),
                });
            }
        }
        out.extend(manifold);
    }
    Ok(out)
}

fn coupled_range(a: HalfInt, b: HalfInt) -> impl Iterator<Item = HalfInt> {
    let lo = (a.0 - b.0).abs();
    let hi = a.0 + b.0;
    (lo..=hi).step_by(2).map(HalfInt)
}

/// Overlap `<coupled | uncoupled>` built from three Clebsch-Gordan couplings.
/// Returns zero for states of different `N` or mismatched schemes.
pub fn recoupling_overlap(spins: Spins, coupled: &BasisState, uncoupled: &BasisState) -> f64 {
    let (
        BasisState::Coupled { n, i12, g, f, m_f },
        BasisState::Uncoupled {
            n: n2,
            m_n,
            m_s,
            m_i1,
            m_i2,
        },
    ) = (*coupled, *uncoupled)
    else {
        return 0.0;
    };
    if n != n2 || m_f != uncoupled.m_f() {
        return 0.0;
    }
    let m12 = m_i1 + m_i2;
    let m_g = m_s + m12;
    clebsch_gordan(spins.i1, m_i1, spins.i2, m_i2, i12, m12)
        * clebsch_gordan(spins.s, m_s, i12, m12, g, m_g)
        * clebsch_gordan(HalfInt::from_int(n as i32), m_n, g, m_g, f, m_f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn halfint_display_and_parse() {
        assert_eq!(h(3).to_string(), "3/2");
        assert_eq!(h(-4).to_string(), "-2");
        assert_eq!("7/2".parse::<HalfInt>().unwrap(), h(7));
        assert_eq!("-1".parse::<HalfInt>().unwrap(), h(-2));
        assert!("2/2".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
    }

    #[test]
    fn three_j_known_values() {
        let v = wigner3j(h(2), h(2), h(0), h(0), h(0), h(0));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(wigner3j(h(2), h(2), h(2), h(0), h(0), h(0)), 0.0);
        let v = wigner3j(h(1), h(1), h(2), h(1), h(1), h(-2));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15, "{v}");
    }

    #[test]
    fn three_j_selection_rules() {
        // m sum
        assert_eq!(wigner3j(h(2), h(2), h(2), h(2), h(0), h(0)), 0.0);
        // triangle
        assert_eq!(wigner3j(h(2), h(2), h(6), h(0), h(0), h(0)), 0.0);
        // |m| > j
        assert_eq!(wigner3j(h(2), h(2), h(0), h(4), h(-4), h(0)), 0.0);
        // j - m not integer
        assert_eq!(wigner3j(h(2), h(2), h(0), h(1), h(-1), h(0)), 0.0);
    }

    #[test]
    fn six_j_values() {
        let one = h(2);
        let v = wigner6j(one, one, one, one, one, one);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(wigner6j(one, one, h(6), one, one, one), 0.0);
        // {1 1 2; 1 1 0} = 1/3 (closed form {a b c; b a 0})
        let v = wigner6j(one, one, h(4), one, one, h(0));
        assert!((v - 1.0 / 3.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn basis_counts() {
        let caf = Spins {
            s: h(1),
            i1: h(0),
            i2: h(1),
        };
        let b = enumerate_basis(caf, 1, Scheme::Uncoupled).unwrap();
        assert_eq!(b.iter().filter(|s| s.n() == 0).count(), 4);
        assert_eq!(b.iter().filter(|s| s.n() == 1).count(), 12);
        let rbcs = Spins {
            s: h(0),
            i1: h(3),
            i2: h(7),
        };
        let b = enumerate_basis(rbcs, 1, Scheme::Coupled).unwrap();
        assert_eq!(b.iter().filter(|s| s.n() == 0).count(), 32);
        assert_eq!(b.iter().filter(|s| s.n() == 1).count(), 96);
        let rotor = Spins {
            s: h(0),
            i1: h(0),
            i2: h(0),
        };
        let b = enumerate_basis(rotor, 2, Scheme::Uncoupled).unwrap();
        let counts: Vec<usize> = (0..3).map(|n| b.iter().filter(|s| s.n() == n).count()).collect();
        assert_eq!(counts, vec![1, 3, 5]);
    }

    #[test]
    fn basis_rejects_negative() {
        let bad = Spins {
            s: h(-1),
            i1: h(0),
            i2: h(0),
        };
        assert!(enumerate_basis(bad, 1, Scheme::Uncoupled).is_err());
        let ok = Spins {
            s: h(0),
            i1: h(0),
            i2: h(0),
        };
        assert!(enumerate_basis(ok, -1, Scheme::Uncoupled).is_err());
    }

    #[test]
    fn recoupling_is_orthogonal() {
        let spins = Spins {
            s: h(1),
            i1: h(1),
            i2: h(3),
        };
        let unc = enumerate_basis(spins, 1, Scheme::Uncoupled).unwrap();
        let cpl = enumerate_basis(spins, 1, Scheme::Coupled).unwrap();
        assert_eq!(unc.len(), cpl.len());
        for a in &cpl {
            for b in &cpl {
                let dot: f64 = unc
                    .iter()
                    .map(|u| recoupling_overlap(spins, a, u) * recoupling_overlap(spins, b, u))
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "{a:?} {b:?} {dot}");
            }
        }
    }

    #[test]
    fn cache_is_transparent() {
        let v1 = wigner3j(h(4), h(2), h(2), h(2), h(-2), h(0));
        clear_cache();
        let v2 = wigner3j(h(4), h(2), h(2), h(2), h(-2), h(0));
        assert_eq!(v1.to_bits(), v2.to_bits());
    }
}
