//! Arithmetic in F_q, q = p^e ≤ 2^16.
//!
//! An element is stored as its index `rep ∈ [0, q)`: the base-p digits of
//! `rep` are the coefficients (constant term first) of a polynomial in
//! F_p[t] reduced modulo the field's irreducible modulus. `rep = 0` is the
//! additive identity and `rep = 1` the multiplicative identity.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 16;

/// A field element, identified by its polynomial-basis index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fe(pub u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn rep(self) -> u32 {
        self.0 as u32
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Tables {
    p: u32,
    e: u32,
    q: u32,
    /// Monic modulus, coefficients constant term first, length e + 1.
    modulus: Vec<u32>,
    /// exp[i] = g^i for i in [0, 2(q-1)).
    exp: Vec<u16>,
    /// log[a] for a != 0; log[0] unused.
    log: Vec<u32>,
    neg: Vec<u16>,
    /// Full addition table for q ≤ 256.
    add: Option<Vec<u16>>,
}

/// Handle to a finite field. Cheap to clone; equality is by (p, e), which
/// determines the modulus.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.e == other.0.e
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)?;
        if self.0.e > 1 {
            write!(f, "[t]/({})", format_fp_poly(&self.0.modulus))?;
        }
        Ok(())
    }
}

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn format_fp_poly(c: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &a) in c.iter().enumerate().rev() {
        if a == 0 {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "t".to_string(),
            _ => format!("t^{i}"),
        };
        parts.push(match (a, i) {
            (_, 0) => a.to_string(),
            (1, _) => mono,
            _ => format!("{a}{mono}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Remainder of `a` modulo the monic polynomial `m` over F_p.
fn fp_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &mc) in m.iter().enumerate() {
                let idx = shift + i;
                r[idx] = (r[idx] + p - (lead * mc) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn fp_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    fp_rem(&prod, m, p)
}

fn digits(mut rep: u32, p: u32, e: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(e as usize);
    for _ in 0..e {
        d.push(rep % p);
        rep /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    if deg <= 1 {
        return true;
    }
    // trial division by every monic polynomial of degree 1..=deg/2
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for low in 0..count {
            let mut divisor = digits(low, p, d as u32);
            divisor.push(1);
            if fp_rem(m, &divisor, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// Builds F_{p^e} with the smallest monic irreducible modulus, ordering
    /// candidates by the base-p integer Σ c_i p^i of their lower coefficients.
    pub fn new(p: u32, e: u32) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::Field(format!("{p} is not prime")));
        }
        if e == 0 {
            return Err(Error::Field("extension degree must be at least 1".into()));
        }
        let q = (p as u64)
            .checked_pow(e)
            .filter(|&q| q <= MAX_ORDER as u64)
            .ok_or_else(|| Error::Field(format!("{p}^{e} exceeds 2^16")))? as u32;
        let modulus = if e == 1 {
            vec![0, 1]
        } else {
            (0..q)
                .map(|low| {
                    let mut m = digits(low, p, e);
                    m.push(1);
                    m
                })
                .find(|m| m[0] != 0 && is_irreducible(m, p))
                .expect("an irreducible polynomial of every degree exists")
        };
        Ok(Field(Arc::new(Self::build_tables(p, e, q, modulus))))
    }

    fn build_tables(p: u32, e: u32, q: u32, modulus: Vec<u32>) -> Tables {
        let mul_slow = |a: u32, b: u32| -> u32 {
            if e == 1 {
                return a * b % p;
            }
            let r = fp_mulmod(&digits(a, p, e), &digits(b, p, e), &modulus, p);
            let mut r = r;
            r.resize(e as usize, 0);
            undigits(&r, p)
        };
        let order = q - 1;
        let mut exp = vec![0u16; 2 * order.max(1) as usize];
        let mut log = vec![0u32; q as usize];
        if q == 2 {
            exp[0] = 1;
            exp[1] = 1;
        } else {
            let mut found = false;
            for g in 2..q {
                let mut x = 1u32;
                let mut seen = vec![false; q as usize];
                let mut ok = true;
                for i in 0..order {
                    if seen[x as usize] {
                        ok = false;
                        break;
                    }
                    seen[x as usize] = true;
                    exp[i as usize] = x as u16;
                    x = mul_slow(x, g);
                }
                if ok && x == 1 {
                    found = true;
                    break;
                }
            }
            assert!(found, "multiplicative group of a finite field is cyclic");
            for i in 0..order {
                exp[(i + order) as usize] = exp[i as usize];
            }
        }
        for i in 0..order {
            log[exp[i as usize] as usize] = i;
        }
        let neg: Vec<u16> = (0..q)
            .map(|a| {
                let d: Vec<u32> = digits(a, p, e).iter().map(|&x| (p - x) % p).collect();
                undigits(&d, p) as u16
            })
            .collect();
        let add = if q <= 256 {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = add_digits(a, b, p, e) as u16;
                }
            }
            Some(t)
        } else {
            None
        };
        Tables {
            p,
            e,
            q,
            modulus,
            exp,
            log,
            neg,
            add,
        }
    }

    pub fn binary() -> Field {
        Field::new(2, 1).expect("F_2")
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn e(&self) -> u32 {
        self.0.e
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.0.q
    }

    /// Modulus coefficients, constant term first, monic.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn modulus_string(&self) -> String {
        format_fp_poly(&self.0.modulus)
    }

    pub fn element(&self, rep: u32) -> Result<Fe> {
        if rep < self.0.q {
            Ok(Fe(rep as u16))
        } else {
            Err(Error::Invalid(format!(
                "element index {rep} out of range for F_{}",
                self.0.q
            )))
        }
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.0.p as i64) as u16)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let t = &*self.0;
        if t.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        if t.e == 1 {
            return Fe(((a.0 as u32 + b.0 as u32) % t.p) as u16);
        }
        match &t.add {
            Some(tab) => Fe(tab[(a.0 as u32 * t.q + b.0 as u32) as usize]),
            None => Fe(add_digits(a.0 as u32, b.0 as u32, t.p, t.e) as u16),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.0.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        let t = &*self.0;
        Fe(t.exp[(t.log[a.0 as usize] + t.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let t = &*self.0;
        let order = t.q - 1;
        Ok(Fe(t.exp[((order - t.log[a.0 as usize]) % order) as usize]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, k: u64) -> Fe {
        if k == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let t = &*self.0;
        let order = (t.q - 1) as u64;
        let l = (t.log[a.0 as usize] as u64 * (k % order)) % order;
        Fe(t.exp[l as usize])
    }

    /// a^(p^j), the j-fold Frobenius map.
    pub fn frobenius(&self, a: Fe, j: u32) -> Fe {
        let mut x = a;
        for _ in 0..(j % self.0.e) {
            x = self.pow(x, self.0.p as u64);
        }
        x
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.0.q).map(|r| Fe(r as u16))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Fe> {
        (1..self.0.q).map(|r| Fe(r as u16))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.0.q) as u16)
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(1..self.0.q) as u16)
    }
}

fn add_digits(mut a: u32, mut b: u32, p: u32, e: u32) -> u32 {
    let mut r = 0;
    let mut place = 1;
    for _ in 0..e {
        r += ((a % p + b % p) % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prime_field_parameters() {
        let f2 = Field::new(2, 1).unwrap();
        assert_eq!(f2.order(), 2);
        assert_eq!(f2.modulus(), &[0, 1]);
        assert_eq!(f2.modulus_string(), "t");
        let f3 = Field::new(3, 1).unwrap();
        assert_eq!(f3.order(), 3);
    }

    #[test]
    fn f4_modulus_and_product() {
        let f4 = Field::new(2, 2).unwrap();
        assert_eq!(f4.order(), 4);
        assert_eq!(f4.modulus(), &[1, 1, 1]);
        // t = rep 2, t + 1 = rep 3
        assert_eq!(f4.mul(Fe(2), Fe(2)), Fe(3));
    }

    #[test]
    fn small_identities() {
        let f2 = Field::binary();
        assert_eq!(f2.mul(Fe::ONE, Fe::ONE), Fe::ONE);
        let f3 = Field::new(3, 1).unwrap();
        assert_eq!(f3.inv(Fe(2)).unwrap(), Fe(2));
        assert_eq!(f3.inv(Fe::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Field::new(4, 1), Err(Error::Field(_))));
        assert!(matches!(Field::new(2, 0), Err(Error::Field(_))));
        assert!(matches!(Field::new(2, 17), Err(Error::Field(_))));
        assert!(matches!(Field::new(257, 2), Err(Error::Field(_))));
        assert!(Field::new(2, 16).is_ok());
    }

    #[test]
    fn moduli_are_irreducible_and_smallest() {
        // F_8: t^3+t+1 precedes t^3+t^2+1
        assert_eq!(Field::new(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
        // F_9: t^2+1 is irreducible over F_3 (no roots: 1, 2, 2)
        assert_eq!(Field::new(3, 2).unwrap().modulus(), &[1, 0, 1]);
        for (p, e) in [(2, 4), (3, 3), (5, 2), (7, 2), (2, 8)] {
            let f = Field::new(p, e).unwrap();
            assert!(is_irreducible(f.modulus(), p));
        }
    }

    #[test]
    fn frobenius_is_additive() {
        let f = Field::new(3, 2).unwrap();
        for a in f.elements() {
            for b in f.elements() {
                assert_eq!(
                    f.frobenius(f.add(a, b), 1),
                    f.add(f.frobenius(a, 1), f.frobenius(b, 1))
                );
            }
            assert_eq!(f.frobenius(a, 2), a);
        }
    }

    fn supported_fields() -> Vec<Field> {
        [
            (2, 1),
            (3, 1),
            (2, 2),
            (5, 1),
            (7, 1),
            (2, 3),
            (3, 2),
            (2, 4),
            (11, 1),
            (2, 10),
            (257, 1),
        ]
        .iter()
        .map(|&(p, e)| Field::new(p, e).unwrap())
        .collect()
    }

    proptest! {
        #[test]
        fn field_axioms(idx in 0usize..11, a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
            let f = &supported_fields()[idx];
            let q = f.order();
            let (a, b, c) = (Fe((a % q) as u16), Fe((b % q) as u16), Fe((c % q) as u16));
            prop_assert_eq!(f.add(a, b), f.add(b, a));
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
            prop_assert_eq!(f.add(a, Fe::ZERO), a);
            prop_assert_eq!(f.mul(a, Fe::ONE), a);
            if !a.is_zero() {
                prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            }
            prop_assert_eq!(f.pow(a, q as u64), a);
        }
    }
}
