//! Sparse Laurent polynomials in D variables over F_q and matrices of them.
//!
//! The monomial x_1^{a_1}···x_D^{a_D} stands for the lattice site
//! (a_1, …, a_D); multiplying by a monomial translates. Terms are kept in a
//! `BTreeMap`, so iteration (and the text form) follows the lexicographic
//! order of exponent vectors.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::fq::{Fe, Field};

/// Exponent vector of a monomial; negative entries allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<i64>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn var(dim: usize, axis: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = 1;
        Monomial(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|a| -a).collect())
    }

    pub fn scaled(&self, k: i64) -> Monomial {
        Monomial(self.0.iter().map(|a| a * k).collect())
    }
}

#[derive(Clone)]
pub struct LaurentPoly {
    field: Field,
    dim: usize,
    terms: BTreeMap<Monomial, Fe>,
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.dim == other.dim && self.terms == other.terms
    }
}

impl Eq for LaurentPoly {}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl LaurentPoly {
    pub fn zero(field: &Field, dim: usize) -> Self {
        LaurentPoly {
            field: field.clone(),
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(field: &Field, dim: usize) -> Self {
        Self::monomial(field, Monomial::one(dim), Fe::ONE)
    }

    pub fn monomial(field: &Field, m: Monomial, c: Fe) -> Self {
        let mut p = Self::zero(field, m.dim());
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds a polynomial from (exponents, coefficient) pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(field: &Field, dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Fe)>,
    {
        let mut p = Self::zero(field, dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::Mismatch(format!(
                    "monomial of length {} in a ring of dimension {dim}",
                    exps.len()
                )));
            }
            field.element(c.rep())?;
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Fe) {
        if c.is_zero() {
            return;
        }
        let field = self.field.clone();
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = field.add(*o.get(), c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nonzero terms, |f|.
    pub fn weight(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Fe)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> Fe {
        self.terms.get(m).copied().unwrap_or(Fe::ZERO)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::Mismatch(format!(
                "{:?} vs {:?}",
                self.field, other.field
            )));
        }
        if self.dim != other.dim {
            return Err(Error::Mismatch(format!(
                "dimension {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut r = self.clone();
        for (m, c) in other.terms() {
            r.add_term(m.clone(), c);
        }
        Ok(r)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(self.field.neg(Fe::ONE))
    }

    pub fn scale(&self, c: Fe) -> Self {
        let mut r = Self::zero(&self.field, self.dim);
        if c.is_zero() {
            return r;
        }
        for (m, a) in self.terms() {
            r.terms.insert(m.clone(), self.field.mul(a, c));
        }
        r
    }

    /// Multiplication by a monomial (a lattice translation).
    pub fn shift(&self, m: &Monomial) -> Self {
        LaurentPoly {
            field: self.field.clone(),
            dim: self.dim,
            terms: self.terms.iter().map(|(k, &c)| (k.mul(m), c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut r = Self::zero(&self.field, self.dim);
        for (m1, a) in self.terms() {
            for (m2, b) in other.terms() {
                r.add_term(m1.mul(m2), self.field.mul(a, b));
            }
        }
        Ok(r)
    }

    /// The conjugate f(x_1^{-1}, …, x_D^{-1}).
    pub fn conj(&self) -> Self {
        LaurentPoly {
            field: self.field.clone(),
            dim: self.dim,
            terms: self.terms.iter().map(|(m, &c)| (m.inverse(), c)).collect(),
        }
    }

    /// f^(p^j) computed term-wise: α x^v ↦ α^(p^j) x^(p^j v).
    pub fn frobenius(&self, j: u32) -> Self {
        let pj = (self.field.p() as i64).pow(j);
        LaurentPoly {
            field: self.field.clone(),
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| (m.scaled(pj), self.field.frobenius(c, j)))
                .collect(),
        }
    }

    /// f^k via the base-p expansion of k: f^k = Π_j (f^{d_j})^(p^j), with
    /// each outer power applied by [`LaurentPoly::frobenius`].
    pub fn pow(&self, k: u64) -> Self {
        let p = self.field.p() as u64;
        let mut result = Self::one(&self.field, self.dim);
        let mut rest = k;
        let mut j = 0u32;
        while rest > 0 {
            let d = rest % p;
            if d > 0 {
                let mut small = Self::one(&self.field, self.dim);
                for _ in 0..d {
                    small = small.mul(self).expect("same ring");
                }
                result = result.mul(&small.frobenius(j)).expect("same ring");
            }
            rest /= p;
            j += 1;
        }
        result
    }

    /// Smallest and largest exponent per axis; `None` for the zero polynomial.
    pub fn exponent_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for m in it {
            for i in 0..self.dim {
                lo[i] = lo[i].min(m.0[i]);
                hi[i] = hi[i].max(m.0[i]);
            }
        }
        Some((lo, hi))
    }

    /// Parses the text form `c*x^a*y^b + …` (see [`fmt::Display`]).
    /// Variables are `x, y, z` for D ≤ 3 and `x1 … xD` otherwise.
    pub fn parse(s: &str, field: &Field, dim: usize) -> Result<Self> {
        let mut poly = Self::zero(field, dim);
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        if cleaned == "0" {
            return Ok(poly);
        }
        for raw in split_terms(&cleaned) {
            let (negate, body) = match raw.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, raw.strip_prefix('+').unwrap_or(raw)),
            };
            if body.is_empty() {
                return Err(Error::Parse(format!("empty term in '{s}'")));
            }
            let mut coeff = Fe::ONE;
            let mut exps = vec![0i64; dim];
            for factor in body.split('*') {
                if factor.is_empty() {
                    return Err(Error::Parse(format!("empty factor in '{raw}'")));
                }
                if factor.chars().next().unwrap().is_ascii_digit() {
                    let n: u32 = factor
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coefficient '{factor}'")))?;
                    coeff = field.mul(coeff, field.element(n)?);
                    continue;
                }
                let (name, exp) = match factor.split_once('^') {
                    Some((n, e)) => {
                        let e = e.trim_start_matches('(').trim_end_matches(')');
                        let e: i64 = e
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad exponent in '{factor}'")))?;
                        (n, e)
                    }
                    None => (factor, 1),
                };
                let axis = var_index(name, dim)
                    .ok_or_else(|| Error::Parse(format!("unknown variable '{name}' (D={dim})")))?;
                exps[axis] += exp;
            }
            if negate {
                coeff = field.neg(coeff);
            }
            poly.add_term(Monomial(exps), coeff);
        }
        Ok(poly)
    }
}

fn split_terms(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i];
        // a sign starts a new term unless it belongs to an exponent
        if (c == b'+' || c == b'-') && bytes[i - 1] != b'^' && bytes[i - 1] != b'(' {
            out.push(&s[start..i]);
            start = i;
        }
    }
    out.push(&s[start..]);
    out
}

pub(crate) fn var_name(axis: usize, dim: usize) -> String {
    if dim <= 3 {
        ["x", "y", "z"][axis].to_string()
    } else {
        format!("x{}", axis + 1)
    }
}

fn var_index(name: &str, dim: usize) -> Option<usize> {
    if dim <= 3 {
        let i = ["x", "y", "z"].iter().position(|&v| v == name)?;
        (i < dim).then_some(i)
    } else {
        let i: usize = name.strip_prefix('x')?.parse().ok()?;
        (1..=dim).contains(&i).then(|| i - 1)
    }
}

impl fmt::Display for LaurentPoly {
    /// Canonical text: terms in lexicographic exponent order joined by `+`;
    /// coefficient 1 and exponent 1 omitted; coefficients are element indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            let mut factors = Vec::new();
            for (axis, &a) in m.0.iter().enumerate() {
                match a {
                    0 => {}
                    1 => factors.push(var_name(axis, self.dim)),
                    _ => factors.push(format!("{}^{}", var_name(axis, self.dim), a)),
                }
            }
            if factors.is_empty() {
                write!(f, "{}", c)?;
            } else if c == Fe::ONE {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", c, factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Dense matrix of Laurent polynomials sharing one field and dimension.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    field: Field,
    dim: usize,
    entries: Vec<LaurentPoly>,
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PolyMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl PolyMatrix {
    pub fn zeros(field: &Field, dim: usize, rows: usize, cols: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            field: field.clone(),
            dim,
            entries: vec![LaurentPoly::zero(field, dim); rows * cols],
        }
    }

    pub fn identity(field: &Field, dim: usize, n: usize) -> Self {
        let mut m = Self::zeros(field, dim, n, n);
        for i in 0..n {
            m.entries[i * n + i] = LaurentPoly::one(field, dim);
        }
        m
    }

    /// Row-major construction; all entries must share field and dimension.
    pub fn from_rows(rows: Vec<Vec<LaurentPoly>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if nrows == 0 || ncols == 0 {
            return Err(Error::Shape(
                "matrix needs at least one row and column".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let field = rows[0][0].field.clone();
        let dim = rows[0][0].dim;
        let entries: Vec<LaurentPoly> = rows.into_iter().flatten().collect();
        for e in &entries {
            if e.field != field || e.dim != dim {
                return Err(Error::Mismatch(
                    "entries of a matrix must share ring".into(),
                ));
            }
        }
        Ok(PolyMatrix {
            rows: nrows,
            cols: ncols,
            field,
            dim,
            entries,
        })
    }

    pub fn column(entries: Vec<LaurentPoly>) -> Result<Self> {
        Self::from_rows(entries.into_iter().map(|e| vec![e]).collect())
    }

    pub fn row(entries: Vec<LaurentPoly>) -> Result<Self> {
        Self::from_rows(vec![entries])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &LaurentPoly {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: LaurentPoly) -> Result<()> {
        if v.field != self.field || v.dim != self.dim {
            return Err(Error::Mismatch(
                "entry ring differs from matrix ring".into(),
            ));
        }
        self.entries[r * self.cols + c] = v;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.field != other.field || self.dim != other.dim {
            return Err(Error::Mismatch("matrix rings differ".into()));
        }
        let mut out = Self::zeros(&self.field, self.dim, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentPoly::zero(&self.field, self.dim);
                for k in 0..self.cols {
                    let prod = self.get(i, k).mul(other.get(k, j))?;
                    for (m, c) in prod.terms() {
                        acc.add_term(m.clone(), c);
                    }
                }
                out.entries[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut out = Self::zeros(&self.field, self.dim, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn conj(&self) -> PolyMatrix {
        PolyMatrix {
            entries: self.entries.iter().map(|e| e.conj()).collect(),
            ..self.clone()
        }
    }

    /// Entry-wise conjugate of the transpose.
    pub fn conj_transpose(&self) -> PolyMatrix {
        self.transpose().conj()
    }

    pub fn neg(&self) -> PolyMatrix {
        PolyMatrix {
            entries: self.entries.iter().map(|e| e.neg()).collect(),
            ..self.clone()
        }
    }

    /// Total number of terms in column `c`.
    pub fn column_weight(&self, c: usize) -> usize {
        (0..self.rows).map(|r| self.get(r, c).weight()).sum()
    }

    /// Total number of terms in row `r`.
    pub fn row_weight(&self, r: usize) -> usize {
        (0..self.cols).map(|c| self.get(r, c).weight()).sum()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).to_string()).collect())
            .collect()
    }

    pub fn parse(rows: &[Vec<String>], field: &Field, dim: usize) -> Result<PolyMatrix> {
        let parsed = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| LaurentPoly::parse(s, field, dim))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Field {
        Field::binary()
    }

    fn p(s: &str, field: &Field, dim: usize) -> LaurentPoly {
        LaurentPoly::parse(s, field, dim).unwrap()
    }

    #[test]
    fn square_in_characteristic_two() {
        let f = f2();
        let a = p("1+x", &f, 1);
        assert_eq!(a.mul(&a).unwrap(), p("1+x^2", &f, 1));
    }

    #[test]
    fn cube_expansion_matches_hand_count() {
        let f = f2();
        let a = p("1+x+y", &f, 2);
        let b = p("1+x^2+y^2", &f, 2);
        let prod = a.mul(&b).unwrap();
        // (1+x+y)^3 over F_2: every monomial x^i y^j with i+j ≤ 3 whose
        // trinomial coefficient 3!/(i! j! (3-i-j)!) is odd
        let mut expected = Vec::new();
        for i in 0..=3i64 {
            for j in 0..=(3 - i) {
                let k = 3 - i - j;
                let fact = |n: i64| (1..=n).product::<i64>();
                if (6 / (fact(i) * fact(j) * fact(k))) % 2 == 1 {
                    expected.push((vec![i, j], Fe::ONE));
                }
            }
        }
        assert_eq!(expected.len(), 9);
        assert_eq!(prod, LaurentPoly::from_terms(&f, 2, expected).unwrap());
        assert_eq!(prod, a.pow(3));
        assert_eq!(prod.weight(), 9);
    }

    #[test]
    fn identity_and_zero_power() {
        let f = f2();
        let a = p("1+x*y^-1+y^3", &f, 2);
        assert_eq!(a.mul(&LaurentPoly::one(&f, 2)).unwrap(), a);
        assert_eq!(a.pow(0), LaurentPoly::one(&f, 2));
    }

    #[test]
    fn conjugation_examples() {
        let f = f2();
        assert_eq!(p("1+x", &f, 1).conj(), p("1+x^-1", &f, 1));
        assert_eq!(p("1+x^-1", &f, 1).conj(), p("1+x", &f, 1));
    }

    #[test]
    fn frobenius_powers() {
        let f = f2();
        assert_eq!(p("x+y", &f, 2).pow(2), p("x^2+y^2", &f, 2));
        assert_eq!(p("1+x+y", &f, 2).pow(4), p("1+x^4+y^4", &f, 2));
    }

    #[test]
    fn mismatch_errors() {
        let f = f2();
        let g = Field::new(3, 1).unwrap();
        assert!(matches!(
            p("x", &f, 1).mul(&p("x", &g, 1)),
            Err(Error::Mismatch(_))
        ));
        assert!(matches!(
            p("x", &f, 1).add(&p("x", &f, 2)),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn text_form() {
        let f = Field::new(5, 1).unwrap();
        let a = p("3*x^-1*y + 2 - z + x*x", &f, 3);
        assert_eq!(a.to_string(), "3*x^-1*y+2+4*z+x^2");
        assert_eq!(p(&a.to_string(), &f, 3), a);
        assert_eq!(p("0", &f, 3).to_string(), "0");
        assert!(LaurentPoly::parse("w", &f, 3).is_err());
        assert!(LaurentPoly::parse("7*x", &f, 3).is_err());
        assert!(LaurentPoly::parse("", &f, 3).is_err());
        let d4 = p("x1*x4^-2+1", &f, 4);
        assert_eq!(d4.to_string(), "1+x1*x4^-2");
    }

    #[test]
    fn toric_conj_transpose() {
        let f = f2();
        let hx = PolyMatrix::column(vec![p("1+x^-1", &f, 2), p("1+y^-1", &f, 2)]).unwrap();
        let expected = PolyMatrix::row(vec![p("1+x", &f, 2), p("1+y", &f, 2)]).unwrap();
        assert_eq!(hx.conj_transpose(), expected);
    }

    #[test]
    fn haah_square_product_vanishes() {
        let f = Field::new(5, 1).unwrap();
        let a = p("1+2*x+y+3*z", &f, 3);
        let b = p("1+x*y+4*y*z+z*x", &f, 3);
        let row = PolyMatrix::row(vec![a.clone(), b.clone()]).unwrap();
        let col = PolyMatrix::column(vec![b, a.neg()]).unwrap();
        assert!(row.mul(&col).unwrap().is_zero());
        let id = PolyMatrix::identity(&f, 3, 1);
        assert_eq!(id.mul(&row).unwrap(), row);
        assert!(matches!(row.mul(&row), Err(Error::Shape(_))));
    }

    fn random_poly(
        rng: &mut ChaCha8Rng,
        field: &Field,
        dim: usize,
        terms: usize,
        span: i64,
    ) -> LaurentPoly {
        let t: Vec<_> = (0..terms)
            .map(|_| {
                let e: Vec<i64> = (0..dim).map(|_| rng.gen_range(-span..=span)).collect();
                (e, field.random(rng))
            })
            .collect();
        LaurentPoly::from_terms(field, dim, t).unwrap()
    }

    fn fields() -> Vec<Field> {
        [(2, 1), (3, 1), (2, 2), (5, 1), (3, 2)]
            .iter()
            .map(|&(p, e)| Field::new(p, e).unwrap())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn frobenius_matches_repeated_multiplication(seed in any::<u64>(), fi in 0usize..5, j in 0u32..=4) {
            let field = &fields()[fi];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, field, 2, 3, 1);
            let pj = (field.p() as u64).pow(j);
            prop_assume!(pj <= 81);
            let fast = f.pow(pj);
            prop_assert_eq!(&fast, &f.frobenius(j));
            let mut naive = LaurentPoly::one(field, 2);
            for _ in 0..pj {
                naive = naive.mul(&f).unwrap();
            }
            prop_assert_eq!(&fast, &naive);
            prop_assert!(fast.weight() <= f.weight());
        }

        #[test]
        fn general_power_matches_naive(seed in any::<u64>(), fi in 0usize..5, k in 0u64..12) {
            let field = &fields()[fi];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, field, 2, 3, 1);
            let mut naive = LaurentPoly::one(field, 2);
            for _ in 0..k {
                naive = naive.mul(&f).unwrap();
            }
            prop_assert_eq!(f.pow(k), naive);
        }

        #[test]
        fn conj_is_algebra_involution(seed in any::<u64>(), fi in 0usize..5) {
            let field = &fields()[fi];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_poly(&mut rng, field, 3, 4, 2);
            let g = random_poly(&mut rng, field, 3, 4, 2);
            prop_assert_eq!(f.conj().conj(), f.clone());
            prop_assert_eq!(f.mul(&g).unwrap().conj(), f.conj().mul(&g.conj()).unwrap());
            prop_assert_eq!(LaurentPoly::parse(&f.to_string(), field, 3).unwrap(), f);
        }

        #[test]
        fn conj_transpose_reverses_products(seed in any::<u64>(), fi in 0usize..5) {
            let field = &fields()[fi];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mk = |r: usize, c: usize| {
                let rows = (0..r).map(|_| (0..c).map(|_| random_poly(&mut rng, field, 2, 2, 1)).collect()).collect();
                PolyMatrix::from_rows(rows).unwrap()
            };
            let a = mk(2, 3);
            let b = mk(3, 2);
            prop_assert_eq!(
                a.mul(&b).unwrap().conj_transpose(),
                b.conj_transpose().mul(&a.conj_transpose()).unwrap()
            );
        }
    }
}
