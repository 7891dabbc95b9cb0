//! Sparse matrices and words over F_q.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fq::{Fe, Field};

/// A vector in F_q^n stored by its support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseWord {
    len: usize,
    support: BTreeMap<usize, Fe>,
}

impl SparseWord {
    pub fn zero(len: usize) -> Self {
        SparseWord {
            len,
            support: BTreeMap::new(),
        }
    }

    pub fn from_entries<I: IntoIterator<Item = (usize, Fe)>>(
        len: usize,
        entries: I,
    ) -> Result<Self> {
        let mut w = Self::zero(len);
        for (i, v) in entries {
            if i >= len {
                return Err(Error::Invalid(format!(
                    "index {i} out of range for length {len}"
                )));
            }
            if v.is_zero() {
                w.support.remove(&i);
            } else {
                w.support.insert(i, v);
            }
        }
        Ok(w)
    }

    pub fn from_dense(v: &[Fe]) -> Self {
        SparseWord {
            len: v.len(),
            support: v
                .iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(i, &x)| (i, x))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.len];
        for (&i, &x) in &self.support {
            v[i] = x;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, i: usize) -> Fe {
        self.support.get(&i).copied().unwrap_or(Fe::ZERO)
    }

    pub fn set(&mut self, i: usize, v: Fe) {
        assert!(i < self.len, "index out of range");
        if v.is_zero() {
            self.support.remove(&i);
        } else {
            self.support.insert(i, v);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, Fe)> + '_ {
        self.support.iter().map(|(&i, &v)| (i, v))
    }

    pub fn add(&self, other: &SparseWord, field: &Field) -> SparseWord {
        let mut r = self.clone();
        for (i, v) in other.entries() {
            r.set(i, field.add(r.get(i), v));
        }
        r
    }

    pub fn scale(&self, c: Fe, field: &Field) -> SparseWord {
        SparseWord {
            len: self.len,
            support: if c.is_zero() {
                BTreeMap::new()
            } else {
                self.support
                    .iter()
                    .map(|(&i, &v)| (i, field.mul(v, c)))
                    .collect()
            },
        }
    }
}

/// Sparse matrix over F_q with row and column adjacency.
#[derive(Clone, Debug)]
pub struct SparseFqMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, Fe)>>,
    col_entries: Vec<Vec<(usize, Fe)>>,
}

impl PartialEq for SparseFqMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.rows == other.rows
            && self.cols == other.cols
            && self.row_entries == other.row_entries
    }
}

impl Eq for SparseFqMatrix {}

impl SparseFqMatrix {
    /// Assembles a matrix from (row, col, value) triples; repeated positions
    /// are summed and zeros dropped.
    pub fn from_triples<I>(field: &Field, rows: usize, cols: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Fe)>,
    {
        let mut acc: Vec<BTreeMap<usize, Fe>> = vec![BTreeMap::new(); rows];
        for (r, c, v) in triples {
            if r >= rows || c >= cols {
                return Err(Error::Shape(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            field.element(v.rep())?;
            let e = acc[r].entry(c).or_insert(Fe::ZERO);
            *e = field.add(*e, v);
        }
        let row_entries: Vec<Vec<(usize, Fe)>> = acc
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Ok(Self::from_rows(field, cols, row_entries))
    }

    /// Rows must be sorted by column and free of zeros.
    pub(crate) fn from_rows(
        field: &Field,
        cols: usize,
        row_entries: Vec<Vec<(usize, Fe)>>,
    ) -> Self {
        let mut col_entries = vec![Vec::new(); cols];
        for (r, row) in row_entries.iter().enumerate() {
            for &(c, v) in row {
                col_entries[c].push((r, v));
            }
        }
        SparseFqMatrix {
            field: field.clone(),
            rows: row_entries.len(),
            cols,
            row_entries,
            col_entries,
        }
    }

    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        Self::from_rows(field, cols, vec![Vec::new(); rows])
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        Self::from_rows(field, n, (0..n).map(|i| vec![(i, Fe::ONE)]).collect())
    }

    pub fn from_dense(field: &Field, rows: &[Vec<Fe>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged dense matrix".into()));
        }
        let triples = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)));
        Self::from_triples(field, rows.len(), cols, triples)
    }

    pub fn to_dense(&self) -> Vec<Vec<Fe>> {
        let mut d = vec![vec![Fe::ZERO; self.cols]; self.rows];
        for (r, row) in self.row_entries.iter().enumerate() {
            for &(c, v) in row {
                d[r][c] = v;
            }
        }
        d
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, Fe)] {
        &self.row_entries[r]
    }

    pub fn col(&self, c: usize) -> &[(usize, Fe)] {
        &self.col_entries[c]
    }

    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.row_entries[r]
            .binary_search_by_key(&c, |&(j, _)| j)
            .map(|k| self.row_entries[r][k].1)
            .unwrap_or(Fe::ZERO)
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, Fe)> + '_ {
        self.row_entries
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn max_row_weight(&self) -> usize {
        self.row_entries.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    pub fn max_col_weight(&self) -> usize {
        self.col_entries.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.row_entries.iter().all(|r| r.is_empty())
    }

    pub fn transpose(&self) -> SparseFqMatrix {
        SparseFqMatrix {
            field: self.field.clone(),
            rows: self.cols,
            cols: self.rows,
            row_entries: self.col_entries.clone(),
            col_entries: self.row_entries.clone(),
        }
    }

    /// Dense product M·v.
    pub fn mul_dense(&self, v: &[Fe]) -> Vec<Fe> {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        self.row_entries
            .iter()
            .map(|row| {
                row.iter().fold(Fe::ZERO, |acc, &(c, a)| {
                    self.field.add(acc, self.field.mul(a, v[c]))
                })
            })
            .collect()
    }

    pub fn mul_word(&self, w: &SparseWord) -> Result<SparseWord> {
        if w.len() != self.cols {
            return Err(Error::Shape(format!(
                "word of length {} for {} columns",
                w.len(),
                self.cols
            )));
        }
        let mut acc: BTreeMap<usize, Fe> = BTreeMap::new();
        for (c, x) in w.entries() {
            for &(r, a) in &self.col_entries[c] {
                let e = acc.entry(r).or_insert(Fe::ZERO);
                *e = self.field.add(*e, self.field.mul(a, x));
            }
        }
        SparseWord::from_entries(self.rows, acc)
    }

    /// |M w|, the number of violated checks.
    pub fn syndrome_weight(&self, w: &SparseWord) -> Result<usize> {
        Ok(self.mul_word(w)?.weight())
    }

    pub fn mul(&self, other: &SparseFqMatrix) -> Result<SparseFqMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.field != other.field {
            return Err(Error::Mismatch("matrix fields differ".into()));
        }
        let f = &self.field;
        let rows = self
            .row_entries
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Fe> = BTreeMap::new();
                for &(k, a) in row {
                    for &(j, b) in &other.row_entries[k] {
                        let e = acc.entry(j).or_insert(Fe::ZERO);
                        *e = f.add(*e, f.mul(a, b));
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        Ok(Self::from_rows(f, other.cols, rows))
    }

    pub fn scale(&self, c: Fe) -> SparseFqMatrix {
        let f = &self.field;
        let rows = self
            .row_entries
            .iter()
            .map(|row| {
                if c.is_zero() {
                    Vec::new()
                } else {
                    row.iter().map(|&(j, v)| (j, f.mul(v, c))).collect()
                }
            })
            .collect();
        Self::from_rows(f, self.cols, rows)
    }

    /// Kronecker product A ⊗ B with row index (i_a, i_b) ↦ i_a·rows(B) + i_b.
    pub fn kron(&self, other: &SparseFqMatrix) -> Result<SparseFqMatrix> {
        if self.field != other.field {
            return Err(Error::Mismatch("matrix fields differ".into()));
        }
        let f = &self.field;
        let mut rows = Vec::with_capacity(self.rows * other.rows);
        for ra in &self.row_entries {
            for rb in &other.row_entries {
                let mut row = Vec::with_capacity(ra.len() * rb.len());
                for &(ca, va) in ra {
                    for &(cb, vb) in rb {
                        row.push((ca * other.cols + cb, f.mul(va, vb)));
                    }
                }
                rows.push(row);
            }
        }
        Ok(Self::from_rows(f, self.cols * other.cols, rows))
    }

    /// Block row [A | B].
    pub fn hstack(&self, other: &SparseFqMatrix) -> Result<SparseFqMatrix> {
        if self.rows != other.rows {
            return Err(Error::Shape("hstack needs equal row counts".into()));
        }
        if self.field != other.field {
            return Err(Error::Mismatch("matrix fields differ".into()));
        }
        let rows = self
            .row_entries
            .iter()
            .zip(&other.row_entries)
            .map(|(a, b)| {
                a.iter()
                    .copied()
                    .chain(b.iter().map(|&(c, v)| (c + self.cols, v)))
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(&self.field, self.cols + other.cols, rows))
    }

    /// Block column [A ; B].
    pub fn vstack(&self, other: &SparseFqMatrix) -> Result<SparseFqMatrix> {
        if self.cols != other.cols {
            return Err(Error::Shape("vstack needs equal column counts".into()));
        }
        if self.field != other.field {
            return Err(Error::Mismatch("matrix fields differ".into()));
        }
        let rows = self
            .row_entries
            .iter()
            .chain(&other.row_entries)
            .cloned()
            .collect();
        Ok(Self::from_rows(&self.field, self.cols, rows))
    }

    /// Rows and columns relabelled: new row `row_perm[r]` is old row `r`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<SparseFqMatrix> {
        if row_perm.len() != self.rows || col_perm.len() != self.cols {
            return Err(Error::Shape("permutation length mismatch".into()));
        }
        let triples = self
            .triples()
            .map(|(r, c, v)| (row_perm[r], col_perm[c], v))
            .collect::<Vec<_>>();
        Self::from_triples(&self.field, self.rows, self.cols, triples)
    }

    /// Text interchange form: a header line `rows cols p e` followed by one
    /// `row col value` triple per line, rows then columns ascending.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {}",
            self.rows,
            self.cols,
            self.field.p(),
            self.field.e()
        );
        for (r, c, v) in self.triples() {
            let _ = writeln!(s, "{r} {c} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SparseFqMatrix> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing matrix header".into()))?;
        let nums = parse_fields(header, 4)?;
        let field = Field::new(nums[2] as u32, nums[3] as u32)?;
        let mut triples = Vec::new();
        for l in lines {
            let t = parse_fields(l, 3)?;
            triples.push((t[0], t[1], field.element(t[2] as u32)?));
        }
        let mut seen = std::collections::HashSet::new();
        for &(r, c, _) in &triples {
            if !seen.insert((r, c)) {
                return Err(Error::Parse(format!("duplicate entry ({r}, {c})")));
            }
        }
        Self::from_triples(&field, nums[0], nums[1], triples)
    }
}

fn parse_fields(line: &str, n: usize) -> Result<Vec<usize>> {
    let v: Vec<usize> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad number '{t}'")))
        })
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} fields in '{line}'")));
    }
    Ok(v)
}
