//! Gaussian elimination over F_q and the code parameters built on it:
//! rank, kernel, coset minimum weight, dimension, distance, and logical
//! triviality.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codes::{CodeInstance, Sector};
use crate::error::{Error, Result};
use crate::fq::{Fe, Field};
use crate::sparse::{SparseFqMatrix, SparseWord};

type Row = Vec<(usize, Fe)>;

/// Pivot selection rule for elimination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Column with the fewest active entries, then the shortest row in it.
    Markowitz,
    /// Lowest-index column with an active entry.
    Leftmost,
}

/// Reduced row echelon form of a sparse matrix, optionally with the row
/// operations that produced it (needed for solving `M x = s`).
#[derive(Clone, Debug)]
pub struct Echelon {
    field: Field,
    cols: usize,
    source_rows: usize,
    /// Pivot rows, normalized so the pivot entry is 1.
    rows: Vec<Row>,
    pivots: Vec<usize>,
    pivot_row: Vec<Option<usize>>,
    /// For each pivot row, the combination of source rows giving it.
    history: Option<Vec<Row>>,
    /// Combinations of source rows that vanish (left-kernel vectors).
    null_combos: Option<Vec<Row>>,
}

/// a - f·b for sorted sparse rows.
fn axpy(field: &Field, a: &Row, f: Fe, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            let v = field.neg(field.mul(f, b[j].1));
            if !v.is_zero() {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = field.sub(a[i].1, field.mul(f, b[j].1));
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn row_get(row: &Row, c: usize) -> Fe {
    row.binary_search_by_key(&c, |&(j, _)| j)
        .map(|k| row[k].1)
        .unwrap_or(Fe::ZERO)
}

impl Echelon {
    pub fn new(m: &SparseFqMatrix) -> Echelon {
        Self::build(m, PivotRule::Markowitz, false)
    }

    pub fn with_history(m: &SparseFqMatrix) -> Echelon {
        Self::build(m, PivotRule::Markowitz, true)
    }

    pub fn build(m: &SparseFqMatrix, rule: PivotRule, track: bool) -> Echelon {
        let field = m.field().clone();
        let nrows = m.rows();
        let ncols = m.cols();
        let mut rows: Vec<Row> = (0..nrows).map(|r| m.row(r).to_vec()).collect();
        let mut hist: Vec<Row> = if track {
            (0..nrows).map(|r| vec![(r, Fe::ONE)]).collect()
        } else {
            Vec::new()
        };
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
        let mut active_count = vec![0usize; ncols];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                col_rows[c].insert(r);
                active_count[c] += 1;
            }
        }
        let mut active = vec![true; nrows];
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; nrows];
        let mut order = Vec::new();

        loop {
            let pc = match rule {
                PivotRule::Markowitz => (0..ncols)
                    .filter(|&c| active_count[c] > 0)
                    .min_by_key(|&c| (active_count[c], c)),
                PivotRule::Leftmost => (0..ncols).find(|&c| active_count[c] > 0),
            };
            let Some(pc) = pc else { break };
            let pr = col_rows[pc]
                .iter()
                .copied()
                .filter(|&r| active[r])
                .min_by_key(|&r| (rows[r].len(), r))
                .expect("active count positive");
            let inv = field
                .inv(row_get(&rows[pr], pc))
                .expect("stored entries are nonzero");
            for e in rows[pr].iter_mut() {
                e.1 = field.mul(e.1, inv);
            }
            if track {
                for e in hist[pr].iter_mut() {
                    e.1 = field.mul(e.1, inv);
                }
            }
            active[pr] = false;
            for &(c, _) in &rows[pr] {
                active_count[c] -= 1;
            }
            let targets: Vec<usize> = col_rows[pc].iter().copied().filter(|&r| r != pr).collect();
            let pivot_row = rows[pr].clone();
            let pivot_hist = if track { hist[pr].clone() } else { Vec::new() };
            for r in targets {
                let factor = row_get(&rows[r], pc);
                let new_row = axpy(&field, &rows[r], factor, &pivot_row);
                let old: BTreeSet<usize> = rows[r].iter().map(|e| e.0).collect();
                let new: BTreeSet<usize> = new_row.iter().map(|e| e.0).collect();
                for &c in old.difference(&new) {
                    col_rows[c].remove(&r);
                    if active[r] {
                        active_count[c] -= 1;
                    }
                }
                for &c in new.difference(&old) {
                    col_rows[c].insert(r);
                    if active[r] {
                        active_count[c] += 1;
                    }
                }
                rows[r] = new_row;
                if track {
                    hist[r] = axpy(&field, &hist[r], factor, &pivot_hist);
                }
            }
            pivot_of_row[pr] = Some(pc);
            order.push(pr);
        }

        let mut pivot_row = vec![None; ncols];
        let mut out_rows = Vec::with_capacity(order.len());
        let mut pivots = Vec::with_capacity(order.len());
        let mut history = Vec::new();
        for (k, &r) in order.iter().enumerate() {
            let c = pivot_of_row[r].unwrap();
            pivot_row[c] = Some(k);
            pivots.push(c);
            out_rows.push(std::mem::take(&mut rows[r]));
            if track {
                history.push(std::mem::take(&mut hist[r]));
            }
        }
        let null_combos = track.then(|| {
            (0..nrows)
                .filter(|&r| pivot_of_row[r].is_none())
                .map(|r| std::mem::take(&mut hist[r]))
                .collect()
        });
        Echelon {
            field,
            cols: ncols,
            source_rows: nrows,
            rows: out_rows,
            pivots,
            pivot_row,
            history: track.then_some(history),
            null_combos,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Rows of the reduced form as words.
    pub fn basis(&self) -> Vec<SparseWord> {
        self.rows
            .iter()
            .map(|r| SparseWord::from_entries(self.cols, r.iter().copied()).expect("in range"))
            .collect()
    }

    /// A basis of the right kernel {x : M x = 0}, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<SparseWord> {
        let f = &self.field;
        let mut free_entries: Vec<Vec<(usize, Fe)>> = vec![Vec::new(); self.cols];
        for (k, row) in self.rows.iter().enumerate() {
            let pc = self.pivots[k];
            for &(c, v) in row {
                if c != pc {
                    free_entries[c].push((pc, f.neg(v)));
                }
            }
        }
        (0..self.cols)
            .filter(|&c| self.pivot_row[c].is_none())
            .map(|c| {
                let entries = std::iter::once((c, Fe::ONE)).chain(free_entries[c].iter().copied());
                SparseWord::from_entries(self.cols, entries).expect("in range")
            })
            .collect()
    }

    /// w minus its projection on the pivot coordinates; zero iff w lies in
    /// the row space. Equal residues ⇔ equal cosets.
    pub fn reduce(&self, w: &SparseWord) -> SparseWord {
        let f = &self.field;
        let mut dense = w.to_dense();
        for (c, v) in w.entries() {
            if let Some(k) = self.pivot_row[c] {
                for &(j, a) in &self.rows[k] {
                    dense[j] = f.sub(dense[j], f.mul(v, a));
                }
            }
        }
        SparseWord::from_dense(&dense)
    }

    pub fn contains(&self, w: &SparseWord) -> bool {
        self.reduce(w).is_zero()
    }

    /// A solution x of M x = s with zeros off the pivot columns, or `None`
    /// when s is outside the column space. Requires [`Echelon::with_history`].
    pub fn solve(&self, s: &[Fe]) -> Option<Vec<Fe>> {
        let f = &self.field;
        let history = self.history.as_ref().expect("solve needs row history");
        assert_eq!(s.len(), self.source_rows);
        let dot = |combo: &Row| {
            combo
                .iter()
                .fold(Fe::ZERO, |acc, &(i, a)| f.add(acc, f.mul(a, s[i])))
        };
        if self
            .null_combos
            .as_ref()
            .unwrap()
            .iter()
            .any(|z| !dot(z).is_zero())
        {
            return None;
        }
        let mut x = vec![Fe::ZERO; self.cols];
        for (k, combo) in history.iter().enumerate() {
            x[self.pivots[k]] = dot(combo);
        }
        Some(x)
    }
}

pub fn rank(m: &SparseFqMatrix) -> usize {
    Echelon::new(m).rank()
}

pub fn kernel_basis(m: &SparseFqMatrix) -> Vec<SparseWord> {
    Echelon::new(m).kernel_basis()
}

/// k = n − rank(H_X) − rank(H_Z).
pub fn quantum_dimension(inst: &CodeInstance) -> Result<usize> {
    let (hx, hz) = inst.quantum_matrices()?;
    let k = inst.n() as isize - rank(hx) as isize - rank(hz) as isize;
    if k < 0 {
        return Err(Error::Invalid("negative dimension: H_X H_Z^T != 0".into()));
    }
    Ok(k as usize)
}

/// k = n − rank(H) for classical instances.
pub fn classical_dimension(inst: &CodeInstance) -> Result<usize> {
    let h = inst.classical_matrix()?;
    Ok(inst.n() - rank(h))
}

/// Dimension for either kind.
pub fn dimension(inst: &CodeInstance) -> usize {
    if inst.is_quantum() {
        quantum_dimension(inst).expect("quantum")
    } else {
        classical_dimension(inst).expect("classical")
    }
}

/// Odometer over all F_q-combinations of `basis`, calling `visit` with the
/// current dense word and its weight after every step (zero word excluded).
/// Stops early when `visit` returns false. Returns the number of words seen.
pub fn enumerate_span<F>(field: &Field, len: usize, basis: &[SparseWord], mut visit: F) -> u64
where
    F: FnMut(&[Fe], usize) -> bool,
{
    let q = field.order();
    let mut digits = vec![0u32; basis.len()];
    let mut cur = vec![Fe::ZERO; len];
    let mut weight = 0usize;
    let mut seen = 0u64;
    let apply = |cur: &mut Vec<Fe>, weight: &mut usize, b: &SparseWord, delta: Fe| {
        for (i, v) in b.entries() {
            let old = cur[i];
            let new = field.add(old, field.mul(delta, v));
            if old.is_zero() && !new.is_zero() {
                *weight += 1;
            } else if !old.is_zero() && new.is_zero() {
                *weight -= 1;
            }
            cur[i] = new;
        }
    };
    'outer: loop {
        let mut i = 0;
        loop {
            if i == basis.len() {
                break 'outer;
            }
            let old = Fe(digits[i] as u16);
            if digits[i] + 1 < q {
                digits[i] += 1;
                let delta = field.sub(Fe(digits[i] as u16), old);
                apply(&mut cur, &mut weight, &basis[i], delta);
                break;
            }
            digits[i] = 0;
            apply(&mut cur, &mut weight, &basis[i], field.neg(old));
            i += 1;
        }
        seen += 1;
        if !visit(&cur, weight) {
            break;
        }
    }
    seen
}

fn pow_saturating(q: u32, k: usize) -> u64 {
    (q as u64).checked_pow(k as u32).unwrap_or(u64::MAX)
}

/// Result of minimizing |c + b| over b in a row space.
#[derive(Clone, Debug, Serialize)]
pub struct CosetMin {
    pub weight: usize,
    #[serde(skip)]
    pub witness: SparseWord,
    pub exact: bool,
    pub visited: u64,
}

/// min over b ∈ rowspace(generators) of |c + b|. Exact when q^rank fits in
/// `budget`; otherwise a greedy descent over generator rows (upper bound).
pub fn coset_min_weight(
    generators: &SparseFqMatrix,
    c: &SparseWord,
    budget: u64,
) -> Result<CosetMin> {
    CosetMinimizer::new(generators).min_weight(c, budget)
}

/// Reusable form of [`coset_min_weight`] that reduces the generators once.
#[derive(Clone, Debug)]
pub struct CosetMinimizer<'a> {
    generators: &'a SparseFqMatrix,
    echelon: Echelon,
    basis: Vec<SparseWord>,
}

impl<'a> CosetMinimizer<'a> {
    pub fn new(generators: &'a SparseFqMatrix) -> Self {
        let echelon = Echelon::new(generators);
        let basis = echelon.basis();
        CosetMinimizer {
            generators,
            echelon,
            basis,
        }
    }

    /// True iff c lies in the row space of the generators.
    pub fn is_trivial(&self, c: &SparseWord) -> bool {
        self.echelon.contains(c)
    }

    pub fn min_weight(&self, c: &SparseWord, budget: u64) -> Result<CosetMin> {
        let generators = self.generators;
        if c.len() != generators.cols() {
            return Err(Error::Shape(format!(
                "word length {} vs {} generator columns",
                c.len(),
                generators.cols()
            )));
        }
        let field = generators.field();
        let cost = pow_saturating(field.order(), self.echelon.rank());
        if cost <= budget {
            let dense = c.to_dense();
            let start_weight = c.weight();
            let mut best = start_weight;
            let mut best_word = dense.clone();
            let visited = enumerate_span(field, c.len(), &self.basis, |b, _| {
                let w = dense
                    .iter()
                    .zip(b)
                    .filter(|(x, y)| !field.add(**x, **y).is_zero())
                    .count();
                if w < best {
                    best = w;
                    best_word = dense
                        .iter()
                        .zip(b)
                        .map(|(x, y)| field.add(*x, *y))
                        .collect();
                }
                best > 0
            });
            return Ok(CosetMin {
                weight: best,
                witness: SparseWord::from_dense(&best_word),
                exact: true,
                visited: visited + 1,
            });
        }
        // greedy descent: add the multiple of a generator row that lowers weight most
        let mut cur = c.to_dense();
        let mut weight = c.weight();
        let mut visited = 0u64;
        loop {
            let mut best: Option<(isize, usize, Fe)> = None;
            for r in 0..generators.rows() {
                let row = generators.row(r);
                if row.is_empty() {
                    continue;
                }
                for a in field.nonzero_elements() {
                    visited += 1;
                    let mut delta = 0isize;
                    for &(j, v) in row {
                        let old = cur[j];
                        let new = field.add(old, field.mul(a, v));
                        delta += new.is_zero() as isize * -(!old.is_zero() as isize)
                            + (!new.is_zero() && old.is_zero()) as isize;
                    }
                    if delta < 0 && best.is_none_or(|b| delta < b.0) {
                        best = Some((delta, r, a));
                    }
                }
            }
            match best {
                Some((delta, r, a)) => {
                    for &(j, v) in generators.row(r) {
                        cur[j] = field.add(cur[j], field.mul(a, v));
                    }
                    weight = (weight as isize + delta) as usize;
                }
                None => break,
            }
            if visited > budget.saturating_mul(16).max(1 << 20) {
                break;
            }
        }
        Ok(CosetMin {
            weight,
            witness: SparseWord::from_dense(&cur),
            exact: false,
            visited,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    Exact,
    /// Randomized information-set sampling; an upper bound.
    Estimate {
        trials: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorDistance {
    pub sector: Sector,
    /// `None` when the sector has no nontrivial logical (k = 0).
    pub distance: Option<usize>,
    #[serde(skip)]
    pub witness: Option<SparseWord>,
    pub exact: bool,
    pub visited: u64,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    /// min over sectors; `None` when k = 0.
    pub distance: Option<usize>,
    pub exact: bool,
    pub sectors: Vec<SectorDistance>,
}

/// Check matrix and stabilizer echelon for a sector.
fn sector_parts(inst: &CodeInstance, sector: Sector) -> Result<(&SparseFqMatrix, Option<Echelon>)> {
    let check = inst.sector_matrix(sector)?;
    let stab = inst.stabilizer_matrix(sector)?.map(Echelon::new);
    Ok((check, stab))
}

/// Minimum weight of a nontrivial element of the sector: C − {0}
/// (classical) or C_x − C_z^⊥ / C_z − C_x^⊥ (quantum sectors).
pub fn sector_distance(
    inst: &CodeInstance,
    sector: Sector,
    mode: DistanceMode,
    budget: u64,
) -> Result<SectorDistance> {
    let (check, stab) = sector_parts(inst, sector)?;
    let field = inst.field();
    let n = inst.n();
    let nontrivial =
        |w: &SparseWord| -> bool { !w.is_zero() && stab.as_ref().is_none_or(|s| !s.contains(w)) };
    match mode {
        DistanceMode::Exact => {
            let ech = Echelon::new(check);
            let kernel = ech.kernel_basis();
            let logical_dim = kernel.len() - stab.as_ref().map_or(0, |s| s.rank());
            if logical_dim == 0 {
                return Ok(SectorDistance {
                    sector,
                    distance: None,
                    witness: None,
                    exact: true,
                    visited: 0,
                    trials: None,
                    seed: None,
                });
            }
            let span_cost = pow_saturating(field.order(), kernel.len());
            if span_cost <= budget {
                let mut best: Option<(usize, Vec<Fe>)> = None;
                let visited = enumerate_span(field, n, &kernel, |w, weight| {
                    if best.as_ref().is_none_or(|b| weight < b.0) {
                        let word = SparseWord::from_dense(w);
                        if nontrivial(&word) {
                            best = Some((weight, w.to_vec()));
                        }
                    }
                    true
                });
                let (d, w) = best.expect("logical dimension positive");
                return Ok(SectorDistance {
                    sector,
                    distance: Some(d),
                    witness: Some(SparseWord::from_dense(&w)),
                    exact: true,
                    visited,
                    trials: None,
                    seed: None,
                });
            }
            // weight-sorted search
            let mut visited = 0u64;
            for w in 1..=n {
                let mut found: Option<SparseWord> = None;
                let mut exceeded = false;
                for_each_word_of_weight(field, n, w, |word| {
                    visited += 1;
                    if visited > budget {
                        exceeded = true;
                        return false;
                    }
                    if check.mul_word(word).map(|s| s.is_zero()).unwrap_or(false)
                        && nontrivial(word)
                    {
                        found = Some(word.clone());
                        return false;
                    }
                    true
                });
                if exceeded {
                    return Err(Error::Budget(format!(
                        "exact distance needs more than {budget} visited words (kernel dimension {})",
                        kernel.len()
                    )));
                }
                if let Some(word) = found {
                    return Ok(SectorDistance {
                        sector,
                        distance: Some(w),
                        witness: Some(word),
                        exact: true,
                        visited,
                        trials: None,
                        seed: None,
                    });
                }
            }
            unreachable!("logical dimension positive implies a nontrivial kernel word")
        }
        DistanceMode::Estimate { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<SparseWord> = None;
            let mut visited = 0u64;
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..trials.max(1) {
                perm.shuffle(&mut rng);
                let mut inv = vec![0; n];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                let permuted = check.permute(&(0..check.rows()).collect::<Vec<_>>(), &perm)?;
                let ech = Echelon::build(&permuted, PivotRule::Leftmost, false);
                for b in ech.kernel_basis() {
                    visited += 1;
                    let word = SparseWord::from_entries(n, b.entries().map(|(i, v)| (inv[i], v)))?;
                    if best.as_ref().is_none_or(|x| word.weight() < x.weight()) && nontrivial(&word)
                    {
                        best = Some(word);
                    }
                }
            }
            Ok(SectorDistance {
                sector,
                distance: best.as_ref().map(|w| w.weight()),
                witness: best,
                exact: false,
                visited,
                trials: Some(trials),
                seed: Some(seed),
            })
        }
    }
}

/// Distance of the instance: classical d, or min(d_x, d_z) for quantum.
pub fn distance(inst: &CodeInstance, mode: DistanceMode, budget: u64) -> Result<DistanceReport> {
    let sectors = if inst.is_quantum() {
        vec![
            sector_distance(inst, Sector::X, mode, budget)?,
            sector_distance(inst, Sector::Z, mode, budget)?,
        ]
    } else {
        vec![sector_distance(inst, Sector::Classical, mode, budget)?]
    };
    let distance = sectors.iter().filter_map(|s| s.distance).min();
    Ok(DistanceReport {
        distance,
        exact: sectors.iter().all(|s| s.exact),
        sectors,
    })
}

/// Calls `visit` on every word of exactly weight `w` (all supports, all
/// nonzero values), in lexicographic support order.
pub fn for_each_word_of_weight<F>(field: &Field, n: usize, w: usize, mut visit: F)
where
    F: FnMut(&SparseWord) -> bool,
{
    if w > n {
        return;
    }
    let q = field.order();
    let mut support: Vec<usize> = (0..w).collect();
    loop {
        let mut vals = vec![1u32; w];
        loop {
            let word = SparseWord::from_entries(
                n,
                support.iter().zip(&vals).map(|(&i, &v)| (i, Fe(v as u16))),
            )
            .expect("in range");
            if !visit(&word) {
                return;
            }
            let mut k = 0;
            while k < w && vals[k] + 1 == q {
                vals[k] = 1;
                k += 1;
            }
            if k == w {
                break;
            }
            vals[k] += 1;
        }
        // next combination
        let mut i = w;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if support[i] < n - w + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if support[i] >= n - w + i {
            return;
        }
        support[i] += 1;
        for j in i + 1..w {
            support[j] = support[j - 1] + 1;
        }
        if w == 0 {
            return;
        }
    }
}

/// True iff a zero-syndrome word lies in the stabilizer image of its sector
/// (always true only for c = 0 in the classical case).
pub fn is_trivial_logical(inst: &CodeInstance, sector: Sector, c: &SparseWord) -> Result<bool> {
    let (check, stab) = sector_parts(inst, sector)?;
    if !check.mul_word(c)?.is_zero() {
        return Err(Error::Invalid("word has a nonzero syndrome".into()));
    }
    Ok(match stab {
        Some(s) => s.contains(c),
        None => c.is_zero(),
    })
}
