//! Walks, energy barriers, fractal words, irreducible-word counts, and
//! isoperimetric expansion checks.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codes::{CodeInstance, Sector};
use crate::error::{Error, Result};
use crate::fq::{Fe, Field};
use crate::linalg::{sector_distance, CosetMinimizer, DistanceMode, Echelon};
use crate::poly::{LaurentPoly, Monomial};
use crate::sparse::{SparseFqMatrix, SparseWord};

/// A sequence of single-coordinate changes starting from `start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub start: SparseWord,
    /// (coordinate, new value) per step.
    pub steps: Vec<(usize, Fe)>,
}

impl Walk {
    pub fn from_zero(n: usize, steps: Vec<(usize, Fe)>) -> Self {
        Walk {
            start: SparseWord::zero(n),
            steps,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn n(&self) -> usize {
        self.start.len()
    }

    /// Final word.
    pub fn end(&self) -> SparseWord {
        let mut w = self.start.clone();
        for &(i, v) in &self.steps {
            w.set(i, v);
        }
        w
    }

    /// Text form: `n <len>` header, optional `start i v` lines, then `i v`
    /// per step.
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for (i, v) in self.start.entries() {
            out.push_str(&format!("start {i} {}\n", v.rep()));
        }
        for &(i, v) in &self.steps {
            out.push_str(&format!("{i} {}\n", v.rep()));
        }
        out
    }

    pub fn from_text(text: &str, field: &Field) -> Result<Walk> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty walk file".into()))?;
        let n: usize = header
            .strip_prefix("n ")
            .and_then(|x| x.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad walk header '{header}'")))?;
        let mut start = SparseWord::zero(n);
        let mut steps = Vec::new();
        let parse_pair = |a: &str, b: &str| -> Result<(usize, Fe)> {
            let i: usize = a
                .parse()
                .map_err(|_| Error::Parse(format!("bad index '{a}'")))?;
            let v: u32 = b
                .parse()
                .map_err(|_| Error::Parse(format!("bad value '{b}'")))?;
            if i >= n {
                return Err(Error::Shape(format!("coordinate {i} out of range {n}")));
            }
            Ok((i, field.element(v)?))
        };
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["start", a, b] => {
                    let (i, v) = parse_pair(a, b)?;
                    start.set(i, v);
                }
                [a, b] => steps.push(parse_pair(a, b)?),
                _ => return Err(Error::Parse(format!("bad walk line '{line}'"))),
            }
        }
        Ok(Walk { start, steps })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnergyProfile {
    /// ε(c_0), …, ε(c_t).
    pub profile: Vec<usize>,
    pub max: usize,
}

/// Incrementally maintained syndrome of a word under `H`.
#[derive(Clone, Debug)]
pub(crate) struct Syndrome<'a> {
    h: &'a SparseFqMatrix,
    word: Vec<Fe>,
    syn: Vec<Fe>,
    energy: usize,
}

impl<'a> Syndrome<'a> {
    pub(crate) fn new(h: &'a SparseFqMatrix, word: Vec<Fe>) -> Self {
        let syn = h.mul_dense(&word);
        let energy = syn.iter().filter(|v| !v.is_zero()).count();
        Syndrome {
            h,
            word,
            syn,
            energy,
        }
    }

    /// Energy after setting coordinate i to v, without applying it.
    pub(crate) fn energy_if(&self, i: usize, v: Fe) -> usize {
        let f = self.h.field();
        let delta = f.sub(v, self.word[i]);
        let mut e = self.energy as isize;
        for &(r, a) in self.h.col(i) {
            let old = self.syn[r];
            let new = f.add(old, f.mul(delta, a));
            e += (!new.is_zero()) as isize - (!old.is_zero()) as isize;
        }
        e as usize
    }

    pub(crate) fn set(&mut self, i: usize, v: Fe) {
        let f = self.h.field();
        let delta = f.sub(v, self.word[i]);
        if delta.is_zero() {
            return;
        }
        for &(r, a) in self.h.col(i) {
            let old = self.syn[r];
            let new = f.add(old, f.mul(delta, a));
            self.energy = self.energy + (!new.is_zero()) as usize - (!old.is_zero()) as usize;
            self.syn[r] = new;
        }
        self.word[i] = v;
    }

    pub(crate) fn energy(&self) -> usize {
        self.energy
    }

    pub(crate) fn word(&self) -> &[Fe] {
        &self.word
    }
}

/// Energy ε(c_i) = |H c_i| along a walk.
pub fn walk_energy(h: &SparseFqMatrix, walk: &Walk) -> Result<EnergyProfile> {
    if walk.n() != h.cols() {
        return Err(Error::Shape(format!(
            "walk over {} coordinates, H has {}",
            walk.n(),
            h.cols()
        )));
    }
    let mut s = Syndrome::new(h, walk.start.to_dense());
    let mut profile = vec![s.energy()];
    for &(i, v) in &walk.steps {
        if i >= h.cols() {
            return Err(Error::Shape(format!(
                "coordinate {i} out of range {}",
                h.cols()
            )));
        }
        s.set(i, v);
        profile.push(s.energy());
    }
    let max = *profile.iter().max().unwrap();
    Ok(EnergyProfile { profile, max })
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierResult {
    pub value: usize,
    #[serde(skip)]
    pub witness: Walk,
    pub exact: bool,
    /// States settled (exact) or walks evaluated (heuristic).
    pub visited: u64,
    pub budget: u64,
}

/// Decides whether a zero-syndrome word is a nontrivial target.
struct TargetTest {
    stab: Option<Echelon>,
}

impl TargetTest {
    fn new(inst: &CodeInstance, sector: Sector) -> Result<Self> {
        Ok(TargetTest {
            stab: inst.stabilizer_matrix(sector)?.map(Echelon::new),
        })
    }

    fn nontrivial(&self, w: &SparseWord) -> bool {
        !w.is_zero() && self.stab.as_ref().is_none_or(|s| !s.contains(w))
    }
}

struct Packing {
    bits: u32,
    q: u32,
}

impl Packing {
    fn new(n: usize, q: u32) -> Result<Self> {
        let bits = 32 - (q - 1).leading_zeros();
        if n as u64 * bits as u64 > 64 {
            return Err(Error::Budget(format!(
                "exact barrier search packs states into 64 bits; n={n} over F_{q} does not fit, use the heuristic"
            )));
        }
        Ok(Packing { bits, q })
    }

    fn get(&self, s: u64, i: usize) -> Fe {
        Fe(((s >> (i as u32 * self.bits)) & ((1u64 << self.bits) - 1)) as u16)
    }

    fn set(&self, s: u64, i: usize, v: Fe) -> u64 {
        let shift = i as u32 * self.bits;
        let mask = ((1u64 << self.bits) - 1) << shift;
        (s & !mask) | ((v.0 as u64) << shift)
    }

    fn unpack(&self, s: u64, n: usize) -> Vec<Fe> {
        (0..n).map(|i| self.get(s, i)).collect()
    }
}

/// Exact energy barrier by bottleneck (minimax) Dijkstra over the
/// single-coordinate move graph, starting from 0. `budget` caps settled
/// states.
pub fn barrier_exact(inst: &CodeInstance, sector: Sector, budget: u64) -> Result<BarrierResult> {
    let h = inst.sector_matrix(sector)?;
    let n = inst.n();
    let field = inst.field().clone();
    let pack = Packing::new(n, field.order())?;
    let target = TargetTest::new(inst, sector)?;

    // key: (bottleneck, weight)
    let mut best: HashMap<u64, (usize, usize)> = HashMap::new();
    let mut parent: HashMap<u64, (u64, usize, Fe)> = HashMap::new();
    let mut settled: HashSet<u64> = HashSet::new();
    let mut heap = BinaryHeap::new();
    best.insert(0, (0, 0));
    heap.push(Reverse((0usize, 0usize, 0u64)));
    let mut visited = 0u64;

    while let Some(Reverse((cost, weight, state))) = heap.pop() {
        if best.get(&state) != Some(&(cost, weight)) || !settled.insert(state) {
            continue;
        }
        visited += 1;
        if visited > budget {
            return Err(Error::Budget(format!(
                "exact barrier settled more than {budget} states; use the heuristic mode"
            )));
        }
        let word = pack.unpack(state, n);
        let syn = Syndrome::new(h, word);
        if syn.energy() == 0 && state != 0 {
            let w = SparseWord::from_dense(syn.word());
            if target.nontrivial(&w) {
                let mut steps = Vec::new();
                let mut cur = state;
                while let Some(&(prev, i, v)) = parent.get(&cur) {
                    steps.push((i, v));
                    cur = prev;
                }
                steps.reverse();
                return Ok(BarrierResult {
                    value: cost,
                    witness: Walk::from_zero(n, steps),
                    exact: true,
                    visited,
                    budget,
                });
            }
        }
        for i in 0..n {
            let old = syn.word()[i];
            for r in 0..pack.q {
                let v = Fe(r as u16);
                if v == old {
                    continue;
                }
                let next = pack.set(state, i, v);
                if settled.contains(&next) {
                    continue;
                }
                let e = syn.energy_if(i, v);
                let nw = weight + (!v.is_zero()) as usize - (!old.is_zero()) as usize;
                let key = (cost.max(e), nw);
                if best.get(&next).is_none_or(|&k| key < k) {
                    best.insert(next, key);
                    parent.insert(next, (state, i, v));
                    heap.push(Reverse((key.0, key.1, next)));
                }
            }
        }
    }
    Err(Error::Degenerate(
        "no nontrivial codeword or logical exists".into(),
    ))
}

#[derive(Clone, Debug)]
pub struct HeuristicParams {
    pub beam: usize,
    /// Consider only the next `window` unflipped target coordinates (in
    /// coordinate order) at each step; `None` means all of them.
    pub window: Option<usize>,
    /// Target words; when empty together with `seeds`, targets come from a
    /// distance search.
    pub targets: Vec<SparseWord>,
    /// Known walks to nontrivial targets, evaluated as-is.
    pub seeds: Vec<Walk>,
    pub seed: u64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            beam: 32,
            window: None,
            targets: Vec::new(),
            seeds: Vec::new(),
            seed: 0,
        }
    }
}

/// Upper bound on the energy barrier from seed walks and a monotone beam
/// search towards each target (every target coordinate is set once to its
/// final value).
pub fn barrier_heuristic(
    inst: &CodeInstance,
    sector: Sector,
    params: &HeuristicParams,
) -> Result<BarrierResult> {
    let h = inst.sector_matrix(sector)?;
    let test = TargetTest::new(inst, sector)?;
    let mut best: Option<(usize, Walk)> = None;
    let mut visited = 0u64;
    let consider = |e: usize, w: Walk, best: &mut Option<(usize, Walk)>| {
        if best.as_ref().is_none_or(|b| e < b.0) {
            *best = Some((e, w));
        }
    };
    for walk in &params.seeds {
        let end = walk.end();
        if !h.mul_word(&end)?.is_zero() || !test.nontrivial(&end) {
            return Err(Error::Invalid(
                "seed walk does not end at a nontrivial codeword".into(),
            ));
        }
        let prof = walk_energy(h, walk)?;
        visited += 1;
        consider(prof.max, walk.clone(), &mut best);
    }
    let mut targets = params.targets.clone();
    if targets.is_empty() && params.seeds.is_empty() {
        let mode = DistanceMode::Estimate {
            trials: 64,
            seed: params.seed,
        };
        if let Some(w) = sector_distance(inst, sector, mode, 0)?.witness {
            targets.push(w);
        }
    }
    for t in &targets {
        if !h.mul_word(t)?.is_zero() || !test.nontrivial(t) {
            return Err(Error::Invalid(
                "beam target is not a nontrivial codeword".into(),
            ));
        }
        for walk in sweep_walks(inst, t) {
            visited += 1;
            consider(walk_energy(h, &walk)?.max, walk, &mut best);
        }
        let (e, walk, v) = beam_walk(h, t, params.beam.max(1), params.window);
        visited += v;
        consider(e, walk, &mut best);
    }
    let (value, witness) =
        best.ok_or_else(|| Error::Degenerate("no targets for the heuristic barrier".into()))?;
    Ok(BarrierResult {
        value,
        witness,
        exact: false,
        visited,
        budget: params.beam as u64,
    })
}

/// Monotone walks that fill the target site by site in lexicographic order,
/// one per ordering of the lattice axes.
fn sweep_walks(inst: &CodeInstance, target: &SparseWord) -> Vec<Walk> {
    let n = inst.n();
    let entries: Vec<(usize, Fe)> = target.entries().collect();
    let Some(lat) = inst.lattice() else {
        return vec![Walk::from_zero(n, entries)];
    };
    let dim = lat.dim();
    let mut perms: Vec<Vec<usize>> = vec![(0..dim).collect()];
    // all axis orders for small D
    if dim <= 4 {
        perms.clear();
        let mut p: Vec<usize> = (0..dim).collect();
        permutations(&mut p, 0, &mut perms);
    }
    perms
        .into_iter()
        .map(|perm| {
            let mut e = entries.clone();
            e.sort_by_key(|&(i, _)| {
                let (site, k) = lat.coord_of(i);
                let key: Vec<i64> = perm.iter().rev().map(|&a| site[a]).collect();
                (key, k)
            });
            Walk::from_zero(n, e)
        })
        .collect()
}

fn permutations(p: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
}

fn beam_walk(
    h: &SparseFqMatrix,
    target: &SparseWord,
    beam: usize,
    window: Option<usize>,
) -> (usize, Walk, u64) {
    let n = h.cols();
    let support: Vec<(usize, Fe)> = target.entries().collect();
    #[derive(Clone)]
    struct Node<'a> {
        syn: Syndrome<'a>,
        done: Vec<bool>,
        order: Vec<usize>,
        max: usize,
    }
    let mut layer = vec![Node {
        syn: Syndrome::new(h, vec![Fe::ZERO; n]),
        done: vec![false; support.len()],
        order: Vec::new(),
        max: 0,
    }];
    let mut visited = 0u64;
    for _ in 0..support.len() {
        let mut cands: Vec<(usize, usize, usize, usize)> = Vec::new(); // (max, energy, node, k)
        for (ni, node) in layer.iter().enumerate() {
            let open = (0..support.len()).filter(|&k| !node.done[k]);
            let open: Vec<usize> = match window {
                Some(w) => open.take(w).collect(),
                None => open.collect(),
            };
            for k in open {
                let (i, v) = support[k];
                let e = node.syn.energy_if(i, v);
                visited += 1;
                cands.push((node.max.max(e), e, ni, k));
            }
        }
        cands.sort();
        let mut seen: HashSet<Vec<bool>> = HashSet::new();
        let mut next = Vec::with_capacity(beam);
        for &(m, _, ni, k) in &cands {
            let mut done = layer[ni].done.clone();
            done[k] = true;
            if !seen.insert(done.clone()) {
                continue;
            }
            let mut node = layer[ni].clone();
            node.syn.set(support[k].0, support[k].1);
            node.done = done;
            node.order.push(k);
            node.max = m;
            next.push(node);
            if next.len() == beam {
                break;
            }
        }
        layer = next;
    }
    let node = &layer[0];
    let steps = node.order.iter().map(|&k| support[k]).collect();
    (node.max, Walk::from_zero(n, steps), visited)
}

/// `c_ℓ = f^(p^ℓ - 1)` for a two-dimensional `f = α + βx + γy + δxy`.
#[derive(Clone, Debug)]
pub struct FractalWord {
    pub f: LaurentPoly,
    pub level: u32,
    /// `b = f^(p-1)`, the self-similarity block.
    pub block: LaurentPoly,
    /// |f^(p-1)|.
    pub a0: usize,
    pub word: LaurentPoly,
    /// `f · c_ℓ = f^(p^ℓ)`.
    pub syndrome: LaurentPoly,
}

impl FractalWord {
    /// Side of the window containing the support, `p^ℓ`.
    pub fn side(&self) -> i64 {
        (self.f.field().p() as i64).pow(self.level)
    }

    /// Walk energy bound: `4ℓA_0` for ℓ ≥ 1, and `|f|` for the single flip at ℓ = 0.
    pub fn energy_bound(&self) -> usize {
        if self.level == 0 {
            self.f.weight()
        } else {
            4 * self.level as usize * self.a0
        }
    }
}

fn check_fractal_generator(f: &LaurentPoly) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::Invalid(format!(
            "fractal generator must be two-dimensional, got D={}",
            f.dim()
        )));
    }
    for (m, _) in f.terms() {
        if m.0.iter().any(|&e| !(0..=1).contains(&e)) {
            return Err(Error::Invalid(format!(
                "term with exponent {:?} outside {{0,1}}²",
                m.0
            )));
        }
    }
    if f.weight() < 2 {
        return Err(Error::Degenerate(format!(
            "generator '{f}' needs at least two nonzero coefficients"
        )));
    }
    Ok(())
}

pub fn fractal_word(f: &LaurentPoly, level: u32) -> Result<FractalWord> {
    check_fractal_generator(f)?;
    let p = f.field().p() as u64;
    let side = p
        .checked_pow(level)
        .filter(|&s| s <= 1 << 20)
        .ok_or_else(|| Error::Invalid(format!("level {level} too large")))?;
    let block = f.pow(p - 1);
    let a0 = block.weight();
    let word = f.pow(side - 1);
    let syndrome = f.mul(&word)?;
    if word.weight() != a0.pow(level) {
        return Err(Error::Invalid(format!(
            "|c_ℓ| = {} differs from A_0^ℓ = {}",
            word.weight(),
            a0.pow(level)
        )));
    }
    if syndrome.weight() > 4 {
        return Err(Error::Invalid(format!(
            "syndrome weight {} exceeds 4",
            syndrome.weight()
        )));
    }
    if let Some((lo, hi)) = word.exponent_box() {
        if lo.iter().any(|&x| x < 0) || hi.iter().any(|&x| x >= side as i64) {
            return Err(Error::Invalid("fractal word leaves its window".into()));
        }
    }
    Ok(FractalWord {
        f: f.clone(),
        level,
        block,
        a0,
        word,
        syndrome,
    })
}

/// A walk given by lattice sites (single coordinate per site).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteWalk {
    pub steps: Vec<(Vec<i64>, Fe)>,
}

impl SiteWalk {
    /// Map onto coordinate `i` of a torus instance.
    pub fn on(&self, inst: &CodeInstance, i: usize) -> Result<Walk> {
        let lat = inst
            .lattice()
            .ok_or_else(|| Error::Invalid("instance has no lattice".into()))?;
        if i >= lat.per_site() {
            return Err(Error::Shape(format!("coordinate type {i} out of range")));
        }
        let steps = self
            .steps
            .iter()
            .map(|(s, v)| (lat.coord_index(s, i), *v))
            .collect();
        Ok(Walk::from_zero(inst.n(), steps))
    }

    /// Energy profile in the infinite plane for the classical code h = (f).
    pub fn plane_energy(&self, f: &LaurentPoly) -> EnergyProfile {
        let field = f.field();
        let mut word: HashMap<Vec<i64>, Fe> = HashMap::new();
        let mut syn: HashMap<Vec<i64>, Fe> = HashMap::new();
        let mut energy = 0usize;
        let mut profile = vec![0];
        for (s, v) in &self.steps {
            let old = word.get(s).copied().unwrap_or(Fe::ZERO);
            let delta = field.sub(*v, old);
            word.insert(s.clone(), *v);
            for (m, a) in f.terms() {
                let t: Vec<i64> = s.iter().zip(&m.0).map(|(x, y)| x + y).collect();
                let e = syn.entry(t).or_insert(Fe::ZERO);
                let new = field.add(*e, field.mul(delta, a));
                energy = energy + (!new.is_zero()) as usize - (!e.is_zero()) as usize;
                *e = new;
            }
            profile.push(energy);
        }
        let max = *profile.iter().max().unwrap();
        EnergyProfile { profile, max }
    }
}

/// Depth-first build of `c_ℓ` following `c_{k+1} = b^{p^k} c_k`: the copies
/// of `c_ℓ−1` are laid down one after another, each one recursively.
pub fn fractal_walk(f: &LaurentPoly, level: u32) -> Result<SiteWalk> {
    let fw = fractal_word(f, level)?;
    let p = f.field().p() as i64;
    let field = f.field().clone();
    let block: Vec<(Monomial, Fe)> = fw.block.terms().map(|(m, c)| (m.clone(), c)).collect();
    let mut steps = Vec::with_capacity(fw.word.weight());
    fn rec(
        k: u32,
        origin: &[i64],
        scale: Fe,
        block: &[(Monomial, Fe)],
        p: i64,
        field: &Field,
        out: &mut Vec<(Vec<i64>, Fe)>,
    ) {
        if k == 0 {
            out.push((origin.to_vec(), scale));
            return;
        }
        let stride = p.pow(k - 1);
        for (m, c) in block {
            let o: Vec<i64> = origin
                .iter()
                .zip(&m.0)
                .map(|(a, e)| a + e * stride)
                .collect();
            let coeff = field.frobenius(*c, k - 1);
            rec(k - 1, &o, field.mul(scale, coeff), block, p, field, out);
        }
    }
    rec(level, &[0, 0], Fe::ONE, &block, p, &field, &mut steps);
    Ok(SiteWalk { steps })
}

/// Connected vertex subsets (in the graph `adj`) of size ≤ `max_size`, each
/// visited once, restricted to `allowed` vertices and to subsets whose
/// smallest vertex is in `roots`. `visit` returns false to stop.
pub(crate) fn for_each_connected_subset<F>(
    adj: &[Vec<usize>],
    allowed: &[bool],
    roots: &[usize],
    max_size: usize,
    mut visit: F,
) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    let nv = adj.len();
    let mut near = vec![0u32; nv]; // in the subset or adjacent to it
    let mut sub = Vec::with_capacity(max_size);

    #[allow(clippy::too_many_arguments)]
    fn extend<F: FnMut(&[usize]) -> bool>(
        adj: &[Vec<usize>],
        allowed: &[bool],
        root: usize,
        max_size: usize,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        near: &mut [u32],
        visit: &mut F,
    ) -> bool {
        if sub.len() == max_size {
            return true;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &adj[w] {
                if u > root && allowed[u] && near[u] == 0 {
                    next.push(u);
                }
            }
            sub.push(w);
            near[w] += 1;
            for &u in &adj[w] {
                near[u] += 1;
            }
            let go = visit(sub) && extend(adj, allowed, root, max_size, sub, next, near, visit);
            for &u in &adj[w] {
                near[u] -= 1;
            }
            near[w] -= 1;
            sub.pop();
            if !go {
                return false;
            }
        }
        true
    }

    for &v in roots {
        if !allowed[v] || max_size == 0 {
            continue;
        }
        sub.push(v);
        near[v] += 1;
        for &u in &adj[v] {
            near[u] += 1;
        }
        let ext: Vec<usize> = adj[v]
            .iter()
            .copied()
            .filter(|&u| u > v && allowed[u])
            .collect();
        let go = visit(&sub)
            && extend(
                adj, allowed, v, max_size, &mut sub, ext, &mut near, &mut visit,
            );
        for &u in &adj[v] {
            near[u] -= 1;
        }
        near[v] -= 1;
        sub.pop();
        if !go {
            return false;
        }
    }
    true
}

/// Coordinates sharing a check, deduplicated.
pub(crate) fn coordinate_graph(h: &SparseFqMatrix) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); h.cols()];
    for r in 0..h.rows() {
        let row = h.row(r);
        for &(a, _) in row {
            for &(b, _) in row {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Calls `f` with every assignment of nonzero values to `support`.
fn for_each_assignment<F: FnMut(&[(usize, Fe)]) -> bool>(
    field: &Field,
    support: &[usize],
    mut f: F,
) -> bool {
    let q = field.order();
    let mut vals: Vec<(usize, Fe)> = support.iter().map(|&i| (i, Fe::ONE)).collect();
    loop {
        if !f(&vals) {
            return false;
        }
        let mut k = 0;
        while k < vals.len() && vals[k].1 .0 as u32 + 1 == q {
            vals[k].1 = Fe::ONE;
            k += 1;
        }
        if k == vals.len() {
            return true;
        }
        vals[k].1 = Fe(vals[k].1 .0 + 1);
    }
}

/// Syndrome weight of a word given as sparse entries, using a scratch array
/// that is left zeroed.
fn sparse_energy(
    h: &SparseFqMatrix,
    entries: &[(usize, Fe)],
    scratch: &mut [Fe],
    touched: &mut Vec<usize>,
) -> usize {
    let f = h.field();
    touched.clear();
    for &(i, v) in entries {
        for &(r, a) in h.col(i) {
            if scratch[r].is_zero() {
                touched.push(r);
            }
            scratch[r] = f.add(scratch[r], f.mul(v, a));
        }
    }
    let mut e = 0;
    for &r in touched.iter() {
        e += (!scratch[r].is_zero()) as usize;
        scratch[r] = Fe::ZERO;
    }
    e
}

#[derive(Clone, Debug)]
pub struct IrreducibleParams {
    /// Keep words with |Hc| ≤ energy_cap.
    pub energy_cap: usize,
    /// Only words supported on sites with every component < box_side.
    pub box_side: Option<usize>,
    /// Largest support size enumerated (default: every allowed coordinate).
    pub max_weight: Option<usize>,
    /// Cap on enumerated supports.
    pub budget: u64,
    pub keep_words: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibleReport {
    /// `exact[w]`: irreducible words with energy exactly w.
    pub exact: Vec<usize>,
    /// `cumulative[w]`: irreducible words with energy ≤ w.
    pub cumulative: Vec<usize>,
    /// Connected-support words whose 2-partitions split the syndrome.
    pub reducible_connected: usize,
    /// Words too large for the partition test (support > 20), not counted.
    pub undecided: usize,
    pub supports_enumerated: u64,
    #[serde(skip)]
    pub words: Vec<SparseWord>,
}

const PARTITION_LIMIT: usize = 20;

/// True iff no split of the support into two nonempty parts gives disjoint
/// syndrome supports. Assumes the support is connected in the
/// shared-check graph.
fn is_irreducible(h: &SparseFqMatrix, entries: &[(usize, Fe)]) -> bool {
    let f = h.field();
    let s = entries.len();
    if s <= 1 {
        return true;
    }
    // checks touched by the word, local indexing
    let mut rows: Vec<usize> = entries
        .iter()
        .flat_map(|&(i, _)| h.col(i).iter().map(|e| e.0))
        .collect();
    rows.sort_unstable();
    rows.dedup();
    let local = |r: usize| rows.binary_search(&r).unwrap();
    let mut total = vec![Fe::ZERO; rows.len()];
    let contrib: Vec<Vec<(usize, Fe)>> = entries
        .iter()
        .map(|&(i, v)| {
            h.col(i)
                .iter()
                .map(|&(r, a)| (local(r), f.mul(v, a)))
                .collect()
        })
        .collect();
    for c in &contrib {
        for &(r, a) in c {
            total[r] = f.add(total[r], a);
        }
    }
    let mut part = vec![Fe::ZERO; rows.len()];
    // element 0 always in the first part
    for mask in 0u64..(1u64 << (s - 1)) - 1 {
        let m = (mask << 1) | 1;
        part.iter_mut().for_each(|x| *x = Fe::ZERO);
        for (k, c) in contrib.iter().enumerate() {
            if m >> k & 1 == 1 {
                for &(r, a) in c {
                    part[r] = f.add(part[r], a);
                }
            }
        }
        let disjoint =
            (0..rows.len()).all(|r| part[r].is_zero() || f.sub(total[r], part[r]).is_zero());
        if disjoint {
            return false;
        }
    }
    true
}

/// Counts irreducible words of bounded energy. Irreducible words have a
/// connected support in the shared-check graph, so only connected supports
/// are enumerated; reducibility is tested over support 2-partitions.
pub fn enumerate_irreducible(
    inst: &CodeInstance,
    params: &IrreducibleParams,
) -> Result<IrreducibleReport> {
    let h = inst.classical_matrix()?;
    let field = inst.field().clone();
    let n = inst.n();
    let allowed: Vec<bool> = match (params.box_side, inst.lattice()) {
        (Some(b), Some(lat)) => (0..n)
            .map(|i| lat.coord_of(i).0.iter().all(|&x| (x as usize) < b))
            .collect(),
        (Some(_), None) => {
            return Err(Error::Invalid(
                "box restriction needs a lattice instance".into(),
            ))
        }
        (None, _) => vec![true; n],
    };
    let max_weight = params
        .max_weight
        .unwrap_or(n)
        .min(allowed.iter().filter(|&&a| a).count());
    let adj = coordinate_graph(h);
    let roots: Vec<usize> = (0..n).collect();
    let mut exact = vec![0usize; params.energy_cap + 1];
    let mut reducible = 0;
    let mut undecided = 0;
    let mut words = Vec::new();
    let mut supports = 0u64;
    let mut scratch = vec![Fe::ZERO; h.rows()];
    let mut touched = Vec::new();
    let mut over = false;
    for_each_connected_subset(&adj, &allowed, &roots, max_weight, |sub| {
        supports += 1;
        if supports > params.budget {
            over = true;
            return false;
        }
        for_each_assignment(&field, sub, |entries| {
            let e = sparse_energy(h, entries, &mut scratch, &mut touched);
            if e > params.energy_cap {
                return true;
            }
            if entries.len() > PARTITION_LIMIT {
                undecided += 1;
            } else if is_irreducible(h, entries) {
                exact[e] += 1;
                if params.keep_words {
                    words.push(SparseWord::from_entries(n, entries.iter().copied()).unwrap());
                }
            } else {
                reducible += 1;
            }
            true
        })
    });
    if over {
        return Err(Error::Budget(format!(
            "more than {} supports enumerated",
            params.budget
        )));
    }
    let cumulative = exact
        .iter()
        .scan(0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    Ok(IrreducibleReport {
        exact,
        cumulative,
        reducible_connected: reducible,
        undecided,
        supports_enumerated: supports,
        words,
    })
}

#[derive(Clone, Debug)]
pub enum ExpansionMode {
    /// Every word with 1 ≤ |c| ≤ w_max. For ν ≤ 1 only connected supports
    /// are needed (energy is additive over components and |c|^ν is
    /// subadditive); `roots` restricts the smallest coordinate of the
    /// support, valid when translations make other roots redundant.
    Exhaustive {
        w_max: usize,
        roots: Option<Vec<usize>>,
    },
    /// Simulated annealing on supports of size ≤ w_max (an upper bound on λ_min).
    Stochastic {
        w_max: usize,
        seed: u64,
        restarts: usize,
        steps: usize,
    },
    /// An explicit list of words.
    Words(Vec<SparseWord>),
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub nu: f64,
    pub lambda_min: f64,
    pub witness_weight: usize,
    pub witness_energy: usize,
    #[serde(skip)]
    pub witness: Option<SparseWord>,
    /// True when every word of the requested class was tested.
    pub exhaustive: bool,
    pub tested: u64,
    pub seed: Option<u64>,
}

struct Minimum {
    ratio: f64,
    weight: usize,
    energy: usize,
    word: Option<Vec<(usize, Fe)>>,
}

impl Minimum {
    fn new() -> Self {
        Minimum {
            ratio: f64::INFINITY,
            weight: 0,
            energy: 0,
            word: None,
        }
    }

    fn offer(&mut self, energy: usize, weight: usize, nu: f64, word: &[(usize, Fe)]) {
        let r = energy as f64 / (weight as f64).powf(nu);
        if r < self.ratio {
            self.ratio = r;
            self.weight = weight;
            self.energy = energy;
            self.word = Some(word.to_vec());
        }
    }
}

/// min |Hc| / |c|^ν over the tested nonzero words.
pub fn expansion_check(
    h: &SparseFqMatrix,
    nu: f64,
    mode: &ExpansionMode,
) -> Result<ExpansionReport> {
    let field = h.field().clone();
    let n = h.cols();
    let mut best = Minimum::new();
    let mut tested = 0u64;
    let mut scratch = vec![Fe::ZERO; h.rows()];
    let mut touched = Vec::new();
    let mut seed = None;
    let exhaustive;
    match mode {
        ExpansionMode::Exhaustive { w_max, roots } => {
            exhaustive = true;
            if nu <= 1.0 {
                let adj = coordinate_graph(h);
                let allowed = vec![true; n];
                let all: Vec<usize> = (0..n).collect();
                let roots = roots.as_deref().unwrap_or(&all);
                for_each_connected_subset(&adj, &allowed, roots, *w_max, |sub| {
                    for_each_assignment(&field, sub, |entries| {
                        tested += 1;
                        let e = sparse_energy(h, entries, &mut scratch, &mut touched);
                        best.offer(e, entries.len(), nu, entries);
                        true
                    })
                });
            } else {
                for w in 1..=(*w_max).min(n) {
                    crate::linalg::for_each_word_of_weight(&field, n, w, |word| {
                        tested += 1;
                        let entries: Vec<(usize, Fe)> = word.entries().collect();
                        let e = sparse_energy(h, &entries, &mut scratch, &mut touched);
                        best.offer(e, w, nu, &entries);
                        true
                    });
                }
            }
        }
        ExpansionMode::Words(list) => {
            exhaustive = false;
            for w in list {
                if w.len() != n {
                    return Err(Error::Shape(format!(
                        "word of length {} for {n} columns",
                        w.len()
                    )));
                }
                if w.is_zero() {
                    continue;
                }
                tested += 1;
                let entries: Vec<(usize, Fe)> = w.entries().collect();
                let e = sparse_energy(h, &entries, &mut scratch, &mut touched);
                best.offer(e, entries.len(), nu, &entries);
            }
        }
        ExpansionMode::Stochastic {
            w_max,
            seed: s,
            restarts,
            steps,
        } => {
            exhaustive = false;
            seed = Some(*s);
            let adj = coordinate_graph(h);
            let mut rng = ChaCha8Rng::seed_from_u64(*s);
            for _ in 0..(*restarts).max(1) {
                if n == 0 {
                    break;
                }
                let mut syn = Syndrome::new(h, vec![Fe::ZERO; n]);
                let start = rng.gen_range(0..n);
                syn.set(start, field.random_nonzero(&mut rng));
                let mut support: Vec<usize> = vec![start];
                let ratio = |e: usize, w: usize| e as f64 / (w as f64).powf(nu);
                let steps = (*steps).max(1);
                for t in 0..steps {
                    let temp = 1.0 * (0.01f64).powf(t as f64 / steps as f64);
                    // candidate: a support coordinate or a neighbour of one
                    let anchor = support[rng.gen_range(0..support.len())];
                    let i = if rng.gen_bool(0.5) || adj[anchor].is_empty() {
                        anchor
                    } else {
                        adj[anchor][rng.gen_range(0..adj[anchor].len())]
                    };
                    let old = syn.word()[i];
                    let v = if old.is_zero() || rng.gen_bool(0.5) {
                        if support.len() >= *w_max && old.is_zero() {
                            continue;
                        }
                        let mut v = field.random_nonzero(&mut rng);
                        if v == old && field.order() > 2 {
                            v = field.add(v, Fe::ONE);
                            if v.is_zero() {
                                v = Fe::ONE;
                            }
                        }
                        v
                    } else {
                        Fe::ZERO
                    };
                    if v == old {
                        continue;
                    }
                    let new_w = support.len() + (!v.is_zero()) as usize - (!old.is_zero()) as usize;
                    if new_w == 0 {
                        continue;
                    }
                    let cur = ratio(syn.energy(), support.len());
                    let next = ratio(syn.energy_if(i, v), new_w);
                    if next <= cur || rng.gen::<f64>() < ((cur - next) / temp).exp() {
                        syn.set(i, v);
                        if old.is_zero() {
                            support.push(i);
                        } else if v.is_zero() {
                            support.retain(|&x| x != i);
                        }
                        tested += 1;
                        let entries: Vec<(usize, Fe)> =
                            support.iter().map(|&k| (k, syn.word()[k])).collect();
                        best.offer(syn.energy(), support.len(), nu, &entries);
                    }
                }
            }
        }
    }
    let witness = best
        .word
        .as_ref()
        .map(|w| SparseWord::from_entries(n, w.iter().copied()).unwrap());
    Ok(ExpansionReport {
        nu,
        lambda_min: best.ratio,
        witness_weight: best.weight,
        witness_energy: best.energy,
        witness,
        exhaustive,
        tested,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumExpansionReport {
    /// min |δ1 c| / (min_{b ∈ im δ0} |c + b|)^ν.
    pub coboundary: ExpansionReport,
    /// min |δ0^T c| / (min_{b ∈ im δ1^T} |c + b|)^ν.
    pub boundary: ExpansionReport,
    /// Every coset reduction was exact.
    pub reductions_exact: bool,
}

/// Expansion of a chain complex `δ0: X0 → X1`, `δ1: X1 → X2` relative to
/// the coset-reduced weight. Words with reduced weight 0 are skipped.
pub fn quantum_expansion_check(
    delta0: &SparseFqMatrix,
    delta1: &SparseFqMatrix,
    nu: f64,
    w_max: usize,
    extra_words: &[SparseWord],
    coset_budget: u64,
) -> Result<QuantumExpansionReport> {
    if delta0.rows() != delta1.cols() {
        return Err(Error::Shape("δ0 codomain differs from δ1 domain".into()));
    }
    let d0t = delta0.transpose();
    let mut all_exact = true;
    let mut run = |map: &SparseFqMatrix, gens: &SparseFqMatrix| -> Result<ExpansionReport> {
        let n = map.cols();
        let field = map.field().clone();
        let minimizer = CosetMinimizer::new(gens);
        let mut best = Minimum::new();
        let mut tested = 0u64;
        let mut scratch = vec![Fe::ZERO; map.rows()];
        let mut touched = Vec::new();
        let mut err = None;
        let mut eval = |word: &SparseWord, best: &mut Minimum, tested: &mut u64| {
            let red = match minimizer.min_weight(word, coset_budget) {
                Ok(r) => r,
                Err(e) => {
                    err = Some(e);
                    return false;
                }
            };
            all_exact &= red.exact;
            if red.weight == 0 {
                return true;
            }
            *tested += 1;
            let entries: Vec<(usize, Fe)> = word.entries().collect();
            let e = sparse_energy(map, &entries, &mut scratch, &mut touched);
            let r = e as f64 / (red.weight as f64).powf(nu);
            if r < best.ratio {
                best.ratio = r;
                best.weight = red.weight;
                best.energy = e;
                best.word = Some(entries);
            }
            true
        };
        for w in 1..=w_max.min(n) {
            crate::linalg::for_each_word_of_weight(&field, n, w, |word| {
                eval(word, &mut best, &mut tested)
            });
        }
        for word in extra_words.iter().filter(|w| w.len() == n) {
            eval(word, &mut best, &mut tested);
        }
        if let Some(e) = err {
            return Err(e);
        }
        Ok(ExpansionReport {
            nu,
            lambda_min: best.ratio,
            witness_weight: best.weight,
            witness_energy: best.energy,
            witness: best.word.map(|w| SparseWord::from_entries(n, w).unwrap()),
            exhaustive: extra_words.is_empty(),
            tested,
            seed: None,
        })
    };
    // generators of im δ0 as rows: δ0^T; of im δ1^T: δ1
    let coboundary = run(delta1, &d0t)?;
    let boundary = run(&d0t, delta1)?;
    Ok(QuantumExpansionReport {
        coboundary,
        boundary,
        reductions_exact: all_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{make_ising, Boundary};

    #[test]
    fn connected_subsets_of_a_path_and_cycle() {
        // path 0-1-2-3: connected subsets are intervals, 10 of them
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let allowed = vec![true; 4];
        let mut seen = Vec::new();
        for_each_connected_subset(&adj, &allowed, &[0, 1, 2, 3], 4, |s| {
            let mut s = s.to_vec();
            s.sort();
            seen.push(s);
            true
        });
        assert_eq!(seen.len(), 10);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 10);
        // 5-cycle: 5 per size 1..4 and one of size 5
        let adj: Vec<Vec<usize>> = (0..5).map(|i| vec![(i + 4) % 5, (i + 1) % 5]).collect();
        let mut count = 0;
        for_each_connected_subset(&adj, &[true; 5], &[0, 1, 2, 3, 4], 5, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 21);
    }

    #[test]
    fn connected_subset_count_matches_brute_force_on_grid() {
        let inst = make_ising(2)
            .unwrap()
            .instantiate(&[4], Boundary::Torus)
            .unwrap();
        let h = inst.classical_matrix().unwrap();
        let adj = coordinate_graph(h);
        let roots: Vec<usize> = (0..16).collect();
        let mut count = 0u64;
        for_each_connected_subset(&adj, &[true; 16], &roots, 16, |_| {
            count += 1;
            true
        });
        let mut brute = 0u64;
        for mask in 1u32..(1 << 16) {
            // BFS connectivity
            let start = mask.trailing_zeros() as usize;
            let mut seen = 1u32 << start;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if mask >> u & 1 == 1 && seen >> u & 1 == 0 {
                        seen |= 1 << u;
                        stack.push(u);
                    }
                }
            }
            brute += (seen == mask) as u64;
        }
        assert_eq!(count, brute);
    }

    #[test]
    fn irreducibility_of_small_words() {
        let inst = make_ising(2)
            .unwrap()
            .instantiate(&[5], Boundary::Torus)
            .unwrap();
        let h = inst.classical_matrix().unwrap();
        assert!(is_irreducible(h, &[(0, Fe::ONE)]));
        assert!(is_irreducible(h, &[(0, Fe::ONE), (1, Fe::ONE)]));
    }

    #[test]
    fn walk_text_round_trip() {
        let f = Field::new(3, 1).unwrap();
        let mut start = SparseWord::zero(4);
        start.set(2, Fe(2));
        let w = Walk {
            start,
            steps: vec![(0, Fe(1)), (3, Fe(2)), (0, Fe(0))],
        };
        assert_eq!(Walk::from_text(&w.to_text(), &f).unwrap(), w);
        assert!(Walk::from_text("n 2\n5 1\n", &f).is_err());
        assert!(Walk::from_text("n 2\n0 3\n", &f).is_err());
    }
}
