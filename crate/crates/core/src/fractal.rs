//! Sierpiński-carpet prefractals, random local codes placed on them, and
//! hypergraph products.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::CodeInstance;
use crate::error::{Error, Result};
use crate::fq::{Fe, Field};
use crate::sparse::SparseFqMatrix;

/// Level-`i` carpet with subdivision `A`, rescaled so squares are unit cells
/// with integer corners in `[0, A^i)^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefractalRegion {
    pub a: usize,
    pub level: usize,
    pub squares: BTreeSet<(i64, i64)>,
}

/// Generates the level-`i` carpet by replacing each square with the `4A-4`
/// boundary cells of its `A×A` subdivision.
pub fn carpet(a: usize, level: usize) -> Result<PrefractalRegion> {
    if a < 3 {
        return Err(Error::Invalid(format!("carpet needs A ≥ 3, got {a}")));
    }
    let side = (a as u128).checked_pow(level as u32);
    if side.is_none_or(|s| s > 1 << 30) {
        return Err(Error::Invalid("carpet side length overflows".into()));
    }
    let ai = a as i64;
    let mut squares = BTreeSet::from([(0i64, 0i64)]);
    for _ in 0..level {
        let mut next = BTreeSet::new();
        for &(x, y) in &squares {
            for u in 0..ai {
                for v in 0..ai {
                    let inner = (1..ai - 1).contains(&u) && (1..ai - 1).contains(&v);
                    if !inner {
                        next.insert((x * ai + u, y * ai + v));
                    }
                }
            }
        }
        squares = next;
    }
    Ok(PrefractalRegion { a, level, squares })
}

impl PrefractalRegion {
    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn side(&self) -> i64 {
        (self.a as i64).pow(self.level as u32)
    }

    pub fn expected_count(&self) -> u128 {
        (4 * self.a as u128 - 4).pow(self.level as u32)
    }

    /// Similarity dimension `log(4A-4)/log A`.
    pub fn dimension(&self) -> f64 {
        ((4 * self.a - 4) as f64).ln() / (self.a as f64).ln()
    }

    /// Squares of the next coarser level, obtained by integer division by A.
    pub fn coarsen(&self) -> BTreeSet<(i64, i64)> {
        let a = self.a as i64;
        self.squares
            .iter()
            .map(|&(x, y)| (x.div_euclid(a), y.div_euclid(a)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("carpet {} {}\n", self.a, self.level);
        for (x, y) in &self.squares {
            let _ = writeln!(s, "{x} {y}");
        }
        s
    }

    /// Parses a region file and checks it against the generated carpet.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty region file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "carpet" {
            return Err(Error::Parse(format!("bad region header '{header}'")));
        }
        let a: usize = h[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad A '{}'", h[1])))?;
        let level: usize = h[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad level '{}'", h[2])))?;
        let mut squares = BTreeSet::new();
        for l in lines {
            let xy: Vec<i64> = l
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad coordinate line '{l}'")))
                })
                .collect::<Result<_>>()?;
            if xy.len() != 2 || !squares.insert((xy[0], xy[1])) {
                return Err(Error::Parse(format!("bad or duplicate square '{l}'")));
            }
        }
        let region = PrefractalRegion { a, level, squares };
        if region != carpet(a, level)? {
            return Err(Error::Parse(
                "square set is not the carpet of the stated level".into(),
            ));
        }
        Ok(region)
    }
}

/// Parameters of a random local classical code on a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalCodeParams {
    #[serde(default = "one")]
    pub bits_per_square: usize,
    #[serde(default = "one")]
    pub checks_per_square: usize,
    #[serde(default = "two")]
    pub radius: f64,
    /// Number of bits each check reads.
    #[serde(default = "three")]
    pub check_weight: usize,
    /// Upper bound on the number of checks per bit.
    #[serde(default = "six")]
    pub max_bit_degree: usize,
    #[serde(default = "retries")]
    pub max_retries: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn two() -> f64 {
    2.0
}
fn three() -> usize {
    3
}
fn six() -> usize {
    6
}
fn retries() -> usize {
    10_000
}

impl LocalCodeParams {
    pub fn with_seed(seed: u64) -> Self {
        LocalCodeParams {
            bits_per_square: 1,
            checks_per_square: 1,
            radius: 2.0,
            check_weight: 3,
            max_bit_degree: 6,
            max_retries: retries(),
            seed,
        }
    }
}

/// A classical code with bits and checks pinned to carpet cells.
#[derive(Clone, Debug)]
pub struct LocalCodeOnRegion {
    pub region: PrefractalRegion,
    pub code: CodeInstance,
    pub bit_coords: Vec<Vec<i64>>,
    pub check_coords: Vec<Vec<i64>>,
    pub radius: f64,
    /// Declared bound on bits plus checks sharing one cell.
    pub density_cap: usize,
    pub resamples: usize,
}

fn dist(a: &[i64], b: &[i64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Places `bits_per_square` bits and `checks_per_square` checks in every cell
/// and wires each check to `check_weight` random bits within `radius`.
/// Empty checks, repeated supports and uncovered bits are repaired by local
/// resampling; more than `max_retries` repairs is reported as infeasible.
pub fn random_local_code(
    region: &PrefractalRegion,
    field: &Field,
    params: &LocalCodeParams,
) -> Result<LocalCodeOnRegion> {
    let p = params;
    if p.bits_per_square == 0 || p.checks_per_square == 0 {
        return Err(Error::Degenerate(
            "bits and checks per square must be positive".into(),
        ));
    }
    if p.check_weight == 0 || p.max_bit_degree == 0 || p.radius.is_nan() || p.radius < 0.0 {
        return Err(Error::Invalid(
            "check weight, bit degree and radius must be positive".into(),
        ));
    }
    if p.checks_per_square * p.check_weight > p.bits_per_square * p.max_bit_degree {
        return Err(Error::Invalid(format!(
            "degree bounds unsatisfiable: {} incidences per cell exceed {}",
            p.checks_per_square * p.check_weight,
            p.bits_per_square * p.max_bit_degree
        )));
    }
    let cells: Vec<(i64, i64)> = region.squares.iter().copied().collect();
    let index: HashMap<(i64, i64), usize> =
        cells.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let reach = p.radius.floor() as i64;
    let near: Vec<Vec<usize>> = cells
        .iter()
        .map(|&(x, y)| {
            let mut v = Vec::new();
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    if ((dx * dx + dy * dy) as f64).sqrt() <= p.radius {
                        if let Some(&k) = index.get(&(x + dx, y + dy)) {
                            v.push(k);
                        }
                    }
                }
            }
            v.sort_unstable();
            v
        })
        .collect();
    let (bps, cps) = (p.bits_per_square, p.checks_per_square);
    let n = cells.len() * bps;
    let m = cells.len() * cps;
    let bits_near = |check: usize| {
        near[check / cps]
            .iter()
            .flat_map(move |&c| (0..bps).map(move |k| c * bps + k))
    };
    let checks_near = |bit: usize| {
        near[bit / bps]
            .iter()
            .flat_map(move |&c| (0..cps).map(move |k| c * cps + k))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut degree = vec![0usize; n];
    let mut resamples = 0usize;

    let sample =
        |c: usize, support: &mut Vec<Vec<usize>>, degree: &mut Vec<usize>, rng: &mut ChaCha8Rng| {
            for &b in &support[c] {
                degree[b] -= 1;
            }
            let cands: Vec<usize> = bits_near(c)
                .filter(|&b| degree[b] < p.max_bit_degree)
                .collect();
            let mut chosen: Vec<usize> = cands
                .choose_multiple(rng, p.check_weight.min(cands.len()))
                .copied()
                .collect();
            chosen.sort_unstable();
            for &b in &chosen {
                degree[b] += 1;
            }
            support[c] = chosen;
        };
    for c in 0..m {
        sample(c, &mut support, &mut degree, &mut rng);
    }
    loop {
        let mut bad: Vec<usize> = (0..m)
            .filter(|&c| support[c].len() < p.check_weight)
            .collect();
        let mut seen: HashMap<&[usize], usize> = HashMap::new();
        for c in 0..m {
            if let Some(_first) = seen.insert(&support[c], c) {
                bad.push(c);
            }
        }
        bad.sort_unstable();
        bad.dedup();
        let lonely: Vec<usize> = (0..n).filter(|&b| degree[b] == 0).collect();
        if bad.is_empty() && lonely.is_empty() {
            break;
        }
        resamples += bad.len() + lonely.len();
        if resamples > p.max_retries {
            return Err(Error::Degenerate(format!(
                "local resampling exceeded {} repairs; parameters look infeasible",
                p.max_retries
            )));
        }
        for c in bad {
            sample(c, &mut support, &mut degree, &mut rng);
        }
        for b in lonely {
            if degree[b] > 0 {
                continue;
            }
            let hosts: Vec<usize> = checks_near(b).filter(|&c| !support[c].is_empty()).collect();
            let Some(&c) = hosts.choose(&mut rng) else {
                continue;
            };
            let k = rng.gen_range(0..support[c].len());
            degree[support[c][k]] -= 1;
            support[c][k] = b;
            degree[b] += 1;
            support[c].sort_unstable();
        }
    }
    let rows: Vec<Vec<(usize, Fe)>> = support
        .iter()
        .map(|s| {
            s.iter()
                .map(|&b| (b, field.random_nonzero(&mut rng)))
                .collect()
        })
        .collect();
    let h = SparseFqMatrix::from_triples(
        field,
        m,
        n,
        rows.iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v))),
    )?;
    let coord = |(x, y): (i64, i64)| vec![x, y];
    Ok(LocalCodeOnRegion {
        region: region.clone(),
        code: CodeInstance::from_classical_matrix("random-local", h),
        bit_coords: (0..n).map(|b| coord(cells[b / bps])).collect(),
        check_coords: (0..m).map(|c| coord(cells[c / cps])).collect(),
        radius: p.radius,
        density_cap: bps + cps,
        resamples,
    })
}

impl LocalCodeOnRegion {
    pub fn matrix(&self) -> &SparseFqMatrix {
        self.code.classical_matrix().expect("classical code")
    }

    pub fn locality(&self) -> LocalityReport {
        locality_check(
            self.matrix(),
            &self.check_coords,
            &self.bit_coords,
            self.radius,
            self.density_cap,
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "local-code {} {} {} {}\n",
            self.region.a, self.region.level, self.radius, self.density_cap
        );
        s.push_str(&self.matrix().to_text());
        s.push_str("coords\n");
        for c in &self.bit_coords {
            let _ = writeln!(s, "b {} {}", c[0], c[1]);
        }
        for c in &self.check_coords {
            let _ = writeln!(s, "c {} {}", c[0], c[1]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::Parse("empty code file".into()))?;
        let h: Vec<&str> = head.split_whitespace().collect();
        if h.len() != 5 || h[0] != "local-code" {
            return Err(Error::Parse(format!("bad header '{head}'")));
        }
        let bad = |t: &str| Error::Parse(format!("bad number '{t}'"));
        let a: usize = h[1].parse().map_err(|_| bad(h[1]))?;
        let level: usize = h[2].parse().map_err(|_| bad(h[2]))?;
        let radius: f64 = h[3].parse().map_err(|_| bad(h[3]))?;
        let density_cap: usize = h[4].parse().map_err(|_| bad(h[4]))?;
        let (mtext, ctext) = rest
            .split_once("coords\n")
            .ok_or_else(|| Error::Parse("missing coords section".into()))?;
        let h = SparseFqMatrix::from_text(mtext)?;
        let (mut bits, mut checks) = (Vec::new(), Vec::new());
        for l in ctext.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(Error::Parse(format!("bad coordinate line '{l}'")));
            }
            let xy = vec![
                t[1].parse().map_err(|_| bad(t[1]))?,
                t[2].parse().map_err(|_| bad(t[2]))?,
            ];
            match t[0] {
                "b" => bits.push(xy),
                "c" => checks.push(xy),
                _ => return Err(Error::Parse(format!("bad coordinate tag '{}'", t[0]))),
            }
        }
        if bits.len() != h.cols() || checks.len() != h.rows() {
            return Err(Error::Parse(
                "coordinate table does not match matrix shape".into(),
            ));
        }
        Ok(LocalCodeOnRegion {
            region: carpet(a, level)?,
            code: CodeInstance::from_classical_matrix("random-local", h),
            bit_coords: bits,
            check_coords: checks,
            radius,
            density_cap,
            resamples: 0,
        })
    }
}

/// An interaction longer than the declared radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongEdge {
    pub check: usize,
    pub bit: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub max_distance: f64,
    /// Largest number of embedded points sharing one cell.
    pub max_population: usize,
    pub radius: f64,
    pub density_cap: usize,
    pub long_edges: Vec<LongEdge>,
    pub pass: bool,
}

fn population<'a>(points: impl Iterator<Item = &'a Vec<i64>>) -> usize {
    let mut count: HashMap<&Vec<i64>, usize> = HashMap::new();
    for p in points {
        *count.entry(p).or_default() += 1;
    }
    count.into_values().max().unwrap_or(0)
}

/// Checks every nonzero `H[c][b]` against `radius` and the per-cell
/// population of checks and bits against `density_cap`.
pub fn locality_check(
    h: &SparseFqMatrix,
    check_coords: &[Vec<i64>],
    bit_coords: &[Vec<i64>],
    radius: f64,
    density_cap: usize,
) -> LocalityReport {
    let mut max_distance: f64 = 0.0;
    let mut long_edges = Vec::new();
    for (c, b, _) in h.triples() {
        let d = dist(&check_coords[c], &bit_coords[b]);
        max_distance = max_distance.max(d);
        if d > radius + 1e-9 {
            long_edges.push(LongEdge {
                check: c,
                bit: b,
                distance: d,
            });
        }
    }
    let max_population = population(check_coords.iter().chain(bit_coords));
    LocalityReport {
        max_distance,
        max_population,
        radius,
        density_cap,
        pass: long_edges.is_empty() && max_population <= density_cap,
        long_edges,
    }
}

/// Cycle code of length `L`: check `t` reads `c_t - c_{t-1}`.
pub fn cycle_code(field: &Field, l: usize) -> Result<SparseFqMatrix> {
    if l < 2 {
        return Err(Error::Invalid("cycle length must be ≥ 2".into()));
    }
    let minus = field.neg(Fe::ONE);
    SparseFqMatrix::from_triples(
        field,
        l,
        l,
        (0..l).flat_map(|t| [(t, t, Fe::ONE), (t, (t + l - 1) % l, minus)]),
    )
}

/// `X(0) --δ0--> X(1) --δ1--> X(2)` with `δ1 δ0 = 0`.
#[derive(Clone, Debug)]
pub struct ChainComplex3 {
    pub delta0: SparseFqMatrix,
    pub delta1: SparseFqMatrix,
    /// (bits, checks) of the two factors when built as a product.
    pub factors: Option<[(usize, usize); 2]>,
}

impl ChainComplex3 {
    pub fn new(delta0: SparseFqMatrix, delta1: SparseFqMatrix) -> Result<Self> {
        if delta1.cols() != delta0.rows() {
            return Err(Error::Shape("δ1 columns must equal δ0 rows".into()));
        }
        let cc = ChainComplex3 {
            delta0,
            delta1,
            factors: None,
        };
        if !cc.is_complex()? {
            return Err(Error::Invalid("δ1 δ0 ≠ 0".into()));
        }
        Ok(cc)
    }

    pub fn field(&self) -> &Field {
        self.delta0.field()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.delta0.cols(), self.delta0.rows(), self.delta1.rows()]
    }

    pub fn is_complex(&self) -> Result<bool> {
        Ok(self.delta1.mul(&self.delta0)?.is_zero())
    }

    /// ∂1 = δ0ᵀ : X(1) → X(0).
    pub fn boundary1(&self) -> SparseFqMatrix {
        self.delta0.transpose()
    }

    /// ∂2 = δ1ᵀ : X(2) → X(1).
    pub fn boundary2(&self) -> SparseFqMatrix {
        self.delta1.transpose()
    }

    /// Quantum code on X(1) with `H_X = δ1` and `H_Z = δ0ᵀ`.
    pub fn to_quantum(&self, family: &str) -> Result<CodeInstance> {
        CodeInstance::from_quantum_matrices(family, self.delta1.clone(), self.delta0.transpose())
    }

    /// 4D coordinates of X(0), X(1), X(2) from 2D embeddings of the factors.
    pub fn product_embedding(
        &self,
        first: (&[Vec<i64>], &[Vec<i64>]),
        second: (&[Vec<i64>], &[Vec<i64>]),
    ) -> Result<[Vec<Vec<i64>>; 3]> {
        let [(n1, m1), (n2, m2)] = self
            .factors
            .ok_or_else(|| Error::Invalid("complex is not a product".into()))?;
        let ((b1, c1), (b2, c2)) = (first, second);
        if b1.len() != n1 || c1.len() != m1 || b2.len() != n2 || c2.len() != m2 {
            return Err(Error::Shape(
                "embedding sizes do not match the factors".into(),
            ));
        }
        let cat = |a: &[Vec<i64>], b: &[Vec<i64>]| -> Vec<Vec<i64>> {
            a.iter()
                .flat_map(|x| b.iter().map(move |y| [x.as_slice(), y.as_slice()].concat()))
                .collect()
        };
        let mut x1 = cat(b1, c2);
        x1.extend(cat(c1, b2));
        Ok([cat(b1, b2), x1, cat(c1, c2)])
    }

    /// Locality of both coboundary maps under the product embedding, with
    /// Euclidean distance in four dimensions.
    pub fn product_locality(
        &self,
        coords: &[Vec<Vec<i64>>; 3],
        radius: f64,
        density_cap: usize,
    ) -> LocalityReport {
        let r0 = locality_check(&self.delta0, &coords[1], &coords[0], radius, usize::MAX);
        let r1 = locality_check(&self.delta1, &coords[2], &coords[1], radius, usize::MAX);
        let max_population = population(coords.iter().flatten());
        let mut long_edges = r0.long_edges;
        long_edges.extend(r1.long_edges);
        LocalityReport {
            max_distance: r0.max_distance.max(r1.max_distance),
            max_population,
            radius,
            density_cap,
            pass: long_edges.is_empty() && max_population <= density_cap,
            long_edges,
        }
    }
}

/// δ0 = (I⊗H2 ; H1⊗I), δ1 = (H1⊗I | −I⊗H2).
pub fn hypergraph_product(h1: &SparseFqMatrix, h2: &SparseFqMatrix) -> Result<ChainComplex3> {
    if h1.field() != h2.field() {
        return Err(Error::Mismatch(
            "hypergraph product factors use different fields".into(),
        ));
    }
    let f = h1.field();
    let (m1, n1) = (h1.rows(), h1.cols());
    let (m2, n2) = (h2.rows(), h2.cols());
    let i = |k| SparseFqMatrix::identity(f, k);
    let delta0 = i(n1).kron(h2)?.vstack(&h1.kron(&i(n2))?)?;
    let minus = f.neg(Fe::ONE);
    let delta1 = h1.kron(&i(m2))?.hstack(&i(m1).kron(h2)?.scale(minus))?;
    let mut cc = ChainComplex3::new(delta0, delta1)?;
    cc.factors = Some([(n1, m1), (n2, m2)]);
    Ok(cc)
}

/// Colored bipartite graph: columns share one color, rows of matrix `k`
/// get color `k+1`; edges carry the field value.
struct Tanner {
    adj: Vec<Vec<(u16, usize)>>,
    base: Vec<u32>,
    cols: usize,
}

impl Tanner {
    fn new(mats: &[&SparseFqMatrix]) -> Tanner {
        let cols = mats[0].cols();
        let mut adj = vec![Vec::new(); cols];
        let mut base = vec![0u32; cols];
        for (k, m) in mats.iter().enumerate() {
            let off = adj.len();
            for r in 0..m.rows() {
                adj.push(m.row(r).iter().map(|&(c, v)| (v.0, c)).collect());
                base.push(k as u32 + 1);
                for &(c, v) in m.row(r) {
                    adj[c].push((v.0, off + r));
                }
            }
        }
        Tanner { adj, base, cols }
    }
}

type Coloring = (Vec<u32>, Vec<u32>);

/// Joint color refinement of two graphs; returns None if histograms diverge.
fn refine(g: &Tanner, h: &Tanner, mut c: Coloring) -> Option<Coloring> {
    let classes = |c: &Coloring| c.0.iter().chain(&c.1).collect::<BTreeSet<_>>().len();
    loop {
        let before = classes(&c);
        let sig = |t: &Tanner, col: &[u32], u: usize| {
            let mut s: Vec<(u16, u32)> = t.adj[u].iter().map(|&(l, v)| (l, col[v])).collect();
            s.sort_unstable();
            (col[u], s)
        };
        let s1: Vec<_> = (0..g.adj.len()).map(|u| sig(g, &c.0, u)).collect();
        let s2: Vec<_> = (0..h.adj.len()).map(|u| sig(h, &c.1, u)).collect();
        let ids: BTreeMap<_, u32> = s1
            .iter()
            .chain(&s2)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(k, s)| (s.clone(), k as u32))
            .collect();
        c = (
            s1.iter().map(|s| ids[s]).collect(),
            s2.iter().map(|s| ids[s]).collect(),
        );
        let mut h1: Vec<u32> = c.0.clone();
        let mut h2: Vec<u32> = c.1.clone();
        h1.sort_unstable();
        h2.sort_unstable();
        if h1 != h2 {
            return None;
        }
        if classes(&c) == before {
            return Some(c);
        }
    }
}

fn search(g: &Tanner, h: &Tanner, c: Coloring) -> Option<Vec<usize>> {
    let c = refine(g, h, c)?;
    let mut size: BTreeMap<u32, usize> = BTreeMap::new();
    for &x in &c.0 {
        *size.entry(x).or_default() += 1;
    }
    let Some((&color, _)) = size.iter().filter(|(_, &s)| s > 1).min_by_key(|(_, &s)| s) else {
        let pos: HashMap<u32, usize> = c.1.iter().enumerate().map(|(v, &x)| (x, v)).collect();
        let map: Vec<usize> = c.0.iter().map(|x| pos[x]).collect();
        let ok = (0..g.adj.len()).all(|u| {
            let mut a: Vec<(u16, usize)> = g.adj[u].iter().map(|&(l, v)| (l, map[v])).collect();
            let mut b = h.adj[map[u]].clone();
            a.sort_unstable();
            b.sort_unstable();
            a == b
        });
        return ok.then_some(map);
    };
    let u = c.0.iter().position(|&x| x == color)?;
    let fresh = c.0.iter().chain(&c.1).max().copied().unwrap_or(0) + 1;
    for v in (0..h.adj.len()).filter(|&v| c.1[v] == color) {
        let mut next = c.clone();
        next.0[u] = fresh;
        next.1[v] = fresh;
        if let Some(m) = search(g, h, next) {
            return Some(m);
        }
    }
    None
}

/// Finds a column permutation `π` (column `i` of `a` ↦ column `π[i]` of `b`)
/// together with row permutations carrying each matrix of `a` onto the
/// matching matrix of `b`, entries included.
pub fn tanner_isomorphism(a: &[&SparseFqMatrix], b: &[&SparseFqMatrix]) -> Option<Vec<usize>> {
    if a.len() != b.len()
        || a.is_empty()
        || a.iter()
            .zip(b)
            .any(|(x, y)| x.rows() != y.rows() || x.cols() != y.cols())
    {
        return None;
    }
    let (g, h) = (Tanner::new(a), Tanner::new(b));
    let map = search(&g, &h, (g.base.clone(), h.base.clone()))?;
    Some(map[..g.cols].to_vec())
}

/// Qubit permutation making two CSS codes identical up to check
/// reordering, also trying the exchange of the X and Z roles.
pub fn css_permutation_equivalent(
    a: &CodeInstance,
    b: &CodeInstance,
) -> Result<Option<Vec<usize>>> {
    let (ax, az) = a.quantum_matrices()?;
    let (bx, bz) = b.quantum_matrices()?;
    Ok(tanner_isomorphism(&[ax, az], &[bx, bz])
        .or_else(|| tanner_isomorphism(&[ax, az], &[bz, bx])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carpet_examples() {
        let c = carpet(3, 1).unwrap();
        assert_eq!(c.len(), 8);
        assert!(!c.squares.contains(&(1, 1)));
        assert!((c.dimension() - 1.8928).abs() < 1e-4);
        assert_eq!(carpet(3, 2).unwrap().len(), 64);
        let c4 = carpet(4, 1).unwrap();
        assert_eq!(c4.len(), 12);
        assert!((c4.dimension() - 1.7925).abs() < 1e-4);
        assert_eq!(carpet(5, 0).unwrap().len(), 1);
        assert!(carpet(2, 1).is_err());
    }

    #[test]
    fn region_text_roundtrip() {
        let c = carpet(3, 2).unwrap();
        assert_eq!(PrefractalRegion::from_text(&c.to_text()).unwrap(), c);
        let broken = c.to_text().replace("0 0\n", "1 1\n");
        assert!(PrefractalRegion::from_text(&broken).is_err());
    }

    #[test]
    fn product_of_cycles_is_a_complex_in_odd_characteristic() {
        let f = Field::new(5, 1).unwrap();
        let h = cycle_code(&f, 4).unwrap();
        let cc = hypergraph_product(&h, &h).unwrap();
        assert!(cc.is_complex().unwrap());
        assert_eq!(cc.dims(), [16, 32, 16]);
    }

    #[test]
    fn field_mismatch_rejected() {
        let a = cycle_code(&Field::binary(), 3).unwrap();
        let b = cycle_code(&Field::new(3, 1).unwrap(), 3).unwrap();
        assert!(matches!(
            hypergraph_product(&a, &b),
            Err(Error::Mismatch(_))
        ));
    }
}
