//! Continuous-time Glauber dynamics, syndrome-only decoders, and the
//! memory-time estimator.
//!
//! The generator is realized by uniformization: every coordinate/value pair
//! is proposed at rate 1 (total rate `n(q-1)`), and a proposal from energy
//! `E` to `E'` is accepted with probability `1/(1+e^{β(E'-E)})`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{random_classical_grid, Boundary, CodeInstance, FieldSpec, Sector};
use crate::error::{Error, Result};
use crate::fq::{Fe, Field};
use crate::linalg::{enumerate_span, for_each_word_of_weight, Echelon};
use crate::sparse::{SparseFqMatrix, SparseWord};

/// Heat-bath rate `1/(1+e^{β(E_to-E_from)})`.
pub fn rate(e_from: usize, e_to: usize, beta: f64) -> f64 {
    let de = e_to as f64 - e_from as f64;
    if de == 0.0 {
        return 0.5;
    }
    1.0 / (1.0 + (beta * de).exp())
}

/// Word, syndrome and clock of one trajectory.
#[derive(Clone, Debug)]
pub struct DynState {
    pub word: Vec<Fe>,
    pub syndrome: Vec<Fe>,
    pub energy: usize,
    pub t: f64,
    pub steps: u64,
}

impl DynState {
    pub fn new(h: &SparseFqMatrix, word: Vec<Fe>) -> Self {
        let syndrome = h.mul_dense(&word);
        let energy = syndrome.iter().filter(|v| !v.is_zero()).count();
        DynState {
            word,
            syndrome,
            energy,
            t: 0.0,
            steps: 0,
        }
    }

    pub fn zero(h: &SparseFqMatrix) -> Self {
        Self::new(h, vec![Fe::ZERO; h.cols()])
    }

    /// True iff the maintained syndrome equals a fresh `H·word`.
    pub fn is_consistent(&self, h: &SparseFqMatrix) -> bool {
        let fresh = h.mul_dense(&self.word);
        fresh == self.syndrome && self.energy == fresh.iter().filter(|v| !v.is_zero()).count()
    }
}

const CONSISTENCY_PERIOD: u64 = 1_000_000;

/// Uniformized Glauber chain for one parity-check matrix.
#[derive(Clone, Debug)]
pub struct Glauber<'a> {
    h: &'a SparseFqMatrix,
    beta: f64,
    /// Acceptance by energy change, offset by `max_delta`.
    accept: Vec<f64>,
    max_delta: usize,
    total_rate: f64,
}

impl<'a> Glauber<'a> {
    pub fn new(h: &'a SparseFqMatrix, beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::Invalid(format!("β must be ≥ 0, got {beta}")));
        }
        let max_delta = h.max_col_weight();
        let accept = (0..=2 * max_delta)
            .map(|k| {
                let de = k as isize - max_delta as isize;
                if de >= 0 {
                    rate(0, de as usize, beta)
                } else {
                    rate((-de) as usize, 0, beta)
                }
            })
            .collect();
        let q = h.field().order() as f64;
        Ok(Glauber {
            h,
            beta,
            accept,
            max_delta,
            total_rate: h.cols() as f64 * (q - 1.0),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// One uniformized event: advance the clock and maybe apply a move.
    /// Returns true when the move was accepted.
    pub fn step<R: Rng + ?Sized>(&self, st: &mut DynState, rng: &mut R) -> bool {
        let dt = -(1.0 - rng.gen::<f64>()).ln() / self.total_rate;
        st.t += dt;
        self.propose(st, rng)
    }

    fn propose<R: Rng + ?Sized>(&self, st: &mut DynState, rng: &mut R) -> bool {
        let field = self.h.field();
        let n = self.h.cols();
        let i = rng.gen_range(0..n);
        let q = field.order();
        let old = st.word[i];
        // uniform among the q-1 other values
        let mut r = rng.gen_range(0..q - 1) as u16;
        if r >= old.0 {
            r += 1;
        }
        let v = Fe(r);
        let delta = field.sub(v, old);
        let col = self.h.col(i);
        let mut de: isize = 0;
        for &(row, a) in col {
            let s = st.syndrome[row];
            let ns = field.add(s, field.mul(delta, a));
            de += (!ns.is_zero()) as isize - (!s.is_zero()) as isize;
        }
        st.steps += 1;
        let p = self.accept[(de + self.max_delta as isize) as usize];
        let accepted = p >= 1.0 || rng.gen::<f64>() < p;
        if accepted {
            for &(row, a) in col {
                st.syndrome[row] = field.add(st.syndrome[row], field.mul(delta, a));
            }
            st.word[i] = v;
            st.energy = (st.energy as isize + de) as usize;
        }
        if st.steps.is_multiple_of(CONSISTENCY_PERIOD) {
            assert!(
                st.is_consistent(self.h),
                "incremental syndrome drifted from H·word"
            );
        }
        accepted
    }

    /// Run until the clock reaches `t`; the state is the one occupied at `t`
    /// (the pending exponential holding time is redrawn afterwards, which is
    /// exact by memorylessness).
    pub fn run_until<R: Rng + ?Sized>(&self, st: &mut DynState, t: f64, rng: &mut R) {
        loop {
            let dt = -(1.0 - rng.gen::<f64>()).ln() / self.total_rate;
            if st.t + dt > t {
                st.t = t;
                return;
            }
            st.t += dt;
            self.propose(st, rng);
        }
    }
}

/// Decoder selection. Every decoder reads the syndrome only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecoderSpec {
    /// Minimum-weight solution over the whole coset `e0 + ker H`; `budget`
    /// caps `q^dim ker H`.
    BruteForce {
        #[serde(default = "default_brute_budget")]
        budget: u64,
    },
    /// Table of minimum-weight corrections for |e| ≤ w_max.
    Lookup { w_max: usize },
    /// Repeated best single-coordinate change; lowest index wins ties.
    Greedy {
        #[serde(default = "default_rounds")]
        max_rounds: usize,
    },
}

fn default_brute_budget() -> u64 {
    1 << 16
}

fn default_rounds() -> usize {
    10_000
}

impl DecoderSpec {
    pub fn label(&self) -> String {
        match self {
            DecoderSpec::BruteForce { budget } => format!("brute-force(budget={budget})"),
            DecoderSpec::Lookup { w_max } => format!("lookup(w_max={w_max})"),
            DecoderSpec::Greedy { max_rounds } => format!("greedy(max_rounds={max_rounds})"),
        }
    }
}

/// A decoder prepared for one check matrix.
#[derive(Clone, Debug)]
pub enum Decoder {
    BruteForce {
        h: SparseFqMatrix,
        echelon: Echelon,
        kernel: Vec<SparseWord>,
    },
    Lookup {
        h: SparseFqMatrix,
        table: HashMap<Vec<(usize, u16)>, SparseWord>,
    },
    Greedy {
        h: SparseFqMatrix,
        max_rounds: usize,
    },
}

fn syndrome_key(s: &[Fe]) -> Vec<(usize, u16)> {
    s.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (i, v.0))
        .collect()
}

impl Decoder {
    pub fn build(spec: &DecoderSpec, h: &SparseFqMatrix) -> Result<Decoder> {
        match spec {
            DecoderSpec::BruteForce { budget } => {
                let echelon = Echelon::with_history(h);
                let kernel = echelon.kernel_basis();
                let size = (h.field().order() as u64).checked_pow(kernel.len() as u32);
                if size.is_none_or(|s| s > *budget) {
                    return Err(Error::Budget(format!(
                        "brute-force decoding enumerates q^{} coset elements, budget {budget}",
                        kernel.len()
                    )));
                }
                Ok(Decoder::BruteForce {
                    h: h.clone(),
                    echelon,
                    kernel,
                })
            }
            DecoderSpec::Lookup { w_max } => {
                let mut table = HashMap::new();
                table.insert(
                    syndrome_key(&vec![Fe::ZERO; h.rows()]),
                    SparseWord::zero(h.cols()),
                );
                for w in 1..=*w_max {
                    for_each_word_of_weight(h.field(), h.cols(), w, |word| {
                        let s = h.mul_dense(&word.to_dense());
                        table
                            .entry(syndrome_key(&s))
                            .or_insert_with(|| word.clone());
                        true
                    });
                }
                Ok(Decoder::Lookup {
                    h: h.clone(),
                    table,
                })
            }
            DecoderSpec::Greedy { max_rounds } => Ok(Decoder::Greedy {
                h: h.clone(),
                max_rounds: *max_rounds,
            }),
        }
    }

    /// A correction `e` with `H e = s`, or `None` on failure.
    pub fn decode(&self, s: &[Fe]) -> Option<Vec<Fe>> {
        match self {
            Decoder::BruteForce { h, echelon, kernel } => {
                let field = h.field();
                let e0 = echelon.solve(s)?;
                let mut best = e0.iter().filter(|v| !v.is_zero()).count();
                let mut best_word = e0.clone();
                enumerate_span(field, e0.len(), kernel, |k, _| {
                    let w = e0
                        .iter()
                        .zip(k)
                        .filter(|(a, b)| !field.add(**a, **b).is_zero())
                        .count();
                    if w < best {
                        best = w;
                        best_word = e0.iter().zip(k).map(|(a, b)| field.add(*a, *b)).collect();
                    }
                    true
                });
                Some(best_word)
            }
            Decoder::Lookup { h, table } => table.get(&syndrome_key(s)).map(|w| {
                debug_assert_eq!(w.len(), h.cols());
                w.to_dense()
            }),
            Decoder::Greedy { h, max_rounds } => greedy_decode(h, s, *max_rounds),
        }
    }
}

fn greedy_decode(h: &SparseFqMatrix, s: &[Fe], max_rounds: usize) -> Option<Vec<Fe>> {
    let field = h.field();
    // residual r = s - H e
    let mut r = s.to_vec();
    let mut weight = r.iter().filter(|v| !v.is_zero()).count();
    let mut e = vec![Fe::ZERO; h.cols()];
    for _ in 0..max_rounds {
        if weight == 0 {
            return Some(e);
        }
        let mut cands: Vec<usize> = r
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .flat_map(|(row, _)| h.row(row).iter().map(|&(c, _)| c))
            .collect();
        cands.sort_unstable();
        cands.dedup();
        let mut best: Option<(isize, usize, Fe)> = None;
        for &i in &cands {
            for a in field.nonzero_elements() {
                // e_i += a changes r by -a·H_{·i}
                let mut d = 0isize;
                for &(row, hv) in h.col(i) {
                    let old = r[row];
                    let new = field.sub(old, field.mul(a, hv));
                    d += (!new.is_zero()) as isize - (!old.is_zero()) as isize;
                }
                if d < 0 && best.is_none_or(|b| d < b.0) {
                    best = Some((d, i, a));
                }
            }
        }
        let (d, i, a) = best?;
        for &(row, hv) in h.col(i) {
            r[row] = field.sub(r[row], field.mul(a, hv));
        }
        e[i] = field.add(e[i], a);
        weight = (weight as isize + d) as usize;
    }
    (weight == 0).then_some(e)
}

/// Checkpoint times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    Geometric { t0: f64, ratio: f64, count: usize },
    Linear { dt: f64, count: usize },
    Explicit { times: Vec<f64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric {
            t0: 1.0,
            ratio: 2.0,
            count: 16,
        }
    }
}

impl Schedule {
    pub fn times(&self) -> Result<Vec<f64>> {
        let times: Vec<f64> = match self {
            Schedule::Geometric { t0, ratio, count } => {
                if *t0 <= 0.0 || *ratio <= 1.0 {
                    return Err(Error::Invalid(
                        "geometric schedule needs t0 > 0 and ratio > 1".into(),
                    ));
                }
                (0..*count).map(|k| t0 * ratio.powi(k as i32)).collect()
            }
            Schedule::Linear { dt, count } => {
                if *dt <= 0.0 {
                    return Err(Error::Invalid("linear schedule needs dt > 0".into()));
                }
                (1..=*count).map(|k| dt * k as f64).collect()
            }
            Schedule::Explicit { times } => times.clone(),
        };
        if times.is_empty() {
            return Err(Error::Invalid("empty checkpoint schedule".into()));
        }
        if times[0] <= 0.0
            || times.windows(2).any(|w| w[1] <= w[0])
            || times.iter().any(|t| !t.is_finite())
        {
            return Err(Error::Invalid(
                "checkpoints must be positive, finite and increasing".into(),
            ));
        }
        Ok(times)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlauberParams {
    pub beta: f64,
    #[serde(default)]
    pub schedule: Schedule,
    pub seed: u64,
    pub trajectories: usize,
}

impl GlauberParams {
    pub fn validate(&self) -> Result<Vec<f64>> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::Invalid(format!("β must be ≥ 0, got {}", self.beta)));
        }
        if self.trajectories == 0 {
            return Err(Error::Invalid("at least one trajectory is required".into()));
        }
        self.schedule.times()
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub const Z95: f64 = 1.959_963_984_540_054;
pub const SUCCESS_THRESHOLD: f64 = 2.0 / 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub trajectory: usize,
    pub checkpoint: usize,
    pub t: f64,
    pub energy: usize,
    pub decoded: bool,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub successes: usize,
    pub trials: usize,
    pub p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_energy: f64,
    pub decoder_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryTimeEstimate {
    pub family: String,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub n: usize,
    pub sector: Sector,
    pub beta: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub decoder: String,
    pub curve: Vec<CheckpointStat>,
    /// Largest checkpoint with point estimate ≥ 2/3 (0 when none).
    pub t_mem: f64,
    /// Same rule applied to the Wilson lower bound.
    pub t_mem_conservative: f64,
    /// Same rule applied to the Wilson upper bound.
    pub t_mem_optimistic: f64,
    /// The last checkpoint still meets the threshold: T_mem ≥ horizon.
    pub censored: bool,
}

impl MemoryTimeEstimate {
    /// [conservative, optimistic] range for T_mem.
    pub fn ci(&self) -> (f64, f64) {
        (self.t_mem_conservative, self.t_mem_optimistic)
    }

    pub fn curve_csv(&self) -> String {
        let mut out =
            String::from("t,successes,trials,p,ci_lo,ci_hi,mean_energy,decoder_failures\n");
        for c in &self.curve {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                c.t,
                c.successes,
                c.trials,
                c.p,
                c.ci_lo,
                c.ci_hi,
                c.mean_energy,
                c.decoder_failures
            ));
        }
        out
    }
}

fn last_at_least(curve: &[CheckpointStat], value: impl Fn(&CheckpointStat) -> f64) -> f64 {
    curve
        .iter()
        .rev()
        .find(|c| value(c) >= SUCCESS_THRESHOLD)
        .map_or(0.0, |c| c.t)
}

/// Full output of a memory-time run.
#[derive(Clone, Debug)]
pub struct MemoryTimeRun {
    pub estimate: MemoryTimeEstimate,
    pub records: Vec<TrajectoryRecord>,
}

/// Residual after decoding a snapshot is trivial?
struct SuccessTest {
    stab: Option<Echelon>,
}

impl SuccessTest {
    fn trivial(&self, r: &[Fe]) -> bool {
        match &self.stab {
            None => r.iter().all(|v| v.is_zero()),
            Some(e) => e.contains(&SparseWord::from_dense(r)),
        }
    }
}

/// Runs `N` trajectories from the zero word and decodes snapshots at each
/// checkpoint. Trajectory `i` uses stream `i` of a ChaCha8 generator seeded
/// with the master seed, so results do not depend on the worker count.
pub fn estimate_memory_time(
    inst: &CodeInstance,
    sector: Sector,
    params: &GlauberParams,
    decoder: &DecoderSpec,
) -> Result<MemoryTimeRun> {
    let times = params.validate()?;
    let h = inst.sector_matrix(sector)?;
    let dec = Decoder::build(decoder, h)?;
    let glauber = Glauber::new(h, params.beta)?;
    let test = SuccessTest {
        stab: inst.stabilizer_matrix(sector)?.map(Echelon::new),
    };
    let field = inst.field().clone();
    let per_traj: Vec<Vec<TrajectoryRecord>> = (0..params.trajectories)
        .into_par_iter()
        .map(|traj| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(traj as u64);
            let mut st = DynState::zero(h);
            times
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    glauber.run_until(&mut st, t, &mut rng);
                    let (decoded, success) = match dec.decode(&st.syndrome) {
                        Some(e) => {
                            let r: Vec<Fe> = st
                                .word
                                .iter()
                                .zip(&e)
                                .map(|(a, b)| field.sub(*a, *b))
                                .collect();
                            (true, test.trivial(&r))
                        }
                        None => (false, false),
                    };
                    TrajectoryRecord {
                        trajectory: traj,
                        checkpoint: k,
                        t,
                        energy: st.energy,
                        decoded,
                        success,
                    }
                })
                .collect()
        })
        .collect();
    let n_traj = params.trajectories;
    let curve: Vec<CheckpointStat> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let recs = per_traj.iter().map(|r| &r[k]);
            let successes = recs.clone().filter(|r| r.success).count();
            let failures = recs.clone().filter(|r| !r.decoded).count();
            let mean_energy = recs.map(|r| r.energy as f64).sum::<f64>() / n_traj as f64;
            let (lo, hi) = wilson_interval(successes, n_traj, Z95);
            CheckpointStat {
                t,
                successes,
                trials: n_traj,
                p: successes as f64 / n_traj as f64,
                ci_lo: lo,
                ci_hi: hi,
                mean_energy,
                decoder_failures: failures,
            }
        })
        .collect();
    let censored = curve.last().is_some_and(|c| c.p >= SUCCESS_THRESHOLD);
    let estimate = MemoryTimeEstimate {
        family: inst.provenance().family.clone(),
        l: inst.provenance().l.clone(),
        n: inst.n(),
        sector,
        beta: params.beta,
        trajectories: n_traj,
        seed: params.seed,
        decoder: decoder.label(),
        t_mem: last_at_least(&curve, |c| c.p),
        t_mem_conservative: last_at_least(&curve, |c| c.ci_lo),
        t_mem_optimistic: last_at_least(&curve, |c| c.ci_hi),
        censored,
        curve,
    };
    Ok(MemoryTimeRun {
        estimate,
        records: per_traj.into_iter().flatten().collect(),
    })
}

/// Memory-time sweep over random classical grid codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Code specs to compare; each is instantiated on every L.
    pub codes: Vec<SweepCode>,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub betas: Vec<f64>,
    pub trajectories: usize,
    pub decoder: DecoderSpec,
    #[serde(default)]
    pub schedule: Schedule,
    pub seed: u64,
    #[serde(default = "torus")]
    pub boundary: Boundary,
}

fn torus() -> Boundary {
    Boundary::Torus
}

/// A code in a sweep: an explicit spec or a random `m×m` grid code drawn from
/// `code_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepCode {
    Random {
        label: String,
        m: usize,
        field: FieldSpec,
        code_seed: u64,
    },
    Spec {
        label: String,
        spec: crate::codes::CodeSpec,
    },
}

impl SweepCode {
    pub fn label(&self) -> &str {
        match self {
            SweepCode::Random { label, .. } | SweepCode::Spec { label, .. } => label,
        }
    }

    pub fn build(&self) -> Result<crate::codes::TransInvCode> {
        match self {
            SweepCode::Random {
                m,
                field,
                code_seed,
                ..
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*code_seed);
                random_classical_grid(*m, &field.build()?, &mut rng)
            }
            SweepCode::Spec { spec, .. } => spec.build(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.codes.is_empty() || self.l.is_empty() || self.betas.is_empty() {
            return Err(Error::Invalid(
                "sweep needs codes, L values and β values".into(),
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::Invalid("at least one trajectory is required".into()));
        }
        if self.betas.iter().any(|b| b.is_nan() || *b < 0.0) {
            return Err(Error::Invalid("β values must be ≥ 0".into()));
        }
        self.schedule.times()?;
        Ok(())
    }
}

/// Least-squares line `y = a + b x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope (NaN with fewer than three points).
    pub slope_se: f64,
    pub r2: f64,
    pub rss: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let tss: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope_se = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Some(LineFit {
        intercept,
        slope,
        slope_se,
        r2,
        rss,
        points: n,
    })
}

/// Scaling diagnostics for one (code, β) series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub code: String,
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub t_mem: Vec<f64>,
    pub t_mem_ci: Vec<(f64, f64)>,
    /// log T_mem = a + b L.
    pub exponential: Option<LineFit>,
    /// log T_mem = a + b log L.
    pub polynomial: Option<LineFit>,
    /// Range of the exponential slope over the T_mem CI endpoints.
    pub exponential_slope_range: Option<(f64, f64)>,
    pub polynomial_slope_range: Option<(f64, f64)>,
    /// "exponential", "polynomial" or "undetermined" (smaller RSS, with a
    /// censored or zero T_mem forcing "undetermined").
    pub preferred: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub code: String,
    pub k: usize,
    pub estimate: MemoryTimeEstimate,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub fits: Vec<ScalingFit>,
    pub records: Vec<(String, usize, f64, Vec<TrajectoryRecord>)>,
}

fn scaling_fit(code: &str, beta: f64, points: &[(usize, &MemoryTimeEstimate)]) -> ScalingFit {
    let l: Vec<usize> = points.iter().map(|p| p.0).collect();
    let t: Vec<f64> = points.iter().map(|p| p.1.t_mem).collect();
    let ci: Vec<(f64, f64)> = points.iter().map(|p| p.1.ci()).collect();
    let usable = t.iter().all(|&x| x > 0.0);
    let xl: Vec<f64> = l.iter().map(|&x| x as f64).collect();
    let xlog: Vec<f64> = xl.iter().map(|x| x.ln()).collect();
    let logs = |v: &[f64]| -> Option<Vec<f64>> {
        v.iter()
            .all(|&x| x > 0.0)
            .then(|| v.iter().map(|x| x.ln()).collect())
    };
    let (exponential, polynomial) = match logs(&t) {
        Some(y) => (fit_line(&xl, &y), fit_line(&xlog, &y)),
        None => (None, None),
    };
    let range = |xs: &[f64]| -> Option<(f64, f64)> {
        // steepest: low at the smallest L, high at the largest; flattest: the reverse
        let lo: Vec<f64> = ci.iter().map(|c| c.0).collect();
        let hi: Vec<f64> = ci.iter().map(|c| c.1).collect();
        let k = xs.len();
        let mut a = lo.clone();
        let mut b = hi.clone();
        if k >= 2 {
            a[k - 1] = hi[k - 1];
            b[k - 1] = lo[k - 1];
            a[0] = lo[0];
            b[0] = hi[0];
        }
        let fa = fit_line(xs, &logs(&a)?)?;
        let fb = fit_line(xs, &logs(&b)?)?;
        Some((fa.slope.min(fb.slope), fa.slope.max(fb.slope)))
    };
    let censored = points.iter().any(|p| p.1.censored);
    let preferred = match (&exponential, &polynomial) {
        (Some(e), Some(p)) if usable && !censored => {
            if e.rss < p.rss {
                "exponential"
            } else if p.rss < e.rss {
                "polynomial"
            } else {
                "undetermined"
            }
        }
        _ => "undetermined",
    };
    ScalingFit {
        code: code.to_string(),
        beta,
        l,
        t_mem: t,
        t_mem_ci: ci.clone(),
        exponential_slope_range: range(&xl),
        polynomial_slope_range: range(&xlog),
        exponential,
        polynomial,
        preferred: preferred.to_string(),
    }
}

/// Memory-time estimates for every (code, L, β) plus scaling fits of
/// log T_mem against L and log L. Run seeds are derived from the master seed
/// and the grid position, so any subset of the grid reproduces.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut entries = Vec::new();
    let mut records = Vec::new();
    for (ci, code) in config.codes.iter().enumerate() {
        let tic = code.build()?;
        if tic.kind() != crate::codes::CodeKind::Classical {
            return Err(Error::Invalid(format!(
                "sweep code '{}' must be classical",
                code.label()
            )));
        }
        for (li, &l) in config.l.iter().enumerate() {
            let inst = tic.instantiate(&[l], config.boundary)?;
            let k = crate::linalg::dimension(&inst);
            for (bi, &beta) in config.betas.iter().enumerate() {
                let seed = derive_seed(config.seed, &[ci as u64, li as u64, bi as u64]);
                let params = GlauberParams {
                    beta,
                    schedule: config.schedule.clone(),
                    seed,
                    trajectories: config.trajectories,
                };
                let run = estimate_memory_time(&inst, Sector::Classical, &params, &config.decoder)?;
                records.push((code.label().to_string(), l, beta, run.records));
                entries.push(SweepEntry {
                    code: code.label().to_string(),
                    k,
                    estimate: run.estimate,
                });
            }
        }
    }
    let mut fits = Vec::new();
    for code in &config.codes {
        for &beta in &config.betas {
            let pts: Vec<(usize, &MemoryTimeEstimate)> = entries
                .iter()
                .filter(|e| e.code == code.label() && e.estimate.beta == beta)
                .map(|e| (e.estimate.l[0], &e.estimate))
                .collect();
            let mut fit = scaling_fit(code.label(), beta, &pts);
            // without logical information every snapshot decodes to zero
            if entries.iter().any(|e| e.code == code.label() && e.k == 0) {
                fit.preferred = "undetermined (k=0 at some L)".into();
            }
            fits.push(fit);
        }
    }
    Ok(SweepResult {
        entries,
        fits,
        records,
    })
}

/// SplitMix64 mixing of a master seed with a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut x = master;
    for &p in path {
        x = x
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(p.wrapping_mul(0xD1B5_4A32_D192_ED03));
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

/// Exact Gibbs distribution `e^{-β|Hc|}/Z` over all q^n words (small n).
pub fn gibbs_distribution(h: &SparseFqMatrix, beta: f64) -> Result<Vec<f64>> {
    let q = h.field().order() as u64;
    let n = h.cols();
    let total = q
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 22)
        .ok_or_else(|| Error::Budget("Gibbs enumeration limited to 2^22 states".into()))?;
    let weights: Vec<f64> = (0..total)
        .map(|code| {
            let w = index_to_word(code, n, q);
            let e = h.mul_dense(&w).iter().filter(|v| !v.is_zero()).count();
            (-beta * e as f64).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Base-q digits of `code`, least significant first.
pub fn index_to_word(code: u64, n: usize, q: u64) -> Vec<Fe> {
    let mut x = code;
    (0..n)
        .map(|_| {
            let d = (x % q) as u16;
            x /= q;
            Fe(d)
        })
        .collect()
}

pub fn word_to_index(w: &[Fe], q: u64) -> u64 {
    w.iter().rev().fold(0, |acc, v| acc * q + v.0 as u64)
}

/// Time-weighted occupancy of each state along one long trajectory.
pub fn empirical_distribution(
    h: &SparseFqMatrix,
    beta: f64,
    horizon: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let q = h.field().order() as u64;
    let total = q.pow(h.cols() as u32) as usize;
    let g = Glauber::new(h, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = DynState::zero(h);
    let mut occ = vec![0.0; total];
    while st.t < horizon {
        let idx = word_to_index(&st.word, q) as usize;
        let before = st.t;
        g.step(&mut st, &mut rng);
        occ[idx] += st.t.min(horizon) - before;
    }
    let s: f64 = occ.iter().sum();
    Ok(occ.into_iter().map(|x| x / s).collect())
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

#[doc(hidden)]
pub fn field_of(h: &SparseFqMatrix) -> &Field {
    h.field()
}
