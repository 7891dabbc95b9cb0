use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqm_core::barrier::{
    barrier_exact, barrier_heuristic, expansion_check, fractal_walk, fractal_word,
    quantum_expansion_check, ExpansionMode, ExpansionReport, HeuristicParams,
};
use sqm_core::codes::{
    css_product, Boundary, CodeInstance, CodeSpec, FieldSpec, Sector, TransInvCode,
};
use sqm_core::dynamics::{
    estimate_memory_time, run_sweep, DecoderSpec, GlauberParams, MemoryTimeEstimate, Schedule,
    SweepConfig, TrajectoryRecord,
};
use sqm_core::linalg::{dimension, distance, DistanceMode};
use sqm_core::{Error, LaurentPoly, PolyMatrix};

use crate::failure::{Failure, Stage};
use crate::output::{BudgetUse, OutDir};
use crate::svg::{success_curves, Series};

pub const DEFAULT_BUDGET: u64 = 1 << 22;

/// Shared run context handed to every command.
pub struct Ctx {
    pub base_dir: PathBuf,
    pub budget: Option<u64>,
    pub svg: bool,
    pub out: OutDir,
    pub seeds: Vec<u64>,
    pub budgets: Vec<BudgetUse>,
    pub stdout: String,
}

impl Ctx {
    fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    fn budget_or(&self, configured: Option<u64>) -> u64 {
        self.budget.or(configured).unwrap_or(DEFAULT_BUDGET)
    }
}

/// A code given inline or as a path to a spec file (relative to the config).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    File(String),
    Spec(CodeSpec),
}

impl CodeRef {
    fn resolve(&self, base: &Path) -> Result<CodeSpec, Failure> {
        match self {
            CodeRef::Spec(s) => Ok(s.clone()),
            CodeRef::File(p) => {
                let text = std::fs::read_to_string(base.join(p)).map_err(|e| {
                    Failure::validation("config", format!("cannot read code file '{p}': {e}"))
                })?;
                CodeSpec::from_json(&text).stage("config")
            }
        }
    }
}

fn torus() -> Boundary {
    Boundary::Torus
}

fn required_seed(seed: Option<u64>, what: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| {
        Failure::validation(
            "config",
            format!("{what} is stochastic and needs an explicit seed"),
        )
    })
}

fn instance(code: &TransInvCode, l: &[usize], boundary: Boundary) -> Result<CodeInstance, Failure> {
    code.instantiate(l, boundary).stage("instantiate")
}

/// Spec plus optional lattice sizes. A bare spec is accepted too.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub code: CodeRef,
    #[serde(rename = "L", default)]
    pub l: Vec<usize>,
    #[serde(default = "torus")]
    pub boundary: Boundary,
}

pub fn parse_build_config(value: serde_json::Value) -> Result<BuildConfig, Failure> {
    if value.get("code").is_some() {
        serde_json::from_value(value).stage("config")
    } else {
        let spec: CodeSpec = serde_json::from_value(value).stage("config")?;
        Ok(BuildConfig {
            code: CodeRef::Spec(spec),
            l: Vec::new(),
            boundary: Boundary::Torus,
        })
    }
}

fn write_instance(ctx: &mut Ctx, inst: &CodeInstance, tag: &str) -> Result<(), Failure> {
    match inst.quantum_matrices() {
        Ok((hx, hz)) => {
            ctx.out.write(&format!("h_x{tag}.txt"), hx.to_text())?;
            ctx.out.write(&format!("h_z{tag}.txt"), hz.to_text())?;
        }
        Err(_) => {
            let h = inst.classical_matrix().stage("build")?;
            ctx.out.write(&format!("h{tag}.txt"), h.to_text())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct InstanceSummary {
    family: String,
    #[serde(rename = "L")]
    l: Vec<usize>,
    boundary: Boundary,
    n: usize,
    checks: Vec<usize>,
}

pub fn cmd_build(ctx: &mut Ctx, cfg: &BuildConfig) -> Result<(), Failure> {
    let spec = cfg.code.resolve(&ctx.base_dir)?;
    let code = spec.build().stage("build")?;
    ctx.out
        .write("spec.json", format!("{}\n", code.to_spec().to_json()))?;
    ctx.say(format!(
        "family {} over F_{} in D={}",
        code.family(),
        code.field().order(),
        code.dim()
    ));
    if !cfg.l.is_empty() {
        let inst = instance(&code, &cfg.l, cfg.boundary)?;
        let checks = inst
            .sectors()
            .iter()
            .map(|&s| inst.sector_matrix(s).map(|m| m.rows()))
            .collect::<Result<_, _>>()
            .stage("build")?;
        let summary = InstanceSummary {
            family: code.family().to_string(),
            l: inst.provenance().l.clone(),
            boundary: cfg.boundary,
            n: inst.n(),
            checks,
        };
        ctx.out.write_json("instance.json", &summary)?;
        write_instance(ctx, &inst, "")?;
        ctx.say(format!("instance L={:?} n={}", summary.l, summary.n));
    }
    Ok(())
}

#[derive(Serialize)]
pub struct ValidateReport {
    pub family: String,
    pub quantum: bool,
    pub valid: bool,
    /// Nonzero entries of conj(h_X)^T h_Z as (row, column, polynomial).
    pub violations: Vec<(usize, usize, String)>,
    /// Instantiated checks: (L, number of nonzero entries of H_X H_Z^T).
    pub instances: Vec<(Vec<usize>, usize)>,
}

/// Returns whether the code is valid; the caller turns `false` into exit 1.
pub fn cmd_validate(ctx: &mut Ctx, cfg: &BuildConfig) -> Result<bool, Failure> {
    let spec = cfg.code.resolve(&ctx.base_dir)?;
    let css = match &spec {
        CodeSpec::Quantum {
            field,
            dim,
            h_x,
            h_z,
            ..
        } => {
            let f = field.build().stage("validate")?;
            let hx = PolyMatrix::parse(h_x, &f, *dim).stage("validate")?;
            let hz = PolyMatrix::parse(h_z, &f, *dim).stage("validate")?;
            Some(css_product(&hx, &hz).stage("validate")?)
        }
        _ => None,
    };
    let mut report = ValidateReport {
        family: String::new(),
        quantum: false,
        valid: true,
        violations: Vec::new(),
        instances: Vec::new(),
    };
    if let Some(r) = css.as_ref().filter(|r| !r.is_valid()) {
        report.family = "quantum".into();
        report.quantum = true;
        report.valid = false;
        report.violations = r.violations.clone();
    } else {
        let code = spec.build().stage("build")?;
        report.family = code.family().to_string();
        report.quantum = code.kind() == sqm_core::codes::CodeKind::Quantum;
        if report.quantum {
            let r = code.validate_css().stage("validate")?;
            report.valid = r.is_valid();
            report.violations = r.violations;
            for &l in &cfg.l {
                let inst = instance(&code, &[l], cfg.boundary)?;
                let (hx, hz) = inst.quantum_matrices().stage("validate")?;
                let nnz = hx.mul(&hz.transpose()).stage("validate")?.nnz();
                report.valid &= nnz == 0;
                report.instances.push((inst.provenance().l.clone(), nnz));
            }
        }
    }
    ctx.out.write_json("validate.json", &report)?;
    if !report.quantum {
        ctx.say("CSS: not applicable (classical code)");
    } else if report.valid {
        ctx.say("CSS: valid");
    } else {
        ctx.say(format!(
            "CSS: invalid ({} symbolic violations, instances {:?})",
            report.violations.len(),
            report.instances
        ));
    }
    Ok(report.valid)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistanceCfg {
    #[default]
    Exact,
    Estimate {
        trials: usize,
    },
    Skip,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierCfg {
    #[default]
    Exact,
    /// Exact, falling back to the heuristic upper bound on budget exhaustion.
    Auto,
    Heuristic,
    Skip,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub code: CodeRef,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(default = "torus")]
    pub boundary: Boundary,
    #[serde(default)]
    pub distance: DistanceCfg,
    #[serde(default)]
    pub barrier: BarrierCfg,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorBarrier {
    pub sector: Sector,
    pub value: Option<usize>,
    pub method: String,
    pub visited: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamsRow {
    pub family: String,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub boundary: Boundary,
    pub n: usize,
    pub k: usize,
    pub d: Option<usize>,
    pub d_method: String,
    #[serde(rename = "E")]
    pub e: Option<usize>,
    #[serde(rename = "E_method")]
    pub e_method: String,
    pub barriers: Vec<SectorBarrier>,
    pub budget: u64,
    pub seed: Option<u64>,
}

fn opt(v: Option<usize>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

pub fn cmd_params(ctx: &mut Ctx, cfg: &ParamsConfig) -> Result<Vec<ParamsRow>, Failure> {
    let budget = ctx.budget_or(cfg.budget);
    let stochastic = matches!(cfg.distance, DistanceCfg::Estimate { .. })
        || matches!(cfg.barrier, BarrierCfg::Auto | BarrierCfg::Heuristic);
    let seed = if stochastic {
        Some(required_seed(cfg.seed, "estimate/heuristic mode")?)
    } else {
        cfg.seed
    };
    if let Some(s) = seed {
        ctx.seeds.push(s);
    }
    if cfg.l.is_empty() {
        return Err(Failure::validation("config", "params needs at least one L"));
    }
    let code = cfg.code.resolve(&ctx.base_dir)?.build().stage("build")?;
    let mut rows = Vec::new();
    for &l in &cfg.l {
        let inst = instance(&code, &[l], cfg.boundary)?;
        let k = dimension(&inst);
        let (d, d_method) = match &cfg.distance {
            DistanceCfg::Skip => (None, "skipped".to_string()),
            DistanceCfg::Exact => {
                let r = distance(&inst, DistanceMode::Exact, budget).stage("distance")?;
                let visited = r.sectors.iter().map(|s| s.visited).sum();
                ctx.budgets.push(BudgetUse {
                    operation: format!("distance L={l}"),
                    visited,
                    budget,
                });
                (r.distance, "exact".to_string())
            }
            DistanceCfg::Estimate { trials } => {
                let mode = DistanceMode::Estimate {
                    trials: *trials,
                    seed: seed.unwrap_or(0),
                };
                let r = distance(&inst, mode, budget).stage("distance")?;
                (r.distance, format!("estimate(trials={trials})"))
            }
        };
        let mut barriers = Vec::new();
        if cfg.barrier != BarrierCfg::Skip && k > 0 {
            for sector in inst.sectors() {
                let exact = match cfg.barrier {
                    BarrierCfg::Exact | BarrierCfg::Auto => {
                        Some(barrier_exact(&inst, sector, budget))
                    }
                    _ => None,
                };
                let result = match exact {
                    Some(Err(Error::Budget(_))) if cfg.barrier == BarrierCfg::Auto => None,
                    Some(r) => Some(r.stage("barrier")?),
                    None => None,
                };
                let sb = match result {
                    Some(r) => {
                        ctx.budgets.push(BudgetUse {
                            operation: format!("barrier {sector} L={l}"),
                            visited: r.visited,
                            budget,
                        });
                        SectorBarrier {
                            sector,
                            value: Some(r.value),
                            method: "exact".into(),
                            visited: r.visited,
                        }
                    }
                    None => {
                        let params = HeuristicParams {
                            seed: seed.unwrap_or(0),
                            ..HeuristicParams::default()
                        };
                        let r = barrier_heuristic(&inst, sector, &params).stage("barrier")?;
                        SectorBarrier {
                            sector,
                            value: Some(r.value),
                            method: "heuristic-upper-bound".into(),
                            visited: r.visited,
                        }
                    }
                };
                barriers.push(sb);
            }
        }
        let e = barriers.iter().filter_map(|b| b.value).min();
        let e_method = if barriers.is_empty() {
            if k == 0 { "no-logicals" } else { "skipped" }.to_string()
        } else if barriers.iter().all(|b| b.method == "exact") {
            "exact".into()
        } else {
            "heuristic-upper-bound".into()
        };
        let row = ParamsRow {
            family: code.family().to_string(),
            l: inst.provenance().l.clone(),
            boundary: cfg.boundary,
            n: inst.n(),
            k,
            d,
            d_method,
            e,
            e_method,
            barriers,
            budget,
            seed,
        };
        ctx.say(format!(
            "{} L={:?}: n={} k={} d={} ({}) E={} ({})",
            row.family,
            row.l,
            row.n,
            row.k,
            opt(row.d),
            row.d_method,
            opt(row.e),
            row.e_method
        ));
        rows.push(row);
    }
    let mut csv = String::from("family,L,boundary,n,k,d,d_method,E,E_method,budget,seed\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.l.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            serde_json::to_value(r.boundary)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            r.n,
            r.k,
            opt(r.d),
            r.d_method,
            opt(r.e),
            r.e_method,
            r.budget,
            r.seed.map_or("-".into(), |s| s.to_string())
        ));
    }
    ctx.out.write_json("params.json", &rows)?;
    ctx.out.write("params.csv", csv)?;
    Ok(rows)
}

fn binary() -> FieldSpec {
    FieldSpec { p: 2, e: 1 }
}
fn default_levels() -> Vec<u32> {
    (0..=5).collect()
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractalConfig {
    pub f: String,
    #[serde(default = "binary")]
    pub field: FieldSpec,
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    /// Exponent in the ratio |syndrome| / |c|^ν.
    #[serde(default = "half")]
    pub nu: f64,
    #[serde(default = "yes")]
    pub walk: bool,
    #[serde(default)]
    pub write_walks: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FractalRow {
    pub level: u32,
    pub side: i64,
    pub a0: usize,
    pub weight: usize,
    pub a0_pow: u128,
    pub syndrome_weight: usize,
    pub ratio: f64,
    pub walk_steps: Option<usize>,
    pub walk_max_energy: Option<usize>,
    pub energy_bound: usize,
    /// weight = A_0^ℓ, syndrome weight ≤ 4 and walk energy ≤ bound.
    pub claims_hold: bool,
}

pub fn cmd_fractal(ctx: &mut Ctx, cfg: &FractalConfig) -> Result<Vec<FractalRow>, Failure> {
    let field = cfg.field.build().stage("config")?;
    let f = LaurentPoly::parse(&cfg.f, &field, 2).stage("config")?;
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        let fw = fractal_word(&f, level).stage("fractal")?;
        let a0_pow = (fw.a0 as u128).pow(level);
        let weight = fw.word.weight();
        let syn = fw.syndrome.weight();
        let (steps, max_e) = if cfg.walk {
            let w = fractal_walk(&f, level).stage("fractal walk")?;
            let prof = w.plane_energy(&f);
            if cfg.write_walks {
                let text: String = w
                    .steps
                    .iter()
                    .map(|(s, v)| format!("{} {} {}\n", s[0], s[1], v))
                    .collect();
                ctx.out.write(&format!("walk_level{level}.txt"), text)?;
            }
            (Some(w.steps.len()), Some(prof.max))
        } else {
            (None, None)
        };
        let bound = fw.energy_bound();
        let row = FractalRow {
            level,
            side: fw.side(),
            a0: fw.a0,
            weight,
            a0_pow,
            syndrome_weight: syn,
            ratio: syn as f64 / (weight as f64).powf(cfg.nu),
            walk_steps: steps,
            walk_max_energy: max_e,
            energy_bound: bound,
            claims_hold: weight as u128 == a0_pow && syn <= 4 && max_e.is_none_or(|m| m <= bound),
        };
        ctx.say(format!(
            "level {}: |c|={} (A0^l={}) |syn|={} ratio={:.4} walk max={} bound={} {}",
            row.level,
            row.weight,
            row.a0_pow,
            row.syndrome_weight,
            row.ratio,
            opt(row.walk_max_energy),
            row.energy_bound,
            if row.claims_hold { "ok" } else { "VIOLATED" }
        ));
        rows.push(row);
    }
    ctx.out.write_json("fractal.json", &rows)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExpansionCfgMode {
    Exhaustive {
        #[serde(default)]
        roots: Option<Vec<usize>>,
    },
    Stochastic {
        restarts: usize,
        steps: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub code: CodeRef,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(default = "torus")]
    pub boundary: Boundary,
    pub nu: f64,
    pub w_max: usize,
    pub search: ExpansionCfgMode,
    /// Energy sector for a classical-style check; quantum codes without a
    /// sector get the chain-complex check.
    #[serde(default)]
    pub sector: Option<Sector>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<u64>,
}

#[derive(Serialize)]
struct ExpansionOut<'a> {
    family: String,
    #[serde(rename = "L")]
    l: Vec<usize>,
    n: usize,
    reports: Vec<(&'a str, ExpansionReport)>,
    reductions_exact: Option<bool>,
}

pub fn cmd_expansion(
    ctx: &mut Ctx,
    cfg: &ExpansionConfig,
) -> Result<Vec<ExpansionReport>, Failure> {
    let code = cfg.code.resolve(&ctx.base_dir)?.build().stage("build")?;
    let inst = instance(&code, &cfg.l, cfg.boundary)?;
    let mode = match &cfg.search {
        ExpansionCfgMode::Exhaustive { roots } => ExpansionMode::Exhaustive {
            w_max: cfg.w_max,
            roots: roots.clone(),
        },
        ExpansionCfgMode::Stochastic { restarts, steps } => {
            let seed = required_seed(cfg.seed, "stochastic expansion search")?;
            ctx.seeds.push(seed);
            ExpansionMode::Stochastic {
                w_max: cfg.w_max,
                seed,
                restarts: *restarts,
                steps: *steps,
            }
        }
    };
    let mut out = ExpansionOut {
        family: code.family().to_string(),
        l: inst.provenance().l.clone(),
        n: inst.n(),
        reports: Vec::new(),
        reductions_exact: None,
    };
    if inst.is_quantum() && cfg.sector.is_none() {
        if !matches!(cfg.search, ExpansionCfgMode::Exhaustive { .. }) {
            return Err(Error::Invalid(
                "the chain-complex check is exhaustive only".into(),
            ))
            .stage("config");
        }
        let (hx, hz) = inst.quantum_matrices().stage("expansion")?;
        let budget = ctx.budget_or(cfg.budget);
        let r = quantum_expansion_check(&hz.transpose(), hx, cfg.nu, cfg.w_max, &[], budget)
            .stage("expansion")?;
        out.reductions_exact = Some(r.reductions_exact);
        out.reports.push(("coboundary", r.coboundary));
        out.reports.push(("boundary", r.boundary));
    } else {
        let sector = cfg.sector.unwrap_or(Sector::Classical);
        let h = inst.sector_matrix(sector).stage("expansion")?;
        let r = expansion_check(h, cfg.nu, &mode).stage("expansion")?;
        out.reports.push(("sector", r));
    }
    for (name, r) in &out.reports {
        ctx.say(format!(
            "{name}: lambda_min={:.6} at |c|={} |Hc|={} ({} words, {})",
            r.lambda_min,
            r.witness_weight,
            r.witness_energy,
            r.tested,
            if r.exhaustive {
                "exhaustive"
            } else {
                "upper bound"
            }
        ));
    }
    ctx.out.write_json("expansion.json", &out)?;
    Ok(out.reports.into_iter().map(|(_, r)| r).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub code: CodeRef,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(default = "torus")]
    pub boundary: Boundary,
    #[serde(default)]
    pub sectors: Option<Vec<Sector>>,
    pub beta: f64,
    #[serde(default)]
    pub schedule: Schedule,
    pub trajectories: usize,
    pub decoder: DecoderSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn curve_svg(ctx: &mut Ctx, name: &str, title: &str, series: &[Series]) -> Result<(), Failure> {
    if ctx.svg {
        ctx.out.write(name, success_curves(title, series))?;
    }
    Ok(())
}

fn describe(label: &str, e: &MemoryTimeEstimate) -> String {
    format!(
        "{} L={:?} {} beta={}: T_mem={} [{}, {}]{}",
        label,
        e.l,
        e.sector,
        e.beta,
        e.t_mem,
        e.t_mem_conservative,
        e.t_mem_optimistic,
        if e.censored {
            " (censored at horizon)"
        } else {
            ""
        }
    )
}

pub fn cmd_simulate(
    ctx: &mut Ctx,
    cfg: &SimulateConfig,
) -> Result<Vec<MemoryTimeEstimate>, Failure> {
    let seed = required_seed(cfg.seed, "simulate")?;
    ctx.seeds.push(seed);
    let code = cfg.code.resolve(&ctx.base_dir)?.build().stage("build")?;
    let inst = instance(&code, &cfg.l, cfg.boundary)?;
    let sectors = cfg.sectors.clone().unwrap_or_else(|| inst.sectors());
    let mut out = Vec::new();
    for (k, &sector) in sectors.iter().enumerate() {
        // independent streams per sector
        let params = GlauberParams {
            beta: cfg.beta,
            schedule: cfg.schedule.clone(),
            seed: sqm_core::dynamics::derive_seed(seed, &[k as u64]),
            trajectories: cfg.trajectories,
        };
        let run = estimate_memory_time(&inst, sector, &params, &cfg.decoder).stage("simulate")?;
        ctx.out
            .write_json(&format!("estimate_{sector}.json"), &run.estimate)?;
        ctx.out
            .write_jsonl(&format!("records_{sector}.jsonl"), &run.records)?;
        ctx.out
            .write(&format!("curve_{sector}.csv"), run.estimate.curve_csv())?;
        let title = format!(
            "{} L={:?} beta={}",
            run.estimate.family, run.estimate.l, cfg.beta
        );
        curve_svg(
            ctx,
            &format!("curve_{sector}.svg"),
            &title,
            &[Series {
                label: sector.to_string(),
                curve: &run.estimate.curve,
            }],
        )?;
        ctx.say(describe(&run.estimate.family, &run.estimate));
        out.push(run.estimate);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    code: &'a str,
    #[serde(rename = "L")]
    l: usize,
    beta: f64,
    #[serde(flatten)]
    record: &'a TrajectoryRecord,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("".into(), |v| format!("{v:.6}"))
}

pub fn cmd_sweep(ctx: &mut Ctx, cfg: &SweepConfig) -> Result<(), Failure> {
    ctx.seeds.push(cfg.seed);
    let res = run_sweep(cfg).stage("sweep")?;

    let mut curves =
        String::from("code,L,beta,t,successes,trials,p,ci_lo,ci_hi,mean_energy,decoder_failures\n");
    let mut tmem =
        String::from("code,L,beta,n,k,t_mem,t_mem_conservative,t_mem_optimistic,censored,seed\n");
    for e in &res.entries {
        let est = &e.estimate;
        for c in &est.curve {
            curves.push_str(&format!(
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                e.code,
                est.l[0],
                est.beta,
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
        tmem.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            e.code,
            est.l[0],
            est.beta,
            est.n,
            e.k,
            est.t_mem,
            est.t_mem_conservative,
            est.t_mem_optimistic,
            est.censored,
            est.seed
        ));
        ctx.say(format!("{} k={}", describe(&e.code, est), e.k));
    }
    let mut fits = String::from(
        "code,beta,model,slope,slope_se,intercept,r2,rss,slope_range_lo,slope_range_hi,preferred\n",
    );
    for f in &res.fits {
        for (model, fit, range) in [
            ("exponential", &f.exponential, f.exponential_slope_range),
            ("polynomial", &f.polynomial, f.polynomial_slope_range),
        ] {
            fits.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                f.code,
                f.beta,
                model,
                fmt_opt(fit.as_ref().map(|x| x.slope)),
                fmt_opt(fit.as_ref().map(|x| x.slope_se)),
                fmt_opt(fit.as_ref().map(|x| x.intercept)),
                fmt_opt(fit.as_ref().map(|x| x.r2)),
                fmt_opt(fit.as_ref().map(|x| x.rss)),
                fmt_opt(range.map(|r| r.0)),
                fmt_opt(range.map(|r| r.1)),
                f.preferred
            ));
        }
        ctx.say(format!(
            "fit {} beta={}: log T vs L slope={} | log T vs log L slope={} -> {}",
            f.code,
            f.beta,
            fmt_opt(f.exponential.as_ref().map(|x| x.slope)),
            fmt_opt(f.polynomial.as_ref().map(|x| x.slope)),
            f.preferred
        ));
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        entries: &'a [sqm_core::dynamics::SweepEntry],
        fits: &'a [sqm_core::dynamics::ScalingFit],
    }
    ctx.out.write_json(
        "summary.json",
        &Summary {
            entries: &res.entries,
            fits: &res.fits,
        },
    )?;
    ctx.out.write("curves.csv", curves)?;
    ctx.out.write("tmem.csv", tmem)?;
    ctx.out.write("fits.csv", fits)?;
    let recs = res.records.iter().flat_map(|(code, l, beta, rs)| {
        rs.iter().map(move |r| SweepRecord {
            code,
            l: *l,
            beta: *beta,
            record: r,
        })
    });
    ctx.out.write_jsonl("records.jsonl", recs)?;
    if ctx.svg {
        for code in &cfg.codes {
            for &beta in &cfg.betas {
                let series: Vec<Series> = res
                    .entries
                    .iter()
                    .filter(|e| e.code == code.label() && e.estimate.beta == beta)
                    .map(|e| Series {
                        label: format!("L={}", e.estimate.l[0]),
                        curve: e.estimate.curve.as_slice(),
                    })
                    .collect();
                let name = format!("curves_{}_beta{}.svg", sanitize(code.label()), beta);
                let title = format!("{} beta={beta}", code.label());
                curve_svg(ctx, &name, &title, &series)?;
            }
        }
    }
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
