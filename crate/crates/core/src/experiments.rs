//! Brute-force oracle for tiny instances, the identity battery, and the
//! Monte Carlo sweep over `(ρ, n)`.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify_regime, Case, PredictedLimit, RegimeReport, ScalingSpec};
use crate::error::{Error, Result};
use crate::model::{q_l, AffinityMatrix, AttributePmf, AttributeVector, MagParams};
use crate::moments::{change_of_measure_with_gammas, first_moment_level, first_moment_total, moment_report};
use crate::numerics::CompensatedSum;
use crate::output::{format_f64, write_json};
use crate::rng::{derive_seed, Purpose};
use crate::sampler::{estimate_prob_no_isolated, isolation_census, replicate, sample_graph, EstimateResult};

pub const MAX_ORACLE_NODES: usize = 5;
pub const MAX_ORACLE_LEVELS: usize = 3;

/// Replication count below which a sweep is flagged as under-powered.
pub const RECOMMENDED_REPLICATIONS: usize = 100;

/// Exact law of the isolated-node counts obtained by full enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub p_zero_exact: f64,
    pub e_i_exact: f64,
    pub e_i_sq_exact: f64,
    pub per_level_exact: Vec<f64>,
}

/// Enumerates every attribute matrix and, for each, every edge subset.
pub fn brute_force(params: &MagParams) -> Result<OracleResult> {
    let (n, levels) = (params.n(), params.levels());
    if n > MAX_ORACLE_NODES || levels > MAX_ORACLE_LEVELS {
        return Err(Error::EnumerationCap { n, levels });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    let incident: Vec<u32> = (0..n)
        .map(|w| {
            pairs
                .iter()
                .enumerate()
                .filter(|(_, &(u, v))| u == w || v == w)
                .fold(0, |mask, (e, _)| mask | 1 << e)
        })
        .collect();

    let mut p_zero = CompensatedSum::default();
    let mut e_i = CompensatedSum::default();
    let mut e_i_sq = CompensatedSum::default();
    let mut per_level = vec![CompensatedSum::default(); levels + 1];
    let mut level_counts = vec![0usize; levels + 1];

    let level_mask = (1u64 << levels) - 1;
    for matrix in 0..1u64 << (n * levels) {
        let attributes: Vec<AttributeVector> = (0..n)
            .map(|u| AttributeVector::from_mask(matrix >> (u * levels) & level_mask, levels))
            .collect();
        let p_matrix: f64 = attributes
            .iter()
            .flat_map(|a| a.bits())
            .map(|bit| params.pmf().mu(bit))
            .product();
        let edge_prob: Vec<f64> = pairs
            .iter()
            .map(|&(u, v)| q_l(&attributes[u], &attributes[v], params.q()))
            .collect::<Result<_>>()?;

        for subset in 0..1u32 << pairs.len() {
            let p_subset: f64 = edge_prob
                .iter()
                .enumerate()
                .map(|(e, &p)| if subset >> e & 1 == 1 { p } else { 1.0 - p })
                .product();
            let prob = p_matrix * p_subset;
            level_counts.iter_mut().for_each(|c| *c = 0);
            let mut isolated = 0usize;
            for (u, &mask) in incident.iter().enumerate() {
                if subset & mask == 0 {
                    isolated += 1;
                    level_counts[attributes[u].ones()] += 1;
                }
            }
            if isolated == 0 {
                p_zero.add(prob);
            }
            let i = isolated as f64;
            e_i.add(prob * i);
            e_i_sq.add(prob * i * i);
            for (acc, &c) in per_level.iter_mut().zip(&level_counts) {
                if c > 0 {
                    acc.add(prob * c as f64);
                }
            }
        }
    }
    Ok(OracleResult {
        p_zero_exact: p_zero.value(),
        e_i_exact: e_i.value(),
        e_i_sq_exact: e_i_sq.value(),
        per_level_exact: per_level.iter().map(CompensatedSum::value).collect(),
    })
}

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Relative difference, falling back to absolute when `expected` is zero.
pub fn relative_residual(actual: f64, expected: f64) -> f64 {
    let diff = (actual - expected).abs();
    if expected == 0.0 {
        diff
    } else {
        diff / expected.abs()
    }
}

pub const IDENTITY_TOL: f64 = 1e-10;

/// Level sums, change-of-measure reconstruction per `ν`, the `E±` partition
/// and the moment-bracket ordering. Failures are reported, never raised.
pub fn verify_identities(params: &MagParams, nu_list: &[f64]) -> IdentityReport {
    verify_identities_with_corruption(params, nu_list, 0.0)
}

/// [`verify_identities`] with `Γ(1)` multiplied by `1 + gamma_corruption`
/// inside the change-of-measure evaluation only.
pub fn verify_identities_with_corruption(params: &MagParams, nu_list: &[f64], gamma_corruption: f64) -> IdentityReport {
    let mut checks = Vec::new();
    let e_i = first_moment_total(params);

    let mut level_sum = CompensatedSum::default();
    for l in 0..=params.levels() {
        level_sum.add(first_moment_level(params, l).expect("level within range"));
    }
    checks.push(IdentityCheck::new("level-sum", relative_residual(level_sum.value(), e_i), IDENTITY_TOL));

    for &nu in nu_list {
        let gamma1 = params.gamma1() * (1.0 + gamma_corruption);
        match change_of_measure_with_gammas(params, nu, params.gamma0(), gamma1) {
            Ok(report) => {
                checks.push(IdentityCheck::new(
                    format!("change-of-measure nu={nu}"),
                    relative_residual(report.reconstructed_e_i, e_i),
                    IDENTITY_TOL,
                ));
                checks.push(IdentityCheck::new(
                    format!("plus-minus partition nu={nu}"),
                    relative_residual(report.e_n_plus + report.e_n_minus, report.e_n),
                    IDENTITY_TOL,
                ));
            }
            Err(_) => checks.push(IdentityCheck::new(format!("change-of-measure nu={nu}"), f64::INFINITY, IDENTITY_TOL)),
        }
    }

    let ordering = match moment_report(params) {
        Ok(r) => (r.p_zero_lower - r.p_zero_upper).max(0.0),
        Err(_) => f64::INFINITY,
    };
    checks.push(IdentityCheck::new("bound ordering", ordering, IDENTITY_TOL));
    IdentityReport { checks }
}

/// The affinity matrices of the oracle grid.
pub fn oracle_grid_kernels() -> [AffinityMatrix; 2] {
    [
        AffinityMatrix::new(0.8, 0.5, 0.2).expect("valid kernel"),
        AffinityMatrix::new(0.6, 0.4, 0.3).expect("valid kernel"),
    ]
}

/// Every point of the grid `n ∈ {2,3,4}, L ∈ {1,2}, μ1 ∈ {0.3,0.5}` over [`oracle_grid_kernels`].
pub fn oracle_grid() -> Vec<MagParams> {
    let mut grid = Vec::new();
    for q in oracle_grid_kernels() {
        for mu1 in [0.3, 0.5] {
            for n in [2, 3, 4] {
                for levels in [1, 2] {
                    let pmf = AttributePmf::new(mu1).expect("valid pmf");
                    grid.push(MagParams::new(n, levels, pmf, q).expect("grid satisfies the compact condition"));
                }
            }
        }
    }
    grid
}

fn describe(params: &MagParams) -> String {
    let q = params.q();
    format!(
        "n={} L={} mu1={} q=({},{},{})",
        params.n(),
        params.levels(),
        params.pmf().mu1(),
        q.q11(),
        q.q10(),
        q.q00()
    )
}

/// Closed forms against enumeration for one parameter point.
pub fn oracle_checks(params: &MagParams) -> Result<Vec<IdentityCheck>> {
    let oracle = brute_force(params)?;
    let report = moment_report(params)?;
    let tag = describe(params);
    let mut checks = vec![
        IdentityCheck::new(format!("E[I] {tag}"), relative_residual(report.e_i, oracle.e_i_exact), IDENTITY_TOL),
        IdentityCheck::new(format!("E[I^2] {tag}"), relative_residual(report.e_i_sq, oracle.e_i_sq_exact), IDENTITY_TOL),
    ];
    let level_residual = report
        .e_i_level
        .iter()
        .zip(&oracle.per_level_exact)
        .map(|(&a, &b)| relative_residual(a, b))
        .fold(0.0, f64::max);
    checks.push(IdentityCheck::new(format!("E[I^(l)] {tag}"), level_residual, IDENTITY_TOL));
    // Distance outside the bracket; zero when inside.
    let outside = (report.p_zero_lower - oracle.p_zero_exact)
        .max(oracle.p_zero_exact - report.p_zero_upper)
        .max(0.0);
    checks.push(IdentityCheck::new(format!("P[I=0] in bracket {tag}"), outside, 1e-12));
    Ok(checks)
}

/// [`oracle_checks`] over the whole [`oracle_grid`].
pub fn verify_oracle_grid() -> IdentityReport {
    let mut checks = Vec::new();
    for params in oracle_grid() {
        match oracle_checks(&params) {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(IdentityCheck::new(format!("oracle {}: {e}", describe(&params)), f64::INFINITY, 0.0)),
        }
    }
    IdentityReport { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Only isolation is tracked; O(n) memory.
    CensusOnly,
    /// Every replication builds the full adjacency.
    FullGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub pmf: AttributePmf,
    pub q: AffinityMatrix,
    pub rho_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub mode: SweepMode,
    pub max_rows: Option<usize>,
    pub max_wall_clock: Option<Duration>,
}

impl SweepConfig {
    pub fn new(pmf: AttributePmf, q: AffinityMatrix, rho_list: Vec<f64>, n_list: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            pmf,
            q,
            rho_list,
            n_list,
            replications,
            seed,
            mode: SweepMode::CensusOnly,
            max_rows: None,
            max_wall_clock: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::InvalidConfig("rho and n lists must be non-empty".into()));
        }
        if let Some(rho) = self.rho_list.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidConfig(format!("rho = {rho} must be positive")));
        }
        if self.n_list[0] < 2 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("n list must be strictly ascending with n >= 2".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be positive".into()));
        }
        if let Some(cap) = self.max_rows {
            let rows = self.rho_list.len() * self.n_list.len();
            if rows > cap {
                return Err(Error::ResourceCap(format!("{rows} rows requested, cap is {cap}")));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.replications < RECOMMENDED_REPLICATIONS {
            out.push(format!(
                "{} replications is below the recommended minimum of {RECOMMENDED_REPLICATIONS}",
                self.replications
            ));
        }
        out
    }
}

/// One `(ρ, n)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub levels: usize,
    pub rho: f64,
    pub rho_n: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub e_i: f64,
    pub e_i_sq: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub regime: RegimeReport,
}

/// Seed of the Monte Carlo estimate at `(ρ, n)`; independent of the other rows.
pub fn row_seed(seed: u64, rho: f64, n: usize) -> u64 {
    derive_seed(derive_seed(seed, Purpose::SweepRow, rho.to_bits()), Purpose::SweepRow, n as u64)
}

/// Monte Carlo estimate of `P[no isolated nodes]` in the requested mode.
pub fn estimate_in_mode(params: &MagParams, replications: usize, seed: u64, mode: SweepMode) -> Result<EstimateResult> {
    match mode {
        SweepMode::CensusOnly => estimate_prob_no_isolated(params, replications, seed),
        SweepMode::FullGraph => {
            let outcomes = replicate(replications, seed, |s| {
                sample_graph(params, s).map(|g| isolation_census(&g).total == 0)
            });
            let mut successes = 0;
            for ok in outcomes {
                successes += usize::from(ok?);
            }
            Ok(EstimateResult::from_successes(successes, replications))
        }
    }
}

pub fn sweep_row(config: &SweepConfig, rho: f64, n: usize) -> Result<SweepRow> {
    let scaling = ScalingSpec::new(rho)?;
    let params = MagParams::new(n, scaling.levels(n), config.pmf, config.q)?;
    let regime = classify_regime(rho, &params)?;
    let report = moment_report(&params)?;
    let estimate = estimate_in_mode(&params, config.replications, row_seed(config.seed, rho, n), config.mode)?;
    Ok(SweepRow {
        n,
        levels: params.levels(),
        rho,
        rho_n: scaling.rho_n(n),
        p_hat: estimate.p_hat,
        std_err: estimate.std_err,
        e_i: report.e_i,
        e_i_sq: report.e_i_sq,
        p_lower: report.p_zero_lower,
        p_upper: report.p_zero_upper,
        regime,
    })
}

/// Rows in config order: every `n` for the first `ρ`, then the next `ρ`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(config.rho_list.len() * config.n_list.len());
    for &rho in &config.rho_list {
        for &n in &config.n_list {
            if let Some(limit) = config.max_wall_clock {
                if start.elapsed() > limit {
                    return Err(Error::ResourceCap(format!(
                        "wall-clock limit of {:?} reached after {} rows",
                        limit,
                        rows.len()
                    )));
                }
            }
            rows.push(sweep_row(config, rho, n)?);
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 13] = [
    "n", "L", "rho", "rho_n", "p_hat", "std_err", "e_I", "e_I_sq", "p_lower", "p_upper", "case", "threshold", "predicted",
];

fn case_label(case: Case) -> &'static str {
    match case {
        Case::CaseOne => "CaseOne",
        Case::CaseTwo => "CaseTwo",
        Case::Boundary => "Boundary",
    }
}

fn predicted_label(limit: PredictedLimit) -> &'static str {
    match limit {
        PredictedLimit::Zero => "Zero",
        PredictedLimit::One => "One",
        PredictedLimit::Boundary => "Boundary",
    }
}

/// Flat record with the CSV column names; the JSON variant uses the same fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    #[serde(rename = "L")]
    pub levels: usize,
    pub rho: f64,
    pub rho_n: f64,
    pub p_hat: f64,
    pub std_err: f64,
    #[serde(rename = "e_I")]
    pub e_i: f64,
    #[serde(rename = "e_I_sq")]
    pub e_i_sq: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub case: String,
    pub threshold: f64,
    pub predicted: String,
}

impl From<&SweepRow> for SweepRecord {
    fn from(row: &SweepRow) -> Self {
        Self {
            n: row.n,
            levels: row.levels,
            rho: row.rho,
            rho_n: row.rho_n,
            p_hat: row.p_hat,
            std_err: row.std_err,
            e_i: row.e_i,
            e_i_sq: row.e_i_sq,
            p_lower: row.p_lower,
            p_upper: row.p_upper,
            case: case_label(row.regime.case).to_owned(),
            threshold: row.regime.threshold_value,
            predicted: predicted_label(row.regime.predicted_limit).to_owned(),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for row in rows {
        let r = SweepRecord::from(row);
        out.write_record([
            r.n.to_string(),
            r.levels.to_string(),
            format_f64(r.rho),
            format_f64(r.rho_n),
            format_f64(r.p_hat),
            format_f64(r.std_err),
            format_f64(r.e_i),
            format_f64(r.e_i_sq),
            format_f64(r.p_lower),
            format_f64(r.p_upper),
            r.case,
            format_f64(r.threshold),
            r.predicted,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// JSON document `{"seed": ..., "rows": [...]}` with [`SweepRecord`] rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub seed: u64,
    pub replications: usize,
    pub rows: Vec<SweepRecord>,
}

pub fn write_sweep_json<W: Write>(rows: &[SweepRow], config: &SweepConfig, writer: W) -> serde_json::Result<()> {
    let table = SweepTable {
        seed: config.seed,
        replications: config.replications,
        rows: rows.iter().map(SweepRecord::from).collect(),
    };
    write_json(writer, &table)
}

/// Default identity battery: config A at `n = 10, L = 3` and `ν ∈ {0.2, 0.5, 0.7}`.
pub fn default_identity_battery() -> IdentityReport {
    let params = MagParams::new(
        10,
        3,
        AttributePmf::new(0.5).expect("valid pmf"),
        AffinityMatrix::new(0.8, 0.5, 0.2).expect("valid kernel"),
    )
    .expect("config A is valid");
    verify_identities(&params, &[0.2, 0.5, 0.7])
}
