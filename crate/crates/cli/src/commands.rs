use std::collections::BTreeSet;

use bmv_core::gravity::{casimir_gate, pairwise_rate, phase_set, CasimirVerdict, GravityError};
use bmv_core::mediator::{direct_coupling_counterexample, gwt_scan, ScanReport, ScanSettings};
use bmv_core::protocol::{run_protocol, split_time, trap_frequency, ProtocolError};
use bmv_core::qstate::{concurrence, negativity, QStateError};
use bmv_core::witness::{
    witness_snapshot, MeasurementRecord, Readout, WitnessError, WitnessSampler,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Format, Params, RunConfig};
use crate::output::{self, Row, WriteError};

/// Largest negativity a classical-mediator reduction may show.
const GWT_NEGATIVITY_BOUND: f64 = 1e-9;
/// The scan is split into this many independently seeded shards, whatever
/// the thread count, so results do not depend on `--jobs`.
const GWT_SHARDS: u64 = 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    Write(#[from] WriteError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Write(_) => 1,
        }
    }
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numeric(e.to_string())
            }
        }
    )*};
}
numeric_from!(ProtocolError, WitnessError, QStateError, GravityError);

pub struct Context {
    pub config: RunConfig,
    pub quiet: bool,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn note(&self, message: &str) {
        if !self.quiet {
            eprintln!("{message}");
        }
    }
}

struct Evaluation {
    row: Row,
    warnings: Vec<String>,
}

/// Generator for grid row `index`: one ChaCha stream per row under the
/// configured seed.
fn row_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn evaluate(
    params: &Params,
    swept: Vec<f64>,
    cfg: &RunConfig,
    index: u64,
    mut records: Option<&mut Vec<MeasurementRecord>>,
) -> Result<Evaluation, CliError> {
    let protocol = params.protocol_config()?;
    let run = run_protocol(&protocol)?;
    let paths = run.path_state()?;
    let before = run.before_recombination();
    let after = run.after_recombination();
    let exact = witness_snapshot(&before)?.value;
    let readout = Readout::new(params.readout_fidelity)?;

    let mut rng = row_rng(cfg.seed, index);
    let s1 = WitnessSampler::strategy1(&before)?
        .sample(0..cfg.shots, readout, &mut rng, records.as_deref_mut())
        .estimate::<f64>()?;
    let s2 = WitnessSampler::strategy2(&after)?
        .sample(0..cfg.shots, readout, &mut rng, records)
        .estimate::<f64>()?;

    Ok(Evaluation {
        row: Row {
            swept,
            values: [
                run.phases.dphi1,
                run.phases.dphi2,
                concurrence(&paths)?,
                negativity(&paths)?,
                exact,
                s1.value,
                s2.value,
                // Both strategies share the shot budget and error bound.
                s1.stderr,
            ],
        },
        warnings: run.log.warnings,
    })
}

fn write_rows(ctx: &Context, axes: &[String], rows: &[Row]) -> Result<(), CliError> {
    let bytes = match ctx.config.output.format {
        Format::Csv => output::rows_csv(axes, rows),
        Format::Json => output::rows_json(axes, rows),
    };
    output::emit(ctx.config.output.path.as_deref(), &bytes)?;
    Ok(())
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let mut records = cfg.output.records.as_ref().map(|_| Vec::new());
    let eval = evaluate(&cfg.params, Vec::new(), cfg, 0, records.as_mut())?;
    for w in &eval.warnings {
        ctx.note(&format!("warning: {w}"));
    }
    write_rows(ctx, &[], std::slice::from_ref(&eval.row))?;
    if let (Some(path), Some(records)) = (&cfg.output.records, &records) {
        output::emit(Some(path), &output::records_csv(records))?;
    }
    Ok(())
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    if cfg.sweep.is_empty() {
        return Err(ConfigError::Missing("sweep").into());
    }
    if cfg.output.records.is_some() {
        return Err(ConfigError::Invalid {
            key: "output.records".into(),
            message: "per-shot records are written by `run` only".into(),
        }
        .into());
    }
    let grid = cfg.grid()?;
    for (_, params) in &grid {
        params.protocol_config()?;
    }
    let results: Vec<Result<Evaluation, CliError>> = ctx.pool.install(|| {
        grid.into_par_iter()
            .enumerate()
            .map(|(i, (swept, params))| evaluate(&params, swept, cfg, i as u64, None))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut warnings = BTreeSet::new();
    for r in results {
        let eval = r?;
        warnings.extend(eval.warnings);
        rows.push(eval.row);
    }
    for w in &warnings {
        ctx.note(&format!("warning: {w}"));
    }
    let axes: Vec<String> = cfg.sweep.iter().map(|a| a.param.clone()).collect();
    write_rows(ctx, &axes, &rows)
}

#[derive(Debug, Serialize)]
struct PairRates {
    closest_rad_s: f64,
    farthest_rad_s: f64,
    reference_rad_s: f64,
}

#[derive(Debug, Serialize)]
struct PhasesAt {
    t_grav_s: f64,
    dphi1: f64,
    dphi2: f64,
    phase_sum: f64,
}

#[derive(Debug, Serialize)]
struct FeasibilityReport {
    mass_kg: f64,
    d_m: f64,
    s_m: f64,
    d1_m: f64,
    d2_m: f64,
    casimir: CasimirVerdict,
    trap_frequency_rad_s: f64,
    diamagnetic: bool,
    split_time_s: f64,
    pairwise_rates: PairRates,
    dphi1_rate_rad_s: f64,
    dphi2_rate_rad_s: f64,
    phase_sum_rate_rad_s: f64,
    target_phase_sum_rad: f64,
    required_t_grav_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases_at_t_grav: Option<PhasesAt>,
}

pub fn feasibility(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let p = &cfg.params;
    let mass = p.mass()?;
    let geom = p.geometry()?;
    let trap = p.trap()?;
    let freq = trap_frequency(&trap);
    let rates = PairRates {
        closest_rad_s: pairwise_rate(mass, geom.d1())?,
        farthest_rad_s: pairwise_rate(mass, geom.d2())?,
        reference_rad_s: pairwise_rate(mass, geom.d3())?,
    };
    let dphi1_rate = rates.closest_rad_s - rates.reference_rad_s;
    let dphi2_rate = rates.farthest_rad_s - rates.reference_rad_s;
    let sum_rate = dphi1_rate + dphi2_rate;
    let phases_at_t_grav = match p.t_grav_s {
        Some(t) => {
            let ps = phase_set(&geom, mass, t)?;
            Some(PhasesAt {
                t_grav_s: t,
                dphi1: ps.dphi1,
                dphi2: ps.dphi2,
                phase_sum: ps.entangling_phase(),
            })
        }
        None => None,
    };
    let casimir = casimir_gate(geom.d1());
    if !casimir.pass {
        ctx.note(&format!(
            "warning: d1 = {} m is below the Casimir-Polder limit {} m",
            casimir.d1_m, casimir.threshold_m
        ));
    }
    let report = FeasibilityReport {
        mass_kg: mass,
        d_m: geom.d(),
        s_m: geom.s(),
        d1_m: geom.d1(),
        d2_m: geom.d2(),
        casimir,
        trap_frequency_rad_s: freq.omega,
        diamagnetic: freq.diamagnetic,
        split_time_s: split_time(freq.omega)?,
        pairwise_rates: rates,
        dphi1_rate_rad_s: dphi1_rate,
        dphi2_rate_rad_s: dphi2_rate,
        phase_sum_rate_rad_s: sum_rate,
        target_phase_sum_rad: cfg.target_phase_sum_rad,
        required_t_grav_s: cfg.target_phase_sum_rad / sum_rate,
        phases_at_t_grav,
    };
    output::emit(cfg.output.path.as_deref(), &output::json_bytes(&report))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct GwtReport {
    n: u64,
    accepted: u64,
    max_negativity: f64,
    seed: u64,
    draws: u64,
    acceptance_rate: f64,
    half_width: f64,
    shards: u64,
    counterexample_negativity: f64,
    counterexample_min_eigenvalue: f64,
}

pub fn gwt(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let n = cfg.gwt_samples;
    let shards: Vec<ScanReport> = ctx.pool.install(|| {
        (0..GWT_SHARDS)
            .into_par_iter()
            .map(|shard| {
                let target = n / GWT_SHARDS + u64::from(shard < n % GWT_SHARDS);
                let settings = ScanSettings {
                    half_width: cfg.gwt_half_width,
                    ..ScanSettings::new(target)
                };
                gwt_scan::<f64, _>(&settings, &mut row_rng(cfg.seed, shard))
            })
            .collect()
    });
    let scan = shards
        .iter()
        .fold(ScanReport::empty(), |acc, s| acc.merge(s));
    let ce = direct_coupling_counterexample::<f64>();
    let report = GwtReport {
        n,
        accepted: scan.accepted,
        max_negativity: scan.max_negativity,
        seed: cfg.seed,
        draws: scan.draws,
        acceptance_rate: scan.acceptance_rate(),
        half_width: cfg.gwt_half_width,
        shards: GWT_SHARDS,
        counterexample_negativity: ce.negativity,
        counterexample_min_eigenvalue: ce.min_eigenvalue,
    };
    output::emit(cfg.output.path.as_deref(), &output::json_bytes(&report))?;
    if scan.accepted < n {
        return Err(CliError::Numeric(format!(
            "draw budget exhausted: {} of {n} samples accepted (lower gwt_half_width)",
            scan.accepted
        )));
    }
    if scan.max_negativity > GWT_NEGATIVITY_BOUND {
        return Err(CliError::Numeric(format!(
            "classical-mediator reduction with negativity {:e}",
            scan.max_negativity
        )));
    }
    Ok(())
}
