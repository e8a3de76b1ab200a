//! Timed engine runs and the finite-difference gate.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use modal_sens_core::engines::{Engine, SqmrConfig};
use modal_sens_core::fe::{DesignVector, PlateModel};
use modal_sens_core::study::PlateStudy;
use modal_sens_core::verification::{efficiency_ratio, fd_sensitivity, relative_error, FdConfig};
use modal_sens_core::PlateStudy64;

use crate::config::{CharacteristicConfig, ModelConfig, RunConfig};
use crate::report::{BenchReport, EfficiencyRatio, EngineSummary, PairwiseError};

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "MODAL_SENS_THREADS";

/// Sizes the global rayon pool from [`THREADS_VAR`] if set. Later calls are
/// no-ops once the pool exists.
pub fn init_thread_pool() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    ensure!(n >= 1, "{THREADS_VAR} must be at least 1");
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(Some(n))
}

pub fn build_study(
    model: &ModelConfig,
    mode: usize,
    characteristic: &CharacteristicConfig,
) -> Result<PlateStudy64> {
    ensure!(mode >= 1, "mode numbers start at 1");
    let plate = PlateModel::build(model.nx, model.ny, model.material.into())
        .with_context(|| format!("building {}x{} plate", model.nx, model.ny))?;
    let design = DesignVector::ones(plate.num_elements());
    let spec = characteristic
        .to_spec()
        .context("preparing characteristic")?;
    PlateStudy::new(plate, design, mode - 1, &spec).context("solving baseline modes")
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Times every engine `reps` times, one engine at a time, and summarizes.
pub fn run(config: &RunConfig) -> Result<BenchReport> {
    config.validate()?;
    let engines = config.parsed_engines()?;
    let study = build_study(&config.model, config.mode, &config.characteristic)?;
    let sqmr: SqmrConfig<f64> = config.sqmr.into();

    let mut summaries = Vec::with_capacity(engines.len());
    for &engine in &engines {
        let mut times = Vec::with_capacity(config.reps);
        let mut first: Option<modal_sens_core::SensitivityReport64> = None;
        for _ in 0..config.reps {
            let r = study
                .run(engine, &sqmr)
                .with_context(|| format!("running engine {engine}"))?;
            times.push(r.total_time.as_secs_f64());
            match &first {
                None => first = Some(r),
                Some(f) if f.values != r.values => {
                    bail!("engine {engine} returned different sensitivities on repeated runs")
                }
                Some(_) => {}
            }
        }
        let r = first.expect("reps >= 1");
        let (linf, argmax) = r.linf().context("no design parameters")?;
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        times.sort_by(f64::total_cmp);
        summaries.push(EngineSummary {
            engine: engine.name().to_string(),
            linf_sensitivity: linf,
            argmax_index: argmax,
            time_median_s: median(&times),
            time_mean_s: mean,
            linear_solves: r.linear_solves,
            factorizations: r.factorizations,
            krylov_iterations: r.krylov_iterations,
        });
    }

    let mut pairwise_errors = Vec::new();
    for a in &summaries {
        for b in &summaries {
            if a.engine != b.engine {
                pairwise_errors.push(PairwiseError {
                    engine: a.engine.clone(),
                    reference: b.engine.clone(),
                    rel_err_pct: relative_error(a.linf_sensitivity, b.linf_sensitivity).ok(),
                });
            }
        }
    }
    let pm_time = summaries
        .iter()
        .find(|s| s.engine == Engine::Proposed.name())
        .map(|s| s.time_median_s);
    let ratios_vs_pm = match pm_time {
        Some(t) => summaries
            .iter()
            .filter(|s| s.engine != Engine::Proposed.name())
            .filter_map(|s| {
                efficiency_ratio(s.time_median_s, t)
                    .ok()
                    .map(|ratio| EfficiencyRatio {
                        engine: s.engine.clone(),
                        ratio,
                    })
            })
            .collect(),
        None => Vec::new(),
    };

    Ok(BenchReport {
        config: config.clone(),
        dofs: study.num_dofs(),
        q: study.parameter_count(),
        characteristic: config.characteristic.name().to_string(),
        reference_mode: study.reference_mode.map(|j| j + 1),
        mse_element: study.mse_element,
        eigenvalue: study.pair().lambda,
        eigen_time_s: study.eigen_time.as_secs_f64(),
        engines: summaries,
        pairwise_errors,
        ratios_vs_pm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineCheck {
    pub engine: Engine,
    /// Largest per-parameter relative error against central differences, %.
    pub max_rel_err_pct: f64,
    pub worst_parameter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub dofs: usize,
    pub q: usize,
    pub tolerance_pct: f64,
    pub fd_time_s: f64,
    pub checks: Vec<EngineCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.max_rel_err_pct <= self.tolerance_pct)
    }
}

/// Compares each engine with a central-difference oracle parameter by
/// parameter.
pub fn verify(
    model: &ModelConfig,
    mode: usize,
    characteristic: &CharacteristicConfig,
    engines: &[Engine],
    sqmr: &SqmrConfig<f64>,
    fd: &FdConfig<f64>,
    tolerance_pct: f64,
) -> Result<VerifyReport> {
    ensure!(!engines.is_empty(), "at least one engine is required");
    let study = build_study(model, mode, characteristic)?;
    let clock = Instant::now();
    let oracle = fd_sensitivity(
        &study.model,
        study.design.as_slice(),
        study.characteristic.as_ref(),
        study.mode,
        fd,
    )
    .context("finite-difference oracle")?;
    let fd_time_s = clock.elapsed().as_secs_f64();
    let mut checks = Vec::with_capacity(engines.len());
    for &engine in engines {
        let r = study
            .run(engine, sqmr)
            .with_context(|| format!("running engine {engine}"))?;
        let (worst_parameter, max_rel_err_pct) = r
            .values
            .iter()
            .zip(&oracle)
            .map(|(&a, &n)| match relative_error(a, n) {
                Ok(e) => e,
                Err(_) if a == 0.0 => 0.0,
                Err(_) => f64::INFINITY,
            })
            .enumerate()
            .fold(
                (0, 0.0f64),
                |best, (k, e)| if e > best.1 { (k, e) } else { best },
            );
        checks.push(EngineCheck {
            engine,
            max_rel_err_pct,
            worst_parameter,
        });
    }
    Ok(VerifyReport {
        dofs: study.num_dofs(),
        q: study.parameter_count(),
        tolerance_pct,
        fd_time_s,
        checks,
    })
}
