//! The `analyze` and `simulate` pipelines.

use std::time::Instant;

use bnqd::geo::{effect_profile, BoundaryPolyline};
use bnqd::inference::bma_effect_samples;
use bnqd::sim::{run_grid, SimConfig};
use bnqd::stats::derive_seed;
use bnqd::{compare, CompareConfig, ComparisonResult, Dataset, LabelFunction, OptConfig, Points};

use crate::config::{AnalyzeConfig, LabelSpec, SimulateConfig};
use crate::data::load_csv;
use crate::error::{CliError, Result};
use crate::output::OutputSet;
use crate::report::{
    summary_csv, AnalysisReport, KernelProfile, SimulationProvenance, SimulationReport, VERSION,
};

/// Stream tag for the density samples, distinct from the per-kernel optimizer streams.
const DENSITY_STREAM: u64 = u64::MAX;

/// Runs an analysis and writes the report plus any requested exports.
pub fn analyze(config: &AnalyzeConfig) -> Result<AnalysisReport> {
    let start = Instant::now();
    config.validate()?;
    let data = load_csv(config.data_path()?, &config.x_columns, &config.y_column)?;
    let kernels = config.kernel_choices()?;

    let boundary = match config.label_spec()? {
        LabelSpec::Boundary(path) => Some(BoundaryPolyline::from_file(&path)?),
        LabelSpec::Threshold { .. } => None,
    };
    let label = match (&boundary, config.label_spec()?) {
        (Some(b), _) => b.label_function(),
        (None, LabelSpec::Threshold { dim, x0 }) => LabelFunction::Threshold { dim, x0 },
        (None, LabelSpec::Boundary(_)) => unreachable!("boundary was loaded above"),
    };
    let effect_point = match (&config.effect_point, &boundary) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(b)) => Some(b.midpoint().to_vec()),
        (None, None) => None,
    };

    let on_path = boundary
        .as_ref()
        .map(|b| data.x.iter().filter(|p| b.classify([p[0], p[1]]).on_path).count())
        .unwrap_or(0);
    if on_path > 0 {
        eprintln!("warning: {on_path} observation(s) lie on the boundary and were assigned to the intervention side");
    }

    let compare_config = CompareConfig {
        opt: OptConfig {
            restarts: config.restarts,
            seed: config.seed,
            max_iter: config.max_iter,
            tolerance: config.tolerance,
            ..OptConfig::default()
        },
        effect_point,
        prior_m1: config.prior_m1,
    };
    let result = compare(&data, &label, &kernels, &compare_config)?;

    let mut report = AnalysisReport::new(&result, config);
    report.on_path_points = on_path;
    if let Some(b) = &boundary {
        let profiles = result
            .kernels
            .iter()
            .map(|k| {
                let p = effect_profile(&k.discontinuous.control, &k.discontinuous.intervention, b, config.profile_count)?;
                Ok(KernelProfile { kernel: k.family.name(), points: p.points })
            })
            .collect::<Result<Vec<_>>>()?;
        report.profiles = Some(profiles);
    }

    let mut out = OutputSet::new();
    if let Some(path) = &config.curves_output {
        out.add(path, curves_csv(&result, &data, &label, config.curve_points)?);
    }
    if let Some(path) = &config.density_output {
        let samples = bma_effect_samples(&result, config.mc_samples, derive_seed(config.seed, &[DENSITY_STREAM]));
        let mut s = String::from("effect\n");
        for v in samples {
            s.push_str(&format!("{v}\n"));
        }
        out.add(path, s);
    }
    if let (Some(path), Some(profiles)) = (&config.profile_output, &report.profiles) {
        let mut s = String::from("kernel,s,x,y,mean,sd\n");
        for kp in profiles {
            for p in &kp.points {
                s.push_str(&format!("{},{},{},{},{},{}\n", kp.kernel, p.s, p.x, p.y, p.mean, p.var.sqrt()));
            }
        }
        out.add(path, s);
    } else if config.profile_output.is_some() {
        return Err(CliError::Config("profile-output requires a boundary label".into()));
    }

    report.provenance.wall_time = start.elapsed().as_secs_f64();
    // the report goes last so its presence signals a complete run
    out.add(&config.output, report.to_json());
    out.commit()?;
    Ok(report)
}

/// Posterior mean and sd on a regular grid for every kernel and model.
///
/// M0 covers the whole data range; each M1 side covers its own part of the
/// grid and is extended to the threshold.
fn curves_csv(result: &ComparisonResult, data: &Dataset, label: &LabelFunction, count: usize) -> Result<String> {
    let LabelFunction::Threshold { dim: 0, x0 } = *label else {
        return Err(CliError::Config("curves-output needs a threshold on a single predictor".into()));
    };
    if data.dim() != 1 {
        return Err(CliError::Config("curves-output needs a single predictor column".into()));
    }
    let xs = data.x.as_slice();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
    let control: Vec<f64> = grid.iter().copied().filter(|&x| x < x0).chain(std::iter::once(x0)).collect();
    let intervention: Vec<f64> = std::iter::once(x0).chain(grid.iter().copied().filter(|&x| x > x0)).collect();

    let mut s = String::from("kernel,model,x,mean,sd\n");
    for k in &result.kernels {
        let name = k.family.name();
        let parts = [
            ("m0", &k.continuous.fit, &grid),
            ("m1_control", &k.discontinuous.control, &control),
            ("m1_intervention", &k.discontinuous.intervention, &intervention),
        ];
        for (model, fit, xs) in parts {
            let post = fit.predict(&Points::from_scalars(xs))?;
            for ((x, m), v) in xs.iter().zip(&post.mean).zip(&post.var) {
                s.push_str(&format!("{name},{model},{x},{m},{}\n", v.sqrt()));
            }
        }
    }
    Ok(s)
}

/// Runs the simulation grid and writes the summary CSV and JSON.
pub fn simulate(config: &SimulateConfig) -> Result<SimulationReport> {
    let start = Instant::now();
    let latents = config.latent_functions()?;
    let kernels = config.kernel_choices()?;
    if config.restarts == 0 {
        return Err(CliError::Config("restarts must be positive".into()));
    }
    let template = SimConfig {
        n: config.n,
        x0: config.x0,
        seed: config.seed,
        repetitions: config.repetitions,
        kernels,
        compare: CompareConfig {
            opt: OptConfig { restarts: config.restarts, ..OptConfig::default() },
            ..CompareConfig::default()
        },
        rmse_samples: config.rmse_samples,
        ..SimConfig::default()
    };
    let summary = run_grid(&latents, &config.d_values, &config.sigmas, &template)?;
    for f in &summary.failures {
        eprintln!(
            "warning: {} d={} sigma={} repetition {} failed: {}",
            f.latent, f.d, f.sigma, f.repetition, f.error
        );
    }
    let report = SimulationReport {
        provenance: SimulationProvenance {
            version: VERSION.into(),
            config: config.clone(),
            wall_time: start.elapsed().as_secs_f64(),
        },
        summary,
    };
    let mut out = OutputSet::new();
    out.add(&config.output_csv, summary_csv(&report.summary));
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    out.add(&config.output_json, json);
    out.commit()?;
    Ok(report)
}
