use std::io::Write;

use noiseamp::consensus::fit_sweep;
use noiseamp::lmi::{contraction_bound_gd, lmi_scale, LmiProblem};
use noiseamp::variance::{total_variance, variance_bounds_for};
use noiseamp::{
    consensus_variance, conventional_params, extreme_modal_values, gd_certificate, hb_gd_ratio, na_certificate,
    na_gd_ratio_bounds, optimal_quadratic_params, q_bounds, reciprocal_sum, refine_bound, scaling_sweep_with,
    theory_running_average, tune_constrained, verify_certificate, Algo, AlgoConfig, Objective, ParamsSource, SimResult,
    Spectrum, TorusSpec, TuningGrid,
};
use serde_json::{json, Map, Value};

use crate::args::{Command, Format, ObjectiveKind, OutputArgs, ParamArgs, ParamsChoice, ProblemArgs};
use crate::output::{flatten, open, to_object, Report};
use crate::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze {
            algo,
            problem,
            params,
            output,
        } => analyze(algo, &problem, &params)?.write(&output)?,
        Command::Bounds { algo, problem, output } => bounds(algo, &problem)?.write(&output)?,
        Command::Certify {
            algo,
            kappa,
            n,
            sigma,
            refine,
            output,
        } => certify(algo, kappa, n, sigma, refine)?.write(&output)?,
        Command::Tune {
            algo,
            problem,
            c,
            output,
        } => tune(algo, &problem, c)?.write(&output)?,
        Command::Consensus {
            algo,
            problem,
            params,
            output,
        } => consensus(algo, &problem, &params)?.write(&output)?,
        Command::Simulate {
            algo,
            problem,
            params,
            objective,
            delta,
            steps,
            seed,
            replicates,
            every,
            output,
        } => {
            let sim = SimArgs {
                objective,
                delta,
                steps,
                seed,
                replicates,
                every,
            };
            simulate(algo, &problem, &params, &sim)?.write(&output)?
        }
        Command::Sweep { algo, dim, n0, output } => sweep(algo, dim, &n0, &output)?,
    }
    Ok(())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Quadratic problem from `--spectrum` or `--kappa/--n` (evenly spaced
/// eigenvalues on `[1, κ]`).
fn spectrum_of(problem: &ProblemArgs) -> Result<Spectrum, CliError> {
    if problem.torus.is_some() {
        return Err(usage(
            "--torus is only accepted by consensus; give --spectrum or --kappa with --n",
        ));
    }
    if let Some(s) = &problem.spectrum {
        return Ok(s.clone());
    }
    match (problem.kappa, problem.n) {
        (Some(kappa), Some(n)) => Ok(Spectrum::linspace(1.0, kappa, n)?),
        _ => Err(usage(
            "need exactly one problem source: --spectrum, or --kappa with --n",
        )),
    }
}

fn torus_of(problem: &ProblemArgs) -> Result<TorusSpec, CliError> {
    match (&problem.torus, &problem.spectrum, problem.kappa) {
        (Some(t), None, None) => Ok(*t),
        _ => Err(usage("consensus needs --torus d,n0 and no other problem source")),
    }
}

fn params_choice(params: &ParamArgs) -> Result<ParamsChoice, CliError> {
    let choice = params.params.unwrap_or(if params.alpha.is_some() {
        ParamsChoice::Explicit
    } else {
        ParamsChoice::RateOptimal
    });
    if choice != ParamsChoice::Explicit && (params.alpha.is_some() || params.beta.is_some()) {
        return Err(usage(format!(
            "--alpha/--beta conflict with --params {}",
            choice.as_str()
        )));
    }
    Ok(choice)
}

/// Resolves the algorithm configuration for extremes `m ≤ L`.
fn resolve_config(algo: Algo, params: &ParamArgs, m: f64, l: f64) -> Result<(ParamsChoice, AlgoConfig), CliError> {
    let choice = params_choice(params)?;
    let base = match choice {
        ParamsChoice::Standard => conventional_params(algo, m, l)?.config,
        ParamsChoice::RateOptimal => optimal_quadratic_params(algo, m, l)?.config,
        ParamsChoice::Explicit => {
            let alpha = params.alpha.ok_or_else(|| usage("--params explicit needs --alpha"))?;
            let beta = match (algo, params.beta) {
                (Algo::Gd, b) => b.unwrap_or(0.0),
                (_, Some(b)) => b,
                (_, None) => return Err(usage(format!("{algo} with explicit parameters needs --beta"))),
            };
            AlgoConfig::new(algo, alpha, beta, 1.0, Default::default())?
        }
    };
    let cfg = base.with_sigma(params.sigma)?.with_sigma_mode(params.sigma_mode)?;
    Ok((choice, cfg))
}

fn config_fields(out: &mut Map<String, Value>, choice: ParamsChoice, cfg: &AlgoConfig) {
    out.insert("params".into(), json!(choice.as_str()));
    out.insert("algo".into(), json!(cfg.algo));
    out.insert("alpha".into(), json!(cfg.alpha));
    out.insert("beta".into(), json!(cfg.beta));
    out.insert("sigma".into(), json!(cfg.effective_sigma()));
    out.insert("sigma_mode".into(), json!(cfg.sigma_mode));
}

fn spectrum_fields(out: &mut Map<String, Value>, s: &Spectrum) {
    out.insert("n".into(), json!(s.n()));
    out.insert("m".into(), json!(s.m()));
    out.insert("L".into(), json!(s.l()));
    out.insert("kappa".into(), json!(s.kappa()));
    out.insert("spectrum".into(), json!(s.eigenvalues()));
}

fn analyze(algo: Algo, problem: &ProblemArgs, params: &ParamArgs) -> Result<Report, CliError> {
    let s = spectrum_of(problem)?;
    let (choice, cfg) = resolve_config(algo, params, s.m(), s.l())?;
    let report = noiseamp::variance_amplification(&cfg, &s)?;
    let mut out = Map::new();
    out.insert("command".into(), json!("analyze"));
    config_fields(&mut out, choice, &cfg);
    spectrum_fields(&mut out, &s);
    for (k, v) in to_object(&report) {
        out.entry(k).or_insert(v);
    }
    Ok(Report::new(out).with_table("per_mode"))
}

fn bounds(algo: Algo, problem: &ProblemArgs) -> Result<Report, CliError> {
    let (kappa, n, spectrum) = match (&problem.spectrum, problem.kappa, problem.n, &problem.torus) {
        (Some(s), None, None, None) => (s.kappa(), s.n(), Some(s.clone())),
        (None, Some(k), Some(n), None) => (k, n, None),
        _ => return Err(usage("bounds needs --kappa with --n, or --spectrum")),
    };
    let (lower, upper) = noiseamp::variance_bounds(algo, kappa, n)?;
    let mut out = Map::new();
    out.insert("command".into(), json!("bounds"));
    out.insert("algo".into(), json!(algo));
    out.insert("params".into(), json!("table2"));
    out.insert("sigma".into(), json!(1.0));
    out.insert("kappa".into(), json!(kappa));
    out.insert("n".into(), json!(n));
    out.insert("lower".into(), json!(lower));
    out.insert("upper".into(), json!(upper));
    match algo {
        Algo::Hb => {
            out.insert("ratio_to_gd".into(), json!(hb_gd_ratio(kappa)));
        }
        Algo::Gd | Algo::Na => {
            out.insert("extremes".into(), json!(extreme_modal_values(algo, kappa)?));
        }
    }
    if algo == Algo::Na {
        let (low, high) = na_gd_ratio_bounds(kappa, n)?;
        out.insert("ratio_to_gd".into(), json!({"low": low, "high": high}));
    }
    if let Some(s) = spectrum {
        let cfg = optimal_quadratic_params(algo, s.m(), s.l())?.config;
        let j = total_variance(&cfg, &s)?;
        let (lo, hi) = variance_bounds_for(algo, &s)?;
        out.insert("spectrum".into(), json!(s.eigenvalues()));
        out.insert("J".into(), json!(j));
        out.insert("contained".into(), json!(lo <= j && j <= hi));
    }
    Ok(Report::new(out))
}

fn certify(algo: Algo, kappa: f64, n: usize, sigma: f64, refine: Option<usize>) -> Result<Report, CliError> {
    // m = 1 and L = κ; the bound depends on κ only
    let (problem, base) = match algo {
        Algo::Gd => (LmiProblem::gd(1.0, kappa, n)?, gd_certificate(1.0, kappa, n)?),
        Algo::Na => (LmiProblem::na(kappa, kappa, n)?, na_certificate(kappa, kappa, n)?),
        Algo::Hb => return Err(noiseamp::Error::UnsupportedAlgorithm(algo).into()),
    };
    let problem = problem.with_sigma(sigma);
    let cert = verify_certificate(&problem, &base.vars())?;
    let q = q_bounds(algo, kappa, n)? * sigma * sigma;
    let mut out = Map::new();
    out.insert("command".into(), json!("certify"));
    for (k, v) in to_object(&cert) {
        out.insert(k, v);
    }
    out.insert("lmi_scale".into(), json!(lmi_scale(&problem, &cert.vars())?));
    out.insert("q".into(), json!(q));
    out.insert("bound_over_q".into(), json!(cert.bound / q));
    if algo == Algo::Gd {
        let alpha = 1.0 / kappa;
        out.insert(
            "contraction_bound".into(),
            json!(contraction_bound_gd(1.0, kappa, alpha, sigma, n).ok()),
        );
    }
    if let Some(budget) = refine {
        let refined = refine_bound(&problem, &cert, budget)?;
        out.insert("refined".into(), Value::Object(to_object(&refined)));
    }
    Ok(Report::new(out))
}

fn tune(algo: Algo, problem: &ProblemArgs, c: f64) -> Result<Report, CliError> {
    let s = spectrum_of(problem)?;
    let res = tune_constrained(algo, &s, c, TuningGrid::default())?;
    let reference = optimal_quadratic_params(algo, s.m(), s.l())?.config;
    let j2 = total_variance(&reference, &s)?;
    let mut out = Map::new();
    out.insert("command".into(), json!("tune"));
    spectrum_fields(&mut out, &s);
    for (k, v) in to_object(&res) {
        out.insert(k, v);
    }
    out.insert("J_rate_optimal".into(), json!(j2));
    out.insert("ratio_to_rate_optimal".into(), json!(res.j_star / j2));
    Ok(Report::new(out))
}

fn consensus(algo: Algo, problem: &ProblemArgs, params: &ParamArgs) -> Result<Report, CliError> {
    let t = torus_of(problem)?;
    let (choice, cfg) = resolve_config(algo, params, t.lambda_min(), t.lambda_max())?;
    let report = consensus_variance(algo, &t, ParamsSource::Explicit(cfg))?;
    let mut out = Map::new();
    out.insert("command".into(), json!("consensus"));
    out.insert("params".into(), json!(choice.as_str()));
    out.insert("sigma_mode".into(), json!(cfg.sigma_mode));
    for (k, v) in to_object(&report) {
        out.insert(k, v);
    }
    out.insert("reciprocal_sum".into(), json!(reciprocal_sum(&t)?));
    Ok(Report::new(out))
}

pub struct SimArgs {
    pub objective: ObjectiveKind,
    pub delta: f64,
    pub steps: usize,
    pub seed: u64,
    pub replicates: usize,
    pub every: usize,
}

fn simulate(algo: Algo, problem: &ProblemArgs, params: &ParamArgs, sim: &SimArgs) -> Result<Report, CliError> {
    if sim.every == 0 {
        return Err(usage("--every must be positive"));
    }
    let mut out = Map::new();
    out.insert("command".into(), json!("simulate"));
    let (obj, quadratic) = match sim.objective {
        ObjectiveKind::Quadratic => {
            let s = spectrum_of(problem)?;
            (Objective::quadratic(s.clone()), Some(s))
        }
        ObjectiveKind::PseudoHuber => {
            let (Some(kappa), Some(n), None, None) = (problem.kappa, problem.n, &problem.spectrum, &problem.torus)
            else {
                return Err(usage("the pseudo-huber objective needs --kappa with --n"));
            };
            (Objective::pseudo_huber(1.0, kappa, n, sim.delta)?, None)
        }
    };
    let (m, l) = match &obj {
        Objective::Quadratic { spectrum } => (spectrum.m(), spectrum.l()),
        Objective::PseudoHuber { m, l, .. } => (*m, *l),
    };
    let (choice, cfg) = resolve_config(algo, params, m, l)?;
    config_fields(&mut out, choice, &cfg);
    out.insert("objective".into(), json!(obj));

    let result: SimResult = if sim.replicates >= 2 {
        noiseamp::ensemble_variance(&cfg, &obj, sim.steps, sim.replicates, sim.seed)?
    } else {
        noiseamp::simulate(&cfg, &obj, sim.steps, sim.seed)?
    };
    let mut fields = to_object(&result);
    fields.remove("per_step_variance");
    fields.remove("per_step_std_error");
    for (k, v) in fields {
        out.insert(k, v);
    }

    let theory_j = match &quadratic {
        Some(s) => Some(total_variance(&cfg, s)?),
        None => None,
    };
    if let Some(j) = theory_j {
        out.insert("J_theory".into(), json!(j));
        out.insert("rel_error".into(), json!((result.j_hat - j).abs() / j));
    }
    if sim.objective == ObjectiveKind::PseudoHuber && choice == ParamsChoice::Standard && algo != Algo::Hb {
        let n = obj.dim();
        let cert = match algo {
            Algo::Gd => gd_certificate(m, l, n)?,
            _ => na_certificate(l / m, l, n)?,
        };
        out.insert(
            "certificate_bound".into(),
            json!(cert.bound * cfg.effective_sigma().powi(2)),
        );
    }

    let mut report = Report::new(out);
    if let (Some(mean), Some(se)) = (&result.per_step_variance, &result.per_step_std_error) {
        let theory = quadratic.as_ref().map(|s| theory_running_average(&cfg, s, sim.steps));
        let rows: Vec<Value> = (0..sim.steps)
            .filter(|t| (t + 1) % sim.every == 0 || t + 1 == sim.steps)
            .map(|t| {
                let mut row = json!({"step": t + 1, "mean_sq_error": mean[t], "std_error": se[t]});
                if let Some(th) = &theory {
                    row["theory"] = json!(th[t]);
                }
                row
            })
            .collect();
        report.value.insert("series".into(), Value::Array(rows));
        report = report.with_table("series");
    }
    Ok(report)
}

const SWEEP_ROW_COLUMNS: [&str; 7] = ["algo", "d", "n0", "n", "kappa", "jbar", "jbar_over_n"];
const SWEEP_FIT_COLUMNS: [&str; 9] = [
    "slope",
    "intercept",
    "log_intercept",
    "log_slope",
    "power_residual",
    "log_residual",
    "regime.kind",
    "regime.slope",
    "rows",
];

/// Streams rows as each torus finishes, then the fit.
fn sweep(algo: Algo, d: u32, n0: &[u64], output: &OutputArgs) -> Result<(), CliError> {
    let mut sink = open(output.out.as_deref())?;
    let mut io_error: Option<std::io::Error> = None;
    let mut first = true;
    match output.format {
        Format::Json => {
            let head = format!(
                "{{\"command\":\"sweep\",\"algo\":{},\"d\":{d},\"params\":\"table2\",\"n0\":{},\"rows\":[",
                json!(algo),
                json!(n0)
            );
            sink.write_all(head.as_bytes())?;
        }
        Format::Csv => {
            let mut header = vec!["record".to_string()];
            header.extend(SWEEP_ROW_COLUMNS.iter().map(|s| s.to_string()));
            header.extend(SWEEP_FIT_COLUMNS.iter().map(|s| format!("fit.{s}")));
            writeln!(sink, "{}", header.join(","))?;
        }
    }
    sink.flush()?;
    let format = output.format;
    let result = scaling_sweep_with(algo, d, n0, |row| {
        if io_error.is_some() {
            return;
        }
        let write = (|| -> std::io::Result<()> {
            match format {
                Format::Json => {
                    if !first {
                        sink.write_all(b",")?;
                    }
                    serde_json::to_writer(&mut sink, row)?;
                }
                Format::Csv => {
                    let v = json!(row);
                    let cells: Vec<String> = SWEEP_ROW_COLUMNS.iter().map(|c| crate::output::cell(&v[*c])).collect();
                    writeln!(sink, "row,{}{}", cells.join(","), ",".repeat(SWEEP_FIT_COLUMNS.len()))?;
                }
            }
            sink.flush()
        })();
        first = false;
        if let Err(e) = write {
            io_error = Some(e);
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let sweep = result?;
    let fit = fit_sweep(&sweep.rows)?;
    match format {
        Format::Json => {
            let tail = format!("],\"fit\":{}}}\n", serde_json::to_string(&fit).expect("fit serializes"));
            sink.write_all(tail.as_bytes())?;
        }
        Format::Csv => {
            let mut cells = Vec::new();
            flatten("", &json!(fit), &mut cells);
            let value = |name: &str| {
                cells
                    .iter()
                    .find(|c| c.0 == name)
                    .map(|c| c.1.clone())
                    .unwrap_or_default()
            };
            let fit_cells: Vec<String> = SWEEP_FIT_COLUMNS.iter().map(|c| value(c)).collect();
            writeln!(
                sink,
                "fit{}{}",
                ",".repeat(SWEEP_ROW_COLUMNS.len()),
                ",".to_string() + &fit_cells.join(",")
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}
