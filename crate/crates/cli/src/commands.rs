//! One function per subcommand: load the config, compute, write JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use hdinfer::bounds::{
    compatibility_lower_bound, cr_bound_fixed, cr_bound_linear, ggm_bound, lecam_bound, minimax_rate,
    normalized_direction, worst_subdirection, ModelSet,
};
use hdinfer::datagen::{generate_linear, LinearModelSpec};
use hdinfer::inference::{
    desparsified_lasso, desparsified_precision, precision_entry_inference, variance_estimate_linear,
    DebiasedEstimate, VarianceSource,
};
use hdinfer::lasso::{default_lambda, fit_lasso};
use hdinfer::linalg::{dot, gram, invert_spd, read_csv, read_vector_csv};
use hdinfer::nodewise::{fit_nodewise, NodewiseFit, NodewiseLambda};
use hdinfer::sim::{run_experiment, ExperimentConfig, SolverSettings, Target};
use hdinfer::{DenseMatrix, DenseVector};

use crate::config::{
    lasso_config, load, resolve, BoundConfig, EstimateConfig, GgmConfig, MatrixInput, NodewiseConfig, ThetaSource,
};
use crate::error::{CliError, CliResult};
use crate::Common;

fn invalid(path: &Path, message: impl Into<String>) -> CliError {
    CliError::ConfigInvalid { path: path.into(), message: message.into() }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input { path: path.into(), source: e.into() })
}

fn read_matrix(config: &Path, file: &Path) -> CliResult<DenseMatrix> {
    let path = resolve(config, file);
    read_csv(open(&path)?).map_err(|source| CliError::Input { path, source })
}

fn read_vector(config: &Path, file: &Path) -> CliResult<DenseVector> {
    let path = resolve(config, file);
    read_vector_csv(open(&path)?).map_err(|source| CliError::Input { path, source })
}

fn matrix_input(config: &Path, input: &MatrixInput) -> CliResult<DenseMatrix> {
    match input {
        MatrixInput::Rows(m) => Ok(m.clone()),
        MatrixInput::Csv { csv } => read_matrix(config, csv),
        MatrixInput::Identity { identity } => Ok(DenseMatrix::identity(*identity)),
    }
}

fn write_text(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            let write = || -> std::io::Result<()> {
                let mut w = BufWriter::new(File::create(path)?);
                w.write_all(text.as_bytes())?;
                w.flush()
            };
            write().map_err(|source| CliError::Write { path: path.into(), source })
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

fn emit(out: Option<&Path>, value: &Value) -> CliResult<()> {
    write_text(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn workers(common: &Common) -> usize {
    common.workers.unwrap_or(0)
}

fn check_solver(config: &Path, solver: &SolverSettings, lambda_constant: f64) -> CliResult<()> {
    lasso_config(solver, lambda_constant).validate().map_err(|e| invalid(config, e.to_string()))
}

fn check_level(config: &Path, level: f64) -> CliResult<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(config, format!("level {level} must lie in (0, 1)")))
    }
}

fn nodewise_lambdas(
    config: &Path,
    n: usize,
    p: usize,
    lambda_j: Option<f64>,
    constant: f64,
) -> CliResult<NodewiseLambda> {
    match lambda_j {
        Some(l) if l > 0.0 => Ok(NodewiseLambda::Shared(l)),
        Some(l) => Err(invalid(config, format!("lambda_j {l} must be positive"))),
        None => Ok(NodewiseLambda::default_for(n, p, constant)),
    }
}

fn shared(l: &NodewiseLambda) -> Value {
    match l {
        NodewiseLambda::Shared(v) => json!(v),
        NodewiseLambda::PerColumn(vs) => json!(vs),
    }
}

fn design_shape(config: &Path, x: &DenseMatrix) -> CliResult<(usize, usize)> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 || p < 2 {
        return Err(invalid(config, format!("design must have at least 2 rows and 2 columns, got {n}x{p}")));
    }
    Ok((n, p))
}

fn column_summaries(fit: &NodewiseFit) -> Vec<Value> {
    fit.columns
        .iter()
        .map(|c| {
            json!({
                "j": c.j,
                "tau_sq": c.tau_sq,
                "sparsity": c.sparsity,
                "converged": c.converged,
                "kkt_violation": c.kkt_violation,
            })
        })
        .collect()
}

pub fn estimate(common: &Common) -> CliResult<()> {
    let path = common.config.as_path();
    let cfg: EstimateConfig = load(path, &common.overrides, &[])?;
    check_solver(path, &cfg.solver, cfg.lambda_constant)?;
    check_level(path, cfg.level)?;
    if cfg.variance_source == VarianceSource::Oracle {
        return Err(invalid(path, "variance_source `oracle` needs the true precision matrix; use `experiment`"));
    }
    if !(cfg.sigma_noise > 0.0) {
        return Err(invalid(path, format!("sigma_noise {} must be positive", cfg.sigma_noise)));
    }

    let x = read_matrix(path, &cfg.x)?;
    let y = read_vector(path, &cfg.y)?;
    let (n, p) = design_shape(path, &x)?;
    if y.len() != n {
        return Err(invalid(path, format!("y has {} entries for {n} design rows", y.len())));
    }
    let xi = match &cfg.target {
        Target::Coordinate(j) if *j < p => DenseVector::unit(p, *j),
        Target::Coordinate(j) => return Err(invalid(path, format!("target coordinate {j} out of range for p = {p}"))),
        Target::Functional(v) if v.len() == p => DenseVector::from(v.clone()),
        Target::Functional(v) => return Err(invalid(path, format!("functional has length {} for p = {p}", v.len()))),
        Target::PrecisionEntry(..) => return Err(invalid(path, "precision_entry targets belong to `ggm`")),
    };

    let lambda = match cfg.lambda {
        Some(l) if l > 0.0 => l,
        Some(l) => return Err(invalid(path, format!("lambda {l} must be positive"))),
        None => default_lambda(n, p, cfg.lambda_constant) * cfg.sigma_noise,
    };
    let fit = fit_lasso(&x, &y, lambda, &lasso_config(&cfg.solver, cfg.lambda_constant))?;
    let sigma_hat = gram(&x);

    let (theta_hat, lambda_j, violation) = match cfg.theta {
        ThetaSource::Nodewise => {
            let lambdas = NodewiseLambda::default_for(n, p, cfg.lambda_j_constant);
            let nw = fit_nodewise(&x, &lambdas, &lasso_config(&cfg.solver, cfg.lambda_j_constant), workers(common))?;
            (nw.theta_hat, shared(&lambdas), nw.max_surrogate_violation)
        }
        ThetaSource::InverseGram => (invert_spd(&sigma_hat)?, Value::Null, None),
    };

    let b_hat = desparsified_lasso(&fit.beta_hat, &theta_hat, &x, &y)?;
    let value = dot(&xi, &b_hat);
    let variance = variance_estimate_linear(&xi, &theta_hat, &sigma_hat, n, cfg.sigma_noise, cfg.variance_source)?;
    let mut est = DebiasedEstimate::new(value, variance, cfg.level, cfg.variance_source)?;
    est.xi_l1 = Some(xi.l1());

    emit(
        common.out.as_deref(),
        &json!({
            "n": n,
            "p": p,
            "lambda": lambda,
            "lambda_j": lambda_j,
            "theta_source": cfg.theta,
            "lasso": {
                "beta_hat": fit.beta_hat,
                "support_size": fit.support_size(),
                "objective": fit.objective,
                "sweeps": fit.sweeps_used,
                "kkt_violation": fit.kkt_violation,
                "converged": fit.converged,
            },
            "b_hat": b_hat,
            "estimate": est,
            "max_surrogate_violation": violation,
        }),
    )
}

pub fn nodewise(common: &Common) -> CliResult<()> {
    let path = common.config.as_path();
    let cfg: NodewiseConfig = load(path, &common.overrides, &[])?;
    check_solver(path, &cfg.solver, cfg.lambda_j_constant)?;
    let x = read_matrix(path, &cfg.x)?;
    let (n, p) = design_shape(path, &x)?;
    let lambdas = nodewise_lambdas(path, n, p, cfg.lambda_j, cfg.lambda_j_constant)?;
    let fit = fit_nodewise(&x, &lambdas, &lasso_config(&cfg.solver, cfg.lambda_j_constant), workers(common))?;
    emit(
        common.out.as_deref(),
        &json!({
            "n": n,
            "p": p,
            "lambda_j": shared(&lambdas),
            "max_surrogate_violation": fit.max_surrogate_violation,
            "columns": column_summaries(&fit),
            "theta_hat": fit.theta_hat,
        }),
    )
}

pub fn ggm(common: &Common) -> CliResult<()> {
    let path = common.config.as_path();
    let cfg: GgmConfig = load(path, &common.overrides, &[])?;
    check_solver(path, &cfg.solver, cfg.lambda_j_constant)?;
    check_level(path, cfg.level)?;
    let x = read_matrix(path, &cfg.x)?;
    let (n, p) = design_shape(path, &x)?;
    if let Some((i, j)) = cfg.entry {
        if i >= p || j >= p {
            return Err(invalid(path, format!("entry ({i}, {j}) out of range for p = {p}")));
        }
    }
    let lambdas = nodewise_lambdas(path, n, p, cfg.lambda_j, cfg.lambda_j_constant)?;
    let fit = fit_nodewise(&x, &lambdas, &lasso_config(&cfg.solver, cfg.lambda_j_constant), workers(common))?;
    let t_hat = desparsified_precision(&fit.theta_hat, &gram(&x))?;
    let entry = match cfg.entry {
        Some((i, j)) => {
            let est = precision_entry_inference(&t_hat, &fit.theta_hat, i, j, n, cfg.level)?;
            json!({ "i": i, "j": j, "estimate": est })
        }
        None => Value::Null,
    };
    emit(
        common.out.as_deref(),
        &json!({
            "n": n,
            "p": p,
            "lambda_j": shared(&lambdas),
            "max_surrogate_violation": fit.max_surrogate_violation,
            "entry": entry,
            "t_hat": if cfg.include_t_hat { serde_json::to_value(&t_hat)? } else { Value::Null },
        }),
    )
}

pub fn bound(common: &Common) -> CliResult<()> {
    let path = common.config.as_path();
    let cfg: BoundConfig = load(path, &common.overrides, &[])?;
    let report = match &cfg {
        BoundConfig::Linear { theta0, xi, n, sigma_noise, beta0, model_set } => {
            let theta0 = matrix_input(path, theta0)?;
            let mut b = cr_bound_linear(&theta0, xi, *n, *sigma_noise)?;
            if let Some(beta0) = beta0 {
                let set = match model_set {
                    Some(set) => *set,
                    None => {
                        let h_l0 = match &b.direction {
                            hdinfer::bounds::Direction::Vector(h) => h.l0(),
                            hdinfer::bounds::Direction::Matrix(_) => 0,
                        };
                        ModelSet::new(beta0.iter().filter(|v| **v != 0.0).count() + h_l0)
                    }
                };
                b.check_admissible(beta0, &set, *n)?;
            }
            b.to_report()
        }
        BoundConfig::Fixed { x, j, lambda_j, lambda_j_constant, n, solver } => {
            check_solver(path, solver, *lambda_j_constant)?;
            let x = read_matrix(path, x)?;
            let (rows, p) = design_shape(path, &x)?;
            if *j >= p {
                return Err(invalid(path, format!("j = {j} out of range for p = {p}")));
            }
            let lambda_j = match nodewise_lambdas(path, rows, p, *lambda_j, *lambda_j_constant)? {
                NodewiseLambda::Shared(l) => l,
                NodewiseLambda::PerColumn(ls) => ls[*j],
            };
            cr_bound_fixed(&x, *j, lambda_j, &lasso_config(solver, *lambda_j_constant), n.unwrap_or(rows))?.to_report()
        }
        BoundConfig::Ggm { theta0, xi1, xi2, n } => ggm_bound(&matrix_input(path, theta0)?, xi1, xi2, *n)?.to_report(),
        BoundConfig::Lecam { fisher, g_dot } => {
            json!({ "bound_per_sample": lecam_bound(&matrix_input(path, fisher)?, g_dot)? })
        }
        BoundConfig::WorstSubdirection { theta0, g_dot } => {
            let theta0 = matrix_input(path, theta0)?;
            json!({
                "c0": worst_subdirection(&theta0, g_dot)?,
                "h0": normalized_direction(&theta0, g_dot)?,
            })
        }
        BoundConfig::Minimax { n, p, s } => {
            if *n == 0 || *p == 0 {
                return Err(invalid(path, "minimax rate needs n >= 1 and p >= 1"));
            }
            json!({ "rate": minimax_rate(*n, *p, *s) })
        }
        BoundConfig::Compatibility { sigma } => {
            json!({ "lower_bound": compatibility_lower_bound(&matrix_input(path, sigma)?)? })
        }
    };
    let mut report = report;
    if let Value::Object(map) = &mut report {
        map.insert("kind".into(), serde_json::to_value(&cfg)?["kind"].clone());
    }
    emit(common.out.as_deref(), &report)
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".timing.json");
    PathBuf::from(name)
}

pub fn experiment(common: &Common, records_csv: Option<&Path>) -> CliResult<()> {
    let path = common.config.as_path();
    let mut cfg: ExperimentConfig = load(path, &common.overrides, &[("R", "replications")])?;
    if let Some(w) = common.workers {
        cfg.parallel_workers = w;
    }
    cfg.validate().map_err(|e| invalid(path, e.to_string()))?;

    let start = Instant::now();
    let report = run_experiment(&cfg)?;
    write_text(common.out.as_deref(), &report.to_json()?)?;
    if let Some(out) = common.out.as_deref() {
        let timing = sidecar(out);
        write_text(Some(&timing), &(serde_json::to_string_pretty(&report.timing())? + "\n"))?;
    }
    if let Some(csv_path) = records_csv {
        let file = File::create(csv_path).map_err(|source| CliError::Write { path: csv_path.into(), source })?;
        report.write_records_csv(BufWriter::new(file))?;
    }
    let failures = report.failures.len();
    eprintln!(
        "{:?}: {} group(s), {} replicate(s) ok, {failures} failed, {:.1} s",
        report.experiment,
        report.aggregates.len(),
        report.records.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn dataset(common: &Common) -> CliResult<()> {
    let path = common.config.as_path();
    let spec: LinearModelSpec = load(path, &common.overrides, &[])?;
    let out = common
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("dataset needs --out DIR".into()))?;
    let data = generate_linear(&spec).map_err(|e| invalid(path, e.to_string()))?;
    data.export(&spec, out).map_err(|e| match e {
        hdinfer::Error::Io(source) => CliError::Write { path: out.into(), source },
        other => CliError::Run(other),
    })?;
    eprintln!("wrote {}x{} dataset to {}", spec.n, spec.p, out.display());
    Ok(())
}
