use std::fmt;
use std::path::{Path, PathBuf};

use ctv_core::io::{
    decode_field, decode_pgm, encode_field, encode_pgm, is_field_file, phase_object_from_image, quantize_unit,
    render_channel, write_trace_csv, AlgorithmChoice, Channel, RunConfig,
};
use ctv_core::phantom::{phantom as phantom_image, shaded_phantom};
use ctv_core::{
    denoise as run_denoise, dual_objective, phase_rmse, retrieve as run_retrieve, simulate_measurement, Algorithm,
    ComplexField, DenoiseParams, DualField, DualMode, Error, Intensity, Propagator, RetrievalParams,
};
use ndarray::Array2;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed, or unwritable file.
    File { path: PathBuf, message: String },
    Config(String),
    Shape(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::File { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Shape(_) => 3,
        }
    }

    fn file(path: &Path, message: impl fmt::Display) -> Self {
        CliError::File {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::File { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Shape(m) => write!(f, "shape mismatch: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Maps errors raised while computing (not while reading files).
fn compute_error(e: Error) -> CliError {
    match e {
        Error::ShapeMismatch { .. } => CliError::Shape(e.to_string()),
        Error::InvalidParameter(_) | Error::Config { .. } => CliError::Config(e.to_string()),
        other => CliError::File {
            path: PathBuf::new(),
            message: other.to_string(),
        },
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::file(path, e))
}

fn read_field(path: &Path) -> Result<ComplexField, CliError> {
    decode_field(&read_bytes(path)?).map_err(|e| CliError::file(path, e))
}

/// Field file, or an 8-bit PGM read as a pure phase object.
fn read_object(path: &Path) -> Result<ComplexField, CliError> {
    let bytes = read_bytes(path)?;
    if is_field_file(&bytes) {
        decode_field(&bytes).map_err(|e| CliError::file(path, e))
    } else {
        let image = decode_pgm(&bytes).map_err(|e| CliError::file(path, e))?;
        Ok(phase_object_from_image(&image))
    }
}

/// Field file with zero imaginary part, or an 8-bit PGM scaled to `[0, 1]`.
fn read_measurement(path: &Path) -> Result<Intensity, CliError> {
    let bytes = read_bytes(path)?;
    let values = if is_field_file(&bytes) {
        let field = decode_field(&bytes).map_err(|e| CliError::file(path, e))?;
        if field.v().iter().any(|&v| v != 0.0) {
            return Err(CliError::file(path, "measurement must have zero imaginary part"));
        }
        field.into_parts().0
    } else {
        let image = decode_pgm(&bytes).map_err(|e| CliError::file(path, e))?;
        image.mapv(|p| f64::from(p) / 255.0)
    };
    Intensity::new(values).map_err(|e| CliError::file(path, e))
}

fn read_reference(path: Option<&Path>, dim: (usize, usize)) -> Result<Option<ComplexField>, CliError> {
    let Some(path) = path else {
        return Ok(None);
    };
    let reference = read_field(path)?;
    if reference.dim() != dim {
        return Err(CliError::Shape(format!(
            "reference {} is {}×{}, expected {}×{}",
            path.display(),
            reference.rows(),
            reference.cols(),
            dim.0,
            dim.1
        )));
    }
    Ok(Some(reference))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::file(path, e))
}

fn intensity_field(y: &Intensity) -> ComplexField {
    ComplexField::new(y.values().clone(), Array2::zeros(y.dim())).expect("intensity is finite")
}

fn propagator(cfg: &RunConfig, dim: (usize, usize)) -> Result<Propagator, CliError> {
    Propagator::new(cfg.propagator_config(dim.0, dim.1)).map_err(|e| CliError::Config(e.to_string()))
}

pub fn denoise(input: &Path, output: &Path, config: Option<&Path>, reference: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mode = match cfg.algorithm {
        None | Some(AlgorithmChoice::Dual(DualMode::Fgp)) => DualMode::Fgp,
        Some(AlgorithmChoice::Dual(DualMode::Gp)) => DualMode::Gp,
        Some(AlgorithmChoice::Retrieval(a)) => {
            return Err(CliError::Config(format!("algorithm `{a}` does not apply to denoise (use fgp or gp)")))
        }
    };
    let b = read_field(input)?;
    let reference = read_reference(reference, b.dim())?;

    let variant = cfg.variant();
    let params = DenoiseParams::new(cfg.lambda, variant, cfg.constraint, cfg.inner_iters).with_mode(mode);
    let result = run_denoise(&b, &params).map_err(compute_error)?;
    let trace = &result.dual_objective_trace;
    let previous = if trace.len() >= 2 {
        trace[trace.len() - 2]
    } else {
        let (m, n) = b.dim();
        dual_objective(&DualField::zeros(m, n), &b, cfg.lambda, cfg.constraint)
    };
    let delta = trace[trace.len() - 1] - previous;
    let rmse = match &reference {
        Some(r) => Some((
            phase_rmse(&b, r).map_err(compute_error)?,
            phase_rmse(&result.x, r).map_err(compute_error)?,
        )),
        None => None,
    };

    write_bytes(output, &encode_field(&result.x))?;
    println!("lambda={}", cfg.lambda);
    println!("variant={variant}");
    println!("constraint={}", cfg.constraint);
    println!("mode={mode}");
    println!("iterations={}", cfg.inner_iters);
    println!("dual_objective_delta={delta:e}");
    if let Some((before, after)) = rmse {
        println!("rmse_before={before}");
        println!("rmse_after={after}");
    }
    Ok(())
}

pub fn retrieve(
    measurement: &Path,
    output: &Path,
    config: Option<&Path>,
    reference: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let algorithm = match cfg.algorithm {
        None => Algorithm::Fista,
        Some(AlgorithmChoice::Retrieval(a)) => a,
        Some(AlgorithmChoice::Dual(m)) => {
            return Err(CliError::Config(format!(
                "algorithm `{m}` does not apply to retrieve (use fista, ista or ip)"
            )))
        }
    };
    let trace_path = output.with_extension("csv");
    if trace_path == output {
        return Err(CliError::Config("output path must not end in .csv".into()));
    }
    let y = read_measurement(measurement)?;
    let reference = read_reference(reference, y.dim())?;
    let prop = propagator(&cfg, y.dim())?;

    let params = RetrievalParams {
        tau: cfg.tau,
        variant: cfg.variant(),
        constraint: cfg.constraint,
        outer_iters: cfg.outer_iters,
        inner_iters: cfg.inner_iters,
        algorithm,
        warm_start_dual: cfg.warm_start,
        seed: cfg.seed,
        ..Default::default()
    };
    let report = run_retrieve(&y, &prop, &params, reference.as_ref()).map_err(compute_error)?;

    let mut csv = Vec::new();
    write_trace_csv(&mut csv, &report.objective_trace, &report.rmse_trace).map_err(compute_error)?;
    write_bytes(output, &encode_field(&report.x_hat))?;
    write_bytes(&trace_path, &csv)?;
    println!("algorithm={algorithm}");
    println!("iterations={}", cfg.outer_iters);
    println!("final_objective={:e}", report.objective_trace.last().expect("non-empty trace"));
    if let Some(r) = report.rmse_trace.last() {
        println!("final_rmse={r}");
    }
    println!("trace={}", trace_path.display());
    Ok(())
}

pub fn simulate(object: &Path, output: &Path, config: Option<&Path>, save_object: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let x = read_object(object)?;
    let prop = propagator(&cfg, x.dim())?;
    let y = simulate_measurement(&x, &prop, cfg.noise_model(), cfg.seed).map_err(compute_error)?;
    write_bytes(output, &encode_field(&intensity_field(&y)))?;
    if let Some(path) = save_object {
        write_bytes(path, &encode_field(&x))?;
    }
    println!("rows={}", x.rows());
    println!("cols={}", x.cols());
    println!("noise={:?}", cfg.noise_model());
    println!("seed={}", cfg.seed);
    println!("total_intensity={:e}", y.total());
    Ok(())
}

pub fn export_pgm(field: &Path, output: &Path, channel: &str) -> Result<(), CliError> {
    let channel: Channel = channel.parse().map_err(|e: Error| CliError::Config(e.to_string()))?;
    let x = read_field(field)?;
    let (image, lo, hi) = render_channel(&x, channel);
    write_bytes(output, &encode_pgm(&image))?;
    println!("min={lo}");
    println!("max={hi}");
    Ok(())
}

pub fn propagate(input: &Path, output: &Path, config: Option<&Path>, distance: Option<f64>) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(d) = distance {
        if !d.is_finite() {
            return Err(CliError::Config(format!("distance must be finite, got {d}")));
        }
        cfg.distance_m = d;
    }
    let x = read_field(input)?;
    let prop = propagator(&cfg, x.dim())?;
    write_bytes(output, &encode_field(&prop.propagate(&x)))?;
    println!("distance_m={}", cfg.distance_m);
    Ok(())
}

pub fn phantom(output: &Path, rows: usize, cols: usize, shaded: bool) -> Result<(), CliError> {
    if rows == 0 || cols == 0 {
        return Err(CliError::Config(format!("image size must be positive, got {rows}×{cols}")));
    }
    let image = if shaded {
        shaded_phantom(rows, cols)
    } else {
        phantom_image(rows, cols)
    };
    write_bytes(output, &encode_pgm(&quantize_unit(&image)))
}
