//! Subcommand execution. Inputs are read and validated, the computation runs
//! entirely in memory, and files are written only once it succeeded.

use super::io::{
    coord_header, csv_text, flat_binary, fmt_f64, read_points_csv, sha256_hex, Artifacts, Certificate, FileDigest,
    FlatHeader, Manifest,
};
use super::schema::{from_json, parse_operator, parse_phi, parse_symbol, ExperimentConfig, GridSpec};
use crate::error::{Error, Result};
use crate::heatkernel::{compute_kernel, estimate_fit, rockland_compare, BoxSpec};
use crate::lattice::{builtin_case, convolution_power, llt_error, PowerMethod};
use crate::legendre::LFTransform;
use crate::levi::{fundamental_solution, residual_check, FdSteps, LeviConfig};
use crate::symbol::{default_samples, format_rational, is_positive_definite, verify_homogeneity, MultiIndex, Weight, WeightedSymbol};
use num_complex::Complex64;
use serde_json::json;
use std::path::{Path, PathBuf};

pub const COMMANDS: [&str; 7] = ["symbol-check", "heatkernel", "lf-transform", "llt", "convpow", "levi", "rockland-demo"];

/// Result of a run: certificates, rendered files and a summary for stdout.
#[derive(Debug)]
pub struct Outcome {
    pub certificates: Vec<Certificate>,
    pub artifacts: Artifacts,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }
}

struct Inputs<'a> {
    base: Option<&'a Path>,
    digests: Vec<FileDigest>,
}

impl Inputs<'_> {
    fn resolve(&self, p: &Path) -> PathBuf {
        match self.base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn read(&mut self, p: &Path) -> Result<String> {
        let path = self.resolve(p);
        let bytes = std::fs::read(&path)?;
        self.digests.push(FileDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) });
        String::from_utf8(bytes).map_err(|_| Error::invalid(format!("{} is not UTF-8", path.display())))
    }
}

fn need<'a, T>(v: &'a Option<T>, key: &str, command: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::invalid(format!("{command} needs '{key}'")))
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("'{key}' must be positive, got {v}")))
    }
}

fn single_n(cfg: &ExperimentConfig, default: Option<u32>) -> Result<u32> {
    match cfg.n.as_deref() {
        Some([n]) => Ok(*n),
        Some(_) => Err(Error::invalid(format!("{} takes a single 'n'", cfg.command))),
        None => default.ok_or_else(|| Error::invalid(format!("{} needs 'n'", cfg.command))),
    }
}

fn complex_rows(d: usize) -> Vec<String> {
    let mut h = coord_header(d);
    h.push("re".into());
    h.push("im".into());
    h
}

/// Where the manifest goes: explicit path, else next to the primary output.
fn manifest_path(cfg: &ExperimentConfig, inputs: &Inputs) -> Option<PathBuf> {
    if let Some(m) = &cfg.manifest {
        return Some(inputs.resolve(m));
    }
    cfg.out.as_ref().map(|o| {
        let mut s = inputs.resolve(o).into_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

/// Runs `cfg` without touching the file system beyond reading inputs.
/// Relative paths are taken against `base` when given.
pub fn execute(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<Outcome> {
    cfg.tolerances.validate()?;
    let mut inputs = Inputs { base, digests: Vec::new() };
    let mut art = Artifacts::default();
    let (certificates, summary) = match cfg.command.as_str() {
        "symbol-check" => symbol_check(cfg, &mut inputs, &mut art)?,
        "heatkernel" => heatkernel(cfg, &mut inputs, &mut art)?,
        "lf-transform" => lf_transform(cfg, &mut inputs, &mut art)?,
        "llt" => llt(cfg, &mut inputs, &mut art)?,
        "convpow" => convpow(cfg, &mut inputs, &mut art)?,
        "levi" => levi(cfg, &mut inputs, &mut art)?,
        "rockland-demo" => rockland(cfg, &mut inputs, &mut art)?,
        other => {
            return Err(Error::Schema {
                path: "command".into(),
                message: format!("unknown command '{other}'; expected one of {}", COMMANDS.join(", ")),
            })
        }
    };
    if let Some(path) = manifest_path(cfg, &inputs) {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.clone(),
            inputs: inputs.digests.clone(),
            parameters: serde_json::to_value(cfg)?,
            tolerances: serde_json::to_value(cfg.tolerances)?,
            pass: certificates.iter().all(|c| c.pass),
            certificates: certificates.clone(),
            outputs: art.digests(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        art.add(path, bytes);
    }
    Ok(Outcome { certificates, artifacts: art, summary })
}

/// [`execute`] followed by writing every artifact.
pub fn run(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<Outcome> {
    let out = execute(cfg, base)?;
    out.artifacts.commit()?;
    Ok(out)
}

/// Loads a config file; relative paths inside it are resolved against its directory.
pub fn run_config_file(path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = from_json(&text)?;
    run(&cfg, path.parent())
}

type Step = (Vec<Certificate>, serde_json::Value);

fn load_symbol(cfg: &ExperimentConfig, inputs: &mut Inputs) -> Result<WeightedSymbol> {
    let path = need(&cfg.symbol, "symbol", &cfg.command)?;
    parse_symbol(&inputs.read(path)?)
}

fn symbol_check(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let p = load_symbol(cfg, inputs)?;
    let pos = is_positive_definite(&p, default_samples(p.dim()))?;
    let e = p.spatial_exponent();
    let hom = verify_homogeneity(&p, &p.dual_exponent(), 200, cfg.seed.unwrap_or(0))?;
    let certs = vec![
        Certificate::holds("positive_definite", pos.min_re, "min Re P_p on the sphere > 0", pos.positive),
        Certificate::at_most("homogeneity_error", hom, cfg.tolerances.homogeneity),
    ];
    let report = json!({
        "label": p.label(),
        "dim": p.dim(),
        "weight": p.weight().as_slice(),
        "mu": format_rational(p.homogeneous_order()),
        "mu_value": p.mu(),
        "spatial_exponent": e.eigenvalues(),
        "omega": crate::anisotropy::omega(p.weight().as_slice()),
        "purely_principal": p.is_purely_principal(),
        "positivity": {"positive": pos.positive, "min_re": pos.min_re, "max_abs": pos.max_abs, "samples": pos.samples},
        "homogeneity_error": hom,
    });
    if let Some(out) = &cfg.out {
        let mut bytes = serde_json::to_vec_pretty(&report)?;
        bytes.push(b'\n');
        art.add(inputs.resolve(out), bytes);
    }
    Ok((certs, report))
}

fn heatkernel(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let out = need(&cfg.out, "out", &cfg.command)?.clone();
    let p = load_symbol(cfg, inputs)?;
    let t = positive(cfg.t.unwrap_or(1.0), "t")?;
    let spec = GridSpec::parse(cfg.bx.as_deref().unwrap_or("-8:8"))?;
    if spec.points.is_some() {
        return Err(Error::invalid("'box' takes min:max; the point count is 'n'"));
    }
    let n = single_n(cfg, Some(512))? as usize;
    let bx = BoxSpec::new(vec![spec.min; p.dim()], vec![spec.max; p.dim()])?;
    let k = compute_kernel(&p, t, &bx, n)?;
    let finite = k.values.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let mut certs = vec![Certificate::holds("finite_values", k.peak(), "every sample finite", finite)];
    let rows = k.values.iter().enumerate().map(|(f, v)| {
        let mut r: Vec<String> = k.point(f).into_iter().map(fmt_f64).collect();
        r.push(fmt_f64(v.re));
        r.push(fmt_f64(v.im));
        r
    });
    art.add(inputs.resolve(&out), csv_text(&complex_rows(p.dim()), rows)?);
    let mut summary = json!({"t": t, "points": k.values.len(), "peak": k.peak(), "box_outer_ratio": k.outer_shell_ratio(),
        "imaginary_residue": k.imaginary_residue(), "mass_re": k.mass().re});
    if let Some(est) = &cfg.estimate {
        let lf = LFTransform::new(&p)?;
        let fit = estimate_fit(std::slice::from_ref(&k), &lf, p.mu())?;
        certs.push(Certificate::holds(
            "estimate_shell_stable",
            fit.c,
            "C finite and non-increasing over the outer shells",
            fit.shell_stable && fit.c.is_finite(),
        ));
        let j = json!({"C": fit.c, "M": fit.m, "residual_by_shell": fit.residual_by_shell, "shell_stable": fit.shell_stable});
        let mut bytes = serde_json::to_vec_pretty(&j)?;
        bytes.push(b'\n');
        art.add(inputs.resolve(est), bytes);
        summary["estimate"] = j;
    }
    Ok((certs, summary))
}

fn lf_transform(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let out = need(&cfg.out, "out", &cfg.command)?.clone();
    let p = load_symbol(cfg, inputs)?;
    let pts_path = need(&cfg.points, "points", &cfg.command)?.clone();
    let pts = read_points_csv(&inputs.read(&pts_path)?, p.dim())?;
    let lf = LFTransform::new(&p)?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut min_off_origin = f64::INFINITY;
    for x in &pts {
        let v = lf.eval(x)?;
        if x.iter().any(|c| *c != 0.0) {
            min_off_origin = min_off_origin.min(v);
        }
        let mut r: Vec<String> = x.iter().copied().map(fmt_f64).collect();
        r.push(fmt_f64(v));
        rows.push(r);
    }
    let mut header = coord_header(p.dim());
    header.push("rsharp".into());
    art.add(inputs.resolve(&out), csv_text(&header, rows)?);
    let certs = if min_off_origin.is_finite() {
        vec![Certificate::holds("positive_off_origin", min_off_origin, "> 0", min_off_origin > 0.0)]
    } else {
        Vec::new()
    };
    Ok((certs, json!({"points": pts.len()})))
}

fn llt(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let out = need(&cfg.out, "out", &cfg.command)?.clone();
    let id = *need(&cfg.case, "case", &cfg.command)?;
    let ns = need(&cfg.n, "n", &cfg.command)?.clone();
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::invalid("'n' must be a non-empty list of positive integers"));
    }
    let case = builtin_case(id)?;
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for &n in &ns {
        let e = llt_error(&case, n, None)?;
        rows.push(vec![n.to_string(), fmt_f64(e.sup_error), fmt_f64(e.normalized_error)]);
        errs.push(e.normalized_error);
    }
    let header: Vec<String> = ["n", "sup_error", "normalized_error"].map(String::from).to_vec();
    art.add(inputs.resolve(&out), csv_text(&header, rows)?);
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let last = *errs.last().expect("non-empty");
    let certs = vec![Certificate::holds("normalized_error_decreasing", last, "strictly decreasing in n", decreasing)];
    Ok((certs, json!({"case": case.label, "n": ns, "normalized_error": errs})))
}

fn convpow(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let out = need(&cfg.out, "out", &cfg.command)?.clone();
    let phi_path = need(&cfg.phi, "phi", &cfg.command)?.clone();
    let phi = parse_phi(&inputs.read(&phi_path)?)?;
    let n = single_n(cfg, None)?;
    let method = match cfg.method.as_deref().unwrap_or("fft") {
        "fft" => PowerMethod::Fft,
        "direct" => PowerMethod::Direct,
        other => return Err(Error::invalid(format!("method must be 'fft' or 'direct', got '{other}'"))),
    };
    let pw = convolution_power(&phi, n, method)?;
    let expected = phi.mass().powu(n);
    let mass_err = (pw.mass() - expected).norm() / expected.norm().max(f64::MIN_POSITIVE);
    let rows = pw.iter().map(|(x, v)| {
        let mut r: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        r.push(fmt_f64(v.re));
        r.push(fmt_f64(v.im));
        r
    });
    art.add(inputs.resolve(&out), csv_text(&complex_rows(phi.dim()), rows)?);
    let certs = vec![Certificate::at_most("mass_identity", mass_err, 1e-10)];
    Ok((certs, json!({"n": n, "shape": pw.shape(), "offset": pw.offset(), "sup": pw.sup_norm()})))
}

/// Columns for the heat-residual certificate: up to three interior sources.
fn residual_columns(n: usize) -> Vec<usize> {
    let mut c: Vec<usize> = [n / 4, n / 2, (3 * n) / 4].into_iter().filter(|&i| i < n).collect();
    c.dedup();
    c
}

fn levi(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let out = need(&cfg.out, "out", &cfg.command)?.clone();
    let op_path = need(&cfg.operator, "operator", &cfg.command)?.clone();
    let xspec = GridSpec::parse(need(&cfg.xgrid, "xgrid", &cfg.command)?)?;
    let nodes = match xspec.points {
        Some(_) => xspec.nodes(),
        None => return Err(Error::invalid("'xgrid' needs min:max:points")),
    };
    let t_max = positive(cfg.t_max.unwrap_or(1.0), "T")?;
    let tgrid = cfg.tgrid.unwrap_or(16);
    if !(6..=64).contains(&tgrid) {
        return Err(Error::invalid(format!("'tgrid' must be between 6 and 64, got {tgrid}")));
    }
    let h = parse_operator(&inputs.read(&op_path)?)?;
    let d = h.dim();
    if nodes.len().pow(d as u32) > 4096 {
        return Err(Error::invalid("xgrid has more than 4096 tensor points"));
    }
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..d {
        pts = pts.into_iter().flat_map(|p| nodes.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    let domain = BoxSpec::new(vec![xspec.min - 1.0; d], vec![xspec.max + 1.0; d])?;
    let op_cert = h.certify(&domain, 500)?;
    let lcfg = LeviConfig { t_max, time_nodes: tgrid, ..LeviConfig::default() };
    let fs = fundamental_solution(&h, pts.clone(), &lcfg)?;
    let ie = fs.integral_equation_residual()?;
    let w_list: Vec<Vec<f64>> = if d == 1 {
        (-4..=4).map(|i| vec![0.5 * i as f64]).collect()
    } else {
        let mut v = vec![Vec::new()];
        for _ in 0..d {
            v = v.into_iter().flat_map(|p: Vec<f64>| [-1.0, 0.0, 1.0].map(|c| [p.clone(), vec![c]].concat())).collect();
        }
        v
    };
    let t_list = [0.25 * t_max, 0.5 * t_max, 0.75 * t_max];
    let res = residual_check(&fs, &residual_columns(pts.len()), &t_list, &w_list, FdSteps::default(), true)?;
    let fits = fs.bound_fits()?;
    let z = fs.z_tensor(&pts)?;
    let times = fs.layout().times();
    let header = FlatHeader {
        format: "anisoheat-flat-v1",
        dtype: "<f8 interleaved re,im",
        dims: vec![times.len(), pts.len(), pts.len()],
        axes: vec!["t", "x", "y"],
        t: times.clone(),
        x: pts.clone(),
        y: pts,
        data_offset: 0,
    };
    art.add(inputs.resolve(&out), flat_binary(header, &z)?);
    let tol = cfg.tolerances;
    let certs = vec![
        Certificate::holds("operator_certificate", op_cert.ellipticity, "bounded, elliptic, Hoelder bound holds", op_cert.valid),
        Certificate::at_most("series_tail", fs.series.tail, lcfg.tail_tol),
        Certificate::at_most("integral_equation_residual", ie, tol.integral_equation),
        Certificate::at_most("heat_residual", res.normalized, tol.residual),
        Certificate::holds(
            "z_bound_fit",
            fits.z.c,
            "C finite and shell-stable",
            fits.z.c.is_finite() && fits.z.m.is_finite() && fits.z.shell_stable,
        ),
    ];
    let fit_json = |f: &Option<crate::heatkernel::EstimateFit>| {
        f.as_ref().map(|f| json!({"C": f.c, "M": f.m, "residual_by_shell": f.residual_by_shell, "shell_stable": f.shell_stable}))
    };
    let details = json!({
        "operator": op_cert,
        "mu": h.mu(),
        "rho": h.rho(),
        "series": {"terms": fs.series.term_norms.len(), "term_norms": fs.series.term_norms, "tail": fs.series.tail},
        "integral_equation_residual": ie,
        "heat_residual": res,
        "fits": {"K": fit_json(&fits.k), "W": fit_json(&fits.w), "Z": fit_json(&Some(fits.z.clone()))},
    });
    let cert_path = match &cfg.certificates {
        Some(c) => inputs.resolve(c),
        None => inputs.resolve(&out).with_file_name("certificates.json"),
    };
    let mut file = details.clone();
    file["certificates"] = serde_json::to_value(&certs)?;
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    art.add(cert_path, bytes);
    Ok((certs, details))
}

/// `xi_1^6 + xi_2^8`.
pub fn rockland_default() -> WeightedSymbol {
    let w = Weight::new(vec![3, 4]).expect("valid weight");
    let one = Complex64::new(1.0, 0.0);
    WeightedSymbol::new(w, [(MultiIndex(vec![6, 0]), one), (MultiIndex(vec![0, 8]), one)])
        .expect("valid symbol")
        .labeled("xi_1^6 + xi_2^8")
}

fn rockland(cfg: &ExperimentConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Step> {
    let p = match &cfg.symbol {
        Some(_) => load_symbol(cfg, inputs)?,
        None => rockland_default(),
    };
    let t = positive(cfg.t.unwrap_or(1.0), "t")?;
    let rows = rockland_compare(&p, t)?;
    let mut certs = Vec::new();
    for r in &rows {
        let dev = (r.kernel_exponent - r.rsharp_exponent).abs() / r.rsharp_exponent;
        certs.push(Certificate::at_most(format!("axis_{}_kernel_vs_rsharp", r.axis + 1), dev, cfg.tolerances.exponent));
    }
    if let Some(out) = &cfg.out {
        let header: Vec<String> =
            ["axis", "kernel_exponent", "rsharp_exponent", "norm_exponent"].map(String::from).to_vec();
        let body = rows.iter().map(|r| {
            vec![(r.axis + 1).to_string(), fmt_f64(r.kernel_exponent), fmt_f64(r.rsharp_exponent), fmt_f64(r.norm_exponent)]
        });
        art.add(inputs.resolve(out), csv_text(&header, body)?);
    }
    let summary = json!({
        "symbol": p.label(),
        "rows": rows.iter().map(|r| json!({
            "axis": r.axis + 1,
            "kernel_exponent": r.kernel_exponent,
            "rsharp_exponent": r.rsharp_exponent,
            "norm_exponent": r.norm_exponent,
        })).collect::<Vec<_>>(),
    });
    Ok((certs, summary))
}

/// Exit status for an error: 2 for bad input, 1 for numerical or certificate failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::Schema { .. }
        | Error::Parse { .. }
        | Error::UnknownIdentifier(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::DimensionMismatch { .. }
        | Error::DegreeTooHigh { .. } => 2,
        _ => 1,
    }
}

/// Machine-readable form of an error for stderr.
pub fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::InvalidInput(_) => "invalid_input",
        Error::DegreeTooHigh { .. } => "degree_too_high",
        Error::NotPositiveDefinite { .. } => "not_positive_definite",
        Error::DualTruncation { .. } => "dual_truncation",
        Error::BoxTooSmall { .. } => "box_too_small",
        Error::BoundaryArgmax { .. } => "boundary_argmax",
        Error::OutOfRange { .. } => "out_of_range",
        Error::MemoryBudget { .. } => "memory_budget",
        Error::NoAdmissibleM => "no_admissible_m",
        Error::SeriesNotConverged { .. } => "series_not_converged",
        Error::Degenerate(_) => "degenerate",
        Error::Parse { .. } => "parse",
        Error::UnknownIdentifier(_) => "unknown_identifier",
        Error::Schema { .. } => "schema",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    let mut v = json!({"error": kind, "message": e.to_string(), "exit_code": exit_code(e)});
    match e {
        Error::Schema { path, .. } => v["path"] = json!(path),
        Error::Parse { column, .. } => v["column"] = json!(column),
        Error::DegreeTooHigh { beta, .. } => v["beta"] = json!(beta),
        _ => {}
    }
    v
}
