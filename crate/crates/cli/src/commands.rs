//! Command dispatch and artifact emission.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use periodic_dirac::asymptotics;
use periodic_dirac::bands::{self, BandStructure, EdgeKind};
use periodic_dirac::exclusion;
use periodic_dirac::floquet;
use periodic_dirac::output::num;
use periodic_dirac::{Error, SpectralPoint};
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Probe { lambda: Complex64 },
    Bands,
    Map,
    Greens { lambda: Complex64, x: f64, t: f64 },
    VerifyAsymptotics,
    EdgeLimits,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure{}: {source}", .lambda.map(|l| format!(" at lambda = {l}")).unwrap_or_default())]
    Numerical { lambda: Option<Complex64>, source: Error },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

/// What a command produced besides its stdout.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Numerical errors keep the λ they carry, or fall back to `at`.
fn numerical(at: Option<Complex64>) -> impl Fn(Error) -> RunError {
    move |e| match e {
        Error::InvalidArgument(m) | Error::InvalidPotential(m) | Error::InvalidPerturbation(m) => ConfigError::Inconsistent(m).into(),
        e => RunError::Numerical { lambda: e.lambda().or(at), source: e },
    }
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn emit(dir: &Path, name: &str, report: &mut Report, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
    let path = dir.join(name);
    let io_err = |source| RunError::Io { path: path.clone(), source };
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
    report.written.push(path);
    Ok(())
}

/// Runs `cmd` inside a pool sized by `cfg.workers`; JSON results go to `out`.
pub fn run(cfg: &RunConfig, cmd: Command, out: &mut dyn Write) -> Result<Report, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| ConfigError::Inconsistent(format!("cannot start worker pool: {e}")))?;
    let mut text = Vec::new();
    let report = pool.install(|| dispatch(cfg, cmd, &mut text))?;
    out.write_all(&text).map_err(|source| RunError::Io { path: PathBuf::from("<stdout>"), source })?;
    Ok(report)
}

fn dispatch(cfg: &RunConfig, cmd: Command, out: &mut Vec<u8>) -> Result<Report, RunError> {
    let sp = SpectralPoint::new(Complex64::new(0.0, 0.0), cfg.mass, &cfg.potential).map_err(numerical(None))?;
    let mut report = Report::default();
    let stdout_err = |source| RunError::Io { path: PathBuf::from("<stdout>"), source };
    let out_dir = || -> Result<&Path, RunError> {
        let dir = cfg.output.dir.as_path();
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(dir)
    };

    match cmd {
        Command::Probe { lambda } => {
            let v = probe(cfg, &sp.with_lambda(lambda), &mut report)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json")).map_err(stdout_err)?;
        }
        Command::Greens { lambda, x, t } => {
            let spl = sp.with_lambda(lambda);
            let opts = cfg.floquet();
            let fd = floquet::floquet_data_with(&spl, &opts).map_err(numerical(Some(lambda)))?;
            let g = exclusion::greens_kernel(&spl, &fd, x, t, &opts).map_err(numerical(Some(lambda)))?;
            let v = json!({
                "x": g.x,
                "t": g.t,
                "lambda": complex(g.lambda),
                "g": g.g,
                "frobenius": g.frob,
                "frobenius_closed_form": g.frob_closed_form,
                "im_k": fd.im_k(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json")).map_err(stdout_err)?;
        }
        Command::Bands => {
            let bs = bands::scan_bands(&sp, (cfg.window.re[0], cfg.window.re[1]), &cfg.bands()).map_err(numerical(None))?;
            report.warnings.extend(bs.warnings.iter().cloned());
            emit(out_dir()?, "bands.csv", &mut report, |w| bs.write_csv(w))?;
        }
        Command::Map => {
            let vnorm = cfg.perturbation.vnorm_p().map_err(numerical(None))?;
            let window = cfg.window();
            let map =
                exclusion::exclusion_map(&sp, window, cfg.grid.nx, cfg.grid.ny, cfg.p(), vnorm, &cfg.floquet()).map_err(numerical(None))?;
            let dir = out_dir()?;
            emit(dir, "map.csv", &mut report, |w| map.grid.write_csv(w))?;
            emit(dir, "contours.csv", &mut report, |w| exclusion::write_contours_csv(&map.contours, w))?;
            if cfg.output.svg {
                let bs = if window.im.0 <= 0.0 && window.im.1 >= 0.0 {
                    Some(bands::scan_bands(&sp, window.re, &cfg.bands()).map_err(numerical(None))?)
                } else {
                    None
                };
                emit(dir, "contours.svg", &mut report, |w| exclusion::write_svg(&window, &map.contours, bs.as_ref(), w))?;
            }
        }
        Command::VerifyAsymptotics => {
            let alphas = asymptotics::doubling_alphas(cfg.asymptotics.alpha0, cfg.asymptotics.count);
            let opts = asymptotics::AsymptoticOptions { n_x: cfg.sampling.n_x, floquet: cfg.floquet(), form: cfg.reference_form() };
            let rep =
                asymptotics::verify_asymptotics(&cfg.potential, cfg.mass, cfg.asymptotics.mu, &alphas, &opts).map_err(numerical(None))?;
            emit(out_dir()?, "asymptotics.csv", &mut report, |w| rep.write_csv(w))?;
        }
        Command::EdgeLimits => {
            let bs = bands::scan_bands(&sp, (cfg.window.re[0], cfg.window.re[1]), &cfg.bands()).map_err(numerical(None))?;
            report.warnings.extend(bs.warnings.iter().cloned());
            let rows = edge_limits(&sp, &bs, &cfg.edge_limits.offsets)?;
            emit(out_dir()?, "edge_limits.csv", &mut report, |w| {
                writeln!(w, "edge_index,lambda0,kind,offset_re,offset_im,gamma,reference,ratio")?;
                for r in &rows {
                    writeln!(w, "{r}")?;
                }
                Ok(())
            })?;
        }
    }
    Ok(report)
}

fn probe(cfg: &RunConfig, sp: &SpectralPoint<'_>, report: &mut Report) -> Result<Value, RunError> {
    let lambda = sp.lambda;
    let vnorm = cfg.perturbation.vnorm_p().map_err(numerical(None))?;
    let pe = exclusion::evaluate_point(sp, cfg.p(), &cfg.floquet()).map_err(numerical(Some(lambda)))?;
    let (fd, pp) = (&pe.floquet, &pe.parts);
    report.warnings.extend(pp.warnings());
    Ok(json!({
        "lambda": complex(lambda),
        "mass": cfg.mass,
        "period": fd.period,
        "discriminant": complex(fd.discriminant),
        "rho": complex(fd.rho()),
        "log_rho": complex(fd.log_rho),
        "k": complex(fd.k),
        "im_k": fd.im_k(),
        "shift": fd.shift,
        "v_plus": [complex(fd.v_plus[0]), complex(fd.v_plus[1])],
        "v_minus": [complex(fd.v_minus[0]), complex(fd.v_minus[1])],
        "gamma": fd.gamma,
        "gamma_plus": pp.gamma_plus,
        "gamma_minus": pp.gamma_minus,
        "sup_plus": pp.sup_plus,
        "sup_minus": pp.sup_minus,
        "residual_plus": pp.residual_plus,
        "residual_minus": pp.residual_minus,
        "c_lambda": pe.c_lambda,
        "on_essential": fd.on_essential,
        "p": cfg.p(),
        "f_p": pe.f_p,
        "vnorm": vnorm,
        "excluded": pe.f_p.map(|f| vnorm < f),
    }))
}

struct EdgeRow {
    index: usize,
    lambda0: f64,
    kind: EdgeKind,
    offset: Complex64,
    gamma: Option<f64>,
    reference: f64,
}

impl std::fmt::Display for EdgeRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (g, ratio) = match self.gamma {
            Some(g) => (num(g), num(g / self.reference)),
            None => (String::new(), String::new()),
        };
        write!(
            f,
            "{},{},{},{},{},{g},{},{ratio}",
            self.index,
            num(self.lambda0),
            self.kind.as_str(),
            num(self.offset.re),
            num(self.offset.im),
            num(self.reference)
        )
    }
}

/// Γ(M(λ₀ + t)) next to its predicted limit: the constant from the edge
/// integrals at full-periodic edges, K√|t| at Jordan edges.
fn edge_limits(sp: &SpectralPoint<'_>, bs: &BandStructure, offsets: &[f64]) -> Result<Vec<EdgeRow>, RunError> {
    let mut rows = Vec::new();
    for (index, e) in bs.edges.iter().enumerate() {
        let mut ts = Vec::new();
        for &t in offsets {
            ts.extend([Complex64::new(-t, 0.0), Complex64::new(t, 0.0), Complex64::new(0.0, t)]);
        }
        let at = Some(Complex64::new(e.lambda0, 0.0));
        let gammas = bands::gamma_near(sp, e.lambda0, &ts).map_err(numerical(at))?;
        for (offset, gamma) in ts.into_iter().zip(gammas) {
            let reference = match (e.kind, e.approach_constant) {
                (EdgeKind::Jordan, Some(k)) => k * offset.norm().sqrt(),
                _ => e.gamma_limit,
            };
            rows.push(EdgeRow { index, lambda0: e.lambda0, kind: e.kind, offset, gamma, reference });
        }
    }
    Ok(rows)
}

/// Parses `"RE,IM"`.
pub fn parse_lambda(s: &str) -> Result<Complex64, String> {
    let mut parts = s.split(',');
    let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected RE,IM, got {s:?}"));
    };
    let parse = |t: &str| match t.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("not a finite number: {:?}", t.trim())),
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_arguments() {
        assert_eq!(parse_lambda("1.5,-2").unwrap(), Complex64::new(1.5, -2.0));
        assert_eq!(parse_lambda(" -0 , 1e-3 ").unwrap(), Complex64::new(0.0, 1e-3));
        for bad in ["", "1", "1,2,3", "a,b", "nan,0", "1,inf", ","] {
            assert!(parse_lambda(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn probe_free_case() {
        let cfg = RunConfig::default();
        let mut out = Vec::new();
        run(&cfg, Command::Probe { lambda: Complex64::new(0.0, 0.0) }, &mut out).unwrap();
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert!((v["f_p"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(v["excluded"], json!(true));
        assert!((v["im_k"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_classes() {
        let cfg = RunConfig::default();
        let mut out = Vec::new();
        let diag = run(&cfg, Command::Greens { lambda: Complex64::new(0.0, 1.0), x: 0.3, t: 0.3 }, &mut out).unwrap_err();
        assert_eq!(diag.exit_code(), 3);
        assert!(diag.to_string().contains("lambda = 0+1i"), "{diag}");
        let degenerate = run(&cfg, Command::Probe { lambda: Complex64::new(1.0, 0.0) }, &mut out).unwrap_err();
        assert_eq!(degenerate.exit_code(), 3);

        let heavy = RunConfig { mass: 20.0, ..Default::default() };
        let alpha = run(&heavy, Command::VerifyAsymptotics, &mut out).unwrap_err();
        assert_eq!(alpha.exit_code(), 2, "{alpha}");
    }
}
