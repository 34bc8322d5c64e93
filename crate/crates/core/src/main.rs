use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use fock1d::circle::{
    assemble, coupling_quantization, default_ratio_grid, eigenfunction_ratio_test, eigensolve, RatioTest,
};
use fock1d::identities::{
    chebyshev_points, epsilon_sweep, evaluate_identity, ChebKind, IdentityVariant, DEFAULT_GRID_POINTS,
};
use fock1d::model::paper_spectrum;
use fock1d::report::{
    failed_entries, run_all, tabulate, write_tabulation, OutputFormat, RunConfig, Status,
};
use fock1d::residue::crosscheck_appendix;
use fock1d::{Error, Parity, PhysicalParams, QuadratureSpec, QuantumNumber, Strategy};

#[derive(Parser)]
#[command(name = "fock1d", version, about = "Momentum-space 1D Coulomb problem on the Fock circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check and write the consistency report.
    Report(Flags),
    /// Eigenvalues of the discretized circle operator and the implied spectrum.
    Spectrum(Flags),
    /// Eigenfunction ratio test I(p)/[w(p)·φ(p)] on the standard grid.
    Verify(Flags),
    /// Residue-formula value of I(p) against quadrature.
    Residue(Flags),
    /// Chebyshev integral relations: residuals and ε-sweeps.
    Chebyshev(Flags),
    /// Sample a candidate on a uniform angle grid (CSV by default).
    Tabulate(Flags),
}

#[derive(Args, Clone)]
struct Flags {
    /// Quantum number (n_max for `report` and `chebyshev`).
    #[arg(long)]
    n: Option<u32>,
    /// Decay momentum; comma-separated list for `report` and `residue`.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    p0: Option<Vec<f64>>,
    #[arg(long)]
    parity: Option<Parity>,
    /// Absolute and relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Nyström node count (grid size for `tabulate`).
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// How a subcommand ended.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let outcome = match cli.command {
        Command::Report(f) => report(f),
        Command::Spectrum(f) => spectrum(f),
        Command::Verify(f) => verify(f),
        Command::Residue(f) => residue(f),
        Command::Chebyshev(f) => chebyshev(f),
        Command::Tabulate(f) => tabulate_cmd(f),
    };
    match outcome {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

impl Flags {
    fn spec(&self) -> Result<QuadratureSpec, Failure> {
        let spec = self.tol.map(QuadratureSpec::with_tol).unwrap_or_default();
        spec.validate()?;
        Ok(spec)
    }

    fn quantum_number(&self) -> Result<QuantumNumber, Failure> {
        Ok(QuantumNumber::new(self.n.unwrap_or(1) as i64)?)
    }

    fn single_p0(&self) -> Result<f64, Failure> {
        match self.p0.as_deref() {
            None => Ok(1.0),
            Some([p0]) if p0.is_finite() && *p0 > 0.0 => Ok(*p0),
            Some([p0]) => Err(Failure::Usage(format!("p0 must be finite and positive, got {p0}"))),
            Some(_) => Err(Failure::Usage("expected exactly one --p0 value".into())),
        }
    }

    fn p0_list(&self, default: &[f64]) -> Result<Vec<f64>, Failure> {
        let list = self.p0.clone().unwrap_or_else(|| default.to_vec());
        if list.is_empty() {
            return Err(Failure::Usage("p0 set is empty".into()));
        }
        if let Some(p0) = list.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Failure::Usage(format!("p0 values must be finite and positive, got {p0}")));
        }
        Ok(list)
    }

    fn format(&self, default: OutputFormat) -> OutputFormat {
        self.format.unwrap_or(default)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn status_of(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn report(f: Flags) -> Result<Status, Failure> {
    let defaults = RunConfig::default();
    let cfg = RunConfig {
        n_max: f.n.unwrap_or(defaults.n_max),
        p0_set: f.p0_list(&defaults.p0_set)?,
        parities: f.parity.map(|p| vec![p]).unwrap_or(defaults.parities),
        tolerances: f.spec()?,
        nystrom_nodes: f.nodes.unwrap_or(defaults.nystrom_nodes),
        output_format: f.format(OutputFormat::Json),
        output_path: f.out.clone(),
        strategy: Strategy::default(),
    };
    let report = run_all(&cfg)?;
    emit(f.out.as_deref(), &report.render(cfg.output_format)?)?;
    eprintln!(
        "status: {} ({} must-pass, {} failed, {} findings)",
        report.status.as_str(),
        report.counts.must_pass,
        report.counts.must_pass_failed,
        report.counts.findings
    );
    for (section, ids) in failed_entries(&report) {
        for id in ids {
            eprintln!("FAIL {section}/{id}");
        }
    }
    Ok(report.status)
}

const SPECTRUM_LEVELS: usize = 8;

fn spectrum(f: Flags) -> Result<Status, Failure> {
    let nodes = f.nodes.unwrap_or(256);
    let p0 = f.single_p0()?;
    let n_max = f.n.unwrap_or(5);
    let spec = eigensolve(&assemble(nodes, p0)?)?;
    let levels: Vec<_> = spec.positive_levels().collect();
    let mut ok = levels.len() >= SPECTRUM_LEVELS;
    let mut rows = Vec::new();
    for (k, level) in levels.iter().enumerate().take(SPECTRUM_LEVELS.max(n_max as usize)) {
        let expect = 1.0 / (k + 1) as f64;
        let good = (level.eigenvalue - expect).abs() <= 1e-6 * expect
            && level.splitting <= 1e-8
            && level.has_odd_even_pair();
        if k < SPECTRUM_LEVELS {
            ok &= good;
        }
        rows.push(json!({
            "level": k + 1,
            "eigenvalue": level.eigenvalue,
            "expected": expect,
            "multiplicity": level.multiplicity,
            "splitting": level.splitting,
            "parities": level.parities().iter().map(|p| p.name()).collect::<Vec<_>>(),
        }));
    }
    let params = PhysicalParams::unit();
    let mut comparison = Vec::new();
    for (k, level) in levels.iter().enumerate().take(n_max as usize) {
        let n = QuantumNumber::new(k as i64 + 1)?;
        let cq = coupling_quantization(level.eigenvalue, &params)?;
        let printed = paper_spectrum(n, &params);
        comparison.push(json!({
            "n": n.get(),
            "mu": level.eigenvalue,
            "coupling_p0_sq": cq.p0_sq,
            "printed_p0_sq": printed.p0_sq(),
            "ratio": cq.p0_sq / printed.p0_sq(),
        }));
    }
    let status = status_of(ok);
    let text = match f.format(OutputFormat::Json) {
        OutputFormat::Json => to_json(&json!({
            "nodes": nodes,
            "p0": p0,
            "status": status.as_str(),
            "levels": rows,
            "coupling_vs_printed": comparison,
        }))?,
        OutputFormat::Csv => csv_text(
            &["level", "eigenvalue", "expected", "multiplicity", "splitting"],
            levels.iter().enumerate().map(|(k, l)| {
                vec![
                    (k + 1).to_string(),
                    num(l.eigenvalue),
                    num(1.0 / (k + 1) as f64),
                    l.multiplicity.to_string(),
                    num(l.splitting),
                ]
            }),
        ),
    };
    emit(f.out.as_deref(), &text)?;
    Ok(status)
}

fn verify(f: Flags) -> Result<Status, Failure> {
    let n = f.quantum_number()?;
    let parity = f.parity.unwrap_or(Parity::Odd);
    let p0 = f.single_p0()?;
    let grid = default_ratio_grid(p0);
    let t: RatioTest = eigenfunction_ratio_test(n, parity, p0, &grid, &f.spec()?, Strategy::default())?;
    let expected = -PI / n.as_f64();
    let status = status_of(t.max_deviation <= 1e-6 && (t.common - expected).norm() <= 1e-6);
    let text = match f.format(OutputFormat::Json) {
        OutputFormat::Json => to_json(&json!({
            "n": n.get(),
            "parity": parity.name(),
            "p0": p0,
            "constant": [t.common.re, t.common.im],
            "expected": expected,
            "max_deviation": t.max_deviation,
            "status": status.as_str(),
            "ratios": t.ratios.iter().zip(&t.grid).map(|(r, p)| json!({ "p": p, "ratio": [r.re, r.im] })).collect::<Vec<_>>(),
        }))?,
        OutputFormat::Csv => csv_text(
            &["p", "re_ratio", "im_ratio"],
            t.grid.iter().zip(&t.ratios).map(|(p, r)| vec![num(*p), num(r.re), num(r.im)]),
        ),
    };
    emit(f.out.as_deref(), &text)?;
    eprintln!("constant: {:.9} (expected {:.9}), deviation {:.3e}", t.common.re, expected, t.max_deviation);
    Ok(status)
}

const RESIDUE_P: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

fn residue(f: Flags) -> Result<Status, Failure> {
    let n = f.quantum_number()?;
    let parity = f.parity.unwrap_or(Parity::Odd);
    let p0_set = f.p0_list(&[1.0])?;
    let rows = crosscheck_appendix(n, &RESIDUE_P, &p0_set, parity, &f.spec()?, Strategy::default())?;
    // ratios are asserted only at p0 = 1; elsewhere they are recorded
    let ok = rows.iter().filter(|r| r.p0 == 1.0).all(|r| {
        if r.quadrature.norm() > 1e-8 {
            (r.ratio - 1.0).norm() <= 1e-7
        } else {
            (r.appendix - r.quadrature).norm() <= 1e-7
        }
    });
    let status = status_of(ok);
    let text = match f.format(OutputFormat::Json) {
        OutputFormat::Json => to_json(&json!({ "status": status.as_str(), "rows": rows }))?,
        OutputFormat::Csv => {
            let c = |z: Complex64| [num(z.re), num(z.im)];
            csv_text(
                &["p", "p0", "re_appendix", "im_appendix", "re_quadrature", "im_quadrature", "re_ratio", "im_ratio"],
                rows.iter().map(|r| {
                    let mut v = vec![num(r.p), num(r.p0)];
                    v.extend(c(r.appendix));
                    v.extend(c(r.quadrature));
                    v.extend(c(r.ratio));
                    v
                }),
            )
        }
    };
    emit(f.out.as_deref(), &text)?;
    Ok(status)
}

fn chebyshev(f: Flags) -> Result<Status, Failure> {
    let n_max = f.n.unwrap_or(5);
    if n_max == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let spec = f.spec()?;
    let grid = chebyshev_points(DEFAULT_GRID_POINTS);
    let epsilons = [0.5, 1.0, 2.0];
    let mut ok = true;
    let mut out = Vec::new();
    for variant in IdentityVariant::ALL {
        for kind in [ChebKind::T, ChebKind::U] {
            for n in 1..=n_max {
                let residual = evaluate_identity(kind, variant, n, 1.0, &grid, &spec)?;
                let sweep = epsilon_sweep(kind, variant, n, &epsilons, 0.3, &spec)?;
                if variant == IdentityVariant::FullCircleGroundTruth {
                    ok &= residual.max_residual <= 1e-6 && sweep.epsilon_independent;
                }
                out.push((variant, kind, n, residual.max_residual, sweep));
            }
        }
    }
    let status = status_of(ok);
    let text = match f.format(OutputFormat::Json) {
        OutputFormat::Json => to_json(&json!({
            "status": status.as_str(),
            "grid_points": grid.len(),
            "rows": out.iter().map(|(v, k, n, r, s)| json!({
                "variant": v.name(),
                "kind": k.name(),
                "n": n,
                "max_residual": r,
                "epsilon_sweep": s,
            })).collect::<Vec<_>>(),
        }))?,
        OutputFormat::Csv => csv_text(
            &["variant", "kind", "n", "max_residual", "rhs_eps_0.5", "rhs_eps_1", "rhs_eps_2", "spread"],
            out.iter().map(|(v, k, n, r, s)| {
                vec![v.name().into(), k.name().into(), n.to_string(), num(*r), num(s.rhs[0]), num(s.rhs[1]), num(s.rhs[2]), num(s.spread)]
            }),
        ),
    };
    emit(f.out.as_deref(), &text)?;
    Ok(status)
}

fn tabulate_cmd(f: Flags) -> Result<Status, Failure> {
    let n = f.quantum_number()?;
    let parity = f.parity.unwrap_or(Parity::Odd);
    let p0 = f.single_p0()?;
    let rows = tabulate(n, parity, p0, f.nodes.unwrap_or(64))?;
    let text = match f.format(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_tabulation(&rows, &mut buf)?;
            String::from_utf8(buf).map_err(|e| Failure::Runtime(e.to_string()))?
        }
        OutputFormat::Json => to_json(&rows)?,
    };
    emit(f.out.as_deref(), &text)?;
    Ok(Status::Pass)
}
