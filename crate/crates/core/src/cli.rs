//! Command-line front end. Every subcommand writes one report (JSON or CSV) to
//! `--output` or standard output.
//!
//! Exit codes: 0 on success, 2 when a verification predicate is false, 1 on a
//! usage or parameter error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::annulus::{
    a_threshold, find_lambda0, mu0, polygon_points, polygon_row, radial_grid, theorem1_report, two_bubble_certificate,
    PolygonConfig, SERIES_TOL,
};
use crate::bubble::{compute_constants, BubbleParams, EnergyConstants};
use crate::energy::{build_ansatz, expansion_fit, linear_fit, norm_star_star, DEFAULT_NU, FIT_LEVEL};
use crate::error::Error;
use crate::greens::{green, lambda1, robin, DomainSpec};
use crate::interaction::{build_matrix, eigen, psi};
use crate::linalg::determinant;
use crate::point::Point3;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Parser, Debug)]
#[command(name = "concentra", version, about = "Green/Robin functions, interaction matrices and reduced energies on balls and annuli")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Green function G_λ(x, y) for each λ
    Green,
    /// Robin function g_λ(x) for each λ
    Robin,
    /// Interaction matrix, ψ, eigenpairs and PSD verdict at one λ
    Matrix,
    /// σ̃₁(λ, r) of the regular k-gon over λ × r grids (annulus)
    PolygonScan,
    /// Critical pair (λ₀, r₀), criticality checks and μ₀ curve (annulus)
    FindCritical,
    /// Empirical inner-radius threshold for a positive start
    ThresholdA,
    /// Two-bubble certificate min_t 4t² - (7a+1)t + 4a > 0 for each a
    Certificate,
    /// Energy constants a0..a3 by quadrature against closed forms
    VerifyConstants,
    /// Fit of the polygon energy expansion in μ (annulus)
    EnergyCheck,
    /// ε-scaling of the weighted error norm ‖E‖_**
    ErrorNorm,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Green => "green",
            Command::Robin => "robin",
            Command::Matrix => "matrix",
            Command::PolygonScan => "polygon-scan",
            Command::FindCritical => "find-critical",
            Command::ThresholdA => "threshold-a",
            Command::Certificate => "certificate",
            Command::VerifyConstants => "verify-constants",
            Command::EnergyCheck => "energy-check",
            Command::ErrorNorm => "error-norm",
        }
    }
}

/// Shared options. Lists are comma separated reals, `lin:lo:hi:n` or
/// `log:lo:hi:n` (decimal exponents); points are `x,y,z`, point lists
/// `x,y,z;x,y,z`.
#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// key=value file (keys are flag names); flags take precedence [default: none]
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, env = "CONCENTRA_THREADS")]
    pub threads: Option<usize>,
    /// Report format: json or csv [default: json]
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Report path, `-` for standard output [default: -]
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// Include wall time in the diagnostics (reports are then not reproducible) [default: false]
    #[arg(long, global = true)]
    pub timing: bool,
    /// Domain: ball or annulus [default: annulus]
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// Annulus inner radius, or list for certificate [default: 0.9]
    #[arg(long, global = true)]
    pub a: Option<String>,
    /// Number of polygon vertices [default: 2]
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// λ list [default: 0; energy-check 0.95·λ₀; error-norm with critical rates λ₀ + ε]
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Polygon radius list [default: (1+a)/2; polygon-scan the radial scan grid; energy-check r₀]
    #[arg(long, global = true)]
    pub r: Option<String>,
    /// Concentration rates [default: log:-3.5:-2.5:7]
    #[arg(long, global = true)]
    pub mu: Option<String>,
    /// Scaling parameters [default: 0.01,0.02,0.05,0.1]
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// First point [default: ((1+a)/2, 0, 0)]
    #[arg(long, global = true)]
    pub x: Option<String>,
    /// Second point [default: (0, (1+a)/2, 0)]
    #[arg(long, global = true)]
    pub y: Option<String>,
    /// Concentration points for matrix [default: the k-gon at the first r]
    #[arg(long, global = true)]
    pub points: Option<String>,
    /// Mode-series tail tolerance [default: 1e-12]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// λ bisection tolerance [default: 1e-9·λ₁]
    #[arg(long, global = true)]
    pub lambda_tol: Option<f64>,
    /// Inner-radius bisection tolerance for threshold-a [default: 1e-3]
    #[arg(long, global = true)]
    pub a_tol: Option<f64>,
    /// Relative quadrature tolerance for verify-constants [default: 1e-12]
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Largest relative error accepted by verify-constants [default: 1e-8]
    #[arg(long, global = true)]
    pub check_tol: Option<f64>,
    /// Largest relative error of c1 in energy-check [default: 0.02]
    #[arg(long, global = true)]
    pub c1_tol: Option<f64>,
    /// Largest relative error of c2 in energy-check [default: 0.1]
    #[arg(long, global = true)]
    pub c2_tol: Option<f64>,
    /// Smallest remainder order accepted by energy-check [default: 2.3]
    #[arg(long, global = true)]
    pub min_order: Option<f64>,
    /// Rate choice for error-norm: critical (μ₀(λ₀+ε, r₀)) or generic (μ = ε) [default: critical]
    #[arg(long, global = true)]
    pub mu_mode: Option<String>,
    /// Weight exponent of ‖·‖_** [default: 0.5]
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    /// Sample points per norm evaluation [default: 20000]
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Smallest ε-exponent accepted with critical rates [default: 1.6]
    #[arg(long, global = true)]
    pub min_exponent: Option<f64>,
    /// Largest ε-exponent accepted with generic rates [default: 1.3]
    #[arg(long, global = true)]
    pub max_exponent: Option<f64>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Compute(e) => write!(f, "error: {e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Outcome<T> {
    v.trim().parse().map_err(|_| usage(format!("cannot parse {key} = {v:?}")))
}

/// Reads `key=value` lines; `#` starts a comment.
pub fn read_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl Options {
    /// Fill unset options from a config map.
    fn merge(&mut self, mut map: BTreeMap<String, String>) -> Outcome<()> {
        macro_rules! fill {
            ($($f:ident),*) => {$(
                if let Some(v) = map.remove(stringify!($f)) {
                    if self.$f.is_none() {
                        self.$f = Some(parse_value(stringify!($f), &v)?);
                    }
                }
            )*};
        }
        fill!(threads, format, output, domain, a, k, lambda, r, mu, eps, x, y, points, tol, lambda_tol, a_tol, quad_tol);
        fill!(check_tol, c1_tol, c2_tol, min_order, mu_mode, nu, budget, min_exponent, max_exponent);
        if let Some(v) = map.remove("timing") {
            self.timing |= parse_value::<bool>("timing", &v)?;
        }
        if let Some(k) = map.keys().next() {
            return Err(usage(format!("unknown config key {k:?}")));
        }
        Ok(())
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 4 && (parts[0] == "lin" || parts[0] == "log") {
        let lo: f64 = parts[1].trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
        let hi: f64 = parts[2].trim().parse().map_err(|_| format!("bad range end in {s:?}"))?;
        let n: usize = parts[3].trim().parse().map_err(|_| format!("bad range count in {s:?}"))?;
        if n == 0 {
            return Err(format!("empty range {s:?}"));
        }
        let at = |i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        return Ok((0..n).map(|i| if parts[0] == "log" { 10f64.powf(at(i)) } else { at(i) }).collect());
    }
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in {s:?}"))).collect()
}

pub fn parse_point(s: &str) -> Result<Point3, String> {
    let v = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<Vec<f64>, _>>().map_err(|_| format!("bad point {s:?}"))?;
    match v[..] {
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("a point needs three coordinates, got {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    Critical,
    Generic,
}

/// The merged configuration, echoed verbatim in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub domain: DomainSpec,
    pub k: usize,
    pub a: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub x: Point3,
    pub y: Point3,
    pub points: Option<Vec<Point3>>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub mu_mode: MuMode,
    pub nu: f64,
    pub budget: usize,
    pub threads: Option<usize>,
    pub format: Format,
    pub output: String,
}

fn ascending(name: &str, v: &[f64]) -> Outcome<()> {
    if v.is_empty() {
        return Err(usage(format!("{name} grid is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!("{name} grid must be strictly ascending and finite")));
    }
    Ok(())
}

impl RunConfig {
    fn resolve(command: Command, o: &Options) -> Outcome<Self> {
        let list = |name: &str, s: &Option<String>| -> Outcome<Option<Vec<f64>>> {
            match s {
                None => Ok(None),
                Some(s) => {
                    let v = parse_list(s).map_err(usage)?;
                    ascending(name, &v)?;
                    Ok(Some(v))
                }
            }
        };
        let format = match o.format.as_deref().unwrap_or("json") {
            "json" => Format::Json,
            "csv" => Format::Csv,
            f => return Err(usage(format!("format must be json or csv, got {f:?}"))),
        };
        let mu_mode = match o.mu_mode.as_deref().unwrap_or("critical") {
            "critical" => MuMode::Critical,
            "generic" => MuMode::Generic,
            m => return Err(usage(format!("mu-mode must be critical or generic, got {m:?}"))),
        };
        let a = list("a", &o.a)?.unwrap_or_else(|| vec![0.9]);
        let domain = match o.domain.as_deref().unwrap_or("annulus") {
            "ball" => DomainSpec::UnitBall,
            "annulus" => DomainSpec::annulus(a[0])?,
            d => return Err(usage(format!("domain must be ball or annulus, got {d:?}"))),
        };
        let mid = 0.5 * (1.0 + domain.inner_radius());
        let point = |s: &Option<String>, dflt: Point3| -> Outcome<Point3> {
            s.as_deref().map_or(Ok(dflt), |s| parse_point(s).map_err(usage))
        };
        let points = match &o.points {
            None => None,
            Some(s) => Some(s.split(';').map(parse_point).collect::<Result<Vec<_>, _>>().map_err(usage)?),
        };
        let l1 = lambda1(&domain);
        let mut tolerances = BTreeMap::new();
        let mut tol = |name: &'static str, v: Option<f64>, dflt: f64| -> Outcome<()> {
            let v = v.unwrap_or(dflt);
            if !(v > 0.0) {
                return Err(usage(format!("{name} must be positive, got {v}")));
            }
            tolerances.insert(name, v);
            Ok(())
        };
        tol("series", o.tol, 1e-12)?;
        tol("lambda", o.lambda_tol, 1e-9 * l1)?;
        tol("a", o.a_tol, 1e-3)?;
        tol("quadrature", o.quad_tol, 1e-12)?;
        tol("constants", o.check_tol, 1e-8)?;
        tol("c1", o.c1_tol, 0.02)?;
        tol("c2", o.c2_tol, 0.1)?;
        tol("min_order", o.min_order, 2.3)?;
        tol("min_exponent", o.min_exponent, 1.6)?;
        tol("max_exponent", o.max_exponent, 1.3)?;
        let k = o.k.unwrap_or(2);
        if k == 0 {
            return Err(usage("k must be at least 1"));
        }
        Ok(RunConfig {
            command: command.name(),
            domain,
            k,
            a,
            lambda: list("lambda", &o.lambda)?,
            r: list("r", &o.r)?,
            mu: list("mu", &o.mu)?.unwrap_or_else(|| parse_list("log:-3.5:-2.5:7").expect("default grid")),
            eps: list("eps", &o.eps)?.unwrap_or_else(|| vec![0.01, 0.02, 0.05, 0.1]),
            x: point(&o.x, [mid, 0.0, 0.0])?,
            y: point(&o.y, [0.0, mid, 0.0])?,
            points,
            tolerances,
            mu_mode,
            nu: o.nu.unwrap_or(DEFAULT_NU),
            budget: o.budget.unwrap_or(20_000),
            threads: o.threads,
            format,
            output: o.output.clone().unwrap_or_else(|| "-".into()),
        })
    }

    fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    fn annulus_a(&self) -> Outcome<f64> {
        match self.domain {
            DomainSpec::Annulus { a } => Ok(a),
            DomainSpec::UnitBall => Err(usage(format!("{} needs --domain annulus", self.command))),
        }
    }

    fn lambdas(&self) -> Vec<f64> {
        self.lambda.clone().unwrap_or_else(|| vec![0.0])
    }

    fn single_lambda(&self) -> Outcome<Option<f64>> {
        match self.lambda.as_deref() {
            None => Ok(None),
            Some([l]) => Ok(Some(*l)),
            Some(_) => Err(usage(format!("{} takes a single λ", self.command))),
        }
    }

    fn first_r(&self) -> f64 {
        self.r.as_ref().map_or(0.5 * (1.0 + self.domain.inner_radius()), |r| r[0])
    }

    /// The k-gon at radius `r` in the equatorial plane (any domain).
    fn polygon(&self, r: f64) -> Vec<Point3> {
        let k = self.k;
        (0..k)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                [r * th.cos(), r * th.sin(), 0.0]
            })
            .collect()
    }
}

/// Tabular view of a report: one header, fixed columns.
#[derive(Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

/// 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_real(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

struct Product {
    results: Value,
    diagnostics: Value,
    table: Table,
    /// `Some(false)` makes the run exit with status 2.
    verdict: Option<bool>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn cmd_green(c: &RunConfig) -> Outcome<Product> {
    let tol = c.tol("series");
    let evals = c.lambdas().par_iter().map(|&l| green(&c.domain, l, &c.x, &c.y, tol)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Value> = c.lambdas().iter().zip(&evals).map(|(l, e)| json!({"lambda": l, "green": e})).collect();
    let table = Table {
        header: vec!["lambda", "value", "truncation_order", "tail_bound"],
        rows: c.lambdas().iter().zip(&evals).map(|(&l, e)| row![l, e.value, e.truncation_order, e.tail_bound]).collect(),
    };
    Ok(Product { results: json!({"x": c.x, "y": c.y, "rows": rows}), diagnostics: json!({"series_tol": tol}), table, verdict: None })
}

fn cmd_robin(c: &RunConfig) -> Outcome<Product> {
    let tol = c.tol("series");
    let evals = c.lambdas().par_iter().map(|&l| robin(&c.domain, l, &c.x, tol)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Value> = c.lambdas().iter().zip(&evals).map(|(l, e)| json!({"lambda": l, "robin": e})).collect();
    let table = Table {
        header: vec!["lambda", "value", "truncation_order", "tail_bound"],
        rows: c.lambdas().iter().zip(&evals).map(|(&l, e)| row![l, e.value, e.truncation_order, e.tail_bound]).collect(),
    };
    Ok(Product { results: json!({"x": c.x, "rows": rows}), diagnostics: json!({"series_tol": tol}), table, verdict: None })
}

fn cmd_matrix(c: &RunConfig) -> Outcome<Product> {
    let lambda = c.single_lambda()?.unwrap_or(0.0);
    let pts = c.points.clone().unwrap_or_else(|| c.polygon(c.first_r()));
    let m = build_matrix(&c.domain, lambda, &pts, c.tol("series"))?;
    let e = eigen(&m)?;
    let p = psi(&m);
    let n = m.size();
    let mut table = Table { header: vec!["row", "col", "value"], rows: Vec::new() };
    for i in 0..n {
        for j in 0..n {
            table.rows.push(row![i, j, m.entries.get(i, j)]);
        }
    }
    let results = json!({
        "lambda": lambda,
        "points": pts,
        "matrix": m.entries.rows(),
        "psi": p,
        "determinant": determinant(&m.entries),
        "eigenvalues": e.values,
        "eigenvectors": e.vectors,
        "psd": e.values[0] >= 0.0,
    });
    let diagnostics = json!({
        "series_tol": c.tol("series"),
        "max_tail_bound": m.max_tail_bound,
        "max_truncation_order": m.max_truncation_order,
        "jacobi_sweeps": e.sweeps,
    });
    Ok(Product { results, diagnostics, table, verdict: None })
}

fn cmd_polygon_scan(c: &RunConfig) -> Outcome<Product> {
    let a = c.annulus_a()?;
    let k = c.k;
    let rs = c.r.clone().unwrap_or_else(|| radial_grid(a));
    let cells: Vec<(f64, f64)> = c.lambdas().iter().flat_map(|&l| rs.iter().map(move |&r| (l, r))).collect();
    let tol = c.tol("series");
    let rows = cells
        .par_iter()
        .map(|&(l, r)| polygon_row(a, k, l, r, tol).map(|row| (l, r, row)))
        .collect::<Result<Vec<_>, _>>()?;
    let table = Table {
        header: vec!["lambda", "r", "robin", "sigma1", "f_lambda", "tail_bound", "truncation_order"],
        rows: rows
            .iter()
            .map(|(l, r, row)| row![*l, *r, row.robin, row.sigma1(), k as f64 * row.sigma1(), row.tail_bound, row.truncation_order])
            .collect(),
    };
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|(l, r, row)| json!({"lambda": l, "r": r, "robin": row.robin, "green": row.green, "sigma1": row.sigma1(), "tail_bound": row.tail_bound, "truncation_order": row.truncation_order}))
        .collect();
    Ok(Product { results: json!({"a": a, "k": k, "rows": json_rows}), diagnostics: json!({"series_tol": tol}), table, verdict: None })
}

fn cmd_find_critical(c: &RunConfig) -> Outcome<Product> {
    let a = c.annulus_a()?;
    let consts = EnergyConstants::closed_forms();
    let rep = theorem1_report(a, c.k, c.tol("lambda"), &consts)?;
    let ch = &rep.checks;
    let verdict = ch.psi_zero && ch.psd && ch.radial_crit && ch.monotone_lambda && ch.lambda0_below_lambda_star;
    let table = Table {
        header: vec!["eps", "lambda", "mu0"],
        rows: rep.mu0_curve.iter().map(|&(e, m)| row![e, rep.lambda0 + e, m]).collect(),
    };
    let diagnostics = json!({
        "lambda_tol": c.tol("lambda"),
        "series_tol": SERIES_TOL,
        "d_sigma1_d_lambda_step": rep.d_sigma1_d_lambda.step,
        "d_sigma1_d_r_step": rep.d_sigma1_d_r.step,
    });
    Ok(Product { results: to_value(&rep), diagnostics, table, verdict: Some(verdict) })
}

fn cmd_threshold_a(c: &RunConfig) -> Outcome<Product> {
    let rep = a_threshold(c.k, c.tol("a"))?;
    let table = Table {
        header: vec!["k", "threshold", "bracket_lo", "bracket_hi"],
        rows: vec![row![rep.k, rep.threshold.unwrap_or(f64::NAN), rep.bracket.0, rep.bracket.1]],
    };
    Ok(Product { results: to_value(&rep), diagnostics: json!({"a_tol": c.tol("a")}), table, verdict: None })
}

fn cmd_certificate(c: &RunConfig) -> Outcome<Product> {
    let certs = c.a.iter().map(|&a| two_bubble_certificate(a)).collect::<Result<Vec<_>, _>>()?;
    let verdict = certs.iter().all(|x| x.holds);
    let table = Table {
        header: vec!["a", "holds", "margin", "touch_t"],
        rows: c.a.iter().zip(&certs).map(|(&a, x)| row![a, x.holds, x.margin, x.touch_t.unwrap_or(f64::NAN)]).collect(),
    };
    let results = if certs.len() == 1 {
        json!({"a": c.a[0], "holds": certs[0].holds, "margin": certs[0].margin, "touch_t": certs[0].touch_t})
    } else {
        json!({"rows": c.a.iter().zip(&certs).map(|(a, x)| json!({"a": a, "holds": x.holds, "margin": x.margin, "touch_t": x.touch_t})).collect::<Vec<_>>()})
    };
    Ok(Product { results, diagnostics: json!({"closed_form": true}), table, verdict: Some(verdict) })
}

fn cmd_verify_constants(c: &RunConfig) -> Outcome<Product> {
    let consts = compute_constants(c.tol("quadrature"))?;
    let limit = c.tol("constants");
    let pairs = [("a0", consts.a0), ("a1", consts.a1), ("a2", consts.a2), ("a3", consts.a3)];
    let verdict = pairs.iter().all(|(_, p)| p.relative_error() <= limit);
    let table = Table {
        header: vec!["name", "closed_form", "quadrature", "quadrature_error", "relative_error"],
        rows: pairs.iter().map(|(n, p)| row![*n, p.closed_form, p.quadrature, p.quadrature_error, p.relative_error()]).collect(),
    };
    let rows: Vec<Value> = pairs
        .iter()
        .map(|(n, p)| json!({"name": n, "closed_form": p.closed_form, "quadrature": p.quadrature, "quadrature_error": p.quadrature_error, "relative_error": p.relative_error()}))
        .collect();
    Ok(Product {
        results: json!({"rows": rows, "max_relative_error": limit}),
        diagnostics: json!({"quadrature_tol": c.tol("quadrature")}),
        table,
        verdict: Some(verdict),
    })
}

fn cmd_energy_check(c: &RunConfig) -> Outcome<Product> {
    let a = c.annulus_a()?;
    let consts = EnergyConstants::closed_forms();
    let (lambda, r, crit) = match (c.single_lambda()?, c.r.as_deref()) {
        (Some(l), Some([r])) => (l, *r, None),
        (l, r) => {
            if matches!(r, Some(v) if v.len() != 1) {
                return Err(usage("energy-check takes a single r"));
            }
            let cr = find_lambda0(a, c.k, c.tol("lambda"))?;
            (l.unwrap_or(0.95 * cr.lambda0), r.map_or(cr.r0, |v| v[0]), Some(cr))
        }
    };
    let cfg = PolygonConfig::new(c.k, r, a)?;
    let descending: Vec<f64> = c.mu.iter().rev().copied().collect();
    let fit = expansion_fit(&c.domain, &cfg, lambda, &descending, &consts)?;
    let rep = &fit.report;
    let verdict = rep.c1_relative_error <= c.tol("c1") && rep.c2_relative_error <= c.tol("c2") && fit.order >= c.tol("min_order");
    let table = Table {
        header: vec!["mu", "energy", "error_estimate", "excess", "residual"],
        rows: rep.rows.iter().rev().map(|w| row![w.mu, w.energy, w.error_estimate, w.excess, w.residual]).collect(),
    };
    let diagnostics = json!({
        "quadrature_level": FIT_LEVEL,
        "critical_pair": crit,
        "max_energy_error_estimate": rep.rows.iter().map(|w| w.error_estimate).fold(0.0, f64::max),
    });
    Ok(Product { results: to_value(&fit), diagnostics, table, verdict: Some(verdict) })
}

fn cmd_error_norm(c: &RunConfig) -> Outcome<Product> {
    let consts = EnergyConstants::closed_forms();
    let mut table = Table { header: vec!["eps", "lambda", "mu", "norm", "error_at_argmax", "samples"], rows: Vec::new() };
    let mut rows = Vec::new();
    let mut crit = None;
    for &eps in &c.eps {
        let (lambda, r, mu) = match c.mu_mode {
            MuMode::Critical => {
                let a = c.annulus_a()?;
                if crit.is_none() {
                    crit = Some(find_lambda0(a, c.k, c.tol("lambda"))?);
                }
                let cr = crit.as_ref().expect("critical pair");
                let l = cr.lambda0 + eps;
                (l, cr.r0, mu0(a, c.k, l, cr.r0, &consts)?)
            }
            MuMode::Generic => (c.single_lambda()?.unwrap_or(0.0), c.first_r(), eps),
        };
        let pts = match (c.mu_mode, c.domain) {
            (MuMode::Critical, DomainSpec::Annulus { a }) => polygon_points(&PolygonConfig::new(c.k, r, a)?),
            _ => c.points.clone().unwrap_or_else(|| c.polygon(r)),
        };
        let bubbles = pts.iter().map(|p| BubbleParams::new(mu, *p)).collect::<Result<Vec<_>, _>>()?;
        let ansatz = build_ansatz(&c.domain, lambda, &bubbles)?;
        let n = norm_star_star(&ansatz, eps, c.nu, c.budget)?;
        table.rows.push(row![eps, lambda, mu, n.value, n.error_at_argmax, n.samples]);
        rows.push(json!({"eps": eps, "lambda": lambda, "mu": mu, "norm": n}));
    }
    let le: Vec<f64> = c.eps.iter().map(|e| e.ln()).collect();
    let ln: Vec<f64> = table.rows.iter().map(|r| if let Cell::Num(v) = r[3] { v.ln() } else { f64::NAN }).collect();
    let exponent = linear_fit(&le, &ln).map(|(_, s)| s);
    let verdict = exponent.map(|s| match c.mu_mode {
        MuMode::Critical => s >= c.tol("min_exponent"),
        MuMode::Generic => s <= c.tol("max_exponent"),
    });
    let results = json!({"mu_mode": c.mu_mode, "rows": rows, "exponent": exponent});
    let diagnostics = json!({"sample_budget": c.budget, "nu": c.nu, "critical_pair": crit});
    Ok(Product { results, diagnostics, table, verdict })
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: &'static str,
    inputs: &'a RunConfig,
    results: Value,
    diagnostics: Value,
    verdict: Option<bool>,
}

fn execute(command: Command, cfg: &RunConfig, timing: bool) -> Outcome<(String, Option<bool>)> {
    let start = Instant::now();
    let mut product = match command {
        Command::Green => cmd_green(cfg),
        Command::Robin => cmd_robin(cfg),
        Command::Matrix => cmd_matrix(cfg),
        Command::PolygonScan => cmd_polygon_scan(cfg),
        Command::FindCritical => cmd_find_critical(cfg),
        Command::ThresholdA => cmd_threshold_a(cfg),
        Command::Certificate => cmd_certificate(cfg),
        Command::VerifyConstants => cmd_verify_constants(cfg),
        Command::EnergyCheck => cmd_energy_check(cfg),
        Command::ErrorNorm => cmd_error_norm(cfg),
    }?;
    if timing {
        if let Value::Object(m) = &mut product.diagnostics {
            m.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
        }
    }
    let text = match cfg.format {
        Format::Csv => product.table.to_csv(),
        Format::Json => {
            let report = Report {
                schema_version: SCHEMA_VERSION,
                inputs: cfg,
                results: product.results,
                diagnostics: product.diagnostics,
                verdict: product.verdict,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    Ok((text, product.verdict))
}

fn run_parsed(cli: Cli) -> Outcome<i32> {
    let mut opts = cli.opts;
    if let Some(path) = opts.config.clone() {
        let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
        opts.merge(read_config(&text).map_err(|e| usage(format!("{path}: {e}")))?)?;
    }
    let cfg = RunConfig::resolve(cli.command, &opts)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(usage("threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| usage(format!("thread pool: {e}")))?;
    let (text, verdict) = pool.install(|| execute(cli.command, &cfg, opts.timing))?;
    if cfg.output == "-" {
        print!("{text}");
    } else {
        std::fs::write(&cfg.output, text).map_err(|e| usage(format!("cannot write {}: {e}", cfg.output)))?;
    }
    Ok(if verdict == Some(false) { 2 } else { 0 })
}

/// Parse `argv` (including the program name), run one subcommand and return
/// the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}
