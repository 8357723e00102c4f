use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ReportFormat, Theorem};
use crate::error::{Error, Result};
use crate::tolerance::ToleranceEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::Inconclusive => "inconclusive",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(RowStatus::Pass),
            "fail" => Some(RowStatus::Fail),
            "inconclusive" => Some(RowStatus::Inconclusive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityGate {
    NearEquality,
    NotNearEquality,
}

/// A failed or unverifiable check. Positive margins mean the check passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub name: String,
    pub margin: f64,
    pub detail: String,
}

/// Pointwise rigidity residuals, filled only past the near-equality gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityResiduals {
    /// `max ‖D²u - f^{1/(n-1)} g‖`.
    pub hessian: f64,
    pub density_gradient: f64,
    /// `max ‖II‖`; zero for domains.
    pub second_form: f64,
    /// Ten times the discretization tolerance.
    pub limit: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub gate: EqualityGate,
    pub rigidity: Option<RigidityResiduals>,
    pub laplacian_margin: Option<f64>,
    pub residual_interior: Option<f64>,
    pub residual_neumann: Option<f64>,
    pub jacobian_samples: usize,
    pub conjugate_samples: usize,
    /// `max (det - bound) / bound` over transported samples.
    pub max_jacobian_excess: Option<f64>,
    pub max_monotonicity_increase: Option<f64>,
    pub min_riccati_margin: Option<f64>,
    pub max_mean_curvature: Option<f64>,
    pub extra: Vec<(String, f64)>,
}

impl Diagnostics {
    pub fn empty() -> Self {
        Self {
            gate: EqualityGate::NotNearEquality,
            rigidity: None,
            laplacian_margin: None,
            residual_interior: None,
            residual_neumann: None,
            jacobian_samples: 0,
            conjugate_samples: 0,
            max_jacobian_excess: None,
            max_monotonicity_increase: None,
            min_riccati_margin: None,
            max_mean_curvature: None,
            extra: Vec::new(),
        }
    }
}

/// One report row. `ratio = lhs / rhs`, and `ratio >= 1` always means the
/// checked inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub case_id: String,
    pub theorem: Theorem,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub status: RowStatus,
    pub h: f64,
    pub ode_tol: f64,
    pub mc_stderr: f64,
    pub seed: u64,
    /// Slack allowed below `ratio = 1`.
    pub ratio_tolerance: f64,
    pub diagnostics: Diagnostics,
    pub violations: Vec<Violation>,
    pub tolerances: Vec<ToleranceEntry>,
}

impl InequalityReport {
    /// Applies the pass rule: `ratio >= 1 - tol` and no violations.
    pub fn finish(mut self) -> Self {
        if self.status == RowStatus::Pass {
            let short = 1.0 - self.ratio_tolerance - self.ratio;
            if !(short <= 0.0) {
                self.violations.push(Violation {
                    name: "ratio".into(),
                    margin: -short,
                    detail: format!("ratio {} below 1 - {}", self.ratio, self.ratio_tolerance),
                });
            }
            if !self.violations.is_empty() {
                self.status = RowStatus::Fail;
            }
        }
        self
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub h: f64,
    pub u_error: f64,
    pub gradient_error: f64,
    pub ratio_error: f64,
    /// Orders against the previous level; absent on the coarsest.
    pub order_u: Option<f64>,
    pub order_gradient: Option<f64>,
    pub order_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Pass,
    Fail,
    Inconclusive,
    /// The case has a closed-form solution; errors sit at quadrature level.
    Exact,
}

impl ConvergenceStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConvergenceStatus::Pass => "pass",
            ConvergenceStatus::Fail => "fail",
            ConvergenceStatus::Inconclusive => "inconclusive",
            ConvergenceStatus::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub case_id: String,
    pub levels: Vec<ConvergenceLevel>,
    pub min_order_u: Option<f64>,
    pub required_order: f64,
    pub status: ConvergenceStatus,
    pub detail: String,
}

pub const CSV_HEADER: [&str; 13] = [
    "case_id", "theorem", "n", "m", "theta", "lhs", "rhs", "ratio", "status", "h", "ode_tol", "mc_stderr", "seed",
];

pub const CONVERGENCE_HEADER: [&str; 9] = [
    "case_id",
    "h",
    "u_error",
    "gradient_error",
    "ratio_error",
    "order_u",
    "order_gradient",
    "order_ratio",
    "status",
];

/// 17 significant digits, round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[InequalityReport]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            csv_field(&r.case_id),
            r.theorem.as_str().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            fmt_f64(r.theta),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.ratio),
            r.status.as_str().to_string(),
            fmt_f64(r.h),
            fmt_f64(r.ode_tol),
            fmt_f64(r.mc_stderr),
            r.seed.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn convergence_to_csv(tables: &[ConvergenceTable]) -> String {
    let mut out = CONVERGENCE_HEADER.join(",");
    out.push('\n');
    for t in tables {
        if t.levels.is_empty() {
            out.push_str(&format!("{},,,,,,,,{}\n", csv_field(&t.case_id), t.status.as_str()));
        }
        for l in &t.levels {
            let fields = [
                csv_field(&t.case_id),
                fmt_f64(l.h),
                fmt_f64(l.u_error),
                fmt_f64(l.gradient_error),
                fmt_f64(l.ratio_error),
                opt(l.order_u),
                opt(l.order_gradient),
                opt(l.order_ratio),
                t.status.as_str().to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    out
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(x, indent + 1, out);
                if i + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(o) => {
            if o.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = o.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_json(&o[k.as_str()], indent + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and 17-digit floats. Non-finite floats
/// become `null`.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    let mut out = String::new();
    write_json(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// Renders report rows. An empty row list is an error.
pub fn emit_report(rows: &[InequalityReport], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no report rows to emit".into()));
    }
    match format {
        ReportFormat::Csv => Ok(rows_to_csv(rows)),
        ReportFormat::Json => to_sorted_json(&rows),
    }
}

pub fn emit_convergence(tables: &[ConvergenceTable], format: ReportFormat) -> Result<String> {
    if tables.is_empty() {
        return Err(Error::Config("no convergence tables to emit".into()));
    }
    match format {
        ReportFormat::Csv => Ok(convergence_to_csv(tables)),
        ReportFormat::Json => to_sorted_json(&tables),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// The CSV columns of a row, parsed back.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSummary {
    pub case_id: String,
    pub theorem: String,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub status: RowStatus,
    pub h: f64,
    pub ode_tol: f64,
    pub mc_stderr: f64,
    pub seed: u64,
}

impl RowSummary {
    pub fn of(r: &InequalityReport) -> Self {
        Self {
            case_id: r.case_id.clone(),
            theorem: r.theorem.as_str().into(),
            n: r.n,
            m: r.m,
            theta: r.theta,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            status: r.status,
            h: r.h,
            ode_tol: r.ode_tol,
            mc_stderr: r.mc_stderr,
            seed: r.seed,
        }
    }

    /// Bitwise equality, treating every NaN as equal.
    pub fn same_bits(&self, other: &Self) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.case_id == other.case_id
            && self.theorem == other.theorem
            && self.n == other.n
            && self.m == other.m
            && self.status == other.status
            && self.seed == other.seed
            && eq(self.theta, other.theta)
            && eq(self.lhs, other.lhs)
            && eq(self.rhs, other.rhs)
            && eq(self.ratio, other.ratio)
            && eq(self.h, other.h)
            && eq(self.ode_tol, other.ode_tol)
            && eq(self.mc_stderr, other.mc_stderr)
    }
}

fn parse_err(line: usize, reason: String) -> Error {
    Error::Parse {
        path: "<report>".into(),
        line,
        reason,
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|e| parse_err(line, format!("`{s}`: {e}")))
}

fn parse_uint<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse::<T>().map_err(|_| parse_err(line, format!("`{s}` is not an unsigned integer")))
}

pub fn parse_csv(text: &str) -> Result<Vec<RowSummary>> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    if header != CSV_HEADER.join(",") {
        return Err(parse_err(1, format!("unexpected header `{header}`")));
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let f = split_csv(l);
            if f.len() != CSV_HEADER.len() {
                return Err(parse_err(line, format!("{} fields", f.len())));
            }
            Ok(RowSummary {
                case_id: f[0].clone(),
                theorem: f[1].clone(),
                n: parse_uint(&f[2], line)?,
                m: parse_uint(&f[3], line)?,
                theta: parse_float(&f[4], line)?,
                lhs: parse_float(&f[5], line)?,
                rhs: parse_float(&f[6], line)?,
                ratio: parse_float(&f[7], line)?,
                status: RowStatus::parse(&f[8]).ok_or_else(|| parse_err(line, format!("status `{}`", f[8])))?,
                h: parse_float(&f[9], line)?,
                ode_tol: parse_float(&f[10], line)?,
                mc_stderr: parse_float(&f[11], line)?,
                seed: parse_uint(&f[12], line)?,
            })
        })
        .collect()
}

pub fn parse_json(text: &str) -> Result<Vec<RowSummary>> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    let rows = v.as_array().ok_or_else(|| parse_err(1, "expected an array of rows".into()))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |k: &str| parse_err(i + 1, format!("row {i}: field `{k}`"));
            let num = |k: &str| -> Result<f64> {
                match r.get(k) {
                    Some(Value::Null) => Ok(f64::NAN),
                    Some(x) => x.as_f64().ok_or_else(|| bad(k)),
                    None => Err(bad(k)),
                }
            };
            let uint = |k: &str| r.get(k).and_then(Value::as_u64).ok_or_else(|| bad(k));
            let text = |k: &str| r.get(k).and_then(Value::as_str).map(str::to_string).ok_or_else(|| bad(k));
            Ok(RowSummary {
                case_id: text("case_id")?,
                theorem: text("theorem")?,
                n: uint("n")? as usize,
                m: uint("m")? as usize,
                theta: num("theta")?,
                lhs: num("lhs")?,
                rhs: num("rhs")?,
                ratio: num("ratio")?,
                status: RowStatus::parse(&text("status")?).ok_or_else(|| bad("status"))?,
                h: num("h")?,
                ode_tol: num("ode_tol")?,
                mc_stderr: num("mc_stderr")?,
                seed: uint("seed")?,
            })
        })
        .collect()
}
