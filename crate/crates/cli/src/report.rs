//! Report assembly and the generated column schema.

use serde::Serialize;
use serde_json::{json, Value};

/// What every report carries about its origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub report: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Csv { columns: Vec<&'static str>, rows: Vec<Vec<String>>, notes: Vec<(String, String)> },
    Json(Value),
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: &'static str,
    pub body: Body,
    /// Named invariants that failed; empty means the report passed.
    pub violations: Vec<String>,
}

/// Shortest round-trip form, in exponent notation outside `[1e−4, 1e15)`;
/// deterministic for bit-identical inputs.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Values allowed in `# key = value` report lines.
pub trait NoteValue {
    fn render(&self) -> String;
}

impl NoteValue for f64 {
    fn render(&self) -> String {
        num(*self)
    }
}

macro_rules! display_note {
    ($($t:ty),*) => {
        $(impl NoteValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_note!(usize, i32, bool, &str, String);

impl Report {
    pub fn csv(name: &'static str, columns: Vec<&'static str>) -> Self {
        Self { name, body: Body::Csv { columns, rows: Vec::new(), notes: Vec::new() }, violations: Vec::new() }
    }

    pub fn json(name: &'static str, value: Value) -> Self {
        Self { name, body: Body::Json(value), violations: Vec::new() }
    }

    pub fn row(&mut self, row: Vec<String>) {
        if let Body::Csv { rows, columns, .. } = &mut self.body {
            debug_assert_eq!(row.len(), columns.len());
            rows.push(row);
        }
    }

    pub fn note(&mut self, key: &str, value: impl NoteValue) {
        if let Body::Csv { notes, .. } = &mut self.body {
            notes.push((key.to_string(), value.render()));
        }
    }

    pub fn require(&mut self, ok: bool, invariant: impl Into<String>) {
        if !ok {
            self.violations.push(invariant.into());
        }
    }

    pub fn extension(&self) -> &'static str {
        match self.body {
            Body::Csv { .. } => "csv",
            Body::Json(_) => "json",
        }
    }

    pub fn file_name(&self, hash: &str) -> String {
        format!("{}-{}.{}", self.name, hash, self.extension())
    }

    pub fn status(&self) -> String {
        if self.violations.is_empty() {
            "ok".into()
        } else {
            format!("violated: {}", self.violations.join("; "))
        }
    }

    pub fn render(&self, meta: &Meta) -> String {
        match &self.body {
            Body::Csv { columns, rows, notes } => {
                let mut out = String::new();
                out.push_str(&format!("# report = {}\n", meta.report));
                out.push_str(&format!("# config_hash = {}\n", meta.config_hash));
                out.push_str(&format!("# seed = {}\n", meta.seed));
                out.push_str(&format!("# version = {}\n", meta.version));
                out.push_str(&format!("# status = {}\n", self.status()));
                for (k, v) in notes {
                    out.push_str(&format!("# {k} = {v}\n"));
                }
                out.push_str(&columns.join(","));
                out.push('\n');
                for r in rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                out
            }
            Body::Json(v) => {
                let doc = json!({
                    "meta": meta,
                    "status": self.status(),
                    "violations": self.violations,
                    "data": v,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

/// Column documentation for every CSV report and the keys of the JSON ones.
pub fn schema() -> Value {
    let cols = |pairs: &[(&str, &str)]| -> Value {
        Value::Array(pairs.iter().map(|(n, d)| json!({"name": n, "description": d})).collect())
    };
    json!({
        "besov-check.csv": cols(&[
            ("name", "quantity: partition checks, dirac block norms, drift norms, drift Besov norms"),
            ("i", "block index where applicable"),
            ("s", "regularity"), ("p", "integrability"), ("q", "summability"),
            ("value", "measured value"),
        ]),
        "parametrix.csv": cols(&[
            ("x1", "first coordinate"), ("x2", "second coordinate (d = 2)"),
            ("gamma", "backward kernel x -> Gamma_t(x, y)"),
            ("dgamma1", "first partial derivative"), ("dgamma2", "second partial derivative (d = 2)"),
        ]),
        "parametrix.json": ["t", "y", "K_used", "tail_estimate", "term_sup_norms", "richardson_gap", "forward_mass"],
        "cauchy.json": ["solver", "c_fit", "t0", "raw_gap", "extrapolated_gap", "eps"],
        "verify-upper.csv": cols(&[
            ("t", "time"), ("amplitude", "drift amplitude"), ("X", "low-block norm"), ("Y", "high-block norm"),
            ("C_upper", "sup of Gamma_t / p(ct)"), ("kappa", "largest lower dilation with positive infimum"),
            ("C_lower", "inf of Gamma_t / p(kappa t)"),
            ("slope", "per-amplitude slope of log C_upper against t (X^2 + Y^(2/(1-alpha)))"), ("R2", "fit quality"),
        ]),
        "verify-lower.csv": cols(&[
            ("t", "time n a"), ("inf_ratio", "inf of q_t / p(kappa t)"), ("bound", "M^(-1-t/a)"),
            ("kappa", "lower dilation"), ("M", "short-time constant"), ("holds", "inf_ratio >= bound"),
        ]),
        "sharpness.csv": cols(&[
            ("side", "upper or lower"), ("dilation", "c or kappa"), ("measured", "sup or inf kernel ratio"),
            ("formula", "closed form for constant drift"), ("rel_err", "relative deviation"),
        ]),
        "escape.csv": cols(&[
            ("K", "radius"), ("p_hat", "fraction of paths with discrete sup >= K"),
            ("ci_lo", "Wilson 95% lower end"), ("ci_hi", "Wilson 95% upper end"),
            ("oracle", "Brownian value (zero drift, d = 1) or NaN"), ("allowance", "CI half-width plus monitoring bias"),
        ]),
        "grr.csv": cols(&[
            ("path", "path index"), ("F", "double integral functional"), ("G", "2 sqrt(F v 4)"),
            ("violations", "sampled pairs breaking the pathwise bound"), ("max_ratio", "largest lhs / rhs"),
            ("sup_modulus", "sup |X_t - X_s| / psi(t - s)"),
        ]),
        "mollify-sweep.csv": cols(&[
            ("n", "mollification level"), ("X", "low-block norm of b^(n)"), ("Y", "high-block norm of b^(n)"),
            ("besov_gap", "B^(-alpha)_(inf,1) distance to the finest level"),
            ("density_l1", "L1 distance of forward densities to the finest level"),
        ]),
        "ibound-table.csv": cols(&[
            ("i", "derivative order"), ("beta", "0 or alpha"), ("k", "series index"), ("t", "time"),
            ("empirical", "measured I"), ("rhs", "closed-form bound with fitted constants"),
        ]),
    })
}
