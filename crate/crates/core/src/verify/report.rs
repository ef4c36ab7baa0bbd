//! Report documents and their JSON, CSV and text renderings.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::tail::TailFit;

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x + 0.0;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest rendering of `round_sig(x)`; `inf`, `-inf` and `nan` spelled out.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        serde_json::to_string(&round_sig(x)).expect("finite floats serialize")
    }
}

/// Rounds every float of a JSON document. Non-finite floats become strings.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            serde_json::Number::from_f64(round_sig(x))
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(fmt_num(x)))
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// A float that survives JSON serialization when infinite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(fmt_num(x)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub case: String,
    pub statistic: String,
    #[serde(serialize_with = "ser_num")]
    pub value: f64,
    pub pass: bool,
}

fn ser_num<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    num(*x).serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailPoint {
    pub t: f64,
    /// Atoms above the threshold.
    pub count: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailTable {
    pub case: String,
    pub points: Vec<TailPoint>,
}

impl TailTable {
    pub fn fractions(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.t, p.fraction)).collect()
    }
}

/// `μ{v > t}/total` with atom counts at `t = 0, step, 2·step, …` up to the
/// first empty bin, or until `max_bins` bins.
pub fn tail_table(
    case: impl Into<String>,
    values: &[f64],
    weights: &[f64],
    total: f64,
    step: f64,
    max_bins: usize,
) -> TailTable {
    let mut points = Vec::new();
    for k in 0..max_bins {
        let t = k as f64 * step;
        let (count, mass) = values
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v > t)
            .fold((0usize, 0.0), |(c, m), (_, w)| (c + 1, m + w));
        points.push(TailPoint {
            t,
            count,
            fraction: mass / total,
        });
        if count == 0 {
            break;
        }
    }
    TailTable {
        case: case.into(),
        points,
    }
}

/// Outcome of one harness run: rows `{case, statistic, value, pass}`, tail
/// tables and an ordered summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub pass: bool,
    pub summary: Map<String, Value>,
    pub rows: Vec<Row>,
    pub tails: Vec<TailTable>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Report {
        Report {
            name: name.into(),
            pass: true,
            summary: Map::new(),
            rows: Vec::new(),
            tails: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn row(&mut self, case: &str, statistic: &str, value: f64, pass: bool) {
        self.rows.push(Row {
            case: case.to_string(),
            statistic: statistic.to_string(),
            value,
            pass,
        });
    }

    pub fn stat(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn stat_num(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), num(value));
    }

    pub fn fit(&mut self, case: &str, fit: &TailFit) {
        self.row(case, "fit_rate", fit.rate.unwrap_or(f64::NAN), fit.passes());
        self.row(case, "fit_bins", fit.bins as f64, true);
        if fit.degenerate {
            self.warnings.push(format!("{case}: step profile, {} usable bins", fit.bins));
        }
    }

    /// Every row passes.
    pub fn rows_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failing(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    /// Concatenation of sub-reports; tails and rows keep their case ids.
    pub fn merge(name: impl Into<String>, parts: Vec<Report>) -> Report {
        let mut out = Report::new(name);
        for p in parts {
            out.pass &= p.pass;
            out.rows.extend(p.rows);
            out.tails.extend(p.tails);
            out.warnings.extend(p.warnings);
        }
        out
    }

    pub fn max_value(&self, statistic: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.statistic == statistic)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn to_value(&self) -> Value {
        normalize(serde_json::to_value(self).expect("reports serialize"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case", "statistic", "value", "pass"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([&r.case, &r.statistic, &fmt_num(r.value), &r.pass.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// One CSV per tail table, header `t,count,fraction`.
    pub fn tail_csvs(&self) -> Vec<(String, String)> {
        self.tails
            .iter()
            .map(|t| {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["t", "count", "fraction"]).expect("in-memory write");
                for p in &t.points {
                    w.write_record([fmt_num(p.t), p.count.to_string(), fmt_num(p.fraction)])
                        .expect("in-memory write");
                }
                (t.case.clone(), String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}: {}\n", self.name, if self.pass { "PASS" } else { "FAIL" });
        for (k, v) in &self.summary {
            let v = match normalize(v.clone()) {
                Value::String(s) => s,
                other => other.to_string(),
            };
            s.push_str(&format!("  {k} = {v}\n"));
        }
        let failing = self.failing();
        if !failing.is_empty() {
            s.push_str(&format!("  {} failing rows:\n", failing.len()));
            for r in failing.iter().take(20) {
                s.push_str(&format!("    {} {} = {}\n", r.case, r.statistic, fmt_num(r.value)));
            }
        }
        for w in self.warnings.iter().take(10) {
            s.push_str(&format!("  warning: {w}\n"));
        }
        if self.warnings.len() > 10 {
            s.push_str(&format!("  ({} more warnings)\n", self.warnings.len() - 10));
        }
        s
    }
}
