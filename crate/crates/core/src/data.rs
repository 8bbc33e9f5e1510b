//! Observed bivariate survival data and file IO.
//!
//! Two dataset shapes exist. Censored data ([`BivariateDataset`]) carries
//! strictly positive finite times with event indicators and optional
//! covariates. Cure-truth data ([`CureTruthDataset`]) is uncensored and
//! keeps infinite (cured) times as a distinct [`ExtTime`] value so they can
//! never leak into arithmetic as sentinel floats.
//!
//! CSV conventions: comma separator, dot decimal, LF line ends, header
//! `id,t1,t2,d1,d2[,x1_<name>...,x2_<name>...]` for censored data and
//! `id,t1,t2` with the literal token `inf` for cure-truth data. Floats are
//! written in shortest round-trip form, so write -> read is lossless.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

/// A survival time on (0, inf].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtTime {
    Finite(f64),
    Inf,
}

impl ExtTime {
    pub fn is_inf(&self) -> bool {
        matches!(self, ExtTime::Inf)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtTime::Finite(t) => Some(t),
            ExtTime::Inf => None,
        }
    }

    /// Total order with every infinite time tied at the top.
    pub fn compare(&self, other: &ExtTime) -> Ordering {
        match (self, other) {
            (ExtTime::Inf, ExtTime::Inf) => Ordering::Equal,
            (ExtTime::Inf, ExtTime::Finite(_)) => Ordering::Greater,
            (ExtTime::Finite(_), ExtTime::Inf) => Ordering::Less,
            (ExtTime::Finite(a), ExtTime::Finite(b)) => a.total_cmp(b),
        }
    }

    /// Three-valued comparison sign: +1, -1, or 0 for ties. Defined on
    /// (0, inf] without subtraction, so inf-vs-inf is an exact tie.
    pub fn sign(&self, other: &ExtTime) -> i8 {
        match self.compare(other) {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => 0,
        }
    }
}

/// One censored bivariate observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t1: f64,
    pub t2: f64,
    pub d1: bool,
    pub d2: bool,
    pub x1: Option<Vec<f64>>,
    pub x2: Option<Vec<f64>>,
}

impl Observation {
    pub fn uncovariate(t1: f64, t2: f64, d1: bool, d2: bool) -> Self {
        Observation { t1, t2, d1, d2, x1: None, x2: None }
    }
}

/// Censored bivariate dataset with cached event counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateDataset {
    rows: Vec<Observation>,
    covariate_names1: Vec<String>,
    covariate_names2: Vec<String>,
    d1_total: usize,
    d2_total: usize,
    d12_total: usize,
}

impl BivariateDataset {
    pub fn new(
        rows: Vec<Observation>,
        covariate_names1: Vec<String>,
        covariate_names2: Vec<String>,
    ) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !(row.t1 > 0.0 && row.t1.is_finite() && row.t2 > 0.0 && row.t2.is_finite()) {
                return Err(Error::ParamDomain(format!(
                    "observation {i}: censored times must be positive and finite, got ({}, {})",
                    row.t1, row.t2
                )));
            }
            let check = |x: &Option<Vec<f64>>, names: &[String], margin: usize| {
                let len = x.as_ref().map_or(0, |v| v.len());
                if len != names.len() {
                    Err(Error::Shape(format!(
                        "observation {i}: margin-{margin} covariates have length {len}, expected {}",
                        names.len()
                    )))
                } else {
                    Ok(())
                }
            };
            check(&row.x1, &covariate_names1, 1)?;
            check(&row.x2, &covariate_names2, 2)?;
        }
        let d1_total = rows.iter().filter(|r| r.d1).count();
        let d2_total = rows.iter().filter(|r| r.d2).count();
        let d12_total = rows.iter().filter(|r| r.d1 && r.d2).count();
        Ok(BivariateDataset { rows, covariate_names1, covariate_names2, d1_total, d2_total, d12_total })
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d1_total(&self) -> usize {
        self.d1_total
    }

    pub fn d2_total(&self) -> usize {
        self.d2_total
    }

    pub fn d12_total(&self) -> usize {
        self.d12_total
    }

    pub fn covariate_names(&self) -> (&[String], &[String]) {
        (&self.covariate_names1, &self.covariate_names2)
    }

    pub fn has_covariates(&self) -> bool {
        !self.covariate_names1.is_empty() || !self.covariate_names2.is_empty()
    }

    /// Serialize to the CSV dataset format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,t1,t2,d1,d2");
        for name in &self.covariate_names1 {
            let _ = write!(out, ",x1_{name}");
        }
        for name in &self.covariate_names2 {
            let _ = write!(out, ",x2_{name}");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                i + 1,
                row.t1,
                row.t2,
                row.d1 as u8,
                row.d2 as u8
            );
            if let Some(x) = &row.x1 {
                for v in x {
                    let _ = write!(out, ",{v}");
                }
            }
            if let Some(x) = &row.x2 {
                for v in x {
                    let _ = write!(out, ",{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV dataset format. Errors carry 1-based line numbers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 5 || cols[..5] != ["id", "t1", "t2", "d1", "d2"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header id,t1,t2,d1,d2[,x1_*,x2_*], got `{header}`"),
            });
        }
        let mut names1 = Vec::new();
        let mut names2 = Vec::new();
        for col in &cols[5..] {
            if let Some(name) = col.strip_prefix("x1_") {
                if !names2.is_empty() {
                    return Err(Error::Parse {
                        line: 1,
                        message: "x1_* columns must precede x2_* columns".into(),
                    });
                }
                names1.push(name.to_string());
            } else if let Some(name) = col.strip_prefix("x2_") {
                names2.push(name.to_string());
            } else {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unrecognized column `{col}`"),
                });
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let fnum = |s: &str, what: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("invalid {what} `{s}`"),
                })
            };
            let flag = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::Parse {
                    line: lineno,
                    message: format!("invalid {what} `{s}` (expected 0 or 1)"),
                }),
            };
            let t1 = fnum(fields[1], "t1")?;
            let t2 = fnum(fields[2], "t2")?;
            let d1 = flag(fields[3], "d1")?;
            let d2 = flag(fields[4], "d2")?;
            let mut at = 5;
            let take = |at: &mut usize, count: usize, fields: &[&str]| -> Result<Option<Vec<f64>>> {
                if count == 0 {
                    return Ok(None);
                }
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    v.push(fnum(fields[*at], "covariate")?);
                    *at += 1;
                }
                Ok(Some(v))
            };
            let x1 = take(&mut at, names1.len(), &fields)?;
            let x2 = take(&mut at, names2.len(), &fields)?;
            rows.push(Observation { t1, t2, d1, d2, x1, x2 });
        }
        BivariateDataset::new(rows, names1, names2)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Uncensored bivariate sample with explicit infinite times, as used by the
/// rank-correlation validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureTruthDataset {
    pub pairs: Vec<(ExtTime, ExtTime)>,
}

impl CureTruthDataset {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,t1,t2\n");
        let fmt = |t: &ExtTime, out: &mut String| match t {
            ExtTime::Finite(v) => {
                let _ = write!(out, "{v}");
            }
            ExtTime::Inf => out.push_str("inf"),
        };
        for (i, (t1, t2)) in self.pairs.iter().enumerate() {
            let _ = write!(out, "{},", i + 1);
            fmt(t1, &mut out);
            out.push(',');
            fmt(t2, &mut out);
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })?;
        if header.trim_end() != "id,t1,t2" {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header id,t1,t2, got `{header}`"),
            });
        }
        let mut pairs = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<ExtTime> {
                if s == "inf" {
                    Ok(ExtTime::Inf)
                } else {
                    let t = s.parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("invalid time `{s}`"),
                    })?;
                    if t > 0.0 && t.is_finite() {
                        Ok(ExtTime::Finite(t))
                    } else {
                        Err(Error::Parse {
                            line: lineno,
                            message: format!("times must be positive, got `{s}`"),
                        })
                    }
                }
            };
            pairs.push((parse(fields[1])?, parse(fields[2])?));
        }
        Ok(CureTruthDataset { pairs })
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Ingest the per-eye diabetic retinopathy export (header
/// `id,laser,age,eye,trt,risk,time,status`, one row per eye, 197 patients)
/// into the paired dataset format. Margin 1 is the treated eye. Age is
/// standardized to zero mean and unit variance over patients; the per-eye
/// risk score is passed through unchanged. Covariate order per margin:
/// age, score.
pub fn read_retinopathy_csv(path: &Path) -> Result<BivariateDataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })?;
    let cols: Vec<String> = header
        .trim_end()
        .split(',')
        .map(|c| c.trim_matches('"').trim().to_lowercase())
        .collect();
    let find = |name: &str| {
        cols.iter().position(|c| c == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}` in retinopathy export"),
        })
    };
    let (ci, ca, ct, cr, ctime, cstat) = (
        find("id")?,
        find("age")?,
        find("trt")?,
        find("risk")?,
        find("time")?,
        find("status")?,
    );

    struct Eye {
        time: f64,
        status: bool,
        risk: f64,
    }
    struct Patient {
        age: f64,
        treated: Option<Eye>,
        untreated: Option<Eye>,
    }
    let mut order: Vec<i64> = Vec::new();
    let mut patients: std::collections::HashMap<i64, Patient> = std::collections::HashMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').map(|f| f.trim_matches('"')).collect();
        let get = |i: usize| -> Result<&str> {
            fields.get(i).copied().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing field {i}"),
            })
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid number `{s}`"),
            })
        };
        let id = num(get(ci)?)? as i64;
        let age = num(get(ca)?)?;
        let trt = num(get(ct)?)?;
        let eye = Eye { time: num(get(ctime)?)?, status: num(get(cstat)?)? != 0.0, risk: num(get(cr)?)? };
        let patient = patients.entry(id).or_insert_with(|| {
            order.push(id);
            Patient { age, treated: None, untreated: None }
        });
        if trt != 0.0 {
            patient.treated = Some(eye);
        } else {
            patient.untreated = Some(eye);
        }
    }
    let n = order.len() as f64;
    let mean_age = order.iter().map(|id| patients[id].age).sum::<f64>() / n;
    let var_age =
        order.iter().map(|id| (patients[id].age - mean_age).powi(2)).sum::<f64>() / (n - 1.0);
    let sd_age = var_age.sqrt();

    let mut rows = Vec::with_capacity(order.len());
    for id in &order {
        let p = &patients[id];
        let (treated, untreated) = match (&p.treated, &p.untreated) {
            (Some(t), Some(u)) => (t, u),
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("patient {id} does not have both eyes"),
                })
            }
        };
        let age_std = (p.age - mean_age) / sd_age;
        rows.push(Observation {
            t1: treated.time,
            t2: untreated.time,
            d1: treated.status,
            d2: untreated.status,
            x1: Some(vec![age_std, treated.risk]),
            x2: Some(vec![age_std, untreated.risk]),
        });
    }
    BivariateDataset::new(rows, vec!["age".into(), "score".into()], vec!["age".into(), "score".into()])
}
