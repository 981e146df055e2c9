//! Run configuration: flat INI-style sections of `key = value` lines, with
//! control points given as bare `s F f` rows under `[nonlinearity]`.
//!
//! ```text
//! [problem]
//! n = 3
//!
//! [nonlinearity]
//! kind = hermite
//! gamma_star_minus = -3
//! gamma_star = 2
//! -3   1.0  0
//!  0   0.0  0
//!  2   1.0  0
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::integrator::ProblemConfig;
use crate::nonlinearity::{ControlPoint, ModelError, ModelKind, NonlinearityModel, PowerTail};
use crate::search::SearchOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("[{section}] unknown key `{key}`")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("[{section}] {key}: cannot parse `{value}`")]
    BadValue { section: String, key: String, value: String },
    #[error("[{section}] missing `{key}`")]
    Missing { section: String, key: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KindSpec {
    Polynomial,
    Hermite,
    HermiteTail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySection {
    pub kind: KindSpec,
    pub gamma_star_minus: f64,
    pub gamma_star: f64,
    pub rows: Vec<ControlPoint<f64>>,
    pub coefficients: Vec<f64>,
    pub tail: Option<PowerTail<f64>>,
}

impl NonlinearitySection {
    pub fn build(&self) -> Result<NonlinearityModel<f64>, ConfigError> {
        let kind = match self.kind {
            KindSpec::Polynomial => ModelKind::Polynomial(self.coefficients.clone()),
            KindSpec::Hermite => ModelKind::HermiteF(self.rows.clone()),
            KindSpec::HermiteTail => ModelKind::HermiteFPowerTail(
                self.rows.clone(),
                self.tail.ok_or_else(|| ConfigError::Missing {
                    section: "nonlinearity".into(),
                    key: "tail_c".into(),
                })?,
            ),
        };
        Ok(NonlinearityModel::new(kind, self.gamma_star_minus, self.gamma_star)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub nonlinearity: NonlinearitySection,
    /// Template for single integrations; `alpha` is filled in per run.
    pub integrator: ProblemConfig<f64>,
    pub search: SearchOptions<f64>,
    pub k: usize,
    pub k_max: usize,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub svg: bool,
}

type Section = (BTreeMap<String, (usize, String)>, Vec<(usize, String)>);

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut out: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(['#', ';']).next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim().to_string();
            if out.contains_key(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            out.insert(name.clone(), Default::default());
            current = Some(name);
            continue;
        }
        let sec = current.as_ref().ok_or_else(|| ConfigError::Syntax {
            line,
            msg: "content before the first section".into(),
        })?;
        let entry = out.get_mut(sec).expect("section inserted");
        match body.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                if entry.0.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                    return Err(ConfigError::Syntax {
                        line,
                        msg: format!("duplicate key `{key}`"),
                    });
                }
            }
            None => entry.1.push((line, body.to_string())),
        }
    }
    Ok(out)
}

struct Reader<'a> {
    name: &'a str,
    section: Option<&'a Section>,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn get<V: FromStr>(&mut self, key: &'static str) -> Result<Option<V>, ConfigError> {
        self.used.push(key);
        let Some((_, raw)) = self.section.and_then(|s| s.0.get(key)) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
            section: self.name.into(),
            key: key.into(),
            value: raw.clone(),
        })
    }

    fn or<V: FromStr>(&mut self, key: &'static str, default: V) -> Result<V, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<V: FromStr>(&mut self, key: &'static str) -> Result<V, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::Missing {
            section: self.name.into(),
            key: key.into(),
        })
    }

    fn finish(self, rows_allowed: bool) -> Result<(), ConfigError> {
        let Some(sec) = self.section else { return Ok(()) };
        if let Some(k) = sec.0.keys().find(|k| !self.used.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey {
                section: self.name.into(),
                key: k.clone(),
            });
        }
        if let (false, Some((line, _))) = (rows_allowed, sec.1.first()) {
            return Err(ConfigError::Syntax {
                line: *line,
                msg: format!("expected `key = value` in [{}]", self.name),
            });
        }
        Ok(())
    }
}

fn parse_list(section: &str, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split([',', ' ', '\t'])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: raw.into(),
            })
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = split_sections(text)?;
        const KNOWN: [&str; 5] = ["problem", "nonlinearity", "integrator", "search", "output"];
        if let Some(s) = sections.keys().find(|s| !KNOWN.contains(&s.as_str())) {
            return Err(ConfigError::UnknownSection(s.clone()));
        }
        let reader = |name: &'static str| Reader {
            name,
            section: sections.get(name),
            used: Vec::new(),
        };

        let mut p = reader("problem");
        let n: u32 = p.require("n")?;
        p.finish(false)?;

        let mut nl = reader("nonlinearity");
        let kind = match nl.require::<String>("kind")?.as_str() {
            "polynomial" => KindSpec::Polynomial,
            "hermite" => KindSpec::Hermite,
            "hermite_tail" => KindSpec::HermiteTail,
            other => {
                return Err(ConfigError::BadValue {
                    section: "nonlinearity".into(),
                    key: "kind".into(),
                    value: other.into(),
                })
            }
        };
        let gamma_star_minus = nl.or("gamma_star_minus", f64::NEG_INFINITY)?;
        let gamma_star = nl.or("gamma_star", f64::INFINITY)?;
        let coefficients = match nl.get::<String>("coefficients")? {
            Some(raw) => parse_list("nonlinearity", "coefficients", &raw)?,
            None => Vec::new(),
        };
        let tail = match (nl.get("tail_c")?, nl.get("tail_p")?, nl.get("tail_s")?) {
            (Some(c), Some(p), Some(s_tail)) => Some(PowerTail { c, p, s_tail }),
            (None, None, None) => None,
            _ => {
                return Err(ConfigError::Missing {
                    section: "nonlinearity".into(),
                    key: "tail_c, tail_p and tail_s together".into(),
                })
            }
        };
        let mut rows = Vec::new();
        for (line, row) in sections.get("nonlinearity").map(|s| s.1.as_slice()).unwrap_or_default() {
            let v: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| ConfigError::Syntax {
                    line: *line,
                    msg: format!("malformed control row `{row}`"),
                })?;
            let [s, big_f, f] = v[..] else {
                return Err(ConfigError::Syntax {
                    line: *line,
                    msg: format!("control row `{row}` needs three numbers: s F f"),
                });
            };
            rows.push(ControlPoint::new(s, big_f, f));
        }
        nl.finish(true)?;
        if kind == KindSpec::Polynomial && coefficients.is_empty() {
            return Err(ConfigError::Missing {
                section: "nonlinearity".into(),
                key: "coefficients".into(),
            });
        }
        let nonlinearity = NonlinearitySection {
            kind,
            gamma_star_minus,
            gamma_star,
            rows,
            coefficients,
            tail,
        };

        let mut ig = reader("integrator");
        let d = ProblemConfig::new(n, 0.0);
        let integrator = ProblemConfig {
            rel_tol: ig.or("rel_tol", d.rel_tol)?,
            abs_tol: ig.or("abs_tol", d.abs_tol)?,
            r_max: ig.or("r_max", d.r_max)?,
            eps_zero: ig.or("eps_zero", d.eps_zero)?,
            eps_double: ig.or("eps_double", d.eps_double)?,
            k_cap: ig.or("k_cap", d.k_cap)?,
            max_steps: ig.or("max_steps", d.max_steps)?,
            ..d
        };
        ig.finish(false)?;

        let mut se = reader("search");
        let d = SearchOptions::<f64>::default();
        let search = SearchOptions {
            grid_points: se.or("grid_points", d.grid_points)?,
            max_grid_points: se.or("max_grid_points", d.max_grid_points)?,
            t_max: se.or("t_max", d.t_max)?,
            bisect_tol: se.get("bisect_tol")?,
            bisect_rel: se.or("bisect_rel", d.bisect_rel)?,
            cert_state: se.or("cert_state", d.cert_state)?,
            cert_energy: se.or("cert_energy", d.cert_energy)?,
            refine_tol: se.or("refine_tol", d.refine_tol)?,
            probes: se.or("probes", d.probes)?,
            a2_cap: se.get("a2_cap")?,
            a2_alpha_limit: se.get("a2_alpha_limit")?,
        };
        let k = se.or("k", 0)?;
        let k_max = se.or("k_max", 5)?;
        se.finish(false)?;

        let mut out = reader("output");
        let out_dir = out.get::<String>("dir")?.map(PathBuf::from);
        let format = out.or("format", OutputFormat::Json)?;
        let svg = out.or("svg", false)?;
        out.finish(false)?;

        Ok(Self {
            n,
            nonlinearity,
            integrator,
            search,
            k,
            k_max,
            out_dir,
            format,
            svg,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const M1: &str = "
[problem]
n = 3
[nonlinearity]
kind = hermite
gamma_star_minus = -3
gamma_star = 2
-3 1.0 0
-1 -0.3 0
0 0 0
0.5 -0.2 0
1 0.4 0
1.5 0.1 0
2 1.0 0
[search]
k = 2
";

    #[test]
    fn parses_m1() {
        let c = RunConfig::parse(M1).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.nonlinearity.rows.len(), 7);
        assert_eq!(c.k, 2);
        assert_eq!(c.integrator.rel_tol, 1e-9);
        c.nonlinearity.build().unwrap();
    }

    #[test]
    fn rejects_unknown_key() {
        let err = RunConfig::parse(&format!("{M1}\n[output]\ncolour = red\n")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_row() {
        let err = RunConfig::parse(&M1.replace("1.5 0.1 0", "1.5 0.1")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }), "{err}");
    }

    #[test]
    fn rejects_rows_outside_nonlinearity() {
        let err = RunConfig::parse(&M1.replace("k = 2", "k = 2\n1 2 3")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }), "{err}");
    }

    #[test]
    fn polynomial_with_infinite_endpoint() {
        let c = RunConfig::parse("[problem]\nn = 3\n[nonlinearity]\nkind = polynomial\ncoefficients = 0, -1, 0, 1\n").unwrap();
        assert_eq!(c.nonlinearity.gamma_star, f64::INFINITY);
        assert_eq!(c.nonlinearity.coefficients, vec![0.0, -1.0, 0.0, 1.0]);
    }
}
