//! Plain-text configuration of a submersion model: one `key = "value"`
//! assignment per line. Recognized keys: `domain.kind` (`disk`,
//! `rectangle`, `strip`), `domain.R`, `domain.x`, `domain.y`,
//! `domain.axis`, `lambda1`, `lambda2`, `lambda` (sets both), `tau`, `mu`,
//! `epsilon` (`1` or `-1`) and the optional connection functions `a`, `b`.
//! When `a`, `b` are absent the connection is reconstructed from the
//! Calabi potential of `(tau, mu)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::ScalarField;
use crate::geometry::{
    connection_from_potential, AmbientModel, Axis, BaseChart, ChartDomain, Epsilon, GeoError,
    SubmersionSpec,
};
use crate::quad::QuadControl;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("key `{key}`: {source}")]
    BadExpression {
        key: String,
        source: crate::expr::ParseError,
    },
    #[error("key `{key}`: invalid value `{value}`")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Parsed configuration with the assembled spec and connection model.
pub struct RunConfig {
    pub spec: SubmersionSpec,
    pub model: AmbientModel,
    pub raw: BTreeMap<String, String>,
}

fn parse_scalar(key: &str, text: &str) -> Result<ScalarField, ConfigError> {
    ScalarField::parse(text).map_err(|source| ConfigError::BadExpression {
        key: key.to_string(),
        source,
    })
}

fn parse_extent(key: &str, text: &str) -> Result<f64, ConfigError> {
    if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    text.parse::<f64>().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: text.to_string(),
    })
}

fn parse_range(key: &str, text: &str) -> Result<(f64, f64), ConfigError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            value: text.to_string(),
        });
    }
    let lo = parse_extent(key, parts[0])?;
    let hi = parse_extent(key, parts[1])?;
    Ok((lo, hi))
}

/// Parse the `key = "value"` lines; `#` starts a comment.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(ConfigError::Malformed {
                line: lineno + 1,
                msg: "expected `key = \"value\"`".into(),
            });
        };
        let key = line[..eq].trim().to_string();
        let mut value = line[eq + 1..].trim().to_string();
        if value.starts_with('"') && value.ends_with('"') && value.len() >= 2 {
            value = value[1..value.len() - 1].to_string();
        }
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line: lineno + 1,
                msg: "empty key".into(),
            });
        }
        map.insert(key, value);
    }
    Ok(map)
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<RunConfig, ConfigError> {
        let raw = parse_assignments(text)?;
        let get = |key: &str| raw.get(key).map(String::as_str);

        let kind = get("domain.kind").unwrap_or("disk");
        let domain = match kind {
            "disk" => ChartDomain::Disk {
                radius: parse_extent("domain.R", get("domain.R").unwrap_or("inf"))?,
            },
            "rectangle" => ChartDomain::Rectangle {
                x: parse_range("domain.x", get("domain.x").unwrap_or("-1,1"))?,
                y: parse_range("domain.y", get("domain.y").unwrap_or("-1,1"))?,
            },
            "strip" => ChartDomain::Strip {
                width: parse_extent("domain.R", get("domain.R").unwrap_or("inf"))?,
                axis: match get("domain.axis").unwrap_or("y") {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: "domain.axis".into(),
                            value: other.into(),
                        })
                    }
                },
            },
            other => {
                return Err(ConfigError::BadValue {
                    key: "domain.kind".into(),
                    value: other.into(),
                })
            }
        };

        let lambda_common = get("lambda").map(|t| parse_scalar("lambda", t)).transpose()?;
        let lambda1 = match get("lambda1") {
            Some(t) => parse_scalar("lambda1", t)?,
            None => lambda_common.clone().unwrap_or_else(ScalarField::one),
        };
        let lambda2 = match get("lambda2") {
            Some(t) => parse_scalar("lambda2", t)?,
            None => lambda_common.unwrap_or_else(ScalarField::one),
        };
        let tau = match get("tau") {
            Some(t) => parse_scalar("tau", t)?,
            None => ScalarField::zero(),
        };
        let mu = match get("mu") {
            Some(t) => parse_scalar("mu", t)?,
            None => ScalarField::one(),
        };
        let epsilon = match get("epsilon").unwrap_or("1") {
            "1" | "+1" => Epsilon::Riemannian,
            "-1" => Epsilon::Lorentzian,
            other => {
                return Err(ConfigError::BadValue {
                    key: "epsilon".into(),
                    value: other.into(),
                })
            }
        };

        let chart = BaseChart::new(domain, lambda1, lambda2);
        let spec = SubmersionSpec::new(chart, tau, mu, epsilon);
        spec.validate(10.0)?;

        let model = match (get("a"), get("b")) {
            (Some(a), Some(b)) => {
                AmbientModel::symbolic(parse_scalar("a", a)?, parse_scalar("b", b)?)
            }
            (None, None) => connection_from_potential(&spec, QuadControl::default())?,
            _ => {
                return Err(ConfigError::Malformed {
                    line: 0,
                    msg: "connection functions `a` and `b` must be given together".into(),
                })
            }
        };

        Ok(RunConfig { spec, model, raw })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    #[test]
    fn parses_homogeneous_space_config() {
        let text = r#"
# the homogeneous space with κ = 1, τ = 1/2
domain.kind = "disk"
domain.R = "inf"
lambda = "1/(1+(x^2+y^2)/4)"
tau = "0.5"
mu = "1"
epsilon = "1"
"#;
        let cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(cfg.spec.epsilon, Epsilon::Riemannian);
        let a = cfg.model.a.value(0.3, 0.4).unwrap();
        assert!((a - (-0.5 * 0.4)).abs() < 1e-9, "a = {a}");
    }

    #[test]
    fn explicit_connection_functions() {
        let text = r#"
tau = "0.5"
a = "-0.5*y"
b = "0.5*x"
"#;
        let cfg = RunConfig::from_text(text).unwrap();
        assert!(cfg.model.symbolic_fields().is_some());
    }

    #[test]
    fn rejects_bad_expression_with_key() {
        let Err(err) = RunConfig::from_text("tau = \"1+(\"\n") else {
            panic!("expected parse error");
        };
        match err {
            ConfigError::BadExpression { key, .. } => assert_eq!(key, "tau"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_line() {
        let Err(err) = RunConfig::from_text("just words\n") else {
            panic!("expected parse error");
        };
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }

    #[test]
    fn rejects_bad_epsilon() {
        let err = RunConfig::from_text("epsilon = \"2\"\n");
        assert!(matches!(
            err,
            Err(ConfigError::BadValue { ref key, .. }) if key == "epsilon"
        ));
    }

    #[test]
    fn rectangle_domain() {
        let text = "domain.kind = \"rectangle\"\ndomain.x = \"-2, 2\"\ndomain.y = \"0, 1\"\n";
        let cfg = RunConfig::from_text(text).unwrap();
        match cfg.spec.chart.domain {
            ChartDomain::Rectangle { x, y } => {
                assert_eq!(x, (-2.0, 2.0));
                assert_eq!(y, (0.0, 1.0));
            }
            ref other => panic!("unexpected domain {other:?}"),
        }
    }
}
