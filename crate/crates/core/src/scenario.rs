//! Scenario files.
//!
//! A scenario is a flat `key = value` file (valid TOML). Intensities are
//! given per km and lengths in meters:
//!
//! ```text
//! lambda_t_per_km = 4
//! lambda_b_per_km = [10, 6]       # one entry per lane, or a scalar
//! mean_half_length_m = 2.5        # 1/mu
//! lane_heights_m = [10, 5]        # default [d1]
//! d1_m = 10
//! d2_m = 10
//! d_star_m = 1500                 # or p, sigma, alpha_los, tau
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::error::{Error, Result};
use crate::params::{Detection, Lane, RadioParams, ScenarioParams, Speeds};

/// Directory searched for scenario names that are not paths.
pub const SCENARIO_DIR_ENV: &str = "VLOS_SCENARIO_DIR";

const KEYS: &[&str] = &[
    "lambda_t_per_km",
    "lambda_b_per_km",
    "lambda_v_per_km",
    "mean_half_length_m",
    "lane_heights_m",
    "d1_m",
    "d2_m",
    "p",
    "sigma",
    "alpha_los",
    "tau",
    "d_star_m",
    "v_mps",
    "vo_mps",
    "allow_sub_meter_offsets",
];

const RADIO_KEYS: [&str; 4] = ["p", "sigma", "alpha_los", "tau"];

pub fn parse_scenario(text: &str) -> Result<ScenarioParams> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    from_table(&table.into_iter().collect())
}

pub fn load_scenario(path: &Path) -> Result<ScenarioParams> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

pub fn scenario_dir() -> PathBuf {
    std::env::var_os(SCENARIO_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("scenarios"))
}

/// An existing path is used as is; otherwise `name` and `name.toml` are
/// looked up in [`scenario_dir`].
pub fn resolve_scenario(name: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    let dir = scenario_dir();
    for candidate in [dir.join(name), dir.join(format!("{name}.toml"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::config("scenario", format!("cannot find `{name}` (searched {})", dir.display())))
}

fn from_table(t: &BTreeMap<String, Value>) -> Result<ScenarioParams> {
    if let Some(k) = t.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::config(k.clone(), "unknown key"));
    }
    let d1 = number(t, "d1_m")?.ok_or_else(|| missing("d1_m"))?;
    let d2 = number(t, "d2_m")?.ok_or_else(|| missing("d2_m"))?;
    let lambda_t = number(t, "lambda_t_per_km")?.ok_or_else(|| missing("lambda_t_per_km"))? / 1000.0;
    let lambda_v = number(t, "lambda_v_per_km")?.unwrap_or(0.0) / 1000.0;

    let lambda_b = list(t, "lambda_b_per_km")?.ok_or_else(|| missing("lambda_b_per_km"))?;
    let half = list(t, "mean_half_length_m")?.ok_or_else(|| missing("mean_half_length_m"))?;
    let heights = list(t, "lane_heights_m")?.unwrap_or_else(|| vec![d1]);
    let lanes = broadcast(&[("lambda_b_per_km", &lambda_b), ("mean_half_length_m", &half), ("lane_heights_m", &heights)])?;
    let lanes = lanes
        .into_iter()
        .map(|v| {
            if !(v[1] > 0.0) {
                return Err(Error::config("mean_half_length_m", format!("must be positive, got {}", v[1])));
            }
            Ok(Lane {
                lambda_b: v[0] / 1000.0,
                mu: 1.0 / v[1],
                height: v[2],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let detection = match number(t, "d_star_m")? {
        Some(d) => Detection::Radius(d),
        None => {
            let mut radio = [0.0; 4];
            for (slot, key) in radio.iter_mut().zip(RADIO_KEYS) {
                *slot = number(t, key)?.ok_or_else(|| {
                    Error::config(key, "required unless d_star_m is given")
                })?;
            }
            Detection::Radio(RadioParams {
                p: radio[0],
                sigma: radio[1],
                alpha_los: radio[2],
                tau: radio[3],
            })
        }
    };
    let speeds = Speeds {
        v: number(t, "v_mps")?.unwrap_or(0.0),
        v_o: number(t, "vo_mps")?.unwrap_or(0.0),
    };
    let allow_sub_meter = match t.get("allow_sub_meter_offsets") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(_) => return Err(Error::config("allow_sub_meter_offsets", "expected true or false")),
    };

    let params = ScenarioParams {
        lambda_t,
        lanes,
        lambda_v,
        d1,
        d2,
        detection,
        speeds,
        require_unit_offsets: !allow_sub_meter,
    };
    params.validate().map_err(|e| match e {
        Error::InvalidParameter { name, .. } => Error::config(file_key(name), e.to_string()),
        other => other,
    })?;
    Ok(params)
}

// maps internal parameter names back to the file key that set them
fn file_key(name: &str) -> &str {
    match name {
        "lambda_t" => "lambda_t_per_km",
        "lambda_v" => "lambda_v_per_km",
        "lambda_b" => "lambda_b_per_km",
        "mu" => "mean_half_length_m",
        "lane_height" => "lane_heights_m",
        "d1" => "d1_m",
        "d2" => "d2_m",
        "d_star" => "d_star_m",
        "v" => "v_mps",
        "v_o" => "vo_mps",
        other => other,
    }
}

fn missing(key: &str) -> Error {
    Error::config(key, "required key is missing")
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn number(t: &BTreeMap<String, Value>, key: &str) -> Result<Option<f64>> {
    t.get(key).map(|v| as_f64(key, v)).transpose()
}

fn list(t: &BTreeMap<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) if items.is_empty() => Err(Error::config(key, "list is empty")),
        Some(Value::Array(items)) => items.iter().map(|v| as_f64(key, v)).collect::<Result<_>>().map(Some),
        Some(v) => as_f64(key, v).map(|x| Some(vec![x])),
    }
}

/// Zips per-lane lists, repeating single values across lanes.
fn broadcast(columns: &[(&str, &Vec<f64>)]) -> Result<Vec<Vec<f64>>> {
    let lanes = columns.iter().map(|(_, c)| c.len()).max().unwrap_or(1);
    if let Some((key, c)) = columns.iter().find(|(_, c)| c.len() != 1 && c.len() != lanes) {
        return Err(Error::config(*key, format!("has {} entries but there are {lanes} lanes", c.len())));
    }
    Ok((0..lanes)
        .map(|i| columns.iter().map(|(_, c)| if c.len() == 1 { c[0] } else { c[i] }).collect())
        .collect())
}
