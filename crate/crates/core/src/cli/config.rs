use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{NU_MAX, NU_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Spectrum,
    Evolve1d,
    Evolve2d,
    Hardy,
    Carleman,
    Control,
    ExtensionCheck,
    UcCertificate,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Spectrum,
        Scenario::Evolve1d,
        Scenario::Evolve2d,
        Scenario::Hardy,
        Scenario::Carleman,
        Scenario::Control,
        Scenario::ExtensionCheck,
        Scenario::UcCertificate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Evolve1d => "evolve1d",
            Scenario::Evolve2d => "evolve2d",
            Scenario::Hardy => "hardy",
            Scenario::Carleman => "carleman",
            Scenario::Control => "control",
            Scenario::ExtensionCheck => "extension-check",
            Scenario::UcCertificate => "uc-certificate",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                format!("unknown scenario `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecLabel {
    Designed,
    Decoupled,
}

impl FromStr for SpecLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "designed" => Ok(SpecLabel::Designed),
            "decoupled" => Ok(SpecLabel::Decoupled),
            _ => Err(format!("unknown spec `{s}`; expected designed or decoupled")),
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub nu: f64,
    pub gamma: f64,
    pub n: usize,
    pub n_modes: usize,
    pub cells: usize,
    pub grading: f64,
    pub spec: SpecLabel,
    /// Number of eigenvalues reported by `spectrum`.
    pub k: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Time samples, random test elements or search trials, depending on the scenario.
    pub samples: usize,
    /// Crank–Nicolson step of the `evolve1d` cross-check.
    pub dt: f64,
    pub beta: Vec<f64>,
    /// `x0, x1, y0, y1`.
    pub omega: [f64; 4],
    pub r_grid: Vec<f64>,
    pub alpha: f64,
    pub family_size: usize,
    pub coarse_dim: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        Self {
            scenario,
            nu: 0.5,
            gamma: 1.0,
            n: 1,
            n_modes: 16,
            cells: 200,
            grading: crate::funcspace::DEFAULT_GRADING,
            spec: SpecLabel::Designed,
            k: 10,
            t_final: 1.0,
            samples: 50,
            dt: 1e-4,
            beta: vec![1e-2, 1e-3, 1e-4, 1e-6],
            omega: [-0.8, -0.2, 0.2, 0.8],
            r_grid: vec![25.0, 50.0, 100.0, 200.0],
            alpha: 0.0,
            family_size: 10,
            coarse_dim: 8,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }

    /// Applies one `key = value` pair; `line` is used in error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let err = |msg: String| Error::Config { line, msg };
        match key {
            "scenario" => self.scenario = value.parse().map_err(err)?,
            "nu" => {
                let v = parse_f64(key, value, line)?;
                if !(NU_MIN..=NU_MAX).contains(&v) {
                    return Err(err(format!(
                        "nu = {v} is outside the supported range [{NU_MIN}, {NU_MAX}]"
                    )));
                }
                self.nu = v;
            }
            "gamma" => self.gamma = ranged(key, value, line, 0.0, 4.0, false)?,
            "n" => self.n = ranged_usize(key, value, line, 0, 64)?,
            "n_modes" => self.n_modes = ranged_usize(key, value, line, 1, 64)?,
            "cells" => {
                let v = ranged_usize(key, value, line, 2, 2000)?;
                if v % 2 != 0 {
                    return Err(err(format!("cells = {v} must be even")));
                }
                self.cells = v;
            }
            "grading" => self.grading = ranged(key, value, line, 1.0, 4.0, true)?,
            "spec" => self.spec = value.parse().map_err(err)?,
            "k" => self.k = ranged_usize(key, value, line, 1, 10_000)?,
            "T" => self.t_final = ranged(key, value, line, 0.0, 100.0, false)?,
            "samples" => self.samples = ranged_usize(key, value, line, 1, 100_000)?,
            "dt" => self.dt = ranged(key, value, line, 0.0, 1.0, false)?,
            "beta" => {
                let v = parse_list(key, value, line)?;
                if v.is_empty() || v.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
                    return Err(err("beta must be a nonempty list of positive numbers".into()));
                }
                self.beta = v;
            }
            "omega" => {
                let v = parse_list(key, value, line)?;
                let ok = v.len() == 4 && -1.0 <= v[0] && v[0] < v[1] && v[1] <= 1.0 && 0.0 <= v[2] && v[2] < v[3] && v[3] <= 1.0;
                if !ok {
                    return Err(err(
                        "omega must be `x0, x1, y0, y1` with -1 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1".into(),
                    ));
                }
                self.omega = [v[0], v[1], v[2], v[3]];
            }
            "r_grid" => {
                let v = parse_list(key, value, line)?;
                let ok = !v.is_empty() && v.iter().all(|&r| r > 0.0 && r <= 1e6) && v.windows(2).all(|w| w[1] > w[0]);
                if !ok {
                    return Err(err("r_grid must be a strictly increasing list in (0, 1e6]".into()));
                }
                self.r_grid = v;
            }
            "alpha" => {
                let v = parse_f64(key, value, line)?;
                if !(-2.0..2.0).contains(&v) {
                    return Err(err(format!("alpha = {v} is outside the supported range [-2, 2)")));
                }
                self.alpha = v;
            }
            "family_size" => self.family_size = ranged_usize(key, value, line, 1, 1000)?,
            "coarse_dim" => self.coarse_dim = ranged_usize(key, value, line, 1, 256)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| err(format!("seed = `{value}` is not a nonnegative integer")))?
            }
            "out" => {
                if value.is_empty() {
                    return Err(err("out must not be empty".into()));
                }
                self.out = PathBuf::from(value)
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key} = `{value}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Config {
            line,
            msg: format!("{key} must be finite"),
        });
    }
    Ok(v)
}

fn ranged(key: &str, value: &str, line: usize, lo: f64, hi: f64, lo_closed: bool) -> Result<f64> {
    let v = parse_f64(key, value, line)?;
    let above = if lo_closed { v >= lo } else { v > lo };
    if !above || v > hi {
        let open = if lo_closed { '[' } else { '(' };
        return Err(Error::Config {
            line,
            msg: format!("{key} = {v} is outside the supported range {open}{lo}, {hi}]"),
        });
    }
    Ok(v)
}

fn ranged_usize(key: &str, value: &str, line: usize, lo: usize, hi: usize) -> Result<usize> {
    let v: usize = value.parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key} = `{value}` is not a nonnegative integer"),
    })?;
    if v < lo || v > hi {
        return Err(Error::Config {
            line,
            msg: format!("{key} = {v} is outside the supported range [{lo}, {hi}]"),
        });
    }
    Ok(v)
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_f64(key, s.trim(), line))
        .collect()
}

/// Parses the line-oriented `key = value` format. `#` starts a comment.
/// `scenario` is required; every other key has a default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected `key = value`, found `{body}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if let Some((first, ..)) = pairs.iter().find(|p| p.1 == k) {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key `{k}` (first set on line {first})"),
            });
        }
        pairs.push((line, k.to_string(), v.to_string()));
    }
    let mut cfg = RunConfig::defaults(Scenario::Spectrum);
    let mut have_scenario = false;
    for (line, k, v) in &pairs {
        cfg.set(k, v, *line)?;
        have_scenario |= k == "scenario";
    }
    if !have_scenario {
        return Err(Error::Config {
            line: text.lines().count(),
            msg: "missing required key `scenario`".into(),
        });
    }
    Ok(cfg)
}
