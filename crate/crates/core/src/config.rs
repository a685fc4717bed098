//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Profiles (`bc.*`, `init.*`) are
//! either a number or an expression in `x`, e.g.
//! `init.r0 = 1 + 0.1*math::cos(pi*x)`.
//!
//! | key | default |
//! |-----|---------|
//! | `grid.n_cells`, `galerkin.n_modes` | required |
//! | `transport.epsilon`, `time.dt`, `time.horizon` | required |
//! | `eos.a1`, `eos.a2`, `eos.gamma`, `eos.beta`, `eos.b_low`, `eos.b_high` | required |
//! | `init.r0`, `init.z0` | required |
//! | `init.u0` | `bc.u_b` |
//! | `bc.u_b` | `0` |
//! | `bc.r_b`, `bc.z_b` | `init.r0`, `init.z0` |
//! | `transport.theta` | `1` |
//! | `fluid.mu`, `fluid.lambda` | `1`, `0` |
//! | `picard.tol`, `picard.max`, `picard.relaxation` | `1e-10`, `20`, `1` |
//! | `output.every_n_steps`, `output.dir` | `1`, `bifluid-out` |
//! | `eos.helmholtz_anchor` | `origin` (`origin` or `unit`) |
//! | `reference.refine` | none (no fine reference) |
//! | `gronwall.c_max` | `50` |
//! | `diagnostics.coarsen` | `2,4,8` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coupler::RunConfig;
use crate::eos::{EosParams, HelmholtzAnchor};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::transport::BoundaryData;

pub const KEYS: &[&str] = &[
    "grid.n_cells",
    "galerkin.n_modes",
    "transport.epsilon",
    "transport.theta",
    "time.dt",
    "time.horizon",
    "fluid.mu",
    "fluid.lambda",
    "eos.a1",
    "eos.a2",
    "eos.gamma",
    "eos.beta",
    "eos.b_low",
    "eos.b_high",
    "eos.helmholtz_anchor",
    "bc.u_b",
    "bc.r_b",
    "bc.z_b",
    "init.r0",
    "init.z0",
    "init.u0",
    "picard.tol",
    "picard.max",
    "picard.relaxation",
    "output.every_n_steps",
    "output.dir",
    "reference.refine",
    "gronwall.c_max",
    "diagnostics.coarsen",
];

const REQUIRED: &[&str] = &[
    "grid.n_cells",
    "galerkin.n_modes",
    "transport.epsilon",
    "time.dt",
    "time.horizon",
    "eos.a1",
    "eos.a2",
    "eos.gamma",
    "eos.beta",
    "eos.b_low",
    "eos.b_high",
    "init.r0",
    "init.z0",
];

/// Raw key/value pairs with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    key: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line,
                    key: key.to_string(),
                    message: "unknown key".into(),
                });
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(Error::Parse {
                    line,
                    key: key.to_string(),
                    message: format!("duplicate key (first set on line {first})"),
                });
            }
            entries.insert(key.to_string(), (line, value.trim().to_string()));
        }
        Ok(RawConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Sets or replaces a key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line: 0,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        let line = self.entries.get(key).map(|(l, _)| *l).unwrap_or(0);
        self.entries.insert(key.to_string(), (line, value.to_string()));
        Ok(())
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                line: *line,
                key: key.to_string(),
                message: format!("cannot parse '{v}': {e}"),
            }),
        }
    }

    fn profile(&self, key: &str) -> Result<Option<Profile>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => Profile::parse(v).map(Some).map_err(|message| Error::Parse {
                line: *line,
                key: key.to_string(),
                message,
            }),
        }
    }

    /// Builds and validates the run configuration.
    pub fn into_config(self) -> Result<RunConfig> {
        let missing: Vec<String> = REQUIRED
            .iter()
            .filter(|k| !self.entries.contains_key(**k))
            .map(|k| format!("missing required key {k}"))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
        let req = |v: Option<f64>| v.expect("required key present");
        let eos = EosParams {
            a1: req(self.value("eos.a1")?),
            a2: req(self.value("eos.a2")?),
            gamma: req(self.value("eos.gamma")?),
            beta: req(self.value("eos.beta")?),
            b_low: req(self.value("eos.b_low")?),
            b_high: req(self.value("eos.b_high")?),
            anchor: match self.entries.get("eos.helmholtz_anchor") {
                None => HelmholtzAnchor::Origin,
                Some((line, v)) => v.parse().map_err(|message| Error::Parse {
                    line: *line,
                    key: "eos.helmholtz_anchor".into(),
                    message,
                })?,
            },
        };
        let n_cells: usize = self.value("grid.n_cells")?.expect("required");
        let n_modes: usize = self.value("galerkin.n_modes")?.expect("required");
        let mut cfg = RunConfig::new(
            n_cells,
            n_modes,
            req(self.value("transport.epsilon")?),
            req(self.value("time.dt")?),
            req(self.value("time.horizon")?),
            eos,
        );
        if let Some(v) = self.value("transport.theta")? {
            cfg.theta = v;
        }
        if let Some(v) = self.value("fluid.mu")? {
            cfg.mu = v;
        }
        if let Some(v) = self.value("fluid.lambda")? {
            cfg.lambda = v;
        }
        cfg.r0 = self.profile("init.r0")?.expect("required");
        cfg.z0 = self.profile("init.z0")?.expect("required");
        let u_b = self.profile("bc.u_b")?.unwrap_or(Profile::constant(0.0));
        cfg.u0 = self.profile("init.u0")?.unwrap_or_else(|| u_b.clone());
        cfg.bc = BoundaryData::new(
            u_b,
            self.profile("bc.r_b")?.unwrap_or_else(|| cfg.r0.clone()),
            self.profile("bc.z_b")?.unwrap_or_else(|| cfg.z0.clone()),
        );
        if let Some(v) = self.value("picard.tol")? {
            cfg.picard_tol = v;
        }
        if let Some(v) = self.value("picard.max")? {
            cfg.picard_max = v;
        }
        if let Some(v) = self.value("picard.relaxation")? {
            cfg.relaxation = v;
        }
        if let Some(v) = self.value("output.every_n_steps")? {
            cfg.every_n_steps = v;
        }
        if let Some(v) = self.get("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        cfg.reference_refine = self.value("reference.refine")?;
        if let Some(v) = self.value("gronwall.c_max")? {
            cfg.gronwall_c_max = v;
        }
        if let Some((line, v)) = self.entries.get("diagnostics.coarsen") {
            cfg.coarsen = v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: *line,
                    key: "diagnostics.coarsen".into(),
                    message: format!("cannot parse '{v}': {e}"),
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    RawConfig::parse(text)?.into_config()
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Every key of `cfg`, in a form [`parse_config_str`] reads back.
pub fn to_config_string(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("grid.n_cells", cfg.n_cells.to_string());
    kv("galerkin.n_modes", cfg.n_modes.to_string());
    kv("transport.epsilon", cfg.epsilon.to_string());
    kv("transport.theta", cfg.theta.to_string());
    kv("time.dt", cfg.dt.to_string());
    kv("time.horizon", cfg.horizon.to_string());
    kv("fluid.mu", cfg.mu.to_string());
    kv("fluid.lambda", cfg.lambda.to_string());
    kv("eos.a1", cfg.eos.a1.to_string());
    kv("eos.a2", cfg.eos.a2.to_string());
    kv("eos.gamma", cfg.eos.gamma.to_string());
    kv("eos.beta", cfg.eos.beta.to_string());
    kv("eos.b_low", cfg.eos.b_low.to_string());
    kv("eos.b_high", cfg.eos.b_high.to_string());
    kv("eos.helmholtz_anchor", cfg.eos.anchor.as_str().to_string());
    kv("bc.u_b", cfg.bc.u_b.label());
    kv("bc.r_b", cfg.bc.r_b.label());
    kv("bc.z_b", cfg.bc.z_b.label());
    kv("init.r0", cfg.r0.label());
    kv("init.z0", cfg.z0.label());
    kv("init.u0", cfg.u0.label());
    kv("picard.tol", cfg.picard_tol.to_string());
    kv("picard.max", cfg.picard_max.to_string());
    kv("picard.relaxation", cfg.relaxation.to_string());
    kv("output.every_n_steps", cfg.every_n_steps.to_string());
    kv("output.dir", cfg.output_dir.display().to_string());
    if let Some(k) = cfg.reference_refine {
        kv("reference.refine", k.to_string());
    }
    kv("gronwall.c_max", cfg.gronwall_c_max.to_string());
    kv(
        "diagnostics.coarsen",
        cfg.coarsen.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# minimal
grid.n_cells = 64
galerkin.n_modes = 8
transport.epsilon = 1e-2
time.dt = 1e-3
time.horizon = 0.01
eos.a1 = 1
eos.a2 = 1
eos.gamma = 2
eos.beta = 2
eos.b_low = 0.5
eos.b_high = 2
init.r0 = 1
init.z0 = 1  # trailing comment
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.theta, 1.0);
        assert_eq!(cfg.picard_max, 20);
        assert_eq!(cfg.relaxation, 1.0);
        assert_eq!(cfg.every_n_steps, 1);
        assert_eq!(cfg.eos.anchor, HelmholtzAnchor::Origin);
        assert_eq!(cfg.coarsen, vec![2, 4, 8]);
        assert!(cfg.reference_refine.is_none());
    }

    #[test]
    fn gamma_one_is_rejected() {
        let text = MINIMAL.replace("eos.gamma = 2", "eos.gamma = 1");
        match parse_config_str(&text) {
            Err(Error::Validation(v)) => assert!(v.iter().any(|m| m.contains("γ > 1"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cone_violating_initial_data_is_rejected() {
        let text = MINIMAL.replace("init.z0 = 1", "init.z0 = 0.25");
        match parse_config_str(&text) {
            Err(Error::Validation(v)) => assert!(v.iter().any(|m| m.contains("b_low·R0"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_malformed_lines() {
        let text = format!("{MINIMAL}foo.bar = 1\n");
        match parse_config_str(&text) {
            Err(Error::Parse { line, key, .. }) => {
                assert_eq!(line, 15);
                assert_eq!(key, "foo.bar");
            }
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("time.dt = 1e-3", "time.dt = fast");
        assert!(matches!(parse_config_str(&text), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_config_str("grid.n_cells 64"), Err(Error::Parse { line: 1, .. })));
        let text = format!("{MINIMAL}grid.n_cells = 32\n");
        assert!(matches!(parse_config_str(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn validation_lists_every_problem() {
        let text = MINIMAL
            .replace("eos.gamma = 2", "eos.gamma = 0.5")
            .replace("transport.epsilon = 1e-2", "transport.epsilon = -1");
        match parse_config_str(&text) {
            Err(Error::Validation(v)) => assert!(v.len() >= 2),
            other => panic!("{other:?}"),
        }
        match parse_config_str("grid.n_cells = 8") {
            Err(Error::Validation(v)) => assert_eq!(v.len(), REQUIRED.len() - 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = format!("{MINIMAL}bc.u_b = 0.5\ninit.u0 = 0.5 + 0.1*math::sin(pi*x)\nreference.refine = 2\n");
        let cfg = parse_config_str(&text).unwrap();
        let again = parse_config_str(&to_config_string(&cfg)).unwrap();
        assert_eq!(to_config_string(&cfg), to_config_string(&again));
        assert_eq!(again.reference_refine, Some(2));
    }
}
