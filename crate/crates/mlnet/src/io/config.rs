//! Flat `key=value` configuration files.
//!
//! One assignment per line, `#` lines are comments, keys carry a section
//! prefix (`gen.n=400`, `sel.t_exponent=0.2`, `exp.kind=accuracy-sweep`).
//! Values never contain `=`. Candidate pairs are written `3x5` and lists
//! are comma separated (`exp.structures=2x3,3x5`).
//!
//! Parsing is strict: duplicate keys are errors, and [`ConfigMap::finish`]
//! rejects any key no builder consumed, so a typo cannot silently fall back
//! to a default.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{
    AccuracySweepSpec, DiscriminationSpec, ExperimentSpec, SensitivitySpec, StatBehaviorSpec,
};
use crate::model::GeneratorConfig;
use crate::selection::{CandidatePair, SelectionConfig, TauRule, ThresholdRule};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    consumed: bool,
}

/// A parsed config file with consumption tracking.
#[derive(Debug, Clone)]
pub struct ConfigMap {
    path: String,
    entries: BTreeMap<String, Entry>,
}

impl ConfigMap {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, path: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (ix, raw) in text.lines().enumerate() {
            let lineno = ix + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: "expected 'key=value'".into(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: "key and value must be nonempty".into(),
                });
            }
            if entries
                .insert(key.clone(), Entry { value, line: lineno, consumed: false })
                .is_some()
            {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self { path: path.to_string(), entries })
    }

    fn parse_error(&self, key: &str, message: String) -> Error {
        let line = self.entries.get(key).map(|e| e.line).unwrap_or(0);
        Error::Parse { path: self.path.clone(), line, message }
    }

    /// Raw value, marking the key consumed.
    pub fn get_str(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.consumed = true;
            e.value.clone()
        })
    }

    fn get_with<T>(
        &mut self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => parse(&v).map(Some).ok_or_else(|| {
                self.parse_error(key, format!("'{key}' expects {what}, got '{v}'"))
            }),
        }
    }

    pub fn get_parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        self.get_with(key, what, |v| v.parse().ok())
    }

    pub fn get_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.get_parsed(key, "a non-negative integer")
    }

    pub fn get_u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.get_parsed(key, "a non-negative integer")
    }

    pub fn get_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.get_parsed(key, "a number")
    }

    pub fn get_pair(&mut self, key: &str) -> Result<Option<CandidatePair>> {
        self.get_with(key, "a pair like 3x5", parse_pair)
    }

    pub fn get_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        self.get_with(key, "a comma-separated integer list", |v| parse_list(v, |s| s.parse().ok()))
    }

    pub fn get_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get_with(key, "a comma-separated number list", |v| parse_list(v, |s| s.parse().ok()))
    }

    pub fn get_pair_list(&mut self, key: &str) -> Result<Option<Vec<CandidatePair>>> {
        self.get_with(key, "a comma-separated pair list like 2x3,3x5", |v| {
            parse_list(v, parse_pair)
        })
    }

    pub fn require<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| {
            Error::Config(format!("{}: missing required key '{key}'", self.path))
        })
    }

    /// Fails if any key was never consumed; call after all builders ran.
    pub fn finish(self) -> Result<()> {
        let unused: Vec<String> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.consumed)
            .map(|(k, e)| format!("'{k}' (line {})", e.line))
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{}: unrecognized keys: {}",
                self.path,
                unused.join(", ")
            )))
        }
    }
}

/// `"3x5"` -> `(3, 5)`; both sides positive.
pub fn parse_pair(text: &str) -> Option<CandidatePair> {
    let (a, b) = text.trim().split_once('x')?;
    let pair = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (pair.0 >= 1 && pair.1 >= 1).then_some(pair)
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    text.split(',').map(|s| item(s.trim())).collect()
}

/// Builds a [`GeneratorConfig`] from the `gen.*` keys. `gen.seed` falls
/// back to `default_seed`.
pub fn generator_config(map: &mut ConfigMap, default_seed: u64) -> Result<GeneratorConfig> {
    let n = map.get_usize("gen.n")?;
    let num_layers = map.get_usize("gen.layers")?;
    let k_s = map.get_usize("gen.ks")?;
    let k_r = map.get_usize("gen.kr")?;
    let rho = map.get_f64("gen.rho")?;
    let seed = map.get_u64("gen.seed")?.unwrap_or(default_seed);
    let config = GeneratorConfig {
        n: map.require("gen.n", n)?,
        num_layers: map.require("gen.layers", num_layers)?,
        k_s: map.require("gen.ks", k_s)?,
        k_r: map.require("gen.kr", k_r)?,
        rho: map.require("gen.rho", rho)?,
        seed,
    };
    config.validate()?;
    Ok(config)
}

/// Builds a [`SelectionConfig`] from the `sel.*` keys. Within each rule the
/// two forms are exclusive: `sel.t_exponent` vs `sel.t_const`, and
/// `sel.tau_scale` vs `sel.tau_const`.
pub fn selection_config(map: &mut ConfigMap) -> Result<SelectionConfig> {
    let mut config = SelectionConfig::default();
    let t_exponent = map.get_f64("sel.t_exponent")?;
    let t_const = map.get_f64("sel.t_const")?;
    match (t_exponent, t_const) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "sel.t_exponent and sel.t_const are mutually exclusive".into(),
            ))
        }
        (Some(e), None) => config.t_rule = ThresholdRule::ExponentOfN(e),
        (None, Some(t)) => config.t_rule = ThresholdRule::Fixed(t),
        (None, None) => {}
    }
    let tau_scale = map.get_f64("sel.tau_scale")?;
    let tau_const = map.get_f64("sel.tau_const")?;
    match (tau_scale, tau_const) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "sel.tau_scale and sel.tau_const are mutually exclusive".into(),
            ))
        }
        (Some(a), None) => config.tau_rule = TauRule::ScaledLogN(a),
        (None, Some(t)) => config.tau_rule = TauRule::Fixed(t),
        (None, None) => {}
    }
    config.k_cand = map.get_usize("sel.k_cand")?;
    Ok(config)
}

/// Builds an [`ExperimentSpec`] from the `exp.*` (and `sel.*`) keys.
///
/// `exp.kind` selects the experiment; all other keys override the desk- or
/// full-scale preset, so a config stays as small as its deviation from the
/// defaults. Seed precedence is `exp.seed` over `default_seed`.
pub fn experiment_spec(
    map: &mut ConfigMap,
    default_seed: u64,
    full_scale: bool,
) -> Result<ExperimentSpec> {
    let kind_value = map.get_str("exp.kind");
    let kind = map.require("exp.kind", kind_value)?;
    let seed = map.get_u64("exp.seed")?.unwrap_or(default_seed);
    let mut spec = if full_scale {
        ExperimentSpec::full_scale(&kind, seed)?
    } else {
        ExperimentSpec::desk_scale(&kind, seed)?
    };
    let reps = map.get_usize("exp.reps")?;
    match &mut spec {
        ExperimentSpec::StatBehavior(s) => override_stat_behavior(map, s)?,
        ExperimentSpec::Discrimination(s) => override_discrimination(map, s)?,
        ExperimentSpec::AccuracySweep(s) => override_accuracy(map, s)?,
        ExperimentSpec::ThresholdSensitivity(s) => override_sensitivity(map, s)?,
    }
    if let Some(r) = reps {
        spec.set_replications(r);
    }
    Ok(spec)
}

fn override_stat_behavior(map: &mut ConfigMap, s: &mut StatBehaviorSpec) -> Result<()> {
    if let Some(v) = map.get_usize_list("exp.n_grid")? {
        s.n_grid = v;
    }
    if let Some(v) = map.get_usize("exp.layers")? {
        s.num_layers = v;
    }
    if let Some(v) = map.get_pair("exp.true")? {
        s.true_order = v;
    }
    if let Some(v) = map.get_f64("exp.rho")? {
        s.rho = v;
    }
    if let Some(v) = map.get_pair_list("exp.candidates")? {
        s.candidates = v;
    }
    Ok(())
}

fn override_discrimination(map: &mut ConfigMap, s: &mut DiscriminationSpec) -> Result<()> {
    if let Some(v) = map.get_pair_list("exp.true_orders")? {
        s.true_orders = v;
    }
    if let Some(v) = map.get_usize_list("exp.n_grid")? {
        s.n_grid = v;
    }
    if let Some(v) = map.get_usize("exp.layers")? {
        s.num_layers = v;
    }
    if let Some(v) = map.get_f64("exp.rho")? {
        s.rho = v;
    }
    s.threshold = selection_config(map)?.t_rule;
    Ok(())
}

fn override_accuracy(map: &mut ConfigMap, s: &mut AccuracySweepSpec) -> Result<()> {
    if let Some(v) = map.get_pair_list("exp.structures")? {
        s.structures = v;
    }
    if let Some(v) = map.get_usize_list("exp.n_grid")? {
        s.n_grid = v;
    }
    if let Some(v) = map.get_f64_list("exp.rho_grid")? {
        s.rho_grid = v;
    }
    if let Some(v) = map.get_usize("exp.layers")? {
        s.num_layers = v;
    }
    s.selection = selection_config(map)?;
    Ok(())
}

fn override_sensitivity(map: &mut ConfigMap, s: &mut SensitivitySpec) -> Result<()> {
    if let Some(v) = map.get_usize("exp.n")? {
        s.n = v;
    }
    if let Some(v) = map.get_usize("exp.layers")? {
        s.num_layers = v;
    }
    if let Some(v) = map.get_pair("exp.true")? {
        s.true_order = v;
    }
    if let Some(v) = map.get_f64("exp.rho")? {
        s.rho = v;
    }
    if let Some(v) = map.get_f64_list("exp.exponent_grid")? {
        s.exponent_grid = v;
    }
    if let Some(v) = map.get_f64_list("exp.tau_const_grid")? {
        s.tau_const_grid = v;
    }
    if let Some(v) = map.get_f64_list("exp.tau_scale_grid")? {
        s.tau_scale_grid = v;
    }
    Ok(())
}
