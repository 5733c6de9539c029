//! Flat `key = value` simulation configs: one assignment per line, `#`
//! comments, unknown keys rejected.

use curvemag::dynamics::{invariants_of, CylState, StepControl};
use curvemag::{CylPoint, FieldStrengthB, SpaceModel};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: SpaceModel,
    pub b_field: f64,
    pub lambda: Option<f64>,
    pub initial: CylState,
    pub t_end: f64,
    pub step: StepControl,
    pub stride: usize,
    pub output: String,
}

impl SimConfig {
    /// The field amplitude actually integrated: `lambda * B` in relativistic
    /// mode, `B` otherwise.
    pub fn effective_b(&self) -> FieldStrengthB {
        match self.lambda {
            Some(l) => FieldStrengthB(l * self.b_field),
            None => FieldStrengthB(self.b_field),
        }
    }
}

pub fn parse_model(s: &str) -> Result<SpaceModel, String> {
    match s.to_ascii_lowercase().as_str() {
        "hyperbolic" | "h3" => Ok(SpaceModel::Hyperbolic),
        "spherical" | "s3" => Ok(SpaceModel::Spherical),
        "euclidean" | "e3" => Ok(SpaceModel::Euclidean),
        other => Err(format!(
            "unknown model '{other}' (expected hyperbolic, spherical or euclidean)"
        )),
    }
}

const KNOWN_KEYS: [&str; 17] = [
    "model", "b", "lambda", "r0", "phi0", "z0", "vr0", "vphi0", "vz0", "t_end", "step", "h",
    "rel_tol", "abs_tol", "h_min", "h_max", "stride",
];

pub fn parse_config(text: &str) -> Result<SimConfig, String> {
    let mut kv: HashMap<&str, String> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) && key != "output" {
            return Err(format!("line {}: unknown key '{key}'", lineno + 1));
        }
        if kv.insert(key, value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key '{key}'", lineno + 1));
        }
    }

    let get_f64 =
        |kv: &HashMap<&str, String>, key: &str, default: Option<f64>| -> Result<f64, String> {
            match kv.get(key) {
                Some(v) => {
                    let x: f64 = v
                        .parse()
                        .map_err(|_| format!("key '{key}': cannot parse '{v}' as a number"))?;
                    if !x.is_finite() {
                        return Err(format!("key '{key}': value must be finite, got {x}"));
                    }
                    Ok(x)
                }
                None => default.ok_or_else(|| format!("missing required key '{key}'")),
            }
        };

    let model = parse_model(kv.get("model").ok_or("missing required key 'model'")?)?;
    let b_field = get_f64(&kv, "b", None)?;
    let lambda = match kv.get("lambda") {
        Some(_) => Some(get_f64(&kv, "lambda", None)?),
        None => None,
    };
    if let Some(l) = lambda {
        if !(l > 0.0 && l < 1.0) {
            return Err(format!("lambda = {l} must lie in (0, 1)"));
        }
    }
    let initial = CylState::new(
        CylPoint::new(
            get_f64(&kv, "r0", Some(0.0))?,
            get_f64(&kv, "phi0", Some(0.0))?,
            get_f64(&kv, "z0", Some(0.0))?,
        ),
        get_f64(&kv, "vr0", Some(0.0))?,
        get_f64(&kv, "vphi0", Some(0.0))?,
        get_f64(&kv, "vz0", Some(0.0))?,
    );
    let t_end = get_f64(&kv, "t_end", None)?;
    if t_end <= 0.0 {
        return Err(format!("t_end = {t_end} must be positive"));
    }
    let step = match kv.get("step").map(String::as_str).unwrap_or("adaptive") {
        "fixed" => StepControl::FixedStep {
            h: get_f64(&kv, "h", None)?,
        },
        "adaptive" => StepControl::Adaptive {
            rel_tol: get_f64(&kv, "rel_tol", Some(1e-10))?,
            abs_tol: get_f64(&kv, "abs_tol", Some(1e-12))?,
            h_min: get_f64(&kv, "h_min", Some(1e-12))?,
            h_max: get_f64(&kv, "h_max", Some(0.1))?,
        },
        other => return Err(format!("step = '{other}' must be 'fixed' or 'adaptive'")),
    };
    step.validate().map_err(|e| e.to_string())?;
    let stride = match kv.get("stride") {
        Some(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&s| s >= 1)
            .ok_or_else(|| format!("stride = '{v}' must be a positive integer"))?,
        None => 1,
    };
    let output = kv
        .get("output")
        .cloned()
        .unwrap_or_else(|| "trajectory.csv".to_string());

    let cfg = SimConfig {
        model,
        b_field,
        lambda,
        initial,
        t_end,
        step,
        stride,
        output,
    };
    // The relativistic reduction is valid only below light speed.
    if cfg.lambda.is_some() {
        let eps = invariants_of(cfg.model, cfg.effective_b(), &cfg.initial).epsilon;
        if eps >= 1.0 {
            return Err(format!(
                "relativistic runs require epsilon < 1, initial state has epsilon = {eps}"
            ));
        }
    }
    Ok(cfg)
}
