//! Flat `section.key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and falls
//! back to its default; unknown or repeated keys are errors. [`RunConfig::dump`]
//! writes every key, so a dumped file loads back to the same settings.

use std::fmt::{self, Write as _};
use std::path::Path;

use qtbm_core::inverse::{AdaBelief, Bounds, OptimizeOptions, Simulation};
use qtbm_core::observables::Grids;
use qtbm_core::{DesignVector, Device, DeviceGeometry, PhysicalConstants, Window};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Settings for the `invert` and `gradcheck` commands.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertConfig {
    /// Target `(bias, current)` pairs.
    pub targets: Vec<(f64, f64)>,
    pub starts: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub bounds: Bounds,
    /// Use the configured design as start 0, followed by `starts - 1` random
    /// draws. When false every start is random.
    pub config_start: bool,
}

impl Default for InvertConfig {
    fn default() -> Self {
        InvertConfig {
            targets: Vec::new(),
            starts: 25,
            iterations: 1000,
            learning_rate: AdaBelief::default().learning_rate,
            seed: 0,
            bounds: Bounds::default(),
            config_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub device: Device,
    /// Barriers and Fermi level; also the first start of `invert`.
    pub design: DesignVector,
    pub grids: Grids,
    pub invert: InvertConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            device: Device::default(),
            design: DesignVector::from_array([0.3, 0.4, 0.05, 0.3, 0.6, 0.05, 0.1], 1.0),
            grids: Grids::default(),
            invert: InvertConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "geometry.length_nm",
    "geometry.points",
    "constants.hbar2_over_2m",
    "barriers.h1",
    "barriers.c1",
    "barriers.w1",
    "barriers.h2",
    "barriers.c2",
    "barriers.w2",
    "barriers.sharpness",
    "fermi_ev",
    "window.margin_frac",
    "window.sharpness",
    "grids.energy_points",
    "grids.interp_points",
    "invert.targets",
    "invert.starts",
    "invert.iterations",
    "invert.learning_rate",
    "invert.seed",
    "invert.bounds.height",
    "invert.bounds.center",
    "invert.bounds.width",
    "invert.bounds.fermi",
    "invert.config_start",
];

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            ConfigError::at(
                line,
                format!("`{key}` expects a finite number, got `{value}`"),
            )
        })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| {
        ConfigError::at(
            line,
            format!("`{key}` expects a nonnegative integer, got `{value}`"),
        )
    })
}

fn parse_pair(line: usize, key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| ConfigError::at(line, format!("`{key}` expects `a:b`, got `{value}`")))?;
    Ok((
        parse_f64(line, key, a.trim())?,
        parse_f64(line, key, b.trim())?,
    ))
}

fn parse_targets(line: usize, value: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_pair(line, "invert.targets", t))
        .collect()
}

/// Raw values before validation.
struct Draft {
    length: f64,
    points: usize,
    hbar2_over_2m: f64,
    design: [f64; 7],
    sharpness: f64,
    margin_frac: f64,
    window_sharpness: f64,
    energy_points: usize,
    interp_points: usize,
    invert: InvertConfig,
    ranges: [(f64, f64); 4],
}

impl Draft {
    fn from_config(c: &RunConfig) -> Self {
        let b = &c.invert.bounds;
        let range = |i: usize| (b.lower[i], b.upper[i]);
        Draft {
            length: c.device.geometry.length(),
            points: c.device.geometry.points(),
            hbar2_over_2m: c.device.constants.hbar2_over_2m,
            design: c.design.to_array(),
            sharpness: c.design.potential.barrier1.sharpness,
            margin_frac: c.device.window.margin_frac,
            window_sharpness: c.device.window.sharpness,
            energy_points: c.grids.energy_points,
            interp_points: c.grids.interp_points,
            invert: c.invert.clone(),
            ranges: [range(0), range(1), range(2), range(6)],
        }
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = |v: &str| parse_f64(line, key, v);
        match key {
            "geometry.length_nm" => self.length = f(value)?,
            "geometry.points" => self.points = parse_usize(line, key, value)?,
            "constants.hbar2_over_2m" => self.hbar2_over_2m = f(value)?,
            "barriers.h1" => self.design[0] = f(value)?,
            "barriers.c1" => self.design[1] = f(value)?,
            "barriers.w1" => self.design[2] = f(value)?,
            "barriers.h2" => self.design[3] = f(value)?,
            "barriers.c2" => self.design[4] = f(value)?,
            "barriers.w2" => self.design[5] = f(value)?,
            "barriers.sharpness" => self.sharpness = f(value)?,
            "fermi_ev" => self.design[6] = f(value)?,
            "window.margin_frac" => self.margin_frac = f(value)?,
            "window.sharpness" => self.window_sharpness = f(value)?,
            "grids.energy_points" => self.energy_points = parse_usize(line, key, value)?,
            "grids.interp_points" => self.interp_points = parse_usize(line, key, value)?,
            "invert.targets" => self.invert.targets = parse_targets(line, value)?,
            "invert.starts" => self.invert.starts = parse_usize(line, key, value)?,
            "invert.iterations" => self.invert.iterations = parse_usize(line, key, value)?,
            "invert.learning_rate" => self.invert.learning_rate = f(value)?,
            "invert.seed" => {
                self.invert.seed = value.parse().map_err(|_| {
                    ConfigError::at(
                        line,
                        format!("`{key}` expects an unsigned 64-bit integer, got `{value}`"),
                    )
                })?
            }
            "invert.bounds.height" => self.ranges[0] = parse_pair(line, key, value)?,
            "invert.bounds.center" => self.ranges[1] = parse_pair(line, key, value)?,
            "invert.bounds.width" => self.ranges[2] = parse_pair(line, key, value)?,
            "invert.bounds.fermi" => self.ranges[3] = parse_pair(line, key, value)?,
            "invert.config_start" => {
                self.invert.config_start = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            format!("`{key}` expects true or false, got `{value}`"),
                        ))
                    }
                }
            }
            _ => return Err(ConfigError::at(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn finish(mut self) -> Result<RunConfig, ConfigError> {
        let invalid = |e: qtbm_core::Error| ConfigError::global(e.to_string());
        let constants = PhysicalConstants::new(self.hbar2_over_2m).map_err(invalid)?;
        let geometry = DeviceGeometry::new(self.length, self.points).map_err(invalid)?;
        let window = Window::new(self.margin_frac, self.window_sharpness).map_err(invalid)?;
        let grids = Grids::new(self.energy_points, self.interp_points).map_err(invalid)?;
        let design = DesignVector::from_array(self.design, self.sharpness);
        design.validate().map_err(invalid)?;
        let [h, c, w, mu] = self.ranges;
        self.invert.bounds = Bounds::symmetric(h, c, w, mu).map_err(invalid)?;
        if self.invert.starts == 0 {
            return Err(ConfigError::global("`invert.starts` must be at least 1"));
        }
        if !(self.invert.learning_rate > 0.0) {
            return Err(ConfigError::global(
                "`invert.learning_rate` must be positive",
            ));
        }
        if let Some((v, _)) = self.invert.targets.iter().find(|(v, _)| *v < 0.0) {
            return Err(ConfigError::global(format!("target bias {v} is negative")));
        }
        Ok(RunConfig {
            device: Device::new(constants, geometry, window),
            design,
            grids,
            invert: self.invert,
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut draft = Draft::from_config(&RunConfig::default());
        let mut seen: Vec<&str> = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                ConfigError::at(line, format!("expected `key = value`, got `{content}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(ConfigError::at(line, format!("duplicate key `{key}`")));
            }
            draft.set(line, key, value)?;
            seen.push(key);
        }
        draft.finish()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Every setting, one key per line, in a form [`RunConfig::parse`] reads
    /// back exactly.
    pub fn dump(&self) -> String {
        let d = Draft::from_config(self);
        let pair = |(a, b): (f64, f64)| format!("{a:?}:{b:?}");
        let targets: Vec<String> = d.invert.targets.iter().map(|&t| pair(t)).collect();
        let values: Vec<String> = vec![
            format!("{:?}", d.length),
            d.points.to_string(),
            format!("{:?}", d.hbar2_over_2m),
            format!("{:?}", d.design[0]),
            format!("{:?}", d.design[1]),
            format!("{:?}", d.design[2]),
            format!("{:?}", d.design[3]),
            format!("{:?}", d.design[4]),
            format!("{:?}", d.design[5]),
            format!("{:?}", d.sharpness),
            format!("{:?}", d.design[6]),
            format!("{:?}", d.margin_frac),
            format!("{:?}", d.window_sharpness),
            d.energy_points.to_string(),
            d.interp_points.to_string(),
            targets.join(", "),
            d.invert.starts.to_string(),
            d.invert.iterations.to_string(),
            format!("{:?}", d.invert.learning_rate),
            d.invert.seed.to_string(),
            pair(d.ranges[0]),
            pair(d.ranges[1]),
            pair(d.ranges[2]),
            pair(d.ranges[3]),
            d.invert.config_start.to_string(),
        ];
        let mut out = String::new();
        for (key, value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn simulation(&self) -> Simulation {
        Simulation {
            device: self.device,
            grids: self.grids,
        }
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            iterations: self.invert.iterations,
            hyper: AdaBelief {
                learning_rate: self.invert.learning_rate,
                ..AdaBelief::default()
            },
            bounds: self.invert.bounds,
            sharpness: self.design.potential.barrier1.sharpness,
        }
    }
}
