//! Experiment configuration: one TOML file per experiment.

use std::str::FromStr;

use anyhow::{bail, Context, Result};
use brickwork_core::asym::{CorrectionModel, FitWindow};
use brickwork_core::lattice::{Direction, Placement, Setup};
use brickwork_core::noise::ChannelSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lattice,
    Rm,
    Oracle,
    Frame,
    Fit,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Lattice => "lattice",
            Mode::Rm => "rm",
            Mode::Oracle => "oracle",
            Mode::Frame => "frame",
            Mode::Fit => "fit",
        }
    }
}

/// Sweep axes. An axis that is present must be non-empty; which axes a mode
/// needs is checked in [`ExperimentConfig::validate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// Target Hashing bounds; γ is solved for per point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Vec<f64>>,
    /// Setup II fidelity exponents. In `rm` mode this is an input; in the
    /// lattice modes γ is solved for so that the lattice `f₂` hits the value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMethod {
    Density,
    Trajectories,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameMethod {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Coherent,
    Holevo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    /// `early`, `late` or `all`.
    Named(String),
    Range([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: String,
    pub window: WindowSpec,
    #[serde(default = "default_quantity")]
    pub quantity: Quantity,
    /// `L₀` in the early/late split `t = τ ln(N/L₀)`.
    #[serde(default = "default_l0")]
    pub l0: f64,
}

fn default_quantity() -> Quantity {
    Quantity::Coherent
}

fn default_l0() -> f64 {
    1.0
}

impl FitConfig {
    pub fn model(&self) -> Result<CorrectionModel> {
        Ok(CorrectionModel::from_str(&self.model)?)
    }

    pub fn window(&self) -> Result<FitWindow> {
        Ok(match &self.window {
            WindowSpec::Named(s) => match s.as_str() {
                "early" => FitWindow::Early { l0: self.l0 },
                "late" => FitWindow::Late { l0: self.l0 },
                "all" => FitWindow::All,
                other => bail!("unknown fit window `{other}`, expected early, late, all or [t_min, t_max]"),
            },
            WindowSpec::Range([a, b]) => FitWindow::Range { t_min: *a, t_max: *b },
        })
    }

    pub fn window_label(&self) -> String {
        match &self.window {
            WindowSpec::Named(s) => s.clone(),
            WindowSpec::Range([a, b]) => format!("[{a},{b}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_method: Option<OracleMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_method: Option<FrameMethod>,
    /// Also contract the Holevo terms in lattice mode.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub holevo: bool,
    /// Ceiling on one transfer state, as a power of two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_entries_log2: Option<u32>,
    pub sweep: Sweep,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitConfig>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_TRAJECTORIES: usize = 4;
pub const DEFAULT_MAX_ENTRIES_LOG2: u32 = 26;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Recovers the configuration embedded in a CSV header.
    pub fn from_csv_header(csv: &str) -> Result<Self> {
        let mut inside = false;
        let mut body = String::new();
        for line in csv.lines() {
            match line {
                CONFIG_BEGIN => inside = true,
                CONFIG_END => return Self::parse(&body),
                _ if inside => {
                    body.push_str(line.strip_prefix("# ").or_else(|| line.strip_prefix('#')).unwrap_or(line));
                    body.push('\n');
                }
                _ => {}
            }
        }
        bail!("no embedded configuration found")
    }

    pub fn setup(&self) -> Result<Setup> {
        Ok(Setup::from_str(self.setup.as_deref().unwrap_or("I")).context("field `setup`")?)
    }

    pub fn channel(&self) -> Result<Option<ChannelSpec>> {
        self.channel
            .as_deref()
            .map(|c| ChannelSpec::from_str(c).context("field `channel`"))
            .transpose()
    }

    pub fn direction(&self) -> Result<Direction> {
        Ok(Direction::from_str(self.direction.as_deref().unwrap_or("auto")).context("field `direction`")?)
    }

    pub fn placement(&self) -> Result<Placement> {
        Ok(Placement::from_str(self.placement.as_deref().unwrap_or("contiguous")).context("field `placement`")?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    pub fn max_entries(&self) -> u128 {
        1u128 << self.max_entries_log2.unwrap_or(DEFAULT_MAX_ENTRIES_LOG2)
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup()?;
        let channel = self.channel()?;
        self.direction()?;
        self.placement()?;
        let s = &self.sweep;
        check_axis("sweep.n", &s.n)?;
        check_axis("sweep.t", &s.t)?;
        check_axis("sweep.r", &s.r)?;
        check_axis("sweep.alpha", &s.alpha)?;
        check_axis("sweep.gamma", &s.gamma)?;
        check_axis("sweep.h2", &s.h2)?;
        check_axis("sweep.f2", &s.f2)?;

        let require = |name: &str, present: bool| -> Result<()> {
            if !present {
                bail!("field `{name}` is required in {} mode", self.mode.name());
            }
            Ok(())
        };
        let forbid = |name: &str, present: bool| -> Result<()> {
            if present {
                bail!("field `{name}` is not used in {} mode", self.mode.name());
            }
            Ok(())
        };
        require("sweep.n", s.n.is_some())?;
        for &n in s.n.iter().flatten() {
            if n < 2 || n % 2 != 0 {
                bail!("sweep.n: N = {n} must be even and at least 2");
            }
        }
        for &t in s.t.iter().flatten() {
            if t == 0 && self.mode != Mode::Frame {
                bail!("sweep.t: depth must be at least 1");
            }
        }
        for &a in s.alpha.iter().flatten() {
            if !(2..=4).contains(&a) {
                bail!("sweep.alpha: alpha = {a} outside 2..=4");
            }
        }
        for &g in s.gamma.iter().flatten() {
            if !(0.0..=1.0).contains(&g) {
                bail!("sweep.gamma: gamma = {g} outside [0, 1]");
            }
        }
        for &f in s.f2.iter().flatten() {
            if !(f >= 0.0) {
                bail!("sweep.f2: f2 = {f} must be non-negative");
            }
        }
        if s.gamma.is_some() && s.h2.is_some() {
            bail!("sweep.gamma and sweep.h2 are alternatives; give one");
        }
        if let Some(r) = &s.r {
            for &r in r {
                if !(0.0..=1.0).contains(&r) {
                    bail!("sweep.r: r = {r} outside [0, 1]");
                }
                for &n in s.n.iter().flatten() {
                    let k = r * n as f64;
                    if (k - k.round()).abs() > 1e-9 {
                        bail!("sweep.r: r·N = {r}·{n} is not an integer");
                    }
                }
            }
        }
        if s.gamma.is_some() || s.h2.is_some() {
            match &channel {
                Some(c) if c.has_gamma() => {}
                Some(c) => bail!("sweep.gamma/h2: channel {c} has no gamma parameter"),
                None => bail!("sweep.gamma/h2 need a `channel`"),
            }
        }
        let noisy = self.mode != Mode::Frame;
        if noisy {
            require("channel", channel.is_some())?;
            require("sweep.r", s.r.is_some())?;
        }
        match self.mode {
            Mode::Lattice | Mode::Fit | Mode::Oracle => {
                require("sweep.t", s.t.is_some())?;
                if s.f2.is_some() {
                    if setup != Setup::II {
                        bail!("sweep.f2 applies to setup II only");
                    }
                    if s.gamma.is_some() || s.h2.is_some() {
                        bail!("sweep.f2 fixes gamma; drop sweep.gamma/h2");
                    }
                    if self.mode == Mode::Oracle {
                        bail!("sweep.f2 is not supported in oracle mode");
                    }
                }
            }
            Mode::Rm => {
                forbid("sweep.t", s.t.is_some())?;
                if setup == Setup::II {
                    require("sweep.f2", s.f2.is_some())?;
                } else {
                    forbid("sweep.f2", s.f2.is_some())?;
                    if s.alpha.as_ref().is_some_and(|a| a.iter().any(|&a| a != 2)) {
                        bail!("sweep.alpha: setup I random-matrix values exist for alpha = 2 only");
                    }
                }
            }
            Mode::Frame => {
                require("sweep.t", s.t.is_some())?;
                forbid("channel", channel.is_some())?;
                forbid("sweep.r", s.r.is_some())?;
                forbid("sweep.gamma", s.gamma.is_some())?;
                forbid("sweep.h2", s.h2.is_some())?;
                forbid("sweep.f2", s.f2.is_some())?;
            }
        }
        if self.mode == Mode::Fit {
            if self.fits.is_empty() {
                bail!("fit mode needs at least one [[fits]] table");
            }
            if s.alpha.as_ref().is_some_and(|a| a.iter().any(|&a| a != 2)) {
                bail!("sweep.alpha: fits use alpha = 2");
            }
            for (i, f) in self.fits.iter().enumerate() {
                f.model().with_context(|| format!("fits[{i}].model"))?;
                f.window().with_context(|| format!("fits[{i}].window"))?;
                if !(f.l0 > 0.0) {
                    bail!("fits[{i}].l0 must be positive");
                }
            }
        } else if !self.fits.is_empty() {
            bail!("[[fits]] tables are only used in fit mode");
        }
        let sampled =
            self.mode == Mode::Oracle || (self.mode == Mode::Frame && self.frame_method == Some(FrameMethod::Sampled));
        if sampled && self.samples() < brickwork_core::oracle::MIN_SAMPLES {
            bail!("samples = {} is below the minimum of {}", self.samples(), brickwork_core::oracle::MIN_SAMPLES);
        }
        if let Some(p) = self.trajectories {
            if p < 2 {
                bail!("trajectories must be at least 2");
            }
        }
        if let Some(m) = self.max_entries_log2 {
            if !(10..=40).contains(&m) {
                bail!("max_entries_log2 = {m} outside 10..=40");
            }
        }
        Ok(())
    }
}

pub const CONFIG_BEGIN: &str = "# config begin";
pub const CONFIG_END: &str = "# config end";

fn check_axis<T>(name: &str, axis: &Option<Vec<T>>) -> Result<()> {
    if axis.as_ref().is_some_and(Vec::is_empty) {
        bail!("{name}: axis is empty");
    }
    Ok(())
}
