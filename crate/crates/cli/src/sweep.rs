//! Sweep expansion and per-point evaluation for every mode.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use brickwork_core::asym::{
    alpha_moments, fit_corrections, regime_setup1, rm_holevo, rm_purities_setup1, rm_setup2, thouless_tau,
    CorrectionFit,
};
use brickwork_core::lattice::{
    fidelity_f2, frame_potential_exact, haar_frame_potential_log, holevo_info, printed_frame_potential_log, purities,
    renyi_difference, LatticeSpec, Setup, Target,
};
use brickwork_core::noise::{cost_exponents, hashing_h2, hashing_h_alpha, ChannelSpec, KrausChannel};
use brickwork_core::oracle::{frame_potential, simulate_annealed_with, EvolutionMode, OracleOptions};
use brickwork_core::Error;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, FrameMethod, Mode, OracleMethod, Quantity, DEFAULT_TRAJECTORIES};
use crate::output::Row;

/// What fixes the noise strength at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    /// The channel as written.
    AsGiven,
    Gamma(f64),
    /// Solve for γ with this Hashing bound.
    H2(f64),
    /// Solve for γ with this lattice `f₂` (setup II).
    F2(f64),
    /// Random-matrix setup II: γ (or the channel as written) plus an input `f₂`.
    Rm { gamma: Option<f64>, h2: Option<f64>, f2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub t: Option<usize>,
    pub r: Option<f64>,
    pub alpha: usize,
    pub noise: Noise,
}

impl Point {
    fn k(&self) -> Option<usize> {
        self.r.map(|r| (r * self.n as f64).round() as usize)
    }
}

/// Cartesian product of the axes, in the order N, t, r, alpha, noise.
pub fn expand(cfg: &ExperimentConfig) -> Vec<Point> {
    let s = &cfg.sweep;
    let ns = s.n.clone().unwrap_or_default();
    let ts: Vec<Option<usize>> = match &s.t {
        Some(t) => t.iter().map(|&x| Some(x)).collect(),
        None => vec![None],
    };
    let rs: Vec<Option<f64>> = match &s.r {
        Some(r) => r.iter().map(|&x| Some(x)).collect(),
        None => vec![None],
    };
    let alphas = s.alpha.clone().unwrap_or_else(|| vec![2]);
    let base: Vec<Noise> = match (&s.gamma, &s.h2) {
        (Some(g), _) => g.iter().map(|&x| Noise::Gamma(x)).collect(),
        (_, Some(h)) => h.iter().map(|&x| Noise::H2(x)).collect(),
        _ => vec![Noise::AsGiven],
    };
    let noises: Vec<Noise> = match (&s.f2, cfg.mode) {
        (Some(f2), Mode::Rm) => base
            .iter()
            .flat_map(|&b| {
                f2.iter().map(move |&f| match b {
                    Noise::Gamma(g) => Noise::Rm { gamma: Some(g), h2: None, f2: f },
                    Noise::H2(h) => Noise::Rm { gamma: None, h2: Some(h), f2: f },
                    _ => Noise::Rm { gamma: None, h2: None, f2: f },
                })
            })
            .collect(),
        (Some(f2), _) => f2.iter().map(|&f| Noise::F2(f)).collect(),
        (None, _) => base,
    };
    let mut points = Vec::new();
    for &n in &ns {
        for &t in &ts {
            for &r in &rs {
                for &alpha in &alphas {
                    for &noise in &noises {
                        points.push(Point { n, t, r, alpha, noise });
                    }
                }
            }
        }
    }
    points
}

/// A point that could not be evaluated.
#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub resource: bool,
}

pub struct SweepOutput {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
    pub trailer: Vec<String>,
}

/// Run-time settings resolved from the config and command line.
#[derive(Clone, Debug)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub setup: Setup,
    pub channel: Option<ChannelSpec>,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { setup: cfg.setup()?, channel: cfg.channel()?, cfg })
    }

    fn channel_with(&self, gamma: Option<f64>) -> Result<KrausChannel> {
        let spec = self.channel.as_ref().ok_or_else(|| anyhow!("no channel configured"))?;
        Ok(spec.build(gamma)?)
    }

    fn lattice_spec(&self, p: &Point, ch: KrausChannel, alpha: usize) -> Result<LatticeSpec> {
        let t = p.t.ok_or_else(|| anyhow!("point has no depth"))?;
        let k = p.k().ok_or_else(|| anyhow!("point has no rate"))?;
        Ok(LatticeSpec::new(p.n, k, t, alpha, self.setup, ch)?
            .with_direction(self.cfg.direction()?)
            .with_placement(self.cfg.placement()?)
            .with_max_entries(self.cfg.max_entries()))
    }

    fn base_row(&self, p: &Point) -> Result<Row> {
        Ok(Row {
            mode: self.cfg.mode.name().to_string(),
            setup: if self.cfg.mode == Mode::Frame { String::new() } else { self.setup.to_string() },
            channel: self.channel.as_ref().map(|c| c.to_string()).unwrap_or_default(),
            placement: self.cfg.placement()?.to_string(),
            direction: self.cfg.direction()?.to_string(),
            n: p.n,
            k: p.k(),
            t: p.t,
            r: p.r,
            alpha: Some(p.alpha),
            ..Default::default()
        })
    }

    /// γ for the point, solving for target Hashing bounds or `f₂` if needed.
    fn resolve_gamma(&self, p: &Point) -> Result<Option<f64>> {
        match p.noise {
            Noise::AsGiven => Ok(None),
            Noise::Gamma(g) => Ok(Some(g)),
            Noise::H2(h) => self.gamma_for_h2(h).map(Some),
            Noise::Rm { gamma, h2, .. } => match (gamma, h2) {
                (Some(g), _) => Ok(Some(g)),
                (_, Some(h)) => self.gamma_for_h2(h).map(Some),
                _ => Ok(None),
            },
            Noise::F2(f2) => self.gamma_for_f2(p, f2).map(Some),
        }
    }

    fn gamma_for_h2(&self, target: f64) -> Result<f64> {
        let h = |g: f64| -> Result<f64> { Ok(hashing_h2(&self.channel_with(Some(g))?)?) };
        bisect(0.0, 1.0, target, h).map_err(|e| anyhow!("H2 = {target}: {e}"))
    }

    fn gamma_for_f2(&self, p: &Point, target: f64) -> Result<f64> {
        let f = |g: f64| -> Result<f64> {
            let spec = self.lattice_spec(p, self.channel_with(Some(g))?, 2)?;
            match fidelity_f2(&spec) {
                Ok(r) => Ok(r.f2),
                Err(Error::BelowNoiseFloor { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e.into()),
            }
        };
        bisect(0.0, 1.0, target, f).map_err(|e| anyhow!("f2 = {target}: {e}"))
    }

    fn fill_noise(&self, row: &mut Row, ch: &KrausChannel, gamma: Option<f64>, alpha: usize) -> Result<()> {
        row.gamma = gamma.or(match self.channel {
            Some(ChannelSpec::Depolarizing { gamma, .. }) | Some(ChannelSpec::AmplitudeDamping { gamma }) => Some(gamma),
            _ => None,
        });
        row.h2 = Some(hashing_h2(ch)?);
        row.h_alpha = hashing_h_alpha(ch, alpha).ok();
        row.tau = Some(thouless_tau(ch.dim_d()));
        Ok(())
    }

    fn eval(&self, p: &Point) -> Result<Row> {
        match self.cfg.mode {
            Mode::Lattice | Mode::Fit => self.eval_lattice(p),
            Mode::Rm => self.eval_rm(p),
            Mode::Oracle => self.eval_oracle(p),
            Mode::Frame => self.eval_frame(p),
        }
    }

    fn wants_holevo(&self) -> bool {
        self.cfg.holevo || self.cfg.fits.iter().any(|f| f.quantity == Quantity::Holevo)
    }

    fn eval_lattice(&self, p: &Point) -> Result<Row> {
        let mut row = self.base_row(p)?;
        let gamma = self.resolve_gamma(p)?;
        let ch = self.channel_with(gamma)?;
        self.fill_noise(&mut row, &ch, gamma, p.alpha)?;
        let spec = self.lattice_spec(p, ch.clone(), p.alpha)?;
        let d = ch.dim_d();
        let pur = purities(&spec)?;
        row.log_purity_b = Some(pur.log_purity_b);
        row.log_purity_rb = Some(pur.log_purity_rb);
        let ic = pur.coherent_info();
        row.ic = Some(ic);
        let chi = if self.wants_holevo() { Some(holevo_info(&spec)?) } else { None };
        row.chi = chi;
        let g = cost_exponents(&ch)?;
        let r = p.r.unwrap_or(0.0);
        match self.setup {
            Setup::I => {
                row.regime = Some(regime_setup1(r, g).to_string());
                if p.alpha == 2 {
                    let rm = rm_purities_setup1(r, g, p.n, d)?;
                    row.delta_ic = Some(renyi_difference(2, d, rm.log_purity_b, rm.log_purity_rb) - ic);
                    row.delta_chi = chi.map(|c| rm_holevo(r, g).map(|h| h * p.n as f64 - c)).transpose()?;
                }
            }
            Setup::II => {
                let fid_spec = if p.alpha == 2 { spec.clone() } else { self.lattice_spec(p, ch, 2)? };
                match fidelity_f2(&fid_spec) {
                    Ok(f) => {
                        row.fidelity = Some(f.fidelity);
                        row.f2 = Some(f.f2);
                        let rm = rm_setup2(r, g, f.f2)?;
                        row.regime = Some(rm.regime.to_string());
                        if p.alpha == 2 {
                            row.delta_ic = Some(rm.info_per_site * p.n as f64 - ic);
                            row.delta_chi = chi.map(|c| rm.holevo_per_site * p.n as f64 - c);
                        }
                    }
                    // Below the floor f₂ is undefined; the row keeps the purities.
                    Err(Error::BelowNoiseFloor { fidelity, .. }) => row.fidelity = Some(fidelity),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        check_purity_bounds(&row, p.n, p.k().unwrap_or(0), d)?;
        Ok(row)
    }

    fn eval_rm(&self, p: &Point) -> Result<Row> {
        let mut row = self.base_row(p)?;
        row.t = None;
        row.placement = String::new();
        row.direction = String::new();
        let gamma = self.resolve_gamma(p)?;
        let ch = self.channel_with(gamma)?;
        self.fill_noise(&mut row, &ch, gamma, p.alpha)?;
        let d = ch.dim_d();
        let r = p.r.unwrap_or(0.0);
        let g = cost_exponents(&ch)?;
        let nf = p.n as f64;
        match (self.setup, p.noise) {
            (Setup::I, _) => {
                let rm = rm_purities_setup1(r, g, p.n, d)?;
                row.log_purity_b = Some(rm.log_purity_b);
                row.log_purity_rb = Some(rm.log_purity_rb);
                row.ic = Some(renyi_difference(2, d, rm.log_purity_b, rm.log_purity_rb));
                row.chi = Some(rm_holevo(r, g)? * nf);
                row.regime = Some(rm.regime.to_string());
            }
            (Setup::II, Noise::Rm { f2, .. }) => {
                row.f2 = Some(f2);
                let rm = rm_setup2(r, g, f2)?;
                row.regime = Some(rm.regime.to_string());
                row.chi = Some(rm.holevo_per_site * nf);
                if p.alpha == 2 {
                    let (lb, lrb) = rm.log_purities(p.n, d);
                    row.log_purity_b = Some(lb);
                    row.log_purity_rb = Some(lrb);
                    row.ic = Some(renyi_difference(2, d, lb, lrb));
                } else {
                    // The replica sum neglects boundary noise; F̃ enters via f₂.
                    let ln_f = -f2 * nf / 2.0 * (d as f64).ln();
                    let m = alpha_moments(r, p.n, p.alpha, ln_f, d)?;
                    row.log_purity_b = Some(m.log_b);
                    row.log_purity_rb = Some(m.log_rb);
                    row.ic = Some(m.coherent_info());
                    row.ic_es = Some(m.coherent_info_es());
                }
            }
            (Setup::II, _) => bail!("setup II random-matrix points need an f2 value"),
        }
        Ok(row)
    }

    fn eval_oracle(&self, p: &Point) -> Result<Row> {
        let mut row = self.base_row(p)?;
        let gamma = self.resolve_gamma(p)?;
        let ch = self.channel_with(gamma)?;
        self.fill_noise(&mut row, &ch, gamma, p.alpha)?;
        let d = ch.dim_d();
        let spec = self.lattice_spec(p, ch, p.alpha)?;
        let mode = match self.cfg.oracle_method.unwrap_or(OracleMethod::Density) {
            OracleMethod::Density => EvolutionMode::DensityMatrix,
            OracleMethod::Trajectories => EvolutionMode::Trajectories {
                per_circuit: self.cfg.trajectories.unwrap_or(DEFAULT_TRAJECTORIES).max(p.alpha),
            },
        };
        let opts = OracleOptions { mode, ..Default::default() };
        let samples = self.cfg.samples();
        let seed = point_seed(self.cfg.seed(), p);
        let b = simulate_annealed_with(&spec, Target::PurityB, samples, seed, &opts)?;
        let rb = simulate_annealed_with(&spec, Target::PurityRB, samples, seed, &opts)?;
        row.purity_b_mean = Some(b.mean);
        row.purity_b_err = Some(b.std_error);
        row.purity_rb_mean = Some(rb.mean);
        row.purity_rb_err = Some(rb.std_error);
        row.n_samples = Some(samples);
        row.log_purity_b = Some(b.mean.ln());
        row.log_purity_rb = Some(rb.mean.ln());
        row.ic = Some(renyi_difference(p.alpha, d, b.mean.ln(), rb.mean.ln()));
        if self.setup == Setup::II && p.alpha == 2 {
            let f = simulate_annealed_with(&spec, Target::Fidelity, samples, seed, &opts)?;
            row.fidelity = Some(f.mean);
            row.fidelity_err = Some(f.std_error);
            let tilde = f.mean - (d as f64).powi(-(p.n as i32));
            if tilde > 0.0 {
                row.f2 = Some(-2.0 / p.n as f64 * tilde.ln() / (d as f64).ln());
            }
        }
        check_purity_bounds(&row, p.n, p.k().unwrap_or(0), d)?;
        Ok(row)
    }

    fn eval_frame(&self, p: &Point) -> Result<Row> {
        let mut row = self.base_row(p)?;
        row.k = None;
        row.direction = String::new();
        row.placement = String::new();
        let t = p.t.ok_or_else(|| anyhow!("point has no depth"))?;
        let haar = haar_frame_potential_log(p.n, p.alpha, 2);
        let printed = printed_frame_potential_log(p.n, p.alpha, 2);
        row.tau = Some(thouless_tau(2));
        match self.cfg.frame_method.unwrap_or(FrameMethod::Exact) {
            FrameMethod::Exact => {
                let f = frame_potential_exact(p.n, t, p.alpha, 2, self.cfg.max_entries())?;
                row.frame_log = Some(f);
                row.delta_f = Some((f - haar).exp_m1());
                row.delta_f_printed = Some((f - printed).exp_m1());
            }
            FrameMethod::Sampled => {
                let samples = self.cfg.samples();
                let f = frame_potential(p.n, t, p.alpha, samples, point_seed(self.cfg.seed(), p))?;
                row.frame_log = Some(f.estimate.mean.ln());
                row.delta_f = Some(f.delta_f);
                row.delta_f_printed = Some(f.delta_f_printed);
                row.n_samples = Some(samples);
                row.purity_b_err = None;
            }
        }
        Ok(row)
    }

    /// Evaluates every point on the worker pool; rows come back in sweep order.
    pub fn run(&self) -> SweepOutput {
        let points = expand(&self.cfg);
        let results: Vec<(usize, Result<Row>)> = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let start = Instant::now();
                let res = self.eval(p).and_then(|mut row| {
                    if !row.all_finite() {
                        bail!("non-finite value in row");
                    }
                    row.seconds = start.elapsed().as_secs_f64();
                    Ok(row)
                });
                (i, res)
            })
            .collect();
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for (i, res) in results {
            match res {
                Ok(row) => rows.push(row),
                Err(e) => failures.push(Failure {
                    resource: e.downcast_ref::<Error>().is_some_and(|e| matches!(e, Error::TooLarge { .. })),
                    message: format!("point {i} ({}): {e:#}", describe(&points[i])),
                }),
            }
        }
        let mut trailer = Vec::new();
        if self.cfg.mode == Mode::Fit {
            trailer.extend(self.fit_lines(&rows));
        }
        for f in &failures {
            trailer.push(format!("failed {}", f.message));
        }
        SweepOutput { rows, failures, trailer }
    }

    /// One line per (series, fit). A series shares every input except `t`.
    fn fit_lines(&self, rows: &[Row]) -> Vec<String> {
        // Keyed by N first so groups come out in numeric order.
        let mut groups: BTreeMap<(usize, String), Vec<&Row>> = BTreeMap::new();
        for row in rows {
            let noise = match (row.gamma, self.cfg.sweep.f2.is_some()) {
                (_, true) => format!("f2={}", row.f2.map(|f| format!("{f:.6}")).unwrap_or_default()),
                (Some(g), false) => match &self.cfg.sweep.h2 {
                    Some(_) => format!("h2={:.6}", row.h2.unwrap_or(f64::NAN)),
                    None => format!("gamma={g}"),
                },
                (None, false) => "channel".to_string(),
            };
            let key = format!("N={} r={} {noise}", row.n, row.r.unwrap_or(0.0));
            groups.entry((row.n, key)).or_default().push(row);
        }
        let tau = thouless_tau(self.channel.as_ref().and_then(|c| c.dim_d()).unwrap_or(2));
        let mut lines = Vec::new();
        for fit in &self.cfg.fits {
            let (model, window) = match (fit.model(), fit.window()) {
                (Ok(m), Ok(w)) => (m, w),
                _ => continue,
            };
            for ((_, key), group) in &groups {
                let series: Vec<(usize, f64, f64)> = group
                    .iter()
                    .filter_map(|r| {
                        let delta = match fit.quantity {
                            Quantity::Coherent => r.delta_ic,
                            Quantity::Holevo => r.delta_chi,
                        }?;
                        Some((r.n, r.t? as f64, delta))
                    })
                    .collect();
                let head = format!(
                    "fit {key} quantity={} model={} window={}",
                    match fit.quantity {
                        Quantity::Coherent => "coherent",
                        Quantity::Holevo => "holevo",
                    },
                    model.name(),
                    fit.window_label()
                );
                lines.push(match fit_corrections(&series, model, window, tau) {
                    Ok(f) => format!("{head} {}", fit_summary(&f)),
                    Err(e) => format!("{head} skipped: {e}"),
                });
            }
        }
        lines
    }
}

fn fit_summary(f: &CorrectionFit) -> String {
    let tau = if f.rate_tau_units.is_finite() { format!(" rate_tau={:.6}", f.rate_tau_units) } else { String::new() };
    format!("rate={:.6}{tau} prefactor={:.6e} residual={:.3e} points={}", f.rate, f.prefactor, f.residual, f.n_points)
}

fn describe(p: &Point) -> String {
    let mut s = format!("N={}", p.n);
    if let Some(t) = p.t {
        s += &format!(" t={t}");
    }
    if let Some(r) = p.r {
        s += &format!(" r={r}");
    }
    s += &format!(" alpha={}", p.alpha);
    match p.noise {
        Noise::AsGiven => {}
        Noise::Gamma(g) => s += &format!(" gamma={g}"),
        Noise::H2(h) => s += &format!(" h2={h}"),
        Noise::F2(f) => s += &format!(" f2={f}"),
        Noise::Rm { f2, .. } => s += &format!(" f2={f2}"),
    }
    s
}

/// Per-point seed so oracle points do not share circuits.
fn point_seed(seed: u64, p: &Point) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for x in [p.n as u64, p.t.unwrap_or(0) as u64, p.alpha as u64, p.r.unwrap_or(0.0).to_bits(), noise_bits(p.noise)] {
        h = (h ^ x).wrapping_mul(0x100_0000_01B3).rotate_left(29);
    }
    h
}

fn noise_bits(n: Noise) -> u64 {
    match n {
        Noise::AsGiven => 0,
        Noise::Gamma(g) => g.to_bits(),
        Noise::H2(h) => h.to_bits().rotate_left(1),
        Noise::F2(f) => f.to_bits().rotate_left(2),
        Noise::Rm { f2, .. } => f2.to_bits().rotate_left(3),
    }
}

/// Bisection for an increasing function on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if target < flo || (fhi.is_finite() && target > fhi) {
        bail!("target outside the reachable range [{flo}, {fhi}]");
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Tr ρ^α` lies in `[d^{-(α-1)(N+k)}, 1]`, so `|I_c| ≤ N + k` in base `d`.
fn check_purity_bounds(row: &Row, n: usize, k: usize, d: usize) -> Result<()> {
    let alpha = row.alpha.unwrap_or(2);
    let floor = -(((alpha - 1) * (n + k)) as f64) * (d as f64).ln() - 1e-9;
    for lp in [row.log_purity_b, row.log_purity_rb].into_iter().flatten() {
        if !(lp <= 1e-9 && lp >= floor) {
            bail!("log-purity {lp} outside [{floor}, 0]");
        }
    }
    if let Some(ic) = row.ic {
        if ic.abs() > (n + k) as f64 + 1e-9 {
            bail!("coherent information {ic} exceeds N + k");
        }
    }
    Ok(())
}
