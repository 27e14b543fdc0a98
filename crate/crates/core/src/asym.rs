//! Infinite-depth (random-matrix) predictions, α-replica permutation sums, and
//! finite-depth correction fits.
//!
//! Exponents are per site and base `d`; log-purities are natural logs so they
//! can be compared directly with lattice output.

use crate::error::{invalid, Result};
use crate::noise::CostExponents;
use crate::sym::enumerate_group;

/// Tolerance on the tie between the two min-arguments that marks criticality.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Protected,
    Critical,
    Lost,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Protected => "protected",
            Regime::Critical => "critical",
            Regime::Lost => "lost",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmPrediction {
    pub log_purity_b: f64,
    pub log_purity_rb: f64,
    pub info_per_site: f64,
    pub regime: Regime,
}

/// `ln(d^{-a N} + d^{-b N})` without overflow.
fn log_two_terms(a: f64, b: f64, n: f64, d: usize) -> f64 {
    let ln_d = (d as f64).ln();
    let (x, y) = (-a * n * ln_d, -b * n * ln_d);
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

fn classify(h: f64, threshold: f64) -> Regime {
    if (h - threshold).abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if h < threshold {
        Regime::Protected
    } else {
        Regime::Lost
    }
}

fn check_rate(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return invalid(format!("rate r = {r} outside [0, 1]"));
    }
    Ok(())
}

/// Per-site exponents `(B, RB)` of the two terms in each purity, setup I.
pub fn setup1_exponents(r: f64, g: CostExponents) -> ([f64; 2], [f64; 2]) {
    ([g.g_se + 1.0, g.g_ss + r], [g.g_se + 1.0 + r, g.g_ss])
}

/// Both two-term purities at finite `N` (setup I, global scrambling limit).
pub fn rm_purities_setup1(r: f64, g: CostExponents, n: usize, d: usize) -> Result<RmPrediction> {
    check_rate(r)?;
    let (b, rb) = setup1_exponents(r, g);
    let nf = n as f64;
    let log_purity_b = log_two_terms(b[0], b[1], nf, d);
    let log_purity_rb = log_two_terms(rb[0], rb[1], nf, d);
    Ok(RmPrediction {
        log_purity_b,
        log_purity_rb,
        info_per_site: rm_coherent_setup1(r, g)?,
        regime: classify(g.g_ss - g.g_se, 1.0 - r),
    })
}

/// Large-`N` coherent information per site, setup I.
pub fn rm_coherent_setup1(r: f64, g: CostExponents) -> Result<f64> {
    check_rate(r)?;
    let (b, rb) = setup1_exponents(r, g);
    Ok(b[0].min(b[1]) - rb[0].min(rb[1]))
}

/// Large-`N` Holevo information per site, setup I.
pub fn rm_holevo(r: f64, g: CostExponents) -> Result<f64> {
    check_rate(r)?;
    Ok((g.g_se + 1.0).min(g.g_ss + r) - (g.g_se + 1.0).min(g.g_ss))
}

pub fn regime_setup1(r: f64, g: CostExponents) -> Regime {
    classify(g.g_ss - g.g_se, 1.0 - r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setup2Prediction {
    /// Per-site exponents of the two terms in `E Tr ρ_B²`.
    pub exponents_b: [f64; 2],
    /// Per-site exponents of the two terms in `E Tr ρ_RB²`.
    pub exponents_rb: [f64; 2],
    pub info_per_site: f64,
    pub holevo_per_site: f64,
    pub critical_f2: f64,
    pub regime: Regime,
}

impl Setup2Prediction {
    pub fn log_purities(&self, n: usize, d: usize) -> (f64, f64) {
        let nf = n as f64;
        let (b, rb) = (self.exponents_b, self.exponents_rb);
        (log_two_terms(b[0], b[1], nf, d), log_two_terms(rb[0], rb[1], nf, d))
    }
}

/// Setup II purities in terms of the circuit fidelity exponent `f₂`.
pub fn rm_setup2(r: f64, g: CostExponents, f2: f64) -> Result<Setup2Prediction> {
    check_rate(r)?;
    if !(f2 >= 0.0) {
        return invalid(format!("f2 = {f2} must be non-negative"));
    }
    let exponents_b = [g.g_se + 1.0, f2 + r * (1.0 + g.g_se)];
    let exponents_rb = [g.g_se + 1.0 + r * (g.g_es + 1.0), f2 + g.g_ss * r];
    let min = |e: [f64; 2]| e[0].min(e[1]);
    let critical_f2 = (1.0 - r) * (1.0 + g.g_se);
    Ok(Setup2Prediction {
        exponents_b,
        exponents_rb,
        info_per_site: min(exponents_b) - min(exponents_rb),
        holevo_per_site: min(exponents_b) - (g.g_se + 1.0).min(f2),
        critical_f2,
        regime: classify(f2, critical_f2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaMoments {
    /// `ln E Tr ρ_B^α`, summed over all of `S_α`.
    pub log_b: f64,
    pub log_rb: f64,
    /// The same moments keeping only `σ ∈ {e, s}`.
    pub log_b_es: f64,
    pub log_rb_es: f64,
    pub f_alpha: f64,
    pub alpha: usize,
    pub d: usize,
}

impl AlphaMoments {
    /// Rényi-normalized coherent information `(1/(1-α)) log_d(P_B/P_RB)`.
    pub fn coherent_info(&self) -> f64 {
        crate::lattice::renyi_difference(self.alpha, self.d, self.log_b, self.log_rb)
    }

    pub fn coherent_info_es(&self) -> f64 {
        crate::lattice::renyi_difference(self.alpha, self.d, self.log_b_es, self.log_rb_es)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// α-Rényi moments with bulk noise entering through `F̃`. Each site
/// contributes the overlap `d^{#cycles(π⁻¹σ)}`, and every non-fixed replica of
/// `σ` costs one factor of `F̃`.
pub fn alpha_moments(r: f64, n: usize, alpha: usize, log_f_tilde: f64, d: usize) -> Result<AlphaMoments> {
    check_rate(r)?;
    if !(log_f_tilde <= 0.0) {
        return invalid(format!("ln F̃ = {log_f_tilde} must be non-positive"));
    }
    let group = enumerate_group(alpha)?;
    let ln_d = (d as f64).ln();
    let nf = n as f64;
    let af = alpha as f64;
    let prefactor = -af * (1.0 + r) * nf * ln_d;
    let s = group.full_cycle();
    let mut b_terms = Vec::with_capacity(group.order());
    let mut rb_terms = Vec::with_capacity(group.order());
    for sigma in 0..group.order() {
        let to_top = group.relative_cycles(s, sigma) as f64;
        let to_e = group.cycle_count(sigma) as f64;
        let noise = (af - group.fixed_points(sigma) as f64) * log_f_tilde;
        b_terms.push(prefactor + nf * to_top * ln_d + noise + r * nf * to_e * ln_d);
        rb_terms.push(prefactor + (1.0 + r) * nf * to_top * ln_d + noise);
    }
    let es = [group.identity(), s];
    let pick = |v: &[f64]| es.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(AlphaMoments {
        log_b: log_sum_exp(&b_terms),
        log_rb: log_sum_exp(&rb_terms),
        log_b_es: log_sum_exp(&pick(&b_terms)),
        log_rb_es: log_sum_exp(&pick(&rb_terms)),
        f_alpha: -af / ((af - 1.0) * nf) * log_f_tilde / ln_d,
        alpha,
        d,
    })
}

/// `τ = 1 / ln((d² + 1)/(2d))`, natural-log convention.
pub fn thouless_tau(d: usize) -> f64 {
    let df = d as f64;
    1.0 / ((df * df + 1.0) / (2.0 * df)).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionModel {
    /// `ΔI = A N e^{-rate t}`, expected rate `2/τ` early in setup I.
    NExp2t,
    /// `ΔI = A e^{-rate t}`, expected rate `1/τ` late in setup I.
    ExpT,
    /// `ΔI = A N t^{-rate}`, expected rate `1` in setup II.
    NOverT,
    /// `ΔI = A N e^{-rate t}`, expected rate `1/τ` at criticality.
    NExpT,
}

impl CorrectionModel {
    pub fn name(self) -> &'static str {
        match self {
            CorrectionModel::NExp2t => "N_exp2t",
            CorrectionModel::ExpT => "exp_t",
            CorrectionModel::NOverT => "N_over_t",
            CorrectionModel::NExpT => "N_exp_t",
        }
    }

    fn divides_by_n(self) -> bool {
        !matches!(self, CorrectionModel::ExpT)
    }
}

impl std::str::FromStr for CorrectionModel {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N_exp2t" => Ok(CorrectionModel::NExp2t),
            "exp_t" => Ok(CorrectionModel::ExpT),
            "N_over_t" => Ok(CorrectionModel::NOverT),
            "N_exp_t" => Ok(CorrectionModel::NExpT),
            _ => invalid(format!("unknown correction model `{s}`")),
        }
    }
}

/// Which `t` values enter a fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitWindow {
    Range { t_min: f64, t_max: f64 },
    /// `t < τ ln(N/L₀)`: domains still much shorter than the chain.
    Early { l0: f64 },
    /// `t ≥ τ ln(N/L₀)`.
    Late { l0: f64 },
    All,
}

impl FitWindow {
    pub fn contains(&self, n: usize, t: f64, tau: f64) -> bool {
        match *self {
            FitWindow::Range { t_min, t_max } => t >= t_min && t <= t_max,
            FitWindow::Early { l0 } => t < tau * (n as f64 / l0).ln(),
            FitWindow::Late { l0 } => t >= tau * (n as f64 / l0).ln(),
            FitWindow::All => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionFit {
    pub model: CorrectionModel,
    /// Decay rate: per unit depth for exponential models, the power for `N/t`.
    pub rate: f64,
    /// `rate · τ` for exponential models.
    pub rate_tau_units: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub n_points: usize,
}

/// Least-squares fit of `ln ΔI` (or `ln(ΔI/N)`) against the model's abscissa.
pub fn fit_corrections(
    series: &[(usize, f64, f64)],
    model: CorrectionModel,
    window: FitWindow,
    tau: f64,
) -> Result<CorrectionFit> {
    let points: Vec<(usize, f64, f64)> =
        series.iter().copied().filter(|&(n, t, _)| window.contains(n, t, tau)).collect();
    if let Some(&(n, t, di)) = points.iter().find(|p| !(p.2 > 0.0)) {
        return invalid(format!("non-positive correction {di:e} at N = {n}, t = {t}; window rejected"));
    }
    if points.len() < 4 {
        return invalid(format!("a fit needs at least 4 points in the window, found {}", points.len()));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, t, di)| {
            let y = if model.divides_by_n() { (di / n as f64).ln() } else { di.ln() };
            let x = if model == CorrectionModel::NOverT { t.ln() } else { t };
            (x, y)
        })
        .collect();
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("all points share the same abscissa");
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    let rate = -slope;
    Ok(CorrectionFit {
        model,
        rate,
        rate_tau_units: if model == CorrectionModel::NOverT { f64::NAN } else { rate * tau },
        prefactor: intercept.exp(),
        residual,
        n_points: xy.len(),
    })
}
