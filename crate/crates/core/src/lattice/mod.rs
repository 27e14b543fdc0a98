//! Exact contraction of the replica permutation-spin lattice for finite-depth
//! brickwork encoders.
//!
//! Every two-site gate carries a spin in `S_α`. A gate with spin `π` whose
//! legs attach below to spins `a` (left) and `b` (right) contributes
//! `T[π][a][b] = Σ_σ Wg[π][σ](d²) M_L[σ][a] M_R[σ][b]`, where `M` is the link
//! overlap (clean, or with the noise accumulated along the link). Gates in the
//! first layer see the input boundary instead, and the last gate on each site
//! meets the top boundary through the final noise.

mod geometry;
mod sweep;

#[cfg(test)]
mod brute;

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::noise::{evolved_permutation_ops, noisy_overlap_power, KrausChannel};
use crate::sym::{enumerate_group, weingarten_for, OverlapMatrix, SymmetricGroup};

pub use geometry::{gate_sites, gates_in_layer, Below, Brickwork, Gate, TopLink};

/// Default ceiling on the number of `f64` entries in one transfer state.
pub const DEFAULT_MAX_ENTRIES: u128 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setup {
    /// Noise once per site after the encoder.
    I,
    /// Noise once per site after every layer, including the last.
    II,
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setup::I => "I",
            Setup::II => "II",
        })
    }
}

impl std::str::FromStr for Setup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Setup::I),
            "II" | "2" => Ok(Setup::II),
            _ => invalid(format!("unknown setup `{s}`, expected I or II")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    PurityB,
    PurityRB,
    /// Output purity for the maximally mixed logical input, ancillas in `|0⟩`.
    /// The Holevo ensemble is the uniform logical basis, so this coincides
    /// with `PurityB`.
    HolevoMixed,
    /// Output purity for the all-zeros input.
    HolevoZero,
    /// Overlap of the noisy and noiseless outputs of the all-zeros input.
    Fidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopBoundary {
    /// `⟨⟨s|` with `s` the full cycle: the output moment `Tr ρ^α`.
    Cycle,
    /// `⟨⟨e|`: the trace `(Tr ρ)^α`.
    Identity,
    /// `⟨⟨0…0|`: the probability of the all-zeros outcome, raised to `α`.
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Transfer across one row of gate spins, `|S_α|^{N/2+1}` entries.
    Time,
    /// Transfer across one column of gate spins, `|S_α|^{t+1}` entries.
    Space,
    Auto,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Time => "time",
            Direction::Space => "space",
            Direction::Auto => "auto",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Direction::Time),
            "space" => Ok(Direction::Space),
            "auto" => Ok(Direction::Auto),
            _ => invalid(format!("unknown direction `{s}`, expected time, space or auto")),
        }
    }
}

/// Where the `k` logical qudits sit among the `N` physical ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Sites `0..k`.
    #[default]
    Contiguous,
    /// Logical qudit `j` on site `⌊(j + ½)N/k⌋`, evenly spread along the chain.
    Spread,
}

impl Placement {
    pub fn sites(self, n_sites: usize, k: usize) -> Vec<usize> {
        match self {
            Placement::Contiguous => (0..k).collect(),
            Placement::Spread => (0..k).map(|j| (2 * j + 1) * n_sites / (2 * k)).collect(),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Contiguous => "contiguous",
            Placement::Spread => "spread",
        })
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(Placement::Contiguous),
            "spread" => Ok(Placement::Spread),
            _ => invalid(format!("unknown placement `{s}`, expected contiguous or spread")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub k_logical: usize,
    pub depth_t: usize,
    pub local_dim: usize,
    pub alpha: usize,
    pub setup: Setup,
    pub channel: KrausChannel,
    pub placement: Placement,
    pub direction: Direction,
    pub max_entries: u128,
}

impl LatticeSpec {
    pub fn new(
        n_sites: usize,
        k_logical: usize,
        depth_t: usize,
        alpha: usize,
        setup: Setup,
        channel: KrausChannel,
    ) -> Result<Self> {
        let spec = Self {
            n_sites,
            k_logical,
            depth_t,
            local_dim: channel.dim_d(),
            alpha,
            setup,
            channel,
            placement: Placement::Contiguous,
            direction: Direction::Auto,
            max_entries: DEFAULT_MAX_ENTRIES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn logical_sites(&self) -> Vec<usize> {
        self.placement.sites(self.n_sites, self.k_logical)
    }

    pub fn with_max_entries(mut self, max_entries: u128) -> Self {
        self.max_entries = max_entries;
        self
    }

    pub fn with_depth(mut self, depth_t: usize) -> Self {
        self.depth_t = depth_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return invalid(format!("N = {} must be even and at least 2", self.n_sites));
        }
        if self.k_logical > self.n_sites {
            return invalid(format!("k = {} exceeds N = {}", self.k_logical, self.n_sites));
        }
        if self.depth_t == 0 {
            return invalid("depth must be at least 1");
        }
        if !(2..=4).contains(&self.alpha) {
            return invalid(format!("alpha = {} outside 2..=4", self.alpha));
        }
        if self.local_dim != self.channel.dim_d() {
            return invalid(format!(
                "local dimension {} does not match the channel dimension {}",
                self.local_dim,
                self.channel.dim_d()
            ));
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.k_logical as f64 / self.n_sites as f64
    }

    fn transfer_entries(&self, direction: Direction, depth: usize) -> u128 {
        let s = factorial(self.alpha) as u128;
        let axes = match direction {
            Direction::Space => depth + 1,
            _ => self.n_sites / 2 + 1,
        };
        s.saturating_pow(axes as u32)
    }

    /// The direction that will actually run, and its state size.
    pub fn resolve_direction(&self, depth: usize) -> (Direction, u128) {
        let time = self.transfer_entries(Direction::Time, depth);
        let space = self.transfer_entries(Direction::Space, depth);
        match self.direction {
            Direction::Time => (Direction::Time, time),
            Direction::Space => (Direction::Space, space),
            Direction::Auto if self.n_sites >= 4 && space < time => (Direction::Space, space),
            Direction::Auto => (Direction::Time, time),
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Gate weights `T[π][a][b]` flattened as `(π·S + a)·S + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTensor {
    pub order: usize,
    pub weights: Vec<f64>,
}

impl GateTensor {
    pub fn get(&self, pi: usize, a: usize, b: usize) -> f64 {
        self.weights[(pi * self.order + a) * self.order + b]
    }
}

fn build_tensor(wg: &[f64], left: &[f64], right: &[f64], s: usize) -> GateTensor {
    let mut weights = vec![0.0; s * s * s];
    for pi in 0..s {
        for sigma in 0..s {
            let w = wg[pi * s + sigma];
            if w == 0.0 {
                continue;
            }
            for a in 0..s {
                let la = w * left[sigma * s + a];
                for b in 0..s {
                    weights[(pi * s + a) * s + b] += la * right[sigma * s + b];
                }
            }
        }
    }
    GateTensor { order: s, weights }
}

fn flatten(m: &OverlapMatrix) -> Vec<f64> {
    let s = m.entries.nrows();
    (0..s * s).map(|i| m.entries[(i / s, i % s)]).collect()
}

/// Two-site gate tensor with the same link overlap on both legs.
pub fn gate_tensor(d: usize, alpha: usize, link_overlap: &OverlapMatrix) -> Result<GateTensor> {
    if link_overlap.dim_q != d {
        return invalid(format!("link overlap has dim_q = {}, expected {d}", link_overlap.dim_q));
    }
    let group = enumerate_group(alpha)?;
    if link_overlap.entries.nrows() != group.order() {
        return invalid("link overlap size does not match alpha");
    }
    let wg = weingarten_for((d * d) as u64, &group)?;
    let s = group.order();
    let wg: Vec<f64> = (0..s * s).map(|i| wg.entries[(i / s, i % s)]).collect();
    let m = flatten(link_overlap);
    Ok(build_tensor(&wg, &m, &m, s))
}

/// Everything a sweep needs, independent of the circuit depth. Link gaps never
/// exceed 2 in this geometry, so tables are indexed by gap `0..=2`.
pub(crate) struct Problem {
    pub n: usize,
    pub s: usize,
    pub wg: Vec<f64>,
    pub bottom: Vec<Vec<f64>>,
    pub tensors: [[GateTensor; 3]; 3],
    pub top: [Vec<f64>; 3],
}

impl Problem {
    pub fn tensor(&self, gate: &Gate) -> &GateTensor {
        let gap = |b: Below| match b {
            Below::Gate { gap, .. } => gap,
            Below::Input => unreachable!("input legs use the bottom factor"),
        };
        &self.tensors[gap(gate.below[0])][gap(gate.below[1])]
    }

    /// `B[π] = Σ_σ Wg[π][σ] v_i[σ] v_j[σ]` for a first-layer gate on `(i, j)`.
    pub fn bottom_factor(&self, sites: [usize; 2]) -> Vec<f64> {
        let s = self.s;
        let (vi, vj) = (&self.bottom[sites[0]], &self.bottom[sites[1]]);
        (0..s).map(|pi| (0..s).map(|sigma| self.wg[pi * s + sigma] * vi[sigma] * vj[sigma]).sum()).collect()
    }

    /// Product of top-boundary factors for the sites whose last gate is `gate`.
    pub fn top_factor(&self, brick: &Brickwork, gate: usize) -> Vec<f64> {
        let mut f = vec![1.0; self.s];
        for (_, gap) in brick.top_sites(gate) {
            for (x, fx) in f.iter_mut().enumerate() {
                *fx *= self.top[gap][x];
            }
        }
        f
    }
}

/// Per-site input-boundary vectors `⟨⟨σ|v_i⟩⟩`.
fn bottom_vectors(group: &SymmetricGroup, d: usize, n: usize, logical: &[usize], target: Target) -> Vec<Vec<f64>> {
    let s = group.order();
    let df = d as f64;
    let norm = df.powi(-(group.alpha() as i32));
    let mixed: Vec<f64> = (0..s).map(|x| norm * df.powi(group.cycle_count(x) as i32)).collect();
    let cycle = group.full_cycle();
    let entangled: Vec<f64> = (0..s).map(|x| norm * df.powi(group.relative_cycles(x, cycle) as i32)).collect();
    let zeros = vec![1.0; s];
    (0..n)
        .map(|i| match target {
            Target::PurityB | Target::HolevoMixed if logical.contains(&i) => mixed.clone(),
            Target::PurityRB if logical.contains(&i) => entangled.clone(),
            _ => zeros.clone(),
        })
        .collect()
}

fn top_vector(
    channel: &KrausChannel,
    group: &SymmetricGroup,
    replicas: &[usize],
    power: usize,
    top: TopBoundary,
) -> Result<Vec<f64>> {
    Ok(match top {
        TopBoundary::Cycle | TopBoundary::Identity => {
            let m = noisy_overlap_power(channel, group, replicas, power)?;
            let row = if top == TopBoundary::Cycle { group.full_cycle() } else { group.identity() };
            (0..group.order()).map(|x| m.get(row, x)).collect()
        }
        TopBoundary::Zeros => evolved_permutation_ops(channel, group, replicas, power)?
            .iter()
            .map(|x| x[(0, 0)].re)
            .collect(),
    })
}

/// Input/output boundaries and noise placement for one contraction.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub bottom_target: Target,
    pub top: TopBoundary,
    pub replicas: Vec<usize>,
    pub setup: Setup,
}

pub(crate) fn build_problem(
    n: usize,
    logical: &[usize],
    alpha: usize,
    channel: &KrausChannel,
    plan: &Plan,
) -> Result<Problem> {
    let group = enumerate_group(alpha)?;
    let s = group.order();
    let d = channel.dim_d();
    let wgm = weingarten_for((d * d) as u64, &group)?;
    let wg: Vec<f64> = (0..s * s).map(|i| wgm.entries[(i / s, i % s)]).collect();
    let link_power = |gap: usize| if plan.setup == Setup::II { gap } else { 0 };
    let top_power = |gap: usize| if plan.setup == Setup::II { gap } else { 1 };
    let links: Vec<Vec<f64>> = (0..3)
        .map(|gap| noisy_overlap_power(channel, &group, &plan.replicas, link_power(gap)).map(|m| flatten(&m)))
        .collect::<Result<_>>()?;
    let tensor = |l: usize, r: usize| build_tensor(&wg, &links[l], &links[r], s);
    let tensors = [0, 1, 2].map(|l| [0, 1, 2].map(|r| tensor(l, r)));
    let top = [
        top_vector(channel, &group, &plan.replicas, top_power(0), plan.top)?,
        top_vector(channel, &group, &plan.replicas, top_power(1), plan.top)?,
        top_vector(channel, &group, &plan.replicas, top_power(2), plan.top)?,
    ];
    let bottom = bottom_vectors(&group, d, n, logical, plan.bottom_target);
    Ok(Problem { n, s, wg, bottom, tensors, top })
}

fn plan_for(spec: &LatticeSpec, target: Target, top: TopBoundary) -> Result<Plan> {
    let replicas: Vec<usize> = match target {
        Target::Fidelity => {
            if spec.setup != Setup::II {
                return invalid("fidelity is defined for setup II only");
            }
            if spec.alpha != 2 {
                return invalid("fidelity uses two replicas");
            }
            vec![0]
        }
        _ => (0..spec.alpha).collect(),
    };
    // The reference legs are closed in the bottom vector; an identity top
    // traces them too, which leaves the mixed logical input.
    let bottom_target = if target == Target::PurityRB && top == TopBoundary::Identity { Target::PurityB } else { target };
    Ok(Plan { bottom_target, top, replicas, setup: spec.setup })
}

fn check_size(spec: &LatticeSpec, depth: usize) -> Result<Direction> {
    let (dir, needed) = spec.resolve_direction(depth);
    if dir == Direction::Space && spec.n_sites < 4 {
        return invalid("space-direction contraction needs N >= 4");
    }
    if needed > spec.max_entries {
        return Err(Error::TooLarge { needed, ceiling: spec.max_entries });
    }
    Ok(dir)
}

/// Natural log of the replica-averaged quantity selected by `target` and `top`
/// for each requested depth (the spec's `depth_t` is ignored).
pub fn contract_depths_with_top(
    spec: &LatticeSpec,
    target: Target,
    top: TopBoundary,
    depths: &[usize],
) -> Result<Vec<f64>> {
    spec.validate()?;
    let Some(&t_max) = depths.iter().max() else {
        return Ok(Vec::new());
    };
    if depths.contains(&0) {
        return invalid("depth must be at least 1");
    }
    let dir = check_size(spec, t_max)?;
    let plan = plan_for(spec, target, top)?;
    let problem = build_problem(spec.n_sites, &spec.logical_sites(), spec.alpha, &spec.channel, &plan)?;
    match dir {
        Direction::Space => depths.iter().map(|&t| sweep::space_sweep(&problem, t)).collect(),
        _ => sweep::time_sweep(&problem, depths),
    }
}

pub fn contract_depths(spec: &LatticeSpec, target: Target, depths: &[usize]) -> Result<Vec<f64>> {
    contract_depths_with_top(spec, target, TopBoundary::Cycle, depths)
}

pub fn contract_with_top(spec: &LatticeSpec, target: Target, top: TopBoundary) -> Result<f64> {
    Ok(contract_depths_with_top(spec, target, top, &[spec.depth_t])?[0])
}

/// Natural log of `E Tr ρ_B^α`, `E Tr ρ_RB^α`, the Holevo purities, or the
/// fidelity, as selected by `target`.
pub fn contract(spec: &LatticeSpec, target: Target) -> Result<f64> {
    contract_with_top(spec, target, TopBoundary::Cycle)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PurityResult {
    pub log_purity_b: f64,
    pub log_purity_rb: f64,
    pub spec: LatticeSpec,
}

impl PurityResult {
    /// Annealed α-Rényi coherent information in base `d`.
    pub fn coherent_info(&self) -> f64 {
        renyi_difference(self.spec.alpha, self.spec.local_dim, self.log_purity_b, self.log_purity_rb)
    }
}

/// `(1/(1-α)) (log_d P_B − log_d P_RB)`; for α = 2 this is `−log_d P_B + log_d P_RB`.
pub fn renyi_difference(alpha: usize, d: usize, log_b: f64, log_rb: f64) -> f64 {
    (log_b - log_rb) / (d as f64).ln() / (1.0 - alpha as f64)
}

pub fn purities(spec: &LatticeSpec) -> Result<PurityResult> {
    Ok(PurityResult {
        log_purity_b: contract(spec, Target::PurityB)?,
        log_purity_rb: contract(spec, Target::PurityRB)?,
        spec: spec.clone(),
    })
}

pub fn coherent_info(spec: &LatticeSpec) -> Result<f64> {
    Ok(purities(spec)?.coherent_info())
}

/// Coherent information at several depths from one pair of sweeps.
pub fn coherent_info_depths(spec: &LatticeSpec, depths: &[usize]) -> Result<Vec<f64>> {
    let b = contract_depths(spec, Target::PurityB, depths)?;
    let rb = contract_depths(spec, Target::PurityRB, depths)?;
    Ok(b.iter().zip(&rb).map(|(&lb, &lrb)| renyi_difference(spec.alpha, spec.local_dim, lb, lrb)).collect())
}

pub fn holevo_info(spec: &LatticeSpec) -> Result<f64> {
    Ok(holevo_info_depths(spec, &[spec.depth_t])?[0])
}

pub fn holevo_info_depths(spec: &LatticeSpec, depths: &[usize]) -> Result<Vec<f64>> {
    let mixed = contract_depths(spec, Target::HolevoMixed, depths)?;
    let zero = contract_depths(spec, Target::HolevoZero, depths)?;
    Ok(mixed.iter().zip(&zero).map(|(&m, &z)| renyi_difference(spec.alpha, spec.local_dim, m, z)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityResult {
    pub fidelity: f64,
    pub f2: f64,
}

fn fidelity_from_log(spec: &LatticeSpec, log_f: f64) -> Result<FidelityResult> {
    let fidelity = log_f.exp();
    let d = spec.local_dim as f64;
    let floor = d.powi(-(spec.n_sites as i32));
    let tilde = fidelity - floor;
    if !(tilde > 0.0) {
        return Err(Error::BelowNoiseFloor { fidelity, floor });
    }
    Ok(FidelityResult { fidelity, f2: -2.0 / spec.n_sites as f64 * tilde.ln() / d.ln() })
}

/// `F` and `f₂ = −(2/N) log_d (F − d^{−N})` in setup II.
pub fn fidelity_f2(spec: &LatticeSpec) -> Result<FidelityResult> {
    fidelity_from_log(spec, contract(spec, Target::Fidelity)?)
}

pub fn fidelity_f2_depths(spec: &LatticeSpec, depths: &[usize]) -> Result<Vec<Result<FidelityResult>>> {
    Ok(contract_depths(spec, Target::Fidelity, depths)?.into_iter().map(|l| fidelity_from_log(spec, l)).collect())
}

/// Exact `ln E|⟨ψ'|ψ⟩|^{2α}` for two independent noiseless depth-`t` brickwork
/// states on `|0…0⟩`. The pair merges into one circuit of depth `2t − 1`.
pub fn frame_potential_exact(n_sites: usize, t: usize, alpha: usize, d: usize, max_entries: u128) -> Result<f64> {
    if t == 0 {
        return Ok(0.0);
    }
    let id = KrausChannel::identity(d);
    let spec = LatticeSpec::new(n_sites, 0, 2 * t - 1, alpha, Setup::I, id)?.with_max_entries(max_entries);
    contract_with_top(&spec, Target::HolevoZero, TopBoundary::Zeros)
}

/// `ln` of the Haar state-ensemble frame potential `α!/∏_{j<α}(D+j)`.
pub fn haar_frame_potential_log(n_sites: usize, alpha: usize, d: usize) -> f64 {
    let ln_dim = n_sites as f64 * (d as f64).ln();
    let mut acc = (factorial(alpha) as f64).ln();
    for j in 0..alpha {
        // ln(D + j) without forming D.
        acc -= ln_dim + (j as f64 * (-ln_dim).exp()).ln_1p();
    }
    acc
}

/// The normalization `D^{−2α} α!` as printed alongside the frame-potential definition.
pub fn printed_frame_potential_log(n_sites: usize, alpha: usize, d: usize) -> f64 {
    (factorial(alpha) as f64).ln() - 2.0 * alpha as f64 * n_sites as f64 * (d as f64).ln()
}

#[cfg(test)]
mod tests;
