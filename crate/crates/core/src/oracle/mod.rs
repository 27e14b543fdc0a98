//! Monte Carlo ground truth: explicit Haar-random brickwork circuits evolved
//! densely at small `N`.
//!
//! Two evolution modes are available. `DensityMatrix` applies every channel
//! exactly, so the only randomness is the circuit. `Trajectories` samples Kraus
//! branches on pure states and estimates `Tr ρ^α` from α independent branches
//! of the same circuit (`E Tr(ρ₁⋯ρ_α) = Tr ρ^α`); it is unbiased, cheaper by
//! a factor of the Hilbert-space dimension, and noisier.

mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lattice::{gate_sites, gates_in_layer, haar_frame_potential_log, printed_frame_potential_log, LatticeSpec, Setup, Target};
use crate::noise::{CMatrix, KrausChannel};

use state::*;

/// Smallest sample count for a reported estimate.
pub const MIN_SAMPLES: usize = 100;

/// Default ceiling on amplitudes held per sample.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < MIN_SAMPLES {
            return invalid(format!("{} samples, at least {MIN_SAMPLES} required", xs.len()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, std_error: (var / n).sqrt(), n_samples: xs.len() })
    }

    /// `|self − x| / σ`, with `σ` the combined error when `x` carries one.
    pub fn z_score(&self, x: f64, x_err: f64) -> f64 {
        let s = (self.std_error.powi(2) + x_err.powi(2)).sqrt();
        if s == 0.0 {
            if self.mean == x { 0.0 } else { f64::INFINITY }
        } else {
            (self.mean - x).abs() / s
        }
    }
}

/// Generator for sample `index` under `seed`: ChaCha8 keyed by the seed, one
/// stream per sample, so samples can be drawn in any order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Haar unitary on `C^{d²}`: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn sample_haar_gate<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    sample_haar_unitary(d * d, rng)
}

pub fn sample_haar_unitary<R: Rng + ?Sized>(q: usize, rng: &mut R) -> CMatrix {
    let z = DMatrix::from_fn(q, q, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let r = qr.r();
    let mut u = qr.q();
    for j in 0..q {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..q {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// One sampled brickwork circuit, gates listed per layer left to right.
#[derive(Clone, Debug)]
pub struct CircuitSample {
    pub seed: u64,
    pub index: u64,
    pub gates: Vec<Vec<CMatrix>>,
}

impl CircuitSample {
    pub fn draw(n_sites: usize, depth: usize, d: usize, seed: u64, index: u64) -> Self {
        let mut rng = sample_rng(seed, index);
        Self::draw_with(n_sites, depth, d, seed, index, &mut rng)
    }

    fn draw_with(n_sites: usize, depth: usize, d: usize, seed: u64, index: u64, rng: &mut ChaCha8Rng) -> Self {
        let gates = (1..=depth)
            .map(|layer| (0..gates_in_layer(n_sites, layer)).map(|_| sample_haar_gate(d, rng)).collect())
            .collect();
        Self { seed, index, gates }
    }

    /// Applies the circuit to a pure state whose system sites start at
    /// `offset`, calling `after_layer` once per layer.
    fn run_pure(&self, psi: &mut Amps, n: usize, d: usize, offset: usize, mut after_layer: impl FnMut(&mut Amps)) {
        for (l, layer) in self.gates.iter().enumerate() {
            for (c, u) in layer.iter().enumerate() {
                let [i, j] = gate_sites(l + 1, c);
                apply_two(psi, n, d, offset + i, offset + j, u);
            }
            after_layer(psi);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionMode {
    DensityMatrix,
    /// `per_circuit` Kraus trajectories per sampled circuit, combined over all
    /// ordered α-tuples of distinct trajectories.
    Trajectories { per_circuit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub mode: EvolutionMode,
    pub max_amplitudes: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { mode: EvolutionMode::DensityMatrix, max_amplitudes: DEFAULT_MAX_AMPLITUDES }
    }
}

struct Kraus {
    ops: Vec<CMatrix>,
    conj: Vec<CMatrix>,
}

impl Kraus {
    fn new(ch: &KrausChannel) -> Self {
        let ops = ch.kraus_ops().to_vec();
        let conj = ops.iter().map(conj_matrix).collect();
        Self { ops, conj }
    }
}

/// Register layout for one target: `k_ref` reference sites followed by `n`
/// system sites, and the input state.
struct Register {
    k_ref: usize,
    n: usize,
    d: usize,
    input: Amps,
}

impl Register {
    fn total(&self) -> usize {
        self.k_ref + self.n
    }

    fn for_target(spec: &LatticeSpec, target: Target) -> Self {
        let (n, d) = (spec.n_sites, spec.local_dim);
        let k_ref = reference_sites(spec, target);
        let input = if k_ref > 0 { bell_input(&spec.logical_sites(), n, d) } else { basis(d.pow(n as u32), 0) };
        Self { k_ref, n, d, input }
    }
}

/// Reference qudits entangled with the logical inputs; none for the
/// all-zeros targets.
fn reference_sites(spec: &LatticeSpec, target: Target) -> usize {
    match target {
        Target::PurityB | Target::PurityRB | Target::HolevoMixed => spec.k_logical,
        Target::HolevoZero | Target::Fidelity => 0,
    }
}

fn check_oracle_size(spec: &LatticeSpec, target: Target, opts: &OracleOptions) -> Result<()> {
    let reg = reference_sites(spec, target) + spec.n_sites;
    let sites = match opts.mode {
        EvolutionMode::DensityMatrix => 2 * reg,
        EvolutionMode::Trajectories { .. } => reg,
    };
    let needed = (spec.local_dim as u128).saturating_pow(sites as u32);
    if needed > opts.max_amplitudes as u128 {
        return Err(Error::TooLarge { needed, ceiling: opts.max_amplitudes as u128 });
    }
    Ok(())
}

/// Noise after one layer (setup II) or after the encoder (setup I).
fn noise_dm(rho: &mut Amps, reg: &Register, kraus: &Kraus) {
    for q in 0..reg.n {
        apply_channel_dm(rho, reg.total(), reg.d, reg.k_ref + q, &kraus.ops, &kraus.conj);
    }
}

fn noise_traj(psi: &mut Amps, reg: &Register, kraus: &Kraus, rng: &mut ChaCha8Rng) {
    for q in 0..reg.n {
        let u: f64 = rng.random();
        apply_channel_trajectory(psi, reg.total(), reg.d, reg.k_ref + q, &kraus.ops, u);
    }
}

fn evolve_dm(circuit: &CircuitSample, reg: &Register, kraus: &Kraus, setup: Setup) -> Amps {
    let total = reg.total();
    let mut rho = density_from_pure(&reg.input);
    let conj: Vec<Vec<CMatrix>> = circuit.gates.iter().map(|l| l.iter().map(conj_matrix).collect()).collect();
    for (l, layer) in circuit.gates.iter().enumerate() {
        for (c, u) in layer.iter().enumerate() {
            let [i, j] = gate_sites(l + 1, c);
            let (i, j) = (reg.k_ref + i, reg.k_ref + j);
            apply_two(&mut rho, 2 * total, reg.d, i, j, u);
            apply_two(&mut rho, 2 * total, reg.d, total + i, total + j, &conj[l][c]);
        }
        if setup == Setup::II {
            noise_dm(&mut rho, reg, kraus);
        }
    }
    if setup == Setup::I {
        noise_dm(&mut rho, reg, kraus);
    }
    rho
}

fn evolve_traj(circuit: &CircuitSample, reg: &Register, kraus: &Kraus, setup: Setup, rng: &mut ChaCha8Rng) -> Amps {
    let mut psi = reg.input.clone();
    circuit.run_pure(&mut psi, reg.total(), reg.d, reg.k_ref, |p| {
        if setup == Setup::II {
            noise_traj(p, reg, kraus, rng);
        }
    });
    if setup == Setup::I {
        noise_traj(&mut psi, reg, kraus, rng);
    }
    psi
}

fn noiseless_output(circuit: &CircuitSample, reg: &Register) -> Amps {
    let mut psi = reg.input.clone();
    circuit.run_pure(&mut psi, reg.total(), reg.d, reg.k_ref, |_| {});
    psi
}

/// The target quantity for one circuit, exact in the noise.
fn sample_dm(circuit: &CircuitSample, spec: &LatticeSpec, target: Target, reg: &Register, kraus: &Kraus) -> f64 {
    let rho = evolve_dm(circuit, reg, kraus, spec.setup);
    let dim = reg.d.pow(reg.total() as u32);
    let m = as_matrix(&rho, dim);
    match target {
        Target::PurityRB | Target::HolevoZero => trace_power(&m, spec.alpha),
        Target::PurityB | Target::HolevoMixed => {
            let dim_r = reg.d.pow(reg.k_ref as u32);
            trace_power(&trace_leading(&m, dim_r, dim / dim_r), spec.alpha)
        }
        Target::Fidelity => {
            let ideal = noiseless_output(circuit, reg);
            // ⟨ψ|ρ|ψ⟩
            let rho_psi = &m * nalgebra::DVector::from_column_slice(&ideal);
            inner(&ideal, rho_psi.as_slice()).re
        }
    }
}

/// Reduced-state Gram factor `G[r][r'] = Σ_b ψ_i*(r, b) ψ_j(r', b)`, so that
/// `Tr(ρ_i ρ_j ⋯) = Tr(G_{ij} G_{jk} ⋯)` for pure trajectories.
fn reduced_gram(a: &[Complex64], b: &[Complex64], dim_r: usize) -> CMatrix {
    let dim_b = a.len() / dim_r;
    CMatrix::from_fn(dim_r, dim_r, |r, s| inner(&a[r * dim_b..(r + 1) * dim_b], &b[s * dim_b..(s + 1) * dim_b]))
}

fn injective_tuples(m: usize, alpha: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(alpha);
    fn rec(m: usize, alpha: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == alpha {
            out.push(cur.clone());
            return;
        }
        for i in 0..m {
            if !cur.contains(&i) {
                cur.push(i);
                rec(m, alpha, cur, out);
                cur.pop();
            }
        }
    }
    rec(m, alpha, &mut cur, &mut out);
    out
}

fn sample_traj(
    circuit: &CircuitSample,
    spec: &LatticeSpec,
    target: Target,
    reg: &Register,
    kraus: &Kraus,
    per_circuit: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let alpha = spec.alpha;
    if target == Target::Fidelity {
        let ideal = noiseless_output(circuit, reg);
        let sum: f64 =
            (0..per_circuit).map(|_| inner(&ideal, &evolve_traj(circuit, reg, kraus, spec.setup, rng)).norm_sqr()).sum();
        return sum / per_circuit as f64;
    }
    let trajs: Vec<Amps> = (0..per_circuit).map(|_| evolve_traj(circuit, reg, kraus, spec.setup, rng)).collect();
    // The whole register for RB-type targets, the system alone for B-type.
    let dim_r = match target {
        Target::PurityB | Target::HolevoMixed => reg.d.pow(reg.k_ref as u32),
        _ => 1,
    };
    let m = trajs.len();
    let mut gram = vec![None; m * m];
    let mut g = |i: usize, j: usize| -> CMatrix {
        gram[i * m + j].get_or_insert_with(|| reduced_gram(&trajs[i], &trajs[j], dim_r)).clone()
    };
    let tuples = injective_tuples(m, alpha);
    let mut acc = 0.0;
    for tup in &tuples {
        let mut prod = g(tup[0], tup[1]);
        for w in 1..alpha {
            prod = &prod * g(tup[w], tup[(w + 1) % alpha]);
        }
        acc += prod.trace().re;
    }
    acc / tuples.len() as f64
}

/// Annealed average of the quantity `lattice::contract` returns (before the
/// logarithm): `E Tr ρ^α` for purity targets, `E⟨ψ|ρ|ψ⟩` for fidelity.
pub fn simulate_annealed(spec: &LatticeSpec, target: Target, n_samples: usize, seed: u64) -> Result<McEstimate> {
    simulate_annealed_with(spec, target, n_samples, seed, &OracleOptions::default())
}

pub fn simulate_annealed_with(
    spec: &LatticeSpec,
    target: Target,
    n_samples: usize,
    seed: u64,
    opts: &OracleOptions,
) -> Result<McEstimate> {
    Ok(McEstimate::from_samples(&simulate_samples(spec, target, n_samples, seed, opts)?)?)
}

/// Per-circuit values, in sample order.
pub fn simulate_samples(
    spec: &LatticeSpec,
    target: Target,
    n_samples: usize,
    seed: u64,
    opts: &OracleOptions,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if target == Target::Fidelity && spec.alpha != 2 {
        return invalid("fidelity uses two replicas");
    }
    if let EvolutionMode::Trajectories { per_circuit } = opts.mode {
        let need = if target == Target::Fidelity { 1 } else { spec.alpha };
        if per_circuit < need {
            return invalid(format!("{per_circuit} trajectories per circuit, at least {need} required"));
        }
    }
    check_oracle_size(spec, target, opts)?;
    let reg = Register::for_target(spec, target);
    let kraus = Kraus::new(&spec.channel);
    let d = spec.local_dim;
    Ok((0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let circuit = CircuitSample::draw_with(spec.n_sites, spec.depth_t, d, seed, i, &mut rng);
            match opts.mode {
                EvolutionMode::DensityMatrix => sample_dm(&circuit, spec, target, &reg, &kraus),
                EvolutionMode::Trajectories { per_circuit } => {
                    sample_traj(&circuit, spec, target, &reg, &kraus, per_circuit, &mut rng)
                }
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FramePotential {
    pub estimate: McEstimate,
    /// `ln` of the Haar state-ensemble value `α!/∏_{j<α}(D+j)`.
    pub haar_log: f64,
    /// Estimate over the Haar value, minus one.
    pub delta_f: f64,
    /// The same ratio against the normalization `D^{−2α} α!`.
    pub delta_f_printed: f64,
}

/// `E|⟨ψ'|ψ⟩|^{2α}` over pairs of independent noiseless depth-`t` circuits on
/// `|0…0⟩` (qubits).
pub fn frame_potential(n_sites: usize, t: usize, alpha: usize, n_pairs: usize, seed: u64) -> Result<FramePotential> {
    frame_potential_d(n_sites, t, alpha, 2, n_pairs, seed)
}

pub fn frame_potential_d(
    n_sites: usize,
    t: usize,
    alpha: usize,
    d: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<FramePotential> {
    if n_sites < 2 || n_sites % 2 != 0 {
        return invalid(format!("N = {n_sites} must be even and at least 2"));
    }
    if alpha == 0 {
        return invalid("alpha must be positive");
    }
    let dim = (d as u128).saturating_pow(n_sites as u32);
    if dim > DEFAULT_MAX_AMPLITUDES as u128 {
        return Err(Error::TooLarge { needed: dim, ceiling: DEFAULT_MAX_AMPLITUDES as u128 });
    }
    let samples: Vec<f64> = (0..n_pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let a = CircuitSample::draw_with(n_sites, t, d, seed, i, &mut rng);
            let b = CircuitSample::draw_with(n_sites, t, d, seed, i, &mut rng);
            let mut psi = basis(dim as usize, 0);
            let mut phi = psi.clone();
            a.run_pure(&mut psi, n_sites, d, 0, |_| {});
            b.run_pure(&mut phi, n_sites, d, 0, |_| {});
            inner(&phi, &psi).norm_sqr().powi(alpha as i32)
        })
        .collect();
    let estimate = McEstimate::from_samples(&samples)?;
    let haar_log = haar_frame_potential_log(n_sites, alpha, d);
    let printed = printed_frame_potential_log(n_sites, alpha, d);
    Ok(FramePotential {
        estimate,
        haar_log,
        delta_f: estimate.mean / haar_log.exp() - 1.0,
        delta_f_printed: estimate.mean / printed.exp() - 1.0,
    })
}

#[cfg(test)]
mod tests;
