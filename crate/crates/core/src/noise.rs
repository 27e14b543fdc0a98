//! Single-qudit channels as Kraus sets, noisy permutation overlaps, boundary
//! cost exponents and Hashing bounds.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::sym::{enumerate_group, OverlapKind, OverlapMatrix, Permutation, SymmetricGroup};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for trace preservation and unitality checks.
pub const KRAUS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelFamily {
    Depolarizing { gamma: f64 },
    AmplitudeDamping { gamma: f64 },
    Pauli { p: [f64; 4] },
    Custom,
}

impl ChannelFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ChannelFamily::Depolarizing { .. } => "depolarizing",
            ChannelFamily::AmplitudeDamping { .. } => "amplitude-damping",
            ChannelFamily::Pauli { .. } => "pauli",
            ChannelFamily::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim_d: usize,
    kraus_ops: Vec<CMatrix>,
    family: ChannelFamily,
    unital: bool,
}

impl KrausChannel {
    /// Validates trace preservation and records unitality.
    pub fn new(kraus_ops: Vec<CMatrix>, family: ChannelFamily) -> Result<Self> {
        let Some(first) = kraus_ops.first() else {
            return invalid("a channel needs at least one Kraus operator");
        };
        let d = first.nrows();
        if d < 2 {
            return invalid(format!("local dimension {d} must be at least 2"));
        }
        if kraus_ops.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return invalid("Kraus operators must all be square of the same size");
        }
        let id = CMatrix::identity(d, d);
        let mut tp = CMatrix::zeros(d, d);
        let mut un = CMatrix::zeros(d, d);
        for k in &kraus_ops {
            tp += k.adjoint() * k;
            un += k * k.adjoint();
        }
        let dev = max_abs(&(tp - &id));
        if !(dev < KRAUS_TOL) {
            return invalid(format!("Kraus set is not trace preserving (deviation {dev:e})"));
        }
        let unital = max_abs(&(un - &id)) < KRAUS_TOL;
        Ok(Self { dim_d: d, kraus_ops, family, unital })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_d: d,
            kraus_ops: vec![CMatrix::identity(d, d)],
            family: ChannelFamily::Custom,
            unital: true,
        }
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn family(&self) -> &ChannelFamily {
        &self.family
    }

    pub fn label(&self) -> &'static str {
        self.family.label()
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    /// True when the channel equals the identity map as a superoperator.
    pub fn is_identity(&self) -> bool {
        let d2 = self.dim_d * self.dim_d;
        max_abs(&(self.superoperator() - CMatrix::identity(d2, d2))) < KRAUS_TOL
    }

    /// `S = Σ K ⊗ conj(K)`, acting on row-major `vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let d2 = self.dim_d * self.dim_d;
        let mut s = CMatrix::zeros(d2, d2);
        for k in &self.kraus_ops {
            s += k.kronecker(&k.map(|z| z.conj()));
        }
        s
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_d, self.dim_d);
        for k in &self.kraus_ops {
            out += k * rho * k.adjoint();
        }
        out
    }
}

impl fmt::Display for KrausChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            ChannelFamily::Depolarizing { gamma } if self.dim_d == 2 => {
                write!(f, "depolarizing(gamma={gamma})")
            }
            ChannelFamily::Depolarizing { gamma } => {
                write!(f, "depolarizing(gamma={gamma},d={})", self.dim_d)
            }
            ChannelFamily::AmplitudeDamping { gamma } => write!(f, "amplitude_damping(gamma={gamma})"),
            ChannelFamily::Pauli { p } => write!(f, "pauli(p=[{},{},{},{}])", p[0], p[1], p[2], p[3]),
            ChannelFamily::Custom => write!(f, "custom(d={},kraus={})", self.dim_d, self.kraus_ops.len()),
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return invalid(format!("gamma = {gamma} outside [0, 1]"));
    }
    Ok(())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Generalized Pauli `X^a Z^b` on a `d`-dimensional qudit.
pub fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let omega = 2.0 * std::f64::consts::PI / d as f64;
    CMatrix::from_fn(d, d, |row, col| {
        if row == (col + a) % d {
            Complex64::from_polar(1.0, omega * ((b * col) % d) as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `ρ -> (1-γ)ρ + γ tr(ρ) I/d`, realized with weighted Weyl operators.
/// Zero-weight operators are dropped, so `gamma = 0` gives the single Kraus `I`.
pub fn depolarizing(d: usize, gamma: f64) -> Result<KrausChannel> {
    check_gamma(gamma)?;
    if d < 2 {
        return invalid(format!("local dimension {d} must be at least 2"));
    }
    let d2 = (d * d) as f64;
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let w = if a == 0 && b == 0 { 1.0 - gamma + gamma / d2 } else { gamma / d2 };
            if w > 0.0 {
                ops.push(weyl(d, a, b) * c(w.sqrt()));
            }
        }
    }
    KrausChannel::new(ops, ChannelFamily::Depolarizing { gamma })
}

pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_gamma(gamma)?;
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
    KrausChannel::new(vec![k0, k1], ChannelFamily::AmplitudeDamping { gamma })
}

pub fn pauli_matrices() -> [CMatrix; 4] {
    let z = c(0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[z, c(1.0), c(1.0), z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c(-1.0)]),
    ]
}

pub fn pauli_channel(p0: f64, p1: f64, p2: f64, p3: f64) -> Result<KrausChannel> {
    let p = [p0, p1, p2, p3];
    if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > KRAUS_TOL {
        return invalid(format!("{p:?} is not a probability vector"));
    }
    let ops = pauli_matrices()
        .into_iter()
        .zip(p)
        .filter(|&(_, pi)| pi > 0.0)
        .map(|(m, pi)| m * c(pi.sqrt()))
        .collect();
    KrausChannel::new(ops, ChannelFamily::Pauli { p })
}

/// Parses a plain-text Kraus list: one matrix row per line as whitespace
/// separated `re,im` pairs, matrices separated by blank lines, `#` comments.
pub fn kraus_from_text(text: &str) -> Result<KrausChannel> {
    let mut mats: Vec<Vec<Vec<Complex64>>> = vec![Vec::new()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !mats.last().unwrap().is_empty() {
                mats.push(Vec::new());
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|pair| {
                let (re, im) = pair.split_once(',').ok_or(())?;
                Ok(Complex64::new(re.trim().parse().map_err(|_| ())?, im.trim().parse().map_err(|_| ())?))
            })
            .collect::<std::result::Result<Vec<_>, ()>>()
            .map_err(|_| Error::InvalidInput(format!("kraus line {}: expected `re,im` pairs", lineno + 1)))?;
        mats.last_mut().unwrap().push(row);
    }
    if mats.last().is_some_and(|m| m.is_empty()) {
        mats.pop();
    }
    let ops = mats
        .into_iter()
        .enumerate()
        .map(|(i, rows)| {
            let d = rows.len();
            if rows.iter().any(|r| r.len() != d) {
                return invalid(format!("kraus operator {i} is not square"));
            }
            Ok(CMatrix::from_fn(d, d, |r, col| rows[r][col]))
        })
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(ops, ChannelFamily::Custom)
}

/// A parsed channel specification string.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    Depolarizing { gamma: f64, d: usize },
    AmplitudeDamping { gamma: f64 },
    Pauli { p: [f64; 4] },
    KrausFile { path: String },
}

impl ChannelSpec {
    /// Builds the channel; `gamma_override` replaces the spec's γ for families
    /// that have one (used by sweeps over a γ axis).
    pub fn build(&self, gamma_override: Option<f64>) -> Result<KrausChannel> {
        match self {
            ChannelSpec::Depolarizing { gamma, d } => depolarizing(*d, gamma_override.unwrap_or(*gamma)),
            ChannelSpec::AmplitudeDamping { gamma } => amplitude_damping(gamma_override.unwrap_or(*gamma)),
            ChannelSpec::Pauli { p } => {
                if gamma_override.is_some() {
                    return invalid("pauli channels have no gamma parameter to sweep");
                }
                pauli_channel(p[0], p[1], p[2], p[3])
            }
            ChannelSpec::KrausFile { path } => {
                if gamma_override.is_some() {
                    return invalid("kraus file channels have no gamma parameter to sweep");
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("cannot read kraus file {path}: {e}")))?;
                kraus_from_text(&text)
            }
        }
    }

    pub fn has_gamma(&self) -> bool {
        matches!(self, ChannelSpec::Depolarizing { .. } | ChannelSpec::AmplitudeDamping { .. })
    }

    pub fn dim_d(&self) -> Option<usize> {
        match self {
            ChannelSpec::Depolarizing { d, .. } => Some(*d),
            ChannelSpec::KrausFile { .. } => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Depolarizing { gamma, d: 2 } => write!(f, "depolarizing(gamma={gamma})"),
            ChannelSpec::Depolarizing { gamma, d } => write!(f, "depolarizing(gamma={gamma},d={d})"),
            ChannelSpec::AmplitudeDamping { gamma } => write!(f, "amplitude_damping(gamma={gamma})"),
            ChannelSpec::Pauli { p } => write!(f, "pauli(p=[{},{},{},{}])", p[0], p[1], p[2], p[3]),
            ChannelSpec::KrausFile { path } => write!(f, "kraus(file={path})"),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("channel `{s}`: {why}"));
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(|| bad("expected name(args)"))?;
        if !s_trim.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let name = s_trim[..open].trim();
        let body = &s_trim[open + 1..s_trim.len() - 1];
        let args = split_args(body).map_err(|e| bad(&e))?;
        let get = |key: &str| args.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let num = |key: &str| -> Result<f64> {
            get(key)
                .ok_or_else(|| bad(&format!("missing `{key}`")))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{key}` is not a number")))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match args.iter().find(|(k, _)| !keys.contains(&k.as_str())) {
                Some((k, _)) => Err(bad(&format!("unknown argument `{k}`"))),
                None => Ok(()),
            }
        };
        match name {
            "depolarizing" => {
                allow(&["gamma", "d"])?;
                let d = match get("d") {
                    Some(v) => v.parse().map_err(|_| bad("`d` is not an integer"))?,
                    None => 2,
                };
                let gamma = num("gamma")?;
                check_gamma(gamma)?;
                Ok(ChannelSpec::Depolarizing { gamma, d })
            }
            "amplitude_damping" => {
                allow(&["gamma"])?;
                let gamma = num("gamma")?;
                check_gamma(gamma)?;
                Ok(ChannelSpec::AmplitudeDamping { gamma })
            }
            "pauli" => {
                allow(&["p"])?;
                let list = get("p").ok_or_else(|| bad("missing `p`"))?;
                let inner = list
                    .strip_prefix('[')
                    .and_then(|l| l.strip_suffix(']'))
                    .ok_or_else(|| bad("`p` must be a bracketed list"))?;
                let v = inner
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("`p` entries must be numbers"))?;
                let p: [f64; 4] = v.try_into().map_err(|_| bad("`p` needs four entries"))?;
                pauli_channel(p[0], p[1], p[2], p[3])?;
                Ok(ChannelSpec::Pauli { p })
            }
            "kraus" => {
                allow(&["file"])?;
                let path = get("file").ok_or_else(|| bad("missing `file`"))?;
                Ok(ChannelSpec::KrausFile { path: path.trim_matches('"').to_string() })
            }
            _ => Err(bad("unknown channel family")),
        }
    }
}

fn split_args(body: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    let mut pieces = Vec::new();
    for (i, ch) in body.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                pieces.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&body[start..]);
    for piece in pieces {
        if piece.trim().is_empty() {
            continue;
        }
        let (k, v) = piece.split_once('=').ok_or_else(|| format!("expected key=value, got `{}`", piece.trim()))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Permutation operator on `alpha` copies of a `d`-dimensional space:
/// `P_σ |i_0 … i_{α-1}⟩ = |j⟩` with `j_{σ(a)} = i_a`. Returned as the column
/// image of each basis index.
fn permutation_action(d: usize, p: &Permutation) -> Vec<usize> {
    let alpha = p.alpha();
    let dim = d.pow(alpha as u32);
    let mut digits = vec![0; alpha];
    let mut out_digits = vec![0; alpha];
    (0..dim)
        .map(|col| {
            let mut x = col;
            for a in (0..alpha).rev() {
                digits[a] = x % d;
                x /= d;
            }
            for a in 0..alpha {
                out_digits[p.apply(a)] = digits[a];
            }
            out_digits.iter().fold(0, |acc, &v| acc * d + v)
        })
        .collect()
}

fn permutation_operator(d: usize, p: &Permutation) -> CMatrix {
    let dim = d.pow(p.alpha() as u32);
    let mut m = CMatrix::zeros(dim, dim);
    for (col, row) in permutation_action(d, p).into_iter().enumerate() {
        m[(row, col)] = c(1.0);
    }
    m
}

/// Embeds a single-site operator on replica `replica` of `alpha`.
fn embed(k: &CMatrix, replica: usize, alpha: usize) -> CMatrix {
    let d = k.nrows();
    let left = CMatrix::identity(d.pow(replica as u32), d.pow(replica as u32));
    let right_dim = d.pow((alpha - replica - 1) as u32);
    let right = CMatrix::identity(right_dim, right_dim);
    left.kronecker(k).kronecker(&right)
}

/// Overlap matrix `entries[π][σ] = Tr[P_π† N^m_affected(P_σ)]`, where the
/// channel is applied `power` times on each replica listed in `affected`.
fn normalized_replicas(alpha: usize, affected: &[usize]) -> Result<Vec<usize>> {
    if alpha > 4 {
        return invalid(format!("noisy overlaps need alpha <= 4, got {alpha}"));
    }
    let mut reps = affected.to_vec();
    reps.sort_unstable();
    reps.dedup();
    if reps.iter().any(|&r| r >= alpha) {
        return invalid(format!("replica index out of range in {affected:?} for alpha = {alpha}"));
    }
    Ok(reps)
}

/// The operators `N^power(P_σ)` on the `d^α`-dimensional replica space, with
/// the channel acting on the listed replicas, in group order.
pub fn evolved_permutation_ops(
    ch: &KrausChannel,
    group: &SymmetricGroup,
    affected: &[usize],
    power: usize,
) -> Result<Vec<CMatrix>> {
    let alpha = group.alpha();
    let reps = normalized_replicas(alpha, affected)?;
    let d = ch.dim_d();
    let embedded: Vec<Vec<CMatrix>> = reps
        .iter()
        .map(|&r| ch.kraus_ops().iter().map(|k| embed(k, r, alpha)).collect())
        .collect();
    Ok(group
        .elements()
        .iter()
        .map(|sigma| {
            let mut x = permutation_operator(d, sigma);
            for _ in 0..power {
                for kset in &embedded {
                    let mut y = CMatrix::zeros(x.nrows(), x.ncols());
                    for k in kset {
                        y += k * &x * k.adjoint();
                    }
                    x = y;
                }
            }
            x
        })
        .collect())
}

pub fn noisy_overlap_power(
    ch: &KrausChannel,
    group: &SymmetricGroup,
    affected: &[usize],
    power: usize,
) -> Result<OverlapMatrix> {
    let alpha = group.alpha();
    let reps = normalized_replicas(alpha, affected)?;
    let d = ch.dim_d();
    let evolved = evolved_permutation_ops(ch, group, &reps, power)?;
    let actions: Vec<Vec<usize>> = group.elements().iter().map(|p| permutation_action(d, p)).collect();
    let order = group.order();
    let mut entries = DMatrix::<f64>::zeros(order, order);
    for (j, x) in evolved.iter().enumerate() {
        for (i, act) in actions.iter().enumerate() {
            // P_π has ones at (act[col], col), so Tr[P_π† X] = Σ_col X[act[col], col].
            let z: Complex64 = act.iter().enumerate().map(|(col, &row)| x[(row, col)]).sum();
            if z.im.abs() > 1e-9 * z.norm().max(1.0) {
                return Err(Error::Numerical(format!("overlap has imaginary part {:e}", z.im)));
            }
            entries[(i, j)] = z.re;
        }
    }
    let kind = if reps.is_empty() || power == 0 {
        OverlapKind::Clean
    } else if reps.len() == alpha {
        OverlapKind::NoisyAllReplicas
    } else if reps.len() == 1 {
        OverlapKind::NoisyOneReplica
    } else {
        OverlapKind::NoisySubset
    };
    Ok(OverlapMatrix { entries, dim_q: d, kind })
}

/// `replicas_affected` holds zero-based replica indices.
pub fn noisy_overlap(ch: &KrausChannel, alpha: usize, replicas_affected: &[usize]) -> Result<OverlapMatrix> {
    let group = enumerate_group(alpha)?;
    noisy_overlap_power(ch, &group, replicas_affected, 1)
}

/// `g_{π,σ} = log_d G_{π,σ} − log_d G̃_{π,σ}` for α = 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostExponents {
    pub g_se: f64,
    pub g_ss: f64,
    pub g_es: f64,
}

impl CostExponents {
    pub const ZERO: CostExponents = CostExponents { g_se: 0.0, g_ss: 0.0, g_es: 0.0 };
}

pub fn cost_exponents(ch: &KrausChannel) -> Result<CostExponents> {
    let noisy = noisy_overlap(ch, 2, &[0, 1])?;
    let d = ch.dim_d() as f64;
    // Index 0 is e, index 1 is s; the clean entries are d^2 on the diagonal, d off it.
    let clean = |i: usize, j: usize| if i == j { 2.0 } else { 1.0 };
    let g = |i: usize, j: usize| -> Result<f64> {
        let v = noisy.get(i, j);
        if !(v > 0.0) {
            return Err(Error::Numerical(format!("noisy overlap entry [{i}][{j}] = {v:e} is not positive")));
        }
        Ok(clean(i, j) - v.ln() / d.ln())
    };
    Ok(CostExponents { g_se: g(1, 0)?, g_ss: g(1, 1)?, g_es: g(0, 1)? })
}

/// Rényi-2 Hashing bound `H₂ = g_ss − g_se`, in base `d`.
pub fn hashing_h2(ch: &KrausChannel) -> Result<f64> {
    let g = cost_exponents(ch)?;
    Ok(g.g_ss - g.g_se)
}

/// Closed-form α-Rényi Hashing bound of the depolarizing channel.
pub fn depolarizing_h_alpha(d: usize, gamma: f64, alpha: usize) -> Result<f64> {
    check_gamma(gamma)?;
    if d < 2 || alpha < 2 {
        return invalid(format!("need d >= 2 and alpha >= 2, got d = {d}, alpha = {alpha}"));
    }
    let d2 = (d * d) as f64;
    let a = alpha as i32;
    let inner = (1.0 - (d2 - 1.0) / d2 * gamma).powi(a) + (d2 - 1.0) * (gamma / d2).powi(a);
    Ok(inner.ln() / (d as f64).ln() / (1.0 - alpha as f64))
}

/// α-Rényi Hashing bound; only the depolarizing family has a closed form.
pub fn hashing_h_alpha(ch: &KrausChannel, alpha: usize) -> Result<f64> {
    match ch.family() {
        ChannelFamily::Depolarizing { gamma } => depolarizing_h_alpha(ch.dim_d(), *gamma, alpha),
        other => invalid(format!("H_alpha closed form only exists for depolarizing noise, not {}", other.label())),
    }
}
