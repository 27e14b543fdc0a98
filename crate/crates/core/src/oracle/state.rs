//! Dense kernels on a register of `n` qudits stored as a flat amplitude vector,
//! site 0 most significant. A density matrix on `n` sites is stored as a
//! vector on `2n` sites (row sites first), so `ρ → UρU†` is `U` on the row
//! sites and `U*` on the column sites.

use num_complex::Complex64;

use crate::noise::CMatrix;

pub(crate) type Amps = Vec<Complex64>;

pub(crate) fn stride(n: usize, d: usize, q: usize) -> usize {
    d.pow((n - 1 - q) as u32)
}

/// Applies a `d × d` operator to site `q`.
pub(crate) fn apply_one(psi: &mut [Complex64], n: usize, d: usize, q: usize, op: &CMatrix) {
    let st = stride(n, d, q);
    let block = st * d;
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    for base in (0..psi.len()).step_by(block) {
        for off in 0..st {
            let i0 = base + off;
            for (a, b) in buf.iter_mut().enumerate() {
                *b = psi[i0 + a * st];
            }
            for a in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, &v) in buf.iter().enumerate() {
                    acc += op[(a, c)] * v;
                }
                psi[i0 + a * st] = acc;
            }
        }
    }
}

/// Applies a `d² × d²` operator to sites `(q1, q2)`, `q1` the more significant
/// digit of the operator's index.
pub(crate) fn apply_two(psi: &mut [Complex64], n: usize, d: usize, q1: usize, q2: usize, op: &CMatrix) {
    let (s1, s2) = (stride(n, d, q1), stride(n, d, q2));
    let dd = d * d;
    let offsets: Vec<usize> = (0..dd).map(|x| (x / d) * s1 + (x % d) * s2).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); dd];
    let (hi, lo) = (s1.max(s2), s1.min(s2));
    let bases = (0..psi.len() / (hi * d)).flat_map(move |top| {
        (0..hi / (lo * d)).flat_map(move |mid| (0..lo).map(move |low| top * hi * d + mid * lo * d + low))
    });
    for i in bases {
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = psi[i + o];
        }
        for (a, &o) in offsets.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, &v) in buf.iter().enumerate() {
                acc += op[(a, c)] * v;
            }
            psi[i + o] = acc;
        }
    }
}

pub(crate) fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn basis(len: usize, index: usize) -> Amps {
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Reference qudit `j` in a Bell pair with system site `logical[j]`, all other
/// system sites in `|0⟩`.
pub(crate) fn bell_input(logical: &[usize], n_sys: usize, d: usize) -> Amps {
    let k = logical.len();
    let n = k + n_sys;
    let mut v = vec![Complex64::new(0.0, 0.0); d.pow(n as u32)];
    let amp = Complex64::new((d as f64).powf(-(k as f64) / 2.0), 0.0);
    for x in 0..d.pow(k as u32) {
        let mut idx = x * d.pow(n_sys as u32);
        for (j, &site) in logical.iter().enumerate() {
            let digit = (x / d.pow((k - 1 - j) as u32)) % d;
            idx += digit * stride(n_sys, d, site);
        }
        v[idx] = amp;
    }
    v
}

pub(crate) fn conj_matrix(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// `ρ = |ψ⟩⟨ψ|` in the doubled layout.
pub(crate) fn density_from_pure(psi: &[Complex64]) -> Amps {
    let mut rho = Vec::with_capacity(psi.len() * psi.len());
    for a in psi {
        rho.extend(psi.iter().map(|b| a * b.conj()));
    }
    rho
}

/// `Σ_K K ρ K†` on site `q` of an `n`-site density matrix.
pub(crate) fn apply_channel_dm(rho: &mut Amps, n: usize, d: usize, q: usize, kraus: &[CMatrix], kraus_conj: &[CMatrix]) {
    if kraus.len() == 1 {
        apply_one(rho, 2 * n, d, q, &kraus[0]);
        apply_one(rho, 2 * n, d, n + q, &kraus_conj[0]);
        return;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); rho.len()];
    let mut work = rho.clone();
    for (k, kc) in kraus.iter().zip(kraus_conj) {
        work.copy_from_slice(rho);
        apply_one(&mut work, 2 * n, d, q, k);
        apply_one(&mut work, 2 * n, d, n + q, kc);
        for (o, w) in out.iter_mut().zip(&work) {
            *o += w;
        }
    }
    *rho = out;
}

/// Samples one Kraus branch on site `q` with probability `‖Kψ‖²` and
/// renormalizes. `u` is uniform in `[0, 1)`.
pub(crate) fn apply_channel_trajectory(psi: &mut Amps, n: usize, d: usize, q: usize, kraus: &[CMatrix], u: f64) {
    if kraus.len() == 1 {
        apply_one(psi, n, d, q, &kraus[0]);
        return;
    }
    let total = norm_sqr(psi);
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, k) in kraus.iter().enumerate() {
        let mut branch = psi.clone();
        apply_one(&mut branch, n, d, q, k);
        let p = norm_sqr(&branch) / total;
        acc += p;
        if u < acc || i + 1 == kraus.len() {
            if p > 0.0 {
                chosen = Some((branch, p));
                break;
            }
        }
    }
    let (branch, p) = chosen.unwrap_or_else(|| {
        // Rounding left u past the last branch with weight; take the heaviest.
        kraus
            .iter()
            .map(|k| {
                let mut b = psi.clone();
                apply_one(&mut b, n, d, q, k);
                let p = norm_sqr(&b) / total;
                (b, p)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one Kraus operator")
    });
    let scale = 1.0 / p.sqrt();
    *psi = branch.into_iter().map(|z| z * scale).collect();
}

/// Reshapes the doubled vector into a `D × D` matrix.
pub(crate) fn as_matrix(rho: &[Complex64], dim: usize) -> CMatrix {
    CMatrix::from_row_slice(dim, dim, rho)
}

/// Traces out the leading `dim_r`-dimensional factor of a `(dim_r·dim_b)²` matrix.
pub(crate) fn trace_leading(rho: &CMatrix, dim_r: usize, dim_b: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim_b, dim_b);
    for r in 0..dim_r {
        out += rho.view((r * dim_b, r * dim_b), (dim_b, dim_b));
    }
    out
}

/// `Re Tr ρ^α`.
pub(crate) fn trace_power(rho: &CMatrix, alpha: usize) -> f64 {
    if alpha == 2 {
        return rho.iter().map(|z| z.norm_sqr()).sum();
    }
    let mut p = rho.clone();
    for _ in 1..alpha - 1 {
        p = &p * rho;
    }
    // Tr(P ρ) without forming the last product.
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            tr += p[(i, j)] * rho[(j, i)];
        }
    }
    tr.re
}
