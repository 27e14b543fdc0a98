//! Transfer-state contraction in the time and space directions.
//!
//! The state is a dense tensor over an ordered list of spin axes. Every update
//! replaces one axis `z` by a new axis `y` through weights that may also read
//! the two neighbouring axes:
//! `new[.., a, y, b, ..] = Σ_z W[y][z][a][b] · old[.., a, z, b, ..]`.
//! After each update the state is rescaled to unit max-norm and the scale is
//! accumulated in the log domain.

use crate::error::{Error, Result};

use super::geometry::{gates_in_layer, Brickwork};
use super::Problem;

pub(crate) struct State {
    dims: Vec<usize>,
    data: Vec<f64>,
    scratch: Vec<f64>,
    log_scale: f64,
}

impl State {
    pub fn scalar() -> Self {
        Self { dims: Vec::new(), data: vec![1.0], scratch: Vec::new(), log_scale: 0.0 }
    }

    pub fn from_product(factors: &[Vec<f64>]) -> Self {
        let mut st = Self::scalar();
        for f in factors {
            let mut next = Vec::with_capacity(st.data.len() * f.len());
            for &x in &st.data {
                next.extend(f.iter().map(|&v| x * v));
            }
            st.data = next;
            st.dims.push(f.len());
            st.renormalize();
        }
        st
    }

    pub fn insert_unit(&mut self, p: usize) {
        self.dims.insert(p, 1);
    }

    /// Replaces axis `p` by an axis of size `s_new`. `w` is indexed
    /// `[y][z][a][b]` with `a`/`b` running over the left/right neighbour axes
    /// (size 1 when absent).
    pub fn replace(&mut self, p: usize, s_new: usize, w: &[f64]) {
        let dims = &self.dims;
        let s_old = dims[p];
        let a_dim = if p > 0 { dims[p - 1] } else { 1 };
        let b_dim = if p + 1 < dims.len() { dims[p + 1] } else { 1 };
        debug_assert_eq!(w.len(), s_new * s_old * a_dim * b_dim);
        let outer: usize = dims[..p.saturating_sub(1)].iter().product();
        let inner: usize = if p + 2 <= dims.len() { dims[p + 2..].iter().product() } else { 1 };
        let new_len = outer * a_dim * s_new * b_dim * inner;
        self.scratch.clear();
        self.scratch.resize(new_len, 0.0);
        let old = &self.data;
        let new = &mut self.scratch;
        let old_block = s_old * b_dim * inner;
        let new_block = s_new * b_dim * inner;
        for oa in 0..outer * a_dim {
            let a = oa % a_dim;
            let src = &old[oa * old_block..(oa + 1) * old_block];
            let dst = &mut new[oa * new_block..(oa + 1) * new_block];
            for y in 0..s_new {
                for z in 0..s_old {
                    let wrow = &w[((y * s_old + z) * a_dim + a) * b_dim..][..b_dim];
                    for (b, &wv) in wrow.iter().enumerate() {
                        if wv == 0.0 {
                            continue;
                        }
                        let s = &src[(z * b_dim + b) * inner..][..inner];
                        let d = &mut dst[(y * b_dim + b) * inner..][..inner];
                        for (dv, &sv) in d.iter_mut().zip(s) {
                            *dv += wv * sv;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut self.data, &mut self.scratch);
        self.dims[p] = s_new;
        self.renormalize();
    }

    /// Contracts axis `p` against `f` and drops it.
    pub fn sum_out(&mut self, p: usize, f: &[f64]) {
        let s_old = self.dims[p];
        let a_dim = if p > 0 { self.dims[p - 1] } else { 1 };
        let b_dim = if p + 1 < self.dims.len() { self.dims[p + 1] } else { 1 };
        let mut w = vec![0.0; s_old * a_dim * b_dim];
        for z in 0..s_old {
            w[z * a_dim * b_dim..(z + 1) * a_dim * b_dim].fill(f[z]);
        }
        self.replace(p, 1, &w);
        self.dims.remove(p);
    }

    fn renormalize(&mut self) {
        let max = self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if max > 0.0 && max.is_finite() {
            let inv = 1.0 / max;
            self.data.iter_mut().for_each(|v| *v *= inv);
            self.log_scale += max.ln();
        }
    }

    /// `ln Σ_x state[x]`.
    pub fn log_total(&self) -> Result<f64> {
        let total: f64 = self.data.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(format!("contraction produced a non-positive total {total:e}")));
        }
        Ok(total.ln() + self.log_scale)
    }

    /// `ln Σ_x state[x] Π_i f_i[x_i]`, leaving the state untouched.
    pub fn log_closure(&self, factors: &[Vec<f64>]) -> Result<f64> {
        debug_assert_eq!(factors.len(), self.dims.len());
        let mut st = State {
            dims: self.dims.clone(),
            data: self.data.clone(),
            scratch: Vec::new(),
            log_scale: self.log_scale,
        };
        for (p, f) in factors.iter().enumerate().rev() {
            st.sum_out(p, f);
        }
        st.log_total()
    }
}

/// Dense weight table `[y][z][a][b]` from a closure.
fn weights(
    s_new: usize,
    s_old: usize,
    a_dim: usize,
    b_dim: usize,
    f: impl Fn(usize, usize, usize, usize) -> f64,
) -> Vec<f64> {
    let mut w = Vec::with_capacity(s_new * s_old * a_dim * b_dim);
    for y in 0..s_new {
        for z in 0..s_old {
            for a in 0..a_dim {
                for b in 0..b_dim {
                    w.push(f(y, z, a, b));
                }
            }
        }
    }
    w
}

/// Gates whose spins make up the time-direction state after layer `layer`, in
/// axis order.
fn row_gates(brick: &Brickwork, layer: usize) -> Vec<usize> {
    let n = brick.n_sites / 2;
    let idx = |l: usize, c: usize| brick.index_of(l, c).expect("gate exists");
    if layer % 2 == 1 {
        (0..n).map(|c| idx(layer, c)).collect()
    } else if n == 1 {
        vec![idx(layer - 1, 0)]
    } else {
        let mut v = vec![idx(layer - 1, 0)];
        v.extend((0..n - 1).map(|c| idx(layer, c)));
        v.push(idx(layer - 1, n - 1));
        v
    }
}

/// Sweeps upwards one layer at a time; the depth-`t` value is obtained by
/// closing the state with the top boundary after layer `t`.
pub(crate) fn time_sweep(problem: &Problem, depths: &[usize]) -> Result<Vec<f64>> {
    let n = problem.n / 2;
    let s = problem.s;
    let t_max = *depths.iter().max().expect("at least one depth");
    let brick = Brickwork::new(problem.n, t_max);
    let tensor = |layer: usize, col: usize| problem.tensor(&brick.gates[brick.index_of(layer, col).unwrap()]);

    let bottoms: Vec<Vec<f64>> =
        (0..n).map(|c| problem.bottom_factor(super::gate_sites(1, c))).collect();
    let mut state = State::from_product(&bottoms);
    let mut out = vec![f64::NAN; depths.len()];

    for layer in 1..=t_max {
        if layer > 1 {
            if layer % 2 == 0 {
                // State (G_0 .. G_{n-1}) -> (G_0, H_0 .. H_{n-2}, G_{n-1}).
                for c in 0..gates_in_layer(problem.n, layer) {
                    let t = tensor(layer, c);
                    if c == 0 {
                        state.insert_unit(1);
                        state.replace(1, s, &weights(s, 1, s, s, |y, _, a, b| t.get(y, a, b)));
                    } else {
                        state.replace(c + 1, s, &weights(s, s, s, s, |y, z, _, b| t.get(y, z, b)));
                    }
                }
            } else if n == 1 {
                let t = tensor(layer, 0);
                state.replace(0, s, &weights(s, s, 1, 1, |y, z, _, _| t.get(y, z, z)));
            } else {
                // State (G_0, H_0 .. H_{n-2}, G_{n-1}) -> (G'_0 .. G'_{n-1}).
                for c in 0..n {
                    let t = tensor(layer, c);
                    let a_dim = if c > 0 { s } else { 1 };
                    state.replace(c, s, &weights(s, s, a_dim, s, |y, z, _, b| t.get(y, z, b)));
                }
                state.sum_out(n, &vec![1.0; s]);
            }
        }
        for (slot, _) in depths.iter().enumerate().filter(|(_, &d)| d == layer) {
            let top_brick = Brickwork::new(problem.n, layer);
            let factors: Vec<Vec<f64>> =
                row_gates(&top_brick, layer).into_iter().map(|g| problem.top_factor(&top_brick, g)).collect();
            out[slot] = state.log_closure(&factors)?;
        }
    }
    Ok(out)
}

/// Sweeps left to right one gate column at a time for a fixed depth `t`.
/// Column `c` holds `G(ℓ, c)` for odd `ℓ` and `H(ℓ, c)` for even `ℓ`; the last
/// column has no even gates and carries a copy of the odd spin below instead.
pub(crate) fn space_sweep(problem: &Problem, t: usize) -> Result<f64> {
    let n = problem.n / 2;
    let s = problem.s;
    assert!(n >= 2, "space sweep needs at least two gate columns");
    let brick = Brickwork::new(problem.n, t);
    let gate = |layer: usize, col: usize| brick.index_of(layer, col).expect("gate exists");
    let top = |layer: usize, col: usize| problem.top_factor(&brick, gate(layer, col));

    let mut state = first_column(problem, &brick, t);
    for c in 1..n {
        let last = c == n - 1;
        for layer in 1..=t {
            if layer == 1 {
                let b = problem.bottom_factor(super::gate_sites(1, c));
                let f = top(1, c);
                state.insert_unit(0);
                state.replace(0, s, &weights(s, 1, 1, s, |y, _, _, _| b[y] * f[y]));
                continue;
            }
            let p = layer - 1;
            if layer % 2 == 1 {
                let g = &brick.gates[gate(layer, c)];
                let tt = problem.tensor(g);
                let f = top(layer, c);
                state.replace(p, s, &weights(s, s, s, s, |y, z, a, _| tt.get(y, z, a) * f[y]));
            } else {
                // The old column's even gate closes here; its right leg is the
                // new odd spin on the left neighbour axis.
                let tt = problem.tensor(&brick.gates[gate(layer, c - 1)]);
                if last {
                    state.replace(p, s, &weights(s, s, s, s, |y, z, a, b| {
                        if y == a {
                            tt.get(b, z, a)
                        } else {
                            0.0
                        }
                    }));
                } else {
                    let f = top(layer, c);
                    state.replace(p, s, &weights(s, s, s, s, |y, z, a, b| tt.get(b, z, a) * f[y]));
                }
            }
        }
        state.sum_out(t, &vec![1.0; s]);
    }
    state.log_total()
}

/// Column 0 by direct enumeration: `G(ℓ, 0)` for odd `ℓ ≥ 3` reads the spin two
/// axes back (site 0 idles through even layers) and the even spin just below.
fn first_column(problem: &Problem, brick: &Brickwork, t: usize) -> State {
    let s = problem.s;
    let gate = |layer: usize| brick.index_of(layer, 0).expect("gate exists");
    let b = problem.bottom_factor(super::gate_sites(1, 0));
    let top1 = problem.top_factor(brick, gate(1));
    let mut data: Vec<f64> = (0..s).map(|x| b[x] * top1[x]).collect();
    for layer in 2..=t {
        let f = problem.top_factor(brick, gate(layer));
        let mut next = Vec::with_capacity(data.len() * s);
        if layer % 2 == 0 {
            for &v in &data {
                next.extend(f.iter().map(|&fy| v * fy));
            }
        } else {
            let tt = problem.tensor(&brick.gates[gate(layer)]);
            for (idx, &v) in data.iter().enumerate() {
                let below_right = idx % s;
                let below_left = (idx / s) % s;
                next.extend((0..s).map(|y| v * tt.get(y, below_left, below_right) * f[y]));
            }
        }
        data = next;
    }
    let mut state = State { dims: vec![s; t], data, scratch: Vec::new(), log_scale: 0.0 };
    state.renormalize();
    state
}
