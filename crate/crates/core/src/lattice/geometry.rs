//! Open-chain brickwork layout.
//!
//! Layers are numbered from 1. Odd layers hold gates `(2c, 2c+1)` for
//! `c in 0..N/2`; even layers hold gates `(2c+1, 2c+2)` for `c in 0..N/2-1`,
//! leaving sites `0` and `N-1` idle.

/// Where a gate leg attaches from below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Below {
    /// The circuit input on this site.
    Input,
    /// Output of gate `gate` (index into [`Brickwork::gates`]), reached after
    /// `gap` layer boundaries. Noise in setup II acts once per boundary.
    Gate { gate: usize, gap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub layer: usize,
    pub col: usize,
    pub sites: [usize; 2],
    pub below: [Below; 2],
}

/// Last gate acting on a site and the number of layer boundaries between it
/// and the top of the circuit (counting the one after the final layer).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopLink {
    pub gate: usize,
    pub gap: usize,
}

#[derive(Clone, Debug)]
pub struct Brickwork {
    pub n_sites: usize,
    pub depth: usize,
    pub gates: Vec<Gate>,
    pub top: Vec<TopLink>,
}

pub fn gates_in_layer(n_sites: usize, layer: usize) -> usize {
    if layer % 2 == 1 {
        n_sites / 2
    } else {
        n_sites / 2 - 1
    }
}

pub fn gate_sites(layer: usize, col: usize) -> [usize; 2] {
    if layer % 2 == 1 {
        [2 * col, 2 * col + 1]
    } else {
        [2 * col + 1, 2 * col + 2]
    }
}

impl Brickwork {
    /// Requires an even `n_sites >= 2` and `depth >= 1`.
    pub fn new(n_sites: usize, depth: usize) -> Self {
        assert!(n_sites >= 2 && n_sites % 2 == 0 && depth >= 1);
        let mut gates = Vec::new();
        // Most recent gate on each site with the layer it sits in.
        let mut last: Vec<Option<(usize, usize)>> = vec![None; n_sites];
        for layer in 1..=depth {
            for col in 0..gates_in_layer(n_sites, layer) {
                let sites = gate_sites(layer, col);
                let below = sites.map(|s| match last[s] {
                    None => Below::Input,
                    Some((gate, l)) => Below::Gate { gate, gap: layer - l },
                });
                gates.push(Gate { layer, col, sites, below });
            }
            let first = gates.len() - gates_in_layer(n_sites, layer);
            for (g, gate) in gates.iter().enumerate().skip(first) {
                for s in gate.sites {
                    last[s] = Some((g, layer));
                }
            }
        }
        let top = last
            .into_iter()
            .map(|entry| {
                let (gate, l) = entry.expect("every site is covered by an odd layer");
                TopLink { gate, gap: depth - l + 1 }
            })
            .collect();
        Self { n_sites, depth, gates, top }
    }

    /// Sites whose top link starts at `gate`, with their gaps.
    pub fn top_sites(&self, gate: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.top.iter().enumerate().filter(move |(_, t)| t.gate == gate).map(|(s, t)| (s, t.gap))
    }

    pub fn index_of(&self, layer: usize, col: usize) -> Option<usize> {
        self.gates.iter().position(|g| g.layer == layer && g.col == col)
    }
}
