//! Exhaustive sum over every gate-spin assignment, for cross-checking sweeps.

use super::geometry::{Below, Brickwork};
use super::Problem;

pub(crate) fn brute_force(problem: &Problem, t: usize) -> f64 {
    let brick = Brickwork::new(problem.n, t);
    let s = problem.s;
    let g = brick.gates.len();
    let tops: Vec<Vec<f64>> = (0..g).map(|i| problem.top_factor(&brick, i)).collect();
    let bottoms: Vec<Option<Vec<f64>>> = brick
        .gates
        .iter()
        .map(|gate| (gate.below == [Below::Input; 2]).then(|| problem.bottom_factor(gate.sites)))
        .collect();
    let mut spins = vec![0usize; g];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (i, gate) in brick.gates.iter().enumerate() {
            let x = spins[i];
            w *= tops[i][x];
            w *= match &bottoms[i] {
                Some(b) => b[x],
                None => {
                    let below = gate.below.map(|b| match b {
                        Below::Gate { gate, .. } => spins[gate],
                        Below::Input => unreachable!(),
                    });
                    problem.tensor(gate).get(x, below[0], below[1])
                }
            };
            if w == 0.0 {
                break;
            }
        }
        total += w;
        // Odometer over all S^g assignments.
        let mut i = 0;
        loop {
            if i == g {
                return total;
            }
            spins[i] += 1;
            if spins[i] < s {
                break;
            }
            spins[i] = 0;
            i += 1;
        }
    }
}
