use serde::{Deserialize, Serialize};

use super::maxflow::FlowNetwork;
use crate::crf::{energy_of, energy_unchecked, EnergyModel};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpansionResult {
    pub labeling: Vec<usize>,
    pub energy: f64,
    /// Accepted expansion moves.
    pub moves: usize,
    /// Sweeps over all labels, including the final one without changes.
    pub sweeps: usize,
    /// Sweeps in which at least one move was accepted.
    pub effective_sweeps: usize,
    /// A full sweep produced no improvement.
    pub converged: bool,
    /// Energy of the initial labeling followed by each accepted move.
    pub energies: Vec<f64>,
}

fn check_labeling(e: &EnergyModel, x: &[usize]) -> Result<()> {
    energy_of(e, x).map(|_| ())
}

/// Best keep-or-switch-to-`alpha` move from `x`. Pairwise terms that are not
/// submodular are replaced by their nearest submodular term before the cut;
/// the returned energy is the true energy of the returned labeling.
pub fn expansion_move(e: &EnergyModel, x: &[usize], alpha: usize) -> Result<(Vec<usize>, f64)> {
    check_labeling(e, x)?;
    if alpha >= e.num_labels() {
        return Err(Error::validation(format!("label {alpha} out of range for {} labels", e.num_labels())));
    }
    Ok(move_unchecked(e, x, alpha))
}

fn move_unchecked(e: &EnergyModel, x: &[usize], alpha: usize) -> (Vec<usize>, f64) {
    let n = e.num_nodes();
    let u = e.unary();
    // Cost of keeping (e0) or switching (e1) per node.
    let mut e0: Vec<f64> = (0..n).map(|i| u.get(i, x[i])).collect();
    let mut e1: Vec<f64> = (0..n).map(|i| u.get(i, alpha)).collect();
    let mut net = FlowNetwork::new(n);
    for (k, &(i, j)) in e.pairs().iter().enumerate() {
        let (xi, xj) = (x[i], x[j]);
        if xi == alpha && xj == alpha {
            continue;
        }
        let mut a = e.phi(k, xi, xj);
        let mut b = e.phi(k, xi, alpha);
        let mut c = e.phi(k, alpha, xj);
        let mut d = e.phi(k, alpha, alpha);
        let excess = a + d - b - c;
        if excess > 0.0 {
            a -= excess / 4.0;
            d -= excess / 4.0;
            b += excess / 4.0;
            c += excess / 4.0;
        }
        // E(bi, bj) = A + (C - A) bi + (D - C) bj + (B + C - A - D)(1 - bi) bj
        e0[i] += a;
        e1[i] += c;
        e1[j] += d - c;
        let w = b + c - a - d;
        if w > 0.0 {
            net.add_edge(i, j, w, 0.0);
        }
    }
    for i in 0..n {
        let m = e0[i].min(e1[i]);
        // Switching is paid when i is cut from the source, keeping when cut from the sink.
        net.add_terminal_weights(i, e1[i] - m, e0[i] - m);
    }
    net.max_flow();
    let y: Vec<usize> = (0..n).map(|i| if net.in_source_set(i) { x[i] } else { alpha }).collect();
    let energy = energy_unchecked(e, &y);
    (y, energy)
}

/// Cycle expansion moves over labels `0..C`, accepting strict decreases of
/// the true energy, until a sweep changes nothing or `max_sweeps` is reached.
/// Without `init` the per-node unary argmin is used.
pub fn alpha_expansion(e: &EnergyModel, init: Option<&[usize]>, max_sweeps: usize) -> Result<ExpansionResult> {
    let mut x = match init {
        Some(x) => {
            check_labeling(e, x)?;
            x.to_vec()
        }
        None => e.unary().argmin(),
    };
    let mut energy = energy_unchecked(e, &x);
    let mut energies = vec![energy];
    let (mut moves, mut sweeps, mut effective) = (0, 0, 0);
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for alpha in 0..e.num_labels() {
            let (y, ey) = move_unchecked(e, &x, alpha);
            if ey < energy {
                x = y;
                energy = ey;
                energies.push(ey);
                moves += 1;
                improved = true;
            }
        }
        if improved {
            effective += 1;
        } else {
            converged = true;
            break;
        }
    }
    Ok(ExpansionResult { labeling: x, energy, moves, sweeps, effective_sweeps: effective, converged, energies })
}

/// True if no single expansion move lowers the energy of `x`.
pub fn is_expansion_optimal(e: &EnergyModel, x: &[usize]) -> Result<bool> {
    let base = energy_of(e, x)?;
    Ok((0..e.num_labels()).all(|alpha| move_unchecked(e, x, alpha).1 >= base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::UnaryTable;

    fn unary_only() -> EnergyModel {
        let u = UnaryTable::new(4, 3, vec![
            1.0, 0.5, 2.0, //
            0.0, 3.0, 1.0, //
            2.0, 2.0, 0.25, //
            0.75, 1.0, 1.5,
        ])
        .unwrap();
        EnergyModel::new(u, vec![], vec![], 1.0).unwrap()
    }

    #[test]
    fn no_op_move() {
        let e = unary_only();
        let (y, ey) = expansion_move(&e, &[2, 2, 2, 2], 2).unwrap();
        assert_eq!(y, vec![2, 2, 2, 2]);
        assert_eq!(ey, energy_of(&e, &[2, 2, 2, 2]).unwrap());
    }

    #[test]
    fn unary_only_move_switches_where_cheaper() {
        let e = unary_only();
        let x = [0, 1, 0, 1];
        let (y, _) = expansion_move(&e, &x, 2).unwrap();
        for i in 0..4 {
            let switch = e.unary().get(i, 2) < e.unary().get(i, x[i]);
            assert_eq!(y[i] == 2, switch || x[i] == 2, "node {i}");
        }
    }

    #[test]
    fn unary_only_expansion_is_argmin() {
        let e = unary_only();
        let r = alpha_expansion(&e, Some(&[2, 0, 1, 2]), DEFAULT_MAX_SWEEPS).unwrap();
        assert_eq!(r.labeling, e.unary().argmin());
        assert_eq!(r.effective_sweeps, 1);
        assert!(r.converged);
    }

    #[test]
    fn rejects_bad_labels() {
        let e = unary_only();
        assert!(expansion_move(&e, &[0, 0, 0], 1).is_err());
        assert!(expansion_move(&e, &[0, 0, 0, 0], 3).is_err());
        assert!(alpha_expansion(&e, Some(&[0, 0, 0, 5]), 1).is_err());
    }
}
