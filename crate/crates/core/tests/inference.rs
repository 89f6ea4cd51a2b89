mod common;

use ctxseg::crf::{energy_of, EnergyModel, UnaryTable};
use ctxseg::inference::{alpha_expansion, expansion_move, is_expansion_optimal, FlowNetwork};
use proptest::prelude::*;
use rand::RngExt;

struct Instance {
    n: usize,
    terminals: Vec<(f64, f64)>,
    edges: Vec<(usize, usize, f64, f64)>,
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = common::rng(seed);
    let n = rng.random_range(1..=10);
    let cap = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(0..=6) as f64;
    let terminals = (0..n).map(|_| (cap(&mut rng), cap(&mut rng))).collect();
    let mut edges = Vec::new();
    if n > 1 {
        for _ in 0..rng.random_range(0..3 * n) {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            edges.push((i, j, cap(&mut rng), cap(&mut rng)));
        }
    }
    Instance { n, terminals, edges }
}

fn cut_value(inst: &Instance, source_side: &[bool]) -> f64 {
    let t: f64 = inst
        .terminals
        .iter()
        .zip(source_side)
        .map(|(&(s, k), &src)| if src { k } else { s })
        .sum();
    let e: f64 = inst
        .edges
        .iter()
        .map(|&(i, j, c, r)| match (source_side[i], source_side[j]) {
            (true, false) => c,
            (false, true) => r,
            _ => 0.0,
        })
        .sum();
    t + e
}

fn random_model(seed: u64, c: usize) -> EnergyModel {
    let mut rng = common::rng(seed);
    let n = rng.random_range(1..=8);
    let unary = (0..n * c).map(|_| rng.random_range(0..24) as f64 / 4.0).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let phi = (0..pairs.len() * c * c).map(|_| rng.random_range(0..12) as f64 / 4.0).collect();
    EnergyModel::new(UnaryTable::new(n, c, unary).unwrap(), pairs, phi, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flow_is_conserved_and_equals_the_cut(seed in any::<u64>()) {
        let inst = random_instance(seed);
        let mut net = FlowNetwork::new(inst.n);
        for (i, &(s, t)) in inst.terminals.iter().enumerate() {
            net.add_terminal_weights(i, s, t);
        }
        let arcs: Vec<usize> = inst.edges.iter().map(|&(i, j, c, r)| net.add_edge(i, j, c, r)).collect();
        let flow = net.max_flow();

        for (&a, &(_, _, c, r)) in arcs.iter().zip(&inst.edges) {
            let f = net.edge_flow(a);
            prop_assert!(-r <= f && f <= c, "arc flow {} outside [-{}, {}]", f, r, c);
        }
        for i in 0..inst.n {
            let out: f64 = net.arcs_of(i).iter().map(|&a| net.edge_flow(a)).sum();
            prop_assert_eq!(net.terminal_net_inflow(i), out, "node {}", i);
            let (s, t) = inst.terminals[i];
            let inflow = net.terminal_net_inflow(i);
            prop_assert!(-t <= inflow && inflow <= s);
        }

        let side: Vec<bool> = (0..inst.n).map(|i| net.in_source_set(i)).collect();
        prop_assert_eq!(cut_value(&inst, &side), flow);
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << inst.n {
            let side: Vec<bool> = (0..inst.n).map(|i| mask >> i & 1 == 1).collect();
            best = best.min(cut_value(&inst, &side));
        }
        prop_assert_eq!(flow, best);
        prop_assert_eq!(net.max_flow(), flow);
    }

    #[test]
    fn expansion_descends_to_a_local_optimum(seed in any::<u64>(), c in 2usize..5) {
        let e = random_model(seed, c);
        let mut rng = common::rng(seed ^ 1);
        let init: Vec<usize> = (0..e.num_nodes()).map(|_| rng.random_range(0..c)).collect();
        let r = alpha_expansion(&e, Some(&init), 50).unwrap();
        prop_assert!(r.converged);
        prop_assert_eq!(r.energies[0], energy_of(&e, &init).unwrap());
        prop_assert!(r.energies.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(*r.energies.last().unwrap(), r.energy);
        prop_assert_eq!(energy_of(&e, &r.labeling).unwrap(), r.energy);
        prop_assert_eq!(r.moves, r.energies.len() - 1);
        prop_assert!(is_expansion_optimal(&e, &r.labeling).unwrap());
        for alpha in 0..c {
            let (_, moved) = expansion_move(&e, &r.labeling, alpha).unwrap();
            prop_assert!(moved >= r.energy);
        }
    }

    #[test]
    fn moves_never_raise_the_energy(seed in any::<u64>(), c in 2usize..5) {
        let e = random_model(seed, c);
        let mut rng = common::rng(seed ^ 2);
        let x: Vec<usize> = (0..e.num_nodes()).map(|_| rng.random_range(0..c)).collect();
        let alpha = rng.random_range(0..c);
        let (y, energy) = expansion_move(&e, &x, alpha).unwrap();
        prop_assert_eq!(energy_of(&e, &y).unwrap(), energy);
        prop_assert!(energy <= energy_of(&e, &x).unwrap());
        prop_assert!(x.iter().zip(&y).all(|(&a, &b)| a == b || b == alpha));
    }
}

#[test]
fn all_alpha_move_is_a_no_op() {
    let e = random_model(3, 3);
    let x = vec![1; e.num_nodes()];
    let before = energy_of(&e, &x).unwrap();
    assert_eq!(expansion_move(&e, &x, 1).unwrap(), (x, before));
}

#[test]
fn unary_only_model_reaches_argmin_in_one_sweep() {
    let mut rng = common::rng(4);
    let (n, c) = (20, 4);
    // Distinct values per row rule out ties.
    let mut values = Vec::new();
    for _ in 0..n {
        let mut row: Vec<f64> = (0..c).map(|k| k as f64).collect();
        for k in (1..c).rev() {
            row.swap(k, rng.random_range(0..=k));
        }
        values.extend(row);
    }
    let unary = UnaryTable::new(n, c, values).unwrap();
    let want = unary.argmin();
    let e = EnergyModel::new(unary, vec![], vec![], 1.0).unwrap();
    let r = alpha_expansion(&e, Some(&vec![0; n]), 10).unwrap();
    assert_eq!(r.labeling, want);
    assert_eq!(r.effective_sweeps, 1);
    assert!(r.converged);
}

#[test]
fn two_node_submodular_move_is_exact() {
    let unary = UnaryTable::new(2, 2, vec![1.0, 0.5, 0.25, 1.5]).unwrap();
    let e = EnergyModel::new(unary, vec![(0, 1)], vec![0.0, 2.0, 1.5, 0.0], 1.0).unwrap();
    let mut best = f64::INFINITY;
    for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        best = best.min(energy_of(&e, &x).unwrap());
    }
    let (_, energy) = expansion_move(&e, &[0, 0], 1).unwrap();
    let (_, from_ones) = expansion_move(&e, &[1, 1], 0).unwrap();
    assert_eq!(energy.min(from_ones), best);
    assert_eq!(alpha_expansion(&e, None, 10).unwrap().energy, best);
}
