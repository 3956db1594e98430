mod common;

use common::*;
use hk_lab::generators::{line_config, random_config, random_grid_config};
use hk_lab::spectral::{certify_rational_lambda, spectrum};
use hk_lab::{
    diameter, energy, hk_step, lambda_t, rational_replay, simulate, CommGraph, FreezingTime,
    OpinionState, SimulateOptions,
};
use num_traits::Zero;

fn state(points: &[Vec<f64>]) -> OpinionState {
    OpinionState::from_rows(points.to_vec()).unwrap()
}

fn rows(x: &OpinionState) -> Vec<Vec<f64>> {
    x.rows().map(<[f64]>::to_vec).collect()
}

#[test]
fn jacobi_reproduces_hand_spectra() {
    // P of the 3-path: trace 4/3, det -1/12, so the non-unit pair is 1/2 and -1/6
    let path = vec![
        vec![true, true, false],
        vec![true, true, true],
        vec![false, true, true],
    ];
    let eig = jacobi_eigenvalues(&symmetrized(&path));
    for (got, want) in eig.iter().zip([-1.0 / 6.0, 0.5, 1.0]) {
        assert!((got - want).abs() < 1e-14, "{eig:?}");
    }
    let k4 = vec![vec![true; 4]; 4];
    let eig = jacobi_eigenvalues(&symmetrized(&k4));
    assert!(eig[..3].iter().all(|v| v.abs() < 1e-14) && (eig[3] - 1.0).abs() < 1e-14);
}

#[test]
fn lambda_matches_jacobi_on_random_graphs() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 30);
        let d = 1 + (seed as usize % 3);
        let x = random_config(n, d, 0.6 * n as f64 / d as f64, seed).unwrap();
        let adj = adjacency(&rows(&x));
        let g = CommGraph::build(&x);
        let got = lambda_t(&g).unwrap();
        let want = lambda_oracle(&adj);
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
        assert_eq!(diameter(&g), diameter_oracle(&adj), "seed {seed}");
        assert_eq!(g.component_count(), component_count(&adj), "seed {seed}");
        let full = spectrum(&g);
        let oracle = jacobi_eigenvalues(&symmetrized(&adj));
        for (a, b) in full.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "seed {seed}");
        }
    }
}

#[test]
fn step_and_energy_match_exact_transcription() {
    for seed in 0..100 {
        let n = 1 + (seed as usize % 15);
        let d = 1 + (seed as usize % 3);
        let pts = grid_points(n, d, 4, 8, seed);
        let exact = state(&pts).to_exact();
        let next = hk_step(&exact);
        let want = hk_step_q(&to_q(&pts));
        for (i, row) in want.iter().enumerate() {
            assert_eq!(next.row(i), row.as_slice(), "seed {seed}");
        }
        let e = energy(&exact);
        let (total, active) = energy_q(&to_q(&pts));
        assert_eq!((e.total, e.active), (total, active), "seed {seed}");
    }
}

#[test]
fn float_step_tracks_exact_step() {
    for seed in 0..100 {
        let pts = grid_points(12, 2, 3, 16, seed);
        let next = hk_step(&state(&pts));
        let want = hk_step_q(&to_q(&pts));
        for (i, row) in want.iter().enumerate() {
            for (a, b) in next.row(i).iter().zip(row) {
                assert!((a - num_traits::ToPrimitive::to_f64(b).unwrap()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn hand_replay_of_three_points() {
    let tr = rational_replay(&line_config(3, 1.0).unwrap(), 5, None).unwrap();
    let states = tr.states.as_ref().unwrap();
    let want = [
        [q(0, 1), q(1, 1), q(2, 1)],
        [q(1, 2), q(1, 1), q(3, 2)],
        [q(1, 1), q(1, 1), q(1, 1)],
    ];
    assert_eq!(states.len(), 3);
    for (s, w) in states.iter().zip(&want) {
        assert_eq!(s.coords(), w.as_slice());
    }
    assert_eq!(tr.freezing_time, FreezingTime::Frozen(2));
    assert_eq!(tr.energy_trace, vec![q(6, 1), q(3, 1), q(0, 1)]);
    assert_eq!(tr.merge_times, vec![1]);
}

#[test]
fn two_points_merge_at_midpoint() {
    let tr = simulate(&line_config(2, 1.0).unwrap(), &SimulateOptions::default()).unwrap();
    assert_eq!(tr.freezing_time, FreezingTime::Frozen(1));
    assert_eq!(tr.states.as_ref().unwrap()[1].coords(), &[0.5, 0.5]);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn certified_lambda_is_a_root_of_the_characteristic_polynomial() {
    // for each exact rational state, a certified lambda must make det(P - mu I)
    // vanish for mu = lambda or -lambda, evaluated here by exact elimination
    let mut certified = 0;
    for seed in 0..60 {
        let x = random_grid_config(1 + seed as usize % 10, 1, 4.0, 4, seed).unwrap();
        let xf = x.to_f64();
        let adj = adjacency(&rows(&xf));
        let g = CommGraph::build(&xf);
        let Some(l) = certify_rational_lambda(&g, lambda_t(&g).unwrap()) else {
            continue;
        };
        certified += 1;
        let n = adj.len();
        let deg: Vec<i64> = adj
            .iter()
            .map(|r| r.iter().filter(|&&e| e).count() as i64)
            .collect();
        let det_at = |mu: &Q| {
            let mut m: Vec<Vec<Q>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let p = if adj[i][j] { q(1, deg[i]) } else { q(0, 1) };
                            if i == j {
                                p - mu
                            } else {
                                p
                            }
                        })
                        .collect()
                })
                .collect();
            let mut det = q(1, 1);
            for k in 0..n {
                let Some(r) = (k..n).find(|&r| !m[r][k].is_zero()) else {
                    return q(0, 1);
                };
                if r != k {
                    m.swap(r, k);
                    det = -det;
                }
                det *= &m[k][k];
                for i in k + 1..n {
                    let f = &m[i][k] / &m[k][k];
                    for j in k..n {
                        let v = &f * &m[k][j];
                        m[i][j] -= v;
                    }
                }
            }
            det
        };
        assert!(
            det_at(&l).is_zero() || det_at(&-l.clone()).is_zero(),
            "seed {seed}"
        );
    }
    assert!(
        certified > 10,
        "only {certified} rational lambdas certified"
    );
}
