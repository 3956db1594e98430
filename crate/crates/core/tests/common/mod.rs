//! Reference implementations used only by the tests. They share no code with
//! the library: matrices are built from raw coordinates, eigenvalues come from
//! cyclic Jacobi rotations, and the HK step is a direct transcription of the
//! update rule in rationals.

#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sq_q(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| {
        let d = x - y;
        acc + &d * &d
    })
}

/// Adjacency with self-loops, from raw points.
pub fn adjacency(points: &[Vec<f64>]) -> Vec<Vec<bool>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| sq(a, b) <= 1.0).collect())
        .collect()
}

/// `D^{-1/2} A D^{-1/2}` as nested vectors.
pub fn symmetrized(adj: &[Vec<bool>]) -> Vec<Vec<f64>> {
    let deg: Vec<f64> = adj
        .iter()
        .map(|r| r.iter().filter(|&&e| e).count() as f64)
        .collect();
    (0..adj.len())
        .map(|i| {
            (0..adj.len())
                .map(|j| {
                    if adj[i][j] {
                        1.0 / (deg[i] * deg[j]).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi sweeps.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if a[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[k][p], a[k][r]);
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[p][k], a[r][k]);
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Number of connected components, by union-find.
pub fn component_count(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Largest eigenvalue magnitude after dropping one unit eigenvalue per component.
pub fn lambda_oracle(adj: &[Vec<bool>]) -> f64 {
    let c = component_count(adj);
    let eig = jacobi_eigenvalues(&symmetrized(adj));
    let rest = &eig[..eig.len() - c];
    rest.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Diameter (max over components) by Floyd-Warshall.
pub fn diameter_oracle(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                d[i][j] = 0;
            } else if adj[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d.iter()
        .flatten()
        .filter(|&&v| v < inf)
        .copied()
        .max()
        .unwrap_or(0)
}

/// One HK step in exact arithmetic.
pub fn hk_step_q(x: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let one = Q::one();
    x.iter()
        .map(|xi| {
            let nbrs: Vec<&Vec<Q>> = x.iter().filter(|xj| sq_q(xi, xj) <= one).collect();
            let k = Q::from_integer(BigInt::from(nbrs.len()));
            (0..xi.len())
                .map(|c| nbrs.iter().fold(Q::zero(), |acc, v| acc + &v[c]) / &k)
                .collect()
        })
        .collect()
}

/// `(E, E_active)` over ordered pairs, exactly.
pub fn energy_q(x: &[Vec<Q>]) -> (Q, Q) {
    let one = Q::one();
    let mut total = Q::zero();
    let mut active = Q::zero();
    for (i, a) in x.iter().enumerate() {
        for (j, b) in x.iter().enumerate() {
            if i == j {
                continue;
            }
            let s = sq_q(a, b);
            if s <= one {
                total += &s;
                active += s;
            } else {
                total += &one;
            }
        }
    }
    (total, active)
}

pub fn to_q(points: &[Vec<f64>]) -> Vec<Vec<Q>> {
    points
        .iter()
        .map(|r| r.iter().map(|&v| Q::from_float(v).unwrap()).collect())
        .collect()
}

/// Deterministic points in `[0, side]^d` on a grid of step `1 / den`.
pub fn grid_points(n: usize, d: usize, side: i64, den: i64, seed: u64) -> Vec<Vec<f64>> {
    let mut s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s
    };
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| (next() % (side * den + 1) as u64) as f64 / den as f64)
                .collect()
        })
        .collect()
}
