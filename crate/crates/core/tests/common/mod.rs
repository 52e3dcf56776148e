//! Independent numerical oracles and fixtures for integration tests.
//!
//! The eigensolver is a cyclic Jacobi method on the real symmetric embedding
//! `[[Re H, −Im H], [Im H, Re H]]` of a Hermitian `H`; it shares no code with
//! the library's decompositions.

#![allow(dead_code)]

use qpost_core::linalg::{c64, real_matrix, ComplexMatrix};
use qpost_core::Povm;

/// Eigenvalues and eigenvectors (as columns) of a real symmetric matrix.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn realify(h: &ComplexMatrix) -> Vec<Vec<f64>> {
    let n = h.nrows();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            r[i][j] = z.re;
            r[i + n][j + n] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
        }
    }
    r
}

/// Eigenvalues of a Hermitian matrix in decreasing order.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let (mut vals, _) = jacobi_symmetric(realify(h));
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals.into_iter().step_by(2).collect()
}

/// Projector onto the eigenvectors of Hermitian `h` with eigenvalue above `cut`.
pub fn spectral_projector(h: &ComplexMatrix, cut: f64) -> ComplexMatrix {
    let n = h.nrows();
    let (vals, vecs) = jacobi_symmetric(realify(h));
    let mut p = vec![vec![0.0; 2 * n]; 2 * n];
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda > cut {
            for i in 0..2 * n {
                for j in 0..2 * n {
                    p[i][j] += vecs[i][k] * vecs[j][k];
                }
            }
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| c64(p[i][j], p[i + n][j]))
}

/// Singular values from the eigenvalues of `M†M`.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigenvalues(&(m.adjoint() * m))
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect()
}

/// Rank of a Gram matrix: eigenvalues above `rel × λ_max`.
pub fn gram_rank(items: &[ComplexMatrix], rel: f64) -> usize {
    let n = items.len();
    let g = ComplexMatrix::from_fn(n, n, |a, b| {
        items[a].iter().zip(items[b].iter()).map(|(x, y)| x.conj() * y).sum()
    });
    let vals = hermitian_eigenvalues(&g);
    let top = vals.first().copied().unwrap_or(0.0);
    vals.iter().filter(|&&v| top > 0.0 && v > rel * top).count()
}

/// Effects `w·φ_i` and `w'·ψ_i` on the computational and Hadamard bases.
pub fn two_basis_povm(w_phi: f64, w_psi: f64) -> Povm {
    let s = 0.5f64.sqrt();
    let vecs = [
        real_matrix(2, 1, &[1.0, 0.0]),
        real_matrix(2, 1, &[0.0, 1.0]),
        real_matrix(2, 1, &[s, s]),
        real_matrix(2, 1, &[s, -s]),
    ];
    let w = [w_phi, w_phi, w_psi, w_psi];
    Povm::from_effects(vecs.iter().zip(w).map(|(v, w)| (v * v.adjoint()).scale(w)).collect()).unwrap()
}

/// The proportional-but-inequivalent pair: weights ½,½,½,½ against ⅓,⅓,⅔,⅔.
pub fn weight_mismatch_pair() -> (Povm, Povm) {
    (two_basis_povm(0.5, 0.5), two_basis_povm(1.0 / 3.0, 2.0 / 3.0))
}

/// Independent random processors `R^(x)` with `m` outcomes `y0..` into `ℂ^d2`.
pub fn random_processors(
    source: &qpost_core::Instrument,
    m: usize,
    d2: usize,
    max_kraus: usize,
    seed: u64,
) -> qpost_core::Processors {
    use qpost_core::random::{random_instrument, Seed, SplitMix64};
    let mut rng = SplitMix64::new(Seed(seed));
    source
        .labels()
        .into_iter()
        .map(|x| {
            let r = random_instrument(m, source.dim_out(), d2, max_kraus, Seed(rng.next_u64())).unwrap();
            (x, r.relabeled(|y| format!("y{y}")).unwrap())
        })
        .collect()
}

/// Kraus operator `W √E` with `W†W = I` on the support of `E`, mapping into
/// `ℂ^d_out`. Rank-one effects allow any `d_out ≥ 1`; otherwise `d_out ≥ dim`.
fn realize_effect(e: &ComplexMatrix, d_out: usize, rng: &mut qpost_core::random::SplitMix64) -> ComplexMatrix {
    use qpost_core::linalg::{eigh, psd_sqrt};
    use qpost_core::random::{random_isometry, Seed};
    let d = e.nrows();
    let eig = eigh(e);
    let top = eig.values[0].max(0.0);
    let rank = eig.values.iter().filter(|&&v| v > 1e-12 * top.max(1e-300)).count();
    if rank <= 1 {
        let phi = random_isometry(1, d_out, Seed(rng.next_u64())).unwrap();
        return phi * eig.vector(0).adjoint() * c64(top.sqrt(), 0.0);
    }
    assert!(d_out >= d, "full-rank effect needs d_out ≥ dim");
    random_isometry(d, d_out, Seed(rng.next_u64())).unwrap() * psd_sqrt(e)
}

/// Indecomposable instrument realizing `a` after splitting each effect into
/// `1..=max_split` proportional pieces, shuffling outcome order and
/// optionally appending a zero outcome. Labels are `prefix0, prefix1, ..`.
pub fn split_realization(
    a: &Povm,
    d_out: usize,
    max_split: usize,
    zero_outcome: bool,
    prefix: &str,
    seed: u64,
) -> qpost_core::Instrument {
    use qpost_core::random::{random_distribution, Seed, SplitMix64};
    use qpost_core::QuantumOperation;
    let mut rng = SplitMix64::new(Seed(seed));
    let d = a.dim();
    let mut ops = Vec::new();
    for (_, e) in a.outcomes() {
        let parts = 1 + rng.below(max_split);
        let w = random_distribution(parts, Seed(rng.next_u64())).unwrap();
        for wi in w {
            let k = realize_effect(&e.scale(wi), d_out, &mut rng);
            ops.push(QuantumOperation::new(d, d_out, vec![k]).unwrap());
        }
    }
    for i in (1..ops.len()).rev() {
        let j = rng.below(i + 1);
        ops.swap(i, j);
    }
    if zero_outcome {
        let at = rng.below(ops.len() + 1);
        ops.insert(at, QuantumOperation::zero(d, d_out));
    }
    let outcomes = ops
        .into_iter()
        .enumerate()
        .map(|(i, op)| (format!("{prefix}{i}"), op))
        .collect();
    qpost_core::Instrument::new(d, d_out, outcomes).unwrap()
}

/// Random indecomposable pair with equivalent induced POVMs. Both sides
/// split a common POVM; rank-one bases allow output dimensions below the
/// input dimension.
pub fn equivalent_indecomposable_pair(seed: u64) -> (qpost_core::Instrument, qpost_core::Instrument) {
    use qpost_core::random::{random_povm, random_rank_one_povm, Seed, SplitMix64};
    let mut rng = SplitMix64::new(Seed(seed));
    let d = 1 + rng.below(3);
    let rank_one = rng.below(2) == 0;
    let n = d + rng.below(3);
    let (a, lo) = if rank_one {
        (random_rank_one_povm(n, d, Seed(rng.next_u64())).unwrap(), 1)
    } else {
        (random_povm(n, d, Seed(rng.next_u64())).unwrap(), d)
    };
    let d_i = lo + rng.below(3);
    let d_j = lo + rng.below(3);
    let zero_i = rng.below(4) == 0;
    let zero_j = rng.below(4) == 0;
    let i = split_realization(&a, d_i, 2, zero_i, "x", rng.next_u64());
    let j = split_realization(&a, d_j, 3, zero_j, "y", rng.next_u64());
    (i, j)
}

/// Two-basis POVM on `ℂ^d` with weights `w` and `1 − w` on the bases given
/// by the columns of `u` and `v`.
pub fn weighted_two_basis(u: &ComplexMatrix, v: &ComplexMatrix, w: f64) -> Povm {
    let d = u.nrows();
    let mut effects = Vec::new();
    for (basis, weight) in [(u, w), (v, 1.0 - w)] {
        for k in 0..d {
            let col = basis.columns(k, 1).into_owned();
            effects.push((&col * col.adjoint()).scale(weight));
        }
    }
    Povm::from_effects(effects).unwrap()
}

/// Indecomposable pair whose induced POVMs share their rays but differ in
/// weights, so neither post-processes to the other.
pub fn mismatched_indecomposable_pair(seed: u64) -> (qpost_core::Instrument, qpost_core::Instrument) {
    use qpost_core::random::{random_unitary, Seed, SplitMix64};
    let mut rng = SplitMix64::new(Seed(seed));
    let d = 2 + rng.below(2);
    let u = random_unitary(d, Seed(rng.next_u64())).unwrap();
    let v = random_unitary(d, Seed(rng.next_u64())).unwrap();
    let a = 0.1 + 0.3 * rng.uniform();
    let b = a + 0.1 + 0.4 * rng.uniform();
    let d_i = 1 + rng.below(3);
    let d_j = 1 + rng.below(3);
    let i = split_realization(&weighted_two_basis(&u, &v, a), d_i, 1, false, "x", rng.next_u64());
    let j = split_realization(&weighted_two_basis(&u, &v, b), d_j, 2, false, "y", rng.next_u64());
    (i, j)
}

/// Instrument whose Kraus operators within each outcome have mutually
/// orthogonal ranges: `K_xi = W_xi M_xi` with `W_x` a random isometry split
/// into blocks and `M` a random instrument.
pub fn orthogonal_kraus_instrument(n: usize, d: usize, k: usize, seed: u64) -> qpost_core::Instrument {
    use qpost_core::random::{random_instrument, random_isometry, Seed, SplitMix64};
    let mut rng = SplitMix64::new(Seed(seed));
    let m = random_instrument(n, d, d, k, Seed(rng.next_u64())).unwrap();
    let d_out = k * d;
    let outcomes = m
        .outcomes()
        .iter()
        .map(|(x, op)| {
            let w = random_isometry(k * d, d_out, Seed(rng.next_u64())).unwrap();
            let kraus = op
                .kraus()
                .iter()
                .enumerate()
                .map(|(i, mi)| w.columns(i * d, d) * mi)
                .collect();
            (x.clone(), kraus)
        })
        .collect();
    qpost_core::Instrument::from_kraus(d, d_out, outcomes).unwrap()
}

/// Measure-and-prepare pair `(I, J)` with `A^J = A^I ν` for a random `ν`.
pub fn map_chain_pair(seed: u64) -> (qpost_core::Instrument, qpost_core::Instrument) {
    use qpost_core::random::{random_povm, random_state, random_stochastic, Seed, SplitMix64};
    let mut rng = SplitMix64::new(Seed(seed));
    let d = 1 + rng.below(3);
    let n = 1 + rng.below(4);
    let m = 1 + rng.below(4);
    let a = random_povm(n, d, Seed(rng.next_u64())).unwrap();
    let ys: Vec<String> = (0..m).map(|y| format!("y{y}")).collect();
    let nu = random_stochastic(a.labels(), ys, Seed(rng.next_u64())).unwrap();
    let b = qpost_core::apply_post_processing(&a, &nu).unwrap();
    let d_i = 1 + rng.below(3);
    let d_j = 1 + rng.below(3);
    let si: Vec<_> = (0..n)
        .map(|_| random_state(d_i, Seed(rng.next_u64())).unwrap())
        .collect();
    let sj: Vec<_> = (0..m)
        .map(|_| random_state(d_j, Seed(rng.next_u64())).unwrap())
        .collect();
    let i = qpost_core::measure_and_prepare(&a, &si).unwrap();
    let j = qpost_core::measure_and_prepare(&b, &sj).unwrap();
    (i, j)
}
