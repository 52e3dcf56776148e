//! Seeded inputs for the kernel benchmarks.

use qpost_core::linalg::{c64, ComplexMatrix};
use qpost_core::random::random_stochastic;
use qpost_core::{
    apply_post_processing, random_instrument, random_isometry, random_povm, Instrument, Povm, Processors, Seed,
};

/// Random instrument with `n` outcomes on `ℂ^d` and `k` Kraus operators each.
pub fn instrument(n: usize, d: usize, k: usize) -> Instrument {
    random_instrument(n, d, d, k, Seed(1)).expect("valid parameters")
}

/// `(A, B)` with `B` a random post-processing of `A` onto `m` outcomes.
pub fn povm_pair(n: usize, m: usize, d: usize) -> (Povm, Povm) {
    let a = random_povm(n, d, Seed(2)).expect("valid parameters");
    let ys = (0..m).map(|y| format!("y{y}")).collect();
    let nu = random_stochastic(a.labels(), ys, Seed(3)).expect("valid parameters");
    let b = apply_post_processing(&a, &nu).expect("labels agree");
    (a, b)
}

/// `(K, L, c)` with `K†K = c L†L`, as taken by `partial_isometry_factor`.
/// `L` maps `ℂ^d` into `ℂ^(d+1)`, `K` into `ℂ^d`.
pub fn proportional_pair(d: usize) -> (ComplexMatrix, ComplexMatrix, f64) {
    let m = instrument(1, d, 1).outcomes()[0].1.kraus()[0].clone();
    let c = 0.7_f64;
    let k = random_isometry(d, d, Seed(5)).expect("valid parameters") * &m * c64(c.sqrt(), 0.0);
    let l = random_isometry(d, d + 1, Seed(6)).expect("valid parameters") * &m;
    (k, l, c)
}

/// Instrument with `n` outcomes and random processors with `m` outcomes.
pub fn composition(n: usize, m: usize, d: usize) -> (Instrument, Processors) {
    let i = instrument(n, d, 2);
    let processors = i
        .labels()
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            (
                x,
                random_instrument(m, d, d, 2, Seed(10 + k as u64)).expect("valid parameters"),
            )
        })
        .collect();
    (i, processors)
}
