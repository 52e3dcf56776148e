//! Seeded generators for states, isometries, POVMs and instruments.
//!
//! All randomness comes from [`SplitMix64`], whose update is
//!
//! ```text
//! state ← state + 0x9E3779B97F4A7C15
//! z ← state
//! z ← (z ⊕ (z >> 30)) · 0xBF58476D1CE4E5B9
//! z ← (z ⊕ (z >> 27)) · 0x94D049BB133111EB
//! output z ⊕ (z >> 31)
//! ```
//!
//! with wrapping arithmetic. Uniforms on `(0, 1]` use the top 53 bits and
//! Gaussians use Box–Muller, so outputs depend only on `(parameters, seed)`.
//! Generators are pure functions; callers running them concurrently should
//! pass distinct seeds.

use crate::error::{Error, Result};
use crate::instrument::{Instrument, State};
use crate::linalg::{c64, zeros, ComplexMatrix, C64};
use crate::povm::{Povm, StochasticMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: Seed) -> Self {
        Self {
            state: seed.0,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; the second variate is cached.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let t = std::f64::consts::TAU * self.uniform();
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    /// Complex Gaussian with unit variance.
    pub fn complex_gaussian(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c64(s * self.gaussian(), s * self.gaussian())
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        let mut m = zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = self.complex_gaussian();
            }
        }
        m
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

fn orthonormalize_columns(g: &mut ComplexMatrix) -> Result<()> {
    for c in 0..g.ncols() {
        // Two passes of modified Gram–Schmidt keep the columns orthogonal to round-off.
        for _ in 0..2 {
            for p in 0..c {
                let q = g.column(p).into_owned();
                let proj = q.dotc(&g.column(c));
                let mut col = g.column_mut(c);
                col -= q * proj;
            }
        }
        let n = g.column(c).norm();
        if n < 1e-10 {
            return Err(Error::InvalidParameters("degenerate Gaussian sample".into()));
        }
        g.column_mut(c).unscale_mut(n);
    }
    Ok(())
}

/// Isometry `V: ℂ^{d_in} → ℂ^{d_out}` from orthonormalized Gaussian columns.
pub fn random_isometry(d_in: usize, d_out: usize, seed: Seed) -> Result<ComplexMatrix> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::InvalidParameters(format!(
            "isometry needs 1 ≤ d_in ≤ d_out, got {d_in} -> {d_out}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut g = rng.gaussian_matrix(d_out, d_in);
    orthonormalize_columns(&mut g)?;
    Ok(g)
}

pub fn random_unitary(d: usize, seed: Seed) -> Result<ComplexMatrix> {
    random_isometry(d, d, seed)
}

/// Normalized Wishart state `GG†/tr(GG†)` with square Gaussian `G`.
pub fn random_state(d: usize, seed: Seed) -> Result<State> {
    if d == 0 {
        return Err(Error::InvalidParameters("state dimension must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let g = rng.gaussian_matrix(d, d);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let m = crate::linalg::hermitian_part(&w.unscale(tr));
    State::new(m, crate::linalg::Tolerance::default())
}

/// `n`-outcome POVM on `ℂ^d`: the rows of a random isometry `ℂ^d → ℂ^{n·d}`
/// are binned `d` at a time into blocks `W_g`, and `A(g) = W_g† W_g`.
pub fn random_povm(n: usize, d: usize, seed: Seed) -> Result<Povm> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameters("POVM needs n, d ≥ 1".into()));
    }
    let w = random_isometry(d, n * d, seed)?;
    let effects = (0..n)
        .map(|g| {
            let block = w.rows(g * d, d);
            crate::linalg::hermitian_part(&(block.adjoint() * block))
        })
        .collect();
    Povm::from_effects(effects)
}

/// `n`-outcome instrument from a random isometry `W: ℂ^{d_in} → ℂ^{d_out·m}`,
/// `m = n·max_kraus`. Block `b` (rows `b·d_out ..`) becomes a Kraus operator of
/// outcome `b mod n`.
pub fn random_instrument(n: usize, d_in: usize, d_out: usize, max_kraus: usize, seed: Seed) -> Result<Instrument> {
    if n == 0 || d_in == 0 || d_out == 0 || max_kraus == 0 {
        return Err(Error::InvalidParameters(
            "instrument needs n, d_in, d_out, max_kraus ≥ 1".into(),
        ));
    }
    let m = n * max_kraus;
    if d_out * m < d_in {
        return Err(Error::InvalidParameters(format!(
            "d_out·n·max_kraus = {} is below d_in = {d_in}",
            d_out * m
        )));
    }
    let w = random_isometry(d_in, d_out * m, seed)?;
    let mut kraus: Vec<Vec<ComplexMatrix>> = vec![Vec::new(); n];
    for b in 0..m {
        kraus[b % n].push(w.rows(b * d_out, d_out).into_owned());
    }
    Instrument::from_kraus(
        d_in,
        d_out,
        kraus.into_iter().enumerate().map(|(x, k)| (x.to_string(), k)).collect(),
    )
}

/// `n`-outcome POVM on `ℂ^d` with rank-one effects: row `g` of a random
/// isometry `ℂ^d → ℂ^n` gives `A(g) = w_g† w_g`. Needs `n ≥ d`.
pub fn random_rank_one_povm(n: usize, d: usize, seed: Seed) -> Result<Povm> {
    if d == 0 || n < d {
        return Err(Error::InvalidParameters(format!(
            "rank-one POVM needs n ≥ d ≥ 1, got n = {n}, d = {d}"
        )));
    }
    let w = random_isometry(d, n, seed)?;
    let effects = (0..n)
        .map(|g| {
            let row = w.rows(g, 1);
            crate::linalg::hermitian_part(&(row.adjoint() * row))
        })
        .collect();
    Povm::from_effects(effects)
}

/// Instrument `I_x(ϱ) = Σ_i p_xi V_xi ϱ V_xi†` with `k` isometries per
/// outcome whose ranges are mutually orthogonal. Needs `d_out ≥ k·d_in`.
pub fn random_identity_class(n: usize, d_in: usize, d_out: usize, k: usize, seed: Seed) -> Result<Instrument> {
    if n == 0 || k == 0 || d_in == 0 || d_out < k * d_in {
        return Err(Error::InvalidParameters(format!(
            "identity-class instrument needs d_out ≥ k·d_in, got {d_out} < {k}·{d_in}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let p = random_distribution(n * k, Seed(rng.next_u64()))?;
    let outcomes = (0..n)
        .map(|x| {
            let w = random_isometry(k * d_in, d_out, Seed(rng.next_u64()))?;
            let kraus = (0..k)
                .map(|i| w.columns(i * d_in, d_in).scale(p[x * k + i].sqrt()))
                .collect();
            Ok((x.to_string(), kraus))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_kraus(d_in, d_out, outcomes)
}

/// Measure-and-prepare instrument from [`random_povm`] and [`random_state`]s.
pub fn random_measure_and_prepare(n: usize, d_in: usize, d_out: usize, seed: Seed) -> Result<Instrument> {
    let mut rng = SplitMix64::new(seed);
    let a = random_povm(n, d_in, Seed(rng.next_u64()))?;
    let states = (0..n)
        .map(|_| random_state(d_out, Seed(rng.next_u64())))
        .collect::<Result<Vec<_>>>()?;
    crate::instrument::measure_and_prepare(&a, &states)
}

/// Probability vector from normalized exponential variates.
pub fn random_distribution(n: usize, seed: Seed) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameters("distribution needs n ≥ 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let raw: Vec<f64> = (0..n).map(|_| -rng.uniform().ln()).collect();
    let s: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / s).collect())
}

/// Row-stochastic matrix whose rows are independent [`random_distribution`]s.
pub fn random_stochastic(rows: Vec<String>, cols: Vec<String>, seed: Seed) -> Result<StochasticMatrix> {
    let mut rng = SplitMix64::new(seed);
    let mut m = nalgebra::DMatrix::zeros(rows.len(), cols.len());
    for r in 0..rows.len() {
        let p = random_distribution(cols.len(), Seed(rng.next_u64()))?;
        for (c, v) in p.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    StochasticMatrix::new(rows, cols, m)
}
