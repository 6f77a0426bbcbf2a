//! Lifted max-min separation problem and its interior-point solver.
//!
//! For real separation vectors `α_p` with weights `γ_p > 0` the solver finds
//!
//! ```text
//!   maximize   E
//!   subject to αₚᵀ W αₚ ≥ E·γₚ   for every p
//!              tr W ≤ 1,  W ⪰ 0
//! ```
//!
//! The problem has few variables (`n(n+1)/2 + 1`) and possibly many linear
//! constraints, so it is solved in the primal with a log-barrier path-following
//! method. Every separation constraint touches at most `(2K)²` entries of `W`,
//! which keeps Hessian assembly sparse.
//!
//! Restricting to real symmetric `W` loses nothing: with real `α` the real part
//! of any Hermitian solution is feasible with the same objective.
//!
//! At each centre point the multipliers `λₚ = 1/(t·sₚ)` give an upper bound
//! `λ_max(Σ λₚ αₚαₚᵀ) / Σ λₚγₚ` on the optimum, which is what the stopping
//! rule and [`SdpSolution::upper_bound`] report.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Newton steps allowed per centring before the barrier parameter is raised.
const CENTERING_STEPS: usize = 1000;

#[derive(Debug, Clone)]
pub struct SdpParams {
    /// Stop once `(upper − lower) ≤ gap_tol · upper`.
    pub gap_tol: f64,
    /// Barrier parameter growth factor per outer iteration.
    pub mu: f64,
    /// Total Newton step budget.
    pub max_newton: usize,
    /// Largest admissible matrix dimension.
    pub max_dim: usize,
}

impl Default for SdpParams {
    fn default() -> Self {
        Self { gap_tol: 1e-6, mu: 16.0, max_newton: 5000, max_dim: 64 }
    }
}

/// A separation constraint `αᵀ W α ≥ E·γ` with `α` stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub alpha: Vec<(usize, f64)>,
    pub gamma: f64,
}

impl Separation {
    pub fn dense(alpha: &[f64], gamma: f64) -> Self {
        let alpha = alpha.iter().copied().enumerate().filter(|&(_, a)| a != 0.0).collect();
        Self { alpha, gamma }
    }

    /// `αᵀ W α`.
    pub fn quad(&self, w: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for &(i, a) in &self.alpha {
            for &(j, b) in &self.alpha {
                acc += a * b * w[(i, j)];
            }
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub w: DMatrix<f64>,
    /// Achieved margin `min_p αₚᵀWαₚ / γₚ` (a certified lower bound on the optimum).
    pub eps: f64,
    /// Dual upper bound on the optimum.
    pub upper_bound: f64,
    pub newton_steps: usize,
}

/// Packed upper-triangular coordinates of a symmetric matrix.
struct Packing {
    n: usize,
    index: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl Packing {
    fn new(n: usize) -> Self {
        let mut index = vec![0; n * n];
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                index[i * n + j] = pairs.len();
                index[j * n + i] = pairs.len();
                pairs.push((i, j));
            }
        }
        Self { n, index, pairs }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        self.index[i * self.n + j]
    }

    fn unpack(&self, z: &[f64]) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (u, &(i, j)) in self.pairs.iter().enumerate() {
            w[(i, j)] = z[u];
            w[(j, i)] = z[u];
        }
        w
    }
}

/// Row of the linear slack `s = aᵀz` for one separation constraint.
fn constraint_row(pack: &Packing, sep: &Separation, e_coord: usize) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = Vec::new();
    for (x, &(i, a)) in sep.alpha.iter().enumerate() {
        for &(j, b) in &sep.alpha[x..] {
            let coef = if i == j { a * b } else { 2.0 * a * b };
            row.push((pack.idx(i, j), coef));
        }
    }
    row.sort_by_key(|&(u, _)| u);
    // merge duplicates (possible if alpha lists an index twice)
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len() + 1);
    for (u, c) in row {
        match merged.last_mut() {
            Some((lu, lc)) if *lu == u => *lc += c,
            _ => merged.push((u, c)),
        }
    }
    merged.push((e_coord, -sep.gamma));
    merged
}

fn dot_sparse(row: &[(usize, f64)], z: &[f64]) -> f64 {
    row.iter().map(|&(u, c)| c * z[u]).sum()
}

struct Barrier<'a> {
    pack: &'a Packing,
    rows: &'a [Vec<(usize, f64)>],
    diag_coords: Vec<usize>,
    e_coord: usize,
}

struct Eval {
    value: f64,
    slacks: Vec<f64>,
    tau: f64,
    w_inv: DMatrix<f64>,
}

impl Barrier<'_> {
    /// Barrier value at `z`, or `None` outside the strict interior.
    fn eval(&self, z: &[f64], t: f64) -> Option<Eval> {
        let mut value = -t * z[self.e_coord];
        let mut slacks = Vec::with_capacity(self.rows.len());
        for row in self.rows {
            let s = dot_sparse(row, z);
            if s <= 0.0 || !s.is_finite() {
                return None;
            }
            value -= s.ln();
            slacks.push(s);
        }
        let tau = 1.0 - self.diag_coords.iter().map(|&u| z[u]).sum::<f64>();
        if tau <= 0.0 {
            return None;
        }
        value -= tau.ln();
        let w = self.pack.unpack(z);
        let chol = w.cholesky()?;
        let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !logdet.is_finite() {
            return None;
        }
        value -= logdet;
        Some(Eval { value, slacks, tau, w_inv: chol.inverse() })
    }

    fn gradient_hessian(&self, ev: &Eval, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.pack.len() + 1;
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        g[self.e_coord] = -t;
        for (row, &s) in self.rows.iter().zip(&ev.slacks) {
            let inv = 1.0 / s;
            let inv2 = inv * inv;
            for &(u, cu) in row {
                g[u] -= cu * inv;
                for &(v, cv) in row {
                    h[(u, v)] += cu * cv * inv2;
                }
            }
        }
        let inv_tau = 1.0 / ev.tau;
        for &u in &self.diag_coords {
            g[u] += inv_tau;
            for &v in &self.diag_coords {
                h[(u, v)] += inv_tau * inv_tau;
            }
        }
        let p = &ev.w_inv;
        let pairs = &self.pack.pairs;
        for (u, &(a, b)) in pairs.iter().enumerate() {
            let cu = if a == b { 0.5 } else { 1.0 };
            g[u] -= 2.0 * cu * p[(a, b)];
            for (v, &(c, dd)) in pairs.iter().enumerate().skip(u) {
                let cv = if c == dd { 0.5 } else { 1.0 };
                let val = 2.0 * cu * cv * (p[(b, c)] * p[(a, dd)] + p[(b, dd)] * p[(a, c)]);
                h[(u, v)] += val;
                if v != u {
                    h[(v, u)] += val;
                }
            }
        }
        (g, h)
    }
}

fn solve_newton(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    // Jacobi scaling keeps the factorization usable when the barrier terms
    // differ by many orders of magnitude.
    let scale: DVector<f64> = h.diagonal().map(|x| if x > 0.0 { 1.0 / x.sqrt() } else { 1.0 });
    let mut hs = h.clone();
    for i in 0..hs.nrows() {
        for j in 0..hs.ncols() {
            hs[(i, j)] *= scale[i] * scale[j];
        }
    }
    let gs = g.component_mul(&scale);
    let mut sol = match hs.clone().cholesky() {
        Some(c) => c.solve(&(-&gs)),
        None => hs.lu().solve(&(-&gs))?,
    };
    sol.component_mul_assign(&scale);
    sol.iter().all(|x| x.is_finite()).then_some(sol)
}

/// Upper bound `λ_max(Σ λₚ αₚαₚᵀ) / Σ λₚγₚ` for nonnegative multipliers.
pub fn dual_bound(n: usize, seps: &[Separation], multipliers: &[f64]) -> f64 {
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut norm = 0.0;
    for (sep, &lam) in seps.iter().zip(multipliers) {
        norm += lam * sep.gamma;
        for &(i, a) in &sep.alpha {
            for &(j, b) in &sep.alpha {
                m[(i, j)] += lam * a * b;
            }
        }
    }
    let top = SymmetricEigen::new(m).eigenvalues.max();
    top / norm
}

/// Achieved margin `min_p αₚᵀWαₚ / γₚ`.
pub fn margin(w: &DMatrix<f64>, seps: &[Separation]) -> f64 {
    seps.iter().map(|s| s.quad(w) / s.gamma).fold(f64::INFINITY, f64::min)
}

/// Solves the lifted separation problem in dimension `n`.
pub fn solve(n: usize, seps: &[Separation], params: &SdpParams) -> Result<SdpSolution> {
    if n == 0 {
        return Err(Error::Argument("matrix dimension must be positive".into()));
    }
    if n > params.max_dim {
        return Err(Error::Argument(format!("matrix dimension {n} exceeds the solver cap {}", params.max_dim)));
    }
    if seps.is_empty() {
        return Err(Error::Argument("no separation constraints".into()));
    }
    for s in seps {
        if !(s.gamma > 0.0) || s.alpha.iter().all(|&(_, a)| a == 0.0) {
            return Err(Error::Argument("constraint with zero alpha or non-positive gamma".into()));
        }
        if s.alpha.iter().any(|&(i, _)| i >= n) {
            return Err(Error::Dimension(format!("alpha index out of range for n = {n}")));
        }
    }

    let pack = Packing::new(n);
    let e_coord = pack.len();
    let rows: Vec<Vec<(usize, f64)>> = seps.iter().map(|s| constraint_row(&pack, s, e_coord)).collect();
    let diag_coords: Vec<usize> = (0..n).map(|i| pack.idx(i, i)).collect();
    let barrier = Barrier { pack: &pack, rows: &rows, diag_coords, e_coord };

    // strictly feasible start: W = I/(2n), E at half the attained margin
    let mut z = vec![0.0; e_coord + 1];
    for i in 0..n {
        z[pack.idx(i, i)] = 0.5 / n as f64;
    }
    let w0 = pack.unpack(&z);
    z[e_coord] = 0.5 * margin(&w0, seps);

    let nu = (seps.len() + 1 + n) as f64;
    let mut t = nu / z[e_coord].max(1e-12);
    let mut steps = 0usize;
    let mut best: Option<(DMatrix<f64>, f64, f64)> = None;

    loop {
        // centring
        let mut ev = barrier.eval(&z, t).expect("iterate stays interior");
        for _ in 0..CENTERING_STEPS {
            if steps >= params.max_newton {
                let (w, lo, _) =
                    best.unwrap_or_else(|| (pack.unpack(&z), margin(&pack.unpack(&z), seps), f64::INFINITY));
                return Err(Error::Convergence { iterations: steps, best_eps: lo, best: Box::new(w) });
            }
            steps += 1;
            let (g, h) = barrier.gradient_hessian(&ev, t);
            let Some(dz) = solve_newton(&h, &g) else { break };
            let decrement = -g.dot(&dz);
            // at large t the barrier value itself carries rounding error of
            // order ε·|value|, below which no step can be verified
            if decrement <= 0.0 || decrement / 2.0 < 1e-10 + 1e-13 * ev.value.abs() {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            while step > 1e-14 {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + step * b).collect();
                if let Some(e2) = barrier.eval(&trial, t) {
                    if e2.value <= ev.value - 0.01 * step * decrement {
                        accepted = Some((trial, e2));
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some((nz, ne)) => {
                    z = nz;
                    ev = ne;
                }
                None => break,
            }
        }

        let w = pack.unpack(&z);
        let lower = margin(&w, seps);
        let mult: Vec<f64> = ev.slacks.iter().map(|s| 1.0 / (t * s)).collect();
        let upper = dual_bound(n, seps, &mult);
        let improved = best.as_ref().is_none_or(|(_, lo, _)| lower > *lo);
        if improved {
            best = Some((w.clone(), lower, upper));
        }
        let (_, blo, _) = best.as_ref().expect("set above");
        if upper - blo <= params.gap_tol * upper.abs() || nu / t <= 1e-14 * upper.abs() {
            let (w, eps, _) = best.expect("set above");
            return Ok(SdpSolution { w, eps, upper_bound: upper, newton_steps: steps });
        }
        t *= params.mu;
    }
}
