//! Linear solvers for the assembled systems.
//!
//! Small systems are factorized densely. Larger ones run Krylov iterations
//! with a diagonal or block-diagonal preconditioner (conjugate gradients when symmetric, BiCGStab
//! otherwise); if the iteration stalls, an envelope LU on a reverse
//! Cuthill–McKee ordering takes over.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Cholesky, Lu, Mat};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    DenseCholesky,
    DenseLu,
    Cg,
    BiCgStab,
    EnvelopeLu,
    Trivial,
}

impl SolveMethod {
    pub fn is_direct(self) -> bool {
        matches!(
            self,
            SolveMethod::DenseCholesky | SolveMethod::DenseLu | SolveMethod::EnvelopeLu
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: SolveMethod,
    pub wall_time_s: f64,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}: {} iterations, relative residual {:.3e}, {:.3}s",
            self.method, self.iterations, self.relative_residual, self.wall_time_s
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Dense below the threshold, Krylov above it with a sparse direct
    /// fallback.
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tolerance: f64,
    /// `None` selects `max(1000, 4 n)`, or `max(2000, n / 4)` under
    /// [`Strategy::Auto`] where a direct fallback follows.
    pub max_iterations: Option<usize>,
    pub dense_threshold: usize,
    pub strategy: Strategy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: None,
            dense_threshold: 3000,
            strategy: Strategy::Auto,
        }
    }
}

/// Solves `A x = b` with relative residual `‖Ax − b‖ / ‖b‖ ≤ tolerance`.
/// Direct factorizations are accepted up to `DIRECT_SLACK · tolerance`,
/// since their attainable residual scales with the condition number.
pub fn solve<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    symmetric: bool,
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolveReport)> {
    solve_blocked(a, b, symmetric, opts, &[])
}

/// As [`solve`], with the Krylov methods preconditioned by the inverses of
/// the diagonal blocks `blocks` (disjoint index ranges); unknowns outside
/// every block keep diagonal scaling.
pub fn solve_blocked<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    symmetric: bool,
    opts: &SolverOptions,
    blocks: &[Range<usize>],
) -> Result<(Vec<T>, SolveReport)> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "solver tolerance must be positive".into(),
        ));
    }
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "system shape {}x{} with rhs {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let start = Instant::now();
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok((
            vec![T::zero(); n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                method: SolveMethod::Trivial,
                wall_time_s: 0.0,
            },
        ));
    }
    let finish =
        |x: Vec<T>, iterations: usize, method: SolveMethod| -> Result<(Vec<T>, SolveReport)> {
            let r = residual_norm(a, &x, b) / bnorm;
            let report = SolveReport {
                iterations,
                relative_residual: r.to_f64_lossy(),
                method,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            if report.relative_residual <= opts.tolerance
                || (method.is_direct() && report.relative_residual <= opts.tolerance * DIRECT_SLACK)
            {
                Ok((x, report))
            } else {
                Err(Error::SolverFailure {
                    message: "residual above tolerance".into(),
                    report,
                })
            }
        };
    let direct_dense = match opts.strategy {
        Strategy::Direct => n < opts.dense_threshold,
        Strategy::Auto => n < opts.dense_threshold,
        Strategy::Iterative => false,
    };
    if direct_dense {
        let dense = a.to_dense();
        if symmetric {
            if let Some(ch) = Cholesky::new(&dense) {
                return finish(ch.solve(b), 0, SolveMethod::DenseCholesky);
            }
        }
        return match Lu::new(&dense) {
            Some(lu) => finish(lu.solve(b), 0, SolveMethod::DenseLu),
            None => Err(Error::SolverFailure {
                message: "matrix is numerically singular".into(),
                report: SolveReport {
                    iterations: 0,
                    relative_residual: 1.0,
                    method: SolveMethod::DenseLu,
                    wall_time_s: start.elapsed().as_secs_f64(),
                },
            }),
        };
    }
    if opts.strategy == Strategy::Direct {
        let x = envelope_solve(a, b)?;
        return finish(x, 0, SolveMethod::EnvelopeLu);
    }
    // in Auto mode a stalled iteration is cut short, the direct fallback is cheaper
    let max_it = opts.max_iterations.unwrap_or(match opts.strategy {
        Strategy::Auto => (n / 4).max(2000),
        _ => (4 * n).max(1000),
    });
    let tol = T::lit(opts.tolerance);
    let prec = Preconditioner::new(a, blocks);
    let outcome = if symmetric {
        pcg(a, b, &prec, tol, max_it)
    } else {
        bicgstab(a, b, &prec, tol, max_it)
    };
    let method = if symmetric {
        SolveMethod::Cg
    } else {
        SolveMethod::BiCgStab
    };
    match outcome {
        Ok((x, it)) => finish(x, it, method),
        Err((_, it)) if opts.strategy == Strategy::Auto => {
            log_fallback(method, it);
            let x = envelope_solve(a, b)?;
            finish(x, it, SolveMethod::EnvelopeLu)
        }
        Err((x, it)) => Err(Error::SolverFailure {
            message: if it < max_it {
                "Krylov breakdown"
            } else {
                "iteration limit reached"
            }
            .into(),
            report: SolveReport {
                iterations: it,
                relative_residual: (residual_norm(a, &x, b) / bnorm).to_f64_lossy(),
                method,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
        }),
    }
}

/// `Ok` on convergence; `Err` carries the last iterate on breakdown or
/// when the iteration budget runs out.
type KrylovOutcome<T> = std::result::Result<(Vec<T>, usize), (Vec<T>, usize)>;

fn log_fallback(method: SolveMethod, iterations: usize) {
    if std::env::var_os("BIHARM_VERBOSE").is_some() {
        eprintln!("{method:?} stalled after {iterations} iterations; switching to envelope LU");
    }
}

fn residual_norm<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> T {
    let ax = a.mul_vec(x);
    let r: Vec<T> = ax.iter().zip(b).map(|(&u, &v)| v - u).collect();
    norm2(&r)
}

/// Block-diagonal preconditioner: dense inverses of the given diagonal
/// blocks, diagonal scaling elsewhere.
struct Preconditioner<T> {
    dinv: Vec<T>,
    blocks: Vec<(Range<usize>, Mat<T>)>,
}

impl<T: Real> Preconditioner<T> {
    fn new(a: &CsrMatrix<T>, ranges: &[Range<usize>]) -> Self {
        let dinv = a
            .diagonal()
            .into_iter()
            .map(|d| {
                if d.abs() > T::zero() {
                    T::one() / d.abs()
                } else {
                    T::one()
                }
            })
            .collect();
        let blocks = ranges
            .par_iter()
            .filter(|r| r.len() > 1)
            .filter_map(|r| {
                let m = r.len();
                let mut blk = Mat::zeros(m, m);
                for (bi, i) in r.clone().enumerate() {
                    let (cols, vals) = a.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        if r.contains(&j) {
                            blk[(bi, j - r.start)] = v;
                        }
                    }
                }
                Lu::new(&blk).map(|lu| (r.clone(), lu.solve_mat(&Mat::identity(m))))
            })
            .collect();
        Self { dinv, blocks }
    }

    fn apply(&self, r: &[T], z: &mut [T]) {
        for i in 0..r.len() {
            z[i] = r[i] * self.dinv[i];
        }
        for (range, inv) in &self.blocks {
            let y = inv.mul_vec(&r[range.clone()]);
            z[range.clone()].copy_from_slice(&y);
        }
    }
}

/// Jacobi-preconditioned conjugate gradients. `Err` carries the iteration
/// count on failure.
fn pcg<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    prec: &Preconditioner<T>,
    tol: T,
    max_it: usize,
) -> KrylovOutcome<T> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut restarts = 0;
    for it in 1..=max_it {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err((x, it));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm * T::lit(0.5) {
            // confirm with the true residual; on a gap restart from it
            let true_r = true_residual(a, &x, b);
            if norm2(&true_r) <= tol * bnorm {
                return Ok((x, it));
            }
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err((x, it));
            }
            r = true_r;
            prec.apply(&r, &mut z);
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        prec.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err((x, max_it))
}

/// Right-preconditioned BiCGStab.
fn bicgstab<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    prec: &Preconditioner<T>,
    tol: T,
    max_it: usize,
) -> KrylovOutcome<T> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut restarts = 0;
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let tiny = T::min_positive_value().sqrt();
    for it in 1..=max_it {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < tiny * bnorm * bnorm * T::epsilon() {
            return Err((x, it));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        prec.apply(&p, &mut y);
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == T::zero() {
            return Err((x, it));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= tol * bnorm * T::lit(0.5) {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            if residual_norm(a, &x, b) <= tol * bnorm {
                return Ok((x, it));
            }
            for i in 0..n {
                x[i] -= alpha * y[i];
            }
        }
        prec.apply(&s, &mut z);
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == T::zero() {
            return Err((x, it));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= tol * bnorm * T::lit(0.5) {
            let true_r = true_residual(a, &x, b);
            if norm2(&true_r) <= tol * bnorm {
                return Ok((x, it));
            }
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err((x, it));
            }
            r = true_r;
            r_hat.copy_from_slice(&r);
            (rho, alpha, omega) = (T::one(), T::one(), T::one());
            v.iter_mut()
                .chain(p.iter_mut())
                .for_each(|e| *e = T::zero());
            continue;
        }
        if omega == T::zero() {
            return Err((x, it));
        }
    }
    Err((x, max_it))
}

/// Residual allowance of direct solves relative to the requested tolerance.
pub const DIRECT_SLACK: f64 = 1e3;

/// Restarts from the true residual allowed before a Krylov run gives up.
const MAX_RESTARTS: usize = 3;

fn true_residual<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> Vec<T> {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .map(|(&ax, &bi)| bi - ax)
        .collect()
}

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity graph.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(&adj, seed);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_farthest(adj, root);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        root = far;
    }
    root
}

fn bfs_farthest(adj: &[Vec<usize>], root: usize) -> (usize, usize) {
    let mut level = std::collections::HashMap::new();
    level.insert(root, 0usize);
    let mut queue = VecDeque::from([root]);
    let mut best = (root, 0usize, adj[root].len());
    while let Some(u) = queue.pop_front() {
        let l = level[&u];
        if l > best.1 || (l == best.1 && adj[u].len() < best.2) {
            best = (u, l, adj[u].len());
        }
        for &w in &adj[u] {
            if !level.contains_key(&w) {
                level.insert(w, l + 1);
                queue.push_back(w);
            }
        }
    }
    (best.0, best.1)
}

/// Unpivoted LU in envelope (skyline) storage after RCM reordering. Requires
/// nonzero pivots, which holds for matrices whose symmetric part is
/// positive definite.
pub fn envelope_solve<T: Real>(a: &CsrMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let lu = EnvelopeLu::new(a)?;
    let mut x = lu.solve(b);
    // two steps of iterative refinement recover accuracy lost to conditioning
    for _ in 0..2 {
        let r: Vec<T> = a
            .mul_vec(&x)
            .iter()
            .zip(b)
            .map(|(&ax, &bi)| bi - ax)
            .collect();
        for (xi, d) in x.iter_mut().zip(lu.solve(&r)) {
            *xi += d;
        }
    }
    Ok(x)
}

struct EnvelopeLu<T> {
    perm: Vec<usize>,
    first: Vec<usize>,
    lower: Vec<Vec<T>>,
    upper: Vec<Vec<T>>,
    diag: Vec<T>,
}

impl<T: Real> EnvelopeLu<T> {
    fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // first[i]: smallest column (row) index in the symmetrized envelope of row i
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        // lower[i][k - first[i]] = L_ik (k < i); upper[j][k - first[j]] = U_kj (k < j)
        let mut lower: Vec<Vec<T>> = (0..n).map(|i| vec![T::zero(); i - first[i]]).collect();
        let mut upper: Vec<Vec<T>> = (0..n).map(|j| vec![T::zero(); j - first[j]]).collect();
        let mut diag = vec![T::zero(); n];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                match j.cmp(&i) {
                    std::cmp::Ordering::Less => lower[i][j - first[i]] = v,
                    std::cmp::Ordering::Greater => upper[j][i - first[j]] = v,
                    std::cmp::Ordering::Equal => diag[i] = v,
                }
            }
        }
        let scale = a.max_abs();
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let s = fi.max(fj);
                let (l_i, u_i) = (&lower[i], &upper[i]);
                let acc_l: T = dot(&l_i[s - fi..j - fi], &upper[j][s - fj..j - fj]);
                let acc_u: T = dot(&lower[j][s - fj..j - fj], &u_i[s - fi..j - fi]);
                let lij = (lower[i][j - fi] - acc_l) / diag[j];
                lower[i][j - fi] = lij;
                upper[i][j - fi] -= acc_u;
            }
            let d = diag[i] - dot(&lower[i], &upper[i]);
            if !(d.abs() > scale * T::epsilon()) {
                return Err(Error::SolverFailure {
                    message: format!("zero pivot at row {i} in envelope LU"),
                    report: SolveReport {
                        iterations: 0,
                        relative_residual: 1.0,
                        method: SolveMethod::EnvelopeLu,
                        wall_time_s: 0.0,
                    },
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            perm,
            first,
            lower,
            upper,
            diag,
        })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let Self {
            perm,
            first,
            lower,
            upper,
            diag,
        } = self;
        let n = perm.len();
        let mut y: Vec<T> = perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = first[i];
            let s = dot(&lower[i], &y[fi..i]);
            y[i] -= s;
        }
        for j in (0..n).rev() {
            y[j] /= diag[j];
            let yj = y[j];
            let fj = first[j];
            for (k, &u) in upper[j].iter().enumerate() {
                y[fj + k] -= u * yj;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = b.tr_matmul(&b);
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        a
    }

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut b = crate::sparse::TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0 + shift);
            if i > 0 {
                b.push(i, i - 1, -1.0 - 0.3 * shift);
            }
            if i + 1 < n {
                b.push(i, i + 1, -1.0 + 0.3 * shift);
            }
        }
        b.build()
    }

    #[test]
    fn identity_returns_rhs() {
        let a = CsrMatrix::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let (x, rep) = solve(&a, &b, true, &SolverOptions::default()).unwrap();
        assert_eq!(x, b);
        assert!(rep.relative_residual <= 1e-10);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_1d(10, 0.0);
        let (x, rep) = solve(&a, &[0.0; 10], true, &SolverOptions::default()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(rep.method, SolveMethod::Trivial);
    }

    #[test]
    fn random_spd_matches_dense_oracle() {
        let a = random_spd(50, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = Lu::new(&a).unwrap().solve(&b);
        let csr = CsrMatrix::from_dense(&a);
        for strategy in [Strategy::Auto, Strategy::Iterative, Strategy::Direct] {
            let opts = SolverOptions {
                strategy,
                ..Default::default()
            };
            let (x, _) = solve(&csr, &b, true, &opts).unwrap();
            let err: f64 = x
                .iter()
                .zip(&oracle)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-8 * norm2(&oracle), "{strategy:?}: {err}");
        }
        let x = envelope_solve(&csr, &b).unwrap();
        let err: f64 = x
            .iter()
            .zip(&oracle)
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8 * norm2(&oracle));
    }

    #[test]
    fn nonsymmetric_iterative_and_envelope() {
        let a = laplacian_1d(400, 1.0);
        let b: Vec<f64> = (0..400).map(|i| (i as f64 * 0.1).sin()).collect();
        let opts = SolverOptions {
            strategy: Strategy::Iterative,
            ..Default::default()
        };
        let (x, rep) = solve(&a, &b, false, &opts).unwrap();
        assert_eq!(rep.method, SolveMethod::BiCgStab);
        let y = envelope_solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(30, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let a = CsrMatrix::<f64>::identity(2);
        let opts = SolverOptions {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            solve(&a, &[1.0, 1.0], true, &opts),
            Err(Error::InvalidParameter(_))
        ));
    }

    /// Block-tridiagonal matrix with strongly coupled 3x3 diagonal blocks.
    fn coupled_blocks(nb: usize) -> (CsrMatrix<f64>, Vec<Range<usize>>) {
        let n = 3 * nb;
        let mut b = crate::sparse::TripletBuilder::new(n, n);
        for k in 0..nb {
            for i in 0..3 {
                for j in 0..3 {
                    let v = if i == j { 4.0 } else { 1.9 };
                    b.push(3 * k + i, 3 * k + j, v);
                }
            }
            if k + 1 < nb {
                for i in 0..3 {
                    b.push(3 * k + i, 3 * (k + 1) + i, -0.5);
                    b.push(3 * (k + 1) + i, 3 * k + i, -0.5);
                }
            }
        }
        (b.build(), (0..nb).map(|k| 3 * k..3 * k + 3).collect())
    }

    #[test]
    fn block_preconditioner_agrees_and_saves_iterations() {
        let (a, blocks) = coupled_blocks(400);
        let b: Vec<f64> = (0..a.nrows())
            .map(|i| ((i * 7 % 11) as f64) - 5.0)
            .collect();
        let opts = SolverOptions {
            strategy: Strategy::Iterative,
            ..Default::default()
        };
        let (x_diag, r_diag) = solve(&a, &b, true, &opts).unwrap();
        let (x_blk, r_blk) = solve_blocked(&a, &b, true, &opts, &blocks).unwrap();
        assert!(r_blk.iterations < r_diag.iterations, "{r_blk} vs {r_diag}");
        let (x_ns, _) = solve_blocked(&a, &b, false, &opts, &blocks).unwrap();
        let scale = norm2(&x_diag);
        for (x, tol) in [(&x_blk, 1e-8), (&x_ns, 1e-8)] {
            let d: Vec<f64> = x.iter().zip(&x_diag).map(|(u, v)| u - v).collect();
            assert!(norm2(&d) <= tol * scale);
        }
    }

    #[test]
    fn iteration_limit_reports_last_residual() {
        let a = laplacian_1d(2000, 0.0);
        let b = vec![1.0; 2000];
        let opts = SolverOptions {
            strategy: Strategy::Iterative,
            max_iterations: Some(5),
            ..Default::default()
        };
        match solve(&a, &b, true, &opts) {
            Err(Error::SolverFailure { report, .. }) => {
                assert_eq!(report.iterations, 5);
                assert_eq!(report.method, SolveMethod::Cg);
                assert!(
                    report.relative_residual.is_finite() && report.relative_residual > 1e-10,
                    "{report}"
                );
            }
            other => panic!("{other:?}"),
        }
        let auto = SolverOptions {
            strategy: Strategy::Auto,
            dense_threshold: 0,
            ..opts
        };
        let (_, rep) = solve(&a, &b, true, &auto).unwrap();
        assert_eq!(rep.method, SolveMethod::EnvelopeLu);
        assert!(rep.relative_residual <= 1e-10);
    }

    #[test]
    fn stalled_krylov_stops_early_and_falls_back() {
        // 1D bilaplacian stencil: the attainable CG residual sits above 1e-10
        let n = 200;
        let mut bld = crate::sparse::TripletBuilder::new(n, n);
        for i in 0..n {
            for (d, v) in [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
                let j = i as i64 + d;
                if (0..n as i64).contains(&j) {
                    bld.push(i, j as usize, v);
                }
            }
        }
        let a = bld.build();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64 * 3.0).sin()).collect();
        let budget = 100_000;
        let opts = SolverOptions {
            strategy: Strategy::Iterative,
            max_iterations: Some(budget),
            ..Default::default()
        };
        match solve(&a, &b, true, &opts) {
            Err(Error::SolverFailure { report, .. }) => assert!(report.iterations < budget / 10),
            other => panic!("{other:?}"),
        }
        let auto = SolverOptions {
            strategy: Strategy::Auto,
            dense_threshold: 0,
            ..opts
        };
        let (x, rep) = solve(&a, &b, true, &auto).unwrap();
        assert_eq!(rep.method, SolveMethod::EnvelopeLu);
        let res = residual_norm(&a, &x, &b) / norm2(&b);
        assert!((res - rep.relative_residual).abs() <= 1e-3 * res);
        assert!(res <= DIRECT_SLACK * 1e-10, "{rep}");
    }
}
