//! Shared test oracles, independent of the implementation paths they
//! check: Kronecker-product solves for the Lyapunov and Sylvester
//! equations, transfer-function sampling, and seeded test-system builders.

// Each integration test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use morbench_core::AffineLTISystem;

/// vec(M) in column-major order.
fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvectorize(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            out.view_mut((i * br, j * bc), (br, bc))
                .copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// Solves `A W E^T + E W A^T = -B B^T` through the Kronecker-product
/// linear system `(E (x) A + A (x) E) vec(W) = -vec(B B^T)`.
pub fn lyapunov_oracle(a: &DMatrix<f64>, e: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let lhs = kron(e, a) + kron(a, e);
    let rhs = -vectorize(&(b * b.transpose()));
    let sol = lhs.lu().solve(&rhs).expect("lyapunov oracle solve");
    unvectorize(&sol, n)
}

/// Solves the dual equation `A^T W E + E^T W A = -C^T C`.
pub fn dual_lyapunov_oracle(a: &DMatrix<f64>, e: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let at = a.transpose();
    let et = e.transpose();
    let lhs = kron(&et, &at) + kron(&at, &et);
    let rhs = -vectorize(&(c.transpose() * c));
    let sol = lhs.lu().solve(&rhs).expect("dual lyapunov oracle solve");
    unvectorize(&sol, n)
}

/// Solves the Sylvester equation `A W E + E W A = -B C`.
pub fn sylvester_oracle(
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let et = e.transpose();
    let at = a.transpose();
    let lhs = kron(&et, a) + kron(&at, e);
    let rhs = -vectorize(&(b * c));
    let sol = lhs.lu().solve(&rhs).expect("sylvester oracle solve");
    unvectorize(&sol, n)
}

/// Hankel singular values from algebraic Gramians: the square roots of the
/// eigenvalues of `WC WO`, descending.
pub fn hsv_oracle(wc: &DMatrix<f64>, wo: &DMatrix<f64>) -> Vec<f64> {
    let product = wc * wo;
    let mut sv: Vec<f64> = product
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Transfer function `G(s) = C (s E - A)^-1 B` at one complex frequency.
pub fn transfer_function(
    sys: &AffineLTISystem,
    a: &DMatrix<f64>,
    s: Complex<f64>,
) -> DMatrix<Complex<f64>> {
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let pencil = to_c(sys.mass()) * s - to_c(a);
    let rhs = to_c(sys.input_map());
    let x = pencil.lu().solve(&rhs).expect("transfer function solve");
    to_c(sys.output_map()) * x
}

/// Random orthogonal matrix from a QR factorization of a Gaussian draw.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    let qr = g.qr();
    qr.q()
}

/// Stable test system with a prescribed spectrum: `A = Q^T diag(lambda) Q`,
/// `B = Q^T D`, `C = D Q` for a random orthogonal `Q` and per-channel gains
/// `D`. Its exact Gramians are `Q^T diag(d_k^2 / (-2 lambda_k)) Q`, so the
/// Hankel singular values are `d_k^2 / (-2 lambda_k)`.
pub struct ConjugatedDiagonal {
    pub system: AffineLTISystem,
    pub eigenvalues: Vec<f64>,
    pub gains: Vec<f64>,
}

impl ConjugatedDiagonal {
    pub fn new(n: usize, lambda_min: f64, lambda_max: f64, seed: u64) -> Self {
        assert!(lambda_min < 0.0 && lambda_max < 0.0 && lambda_min <= lambda_max);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let q = random_orthogonal(n, &mut rng);
        let ratio = lambda_min / lambda_max;
        let eigenvalues: Vec<f64> = (0..n)
            .map(|k| lambda_max * ratio.powf(k as f64 / (n - 1) as f64))
            .collect();
        let gains: Vec<f64> = (0..n).map(|_| 0.8 + 0.45 * rng.random::<f64>()).collect();
        let a =
            q.transpose() * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())) * &q;
        let d = DMatrix::from_diagonal(&DVector::from_vec(gains.clone()));
        let b = q.transpose() * &d;
        let c = &d * &q;
        let system =
            AffineLTISystem::new(DMatrix::identity(n, n), vec![a], b, c).expect("test system");
        ConjugatedDiagonal {
            system,
            eigenvalues,
            gains,
        }
    }

    /// Exact Hankel singular values, descending.
    pub fn exact_hsv(&self) -> Vec<f64> {
        let mut hsv: Vec<f64> = self
            .eigenvalues
            .iter()
            .zip(&self.gains)
            .map(|(l, d)| d * d / (-2.0 * l))
            .collect();
        hsv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        hsv
    }
}

/// Dense random matrix with entries in [-0.5, 0.5].
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5)
}

pub fn relative_residual(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    (lhs + rhs).norm() / rhs.norm()
}
