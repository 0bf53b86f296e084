//! Small dense complex-matrix linear algebra: Hermitian eigendecomposition,
//! unitary matrix exponentials, and time-ordered propagators.
//!
//! Everything here works on dimensions 2..=8 and trades generality for
//! exactness: exponentials are built from the spectral decomposition of the
//! (Hermitian) generator, so the result is unitary up to rounding by
//! construction.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Smallest supported matrix dimension.
pub const MIN_DIM: usize = 2;
/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;

const MAX_JACOBI_SWEEPS: usize = 64;

/// Dense row-major complex matrix of dimension 2..=8.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting unsupported
    /// dimensions and non-finite values.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::DimensionMismatch {
                expected: MIN_DIM,
                got: dim,
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        for (idx, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: idx / dim,
                    col: idx % dim,
                });
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((MIN_DIM..=MAX_DIM).contains(&dim), "dim {dim} out of range");
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.entries[k * dim + k] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix entrywise from `f(row, col)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    /// Row-major view of the entries.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Matrix product `self * rhs`.
    ///
    /// Panics on dimension mismatch; callers compose matrices from the same
    /// model and dimensions are fixed at construction.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.entries[i * d + k] * rhs.entries[k * d + j];
                }
                out.entries[i * d + j] = acc;
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        let d = self.dim;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|k| self.entries[i * d + k] * v[k])
                    .sum::<C64>()
            })
            .collect()
    }

    /// Largest entrywise absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix comparison dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |H_ij - conj(H_ji)|; zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut defect = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = (self.entries[i * d + j] - self.entries[j * d + i].conj()).norm();
                defect = defect.max(diff);
            }
        }
        defect
    }

    /// ||U^dag U - I||_max.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().mul(self);
        gram.max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (ascending) and
/// the unitary matrix whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each sweep annihilates every off-diagonal pair with a complex Givens
/// rotation; the accumulated rotations stay unitary to rounding, which is
/// what guarantees unitary exponentials downstream. Quadratic convergence
/// makes a handful of sweeps enough at these dimensions.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    let d = m.dim();
    let mut a = m.entries.to_vec();
    let mut v = ComplexMatrix::identity(d).entries;

    let scale = m.max_abs().max(1.0);
    let tol = f64::EPSILON * scale;

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a[p * d + q].norm())
            .fold(0.0, f64::max);
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let g = a[p * d + q];
                let gn = g.norm();
                if gn <= tol {
                    continue;
                }
                let app = a[p * d + p].re;
                let aqq = a[q * d + q].re;
                let tau = (aqq - app) / (2.0 * gn);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = g / gn;

                // A <- J^dag A J, columns first, then rows.
                for i in 0..d {
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * phase.conj() * aiq;
                    a[i * d + q] = s * phase * aip + c * aiq;
                }
                for j in 0..d {
                    let apj = a[p * d + j];
                    let aqj = a[q * d + j];
                    a[p * d + j] = c * apj - s * phase * aqj;
                    a[q * d + j] = s * phase.conj() * apj + c * aqj;
                }
                a[p * d + q] = C64::new(0.0, 0.0);
                a[q * d + p] = C64::new(0.0, 0.0);
                a[p * d + p] = C64::new(a[p * d + p].re, 0.0);
                a[q * d + q] = C64::new(a[q * d + q].re, 0.0);

                for i in 0..d {
                    let vip = v[i * d + p];
                    let viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * phase.conj() * viq;
                    v[i * d + q] = s * phase * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].re.total_cmp(&a[j * d + j].re));

    let values: Vec<f64> = order.iter().map(|&k| a[k * d + k].re).collect();
    let vectors = ComplexMatrix::from_fn(d, |i, j| v[i * d + order[j]]);
    HermitianEigen { values, vectors }
}

/// Unitary exponential exp(-i H t) of a Hermitian generator, via spectral
/// decomposition: sum_k exp(-i lambda_k t) |v_k><v_k|.
///
/// The Hermiticity pre-check is relative to the magnitude of the entries
/// (generators in angular-frequency units have entries ~1e10, where an
/// absolute 1e-12 would sit below one ulp).
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    assert!(t.is_finite(), "exponential duration must be finite");
    let tol = 1e-12 * h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NonHermitianInput { defect, tol });
    }

    let eig = hermitian_eigen(h);
    let d = h.dim();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&lambda| C64::from_polar(1.0, -lambda * t))
        .collect();

    let vecs = &eig.vectors;
    Ok(ComplexMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| phases[k] * vecs.get(i, k) * vecs.get(j, k).conj())
            .sum()
    }))
}

/// Newton-Schulz polar step: X <- X (3I - X^dag X) / 2 squares the unitarity
/// defect of a nearly unitary matrix. Long factor products drift off the
/// unitary manifold by about one ulp per factor; two steps pull them back to
/// rounding level.
fn polish_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let d = m.dim();
    let mut x = m.clone();
    for _ in 0..2 {
        let gram = x.adjoint().mul(&x);
        let corr = ComplexMatrix::from_fn(d, |i, j| {
            let g = -0.5 * gram.get(i, j);
            if i == j {
                g + C64::new(1.5, 0.0)
            } else {
                g
            }
        });
        x = x.mul(&corr);
    }
    x
}

/// Time-ordered propagator over [t_start, t_end]: the product of
/// piecewise-constant midpoint-rule exponentials, latest factor leftmost.
pub fn ordered_propagator(
    h_sampler: impl Fn(f64) -> ComplexMatrix,
    t_start: f64,
    t_end: f64,
    substeps: usize,
) -> Result<ComplexMatrix> {
    assert!(t_end > t_start, "time window must have positive length");
    assert!(substeps >= 1, "substeps must be at least 1");

    let h = (t_end - t_start) / substeps as f64;
    let mut u: Option<ComplexMatrix> = None;
    for k in 0..substeps {
        let t_mid = t_start + (k as f64 + 0.5) * h;
        let generator = h_sampler(t_mid);
        if let Some(ref acc) = u {
            if generator.dim() != acc.dim() {
                return Err(Error::DimensionMismatch {
                    expected: acc.dim(),
                    got: generator.dim(),
                });
            }
        }
        let step = expm_hermitian(&generator, h)?;
        u = Some(match u {
            Some(acc) => step.mul(&acc),
            None => step,
        });
    }
    Ok(polish_unitary(&u.expect("substeps >= 1")))
}
