//! Dense complex linear algebra on small Hermitian matrices.
//!
//! Eigen- and Cholesky factorizations come from `nalgebra`; the pencil
//! reduction, Schur complements and threshold policy live here.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative factor of the positivity threshold `tau = REL_THRESHOLD * ||M||`.
pub const REL_THRESHOLD: f64 = 1e-9;

/// Absolute Hermitian-symmetry tolerance for matrices built from measured data.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("matrix is indefinite (smallest eigenvalue {min_eigenvalue:.6e})")]
    Indefinite { min_eigenvalue: f64 },
    #[error("singular block in Schur complement")]
    SingularBlock,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    /// Validates symmetry to `tol` (absolute, scaled by `max(1, ||M||)`) and
    /// stores the exact Hermitian part.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<HermMatrix, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let asymmetry = (&m - m.adjoint())
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        let scale = max_abs(&m).max(1.0);
        if asymmetry > tol * scale {
            return Err(LinalgError::NotHermitian { asymmetry });
        }
        Ok(HermMatrix::symmetrize(m))
    }

    pub fn new(m: CMatrix) -> Result<HermMatrix, LinalgError> {
        HermMatrix::with_tolerance(m, HERMITIAN_TOL)
    }

    /// Takes `(M + M*)/2` without checking.
    pub fn symmetrize(m: CMatrix) -> HermMatrix {
        let h = (&m + m.adjoint()).scale(0.5);
        HermMatrix(h)
    }

    pub fn identity(d: usize) -> HermMatrix {
        HermMatrix(CMatrix::identity(d, d))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> HermMatrix {
        let d = diag.len();
        HermMatrix(CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                c(diag[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `v* M v`, real for Hermitian `M`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    pub fn congruence(&self, c: &CMatrix) -> HermMatrix {
        HermMatrix::symmetrize(c.adjoint() * &self.0 * c)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_herm(self).values[0]
    }
}

/// Serialized as a list of rows of `[re, im]` pairs.
impl serde::Serialize for HermMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Complex64>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Eigenvalues in ascending order with matching unitary eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eig_herm(m: &HermMatrix) -> Eigen {
    let d = m.dim();
    if d == 0 {
        return Eigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(d, d, |r, col| se.eigenvectors[(r, order[col])]);
    Eigen { values, vectors }
}

fn cholesky(b: &HermMatrix) -> Result<Cholesky<Complex64, Dyn>, LinalgError> {
    let min = b.min_eigenvalue();
    if min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Cholesky::new(b.0.clone()).ok_or(LinalgError::NotPositiveDefinite {
        min_eigenvalue: min,
    })
}

/// Solves `G w = gamma B w` for `B > 0`. Eigenvectors (columns of `vectors`)
/// are `B`-orthonormal: `W* B W = I`, `W* G W = diag(gamma)`.
pub fn pencil_eig(g: &HermMatrix, b: &HermMatrix) -> Result<Eigen, LinalgError> {
    if g.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch(format!(
            "pencil {} vs {}",
            g.dim(),
            b.dim()
        )));
    }
    let chol = cholesky(b)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(LinalgError::NotPositiveDefinite {
            min_eigenvalue: 0.0,
        })?;
    let reduced = HermMatrix::symmetrize(&l_inv * g.matrix() * l_inv.adjoint());
    let Eigen { values, vectors } = eig_herm(&reduced);
    let w = l_inv.adjoint() * vectors;
    Ok(Eigen { values, vectors: w })
}

/// Schur complement of the trailing block: `M11 - M12 M22^{-1} M21`, where
/// `M11` is the leading `lead x lead` block.
pub fn schur_complement(m: &CMatrix, lead: usize) -> Result<CMatrix, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let d = m.nrows();
    if lead > d {
        return Err(LinalgError::DimensionMismatch(format!("lead {lead} > {d}")));
    }
    let tail = d - lead;
    let m11 = m.view((0, 0), (lead, lead));
    if tail == 0 {
        return Ok(m11.into_owned());
    }
    let m12 = m.view((0, lead), (lead, tail));
    let m21 = m.view((lead, 0), (tail, lead));
    let m22 = m.view((lead, lead), (tail, tail)).into_owned();
    let lu = m22.lu();
    let x = lu
        .solve(&m21.into_owned())
        .ok_or(LinalgError::SingularBlock)?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LinalgError::SingularBlock);
    }
    Ok(m11.into_owned() - m12 * x)
}

/// Scalar Schur complement of a bordered matrix with a 1x1 corner.
pub fn schur_scalar(m: &CMatrix) -> Result<Complex64, LinalgError> {
    Ok(schur_complement(m, 1)?[(0, 0)])
}

pub fn det(m: &CMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return c(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    m.clone().try_inverse().ok_or(LinalgError::SingularBlock)
}

/// Applies `f` to the spectrum: `V diag(f(lambda)) V*`.
pub fn spectral_map(m: &HermMatrix, f: impl Fn(f64) -> f64) -> HermMatrix {
    let Eigen { values, vectors } = eig_herm(m);
    let d = m.dim();
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c(f(values[i]), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    HermMatrix::symmetrize(&vectors * diag * vectors.adjoint())
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &HermMatrix) -> Result<HermMatrix, LinalgError> {
    let min = m.min_eigenvalue();
    if min < -1e-12 * m.norm() {
        return Err(LinalgError::Indefinite {
            min_eigenvalue: min,
        });
    }
    Ok(spectral_map(m, |x| x.max(0.0).sqrt()))
}

/// Counts eigenvalues above `tau = REL_THRESHOLD * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveCount {
    pub count: usize,
    pub threshold: f64,
    /// Smallest distance of any eigenvalue from the threshold.
    pub margin: f64,
}

pub fn count_positive(values: &[f64], scale: f64) -> PositiveCount {
    let threshold = REL_THRESHOLD * scale;
    let count = values.iter().filter(|&&x| x > threshold).count();
    let margin = values
        .iter()
        .map(|x| (x - threshold).abs())
        .fold(f64::INFINITY, f64::min);
    PositiveCount {
        count,
        threshold,
        margin,
    }
}

/// Converts a row-major slice of `(re, im)` pairs into a matrix.
pub fn cmatrix(rows: usize, cols: usize, entries: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, entries)
}

/// Seeded random test data: entries uniform in the unit square.
pub mod random {
    use super::*;
    use rand::Rng;

    pub fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(r, cols, |_, _| random_complex(rng))
    }

    pub fn random_herm<R: Rng>(rng: &mut R, d: usize) -> HermMatrix {
        HermMatrix::symmetrize(random_matrix(rng, d, d))
    }

    pub fn random_pd<R: Rng>(rng: &mut R, d: usize) -> HermMatrix {
        let a = random_matrix(rng, d, d);
        HermMatrix::symmetrize(&a * a.adjoint() + CMatrix::identity(d, d).scale(0.5))
    }

    pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
        eig_herm(&random_herm(rng, d)).vectors
    }
}
