//! From a biorthonormal system to the PT basis and the charge operator.
//!
//! The chain is: fix every right eigenvector to be PT-invariant, extract the
//! proportionality coefficient `c_n` in `u_n = c_n P v_n`, rescale each dual
//! pair by `(λ_n, 1/λ_n)` so that `|c_n| = 1`, read off the signature
//! `s_n = v_n^H P v_n`, and sum `C = Σ s_k v_k u_k^H`.
//!
//! Vectors live in the unit-metric embedding `ψ_i = sqrt(w) φ(x_i)`, so every
//! identity is a plain matrix identity with target `I`.

use std::fmt;

use faer::{c64, Mat};
use thiserror::Error;

use crate::linalg::{self, CCol, CMat};
use crate::spectral::{BiorthogonalSystem, RealityClass};

/// Below this `|c_n|` a dual pair cannot be rescaled.
pub const COEFFICIENT_FLOOR: f64 = 1e-150;

/// Relative slack when picking the reference component for the sign convention.
const REFERENCE_TIE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PtError {
    #[error("level {level} has complex energy {eigenvalue}; the PT basis exists only in the unbroken phase")]
    BrokenPhase { level: usize, eigenvalue: c64 },
    #[error("level {level} is not a PT eigenstate: ||d| - 1| = {modulus_error:.3e}, ||PT v - d v|| / ||v|| = {residual:.3e}")]
    NotPTInvariant {
        level: usize,
        modulus_error: f64,
        residual: f64,
    },
    #[error("level {level}: dual is not parallel to P v (relative residual {residual:.3e})")]
    NotProportional { level: usize, residual: f64 },
    #[error("level {level}: coefficient c = {c} is not real")]
    ComplexCoefficient { level: usize, c: c64 },
    #[error("level {level}: coefficient |c| = {magnitude:.3e} too small to rescale")]
    ZeroCoefficient { level: usize, magnitude: f64 },
    #[error("level {level}: rescaled coefficient {c} is not ±1")]
    ScaleMismatch { level: usize, c: c64 },
    #[error("level {level}: <E_n|P|E_n> = {value} disagrees with sign(c_n) = {expected}")]
    SignatureMismatch {
        level: usize,
        value: c64,
        expected: Sign,
    },
    #[error("charge operator needs all {dimension} levels, have {present}")]
    IncompleteBasis { present: usize, dimension: usize },
    #[error("coefficient count {got} does not match level count {expected}")]
    CoefficientCount { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    /// `(-1)^n`.
    pub fn alternating(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Minus => f.write_str("-1"),
            Sign::Plus => f.write_str("+1"),
        }
    }
}

/// Output of [`fix_pt_phase`]: the rephased system and the pre-fix factors `d_n`.
#[derive(Debug, Clone)]
pub struct PhaseFixed {
    pub system: BiorthogonalSystem,
    pub phase_factors: Vec<c64>,
}

/// Phase-fixed, rescaled dual pairs with their signature.
#[derive(Debug, Clone)]
pub struct PTBasis {
    pub vectors: Vec<CCol>,
    pub duals: Vec<CCol>,
    pub energies: Vec<f64>,
    pub signature: Vec<Sign>,
    pub phase_factors: Vec<c64>,
    pub lambdas: Vec<f64>,
    /// `c_n` before rescaling.
    pub coefficients: Vec<c64>,
    pub metric_weight: f64,
    pub complete: bool,
    pub hamiltonian: CMat,
    pub parity: CMat,
    pub label: String,
}

impl PTBasis {
    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector_matrix(&self) -> CMat {
        linalg::from_columns(self.dimension(), &self.vectors)
    }

    pub fn dual_matrix(&self) -> CMat {
        linalg::from_columns(self.dimension(), &self.duals)
    }

    /// Same vectors scaled by `diag(s)`.
    fn signed_vector_matrix(&self) -> CMat {
        let n = self.dimension();
        Mat::from_fn(n, self.len(), |i, j| self.vectors[j][i] * self.signature[j].value())
    }
}

fn pt_image(parity: &CMat, v: &CCol) -> CCol {
    linalg::mat_vec(parity, &linalg::conj_col(v))
}

/// Smallest index whose modulus is within `REFERENCE_TIE` of the largest.
fn reference_index(v: &CCol) -> usize {
    let max = (0..v.nrows()).map(|i| v[i].norm()).fold(0.0, f64::max);
    (0..v.nrows())
        .find(|&i| v[i].norm() >= (1.0 - REFERENCE_TIE) * max)
        .unwrap_or(0)
}

fn largest_index(v: &CCol) -> usize {
    (0..v.nrows())
        .max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()))
        .unwrap_or(0)
}

/// Rephase each level so that `P conj(v_n) = v_n`.
///
/// `d_n` is read off the largest component of `v_n`; the right vector and its
/// dual both get `e^{i arg(d_n)/2}`, which keeps `u_n^H v_n = 1`. The overall
/// sign is then chosen so the reference component has positive real part
/// (positive imaginary part if the real part vanishes).
pub fn fix_pt_phase(sys: &BiorthogonalSystem, pt_tol: f64) -> Result<PhaseFixed, PtError> {
    let mut system = sys.clone();
    let mut phase_factors = Vec::with_capacity(sys.len());
    for (level, pair) in system.pairs.iter_mut().enumerate() {
        if sys.classes[level] != RealityClass::Real {
            return Err(PtError::BrokenPhase {
                level,
                eigenvalue: pair.eigenvalue,
            });
        }
        let v = &pair.right;
        let w = pt_image(&sys.parity, v);
        let k = largest_index(v);
        let d = w[k] / v[k];
        let v_norm = linalg::col_norm(v);
        let residual = linalg::col_norm(&linalg::sub_col(&w, &linalg::scale_col(v, d))) / v_norm;
        let modulus_error = (d.norm() - 1.0).abs();
        if modulus_error > pt_tol || residual > pt_tol {
            return Err(PtError::NotPTInvariant {
                level,
                modulus_error,
                residual,
            });
        }
        let mut half = c64::from_polar(1.0, 0.5 * d.arg());
        let rotated = linalg::scale_col(v, half);
        let r = rotated[reference_index(&rotated)];
        let flip = if r.re.abs() > REFERENCE_TIE * r.norm() {
            r.re < 0.0
        } else {
            r.im < 0.0
        };
        if flip {
            half = -half;
        }
        pair.right = linalg::scale_col(&pair.right, half);
        pair.left = linalg::scale_col(&pair.left, half);
        phase_factors.push(d);
    }
    Ok(PhaseFixed {
        system,
        phase_factors,
    })
}

/// `c_n = (P v_n)^H u_n / ||P v_n||^2`, checked for proportionality and reality.
pub fn compute_c_coefficients(sys: &BiorthogonalSystem, pt_tol: f64) -> Result<Vec<c64>, PtError> {
    sys.pairs
        .iter()
        .enumerate()
        .map(|(level, pair)| {
            let pv = linalg::mat_vec(&sys.parity, &pair.right);
            let c = linalg::inner(&pv, &pair.left) / linalg::inner(&pv, &pv).re;
            let u_norm = linalg::col_norm(&pair.left);
            let residual =
                linalg::col_norm(&linalg::sub_col(&pair.left, &linalg::scale_col(&pv, c))) / u_norm;
            if residual > pt_tol {
                return Err(PtError::NotProportional { level, residual });
            }
            if c.im.abs() > pt_tol * c.norm() {
                return Err(PtError::ComplexCoefficient { level, c });
            }
            Ok(c)
        })
        .collect()
}

/// `v_n -> λ_n v_n`, `u_n -> u_n / λ_n` with `λ_n = (||u_n||^2 / ||v_n||^2)^{1/4}`.
pub fn rescale_dual_pairs(fixed: &PhaseFixed, c: &[c64], pt_tol: f64) -> Result<PTBasis, PtError> {
    let sys = &fixed.system;
    if c.len() != sys.len() {
        return Err(PtError::CoefficientCount {
            got: c.len(),
            expected: sys.len(),
        });
    }
    let mut vectors = Vec::with_capacity(sys.len());
    let mut duals = Vec::with_capacity(sys.len());
    let mut lambdas = Vec::with_capacity(sys.len());
    let mut signature = Vec::with_capacity(sys.len());
    for (level, (pair, &cn)) in sys.pairs.iter().zip(c).enumerate() {
        if cn.norm() < COEFFICIENT_FLOOR {
            return Err(PtError::ZeroCoefficient {
                level,
                magnitude: cn.norm(),
            });
        }
        let lambda = (linalg::col_norm(&pair.left) / linalg::col_norm(&pair.right)).sqrt();
        let v = linalg::scale_col(&pair.right, linalg::real(lambda));
        let u = linalg::scale_col(&pair.left, linalg::real(1.0 / lambda));
        let sign = Sign::of(cn.re);
        let pv = linalg::mat_vec(&sys.parity, &v);
        let rescaled = linalg::inner(&pv, &u) / linalg::inner(&pv, &pv).re;
        if (rescaled - linalg::real(sign.value())).norm() > pt_tol {
            return Err(PtError::ScaleMismatch { level, c: rescaled });
        }
        vectors.push(v);
        duals.push(u);
        lambdas.push(lambda);
        signature.push(sign);
    }
    Ok(PTBasis {
        vectors,
        duals,
        energies: sys.pairs.iter().map(|p| p.eigenvalue.re).collect(),
        signature,
        phase_factors: fixed.phase_factors.clone(),
        lambdas,
        coefficients: c.to_vec(),
        metric_weight: sys.metric_weight,
        complete: sys.complete,
        hamiltonian: sys.hamiltonian.clone(),
        parity: sys.parity.clone(),
        label: sys.label.clone(),
    })
}

/// `s_n = <E_n| P |E_n>`, rounded after checking it is `±1` and agrees with `sign(c_n)`.
pub fn signature(basis: &PTBasis, pt_tol: f64) -> Result<Vec<Sign>, PtError> {
    basis
        .vectors
        .iter()
        .enumerate()
        .map(|(level, v)| {
            let value = linalg::inner(v, &linalg::mat_vec(&basis.parity, v));
            let sign = Sign::of(value.re);
            let expected = basis.signature[level];
            if (value - linalg::real(sign.value())).norm() > pt_tol || sign != expected {
                return Err(PtError::SignatureMismatch {
                    level,
                    value,
                    expected,
                });
            }
            Ok(sign)
        })
        .collect()
}

/// Whole chain: phase fix, coefficients, rescale, signature cross-check.
pub fn build_pt_basis(sys: &BiorthogonalSystem, pt_tol: f64) -> Result<PTBasis, PtError> {
    let fixed = fix_pt_phase(sys, pt_tol)?;
    let c = compute_c_coefficients(&fixed.system, pt_tol)?;
    let basis = rescale_dual_pairs(&fixed, &c, pt_tol)?;
    signature(&basis, pt_tol)?;
    Ok(basis)
}

/// `max_n ||P conj(φ_n) - φ_n|| / ||φ_n||`.
pub fn pt_phase_residual(basis: &PTBasis) -> f64 {
    basis
        .vectors
        .iter()
        .map(|v| {
            linalg::col_norm(&linalg::sub_col(&pt_image(&basis.parity, v), v)) / linalg::col_norm(v)
        })
        .fold(0.0, f64::max)
}

/// Dense `C_s = Σ_k s_k |E_k><E^k|`.
#[derive(Debug, Clone)]
pub struct COperator {
    pub matrix: CMat,
    pub signature_source: Vec<Sign>,
    pub basis_label: String,
}

impl COperator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// `||C^2 - I||_F`.
    pub fn squared_residual(&self) -> f64 {
        linalg::identity_residual(&(&self.matrix * &self.matrix))
    }

    /// `||CH - HC||_F / ||H||_F`.
    pub fn commutator_residual(&self, h: &CMat) -> f64 {
        let comm = &self.matrix * h - h * &self.matrix;
        let scale = linalg::frobenius(h.as_ref());
        let r = linalg::frobenius(comm.as_ref());
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// `||C - C^H||_F`; nonzero for genuinely non-Hermitian models.
    pub fn nonhermiticity(&self) -> f64 {
        linalg::distance(&self.matrix, &linalg::adjoint(&self.matrix))
    }

    /// `||C^H C - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::identity_residual(&(self.matrix.adjoint() * &self.matrix))
    }

    pub fn trace(&self) -> c64 {
        (0..self.dimension()).fold(linalg::ZERO, |acc, i| acc + self.matrix[(i, i)])
    }

    /// Entries in continuum units, `C(x_i, x_j) = C_ij / w`.
    pub fn position_kernel(&self, metric_weight: f64) -> CMat {
        Mat::from_fn(self.dimension(), self.dimension(), |i, j| {
            self.matrix[(i, j)] / metric_weight
        })
    }
}

/// `Σ_k s_k v_k u_k^H` over whatever levels the basis holds. On a partial
/// basis this acts as `C` on the span of the retained levels only.
pub fn charge_operator_on_levels(basis: &PTBasis) -> CMat {
    basis.signed_vector_matrix() * basis.dual_matrix().adjoint()
}

pub fn build_c_operator(basis: &PTBasis) -> Result<COperator, PtError> {
    if !basis.complete || basis.len() != basis.dimension() {
        return Err(PtError::IncompleteBasis {
            present: basis.len(),
            dimension: basis.dimension(),
        });
    }
    Ok(COperator {
        matrix: charge_operator_on_levels(basis),
        signature_source: basis.signature.clone(),
        basis_label: basis.label.clone(),
    })
}

/// `Σ_n φ_n φ_n^T` in the embedding: the position-space form of `C`, built
/// from the right vectors alone.
pub fn charge_kernel_from_states(basis: &PTBasis) -> CMat {
    let v = basis.vector_matrix();
    &v * v.transpose()
}
