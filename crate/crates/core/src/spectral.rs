//! Biorthonormal eigenbases of a general complex Hamiltonian.
//!
//! Right eigenvectors `v_n` come from a dense eigensolve of `H`. For a complete
//! system the left duals are the columns of `V^{-H}`, so `u_m^H v_n = δ_mn`
//! holds up to the roundoff of one LU solve. The level-restricted variant
//! solves `H^H` independently and pairs its eigenvectors by conjugate
//! eigenvalue, which stays accurate for low-lying states even when the full
//! eigenvector matrix is numerically singular.

use faer::{c64, linalg::solvers::DenseSolveCore, Col};
use thiserror::Error;

use crate::linalg::{self, CCol, CMat};
use crate::model::OperatorTriple;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("empty operator")]
    Empty,
    #[error("dense eigensolver did not converge")]
    NoConvergence,
    #[error(
        "eigenvalues {a} and {b} (levels {level_a}, {level_b}) are closer than {threshold:.3e}; \
         the dual-basis construction needs a non-degenerate spectrum"
    )]
    NearDegenerate {
        level_a: usize,
        level_b: usize,
        a: c64,
        b: c64,
        threshold: f64,
    },
    #[error("eigenvector condition estimate {estimate:.3e} exceeds {limit:.3e}")]
    IllConditioned { estimate: f64, limit: f64 },
    #[error("level {level}: eigen-residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualContract {
        level: usize,
        residual: f64,
        limit: f64,
    },
    #[error("level {level}: no eigenvalue of H^H near conj(E) = {target}")]
    UnmatchedAdjoint { level: usize, target: c64 },
    #[error("complex eigenvalue {0} has no conjugate partner")]
    UnpairedComplexEigenvalue(c64),
    #[error("requested {requested} levels but the operator has dimension {dimension}")]
    TooManyLevels { requested: usize, dimension: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTolerances {
    pub eig_tol: f64,
    pub bi_tol: f64,
    pub reality_tol: f64,
    pub degeneracy_tol: f64,
    pub cond_max: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self {
            eig_tol: 1e-10,
            bi_tol: 1e-9,
            reality_tol: 1e-6,
            degeneracy_tol: 1e-8,
            cond_max: 1e10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealityClass {
    Real,
    ComplexPairMember,
}

/// One level `E_n` with its right eigenvector `|E_n>` and left dual `|E^n>`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalue: c64,
    pub right: CCol,
    pub left: CCol,
    pub residual_right: f64,
    pub residual_left: f64,
}

#[derive(Debug, Clone)]
pub struct BiorthogonalSystem {
    pub pairs: Vec<EigenPair>,
    pub classes: Vec<RealityClass>,
    pub metric_weight: f64,
    /// 2-norm condition number of `V` for complete systems; the worst
    /// eigenvalue condition `||u|| ||v|| / |u^H v|` for level-restricted ones.
    pub condition_estimate: f64,
    /// Whether every level of the operator is present.
    pub complete: bool,
    pub hamiltonian: CMat,
    pub parity: CMat,
    pub label: String,
}

impl BiorthogonalSystem {
    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<c64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    /// Right eigenvectors as the columns of an `N x levels` matrix.
    pub fn right_matrix(&self) -> CMat {
        let cols: Vec<CCol> = self.pairs.iter().map(|p| p.right.clone()).collect();
        linalg::from_columns(self.dimension(), &cols)
    }

    pub fn left_matrix(&self) -> CMat {
        let cols: Vec<CCol> = self.pairs.iter().map(|p| p.left.clone()).collect();
        linalg::from_columns(self.dimension(), &cols)
    }

    /// `max_{m,n} |u_m^H v_n - δ_mn|`.
    pub fn biorthonormality_error(&self) -> f64 {
        let gram = self.left_matrix().adjoint() * self.right_matrix();
        let mut worst: f64 = 0.0;
        for j in 0..gram.ncols() {
            for i in 0..gram.nrows() {
                let target = if i == j { linalg::ONE } else { linalg::ZERO };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn all_real(&self) -> bool {
        self.classes.iter().all(|c| *c == RealityClass::Real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumClassification {
    pub all_real: bool,
    pub broken_pairs: usize,
    pub max_imag_over_scale: f64,
}

/// `|Im E| / max(1, |Re E|)`.
pub fn imag_over_scale(e: c64) -> f64 {
    e.im.abs() / e.re.abs().max(1.0)
}

pub fn is_real_eigenvalue(e: c64, reality_tol: f64) -> bool {
    imag_over_scale(e) <= reality_tol
}

fn classes_for(eigenvalues: &[c64], reality_tol: f64) -> Vec<RealityClass> {
    eigenvalues
        .iter()
        .map(|&e| {
            if is_real_eigenvalue(e, reality_tol) {
                RealityClass::Real
            } else {
                RealityClass::ComplexPairMember
            }
        })
        .collect()
}

/// Eigenvalues of `H`, sorted by real part then imaginary part.
pub fn sorted_eigenvalues(h: &CMat) -> Result<Vec<c64>, SpectralError> {
    if h.nrows() == 0 {
        return Err(SpectralError::Empty);
    }
    let mut ev = h.eigenvalues().map_err(|_| SpectralError::NoConvergence)?;
    ev.sort_by(linalg::total_order);
    Ok(ev)
}

/// Real/complex split with greedy nearest-conjugate pairing of the complex part.
pub fn classify_eigenvalues(
    eigenvalues: &[c64],
    reality_tol: f64,
) -> Result<SpectrumClassification, SpectralError> {
    let complex: Vec<c64> = eigenvalues
        .iter()
        .copied()
        .filter(|&e| !is_real_eigenvalue(e, reality_tol))
        .collect();
    let mut used = vec![false; complex.len()];
    let mut broken_pairs = 0;
    for i in 0..complex.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = complex[i].conj();
        let partner = (0..complex.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (complex[a] - target)
                    .norm()
                    .total_cmp(&(complex[b] - target).norm())
            });
        match partner {
            Some(j) if (complex[j] - target).norm() <= reality_tol * complex[i].norm().max(1.0) => {
                used[j] = true;
                broken_pairs += 1;
            }
            _ => return Err(SpectralError::UnpairedComplexEigenvalue(complex[i])),
        }
    }
    let max_imag_over_scale = eigenvalues
        .iter()
        .map(|&e| imag_over_scale(e))
        .fold(0.0, f64::max);
    Ok(SpectrumClassification {
        all_real: broken_pairs == 0,
        broken_pairs,
        max_imag_over_scale,
    })
}

pub fn classify_reality(
    sys: &BiorthogonalSystem,
    reality_tol: f64,
) -> Result<SpectrumClassification, SpectralError> {
    classify_eigenvalues(&sys.eigenvalues(), reality_tol)
}

struct SortedEigen {
    values: Vec<c64>,
    vectors: Vec<CCol>,
}

fn sorted_unit_eigenvectors(h: &CMat) -> Result<SortedEigen, SpectralError> {
    let n = h.nrows();
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let evd = h.eigen().map_err(|_| SpectralError::NoConvergence)?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<c64> = (0..n).map(|i| s[i]).collect();
    order.sort_by(|&a, &b| linalg::total_order(&raw[a], &raw[b]));
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let v: CCol = u.col(j).to_owned();
            let norm = linalg::col_norm(&v);
            linalg::scale_col(&v, linalg::real(1.0 / norm))
        })
        .collect();
    Ok(SortedEigen { values, vectors })
}

fn spectral_diameter(values: &[c64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Refuses when any of the `checked` leading levels sits within
/// `degeneracy_tol * diameter` of another eigenvalue.
fn check_degeneracy(values: &[c64], checked: usize, degeneracy_tol: f64) -> Result<(), SpectralError> {
    let threshold = degeneracy_tol * spectral_diameter(values);
    for a in 0..checked {
        for b in 0..values.len() {
            if a != b && (values[a] - values[b]).norm() <= threshold {
                let (level_a, level_b) = (a.min(b), a.max(b));
                return Err(SpectralError::NearDegenerate {
                    level_a,
                    level_b,
                    a: values[level_a],
                    b: values[level_b],
                    threshold,
                });
            }
        }
    }
    Ok(())
}

fn eigen_residual(h: &CMat, e: c64, v: &CCol, h_norm: f64) -> f64 {
    let hv = linalg::mat_vec(h, v);
    let r = linalg::sub_col(&hv, &linalg::scale_col(v, e));
    let scale = h_norm * linalg::col_norm(v);
    if scale > 0.0 {
        linalg::col_norm(&r) / scale
    } else {
        linalg::col_norm(&r)
    }
}

fn assemble(
    t: &OperatorTriple,
    values: Vec<c64>,
    rights: Vec<CCol>,
    lefts: Vec<CCol>,
    tol: &SpectralTolerances,
    condition_estimate: f64,
) -> Result<BiorthogonalSystem, SpectralError> {
    let h = t.hamiltonian();
    let h_adj = linalg::adjoint(h);
    let h_norm = linalg::frobenius(h.as_ref());
    let mut pairs = Vec::with_capacity(values.len());
    for (level, ((e, v), u)) in values.iter().zip(rights).zip(lefts).enumerate() {
        let residual_right = eigen_residual(h, *e, &v, h_norm);
        let residual_left = eigen_residual(&h_adj, e.conj(), &u, h_norm);
        let worst = residual_right.max(residual_left);
        if worst > tol.eig_tol {
            return Err(SpectralError::ResidualContract {
                level,
                residual: worst,
                limit: tol.eig_tol,
            });
        }
        pairs.push(EigenPair {
            eigenvalue: *e,
            right: v,
            left: u,
            residual_right,
            residual_left,
        });
    }
    let classes = classes_for(&values, tol.reality_tol);
    Ok(BiorthogonalSystem {
        complete: pairs.len() == t.dimension(),
        pairs,
        classes,
        metric_weight: t.metric_weight(),
        condition_estimate,
        hamiltonian: h.clone(),
        parity: t.parity().clone(),
        label: t.label().to_string(),
    })
}

/// Complete biorthonormal system with duals taken from `V^{-H}`.
pub fn eigendecompose(
    t: &OperatorTriple,
    tol: &SpectralTolerances,
) -> Result<BiorthogonalSystem, SpectralError> {
    let n = t.dimension();
    let SortedEigen { values, vectors } = sorted_unit_eigenvectors(t.hamiltonian())?;
    check_degeneracy(&values, n, tol.degeneracy_tol)?;

    let v = linalg::from_columns(n, &vectors);
    let sv = v.singular_values().map_err(|_| SpectralError::NoConvergence)?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= tol.cond_max) {
        return Err(SpectralError::IllConditioned {
            estimate: condition,
            limit: tol.cond_max,
        });
    }

    let inv = v.partial_piv_lu().inverse();
    let duals = inv.adjoint().to_owned();
    let lefts = (0..n).map(|j| linalg::column(&duals, j)).collect();
    assemble(t, values, vectors, lefts, tol, condition)
}

/// The lowest `levels` states (ascending real part) with left eigenvectors
/// obtained from an independent eigensolve of `H^H`.
pub fn eigendecompose_lowest(
    t: &OperatorTriple,
    levels: usize,
    tol: &SpectralTolerances,
) -> Result<BiorthogonalSystem, SpectralError> {
    let n = t.dimension();
    if levels > n {
        return Err(SpectralError::TooManyLevels {
            requested: levels,
            dimension: n,
        });
    }
    let right = sorted_unit_eigenvectors(t.hamiltonian())?;
    check_degeneracy(&right.values, levels, tol.degeneracy_tol)?;
    let adjoint = sorted_unit_eigenvectors(&linalg::adjoint(t.hamiltonian()))?;

    let diameter = spectral_diameter(&right.values);
    let mut lefts = Vec::with_capacity(levels);
    let mut condition: f64 = 1.0;
    for level in 0..levels {
        let target = right.values[level].conj();
        let (j, gap) = adjoint
            .values
            .iter()
            .enumerate()
            .map(|(j, &e)| (j, (e - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(SpectralError::Empty)?;
        // Matching is unambiguous because the degeneracy guard already holds.
        if gap > 0.5 * tol.degeneracy_tol * diameter.max(1.0) {
            return Err(SpectralError::UnmatchedAdjoint { level, target });
        }
        let u = &adjoint.vectors[j];
        let v = &right.vectors[level];
        let overlap = linalg::inner(u, v);
        if overlap.norm() == 0.0 {
            return Err(SpectralError::IllConditioned {
                estimate: f64::INFINITY,
                limit: tol.cond_max,
            });
        }
        condition = condition.max(1.0 / overlap.norm());
        lefts.push(linalg::scale_col(u, overlap.conj().inv()));
    }
    if !(condition <= tol.cond_max) {
        return Err(SpectralError::IllConditioned {
            estimate: condition,
            limit: tol.cond_max,
        });
    }
    let values = right.values[..levels].to_vec();
    let rights = right.vectors.into_iter().take(levels).collect();
    assemble(t, values, rights, lefts, tol, condition)
}

/// `||sum_n v_n u_n^H - I||_F`.
pub fn dual_completeness_residual(sys: &BiorthogonalSystem) -> f64 {
    let sum = sys.right_matrix() * sys.left_matrix().adjoint();
    linalg::identity_residual(&sum)
}

/// Largest distance between eigenvalues of `H^H`, computed independently,
/// and the conjugates of the system's eigenvalues, after pairing each level with
/// its nearest match.
pub fn adjoint_spectrum_mismatch(sys: &BiorthogonalSystem) -> Result<f64, SpectralError> {
    let adj = sorted_eigenvalues(&linalg::adjoint(&sys.hamiltonian))?;
    let mut used = vec![false; adj.len()];
    let mut worst: f64 = 0.0;
    for pair in &sys.pairs {
        let target = pair.eigenvalue.conj();
        let j = (0..adj.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (adj[a] - target).norm().total_cmp(&(adj[b] - target).norm()))
            .ok_or(SpectralError::Empty)?;
        used[j] = true;
        worst = worst.max((adj[j] - target).norm());
    }
    Ok(worst)
}

/// Columns as a unit-normalized copy; used by tests comparing bases up to scale.
pub fn normalized(v: &CCol) -> CCol {
    let norm = linalg::col_norm(v);
    Col::from_fn(v.nrows(), |i| v[i] / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;
    use crate::model::{build_explicit, build_matrix_model};
    use std::f64::consts::PI;

    fn diag(values: &[f64]) -> OperatorTriple {
        let n = values.len();
        let h = Mat::from_fn(n, n, |i, j| if i == j { linalg::real(values[i]) } else { linalg::ZERO });
        build_explicit(h, linalg::identity(n), 1.0).unwrap()
    }

    #[test]
    fn diagonal_gives_standard_basis() {
        let sys = eigendecompose(&diag(&[2.0, 1.0]), &SpectralTolerances::default()).unwrap();
        assert_eq!(sys.eigenvalues(), vec![linalg::real(1.0), linalg::real(2.0)]);
        for (n, pair) in sys.pairs.iter().enumerate() {
            for i in 0..2 {
                let e = if i == 1 - n { 1.0 } else { 0.0 };
                assert!((pair.right[i].norm() - e).abs() < 1e-15);
                assert!((pair.left[i] - pair.right[i]).norm() < 1e-15);
            }
        }
        assert!(dual_completeness_residual(&sys) <= 1e-15);
        assert!(sys.complete);
    }

    #[test]
    fn two_level_unbroken() {
        let t = build_matrix_model(1.0, 1.0, PI / 6.0);
        let sys = eigendecompose(&t, &SpectralTolerances::default()).unwrap();
        let e = sys.eigenvalues();
        assert!(e[0].norm() < 1e-12);
        assert!((e[1] - linalg::real(3f64.sqrt())).norm() < 1e-12);
        assert!(sys.biorthonormality_error() < 1e-12);
        assert!(dual_completeness_residual(&sys) < 1e-12);
        let c = classify_reality(&sys, 1e-6).unwrap();
        assert!(c.all_real);
        assert_eq!(c.broken_pairs, 0);
    }

    #[test]
    fn two_level_broken_pair() {
        let t = build_matrix_model(1.0, 0.5, PI / 2.0);
        let sys = eigendecompose(&t, &SpectralTolerances::default()).unwrap();
        let w = 0.75f64.sqrt();
        let e = sys.eigenvalues();
        assert!((e[0] - c64::new(0.0, -w)).norm() < 1e-12);
        assert!((e[1] - c64::new(0.0, w)).norm() < 1e-12);
        assert!(sys.classes.iter().all(|c| *c == RealityClass::ComplexPairMember));
        let c = classify_reality(&sys, 1e-6).unwrap();
        assert!(!c.all_real);
        assert_eq!(c.broken_pairs, 1);
    }

    #[test]
    fn classification_of_hermitian_and_unpaired() {
        let c = classify_eigenvalues(&[linalg::real(1.0), linalg::real(2.0), linalg::real(3.0)], 1e-6).unwrap();
        assert!(c.all_real);
        assert_eq!(c.max_imag_over_scale, 0.0);
        let err = classify_eigenvalues(&[c64::new(1.0, 0.5), linalg::real(2.0)], 1e-6).unwrap_err();
        assert!(matches!(err, SpectralError::UnpairedComplexEigenvalue(_)));
        // Relative reality scale uses max(1, |Re E|).
        assert!(classify_eigenvalues(&[c64::new(1e4, 5e-3)], 1e-6).unwrap().all_real);
    }

    #[test]
    fn degenerate_spectrum_refused() {
        let err = eigendecompose(&diag(&[1.0, 1.0, 2.0]), &SpectralTolerances::default()).unwrap_err();
        assert!(matches!(err, SpectralError::NearDegenerate { level_a: 0, level_b: 1, .. }));
    }

    #[test]
    fn ill_conditioned_refused() {
        // Nearly parallel eigenvectors: [[1, 1], [0, 1 + eps]].
        let eps = 1e-12;
        let h = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => linalg::real(1.0),
            (0, 1) => linalg::real(1.0),
            (1, 1) => linalg::real(1.0 + eps),
            _ => linalg::ZERO,
        });
        let t = build_explicit(h, linalg::identity(2), 1.0).unwrap();
        let tol = SpectralTolerances {
            degeneracy_tol: 1e-14,
            ..Default::default()
        };
        assert!(matches!(eigendecompose(&t, &tol), Err(SpectralError::IllConditioned { .. })));
    }

    #[test]
    fn lowest_levels_match_full_system() {
        let t = build_matrix_model(1.0, 1.3, 0.4);
        let tol = SpectralTolerances::default();
        let full = eigendecompose(&t, &tol).unwrap();
        let part = eigendecompose_lowest(&t, 1, &tol).unwrap();
        assert!(!part.complete);
        assert_eq!(part.len(), 1);
        assert!((part.pairs[0].eigenvalue - full.pairs[0].eigenvalue).norm() < 1e-13);
        assert!((linalg::inner(&part.pairs[0].left, &part.pairs[0].right) - linalg::ONE).norm() < 1e-13);
        // Same dual up to roundoff since u^H v = 1 fixes the scale.
        let d = linalg::sub_col(&part.pairs[0].left, &full.pairs[0].left);
        assert!(linalg::col_norm(&d) < 1e-12);
        assert!(eigendecompose_lowest(&t, 3, &tol).is_err());
    }

    #[test]
    fn adjoint_spectrum_is_conjugate() {
        let t = build_matrix_model(0.8, 1.0, 1.1);
        let sys = eigendecompose(&t, &SpectralTolerances::default()).unwrap();
        assert!(adjoint_spectrum_mismatch(&sys).unwrap() < 1e-12);
    }
}
