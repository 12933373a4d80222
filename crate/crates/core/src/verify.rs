//! Residuals for every orthonormality and completeness identity of the dual
//! bases, and the aggregated [`ResidualReport`].
//!
//! All forms are evaluated in the unit-metric embedding, so the discrete
//! delta function is the identity matrix. Vectors are assumed PT-invariant
//! where a position-space form relies on it.

use faer::{c64, Mat};
use thiserror::Error;

use crate::linalg::{self, CCol, CMat};
use crate::model::{self, OperatorTriple};
use crate::ptcore::{self, COperator, PTBasis, Sign};
use crate::spectral::{self, SpectralTolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Every named tolerance a run can override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub eig_tol: f64,
    pub bi_tol: f64,
    pub pt_tol: f64,
    pub reality_tol: f64,
    pub gram_tol: f64,
    pub c_tol: f64,
    pub degeneracy_tol: f64,
    pub cond_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_tol: 1e-10,
            bi_tol: 1e-9,
            pt_tol: 1e-8,
            reality_tol: 1e-6,
            gram_tol: 1e-8,
            c_tol: 1e-10,
            degeneracy_tol: 1e-8,
            cond_max: 1e10,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 8] = [
        "eig_tol",
        "bi_tol",
        "pt_tol",
        "reality_tol",
        "gram_tol",
        "c_tol",
        "degeneracy_tol",
        "cond_max",
    ];

    pub fn spectral(&self) -> SpectralTolerances {
        SpectralTolerances {
            eig_tol: self.eig_tol,
            bi_tol: self.bi_tol,
            reality_tol: self.reality_tol,
            degeneracy_tol: self.degeneracy_tol,
            cond_max: self.cond_max,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "eig_tol" => self.eig_tol,
            "bi_tol" => self.bi_tol,
            "pt_tol" => self.pt_tol,
            "reality_tol" => self.reality_tol,
            "gram_tol" => self.gram_tol,
            "c_tol" => self.c_tol,
            "degeneracy_tol" => self.degeneracy_tol,
            "cond_max" => self.cond_max,
            _ => return None,
        })
    }

    /// Returns `false` for an unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "eig_tol" => &mut self.eig_tol,
            "bi_tol" => &mut self.bi_tol,
            "pt_tol" => &mut self.pt_tol,
            "reality_tol" => &mut self.reality_tol,
            "gram_tol" => &mut self.gram_tol,
            "c_tol" => &mut self.c_tol,
            "degeneracy_tol" => &mut self.degeneracy_tol,
            "cond_max" => &mut self.cond_max,
            _ => return false,
        };
        *slot = value;
        true
    }
}

fn check_len(a: usize, b: usize) -> Result<(), VerifyError> {
    if a == b {
        Ok(())
    } else {
        Err(VerifyError::Dimension(format!("{a} vs {b}")))
    }
}

/// `(f, g) = Σ_i [P conj(f)]_i g_i`, the discrete `∫ dx [PT f](x) g(x)`.
pub fn pt_inner_product(f: &CCol, g: &CCol, parity: &CMat) -> Result<c64, VerifyError> {
    check_len(f.nrows(), g.nrows())?;
    check_len(f.nrows(), parity.nrows())?;
    let ptf = linalg::mat_vec(parity, &linalg::conj_col(f));
    Ok(linalg::bilinear(&ptf, g))
}

/// `<f|g> = Σ_i [C P conj(f)]_i g_i`.
pub fn cpt_inner_product(f: &CCol, g: &CCol, parity: &CMat, c: &CMat) -> Result<c64, VerifyError> {
    check_len(f.nrows(), g.nrows())?;
    check_len(f.nrows(), parity.nrows())?;
    check_len(f.nrows(), c.nrows())?;
    let cptf = linalg::mat_vec(c, &linalg::mat_vec(parity, &linalg::conj_col(f)));
    Ok(linalg::bilinear(&cptf, g))
}

#[derive(Debug, Clone)]
pub struct GramMatrices {
    /// `(φ_m, φ_n)`.
    pub pt_gram: CMat,
    /// `<φ_m|φ_n>` with the charge operator inserted.
    pub cpt_gram: CMat,
    /// `u_m^H v_n`.
    pub dual_gram: CMat,
}

impl GramMatrices {
    /// `||pt_gram - diag(s)||_F`.
    pub fn pt_deviation(&self, signature: &[Sign]) -> f64 {
        let target = Mat::from_fn(signature.len(), signature.len(), |i, j| {
            if i == j {
                linalg::real(signature[i].value())
            } else {
                linalg::ZERO
            }
        });
        linalg::distance(&self.pt_gram, &target)
    }

    pub fn cpt_deviation(&self) -> f64 {
        linalg::identity_residual(&self.cpt_gram)
    }

    pub fn dual_deviation(&self) -> f64 {
        linalg::identity_residual(&self.dual_gram)
    }
}

/// Gram matrices over the levels held by `basis`; `c` is the charge operator
/// (the level-restricted one is enough since only `C φ_m` enters).
pub fn gram_matrices(basis: &PTBasis, c: &CMat) -> GramMatrices {
    let v = basis.vector_matrix();
    let pt_images = &basis.parity * v.conjugate();
    let pt_gram = pt_images.transpose() * &v;
    let cpt_gram = (c * &pt_images).transpose() * &v;
    let dual_gram = basis.dual_matrix().adjoint() * &v;
    GramMatrices {
        pt_gram,
        cpt_gram,
        dual_gram,
    }
}

fn signed(m: &CMat, signature: &[Sign]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * signature[j].value())
}

/// `||Σ_n s_n φ_n φ_n^T - I||_F`: the position form `Σ s_n φ_n(x) φ_n(y) = δ(x-y)`.
pub fn signed_completeness_residual(basis: &PTBasis) -> f64 {
    let v = basis.vector_matrix();
    linalg::identity_residual(&(signed(&v, &basis.signature) * v.transpose()))
}

/// Operator form `||Σ_n s_n |E_n><E_n| P - I||_F`; agrees with the position
/// form whenever the states are PT-invariant.
pub fn signed_completeness_operator_residual(basis: &PTBasis) -> f64 {
    let v = basis.vector_matrix();
    linalg::identity_residual(&(signed(&v, &basis.signature) * v.adjoint() * &basis.parity))
}

/// `||Σ_n s_n φ^n φ^n^T - I||_F` for the duals.
pub fn dual_completeness_residual_signed(basis: &PTBasis) -> f64 {
    let u = basis.dual_matrix();
    linalg::identity_residual(&(signed(&u, &basis.signature) * u.transpose()))
}

/// `||Σ_n [C P conj(φ_n)] φ_n^T - I||_F`.
pub fn cpt_completeness_residual(basis: &PTBasis, c: &CMat) -> f64 {
    let v = basis.vector_matrix();
    let images = c * (&basis.parity * v.conjugate());
    linalg::identity_residual(&(images * v.transpose()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    /// Informational value, never gated.
    Reported,
    NotApplicable(String),
    Refused(String),
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Reported => "reported",
            Status::NotApplicable(_) => "not_applicable",
            Status::Refused(_) => "refused",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Status::NotApplicable(r) | Status::Refused(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Fail | Status::Refused(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
}

impl ResidualEntry {
    fn gated(name: &str, value: f64, tolerance: f64) -> Self {
        let status = if value <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            value: Some(value),
            tolerance: Some(tolerance),
            status,
        }
    }

    fn reported(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            tolerance: None,
            status: Status::Reported,
        }
    }

    fn without_value(name: &str, status: Status) -> Self {
        Self {
            name: name.into(),
            value: None,
            tolerance: None,
            status,
        }
    }
}

/// Whole-spectrum reality verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    Unbroken,
    Broken { pairs: usize },
    Indeterminate(String),
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Unbroken => "unbroken",
            Phase::Broken { .. } => "broken",
            Phase::Indeterminate(_) => "indeterminate",
        }
    }
}

/// One reported low-lying level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub energy: c64,
    pub signature: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub label: String,
    pub dimension: usize,
    pub metric_weight: f64,
    pub timestamp: Option<u64>,
    pub tolerances: Tolerances,
    pub phase: Phase,
    pub max_imag_over_scale: Option<f64>,
    pub levels: Vec<LevelSummary>,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn entry(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.entry(name).and_then(|e| e.value)
    }

    /// True iff no gated entry failed or was refused.
    pub fn passed(&self) -> bool {
        !self.entries.iter().any(|e| e.status.is_failure())
    }
}

/// Names of the entries produced by the whole-spectrum chain.
pub const FULL_CHAIN_ENTRIES: [&str; 13] = [
    "biorthonormality",
    "biorthogonal_completeness",
    "pt_phase",
    "signed_completeness",
    "signed_completeness_operator",
    "dual_completeness",
    "cpt_completeness",
    "pt_gram_deviation",
    "cpt_gram_deviation",
    "c_squared",
    "c_commutator",
    "c_nonhermiticity",
    "c_eigenvalue_deviation",
];

/// Names of the entries produced by the low-lying-level chain.
pub const LEVEL_CHAIN_ENTRIES: [&str; 4] = [
    "levels_biorthonormality",
    "levels_pt_phase",
    "levels_pt_gram_deviation",
    "levels_cpt_gram_deviation",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub tolerances: Tolerances,
    /// Lowest levels summarised individually; clamped to the dimension.
    pub levels: usize,
    pub timestamp: Option<u64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            levels: 6,
            timestamp: None,
        }
    }
}

fn mark_all(entries: &mut Vec<ResidualEntry>, names: &[&str], status: Status) {
    entries.extend(names.iter().map(|n| ResidualEntry::without_value(n, status.clone())));
}

/// Maximum distance between the eigenvalues of `C` (dense solve) and the signature multiset.
pub fn c_eigenvalue_deviation(c: &COperator) -> Result<f64, spectral::SpectralError> {
    let mut ev = spectral::sorted_eigenvalues(&c.matrix)?;
    ev.sort_by(linalg::total_order);
    let mut target: Vec<f64> = c.signature_source.iter().map(|s| s.value()).collect();
    target.sort_by(f64::total_cmp);
    Ok(ev
        .iter()
        .zip(&target)
        .map(|(e, &s)| (e - linalg::real(s)).norm())
        .fold(0.0, f64::max))
}

fn full_chain(t: &OperatorTriple, tol: &Tolerances, entries: &mut Vec<ResidualEntry>) {
    let n = t.dimension() as f64;
    let sys = match spectral::eigendecompose(t, &tol.spectral()) {
        Ok(sys) => sys,
        Err(e) => {
            mark_all(entries, &FULL_CHAIN_ENTRIES, Status::Refused(format!("eigendecompose: {e}")));
            return;
        }
    };
    entries.push(ResidualEntry::gated(
        "biorthonormality",
        sys.biorthonormality_error(),
        tol.bi_tol,
    ));
    entries.push(ResidualEntry::gated(
        "biorthogonal_completeness",
        spectral::dual_completeness_residual(&sys),
        tol.bi_tol,
    ));
    let basis = match ptcore::build_pt_basis(&sys, tol.pt_tol) {
        Ok(b) => b,
        Err(e) => {
            mark_all(entries, &FULL_CHAIN_ENTRIES[2..], Status::Refused(format!("pt basis: {e}")));
            return;
        }
    };
    entries.push(ResidualEntry::gated("pt_phase", ptcore::pt_phase_residual(&basis), tol.pt_tol));
    let c = match ptcore::build_c_operator(&basis) {
        Ok(c) => c,
        Err(e) => {
            mark_all(entries, &FULL_CHAIN_ENTRIES[3..], Status::Refused(format!("charge operator: {e}")));
            return;
        }
    };
    let grams = gram_matrices(&basis, &c.matrix);
    entries.push(ResidualEntry::gated(
        "signed_completeness",
        signed_completeness_residual(&basis),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "signed_completeness_operator",
        signed_completeness_operator_residual(&basis),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "dual_completeness",
        dual_completeness_residual_signed(&basis),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "cpt_completeness",
        cpt_completeness_residual(&basis, &c.matrix),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "pt_gram_deviation",
        grams.pt_deviation(&basis.signature),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "cpt_gram_deviation",
        grams.cpt_deviation(),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated("c_squared", c.squared_residual(), tol.c_tol * n));
    entries.push(ResidualEntry::gated(
        "c_commutator",
        c.commutator_residual(t.hamiltonian()),
        tol.c_tol * n,
    ));
    entries.push(ResidualEntry::reported("c_nonhermiticity", c.nonhermiticity()));
    match c_eigenvalue_deviation(&c) {
        Ok(d) => entries.push(ResidualEntry::gated("c_eigenvalue_deviation", d, tol.pt_tol)),
        Err(e) => entries.push(ResidualEntry::without_value(
            "c_eigenvalue_deviation",
            Status::Refused(e.to_string()),
        )),
    }
}

fn level_chain(
    t: &OperatorTriple,
    levels: usize,
    tol: &Tolerances,
    eigenvalues: Option<&[c64]>,
    entries: &mut Vec<ResidualEntry>,
) -> Vec<LevelSummary> {
    let mut summaries: Vec<LevelSummary> = eigenvalues
        .map(|ev| {
            ev.iter()
                .take(levels)
                .map(|&energy| LevelSummary {
                    energy,
                    signature: None,
                })
                .collect()
        })
        .unwrap_or_default();
    if levels == 0 {
        return summaries;
    }
    if let Some(ev) = eigenvalues {
        if let Some(e) = ev
            .iter()
            .take(levels)
            .find(|&&e| !spectral::is_real_eigenvalue(e, tol.reality_tol))
        {
            mark_all(
                entries,
                &LEVEL_CHAIN_ENTRIES,
                Status::NotApplicable(format!("complex energy {e} among the lowest {levels} levels")),
            );
            return summaries;
        }
    }
    let sys = match spectral::eigendecompose_lowest(t, levels, &tol.spectral()) {
        Ok(s) => s,
        Err(e) => {
            mark_all(entries, &LEVEL_CHAIN_ENTRIES, Status::Refused(format!("eigendecompose: {e}")));
            return summaries;
        }
    };
    entries.push(ResidualEntry::gated(
        "levels_biorthonormality",
        sys.biorthonormality_error(),
        tol.bi_tol,
    ));
    let basis = match ptcore::build_pt_basis(&sys, tol.pt_tol) {
        Ok(b) => b,
        Err(e) => {
            mark_all(entries, &LEVEL_CHAIN_ENTRIES[1..], Status::Refused(format!("pt basis: {e}")));
            return summaries;
        }
    };
    let c = ptcore::charge_operator_on_levels(&basis);
    let grams = gram_matrices(&basis, &c);
    entries.push(ResidualEntry::gated(
        "levels_pt_phase",
        ptcore::pt_phase_residual(&basis),
        tol.pt_tol,
    ));
    entries.push(ResidualEntry::gated(
        "levels_pt_gram_deviation",
        grams.pt_deviation(&basis.signature),
        tol.gram_tol,
    ));
    entries.push(ResidualEntry::gated(
        "levels_cpt_gram_deviation",
        grams.cpt_deviation(),
        tol.gram_tol,
    ));
    summaries = sys
        .pairs
        .iter()
        .zip(&basis.signature)
        .map(|(p, &s)| LevelSummary {
            energy: p.eigenvalue,
            signature: Some(s),
        })
        .collect();
    summaries
}

/// Model checks, reality classification, the whole-spectrum chain when the
/// phase is unbroken, and the low-lying-level chain. Upstream refusals become
/// `refused` entries; stages that do not apply to a broken phase become
/// `not_applicable`.
pub fn full_report(t: &OperatorTriple, opts: &ReportOptions) -> ResidualReport {
    let tol = &opts.tolerances;
    let mut entries = vec![
        ResidualEntry::gated("pt_symmetry", model::check_pt_symmetry(t), tol.pt_tol),
        ResidualEntry::gated(
            "pseudo_hermiticity",
            model::check_pseudo_hermiticity(t),
            tol.pt_tol,
        ),
    ];
    let levels = opts.levels.min(t.dimension());

    let eigenvalues = spectral::sorted_eigenvalues(t.hamiltonian());
    let phase = match &eigenvalues {
        Err(e) => Phase::Indeterminate(e.to_string()),
        Ok(ev) => match spectral::classify_eigenvalues(ev, tol.reality_tol) {
            Ok(c) if c.all_real => Phase::Unbroken,
            Ok(c) => Phase::Broken {
                pairs: c.broken_pairs,
            },
            Err(e) => Phase::Indeterminate(e.to_string()),
        },
    };
    let max_imag = eigenvalues.as_ref().ok().map(|ev| {
        ev.iter()
            .map(|&e| spectral::imag_over_scale(e))
            .fold(0.0, f64::max)
    });
    match &phase {
        Phase::Unbroken => full_chain(t, tol, &mut entries),
        Phase::Broken { pairs } => mark_all(
            &mut entries,
            &FULL_CHAIN_ENTRIES,
            Status::NotApplicable(format!("broken PT phase ({pairs} conjugate pairs)")),
        ),
        Phase::Indeterminate(reason) => mark_all(
            &mut entries,
            &FULL_CHAIN_ENTRIES,
            Status::Refused(format!("classification: {reason}")),
        ),
    }
    let summaries = level_chain(
        t,
        levels,
        tol,
        eigenvalues.as_ref().ok().map(|v| v.as_slice()),
        &mut entries,
    );

    ResidualReport {
        label: t.label().to_string(),
        dimension: t.dimension(),
        metric_weight: t.metric_weight(),
        timestamp: opts.timestamp,
        tolerances: *tol,
        phase,
        max_imag_over_scale: max_imag,
        levels: summaries,
        entries,
    }
}
