//! Discrete PT-symmetric Hamiltonians together with their parity operator.
//!
//! Time reversal is entrywise complex conjugation in the position
//! representation, so a triple `(H, P, w)` is all the later stages need.
//! Grid models use index reversal for `P` and the spacing `dx` as metric weight.

use faer::{c64, Mat};
use thiserror::Error;

use crate::linalg::{self, CMat};

/// Tolerance for the involution/self-adjointness checks on user supplied parity.
pub const PARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("grid point count must be odd so that x = 0 is a node (parity center), got N = {0}")]
    EvenPointCount(usize),
    #[error("grid needs at least 3 points, got N = {0}")]
    TooFewPoints(usize),
    #[error("grid half width must be positive and finite, got L = {0}")]
    BadHalfWidth(f64),
    #[error(
        "exponent nu = {0} outside [0, 2): eigenfunctions of x^2 (ix)^nu stop decaying on the real \
         line and would need a complex integration contour"
    )]
    ExponentOutOfRange(f64),
    #[error("matrix dimension mismatch: {0}")]
    Dimension(String),
    #[error("parity is not an involution: ||P^2 - I||_F = {0:.3e}")]
    NotInvolutive(f64),
    #[error("parity is not self-adjoint: ||P - P^H||_F = {0:.3e}")]
    NotSelfAdjoint(f64),
    #[error("parity must be real, max |Im P| = {0:.3e}")]
    ComplexParity(f64),
    #[error("metric weight must be positive and finite, got {0}")]
    BadMetricWeight(f64),
}

/// Uniform symmetric grid on `[-L, L]` with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    point_count: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, point_count: usize) -> Result<Self, ModelError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(ModelError::BadHalfWidth(half_width));
        }
        if point_count < 3 {
            return Err(ModelError::TooFewPoints(point_count));
        }
        if point_count.is_multiple_of(2) {
            return Err(ModelError::EvenPointCount(point_count));
        }
        Ok(Self {
            half_width,
            point_count,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.point_count - 1) as f64
    }

    pub fn center(&self) -> usize {
        (self.point_count - 1) / 2
    }

    /// Nodes computed as signed multiples of `dx` around the center so that
    /// `x_i + x_{N-1-i} == 0` holds bitwise.
    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.spacing();
        let c = self.center() as i64;
        (0..self.point_count as i64)
            .map(|i| (i - c) as f64 * dx)
            .collect()
    }
}

/// Hamiltonian, parity and metric weight: the discrete stand-in for `(H, P, T)`.
#[derive(Debug, Clone)]
pub struct OperatorTriple {
    hamiltonian: CMat,
    parity: CMat,
    metric_weight: f64,
    label: String,
}

impl OperatorTriple {
    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn parity(&self) -> &CMat {
        &self.parity
    }

    pub fn metric_weight(&self) -> f64 {
        self.metric_weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

/// Which family a run is built from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Grid { grid: GridSpec, nu: f64 },
    Matrix2 { r: f64, s: f64, theta: f64 },
    Explicit { hamiltonian: CMat, parity: CMat, metric_weight: f64 },
}

impl ModelParams {
    pub fn build(&self) -> Result<OperatorTriple, ModelError> {
        match self {
            ModelParams::Grid { grid, nu } => build_grid_hamiltonian(grid, *nu),
            ModelParams::Matrix2 { r, s, theta } => Ok(build_matrix_model(*r, *s, *theta)),
            ModelParams::Explicit {
                hamiltonian,
                parity,
                metric_weight,
            } => build_explicit(hamiltonian.clone(), parity.clone(), *metric_weight),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            ModelParams::Grid { .. } => "grid",
            ModelParams::Matrix2 { .. } => "matrix2",
            ModelParams::Explicit { .. } => "explicit",
        }
    }
}

/// `V(x) = x^2 exp(nu Log(ix))` on the principal branch, `V(0) = 0`.
///
/// Evaluated at `|x|` and conjugated for negative nodes, which is exactly the
/// principal-branch value there since `Log(-i|x|) = conj(Log(i|x|))`.
pub fn potential(x: f64, nu: f64) -> c64 {
    if x == 0.0 {
        return linalg::ZERO;
    }
    let a = x.abs();
    let v = (c64::new(0.0, a).ln() * nu).exp() * (a * a);
    if x < 0.0 {
        v.conj()
    } else {
        v
    }
}

/// Index-reversal permutation.
pub fn reversal(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| {
        if i + j == n - 1 {
            linalg::ONE
        } else {
            linalg::ZERO
        }
    })
}

/// `H = -d^2/dx^2 + x^2 (ix)^nu` with three-point differences and Dirichlet
/// walls at `±L` (units `hbar = 1`, `m = 1/2`).
pub fn build_grid_hamiltonian(grid: &GridSpec, nu: f64) -> Result<OperatorTriple, ModelError> {
    if !(0.0..2.0).contains(&nu) || !nu.is_finite() {
        return Err(ModelError::ExponentOutOfRange(nu));
    }
    let n = grid.point_count();
    let dx = grid.spacing();
    let nodes = grid.nodes();
    let kin = 1.0 / (dx * dx);
    let hamiltonian = Mat::from_fn(n, n, |i, j| {
        if i == j {
            linalg::real(2.0 * kin) + potential(nodes[i], nu)
        } else if i.abs_diff(j) == 1 {
            linalg::real(-kin)
        } else {
            linalg::ZERO
        }
    });
    Ok(OperatorTriple {
        hamiltonian,
        parity: reversal(n),
        metric_weight: dx,
        label: format!("grid(nu={nu},L={},N={n})", grid.half_width()),
    })
}

/// The standard two-level PT model `[[r e^{iθ}, s], [s, r e^{-iθ}]]` with swap parity.
pub fn build_matrix_model(r: f64, s: f64, theta: f64) -> OperatorTriple {
    let diag = c64::from_polar(r, theta);
    let hamiltonian = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => diag,
        (1, 1) => diag.conj(),
        _ => linalg::real(s),
    });
    OperatorTriple {
        hamiltonian,
        parity: reversal(2),
        metric_weight: 1.0,
        label: format!("matrix2(r={r},s={s},theta={theta})"),
    }
}

pub fn build_explicit(
    hamiltonian: CMat,
    parity: CMat,
    metric_weight: f64,
) -> Result<OperatorTriple, ModelError> {
    let n = hamiltonian.nrows();
    if hamiltonian.ncols() != n {
        return Err(ModelError::Dimension(format!(
            "hamiltonian is {}x{}",
            n,
            hamiltonian.ncols()
        )));
    }
    if n == 0 {
        return Err(ModelError::Dimension("empty hamiltonian".into()));
    }
    if parity.nrows() != n || parity.ncols() != n {
        return Err(ModelError::Dimension(format!(
            "hamiltonian is {n}x{n} but parity is {}x{}",
            parity.nrows(),
            parity.ncols()
        )));
    }
    if !(metric_weight.is_finite() && metric_weight > 0.0) {
        return Err(ModelError::BadMetricWeight(metric_weight));
    }
    let imag = linalg::max_abs_imag(&parity);
    if imag > PARITY_TOL {
        return Err(ModelError::ComplexParity(imag));
    }
    let involution = linalg::identity_residual(&(&parity * &parity));
    if involution > PARITY_TOL {
        return Err(ModelError::NotInvolutive(involution));
    }
    let hermitian = linalg::distance(&parity, &linalg::adjoint(&parity));
    if hermitian > PARITY_TOL {
        return Err(ModelError::NotSelfAdjoint(hermitian));
    }
    Ok(OperatorTriple {
        label: format!("explicit(N={n})"),
        hamiltonian,
        parity,
        metric_weight,
    })
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// `||P conj(H) P - H||_F / ||H||_F`; zero iff `[H, PT] = 0`.
pub fn check_pt_symmetry(t: &OperatorTriple) -> f64 {
    let p = &t.parity;
    let conj_h = linalg::conjugate(&t.hamiltonian);
    let lhs = p * &conj_h * p;
    relative(
        linalg::distance(&lhs, &t.hamiltonian),
        linalg::frobenius(t.hamiltonian.as_ref()),
    )
}

/// `||P H P - H^H||_F / ||H||_F`; zero iff `H` is `P`-pseudo-Hermitian.
pub fn check_pseudo_hermiticity(t: &OperatorTriple) -> f64 {
    let p = &t.parity;
    let lhs = p * &t.hamiltonian * p;
    relative(
        linalg::distance(&lhs, &linalg::adjoint(&t.hamiltonian)),
        linalg::frobenius(t.hamiltonian.as_ref()),
    )
}
