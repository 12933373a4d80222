//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's eigensolver or PT machinery.
#![allow(dead_code)]

use faer::{c64, Col, Mat};
use proptest::prelude::*;

pub type CMat = Mat<c64>;

pub fn cr(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Roots of the characteristic polynomial of `[[r e^{iθ}, s], [s, r e^{-iθ}]]`,
/// `E = r cosθ ± sqrt(s² - r² sin²θ)`, lower root first.
pub fn two_level_energies(r: f64, s: f64, theta: f64) -> [c64; 2] {
    let disc = c64::new(s * s - (r * theta.sin()).powi(2), 0.0).sqrt();
    let mid = cr(r * theta.cos());
    [mid - disc, mid + disc]
}

/// Hand eigenvector `(s, E - r e^{iθ})` of the two-level matrix.
pub fn two_level_vector(r: f64, s: f64, theta: f64, e: c64) -> [c64; 2] {
    [cr(s), e - c64::from_polar(r, theta)]
}

/// Signature of the PT-normalised multiple of `v`. If `P conj(v) = e^{2iα} v`
/// then `φ = e^{iα} v` is PT-invariant and `(φ, φ) = e^{2iα} Σ v_i²`.
pub fn pt_sign(v: &[c64], parity: &CMat) -> f64 {
    let n = v.len();
    let k = (0..n).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap();
    let pv_k: c64 = (0..n).map(|j| parity[(k, j)] * v[j].conj()).sum();
    let phase = pv_k / v[k];
    let sq: c64 = v.iter().map(|x| x * x).sum();
    (phase * sq).re.signum()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (n, k, m) = (a.nrows(), a.ncols(), b.ncols());
    Mat::from_fn(n, m, |i, j| (0..k).map(|l| a[(i, l)] * b[(l, j)]).sum())
}

pub fn frob(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn diff(a: &CMat, b: &CMat) -> f64 {
    frob(&Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]))
}

pub fn eye(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { cr(1.0) } else { cr(0.0) })
}

pub fn reversal(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i + j == n - 1 { cr(1.0) } else { cr(0.0) })
}

/// `C = Σ_n s_n Π_n` with the spectral projectors written as Lagrange
/// polynomials in `H`; needs only the eigenvalues, no eigenvectors.
pub fn charge_from_projectors(h: &CMat, energies: &[c64], signs: &[f64]) -> CMat {
    let n = h.nrows();
    let mut c = Mat::from_fn(n, n, |_, _| cr(0.0));
    for (a, (&ea, &sa)) in energies.iter().zip(signs).enumerate() {
        let mut proj = eye(n);
        for (b, &eb) in energies.iter().enumerate() {
            if a == b {
                continue;
            }
            let factor = Mat::from_fn(n, n, |i, j| {
                let hij = h[(i, j)] - if i == j { eb } else { cr(0.0) };
                hij / (ea - eb)
            });
            proj = matmul(&proj, &factor);
        }
        c = Mat::from_fn(n, n, |i, j| c[(i, j)] + proj[(i, j)] * sa);
    }
    c
}

/// `V(x) = x² (ix)^ν` on the principal branch, written as a polar form.
pub fn potential(x: f64, nu: f64) -> c64 {
    if x == 0.0 {
        return cr(0.0);
    }
    let arg = if x > 0.0 { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 };
    c64::from_polar(x.abs().powf(2.0 + nu), nu * arg)
}

fn rk4_to_origin(e: c64, nu: f64, from: f64, step: f64) -> (c64, c64) {
    let steps = (from.abs() / step).round() as usize;
    let h = -from / steps as f64;
    let rhs = |x: f64, y: (c64, c64)| (y.1, (potential(x, nu) - e) * y.0);
    let mut y = (cr(0.0), cr(1.0));
    let mut x = from;
    for _ in 0..steps {
        let k1 = rhs(x, y);
        let k2 = rhs(x + h / 2.0, (y.0 + k1.0 * (h / 2.0), y.1 + k1.1 * (h / 2.0)));
        let k3 = rhs(x + h / 2.0, (y.0 + k2.0 * (h / 2.0), y.1 + k2.1 * (h / 2.0)));
        let k4 = rhs(x + h, (y.0 + k3.0 * h, y.1 + k3.1 * h));
        y.0 += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
        y.1 += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
        x += h;
        let m = y.0.norm().max(y.1.norm());
        if m > 1e100 {
            y = (y.0 / m, y.1 / m);
        }
    }
    (y.0, y.1)
}

/// Wronskian mismatch at `x = 0` of the ODE solutions `-ψ'' + V ψ = E ψ`
/// started from `ψ(±L) = 0`.
pub fn continuum_mismatch(e: c64, nu: f64, half_width: f64, step: f64) -> c64 {
    let l = rk4_to_origin(e, nu, -half_width, step);
    let r = rk4_to_origin(e, nu, half_width, step);
    l.0 * r.1 - l.1 * r.0
}

/// Same matching on the three-point recurrence
/// `ψ_{i+1} = (2 + dx² (V_i - E)) ψ_i - ψ_{i-1}` with `ψ_{-1} = ψ_N = 0`.
pub fn recurrence_mismatch(e: c64, nu: f64, half_width: f64, points: usize) -> c64 {
    let dx = 2.0 * half_width / (points - 1) as f64;
    let c = (points - 1) / 2;
    let x = |i: usize| (i as f64 - c as f64) * dx;
    let coef = |i: usize| cr(2.0) + (potential(x(i), nu) - e) * (dx * dx);
    let rescale = |a: &mut c64, b: &mut c64| {
        let m = a.norm().max(b.norm());
        if m > 1e100 {
            *a /= m;
            *b /= m;
        }
    };
    // From the left wall up to (c, c+1).
    let (mut prev, mut cur) = (cr(0.0), cr(1.0));
    for i in 0..=c {
        let next = coef(i) * cur - prev;
        prev = cur;
        cur = next;
        rescale(&mut prev, &mut cur);
    }
    let (l_c, l_c1) = (prev, cur);
    // From the right wall down to (c+1, c).
    let (mut prev, mut cur) = (cr(0.0), cr(1.0));
    for i in (c + 1..points).rev() {
        let next = coef(i) * cur - prev;
        prev = cur;
        cur = next;
        rescale(&mut prev, &mut cur);
    }
    let (r_c1, r_c) = (prev, cur);
    l_c * r_c1 - l_c1 * r_c
}

/// Complex secant iteration on `f` from two starting guesses.
pub fn secant(f: impl Fn(c64) -> c64, mut a: c64, mut b: c64) -> c64 {
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..60 {
        if fb == fa {
            break;
        }
        let next = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = next;
        fb = f(b);
        if (b - a).norm() <= 1e-14 * b.norm().max(1.0) {
            break;
        }
    }
    b
}

/// `A = R + i Q` with `R` real symmetric, `P R P = R`, `Q` real symmetric,
/// `P Q P = -Q`, `P` the reversal. Then `A = Aᵀ`, `P conj(A) P = A` and
/// `P A P = A†` by construction.
pub fn pseudo_hermitian(n: usize, x: &[f64], y: &[f64], gamma: f64) -> CMat {
    let p = |i: usize| n - 1 - i;
    let sym = |m: &[f64], i: usize, j: usize| 0.5 * (m[i * n + j] + m[j * n + i]);
    Mat::from_fn(n, n, |i, j| {
        let r = 0.5 * (sym(x, i, j) + sym(x, p(i), p(j)));
        let q = 0.5 * (sym(y, i, j) - sym(y, p(i), p(j)));
        c64::new(r, gamma * q)
    })
}

/// Dimension 4..=12 with entries and a non-Hermiticity strength.
pub fn pseudo_hermitian_strategy() -> impl Strategy<Value = CMat> {
    (4usize..=12)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(-1.0f64..1.0, n * n),
                0.0f64..0.6,
            )
        })
        .prop_map(|(n, x, y, g)| {
            // Spread the mirror pairs along the diagonal and split each pair
            // through the anti-diagonal so the Hermitian part is well separated.
            let mut x = x;
            for i in 0..n {
                x[i * n + i] += 3.0 * i.min(n - 1 - i) as f64;
                x[i * n + (n - 1 - i)] += 1.0;
            }
            pseudo_hermitian(n, &x, &y, g)
        })
}

pub fn col(v: &[c64]) -> Col<c64> {
    Col::from_fn(v.len(), |i| v[i])
}
