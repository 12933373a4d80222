//! The four `ptdual` subcommands as pure functions from a [`RunConfig`] to an
//! [`Outcome`]; `main` only parses arguments and writes the result.

use std::time::{SystemTime, UNIX_EPOCH};

use faer::c64;
use serde_json::json;

use crate::config::{Format, RunConfig, SweepParam, SweepSpec};
use crate::model::{ModelParams, OperatorTriple};
use crate::ptcore::{self, Sign};
use crate::report::{self, csv_field, fmt_float};
use crate::spectral::{self, SpectralError};
use crate::verify::{self, ReportOptions, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// Primary output, written to `--out` or stdout.
    pub body: String,
    /// Diagnostics for stderr.
    pub messages: Vec<String>,
}

impl Outcome {
    fn new(exit_code: i32, body: String) -> Self {
        Self {
            exit_code,
            body,
            messages: Vec::new(),
        }
    }

    fn config_error(err: impl std::fmt::Display) -> Self {
        Self {
            exit_code: EXIT_CONFIG,
            body: String::new(),
            messages: vec![format!("configuration error: {err}")],
        }
    }
}

fn build(cfg: &RunConfig) -> Result<OperatorTriple, Outcome> {
    cfg.model.build().map_err(Outcome::config_error)
}

/// Signatures of the lowest `levels` states, or the stage that refused.
pub fn level_signatures(
    t: &OperatorTriple,
    levels: usize,
    tol: &Tolerances,
) -> Result<Vec<Sign>, String> {
    let sys = spectral::eigendecompose_lowest(t, levels, &tol.spectral())
        .map_err(|e| format!("eigendecomposition refused: {e}"))?;
    if !sys.all_real() {
        return Err("a requested level has a complex eigenvalue".into());
    }
    let basis = ptcore::build_pt_basis(&sys, tol.pt_tol).map_err(|e| format!("PT basis refused: {e}"))?;
    Ok(basis.signature)
}

fn reality_label(e: c64, tol: &Tolerances) -> &'static str {
    if spectral::is_real_eigenvalue(e, tol.reality_tol) {
        "real"
    } else {
        "complex"
    }
}

/// `spectrum`: every eigenvalue, its reality class, and signatures for the
/// requested lowest levels.
pub fn cmd_spectrum(cfg: &RunConfig) -> Outcome {
    let t = match build(cfg) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let tol = &cfg.tolerances;
    let ev = match spectral::sorted_eigenvalues(t.hamiltonian()) {
        Ok(ev) => ev,
        Err(e) => {
            let mut o = Outcome::new(EXIT_REFUSED, String::new());
            o.messages.push(format!("eigenvalue solve refused: {e}"));
            return o;
        }
    };
    let mut messages = Vec::new();
    let mut refused = false;
    let (phase, broken_pairs) = match spectral::classify_eigenvalues(&ev, tol.reality_tol) {
        Ok(c) if c.all_real => ("unbroken".to_string(), 0),
        Ok(c) => ("broken".to_string(), c.broken_pairs),
        Err(e) => {
            refused = true;
            messages.push(format!("classification refused: {e}"));
            ("indeterminate".to_string(), 0)
        }
    };
    let levels = cfg.levels_or_default(t.dimension());
    let signatures = if ev[..levels].iter().all(|&e| spectral::is_real_eigenvalue(e, tol.reality_tol)) {
        match level_signatures(&t, levels, tol) {
            Ok(s) => s,
            Err(e) => {
                refused = true;
                messages.push(e);
                Vec::new()
            }
        }
    } else {
        messages.push("signatures omitted: complex eigenvalue among the requested levels".into());
        Vec::new()
    };

    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!(
                "# model={}\n# dimension={}\n# phase={}\n# complex_pairs={}\nlevel,re,im,reality,signature\n",
                t.label(),
                t.dimension(),
                phase,
                broken_pairs
            );
            for (n, e) in ev.iter().enumerate() {
                let sig = signatures.get(n).map_or(String::new(), |s| s.to_string());
                s.push_str(&format!(
                    "{n},{},{},{},{sig}\n",
                    fmt_float(e.re),
                    fmt_float(e.im),
                    reality_label(*e, tol)
                ));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = ev
                .iter()
                .enumerate()
                .map(|(n, e)| {
                    json!({
                        "level": n,
                        "re": e.re,
                        "im": e.im,
                        "reality": reality_label(*e, tol),
                        "signature": signatures.get(n).map(|s| s.value() as i64),
                    })
                })
                .collect();
            let doc = json!({
                "model": t.label(),
                "dimension": t.dimension(),
                "phase": phase,
                "complex_pairs": broken_pairs,
                "eigenvalues": rows,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
    };
    Outcome {
        exit_code: if refused { EXIT_REFUSED } else { EXIT_OK },
        body,
        messages,
    }
}

fn now() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

/// `verify`: the full residual report; exit 0 iff every gate passed.
pub fn cmd_verify(cfg: &RunConfig) -> Outcome {
    let t = match build(cfg) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let opts = ReportOptions {
        tolerances: cfg.tolerances,
        levels: cfg.levels_or_default(t.dimension()),
        timestamp: if cfg.no_timestamp { None } else { now() },
    };
    let r = verify::full_report(&t, &opts);
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&r),
        Format::Csv => report::to_csv(&r),
    };
    let messages = r
        .entries
        .iter()
        .filter(|e| e.status.is_failure())
        .map(|e| {
            format!(
                "{}: {}{}",
                e.name,
                e.status.as_str(),
                e.status.reason().map_or(String::new(), |r| format!(" ({r})"))
            )
        })
        .collect();
    Outcome {
        exit_code: if r.passed() { EXIT_OK } else { EXIT_GATE_FAILED },
        body,
        messages,
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub all_real: bool,
    pub max_imag_over_scale: f64,
    pub signature: Result<Vec<Sign>, String>,
    pub energies: Vec<c64>,
}

/// A located change of the lowest-level reality flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub lo: f64,
    pub hi: f64,
    pub real_below: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
    pub boundaries: Vec<Boundary>,
}

/// Bracket width at which boundary bisection stops.
pub const BOUNDARY_WIDTH: f64 = 1e-6;

fn lowest_eigenvalues(model: &ModelParams, levels: usize) -> Result<Vec<c64>, String> {
    let t = model.build().map_err(|e| e.to_string())?;
    let mut ev = spectral::sorted_eigenvalues(t.hamiltonian()).map_err(|e: SpectralError| e.to_string())?;
    ev.truncate(levels.min(ev.len()));
    Ok(ev)
}

fn lowest_all_real(ev: &[c64], tol: &Tolerances) -> bool {
    ev.iter().all(|&e| spectral::is_real_eigenvalue(e, tol.reality_tol))
}

pub fn sweep_point(model: &ModelParams, param: f64, levels: usize, tol: &Tolerances) -> Result<SweepPoint, String> {
    let ev = lowest_eigenvalues(model, levels)?;
    let all_real = lowest_all_real(&ev, tol);
    let max_imag_over_scale = ev.iter().map(|&e| spectral::imag_over_scale(e)).fold(0.0, f64::max);
    let signature = if all_real {
        let t = model.build().map_err(|e| e.to_string())?;
        level_signatures(&t, ev.len(), tol)
    } else {
        Err("complex eigenvalue among the requested levels".into())
    };
    Ok(SweepPoint {
        param,
        all_real,
        max_imag_over_scale,
        signature,
        energies: ev,
    })
}

/// Evaluate the grid of sweep points and bisect every interval on which the
/// reality of the lowest `levels` eigenvalues changes.
pub fn run_sweep(
    base: &ModelParams,
    sweep: &SweepSpec,
    levels: usize,
    tol: &Tolerances,
) -> Result<SweepResult, String> {
    let real_at = |p: f64| -> Result<bool, String> {
        let m = sweep.param.apply(base, p).map_err(|e| e.to_string())?;
        Ok(lowest_all_real(&lowest_eigenvalues(&m, levels)?, tol))
    };
    let mut points = Vec::with_capacity(sweep.steps);
    for p in sweep.points() {
        let m = sweep.param.apply(base, p).map_err(|e| e.to_string())?;
        points.push(sweep_point(&m, p, levels, tol)?);
    }
    let mut boundaries = Vec::new();
    for w in points.windows(2) {
        if w[0].all_real == w[1].all_real {
            continue;
        }
        let (mut lo, mut hi) = (w[0].param, w[1].param);
        let lo_real = w[0].all_real;
        while hi - lo > BOUNDARY_WIDTH {
            let mid = 0.5 * (lo + hi);
            if real_at(mid)? == lo_real {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        boundaries.push(Boundary {
            lo,
            hi,
            real_below: lo_real,
        });
    }
    Ok(SweepResult {
        param: sweep.param,
        points,
        boundaries,
    })
}

pub fn sweep_csv(result: &SweepResult, levels: usize) -> String {
    let mut s = String::from("kind,param,value,bracket_lo,bracket_hi,all_real,max_imag_over_scale,signature");
    for n in 0..levels {
        s.push_str(&format!(",e{n}_re,e{n}_im"));
    }
    s.push('\n');
    let name = result.param.name();
    for p in &result.points {
        let sig = match &p.signature {
            Ok(sig) => sig.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
            Err(_) => String::new(),
        };
        s.push_str(&format!(
            "point,{name},{},,,{},{},{}",
            fmt_float(p.param),
            p.all_real,
            fmt_float(p.max_imag_over_scale),
            csv_field(&sig)
        ));
        for n in 0..levels {
            match p.energies.get(n) {
                Some(e) => s.push_str(&format!(",{},{}", fmt_float(e.re), fmt_float(e.im))),
                None => s.push_str(",,"),
            }
        }
        s.push('\n');
    }
    for b in &result.boundaries {
        s.push_str(&format!(
            "boundary,{name},{},{},{},{},,",
            fmt_float(0.5 * (b.lo + b.hi)),
            fmt_float(b.lo),
            fmt_float(b.hi),
            b.real_below
        ));
        s.push_str(&",".repeat(2 * levels));
        s.push('\n');
    }
    s
}

/// `sweep`: lowest-level reality, signatures and energies over a parameter
/// range, with bracketed phase boundaries.
pub fn cmd_sweep(cfg: &RunConfig) -> Outcome {
    let Some(sweep) = cfg.sweep else {
        return Outcome::config_error("sweep needs sweep.param, sweep.from and sweep.to");
    };
    let t = match build(cfg) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let levels = cfg.levels_or_default(t.dimension());
    match run_sweep(&cfg.model, &sweep, levels, &cfg.tolerances) {
        Ok(result) => {
            let mut o = Outcome::new(EXIT_OK, sweep_csv(&result, levels));
            for b in &result.boundaries {
                o.messages.push(format!(
                    "phase boundary for {} in [{}, {}]",
                    sweep.param.name(),
                    b.lo,
                    b.hi
                ));
            }
            o
        }
        Err(e) => {
            let mut o = Outcome::new(EXIT_REFUSED, String::new());
            o.messages.push(format!("sweep refused: {e}"));
            o
        }
    }
}

/// `cmatrix`: the charge operator in the unit-metric embedding and divided
/// by the metric weight (the continuum kernel `C(x, y)`).
pub fn cmd_cmatrix(cfg: &RunConfig) -> Outcome {
    let t = match build(cfg) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let tol = &cfg.tolerances;
    let refuse = |msg: String| {
        let mut o = Outcome::new(EXIT_REFUSED, String::new());
        o.messages.push(msg);
        o
    };
    let sys = match spectral::eigendecompose(&t, &tol.spectral()) {
        Ok(s) => s,
        Err(e) => return refuse(format!("eigendecomposition refused: {e}")),
    };
    match spectral::classify_reality(&sys, tol.reality_tol) {
        Ok(c) if c.all_real => {}
        Ok(c) => {
            return refuse(format!(
                "broken PT phase ({} conjugate pairs): C is not defined",
                c.broken_pairs
            ))
        }
        Err(e) => return refuse(format!("classification refused: {e}")),
    }
    let c = match ptcore::build_pt_basis(&sys, tol.pt_tol).and_then(|b| ptcore::build_c_operator(&b)) {
        Ok(c) => c,
        Err(e) => return refuse(format!("charge operator refused: {e}")),
    };
    let n = t.dimension();
    let w = t.metric_weight();
    let mut s = format!(
        "# dimension={n}\n# model={}\n# metric_weight={}\n# re/im: unit-metric matrix; re_continuum/im_continuum: divided by metric_weight\nrow,col,re,im,re_continuum,im_continuum\n",
        t.label(),
        fmt_float(w)
    );
    for i in 0..n {
        for j in 0..n {
            let z = c.matrix[(i, j)];
            s.push_str(&format!(
                "{i},{j},{},{},{},{}\n",
                fmt_float(z.re),
                fmt_float(z.im),
                fmt_float(z.re / w),
                fmt_float(z.im / w)
            ));
        }
    }
    Outcome::new(EXIT_OK, s)
}
