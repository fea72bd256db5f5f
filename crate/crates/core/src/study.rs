//! Manufactured-solution convergence studies on the unit square.

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::{step_estimates, Constants, EstimatorAccumulator, EstimatorReport, Identity, Variant};
use crate::fem::{FeFunction, FeSpace, ScalarField};
use crate::mesh::{build_uniform_mesh, MAX_LEVEL};
use crate::scheme::{default_theta, glowinski_alpha, initial_state, make_uniform_grid, SchemeParams, StepRecord, Stepper};
use crate::solver::SolverConfig;

pub type Field = Arc<dyn ScalarField>;

/// A manufactured solution with its gradient and forcing.
#[derive(Clone)]
pub struct CaseSpec {
    pub id: u32,
    pub description: String,
    pub exact_u: Field,
    pub exact_grad_u: (Field, Field),
    pub forcing: Field,
    pub u0: Field,
}

impl fmt::Debug for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaseSpec")
            .field("id", &self.id)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

/// `u = sin(aπt) sin(bπx) sin(bπy)`, so `f = u_t + 2b²π² u`.
fn mode_case(id: u32, a: f64, b: f64, description: &str) -> CaseSpec {
    use std::f64::consts::PI;
    let (wa, wb) = (a * PI, b * PI);
    let space = move |x: f64, y: f64| (wb * x).sin() * (wb * y).sin();
    CaseSpec {
        id,
        description: description.to_string(),
        exact_u: Arc::new(move |x: f64, y: f64, t: f64| (wa * t).sin() * space(x, y)),
        exact_grad_u: (
            Arc::new(move |x: f64, y: f64, t: f64| (wa * t).sin() * wb * (wb * x).cos() * (wb * y).sin()),
            Arc::new(move |x: f64, y: f64, t: f64| (wa * t).sin() * wb * (wb * x).sin() * (wb * y).cos()),
        ),
        forcing: Arc::new(move |x: f64, y: f64, t: f64| {
            (wa * (wa * t).cos() + 2.0 * wb * wb * (wa * t).sin()) * space(x, y)
        }),
        u0: Arc::new(|_: f64, _: f64, _: f64| 0.0),
    }
}

/// Cases 1 (smooth), 2 (fast in time) and 3 (fast in space).
pub fn make_case(id: u32) -> Result<CaseSpec> {
    match id {
        1 => Ok(mode_case(1, 1.0, 1.0, "sin(pi t) sin(pi x) sin(pi y)")),
        2 => Ok(mode_case(2, 15.0, 1.0, "sin(15 pi t) sin(pi x) sin(pi y), fast in time")),
        3 => Ok(mode_case(3, 0.5, 10.0, "sin(pi t / 2) sin(10 pi x) sin(10 pi y), fast in space")),
        _ => Err(Error::Usage(format!("unknown case {id}, expected 1, 2 or 3"))),
    }
}

/// `u ≡ 0` with `f ≡ 0`.
pub fn zero_case() -> CaseSpec {
    let zero: Field = Arc::new(|_: f64, _: f64, _: f64| 0.0);
    CaseSpec {
        id: 0,
        description: "u = 0".into(),
        exact_u: zero.clone(),
        exact_grad_u: (zero.clone(), zero.clone()),
        forcing: zero.clone(),
        u0: zero,
    }
}

/// Settings shared by every level of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub constants: Constants,
    pub solver: SolverConfig,
    pub final_time: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let theta = default_theta();
        RunConfig {
            theta,
            alpha1: glowinski_alpha(theta),
            alpha2: glowinski_alpha(theta),
            constants: Constants::default(),
            solver: SolverConfig::default(),
            final_time: 1.0,
        }
    }
}

/// Results of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub case_id: u32,
    pub level: u32,
    /// Grid spacing `2^{-L}`.
    pub h: f64,
    /// Largest element diameter.
    pub diameter: f64,
    pub k: f64,
    pub n_steps: usize,
    /// `max_n ‖u(t^n) − U^n‖`.
    pub max_error: f64,
    pub e_total: f64,
    pub estimators: EstimatorReport,
    pub effectivity_two: f64,
    pub effectivity_three: f64,
    pub max_compact_residual: f64,
}

impl RunReport {
    pub fn final_row(&self) -> &crate::estimators::ReportRow {
        self.estimators.last().expect("a run has at least one step")
    }
}

/// Running `max_n ‖e^n‖` and `Σ k ‖∇e^n‖²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorTracker {
    pub max_l2_sq: f64,
    pub grad_sum: f64,
}

impl ErrorTracker {
    pub fn start(space: &FeSpace, case: &CaseSpec, u0: &FeFunction) -> Self {
        let e0 = space.field_error_l2(case.exact_u.as_ref(), 0.0, u0);
        ErrorTracker {
            max_l2_sq: e0 * e0,
            grad_sum: 0.0,
        }
    }

    pub fn push(&mut self, space: &FeSpace, case: &CaseSpec, record: &StepRecord) {
        let t = record.t_new();
        let e = space.field_error_l2(case.exact_u.as_ref(), t, record.u_new());
        let (gx, gy) = &case.exact_grad_u;
        let g = space.field_error_h1(gx.as_ref(), gy.as_ref(), t, record.u_new());
        self.max_l2_sq = self.max_l2_sq.max(e * e);
        self.grad_sum += record.k * g * g;
    }

    pub fn max_error(&self) -> f64 {
        self.max_l2_sq.sqrt()
    }

    pub fn e_total(&self) -> f64 {
        (self.max_l2_sq + self.grad_sum).sqrt()
    }
}

/// `(max_n ‖e^n‖, e_total)` for a complete trajectory starting at `u0`.
pub fn error_metrics(space: &FeSpace, case: &CaseSpec, u0: &FeFunction, records: &[StepRecord]) -> (f64, f64) {
    let mut tr = ErrorTracker::start(space, case, u0);
    for r in records {
        tr.push(space, case, r);
    }
    (tr.max_error(), tr.e_total())
}

/// `log(E_{i+1}/E_i) / log(h_{i+1}/h_i)`.
pub fn eoc(values: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if values.len() != h.len() || values.len() < 2 {
        return Err(Error::Usage(format!(
            "eoc needs two equally long sequences of length >= 2, got {} and {}",
            values.len(),
            h.len()
        )));
    }
    if values.iter().chain(h).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Usage("eoc needs positive finite values".into()));
    }
    Ok((0..values.len() - 1)
        .map(|i| (values[i + 1] / values[i]).ln() / (h[i + 1] / h[i]).ln())
        .collect())
}

/// Runs the scheme and all estimators on level `level` with `k = h = 2^{-L}`.
pub fn run_level(case: &CaseSpec, level: u32, cfg: &RunConfig) -> Result<RunReport> {
    cfg.constants.validate()?;
    let mesh = build_uniform_mesh(level)?;
    let h = mesh.spacing();
    let diameter = mesh.max_diameter();
    let space = FeSpace::new(mesh, cfg.solver)?;
    let n_steps = 1usize << level;
    let grid = make_uniform_grid(n_steps, cfg.final_time)?;
    let params = SchemeParams::new(cfg.theta, cfg.alpha1, cfg.alpha2, grid)?;
    let f = case.forcing.as_ref();

    let u0 = initial_state(&space, case.u0.as_ref())?;
    let mut acc = EstimatorAccumulator::new(space.field_error_l2(case.u0.as_ref(), 0.0, &u0));
    let mut errors = ErrorTracker::start(&space, case, &u0);
    let mut prev: Option<StepRecord> = None;
    let mut max_residual = 0.0f64;

    let mut stepper = Stepper::new(&space, params.clone(), f);
    stepper.run_with(&u0, |rec| {
        let est = step_estimates(&space, &rec, prev.as_ref(), &params, f, &cfg.constants, &Identity)
            .map_err(|e| e.at_step("estimators", rec.n))?;
        acc.push(est)?;
        errors.push(&space, case, &rec);
        max_residual = max_residual.max(rec.compact_residual);
        prev = Some(rec);
        Ok(())
    })?;

    let estimators = acc.finalize();
    let last = *estimators.last().expect("at least one step");
    let max_error = errors.max_error();
    let ratio = |total: f64| if max_error > 0.0 { total / max_error } else { f64::NAN };
    Ok(RunReport {
        case_id: case.id,
        level,
        h,
        diameter,
        k: params.grid().step(1),
        n_steps,
        max_error,
        e_total: errors.e_total(),
        effectivity_two: ratio(last.total(Variant::TwoLevel)),
        effectivity_three: ratio(last.total(Variant::ThreeLevel)),
        estimators,
        max_compact_residual: max_residual,
    })
}

/// Parses `A:B` (or a single level `A`).
pub fn parse_levels(s: &str) -> Result<RangeInclusive<u32>> {
    let bad = || Error::Usage(format!("levels must look like A:B, got {s:?}"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let a = s.trim().parse().map_err(|_| bad())?;
            (a, a)
        }
    };
    if a > b || b > MAX_LEVEL || a == 0 {
        return Err(Error::Usage(format!("levels {a}:{b} must satisfy 1 <= A <= B <= {MAX_LEVEL}")));
    }
    Ok(a..=b)
}

/// Runs every level in order, handing each finished report to `sink` before starting the next.
pub fn run_study(
    case: &CaseSpec,
    levels: RangeInclusive<u32>,
    cfg: &RunConfig,
    mut sink: impl FnMut(&RunReport) -> Result<()>,
) -> Result<Vec<RunReport>> {
    let mut out = Vec::new();
    for level in levels {
        let r = run_level(case, level, cfg)?;
        sink(&r)?;
        out.push(r);
    }
    Ok(out)
}

/// One pass/fail line of a study check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn eoc_of(runs: &[&RunReport], value: impl Fn(&RunReport) -> f64) -> Vec<f64> {
    let v: Vec<f64> = runs.iter().map(|r| value(r)).collect();
    let h: Vec<f64> = runs.iter().map(|r| r.h).collect();
    eoc(&v, &h).unwrap_or_else(|_| vec![f64::NAN; v.len().saturating_sub(1)])
}

fn range_check(name: &str, eocs: &[f64], lo: f64, hi: f64) -> Check {
    let passed = !eocs.is_empty() && eocs.iter().all(|e| *e >= lo && *e <= hi);
    let list: Vec<String> = eocs.iter().map(|e| format!("{e:.2}")).collect();
    Check {
        name: name.into(),
        passed,
        detail: format!("EOC [{}] expected in [{lo}, {hi}]", list.join(", ")),
    }
}

/// The named estimator columns whose orders a study checks.
pub fn estimator_columns() -> Vec<(&'static str, fn(&RunReport) -> f64)> {
    vec![
        ("E_ell", |r| r.final_row().e_ell),
        ("E_rec_two", |r| r.final_row().e_rec_two),
        ("E_rec_three", |r| r.final_row().e_rec_three),
        ("E_T1_two", |r| r.final_row().e_t1_two),
        ("E_T1_three", |r| r.final_row().e_t1_three),
        ("E_T2", |r| r.final_row().e_t2),
        ("E_T3", |r| r.final_row().e_t3),
        ("E_S2", |r| r.final_row().e_s2),
    ]
}

/// What [`study_checks`] asserts.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckPolicy {
    /// Orders are checked on EOCs whose finer level is at least this.
    pub min_order_level: u32,
    /// Bound orders from above as well as below.
    pub two_sided: bool,
    /// Levels over which effectivity indices may drift by at most a factor 2.
    pub effectivity_levels: Option<RangeInclusive<u32>>,
}

impl CheckPolicy {
    /// Case 1 is held to the asymptotic orders from level 4; the oscillatory
    /// cases are under-resolved on coarse levels and only checked from below
    /// on the finest pair.
    pub fn for_case(case_id: u32) -> Self {
        match case_id {
            1 => CheckPolicy {
                min_order_level: 4,
                two_sided: true,
                effectivity_levels: Some(4..=7),
            },
            2 => CheckPolicy {
                min_order_level: 7,
                two_sided: false,
                effectivity_levels: Some(4..=7),
            },
            _ => CheckPolicy {
                min_order_level: 7,
                two_sided: false,
                effectivity_levels: None,
            },
        }
    }
}

/// Largest over smallest value.
pub fn drift(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Order, ordering and reliability checks over a finished study.
pub fn study_checks(runs: &[RunReport], policy: &CheckPolicy) -> Vec<Check> {
    let mut out = Vec::new();
    let all: Vec<&RunReport> = runs.iter().collect();
    let fine: Vec<&RunReport> = runs.iter().filter(|r| r.level + 1 >= policy.min_order_level).collect();
    let upper = |hi: f64| if policy.two_sided { hi } else { f64::INFINITY };
    if fine.len() >= 2 {
        out.push(range_check("max error order", &eoc_of(&fine, |r| r.max_error), 1.85, upper(2.15)));
        out.push(range_check("total error order", &eoc_of(&fine, |r| r.e_total), 0.9, upper(1.1)));
        let lo = if policy.two_sided { 1.8 } else { 1.85 };
        for (name, f) in estimator_columns() {
            out.push(range_check(&format!("{name} order"), &eoc_of(&fine, f), lo, upper(2.2)));
        }
        for (name, f) in [
            ("E_S1_two", (|r| r.final_row().e_s1_two) as fn(&RunReport) -> f64),
            ("E_S1_three", |r| r.final_row().e_s1_three),
        ] {
            out.push(range_check(&format!("{name} order"), &eoc_of(&fine, f), 2.5, f64::INFINITY));
        }
    }
    let ordered = all.iter().all(|r| r.final_row().e_t1_three < r.final_row().e_t1_two);
    out.push(Check {
        name: "three-level time estimator below two-level".into(),
        passed: ordered,
        detail: all
            .iter()
            .map(|r| format!("L{}: {:.3e} vs {:.3e}", r.level, r.final_row().e_t1_three, r.final_row().e_t1_two))
            .collect::<Vec<_>>()
            .join("; "),
    });
    for v in [Variant::TwoLevel, Variant::ThreeLevel] {
        let worst = all
            .iter()
            .map(|r| r.final_row().bound(v) / r.max_error)
            .fold(f64::INFINITY, f64::min);
        out.push(Check {
            name: format!("{v:?} bound above error"),
            passed: all.iter().all(|r| r.final_row().bound(v) >= r.max_error),
            detail: format!("smallest bound/error ratio {worst:.3e}"),
        });
    }
    if let Some(levels) = &policy.effectivity_levels {
        let sel: Vec<&RunReport> = runs.iter().filter(|r| levels.contains(&r.level)).collect();
        if sel.len() >= 2 {
            for (v, ei) in [
                (Variant::TwoLevel, sel.iter().map(|r| r.effectivity_two).collect::<Vec<_>>()),
                (Variant::ThreeLevel, sel.iter().map(|r| r.effectivity_three).collect()),
            ] {
                let d = drift(&ei);
                out.push(Check {
                    name: format!("{v:?} effectivity drift"),
                    passed: d <= 2.0,
                    detail: format!("max/min effectivity {d:.3} over levels {}..={}", levels.start(), levels.end()),
                });
            }
        }
    }
    out
}
