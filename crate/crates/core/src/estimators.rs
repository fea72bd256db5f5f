//! A posteriori error estimators for the θ-scheme.
//!
//! Per-step quantities are gathered in [`StepEstimates`] by [`step_estimates`];
//! [`EstimatorAccumulator`] turns them into running sums and maxima and the
//! two composite upper bounds (one-interval reconstruction `w_n`, two-interval
//! reconstruction `w̃_n`).

use std::io::Write;

use crate::error::{Error, Result};
use crate::fem::{FeFunction, FeSpace, Samples, ScalarField};
use crate::quadrature::GAUSS3_UNIT;
use crate::scheme::{SchemeParams, StepRecord};

/// Interpolation and stability constants entering the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c1: f64,
    pub c11: f64,
    pub big_c11: f64,
    pub big_c12: f64,
    pub big_c22: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c1: 1.0,
            c11: 1.0,
            big_c11: 1.0,
            big_c12: 1.0,
            big_c22: 1.0,
        }
    }
}

impl Constants {
    /// Sets a constant by its command-line name: `c1`, `c11`, `C11`, `C12` or `C22`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("constant {name} must be positive, got {value}")));
        }
        let slot = match name {
            "c1" => &mut self.c1,
            "c11" => &mut self.c11,
            "C11" => &mut self.big_c11,
            "C12" => &mut self.big_c12,
            "C22" => &mut self.big_c22,
            _ => return Err(Error::Config(format!("unknown constant {name:?}"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("c11", self.c11),
            ("C11", self.big_c11),
            ("C12", self.big_c12),
            ("C22", self.big_c22),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Elliptic estimator from a precomputed `(−Δ_h) v`.
pub fn eta_with_lap(space: &FeSpace, v: &FeFunction, lap_v: &FeFunction, c: &Constants) -> f64 {
    c.big_c12 * space.weighted_element_norm(lap_v, 2.0) + c.big_c22 * space.jump_norm(v, 1.5)
}

/// `η(v) = C12 ‖h² Δ_h v‖ + C22 ‖h^{3/2} J[∇v]‖`.
pub fn eta(space: &FeSpace, v: &FeFunction, c: &Constants) -> Result<f64> {
    Ok(eta_with_lap(space, v, &space.discrete_laplacian(v)?, c))
}

/// Coefficients of the endpoint and interior stage values in a correction term
/// `(1 − θ){α[X(t_a) − x_a] + β[X(t_b) − x_b]}`, `X` the linear interpolant of the endpoint
/// values. Ordered as the stage times.
pub fn correction_weights(theta: f64, alpha: f64) -> [f64; 4] {
    let beta = 1.0 - alpha;
    let s = 1.0 - theta;
    [
        s * (alpha * (1.0 - theta) + beta * theta),
        -s * alpha,
        -s * beta,
        s * (alpha * theta + beta * (1.0 - theta)),
    ]
}

fn stage_combination(w: [f64; 4], v: &[FeFunction; 4]) -> FeFunction {
    FeFunction::combination(&[(w[0], &v[0]), (w[1], &v[1]), (w[2], &v[2]), (w[3], &v[3])])
}

/// Linear interpolant in time of the endpoint discrete Laplacians.
pub fn theta_at(record: &StepRecord, t: f64) -> FeFunction {
    let l1 = (t - record.t_prev()) / record.k;
    FeFunction::combination(&[(1.0 - l1, record.lap_prev()), (l1, record.lap_new())])
}

/// `ξ_Θ`, built with `(α₁, β₁)`.
pub fn xi_theta(record: &StepRecord, params: &SchemeParams) -> FeFunction {
    stage_combination(correction_weights(params.theta(), params.alpha1()), &record.lap)
}

/// `P₀ ξ_φ`, built with `(α₂, β₂)` from the projected stage loads.
pub fn proj_xi_phi(record: &StepRecord, params: &SchemeParams) -> FeFunction {
    stage_combination(correction_weights(params.theta(), params.alpha2()), &record.proj_f)
}

/// `ξ_φ` at the degree-4 quadrature points.
pub fn xi_phi_samples(record: &StepRecord, params: &SchemeParams) -> Samples {
    let w = correction_weights(params.theta(), params.alpha2());
    let s = &record.f_samples;
    Samples::combination(&[(w[0], &s[0]), (w[1], &s[1]), (w[2], &s[2]), (w[3], &s[3])])
}

/// `φ`, the linear interpolant in time of `f` over `[t^{n−1}, t^n]`.
pub fn phi_field<'a>(f: &'a dyn ScalarField, t0: f64, t1: f64) -> impl ScalarField + 'a {
    move |x: f64, y: f64, t: f64| {
        let l1 = (t - t0) / (t1 - t0);
        (1.0 - l1) * f.eval(x, y, t0) + l1 * f.eval(x, y, t1)
    }
}

/// `ξ_φ` as a field in space for the step with stage times `times`.
pub fn xi_phi_field<'a>(f: &'a dyn ScalarField, times: [f64; 4], params: &SchemeParams) -> impl Fn(f64, f64) -> f64 + 'a {
    let w = correction_weights(params.theta(), params.alpha2());
    move |x, y| (0..4).map(|i| w[i] * f.eval(x, y, times[i])).sum()
}

/// `φ̂ = φ − ξ_φ` on the step with stage times `times`.
pub fn phi_hat_field<'a>(f: &'a dyn ScalarField, times: [f64; 4], params: &SchemeParams) -> impl ScalarField + 'a {
    let phi = phi_field(f, times[0], times[3]);
    let xi = xi_phi_field(f, times, params);
    move |x: f64, y: f64, t: f64| phi.eval(x, y, t) - xi(x, y)
}

/// Relative L² residual of the compact form
/// `(U^n − U^{n−1})/k + Θ̂(t^{n−1/2}) − P₀φ̂(t^{n−1/2})`.
pub fn compact_form_residual(space: &FeSpace, record: &StepRecord, params: &SchemeParams) -> f64 {
    let diff = FeFunction::combination(&[(1.0 / record.k, record.u_new()), (-1.0 / record.k, record.u_prev())]);
    let theta_mid = FeFunction::combination(&[(0.5, record.lap_prev()), (0.5, record.lap_new())]);
    let phi_mid = FeFunction::combination(&[(0.5, &record.proj_f[0]), (0.5, &record.proj_f[3])]);
    let xt = xi_theta(record, params);
    let xp = proj_xi_phi(record, params);
    let r = FeFunction::combination(&[(1.0, &diff), (1.0, &theta_mid), (-1.0, &xt), (-1.0, &phi_mid), (1.0, &xp)]);
    let scale = [&diff, &theta_mid, &xt, &phi_mid, &xp]
        .iter()
        .map(|v| space.l2_norm(v))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        space.l2_norm(&r) / scale
    }
}

/// `w_n = ((−Δ_h)U^n − (−Δ_h)U^{n−1})/k − (P₀f^n − P₀f^{n−1})/k`.
pub fn w_two_level(record: &StepRecord) -> FeFunction {
    let k = record.k;
    FeFunction::combination(&[
        (1.0 / k, record.lap_new()),
        (-1.0 / k, record.lap_prev()),
        (-1.0 / k, &record.proj_f[3]),
        (1.0 / k, &record.proj_f[0]),
    ])
}

/// Output of the two-interval reconstruction.
#[derive(Debug, Clone)]
pub struct ThreeLevel {
    pub w: FeFunction,
    pub z: FeFunction,
    pub y: FeFunction,
}

/// `w̃_n`, `z_n` and `y_n` from steps `n` and `n − 1`.
pub fn w_three_level(record: &StepRecord, prev: &StepRecord) -> Result<ThreeLevel> {
    if record.n < 2 {
        return Err(Error::Usage(format!(
            "the two-interval reconstruction needs n >= 2, got {}",
            record.n
        )));
    }
    if prev.n + 1 != record.n || prev.u_new() != record.u_prev() {
        return Err(Error::Usage(format!(
            "records {} and {} are not consecutive",
            prev.n, record.n
        )));
    }
    let (k, kp) = (record.k, prev.k);
    let r = kp / k;
    let c = -2.0 / (k + kp);
    let w = FeFunction::combination(&[
        (c / k, record.u_new()),
        (-c / k - c / kp, record.u_prev()),
        (c / kp, prev.u_prev()),
    ]);
    let z = FeFunction::combination(&[
        (0.5 * r, record.lap_new()),
        (-0.5 * (1.0 + r), record.lap_prev()),
        (0.5, prev.lap_prev()),
    ]);
    let y = FeFunction::combination(&[
        (0.5 * r, &record.proj_f[3]),
        (-0.5 * (1.0 + r), &record.proj_f[0]),
        (0.5, &prev.proj_f[0]),
    ]);
    Ok(ThreeLevel { w, z, y })
}

/// `γ = (k²/√30)(c₁|w|₁ + C11 ‖h Δ_h w‖)` from a precomputed `(−Δ_h) w`.
pub fn gamma(space: &FeSpace, w: &FeFunction, lap_w: &FeFunction, k: f64, c: &Constants) -> f64 {
    k * k / 30f64.sqrt() * (c.c1 * space.h1_seminorm(w) + c.big_c11 * space.weighted_element_norm(lap_w, 1.0))
}

/// `δ = C12 ‖h² (Δ_h U^n − Δ_h U^{n−1})/k‖ + C22 ‖h^{3/2} J[∇U^n − ∇U^{n−1}]‖`.
pub fn delta(space: &FeSpace, record: &StepRecord, c: &Constants) -> f64 {
    let k = record.k;
    let dlap = FeFunction::combination(&[(1.0 / k, record.lap_new()), (-1.0 / k, record.lap_prev())]);
    let du = record.u_new() - record.u_prev();
    c.big_c12 * space.weighted_element_norm(&dlap, 2.0) + c.big_c22 * space.jump_norm(&du, 1.5)
}

/// Transfer of finite-element functions from the previous mesh to the current one.
pub trait Transfer {
    fn apply(&self, space: &FeSpace, v: &FeFunction) -> FeFunction;
}

/// The transfer on a fixed mesh.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Transfer for Identity {
    fn apply(&self, _space: &FeSpace, v: &FeFunction) -> FeFunction {
        v.clone()
    }
}

/// `β = ‖(Π − I)(Δ_h U^{n−1} + U^{n−1}/k)‖`.
pub fn beta_coarsening(space: &FeSpace, record: &StepRecord, transfer: &dyn Transfer) -> f64 {
    let g = FeFunction::combination(&[(-1.0, record.lap_prev()), (1.0 / record.k, record.u_prev())]);
    let moved = transfer.apply(space, &g);
    space.l2_norm(&(&moved - &g))
}

/// `ζ₁ = (1/k) ∫ ‖f − φ‖` over the step, by three-point Gauss in time.
pub fn zeta1(space: &FeSpace, record: &StepRecord, f: &dyn ScalarField) -> f64 {
    let (nodes, weights) = GAUSS3_UNIT;
    let (s0, s1) = (&record.f_samples[0], &record.f_samples[3]);
    nodes
        .iter()
        .zip(weights)
        .map(|(&s, w)| {
            let fs = space.sample(f, record.t_prev() + s * record.k);
            let d = Samples::combination(&[(1.0, &fs), (-(1.0 - s), s0), (-s, s1)]);
            w * space.sample_l2_norm(&d)
        })
        .sum()
}

/// `ζ₂ = c₁₁ max{‖h(I − P₀)(f^{n−1} + ξ_φ)‖, ‖h(I − P₀)(f^n + ξ_φ)‖}`.
pub fn zeta2(space: &FeSpace, record: &StepRecord, xi_phi: &Samples, p0_xi_phi: &FeFunction, c: &Constants) -> f64 {
    let one_end = |i: usize| {
        let g = Samples::combination(&[(1.0, &record.f_samples[i]), (1.0, xi_phi)]);
        let pg = &record.proj_f[i] + p0_xi_phi;
        space.weighted_sample_error(&g, Some(&pg), 1.0)
    };
    c.c11 * one_end(0).max(one_end(3))
}

/// The quantities depending on a time reconstruction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReconstructionEstimates {
    pub gamma: f64,
    pub eta_w: f64,
    pub norm_w: f64,
}

impl ReconstructionEstimates {
    pub fn compute(space: &FeSpace, w: &FeFunction, k: f64, c: &Constants) -> Result<Self> {
        let lap_w = space.discrete_laplacian(w)?;
        Ok(ReconstructionEstimates {
            gamma: gamma(space, w, &lap_w, k, c),
            eta_w: eta_with_lap(space, w, &lap_w, c),
            norm_w: space.l2_norm(w),
        })
    }
}

/// Everything step `n` contributes to the accumulated estimators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEstimates {
    pub n: usize,
    pub k: f64,
    pub t: f64,
    /// `η(U^n)`.
    pub eta_u: f64,
    /// `η(U^0)`, only on the first step.
    pub eta_u0: Option<f64>,
    pub two_level: ReconstructionEstimates,
    /// `None` on the first step.
    pub three_level: Option<ReconstructionEstimates>,
    pub norm_xi_theta: f64,
    pub norm_xi_phi: f64,
    pub norm_p0_xi_phi: f64,
    pub delta: f64,
    pub beta: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub norm_z: Option<f64>,
    pub norm_y: Option<f64>,
}

impl StepEstimates {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let two = [self.two_level.gamma, self.two_level.eta_w, self.two_level.norm_w];
        let three = self.three_level.map(|r| [r.gamma, r.eta_w, r.norm_w]).unwrap_or_default();
        [
            self.eta_u,
            self.eta_u0.unwrap_or(0.0),
            self.norm_xi_theta,
            self.norm_xi_phi,
            self.norm_p0_xi_phi,
            self.delta,
            self.beta,
            self.zeta1,
            self.zeta2,
            self.norm_z.unwrap_or(0.0),
            self.norm_y.unwrap_or(0.0),
        ]
        .into_iter()
        .chain(two)
        .chain(three)
    }
}

/// Computes the estimates of step `record.n`; `prev` is step `n − 1` when `n ≥ 2`.
pub fn step_estimates(
    space: &FeSpace,
    record: &StepRecord,
    prev: Option<&StepRecord>,
    params: &SchemeParams,
    f: &dyn ScalarField,
    c: &Constants,
    transfer: &dyn Transfer,
) -> Result<StepEstimates> {
    let k = record.k;
    let xi_phi = xi_phi_samples(record, params);
    let p0_xi_phi = proj_xi_phi(record, params);
    let two_level = ReconstructionEstimates::compute(space, &w_two_level(record), k, c)?;
    let (three_level, norm_z, norm_y) = match (record.n, prev) {
        (1, _) => (None, None, None),
        (_, Some(prev)) => {
            let tl = w_three_level(record, prev)?;
            (
                Some(ReconstructionEstimates::compute(space, &tl.w, k, c)?),
                Some(space.l2_norm(&tl.z)),
                Some(space.l2_norm(&tl.y)),
            )
        }
        (n, None) => return Err(Error::Usage(format!("step {n} needs the record of step {}", n - 1))),
    };
    Ok(StepEstimates {
        n: record.n,
        k,
        t: record.t_new(),
        eta_u: eta_with_lap(space, record.u_new(), record.lap_new(), c),
        eta_u0: (record.n == 1).then(|| eta_with_lap(space, record.u_prev(), record.lap_prev(), c)),
        two_level,
        three_level,
        norm_xi_theta: space.l2_norm(&xi_theta(record, params)),
        norm_xi_phi: space.sample_l2_norm(&xi_phi),
        norm_p0_xi_phi: space.l2_norm(&p0_xi_phi),
        delta: delta(space, record, c),
        beta: beta_coarsening(space, record, transfer),
        zeta1: zeta1(space, record, f),
        zeta2: zeta2(space, record, &xi_phi, &p0_xi_phi, c),
        norm_z,
        norm_y,
    })
}

/// Which time reconstruction a total or bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    TwoLevel,
    ThreeLevel,
}

/// Accumulated estimators after step `m`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReportRow {
    pub m: usize,
    pub t: f64,
    pub e_t1_two: f64,
    pub e_t1_three: f64,
    pub e_t2: f64,
    pub e_t3: f64,
    pub e_s1_two: f64,
    pub e_s1_three: f64,
    pub e_s2: f64,
    pub e_c: f64,
    pub e_d1: f64,
    pub e_d2: f64,
    pub e_ell: f64,
    pub e_rec_two: f64,
    pub e_rec_three: f64,
    pub e_m1: f64,
    pub total_two: f64,
    pub total_three: f64,
    pub bound_two: f64,
    pub bound_three: f64,
}

impl ReportRow {
    pub const HEADER: [&'static str; 20] = [
        "m",
        "t",
        "E_T1_two",
        "E_T1_three",
        "E_T2",
        "E_T3",
        "E_S1_two",
        "E_S1_three",
        "E_S2",
        "E_C",
        "E_D1",
        "E_D2",
        "E_ell",
        "E_rec_two",
        "E_rec_three",
        "E_m1",
        "total_two",
        "total_three",
        "bound_two",
        "bound_three",
    ];

    /// Every column after `m`, in header order.
    pub fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.e_t1_two,
            self.e_t1_three,
            self.e_t2,
            self.e_t3,
            self.e_s1_two,
            self.e_s1_three,
            self.e_s2,
            self.e_c,
            self.e_d1,
            self.e_d2,
            self.e_ell,
            self.e_rec_two,
            self.e_rec_three,
            self.e_m1,
            self.total_two,
            self.total_three,
            self.bound_two,
            self.bound_three,
        ]
    }

    pub fn total(&self, v: Variant) -> f64 {
        match v {
            Variant::TwoLevel => self.total_two,
            Variant::ThreeLevel => self.total_three,
        }
    }

    pub fn bound(&self, v: Variant) -> f64 {
        match v {
            Variant::TwoLevel => self.bound_two,
            Variant::ThreeLevel => self.bound_three,
        }
    }
}

/// Running estimator values, one row per completed step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorReport {
    pub initial_error: f64,
    pub rows: Vec<ReportRow>,
}

impl EstimatorReport {
    pub fn last(&self) -> Option<&ReportRow> {
        self.rows.last()
    }

    /// Row after step `m`.
    pub fn row(&self, m: usize) -> Option<&ReportRow> {
        self.rows.get(m.checked_sub(1)?)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", ReportRow::HEADER.join(","))?;
        for r in &self.rows {
            write!(out, "{}", r.m)?;
            for v in r.values() {
                write!(out, ",{}", crate::report::sci(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Sums {
    t1_two_sq: f64,
    t1_three_sq: f64,
    t2: f64,
    t3: f64,
    s1_two: f64,
    s1_three: f64,
    s2: f64,
    c: f64,
    d1: f64,
    d2: f64,
    ell: f64,
    rec_two: f64,
    rec_three: f64,
    m1: f64,
}

/// Folds [`StepEstimates`] in step order into an [`EstimatorReport`].
#[derive(Debug, Clone)]
pub struct EstimatorAccumulator {
    sums: Sums,
    last: Option<StepEstimates>,
    report: EstimatorReport,
}

impl EstimatorAccumulator {
    /// `initial_error` bounds `‖u⁰ − R⁰u⁰‖` up to the elliptic term `η(U⁰)`,
    /// which is added when the first step arrives.
    pub fn new(initial_error: f64) -> Self {
        EstimatorAccumulator {
            sums: Sums::default(),
            last: None,
            report: EstimatorReport {
                initial_error,
                rows: Vec::new(),
            },
        }
    }

    pub fn push(&mut self, est: StepEstimates) -> Result<ReportRow> {
        let expected = self.last.as_ref().map_or(1, |l| l.n + 1);
        if est.n != expected {
            return Err(Error::Usage(format!("expected estimates of step {expected}, got step {}", est.n)));
        }
        if let Some(bad) = est.values().find(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Consistency(format!("step {} produced estimator value {bad}", est.n)));
        }
        if est.n == 1 {
            let eta0 = est.eta_u0.ok_or_else(|| Error::Usage("first step lacks eta(U^0)".into()))?;
            self.report.initial_error += eta0;
            self.sums.ell = eta0;
        }
        let k = est.k;
        let s = &mut self.sums;
        let two = est.two_level;
        let three = est.three_level.unwrap_or(two);

        s.t1_two_sq += k * two.gamma * two.gamma;
        s.t1_three_sq += k * three.gamma * three.gamma;
        s.t2 += 2.0 * k * est.norm_xi_theta;
        s.s1_two += k * k / 2.0 * two.eta_w;
        s.s1_three += k * k / 2.0 * three.eta_w;
        s.s2 += 2.0 * k * est.delta;
        s.c += 2.0 * k * est.beta;
        s.d1 += 2.0 * k * (est.zeta1 + est.norm_xi_phi);
        s.d2 += k.sqrt() * est.zeta2;
        s.ell = s.ell.max(est.eta_u);
        s.rec_two = s.rec_two.max(k * k / 8.0 * (two.eta_w + two.norm_w));
        s.rec_three = s.rec_three.max(k * k / 8.0 * (three.eta_w + three.norm_w));
        if let (Some(prev), Some(z), Some(y)) = (&self.last, est.norm_z, est.norm_y) {
            let kp = prev.k;
            s.t3 += k * k / (2.0 * (k + kp)) * z;
            s.m1 += k
                * (k / (2.0 * (k + kp)) * y
                    + k / 4.0 * (est.norm_xi_theta + prev.norm_xi_theta)
                    + k / 4.0 * (est.norm_p0_xi_phi + prev.norm_p0_xi_phi));
        }

        let (t1_two, t1_three) = (s.t1_two_sq.sqrt(), s.t1_three_sq.sqrt());
        let init = std::f64::consts::SQRT_2 * self.report.initial_error;
        let row = ReportRow {
            m: est.n,
            t: est.t,
            e_t1_two: t1_two,
            e_t1_three: t1_three,
            e_t2: s.t2,
            e_t3: s.t3,
            e_s1_two: s.s1_two,
            e_s1_three: s.s1_three,
            e_s2: s.s2,
            e_c: s.c,
            e_d1: s.d1,
            e_d2: s.d2,
            e_ell: s.ell,
            e_rec_two: s.rec_two,
            e_rec_three: s.rec_three,
            e_m1: s.m1,
            total_two: t1_two + s.t2 + s.s1_two + s.s2 + s.ell + s.rec_two,
            total_three: t1_three + s.t2 + s.t3 + s.s1_three + s.s2 + s.ell + s.rec_three,
            bound_two: init
                + t1_two
                + (s.t2 + s.s1_two + s.s2 + s.c + s.d1).hypot(s.d2)
                + s.rec_two
                + s.ell,
            bound_three: init
                + t1_three
                + (s.t2 + s.t3 + s.s1_three + s.s2 + s.c + s.d1 + s.m1).hypot(s.d2)
                + s.rec_three
                + s.ell,
        };
        self.report.rows.push(row);
        self.last = Some(est);
        Ok(row)
    }

    pub fn report(&self) -> &EstimatorReport {
        &self.report
    }

    pub fn finalize(self) -> EstimatorReport {
        self.report
    }
}

/// Largest defect of the four-point rule
/// `(βθ, α(1−θ), β(1−θ), αθ)` at `(0, θ, 1−θ, 1)` on `φ = 1` and `φ = s`.
pub fn quadrature_exactness_check(theta: f64, alpha: f64) -> f64 {
    let beta = 1.0 - alpha;
    let tt = 1.0 - 2.0 * theta;
    let w = [beta * theta, alpha * (theta + tt), beta * (theta + tt), alpha * theta];
    let x = [0.0, theta, 1.0 - theta, 1.0];
    let d0 = (w.iter().sum::<f64>() - 1.0).abs();
    let d1 = (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() - 0.5).abs();
    d0.max(d1)
}
