//! Adaptive integration of `u'' + (N-1)/r u' + f(u) = 0`, `u(0) = alpha`,
//! `u'(0) = 0`, with event location on the dense output.
//!
//! The state is `(w, v)` with `u = anchor + w` and `v = u'`. Starting close to
//! a knot of the model (typically `gamma_star`) with the knot as anchor keeps
//! the tiny offset exact; the integrator drops the anchor once the solution
//! has moved away from it.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dop853 as tab;
use crate::nonlinearity::{GammaChain, NonlinearityModel, Profile};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial value {0} lies outside the domain")]
    OutOfDomain(f64),
    #[error("step size underflow at r = {0}")]
    StepFailure(f64),
    #[error("r = {0} lies outside the integrated range")]
    OutOfRange(f64),
}

/// Initial value written as `anchor + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialValue<T> {
    pub anchor: T,
    pub offset: T,
}

impl<T: Real> InitialValue<T> {
    pub fn plain(alpha: T) -> Self {
        Self {
            anchor: T::zero(),
            offset: alpha,
        }
    }

    /// `anchor - gap`, with the gap kept exactly.
    pub fn below(anchor: T, gap: T) -> Self {
        Self {
            anchor,
            offset: -gap,
        }
    }

    pub fn value(&self) -> T {
        self.anchor + self.offset
    }
}

impl<T: Real> From<T> for InitialValue<T> {
    fn from(alpha: T) -> Self {
        Self::plain(alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig<T> {
    pub n: u32,
    pub alpha: InitialValue<T>,
    pub rel_tol: T,
    pub abs_tol: T,
    pub r_max: T,
    pub eps_zero: T,
    pub eps_double: T,
    pub k_cap: usize,
    /// Values of `u` whose crossings are recorded as events.
    pub levels: Vec<T>,
    pub max_steps: usize,
}

impl<T: Real> ProblemConfig<T> {
    pub fn new(n: u32, alpha: impl Into<InitialValue<T>>) -> Self {
        Self {
            n,
            alpha: alpha.into(),
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-9),
            r_max: T::lit(200.0),
            eps_zero: T::lit(1e-10),
            eps_double: T::lit(1e-6),
            k_cap: 50,
            levels: Vec::new(),
            max_steps: 500_000,
        }
    }

    pub fn with_alpha(&self, alpha: impl Into<InitialValue<T>>) -> Self {
        Self {
            alpha: alpha.into(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |m: &str| Err(IntegrateError::InvalidConfig(m.to_string()));
        if self.n < 2 {
            return bad("N must be at least 2");
        }
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero()) {
            return bad("tolerances must be positive");
        }
        if !(self.r_max > T::zero()) {
            return bad("r_max must be positive");
        }
        if !(self.eps_zero > T::zero() && self.eps_double >= self.eps_zero) {
            return bad("thresholds must satisfy eps_double >= eps_zero > 0");
        }
        if self.k_cap < 1 {
            return bad("k_cap must be at least 1");
        }
        if !self.alpha.value().is_finite() {
            return bad("initial value must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind<T> {
    SimpleZero { uprime_sign: i8 },
    Extremum { value: T },
    DoubleZero,
    LevelCrossing { level: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event<T> {
    #[serde(flatten)]
    pub kind: EventKind<T>,
    pub r: T,
    pub u: T,
    pub uprime: T,
    #[serde(rename = "I")]
    pub energy: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination<T> {
    DoubleZeroAt { r: T },
    ConvergedTo { ell: T },
    TrappedInWell { well: i32 },
    ReachedRmax,
    OscillationFault { sign_changes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<T> {
    pub r: T,
    pub u: T,
    pub uprime: T,
}

/// State at radius `r` in anchored form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<T> {
    pub anchor: T,
    pub w: T,
    pub v: T,
}

impl<T: Real> State<T> {
    pub fn u(&self) -> T {
        self.anchor + self.w
    }
}

#[derive(Debug, Clone)]
struct DenseStep<T> {
    r0: T,
    h: T,
    anchor: T,
    cont: [[T; 2]; 8],
}

impl<T: Real> DenseStep<T> {
    #[inline]
    fn eval(&self, theta: T) -> [T; 2] {
        let t1 = T::one() - theta;
        let c = &self.cont;
        let mut y = [T::zero(); 2];
        for (i, yi) in y.iter_mut().enumerate() {
            let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * theta) * t1) * theta;
            *yi = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * t1) * theta) * t1) * theta;
        }
        y
    }

    fn state(&self, theta: T) -> State<T> {
        let [w, v] = self.eval(theta);
        State {
            anchor: self.anchor,
            w,
            v,
        }
    }

    fn end(&self) -> T {
        self.r0 + self.h
    }
}

/// Truncated Taylor expansion used on `[0, r0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Series<T> {
    anchor: T,
    w0: T,
    a2: T,
    a4: T,
    r0: T,
}

impl<T: Real> Series<T> {
    fn state(&self, r: T) -> State<T> {
        let r2 = r * r;
        State {
            anchor: self.anchor,
            w: self.w0 - self.a2 * r2 + self.a4 * r2 * r2,
            v: -T::lit(2.0) * self.a2 * r + T::lit(4.0) * self.a4 * r2 * r,
        }
    }
}

/// Sampled solution with dense output, events and termination certificate.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub config: ProblemConfig<T>,
    pub samples: Vec<Sample<T>>,
    pub events: Vec<Event<T>>,
    pub termination: Termination<T>,
    /// `I(0) = F(alpha)`.
    pub i0: T,
    pub r_end: T,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    series: Series<T>,
    steps: Vec<DenseStep<T>>,
    model: Arc<NonlinearityModel<T>>,
}

fn sign_split<T: Real>(a: T, b: T) -> bool {
    (a < T::zero()) != (b < T::zero())
}

fn refine<T: Real>(g: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let mut glo = g(lo);
    let two = T::lit(2.0);
    for _ in 0..64 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if sign_split(glo, gm) {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    (lo + hi) / two
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Moving toward 0 (after `r = 0` or after an extremum).
    Heading,
    /// Moving away from 0 (after a zero).
    Away,
}

#[derive(Debug, Clone, Copy)]
enum Candidate<T> {
    Zero(T),
    Extremum(T),
    Level(usize, T),
}

impl<T: Real> Candidate<T> {
    fn theta(&self) -> T {
        match *self {
            Candidate::Zero(t) | Candidate::Extremum(t) | Candidate::Level(_, t) => t,
        }
    }
}

/// Integrator bound to one model; reusable across many initial values.
#[derive(Debug, Clone)]
pub struct Shooter<T> {
    model: Arc<NonlinearityModel<T>>,
    chain: GammaChain<T>,
    zeros: Vec<T>,
    double_zero_speed: T,
}

const SUBSAMPLES: usize = 8;

impl<T: Real> Shooter<T> {
    pub fn new(model: &NonlinearityModel<T>) -> Self {
        let depth = model.origin_well_depth();
        Self {
            chain: model.gamma_chain(),
            zeros: model.isolated_zeros(),
            double_zero_speed: (T::lit(2.0) * depth).sqrt(),
            model: Arc::new(model.clone()),
        }
    }

    pub fn model(&self) -> &NonlinearityModel<T> {
        &self.model
    }

    pub fn chain(&self) -> &GammaChain<T> {
        &self.chain
    }

    /// `|u'|` below which a zero counts as a double zero.
    pub fn double_zero_threshold(&self, cfg: &ProblemConfig<T>) -> T {
        cfg.eps_double * self.double_zero_speed
    }

    #[inline]
    fn rhs(&self, n1: T, r: T, anchor: T, y: &[T; 2]) -> [T; 2] {
        [y[1], -n1 * y[1] / r - self.model.f_at(anchor, y[0])]
    }

    fn energy(&self, s: &State<T>) -> T {
        s.v * s.v / T::lit(2.0) + self.model.big_f_at(s.anchor, s.w)
    }

    /// Series start: `(r0, u(r0), u'(r0))` with `r0` chosen from the tolerance.
    pub fn series_start(&self, cfg: &ProblemConfig<T>) -> (T, T, T) {
        let s = self.series(cfg, None);
        let st = s.state(s.r0);
        (s.r0, st.u(), st.v)
    }

    /// Series state at a prescribed small radius.
    pub fn series_at(&self, cfg: &ProblemConfig<T>, r: T) -> (T, T) {
        let st = self.series(cfg, Some(r)).state(r);
        (st.u(), st.v)
    }

    fn abs_tol(&self, cfg: &ProblemConfig<T>) -> T {
        if cfg.alpha.anchor.is_zero() {
            cfg.abs_tol
        } else {
            cfg.abs_tol * cfg.alpha.offset.abs().min(T::one())
        }
    }

    fn series(&self, cfg: &ProblemConfig<T>, r0: Option<T>) -> Series<T> {
        let n = T::lit(cfg.n as f64);
        let (anchor, w0) = (cfg.alpha.anchor, cfg.alpha.offset);
        let f0 = self.model.f_at(anchor, w0);
        let df0 = self.model.df_at(anchor, w0);
        let a2 = f0 / (T::lit(2.0) * n);
        let a4 = f0 * df0 / (T::lit(8.0) * n * (n + T::lit(2.0)));
        let cap = T::lit(1e-2);
        let r0 = r0.unwrap_or_else(|| {
            if a2.is_zero() {
                cap
            } else {
                let atol = self.abs_tol(cfg);
                (atol / (a2.abs() * df0.abs().max(T::one()))).powf(T::lit(0.25)).min(cap)
            }
        });
        Series {
            anchor,
            w0,
            a2,
            a4,
            r0,
        }
    }

    pub fn integrate(&self, cfg: &ProblemConfig<T>) -> Result<Trajectory<T>, IntegrateError> {
        cfg.validate()?;
        let alpha = cfg.alpha.value();
        if !self.model.in_domain(alpha) {
            return Err(IntegrateError::OutOfDomain(alpha.to_f64_lossy()));
        }
        let n1 = T::lit(cfg.n as f64 - 1.0);
        let rtol = cfg.rel_tol;
        let atol = self.abs_tol(cfg);
        let series = self.series(cfg, None);
        let i0 = self.model.big_f_at(cfg.alpha.anchor, cfg.alpha.offset);
        let scale = alpha.abs().max(T::one());
        let dz_speed = self.double_zero_threshold(cfg);
        let conv_tol = cfg.eps_zero * scale;

        let mut traj = Trajectory {
            config: cfg.clone(),
            samples: Vec::new(),
            events: Vec::new(),
            termination: Termination::ReachedRmax,
            i0,
            r_end: series.r0,
            accepted_steps: 0,
            rejected_steps: 0,
            series,
            steps: Vec::new(),
            model: Arc::clone(&self.model),
        };
        traj.samples.push(Sample {
            r: T::zero(),
            u: alpha,
            uprime: T::zero(),
        });
        let s0 = series.state(series.r0);
        traj.samples.push(Sample {
            r: series.r0,
            u: s0.u(),
            uprime: s0.v,
        });

        let mut anchor = s0.anchor;
        let mut r = series.r0;
        let mut y = [s0.w, s0.v];
        let mut k = [[T::zero(); 2]; 16];
        k[0] = self.rhs(n1, r, anchor, &y);

        let sk_of = |y: &[T; 2]| atol + rtol * y[0].abs().max(y[1].abs());
        let h_max = T::one();
        let mut h = {
            let sk = sk_of(&y);
            let dnf = (k[0][0] / sk).powi(2) + (k[0][1] / sk).powi(2);
            let dny = (y[0] / sk).powi(2) + (y[1] / sk).powi(2);
            let mut h = if dnf <= T::lit(1e-10) || dny <= T::lit(1e-10) {
                T::lit(1e-6)
            } else {
                (dny / dnf).sqrt() * T::lit(0.01)
            };
            h = h.min(h_max);
            let y1 = [y[0] + h * k[0][0], y[1] + h * k[0][1]];
            let f1 = self.rhs(n1, r + h, anchor, &y1);
            let der2 = (((f1[0] - k[0][0]) / sk).powi(2) + ((f1[1] - k[0][1]) / sk).powi(2)).sqrt() / h;
            let der12 = der2.max(dnf.sqrt());
            let h1 = if der12 <= T::lit(1e-15) {
                (h * T::lit(1e-3)).max(T::lit(1e-6))
            } else {
                (T::lit(0.01) / der12).powf(T::lit(1.0 / 8.0))
            };
            (T::lit(100.0) * h).min(h1).min(h_max)
        };

        let mut phase = Phase::Heading;
        let mut zero_count = 0usize;
        let mut conv_since: Option<(T, T, T)> = None;
        let mut last_rejected = false;
        let safe = T::lit(0.9);
        let (facc1, facc2) = (T::lit(1.0 / 0.33), T::lit(1.0 / 6.0));
        let expo = T::lit(1.0 / 8.0);
        let c = |i: usize| T::lit(tab::C[i]);

        loop {
            if traj.accepted_steps + traj.rejected_steps >= cfg.max_steps {
                return Err(IntegrateError::StepFailure(r.to_f64_lossy()));
            }
            let mut last = false;
            if r + h >= cfg.r_max {
                h = cfg.r_max - r;
                last = true;
            }
            if h <= T::lit(16.0) * T::epsilon() * r.max(T::one()) {
                return Err(IntegrateError::StepFailure(r.to_f64_lossy()));
            }

            // stages 2..12
            for s in 1..12 {
                let mut yy = y;
                for &(j, a) in tab::A[s] {
                    let a = T::lit(a) * h;
                    yy[0] = yy[0] + a * k[j][0];
                    yy[1] = yy[1] + a * k[j][1];
                }
                k[s] = self.rhs(n1, r + c(s) * h, anchor, &yy);
            }
            let mut incr = [T::zero(); 2];
            for &(j, b) in &tab::B {
                let b = T::lit(b);
                incr[0] = incr[0] + b * k[j][0];
                incr[1] = incr[1] + b * k[j][1];
            }
            let y_new = [y[0] + h * incr[0], y[1] + h * incr[1]];
            let sk = atol + rtol * y[0].abs().max(y[1].abs()).max(y_new[0].abs()).max(y_new[1].abs());
            let (mut err, mut err2) = (T::zero(), T::zero());
            for i in 0..2 {
                let mut e2 = incr[i];
                for &(j, b) in &tab::BHH {
                    e2 = e2 - T::lit(b) * k[j][i];
                }
                let mut e = T::zero();
                for &(j, b) in &tab::ER {
                    e = e + T::lit(b) * k[j][i];
                }
                err2 = err2 + (e2 / sk).powi(2);
                err = err + (e / sk).powi(2);
            }
            let mut deno = err + T::lit(0.01) * err2;
            if deno <= T::zero() {
                deno = T::one();
            }
            let err = h.abs() * err * (T::one() / (deno * T::lit(2.0))).sqrt();
            if !err.is_finite() {
                h = h * T::lit(0.1);
                traj.rejected_steps += 1;
                last_rejected = true;
                continue;
            }
            let fac11 = err.powf(expo);
            let fac = facc2.max(facc1.min(fac11 / safe));
            let mut h_new = h / fac;

            if err > T::one() {
                h = h / facc1.min(fac11 / safe);
                traj.rejected_steps += 1;
                last_rejected = true;
                continue;
            }

            // accepted
            traj.accepted_steps += 1;
            let r_new = if last { cfg.r_max } else { r + h };
            k[12] = self.rhs(n1, r_new, anchor, &y_new);
            for s in 13..16 {
                let mut yy = y;
                for &(j, a) in tab::A[s] {
                    let a = T::lit(a) * h;
                    yy[0] = yy[0] + a * k[j][0];
                    yy[1] = yy[1] + a * k[j][1];
                }
                k[s] = self.rhs(n1, r + c(s) * h, anchor, &yy);
            }
            let mut cont = [[T::zero(); 2]; 8];
            for i in 0..2 {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[12][i] - bspl;
                for (row, d) in tab::D.iter().enumerate() {
                    let mut acc = T::zero();
                    for (j, &dj) in d.iter().enumerate() {
                        if dj != 0.0 {
                            acc = acc + T::lit(dj) * k[j][i];
                        }
                    }
                    cont[4 + row][i] = h * acc;
                }
            }
            let step = DenseStep {
                r0: r,
                h: r_new - r,
                anchor,
                cont,
            };

            // events inside the step
            let mut cands: Vec<Candidate<T>> = Vec::new();
            let mut prev = step.state(T::zero());
            prev.w = y[0];
            prev.v = y[1];
            for j in 1..=SUBSAMPLES {
                let (ta, tb) = (T::count(j - 1) / T::count(SUBSAMPLES), T::count(j) / T::count(SUBSAMPLES));
                let cur = if j == SUBSAMPLES {
                    State {
                        anchor,
                        w: y_new[0],
                        v: y_new[1],
                    }
                } else {
                    step.state(tb)
                };
                if sign_split(prev.u(), cur.u()) {
                    cands.push(Candidate::Zero(refine(|t| step.state(t).u(), ta, tb)));
                }
                if sign_split(prev.v, cur.v) {
                    cands.push(Candidate::Extremum(refine(|t| step.eval(t)[1], ta, tb)));
                }
                for (l, &level) in cfg.levels.iter().enumerate() {
                    if sign_split(prev.u() - level, cur.u() - level) {
                        cands.push(Candidate::Level(l, refine(|t| step.state(t).u() - level, ta, tb)));
                    }
                }
                prev = cur;
            }
            cands.sort_by(|a, b| a.theta().partial_cmp(&b.theta()).expect("finite theta"));

            let mut stop: Option<(Termination<T>, T, State<T>)> = None;
            for cand in cands {
                let theta = cand.theta();
                let at = step.r0 + theta * step.h;
                let st = step.state(theta);
                let energy = self.energy(&st);
                let push = |kind: EventKind<T>, st: &State<T>, events: &mut Vec<Event<T>>| {
                    events.push(Event {
                        kind,
                        r: at,
                        u: st.u(),
                        uprime: st.v,
                        energy,
                    })
                };
                match cand {
                    Candidate::Zero(_) => {
                        if st.v.abs() <= dz_speed {
                            push(EventKind::DoubleZero, &st, &mut traj.events);
                            stop = Some((Termination::DoubleZeroAt { r: at }, at, st));
                            break;
                        }
                        let sign = if st.v > T::zero() { 1 } else { -1 };
                        push(EventKind::SimpleZero { uprime_sign: sign }, &st, &mut traj.events);
                        zero_count += 1;
                        phase = Phase::Away;
                        if zero_count > cfg.k_cap {
                            stop = Some((Termination::OscillationFault { sign_changes: zero_count }, at, st));
                            break;
                        }
                    }
                    Candidate::Extremum(_) => {
                        let value = st.u();
                        if phase == Phase::Away {
                            push(EventKind::Extremum { value }, &st, &mut traj.events);
                            phase = Phase::Heading;
                            continue;
                        }
                        if value.abs() <= cfg.eps_zero * scale {
                            push(EventKind::DoubleZero, &st, &mut traj.events);
                            stop = Some((Termination::DoubleZeroAt { r: at }, at, st));
                            break;
                        }
                        push(EventKind::Extremum { value }, &st, &mut traj.events);
                        if let Some(well) = self.chain.well_of(value) {
                            if energy < self.chain.trap_level(well) {
                                stop = Some((Termination::TrappedInWell { well }, at, st));
                                break;
                            }
                        }
                        phase = Phase::Away;
                    }
                    Candidate::Level(l, _) => {
                        push(EventKind::LevelCrossing { level: l }, &st, &mut traj.events);
                    }
                }
            }
            traj.steps.push(step);
            if let Some((term, at, st)) = stop {
                traj.termination = term;
                traj.r_end = at;
                traj.samples.push(Sample {
                    r: at,
                    u: st.u(),
                    uprime: st.v,
                });
                return Ok(traj);
            }

            r = r_new;
            y = y_new;
            traj.r_end = r;
            traj.samples.push(Sample {
                r,
                u: anchor + y[0],
                uprime: y[1],
            });

            // sustained convergence to an isolated zero of f, without the
            // deviation from it growing over the window
            let st = State { anchor, w: y[0], v: y[1] };
            let u = st.u();
            let ell = self
                .zeros
                .iter()
                .copied()
                .min_by(|a, b| (*a - u).abs().partial_cmp(&(*b - u).abs()).expect("finite"));
            let converging = ell.filter(|&ell| {
                (u - ell).abs() <= conv_tol.sqrt()
                    && self.model.f_at(anchor, y[0]).abs() <= conv_tol
                    && y[1].abs() <= conv_tol
                    && (self.energy(&st) - self.model.value(Profile::Primitive, ell)).abs() <= conv_tol
            });
            let deviation = |ell: T| {
                let du = if ell == anchor { y[0] } else { u - ell };
                du.abs() + y[1].abs()
            };
            conv_since = match (converging, conv_since) {
                (Some(ell), Some((since, l, dev))) if l == ell => Some((since, l, dev)),
                (Some(ell), _) => Some((r, ell, deviation(ell))),
                _ => None,
            };
            if let Some((since, ell, dev)) = conv_since {
                if r - since >= T::lit(5.0) {
                    if deviation(ell) <= dev {
                        traj.termination = Termination::ConvergedTo { ell };
                        return Ok(traj);
                    }
                    conv_since = Some((r, ell, deviation(ell)));
                }
            }

            if last {
                traj.termination = Termination::ReachedRmax;
                return Ok(traj);
            }

            if !anchor.is_zero() && y[0].abs() > anchor.abs() / T::lit(2.0) {
                y[0] = anchor + y[0];
                anchor = T::zero();
            }
            k[0] = if anchor.is_zero() && traj.steps.last().is_some_and(|s| !s.anchor.is_zero()) {
                self.rhs(n1, r, anchor, &y)
            } else {
                k[12]
            };
            if last_rejected {
                h_new = h_new.min(h);
                last_rejected = false;
            }
            h = h_new.min(h_max);
        }
    }
}

/// Integrates one initial value problem.
pub fn integrate<T: Real>(
    model: &NonlinearityModel<T>,
    cfg: &ProblemConfig<T>,
) -> Result<Trajectory<T>, IntegrateError> {
    Shooter::new(model).integrate(cfg)
}

impl<T: Real> Trajectory<T> {
    fn n(&self) -> T {
        T::lit(self.config.n as f64)
    }

    pub fn model(&self) -> &NonlinearityModel<T> {
        &self.model
    }

    pub fn state_at(&self, r: T) -> Result<State<T>, IntegrateError> {
        if !(r >= T::zero() && r <= self.r_end) {
            return Err(IntegrateError::OutOfRange(r.to_f64_lossy()));
        }
        if r <= self.series.r0 || self.steps.is_empty() {
            return Ok(self.series.state(r));
        }
        let i = self.steps.partition_point(|s| s.r0 <= r).saturating_sub(1);
        let s = &self.steps[i];
        Ok(s.state((r - s.r0) / s.h))
    }

    fn energy_of(&self, s: &State<T>) -> T {
        s.v * s.v / T::lit(2.0) + self.model.big_f_at(s.anchor, s.w)
    }

    /// `I(r) = u'^2/2 + F(u)`.
    pub fn energy_i(&self, r: T) -> Result<T, IntegrateError> {
        if r.is_zero() {
            return Ok(self.i0);
        }
        Ok(self.energy_of(&self.state_at(r)?))
    }

    /// `H(r) = r^(2(N-1)) I(r)`.
    pub fn big_h(&self, r: T) -> Result<T, IntegrateError> {
        self.tilde_h(r, T::zero())
    }

    /// `r^(2(N-1)) (I(r) - level)`.
    pub fn tilde_h(&self, r: T, level: T) -> Result<T, IntegrateError> {
        let i = self.energy_i(r)?;
        Ok(r.powi(2 * (self.config.n as i32 - 1)) * (i - level))
    }

    /// `E(r) = 2 r^N I + (N-2) r^(N-1) u' u`.
    pub fn pohozaev_e(&self, r: T) -> Result<T, IntegrateError> {
        let s = self.state_at(r)?;
        let n = self.config.n as i32;
        let i = self.energy_of(&s);
        Ok(T::lit(2.0) * r.powi(n) * i + (self.n() - T::lit(2.0)) * r.powi(n - 1) * s.v * s.u())
    }

    /// Gauss–Legendre quadrature of `g(t, state)` over `[r1, r2]` on the dense
    /// output, split at the steps and wherever `u` crosses a knot of the model.
    fn quadrature(&self, r1: T, r2: T, g: impl Fn(T, &State<T>) -> T) -> Result<T, IntegrateError> {
        if r1 > r2 || r1 < T::zero() || r2 > self.r_end {
            return Err(IntegrateError::OutOfRange(if r1 > r2 { r1 } else { r2 }.to_f64_lossy()));
        }
        let knots = self.model.knots();
        let mut total = T::zero();
        let mut segment = |a: T, b: T, at: &dyn Fn(T) -> State<T>| {
            if b <= a {
                return;
            }
            let mut cuts = vec![a];
            let m = 8;
            let mut prev = at(a).u();
            for j in 1..=m {
                let t = a + (b - a) * T::count(j) / T::count(m);
                let cur = at(t).u();
                for &kn in &knots {
                    if sign_split(prev - kn, cur - kn) {
                        let t0 = a + (b - a) * T::count(j - 1) / T::count(m);
                        cuts.push(refine(|x| at(x).u() - kn, t0, t));
                    }
                }
                prev = cur;
            }
            cuts.push(b);
            cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                for &(x, wt) in &tab::GAUSS8 {
                    let t = lo + (hi - lo) * T::lit(x);
                    total = total + (hi - lo) * T::lit(wt) * g(t, &at(t));
                }
            }
        };
        let s0 = self.series.r0;
        segment(r1, r2.min(s0), &|t| self.series.state(t));
        for st in &self.steps {
            let (a, b) = (st.r0.max(r1), st.end().min(r2).min(self.r_end));
            if a < b {
                segment(a, b, &|t| st.state((t - st.r0) / st.h));
            }
        }
        Ok(total)
    }

    /// `| I(r2) - I(r1) + (N-1) int_{r1}^{r2} u'^2/t dt |`.
    pub fn energy_residual(&self, r1: T, r2: T) -> Result<T, IntegrateError> {
        let q = self.quadrature(r1, r2, |t, s| s.v * s.v / t)?;
        let n1 = self.n() - T::one();
        Ok((self.energy_i(r2)? - self.energy_i(r1)? + n1 * q).abs())
    }

    /// `| E(r2) - E(r1) - int_{r1}^{r2} t^(N-1) Q(u) dt |`.
    pub fn pohozaev_residual(&self, r1: T, r2: T) -> Result<T, IntegrateError> {
        let n = self.config.n;
        let q = self.quadrature(r1, r2, |t, s| {
            t.powi(n as i32 - 1) * self.model.profile_at(Profile::Pohozaev(n), s.anchor, s.w)
        })?;
        Ok((self.pohozaev_e(r2)? - self.pohozaev_e(r1)? - q).abs())
    }

    pub fn count_sign_changes(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::SimpleZero { .. }))
            .count()
    }

    /// Final state (at the termination radius).
    pub fn terminal(&self) -> State<T> {
        self.state_at(self.r_end).expect("r_end lies in range")
    }

    /// Radii of the dense-output step boundaries.
    pub fn step_radii(&self) -> Vec<T> {
        std::iter::once(self.series.r0)
            .chain(self.steps.iter().map(|s| s.end().min(self.r_end)))
            .collect()
    }
}
