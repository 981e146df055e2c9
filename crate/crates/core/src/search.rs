//! Grid scans over the initial value, boundary bisection, and extraction of
//! pairs of bound states with a prescribed number of sign changes.
//!
//! Initial values are parametrised by their offset below an anchor:
//! `alpha = anchor - span * 10^(-t)` with `anchor = gamma_star` under (A1)
//! and a search cap under (A2), `span = anchor - beta_star`. The offset is
//! carried exactly into the integrator, so boundaries lying within a few
//! ulps of the anchor stay resolvable.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classifier::{classify_lenient, ClassifierOptions, Classification, ClassifyError, Label};
use crate::integrator::{EventKind, InitialValue, IntegrateError, ProblemConfig, Shooter, Termination, Trajectory};
use crate::nonlinearity::{Case, Landmarks, NonlinearityModel, Profile};
use crate::scalar::Real;
use crate::theorems::{compute_ck, pohozaev_threshold, TheoremError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("endpoints do not split: {0}")]
    NoSignSplit(String),
    #[error("nothing found with {grid_points} grid points: {reason}")]
    NotFoundAtResolution { grid_points: usize, reason: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Theorem(#[from] TheoremError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOptions<T> {
    pub grid_points: usize,
    pub max_grid_points: usize,
    /// Decades of offset covered by the scan.
    pub t_max: T,
    /// Absolute bracket width bound; defaults to `1e-11 * span`.
    pub bisect_tol: Option<T>,
    /// Bracket width bound relative to the offset from the anchor.
    pub bisect_rel: T,
    /// Bound on `|u|` and `|u'|` at the closest approach of a witness.
    pub cert_state: T,
    /// Bound on `|I|` at the closest approach of a witness.
    pub cert_energy: T,
    pub probes: usize,
    /// Relative and absolute tolerance of the integrations behind bisection
    /// and bound-state witnesses.
    pub refine_tol: T,
    /// Upper end of the scanned range under (A2).
    pub a2_cap: Option<T>,
    /// Largest `alpha` tried by `estimate_alpha_k` under (A2).
    pub a2_alpha_limit: Option<T>,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            grid_points: 512,
            max_grid_points: 1 << 16,
            t_max: T::lit(64.0),
            bisect_tol: None,
            bisect_rel: T::lit(1e-7),
            cert_state: T::lit(1e-5),
            cert_energy: T::lit(1e-8),
            probes: 5,
            refine_tol: T::lit(1e-12),
            a2_cap: None,
            a2_alpha_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint<T: Real> {
    pub t: T,
    /// `anchor - alpha`, kept exactly.
    pub offset: T,
    pub alpha: T,
    pub classification: Option<Classification<T>>,
    pub ambiguous: bool,
    pub error: Option<String>,
}

impl<T: Real> ScanPoint<T> {
    pub fn tag(&self) -> String {
        match (&self.classification, &self.error) {
            (Some(c), _) => c.tag(),
            (None, Some(e)) => format!("error: {e}"),
            _ => "none".to_string(),
        }
    }

    fn is(&self, symbol: &str, k: usize) -> bool {
        self.classification.as_ref().is_some_and(|c| c.is(symbol, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Run<T> {
    pub tag: String,
    pub first: usize,
    pub last: usize,
    pub alpha_lo: T,
    pub alpha_hi: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport<T: Real> {
    pub anchor: T,
    pub span: T,
    pub points: Vec<ScanPoint<T>>,
    pub intervals: Vec<Run<T>>,
}

impl<T: Real> ScanReport<T> {
    fn new(anchor: T, span: T, points: Vec<ScanPoint<T>>) -> Self {
        let mut intervals: Vec<Run<T>> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let tag = p.tag();
            match intervals.last_mut() {
                Some(r) if r.tag == tag => {
                    r.last = i;
                    r.alpha_hi = p.alpha;
                }
                _ => intervals.push(Run {
                    tag,
                    first: i,
                    last: i,
                    alpha_lo: p.alpha,
                    alpha_hi: p.alpha,
                }),
            }
        }
        Self {
            anchor,
            span,
            points,
            intervals,
        }
    }

    pub fn grid(&self) -> Vec<T> {
        self.points.iter().map(|p| p.alpha).collect()
    }
}

/// Closest approach of a trajectory to `u = u' = 0` after its last sign
/// change, when it ends near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approach<T> {
    pub r: T,
    pub u: T,
    pub uprime: T,
    #[serde(rename = "I")]
    pub energy: T,
}

pub fn approach<T: Real>(traj: &Trajectory<T>) -> Option<Approach<T>> {
    let last = traj
        .events
        .iter()
        .rev()
        .find(|e| !matches!(e.kind, EventKind::LevelCrossing { .. }))?;
    let turned = matches!(traj.termination, Termination::DoubleZeroAt { .. } | Termination::TrappedInWell { .. });
    match last.kind {
        EventKind::DoubleZero | EventKind::Extremum { .. } if turned => Some(Approach {
            r: last.r,
            u: last.u,
            uprime: last.uprime,
            energy: last.energy,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoint<T: Real> {
    pub alpha: T,
    pub offset: T,
    pub tag: String,
}

struct Witness<T: Real> {
    endpoint: Endpoint<T>,
    sign_changes: usize,
    approach: Option<Approach<T>>,
    certified: bool,
}

/// Bisected boundary between `inside` and `outside` initial values, with a
/// bound state found within it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GBracket<T: Real> {
    pub inside: Endpoint<T>,
    pub outside: Endpoint<T>,
    pub width: T,
    pub iterations: usize,
    /// Initial value of the bound state; lies between the two endpoints.
    pub witness: Endpoint<T>,
    /// Sign changes of the witness trajectory.
    pub sign_changes: usize,
    pub approach: Option<Approach<T>>,
    pub certified: bool,
}

impl<T: Real> GBracket<T> {
    pub fn alpha(&self) -> T {
        self.witness.alpha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult<T: Real> {
    pub k: usize,
    pub alpha_sharp: GBracket<T>,
    pub alpha_star: GBracket<T>,
    pub distinct: bool,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K0Attempt {
    pub k: usize,
    pub found: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K0Report {
    pub k0: usize,
    pub consistent: bool,
    pub attempts: Vec<K0Attempt>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "certificate", rename_all = "snake_case")]
pub enum AlphaKCertificate<T> {
    Trivial,
    /// Every grid point from `alpha` up to the anchor passed a `k`-th zero.
    ScanRun { points: usize },
    RadiusBound { r_bar: T, c_k: T },
    PohozaevBound { r_bar: T, e: T, threshold: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaK<T> {
    pub k: usize,
    pub alpha: T,
    pub certificate: AlphaKCertificate<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport<T: Real> {
    pub outside: Vec<(T, String)>,
    pub inside: Vec<(T, String)>,
}

pub struct Searcher<T: Real> {
    shooter: Shooter<T>,
    pub landmarks: Landmarks<T>,
    pub config: ProblemConfig<T>,
    pub options: SearchOptions<T>,
    pub classifier: ClassifierOptions<T>,
    anchor: T,
    span: T,
    cache: Mutex<HashMap<usize, ScanPoint<T>>>,
}

impl<T: Real> Searcher<T> {
    pub fn new(
        model: &NonlinearityModel<T>,
        landmarks: Landmarks<T>,
        config: ProblemConfig<T>,
        options: SearchOptions<T>,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        if options.grid_points == 0 || options.max_grid_points < options.grid_points {
            return Err(SearchError::InvalidRange("grid sizes".to_string()));
        }
        let classifier = ClassifierOptions::for_landmarks(&landmarks);
        let mut s = Self {
            shooter: Shooter::new(model),
            config,
            options,
            classifier,
            anchor: landmarks.gamma_star,
            span: landmarks.gamma_star - landmarks.beta_star,
            landmarks,
            cache: Mutex::new(HashMap::new()),
        };
        if s.landmarks.case == Case::A2 {
            let cap = match s.options.a2_cap {
                Some(c) => c,
                None => {
                    let four = T::lit(4.0) * s.landmarks.beta_bar;
                    match s.estimate_alpha_k(8) {
                        Ok(a) => four.max(T::lit(10.0) * a.alpha),
                        Err(_) => four,
                    }
                }
            };
            s.anchor = cap;
            s.span = cap - s.landmarks.beta_star;
        }
        Ok(s)
    }

    pub fn model(&self) -> &NonlinearityModel<T> {
        self.shooter.model()
    }

    pub fn shooter(&self) -> &Shooter<T> {
        &self.shooter
    }

    pub fn anchor(&self) -> T {
        self.anchor
    }

    pub fn span(&self) -> T {
        self.span
    }

    pub fn bisect_tol(&self) -> T {
        self.options.bisect_tol.unwrap_or(T::lit(1e-11) * self.span)
    }

    /// Configuration used for scans and bisection: double zeros are only
    /// declared at `eps_zero`, so that endpoints on either side of a
    /// boundary keep their labels.
    pub fn sharp_config(&self) -> ProblemConfig<T> {
        ProblemConfig {
            eps_double: self.config.eps_zero,
            ..self.config.clone()
        }
    }

    /// Tight tolerances for bisection and witnesses.
    pub fn refine_config(&self, sharp: bool) -> ProblemConfig<T> {
        let base = if sharp { self.sharp_config() } else { self.config.clone() };
        ProblemConfig {
            rel_tol: base.rel_tol.min(self.options.refine_tol),
            abs_tol: base.abs_tol.min(self.options.refine_tol),
            ..base
        }
    }

    pub fn initial_value(&self, offset: T) -> InitialValue<T> {
        if self.landmarks.case == Case::A1 {
            InitialValue::below(self.anchor, offset)
        } else {
            InitialValue::plain(self.anchor - offset)
        }
    }

    pub fn offset_at(&self, t: T) -> T {
        self.span * T::lit(10.0).powf(-t)
    }

    pub fn shoot(&self, offset: T, sharp: bool) -> Result<Trajectory<T>, IntegrateError> {
        let base = if sharp { self.sharp_config() } else { self.config.clone() };
        self.shooter.integrate(&base.with_alpha(self.initial_value(offset)))
    }

    fn point(&self, t: T, offset: T) -> ScanPoint<T> {
        self.point_with(t, offset, &self.sharp_config())
    }

    fn point_with(&self, t: T, offset: T, cfg: &ProblemConfig<T>) -> ScanPoint<T> {
        let alpha = self.initial_value(offset).value();
        let mut p = ScanPoint {
            t,
            offset,
            alpha,
            classification: None,
            ambiguous: false,
            error: None,
        };
        match self.shooter.integrate(&cfg.with_alpha(self.initial_value(offset))) {
            Ok(traj) => match classify_lenient(&traj, &self.landmarks, &self.classifier) {
                Ok(c) => {
                    p.ambiguous = matches!(c.label, Label::Q | Label::S { .. } | Label::N) && c.margin < self.classifier.eps_margin;
                    p.classification = Some(c);
                }
                Err(e) => p.error = Some(e.to_string()),
            },
            Err(e) => p.error = Some(e.to_string()),
        }
        p
    }

    fn classify_refined(&self, offset: T) -> ScanPoint<T> {
        self.point_with(T::nan(), offset, &self.refine_config(true))
    }

    /// Scan on the nested grid `t_j = t_max (j+1)/n`, `j < n`; results are
    /// cached across resolutions.
    pub fn scan_level(&self, n: usize) -> Result<ScanReport<T>, SearchError> {
        let max = self.options.max_grid_points;
        if n == 0 || !max.is_multiple_of(n) {
            return Err(SearchError::InvalidRange(format!("{n} does not divide {max}")));
        }
        let stride = max / n;
        let keys: Vec<usize> = (0..n).map(|j| (j + 1) * stride - 1).collect();
        let missing: Vec<usize> = {
            let cache = self.cache.lock().expect("cache lock");
            keys.iter().copied().filter(|k| !cache.contains_key(k)).collect()
        };
        let t_of = |key: usize| self.options.t_max * T::count(key + 1) / T::count(max);
        let fresh: Vec<(usize, ScanPoint<T>)> = missing
            .par_iter()
            .map(|&key| {
                let t = t_of(key);
                (key, self.point(t, self.offset_at(t)))
            })
            .collect();
        let mut cache = self.cache.lock().expect("cache lock");
        cache.extend(fresh);
        let points = keys.iter().map(|k| cache[k].clone()).collect();
        Ok(ScanReport::new(self.anchor, self.span, points))
    }

    /// Uniform scan in `t` between two initial values.
    pub fn scan(&self, alpha_lo: T, alpha_hi: T, grid_points: usize) -> Result<ScanReport<T>, SearchError> {
        if !(alpha_lo < alpha_hi) {
            return Err(SearchError::InvalidRange(format!("{alpha_lo} >= {alpha_hi}")));
        }
        if alpha_lo < self.landmarks.beta_star || alpha_hi > self.anchor || grid_points == 0 {
            return Err(SearchError::InvalidRange(format!(
                "[{alpha_lo}, {alpha_hi}] not inside [beta_star, {}]",
                self.anchor
            )));
        }
        let t_of = |a: T| {
            let d = self.anchor - a;
            if d <= T::zero() {
                self.options.t_max
            } else {
                (self.span / d).log10()
            }
        };
        let (t0, t1) = (t_of(alpha_lo), t_of(alpha_hi));
        let pts: Vec<ScanPoint<T>> = (0..grid_points)
            .into_par_iter()
            .map(|j| {
                let t = if grid_points == 1 {
                    t0
                } else {
                    t0 + (t1 - t0) * T::count(j) / T::count(grid_points - 1)
                };
                self.point(t, self.offset_at(t))
            })
            .collect();
        Ok(ScanReport::new(self.anchor, self.span, pts))
    }

    fn endpoint(&self, p: &ScanPoint<T>) -> Endpoint<T> {
        Endpoint {
            alpha: p.alpha,
            offset: p.offset,
            tag: p.tag(),
        }
    }

    /// Bisects in the offset between two initial values on opposite sides of
    /// `inside` until the bracket is narrower than both `bisect_tol` and
    /// `bisect_rel` times the offset. Bisection then continues inside the
    /// bracket down to float resolution, and the inside trajectory passing
    /// closest to `u = u' = 0` becomes the witness. All integrations use
    /// [`Searcher::refine_config`].
    pub fn refine_boundary(
        &self,
        offset_a: T,
        offset_b: T,
        inside: &(dyn Fn(&ScanPoint<T>) -> bool + Sync),
    ) -> Result<GBracket<T>, SearchError> {
        if offset_a == offset_b {
            return Err(SearchError::InvalidRange("degenerate bracket".to_string()));
        }
        let (mut pa, mut pb) = (self.classify_refined(offset_a), self.classify_refined(offset_b));
        let (ia, ib) = (inside(&pa), inside(&pb));
        if ia == ib {
            return Err(SearchError::NoSignSplit(format!("{} / {}", pa.tag(), pb.tag())));
        }
        let two = T::lit(2.0);
        let mut iterations = 0;
        let mut bracket = None;
        let mut best: Option<(T, Witness<T>)> = None;
        loop {
            let mid = (pa.offset + pb.offset) / two;
            if bracket.is_none() {
                let tol = self.bisect_tol().min(self.options.bisect_rel * mid.abs());
                if (pa.offset - pb.offset).abs() <= tol {
                    bracket = Some((pa.clone(), pb.clone(), iterations));
                }
            }
            if mid == pa.offset || mid == pb.offset || iterations >= 1100 {
                break;
            }
            iterations += 1;
            let pm = self.classify_refined(mid);
            let side = inside(&pm) == ia;
            if inside(&pm) {
                let w = self.witness(mid)?;
                let dist = w.approach.map_or(T::infinity(), |a| a.u.abs().max(a.uprime.abs()));
                if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                    best = Some((dist, w));
                }
            }
            if side {
                pa = pm;
            } else {
                pb = pm;
            }
        }
        let (pa, pb, iterations) = bracket.unwrap_or((pa, pb, iterations));
        let (pin, pout) = if ia { (pa, pb) } else { (pb, pa) };
        let witness = match best {
            Some((_, w)) => w,
            None => self.witness(pin.offset)?,
        };
        Ok(GBracket {
            inside: self.endpoint(&pin),
            outside: self.endpoint(&pout),
            width: (pin.offset - pout.offset).abs(),
            iterations,
            witness: witness.endpoint,
            sign_changes: witness.sign_changes,
            approach: witness.approach,
            certified: witness.certified,
        })
    }

    fn witness(&self, offset: T) -> Result<Witness<T>, SearchError> {
        let cfg = self.refine_config(false).with_alpha(self.initial_value(offset));
        let traj = self.shooter.integrate(&cfg)?;
        let appr = approach(&traj);
        let (eps, eps_i) = (self.options.cert_state, self.options.cert_energy);
        let tag = classify_lenient(&traj, &self.landmarks, &self.classifier).map_or_else(|e| format!("error: {e}"), |c| c.tag());
        Ok(Witness {
            endpoint: Endpoint {
                alpha: cfg.alpha.value(),
                offset,
                tag,
            },
            sign_changes: traj.count_sign_changes(),
            approach: appr,
            certified: appr.is_some_and(|a| a.u.abs() <= eps && a.uprime.abs() <= eps && a.energy.abs() <= eps_i),
        })
    }

    /// Every boundary of the set `inside` visible on a scan, bisected; in
    /// increasing `alpha`.
    pub fn region_boundaries(
        &self,
        scan: &ScanReport<T>,
        inside: &(dyn Fn(&ScanPoint<T>) -> bool + Sync),
    ) -> Vec<Result<GBracket<T>, SearchError>> {
        let pts = &scan.points;
        let mut pairs: Vec<(T, T)> = Vec::new();
        if pts.first().is_some_and(inside) {
            pairs.push((self.span, pts[0].offset));
        }
        pairs.extend(
            pts.windows(2)
                .filter(|w| inside(&w[0]) != inside(&w[1]))
                .map(|w| (w[0].offset, w[1].offset)),
        );
        pairs
            .par_iter()
            .map(|&(a, b)| self.refine_boundary(a, b, inside))
            .collect()
    }

    /// Two bound states with exactly `k` sign changes: the lowest and highest
    /// boundary of `G_{k+1} u Q_{k+1}` visible on the grid.
    pub fn find_pairs(&self, k: usize) -> Result<PairResult<T>, SearchError> {
        let m = k + 1;
        let inside = move |p: &ScanPoint<T>| p.is("Q", m) || p.is("G", m);
        let mut n = self.options.grid_points;
        let mut reason = format!("no Q{m} or G{m} point on the grid");
        loop {
            let scan = self.scan_level(n)?;
            if scan.points.iter().any(inside) {
                let bounds = self.region_boundaries(&scan, &inside);
                match self.pair_from(bounds, k) {
                    Ok(mut pair) => {
                        pair.grid_points = n;
                        return Ok(pair);
                    }
                    Err(e) => reason = e,
                }
            }
            if n >= self.options.max_grid_points {
                return Err(SearchError::NotFoundAtResolution {
                    grid_points: n,
                    reason,
                });
            }
            n *= 2;
        }
    }

    fn pair_from(&self, bounds: Vec<Result<GBracket<T>, SearchError>>, k: usize) -> Result<PairResult<T>, String> {
        let sharp = bounds.first().ok_or("no boundary")?.clone();
        let star = bounds.last().ok_or("no boundary")?.clone();
        let sharp = sharp.map_err(|e| format!("alpha_sharp: {e}"))?;
        let star = star.map_err(|e| format!("alpha_star: {e}"))?;
        for (name, b) in [("alpha_sharp", &sharp), ("alpha_star", &star)] {
            if b.outside.tag.starts_with("Upsilon") || b.outside.tag.starts_with('S') {
                return Err(format!(
                    "{name} boundary at alpha = {} borders {} (unresolvable split)",
                    b.alpha(),
                    b.outside.tag
                ));
            }
            if !b.certified {
                let u = b.approach.map_or(T::nan(), |a| a.u);
                return Err(format!("{name} boundary is not a certified bound state (closest |u| = {})", u.abs()));
            }
            if b.sign_changes != k {
                return Err(format!("{name} witness has {} sign changes", b.sign_changes));
            }
        }
        let distinct = sharp.witness.offset - star.witness.offset > T::lit(10.0) * self.bisect_tol();
        if !distinct {
            return Err("alpha_sharp and alpha_star coincide".to_string());
        }
        Ok(PairResult {
            k,
            alpha_sharp: sharp,
            alpha_star: star,
            distinct,
            grid_points: 0,
        })
    }

    /// Smallest `k <= k_max` with a pair, checking that pairs persist above it.
    pub fn find_k0(&self, k_max: usize) -> Result<K0Report, SearchError> {
        let attempts: Vec<K0Attempt> = (0..=k_max)
            .map(|k| match self.find_pairs(k) {
                Ok(p) => K0Attempt {
                    k,
                    found: true,
                    detail: format!("alpha_sharp = {}, alpha_star = {}", p.alpha_sharp.alpha(), p.alpha_star.alpha()),
                },
                Err(e) => K0Attempt {
                    k,
                    found: false,
                    detail: e.to_string(),
                },
            })
            .collect();
        let k0 = attempts
            .iter()
            .find(|a| a.found)
            .map(|a| a.k)
            .ok_or_else(|| {
                let why: Vec<String> = attempts.iter().map(|a| format!("k = {}: {}", a.k, a.detail)).collect();
                SearchError::NotFound(format!("no pair for k <= {k_max} ({})", why.join("; ")))
            })?;
        let consistent = attempts.iter().filter(|a| a.k >= k0).all(|a| a.found);
        Ok(K0Report {
            k0,
            consistent,
            attempts,
        })
    }

    /// An initial value above which every tested `alpha` has at least `k`
    /// sign changes.
    pub fn estimate_alpha_k(&self, k: usize) -> Result<AlphaK<T>, SearchError> {
        if k == 0 {
            return Ok(AlphaK {
                k,
                alpha: self.landmarks.beta_star,
                certificate: AlphaKCertificate::Trivial,
            });
        }
        match self.landmarks.case {
            Case::A1 => {
                let scan = self.scan_level(self.options.grid_points)?;
                let passed = |p: &ScanPoint<T>| p.classification.as_ref().is_some_and(|c| c.sign_changes >= k);
                let tail = scan.points.iter().rev().take_while(|p| passed(p)).count();
                if tail == 0 {
                    return Err(SearchError::NotFound(format!("no grid point passes a {k}-th zero near the anchor")));
                }
                let first = &scan.points[scan.points.len() - tail];
                Ok(AlphaK {
                    k,
                    alpha: first.alpha,
                    certificate: AlphaKCertificate::ScanRun { points: tail },
                })
            }
            Case::A2 => self.alpha_k_a2(k),
            Case::Neither => Err(SearchError::NotFound("hypotheses do not hold".to_string())),
        }
    }

    fn alpha_k_a2(&self, k: usize) -> Result<AlphaK<T>, SearchError> {
        let model = self.model();
        let lm = &self.landmarks;
        let n = self.config.n;
        let ck = compute_ck(model, lm, n, k)?;
        let threshold = pohozaev_threshold(model, lm, n, k)?;
        let two_bb = T::lit(2.0) * lm.beta_bar;
        let level = model.value(Profile::Primitive, two_bb);
        let levels: Vec<T> = model
            .level_roots(Profile::Primitive, level, model.floor(), model.ceiling())
            .into_iter()
            .collect();
        let limit = self.options.a2_alpha_limit.unwrap_or(T::lit(1e6) * two_bb);
        let mut alpha = two_bb * T::lit(1.0001);
        while alpha <= limit {
            let mut cfg = self.config.with_alpha(alpha);
            cfg.levels = levels.clone();
            let traj = self.shooter.integrate(&cfg)?;
            if let Some(e) = traj.events.iter().find(|e| matches!(e.kind, EventKind::LevelCrossing { .. })) {
                let r_bar = e.r;
                if r_bar >= ck {
                    return Ok(AlphaK {
                        k,
                        alpha,
                        certificate: AlphaKCertificate::RadiusBound { r_bar, c_k: ck },
                    });
                }
                let en = traj.pohozaev_e(r_bar)?;
                if en >= threshold {
                    return Ok(AlphaK {
                        k,
                        alpha,
                        certificate: AlphaKCertificate::PohozaevBound {
                            r_bar,
                            e: en,
                            threshold,
                        },
                    });
                }
            }
            alpha = alpha * T::lit(1.25);
        }
        Err(SearchError::NotFound(format!("no certificate below alpha = {limit}")))
    }

    /// Labels just outside a bracket (beyond its outside endpoint) and just
    /// inside it, at multiples of its width up to ten widths.
    pub fn probe(&self, b: &GBracket<T>) -> ProbeReport<T> {
        let w = b.width.max(b.inside.offset.abs() * T::epsilon());
        let dir = if b.outside.offset > b.inside.offset { T::one() } else { -T::one() };
        let count = self.options.probes;
        let step = |j: usize| w * T::lit(10.0) * T::count(j) / T::count(count);
        let outside = (1..=count)
            .into_par_iter()
            .map(|j| {
                let d = b.outside.offset + dir * step(j);
                (self.initial_value(d).value(), self.classify_refined(d).tag())
            })
            .collect();
        let inside = (1..=count)
            .into_par_iter()
            .map(|j| {
                let d = b.inside.offset - dir * step(j);
                (self.initial_value(d).value(), self.classify_refined(d).tag())
            })
            .collect();
        ProbeReport { outside, inside }
    }
}

impl<T: Real> From<ClassifyError<T>> for SearchError {
    fn from(e: ClassifyError<T>) -> Self {
        SearchError::NotFound(e.to_string())
    }
}
