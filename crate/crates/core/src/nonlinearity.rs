//! The nonlinearity `f`, its primitive `F` and the Pohozaev combination `Q`.
//!
//! Every model is stored as a list of pieces. Polynomial pieces keep their
//! expansion about both finite endpoints, with the endpoint value and slope
//! stored exactly, so that `f(knot + w)` stays accurate for tiny `w`.

use serde::Serialize;
use thiserror::Error;

use crate::poly;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("s = {0} lies outside the domain")]
    OutOfDomain(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("landmark not found: {0}")]
    LandmarkNotFound(String),
    #[error("level {0} is not attained")]
    LevelNotAttained(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlPoint<T> {
    pub s: T,
    /// Prescribed value of `F` at `s`.
    pub big_f: T,
    /// Prescribed value of `f = F'` at `s`.
    pub f: T,
}

impl<T: Real> ControlPoint<T> {
    pub fn new(s: T, big_f: T, f: T) -> Self {
        Self { s, big_f, f }
    }
}

/// `f(s) = c s^p` for `s >= s_tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTail<T> {
    pub c: T,
    pub p: T,
    pub s_tail: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModelKind<T> {
    /// Coefficients of `f` in ascending powers of `s`.
    Polynomial(Vec<T>),
    HermiteF(Vec<ControlPoint<T>>),
    HermiteFPowerTail(Vec<ControlPoint<T>>, PowerTail<T>),
}

/// Which of the three profiles to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `f`
    Force,
    /// `F`
    Primitive,
    /// `Q = 2N F - (N-2) s f` for the given dimension.
    Pohozaev(u32),
}

#[derive(Debug, Clone)]
struct Expansion<T> {
    big_f: Vec<T>,
    f: Vec<T>,
    df: Vec<T>,
}

impl<T: Real> Expansion<T> {
    fn new(big_f: Vec<T>) -> Self {
        let f = poly::derivative(&big_f);
        let df = poly::derivative(&f);
        Self { big_f, f, df }
    }

    /// Coefficients of `Q` about a centre `c`, in the local coordinate.
    fn q_coeffs(&self, centre: T, n: u32) -> Vec<T> {
        let two_n = T::lit(2.0 * n as f64);
        let nm2 = T::lit(n as f64 - 2.0);
        let len = self.big_f.len().max(self.f.len() + 1);
        let mut q = vec![T::zero(); len];
        for (j, &c) in self.big_f.iter().enumerate() {
            q[j] = q[j] + two_n * c;
        }
        for (j, &c) in self.f.iter().enumerate() {
            q[j] = q[j] - nm2 * centre * c;
            q[j + 1] = q[j + 1] - nm2 * c;
        }
        poly::trim(q)
    }

    fn coeffs(&self, profile: Profile, centre: T) -> Vec<T> {
        match profile {
            Profile::Force => self.f.clone(),
            Profile::Primitive => self.big_f.clone(),
            Profile::Pohozaev(n) => self.q_coeffs(centre, n),
        }
    }
}

#[derive(Debug, Clone)]
enum Form<T> {
    Poly {
        left: Option<Expansion<T>>,
        right: Option<Expansion<T>>,
    },
    Power {
        c: T,
        p: T,
        big_f0: T,
    },
}

#[derive(Debug, Clone)]
struct Piece<T> {
    a: T,
    b: T,
    form: Form<T>,
}

/// Local coordinate inside a piece.
#[derive(Debug, Clone, Copy)]
enum Local<T> {
    Left(T),
    Right(T),
    Power(T),
}

impl<T: Real> Piece<T> {
    fn locate(&self, anchor: T, w: T) -> Local<T> {
        match &self.form {
            Form::Power { .. } => Local::Power(anchor + w),
            Form::Poly { left, right } => {
                if anchor == self.a && left.is_some() {
                    return Local::Left(w);
                }
                if anchor == self.b && right.is_some() {
                    return Local::Right(w);
                }
                let u = anchor + w;
                match (left.is_some(), right.is_some()) {
                    (true, false) => Local::Left(u - self.a),
                    (false, true) => Local::Right(u - self.b),
                    _ => {
                        if u - self.a <= self.b - u {
                            Local::Left(u - self.a)
                        } else {
                            Local::Right(u - self.b)
                        }
                    }
                }
            }
        }
    }

    fn expansion(&self, right: bool) -> &Expansion<T> {
        match &self.form {
            Form::Poly { left, right: r } => if right { r } else { left }
                .as_ref()
                .expect("expansion present"),
            Form::Power { .. } => unreachable!("power piece has no expansion"),
        }
    }

    fn eval(&self, profile: Profile, at: Local<T>) -> T {
        match at {
            Local::Left(x) => self.eval_poly(profile, false, x),
            Local::Right(y) => self.eval_poly(profile, true, y),
            Local::Power(s) => {
                let Form::Power { c, p, big_f0 } = self.form else {
                    unreachable!()
                };
                let big_f = || {
                    // F(s) - F(s_tail) = c s_tail^(p+1) ((s/s_tail)^(p+1) - 1)/(p+1)
                    let q = p + T::one();
                    let rel = ((s - self.a) / self.a).ln_1p() * q;
                    big_f0 + c * self.a.powf(q) * rel.exp_m1() / q
                };
                match profile {
                    Profile::Force => c * s.powf(p),
                    Profile::Primitive => big_f(),
                    Profile::Pohozaev(n) => {
                        T::lit(2.0 * n as f64) * big_f() - T::lit(n as f64 - 2.0) * s * c * s.powf(p)
                    }
                }
            }
        }
    }

    fn eval_poly(&self, profile: Profile, right: bool, x: T) -> T {
        let e = self.expansion(right);
        match profile {
            Profile::Force => poly::eval(&e.f, x),
            Profile::Primitive => poly::eval(&e.big_f, x),
            Profile::Pohozaev(n) => {
                let centre = if right { self.b } else { self.a };
                let two_n = T::lit(2.0 * n as f64);
                two_n * poly::eval(&e.big_f, x)
                    - T::lit(n as f64 - 2.0) * (centre + x) * poly::eval(&e.f, x)
            }
        }
    }

    fn eval_df(&self, at: Local<T>) -> T {
        match at {
            Local::Left(x) => poly::eval(&self.expansion(false).df, x),
            Local::Right(y) => poly::eval(&self.expansion(true).df, y),
            Local::Power(s) => {
                let Form::Power { c, p, .. } = self.form else {
                    unreachable!()
                };
                c * p * s.powf(p - T::one())
            }
        }
    }

    /// Chooses an expansion whose centre is finite and returns (centre, coefficients).
    fn centred(&self, profile: Profile) -> Option<(T, Vec<T>)> {
        match &self.form {
            Form::Poly { left, right } => {
                if let Some(e) = left {
                    Some((self.a, e.coeffs(profile, self.a)))
                } else {
                    right.as_ref().map(|e| (self.b, e.coeffs(profile, self.b)))
                }
            }
            Form::Power { .. } => None,
        }
    }
}

/// The nonlinearity together with its domain `(gamma_star_minus, gamma_star]`.
#[derive(Debug, Clone)]
pub struct NonlinearityModel<T> {
    kind: ModelKind<T>,
    gamma_star_minus: T,
    gamma_star: T,
    pieces: Vec<Piece<T>>,
    floor: T,
    ceiling: T,
}

fn hermite_piece<T: Real>(l: &ControlPoint<T>, r: &ControlPoint<T>) -> Piece<T> {
    let h = r.s - l.s;
    let d = (r.big_f - l.big_f) / h;
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let c2 = (three * d - two * l.f - r.f) / h;
    let c3 = (l.f + r.f - two * d) / (h * h);
    let e2 = (l.f + two * r.f - three * d) / h;
    Piece {
        a: l.s,
        b: r.s,
        form: Form::Poly {
            left: Some(Expansion::new(vec![l.big_f, l.f, c2, c3])),
            right: Some(Expansion::new(vec![r.big_f, r.f, e2, c3])),
        },
    }
}

fn tol_eq<T: Real>(a: T, b: T, scale: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * scale.abs().max(T::one())
}

impl<T: Real> NonlinearityModel<T> {
    /// Builds a model; `gamma_star_minus` may be `-inf` and `gamma_star` may be `+inf`.
    pub fn new(kind: ModelKind<T>, gamma_star_minus: T, gamma_star: T) -> Result<Self, ModelError> {
        let invalid = |m: &str| Err(ModelError::InvalidModel(m.to_string()));
        if gamma_star_minus.is_nan() || gamma_star.is_nan() {
            return invalid("domain endpoints must not be NaN");
        }
        if !(gamma_star_minus < T::zero() && gamma_star > T::zero()) {
            return invalid("domain must satisfy gamma_star_minus < 0 < gamma_star");
        }
        let pieces = match &kind {
            ModelKind::Polynomial(c) => {
                let f = poly::trim(if c.is_empty() { vec![T::zero()] } else { c.clone() });
                if !f[0].is_zero() {
                    return invalid("polynomial f must vanish at 0");
                }
                let big_f = poly::antiderivative(&f);
                let side = |centre: T| {
                    centre
                        .is_finite()
                        .then(|| Expansion::new(poly::taylor_shift(&big_f, centre)))
                };
                let mut right_end = side(gamma_star);
                if let Some(e) = right_end.as_mut() {
                    // f(gamma_star) is set exactly to zero when it is zero up to rounding
                    let scale = f.iter().fold(T::zero(), |m, c| m.max(c.abs()))
                        * gamma_star.abs().max(T::one()).powi(f.len() as i32);
                    if e.f[0].abs() <= T::lit(64.0) * T::epsilon() * scale {
                        let mut bf = e.big_f.clone();
                        bf[1] = T::zero();
                        *e = Expansion::new(bf);
                    }
                }
                vec![
                    Piece {
                        a: gamma_star_minus,
                        b: T::zero(),
                        form: Form::Poly {
                            left: side(gamma_star_minus),
                            right: Some(Expansion::new(big_f.clone())),
                        },
                    },
                    Piece {
                        a: T::zero(),
                        b: gamma_star,
                        form: Form::Poly {
                            left: Some(Expansion::new(big_f.clone())),
                            right: right_end,
                        },
                    },
                ]
            }
            ModelKind::HermiteF(pts) | ModelKind::HermiteFPowerTail(pts, _) => {
                if pts.len() < 3 {
                    return invalid("at least three control points are required");
                }
                if pts.iter().any(|p| !(p.s.is_finite() && p.big_f.is_finite() && p.f.is_finite())) {
                    return invalid("control points must be finite");
                }
                if pts.windows(2).any(|w| w[1].s <= w[0].s) {
                    return invalid("control abscissae must be strictly increasing");
                }
                if !pts.iter().any(|p| p.s.is_zero() && p.big_f.is_zero() && p.f.is_zero()) {
                    return invalid("a control point (0, 0, 0) is required");
                }
                if gamma_star_minus.is_finite() && pts[0].s != gamma_star_minus {
                    return invalid("first control point must sit at gamma_star_minus");
                }
                let last = pts[pts.len() - 1];
                let mut pieces: Vec<Piece<T>> =
                    pts.windows(2).map(|w| hermite_piece(&w[0], &w[1])).collect();
                match &kind {
                    ModelKind::HermiteFPowerTail(_, tail) => {
                        if gamma_star.is_finite() {
                            return invalid("a power tail requires gamma_star = +inf");
                        }
                        if !(tail.c > T::zero() && tail.p >= T::one()) {
                            return invalid("power tail requires c > 0 and p >= 1");
                        }
                        if tail.s_tail != last.s || tail.s_tail <= T::zero() {
                            return invalid("s_tail must equal the last control abscissa and be positive");
                        }
                        let ft = tail.c * tail.s_tail.powf(tail.p);
                        if !tol_eq(ft, last.f, ft) {
                            return invalid("f is discontinuous at s_tail");
                        }
                        pieces.push(Piece {
                            a: tail.s_tail,
                            b: T::infinity(),
                            form: Form::Power {
                                c: tail.c,
                                p: tail.p,
                                big_f0: last.big_f,
                            },
                        });
                    }
                    _ => {
                        if !gamma_star.is_finite() {
                            return invalid("gamma_star = +inf requires a power tail");
                        }
                        if last.s != gamma_star {
                            return invalid("last control point must sit at gamma_star");
                        }
                    }
                }
                pieces
            }
        };
        let mut model = Self {
            kind,
            gamma_star_minus,
            gamma_star,
            pieces,
            floor: gamma_star_minus,
            ceiling: gamma_star,
        };
        model.floor = model.compute_floor();
        model.ceiling = model.compute_ceiling();
        Ok(model)
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn gamma_star(&self) -> T {
        self.gamma_star
    }

    pub fn gamma_star_minus(&self) -> T {
        self.gamma_star_minus
    }

    /// Finite stand-in for `gamma_star_minus` used by every search.
    pub fn floor(&self) -> T {
        self.floor
    }

    /// Finite upper bound used by every search (`gamma_star` when finite).
    pub fn ceiling(&self) -> T {
        self.ceiling
    }

    pub fn is_finite_case(&self) -> bool {
        self.gamma_star.is_finite()
    }

    fn piece_index(&self, u: T, from_below: bool) -> usize {
        let i = self.pieces.partition_point(|p| p.a <= u).saturating_sub(1);
        if from_below && i > 0 && self.pieces[i].a == u {
            i - 1
        } else {
            i
        }
    }

    #[inline]
    fn locate(&self, anchor: T, w: T) -> (&Piece<T>, Local<T>) {
        let u = anchor + w;
        let piece = &self.pieces[self.piece_index(u, w < T::zero())];
        (piece, piece.locate(anchor, w))
    }

    /// `f(anchor + w)` evaluated in the expansion about `anchor` when it is a knot.
    #[inline]
    pub fn f_at(&self, anchor: T, w: T) -> T {
        let (p, at) = self.locate(anchor, w);
        p.eval(Profile::Force, at)
    }

    #[inline]
    pub fn big_f_at(&self, anchor: T, w: T) -> T {
        let (p, at) = self.locate(anchor, w);
        p.eval(Profile::Primitive, at)
    }

    #[inline]
    pub fn df_at(&self, anchor: T, w: T) -> T {
        let (p, at) = self.locate(anchor, w);
        p.eval_df(at)
    }

    pub fn profile_at(&self, profile: Profile, anchor: T, w: T) -> T {
        let (p, at) = self.locate(anchor, w);
        p.eval(profile, at)
    }

    /// Unchecked evaluation (extrapolates outside the domain).
    pub fn value(&self, profile: Profile, s: T) -> T {
        self.profile_at(profile, T::zero(), s)
    }

    pub fn in_domain(&self, s: T) -> bool {
        s > self.gamma_star_minus && s <= self.gamma_star && s >= self.floor
    }

    fn checked(&self, profile: Profile, s: T) -> Result<T, ModelError> {
        if !s.is_finite() || !self.in_domain(s) {
            return Err(ModelError::OutOfDomain(s.to_f64_lossy()));
        }
        Ok(self.value(profile, s))
    }

    pub fn eval_f(&self, s: T) -> Result<T, ModelError> {
        self.checked(Profile::Force, s)
    }

    #[allow(non_snake_case)]
    pub fn eval_F(&self, s: T) -> Result<T, ModelError> {
        self.checked(Profile::Primitive, s)
    }

    #[allow(non_snake_case)]
    pub fn eval_Q(&self, n: u32, s: T) -> Result<T, ModelError> {
        self.checked(Profile::Pohozaev(n), s)
    }

    /// Pieces overlapping `[lo, hi]`, clipped.
    fn overlapping(&self, lo: T, hi: T) -> impl Iterator<Item = (&Piece<T>, T, T)> {
        self.pieces.iter().filter_map(move |p| {
            let a = p.a.max(lo);
            let b = p.b.min(hi);
            (a <= b).then_some((p, a, b))
        })
    }

    /// Roots of `profile(s) = level` in `[lo, hi]`, sorted.
    pub fn level_roots(&self, profile: Profile, level: T, lo: T, hi: T) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for (p, a, b) in self.overlapping(lo, hi) {
            match p.centred(profile) {
                Some((c, mut coeffs)) => {
                    coeffs[0] = coeffs[0] - level;
                    out.extend(poly::real_roots(&coeffs, a - c, b - c).into_iter().map(|x| c + x));
                }
                None => {
                    let g = |s: T| self.value(profile, s) - level;
                    let (ga, gb) = (g(a), g(b));
                    if ga.is_zero() {
                        out.push(a);
                    } else if (ga < T::zero()) != (gb < T::zero()) || gb.is_zero() {
                        out.push(poly::bisect(g, a, b));
                    }
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        let tol = T::lit(1e-13) * (hi - lo).abs().max(T::one());
        out.dedup_by(|x, y| (*x - *y).abs() <= tol);
        out
    }

    /// Critical points of `profile` in the open interval, sorted.
    pub fn critical_points(&self, profile: Profile, lo: T, hi: T) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for (p, a, b) in self.overlapping(lo, hi) {
            if let Some((c, coeffs)) = p.centred(profile) {
                out.extend(
                    poly::critical_points(&coeffs, a - c, b - c)
                        .into_iter()
                        .map(|x| c + x)
                        .filter(|&s| s > lo && s < hi),
                );
            }
            if p.a > lo && p.a < hi {
                out.push(p.a);
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        out.dedup();
        out
    }

    /// Minimum (`want_max = false`) or maximum of `profile` on `[lo, hi]`,
    /// returned as `(argument, value)`.
    pub fn extremum(&self, profile: Profile, lo: T, hi: T, want_max: bool) -> (T, T) {
        let mut best = (lo, self.value(profile, lo));
        let better = |v: T, b: T| if want_max { v > b } else { v < b };
        for s in self
            .critical_points(profile, lo, hi)
            .into_iter()
            .chain(std::iter::once(hi))
        {
            let v = self.value(profile, s);
            if better(v, best.1) {
                best = (s, v);
            }
        }
        best
    }

    pub fn min_on(&self, profile: Profile, lo: T, hi: T) -> T {
        self.extremum(profile, lo, hi, false).1
    }

    pub fn max_on(&self, profile: Profile, lo: T, hi: T) -> T {
        self.extremum(profile, lo, hi, true).1
    }

    /// Growth exponent and coefficient of `f` at `+inf`, when defined.
    pub fn tail_growth(&self) -> Option<(T, T)> {
        match &self.kind {
            ModelKind::HermiteFPowerTail(_, t) => Some((t.p, t.c)),
            ModelKind::Polynomial(c) => {
                let c = poly::trim(c.clone());
                let deg = c.len() - 1;
                (deg >= 1).then(|| (T::count(deg), c[deg]))
            }
            ModelKind::HermiteF(_) => None,
        }
    }

    fn poly_root_bound(&self) -> T {
        match &self.kind {
            ModelKind::Polynomial(c) => {
                let c = poly::trim(c.clone());
                let lead = c[c.len() - 1];
                if c.len() <= 1 || lead.is_zero() {
                    return T::one();
                }
                T::one() + c.iter().take(c.len() - 1).fold(T::zero(), |m, &x| m.max((x / lead).abs()))
            }
            _ => T::one(),
        }
    }

    fn compute_floor(&self) -> T {
        if self.gamma_star_minus.is_finite() {
            return self.gamma_star_minus;
        }
        match &self.kind {
            ModelKind::HermiteF(p) | ModelKind::HermiteFPowerTail(p, _) => p[0].s,
            ModelKind::Polynomial(_) => {
                let r = self.poly_root_bound();
                let hi = if self.gamma_star.is_finite() { self.gamma_star } else { r };
                let level = self.max_on(Profile::Primitive, -r, hi).abs().max(T::one());
                let mut x = r;
                for _ in 0..64 {
                    if self.value(Profile::Primitive, -x) >= T::lit(1.1) * level {
                        break;
                    }
                    x = x * T::lit(2.0);
                }
                -x
            }
        }
    }

    fn compute_ceiling(&self) -> T {
        if self.gamma_star.is_finite() {
            return self.gamma_star;
        }
        let start = match &self.kind {
            ModelKind::HermiteFPowerTail(_, t) => t.s_tail * T::lit(4.0),
            _ => self.poly_root_bound(),
        };
        let lo = self.floor;
        let level = self.max_on(Profile::Primitive, lo, start).abs().max(T::one());
        let mut x = start;
        for _ in 0..64 {
            if self.value(Profile::Primitive, x) >= T::lit(1.1) * level {
                break;
            }
            x = x * T::lit(2.0);
        }
        x
    }

    /// Zeros of `f` on `[floor, ceiling]`, including touching zeros and
    /// whole intervals where `f` vanishes identically (reported by their ends).
    fn force_zeros(&self) -> (Vec<T>, Vec<(T, T)>) {
        let (lo, hi) = (self.floor, self.ceiling);
        let mut zeros = Vec::new();
        let mut flat = Vec::new();
        for (p, a, b) in self.overlapping(lo, hi) {
            match p.centred(Profile::Force) {
                Some((c, coeffs)) => {
                    let scale = coeffs.iter().fold(T::zero(), |m, x| m.max(x.abs()));
                    if scale.is_zero() {
                        flat.push((a, b));
                        continue;
                    }
                    zeros.extend(poly::real_roots(&coeffs, a - c, b - c).into_iter().map(|x| c + x));
                    for x in poly::critical_points(&coeffs, a - c, b - c) {
                        if poly::eval(&coeffs, x).abs() <= T::lit(1e-14) * scale {
                            zeros.push(c + x);
                        }
                    }
                }
                None => {
                    if self.value(Profile::Force, a).is_zero() {
                        zeros.push(a);
                    }
                }
            }
        }
        // knots where the stored slope is exactly zero
        for p in &self.pieces {
            if p.a.is_finite() && p.a >= lo && p.a <= hi && self.value(Profile::Force, p.a).is_zero() {
                zeros.push(p.a);
            }
        }
        if self.gamma_star.is_finite() && self.value(Profile::Force, self.gamma_star).is_zero() {
            zeros.push(self.gamma_star);
        }
        zeros.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let tol = T::lit(1e-12) * (hi - lo).max(T::one());
        zeros.dedup_by(|x, y| (*x - *y).abs() <= tol);
        (zeros, flat)
    }

    /// Zeros of `f` with a flag telling whether `f` changes sign there.
    pub fn zeros_of_f(&self) -> Vec<ZeroOfF<T>> {
        let (zeros, _) = self.force_zeros();
        let (lo, hi) = (self.floor, self.ceiling);
        let mut bounds = vec![lo];
        bounds.extend(zeros.iter().copied().filter(|&z| z > lo && z < hi));
        bounds.push(hi);
        let signs: Vec<T> = bounds
            .windows(2)
            .map(|w| self.value(Profile::Force, (w[0] + w[1]) / T::lit(2.0)).signum())
            .collect();
        zeros
            .iter()
            .map(|&z| {
                let i = bounds.iter().position(|&b| b == z);
                let sign_change = match i {
                    Some(i) if i > 0 && i < signs.len() => signs[i - 1] != signs[i],
                    _ => true,
                };
                ZeroOfF { s: z, sign_change }
            })
            .collect()
    }

    /// Sign of `F` on a small punctured neighbourhood of 0, per side.
    fn sign_near_zero(&self, right: bool) -> T {
        let idx = self.piece_index(T::zero(), !right);
        let p = &self.pieces[idx];
        let coeffs = match &p.form {
            Form::Poly { left, right: r } => {
                let e = if right { left } else { r };
                match e {
                    Some(e) => e.big_f.clone(),
                    None => return self.value(Profile::Primitive, if right { T::epsilon() } else { -T::epsilon() }).signum(),
                }
            }
            Form::Power { .. } => return T::one(),
        };
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            if !c.is_zero() {
                let s = c.signum();
                return if !right && j % 2 == 1 { -s } else { s };
            }
        }
        T::zero()
    }

    pub fn check_hypotheses(&self, n: u32) -> HypothesisReport<T> {
        let zeros = self.zeros_of_f();
        let (_, flat) = self.force_zeros();
        let fail = |s: T, msg: &str| Verdict::Fail(Witness { s, violated: msg.to_string() });
        let finite = self.is_finite_case();

        let f0 = self.value(Profile::Force, T::zero());
        let f1 = if !f0.is_zero() {
            fail(T::zero(), "f(0) = 0")
        } else if finite && !tol_eq(self.value(Profile::Force, self.gamma_star), T::zero(), T::one()) {
            fail(self.gamma_star, "f(gamma_star) = 0")
        } else {
            Verdict::Pass
        };

        let delta = self.delta();
        let f2 = self.check_f2(delta, finite);

        let d = delta.unwrap_or(T::zero());
        let gamma1 = self.first_positive_max(d);
        let f3 = match gamma1 {
            Some(_) => Verdict::Pass,
            None => fail(
                self.extremum(Profile::Primitive, d, self.ceiling, true).0,
                "F has a local maximum at some gamma in (delta, gamma_star) with F(gamma) > 0",
            ),
        };

        let outer = |s: T| s.abs() > d && s > self.floor && s < self.gamma_star;
        let f4 = if let Some(&(a, _)) = flat.iter().find(|(a, b)| outer(*a) || outer(*b)) {
            fail(a, "f has finitely many zeros away from 0")
        } else if let Some(z) = zeros.iter().find(|z| outer(z.s) && !z.sign_change) {
            fail(z.s, "f changes sign at each of its zeros away from 0")
        } else {
            Verdict::Pass
        };

        let f5 = if finite { Verdict::NotApplicable } else { self.check_f5(n) };

        let all = [&f1, &f2, &f3, &f4].iter().all(|v| v.passed());
        let case = match (all, finite, f5.passed()) {
            (true, true, _) => Case::A1,
            (true, false, true) => Case::A2,
            _ => Case::Neither,
        };
        HypothesisReport {
            case,
            f1,
            f2,
            f3,
            f4,
            f5,
            zeros,
        }
    }

    /// Largest `delta` with `F < 0` on `0 < |s| < delta`; `None` if `F` is not
    /// negative on both sides of 0.
    pub fn delta(&self) -> Option<T> {
        if self.sign_near_zero(true) >= T::zero() || self.sign_near_zero(false) >= T::zero() {
            return None;
        }
        let z = T::zero();
        let pos = self
            .level_roots(Profile::Primitive, z, z, self.ceiling)
            .into_iter()
            .find(|&s| s > z)
            .unwrap_or(self.ceiling);
        let neg = self
            .level_roots(Profile::Primitive, z, self.floor, z)
            .into_iter()
            .rev()
            .find(|&s| s < z)
            .unwrap_or(self.floor);
        Some(pos.min(-neg))
    }

    /// Strict local maxima of `F` in the open interval, sorted.
    pub fn local_maxima(&self, lo: T, hi: T) -> Vec<T> {
        let zeros = self.zeros_of_f();
        zeros
            .iter()
            .filter(|z| z.s > lo && z.s < hi && z.sign_change)
            .filter(|z| {
                let h = T::lit(1e-7) * z.s.abs().max(T::one());
                self.value(Profile::Force, z.s - h) > T::zero() && self.value(Profile::Force, z.s + h) < T::zero()
            })
            .map(|z| z.s)
            .collect()
    }

    fn first_positive_max(&self, delta: T) -> Option<T> {
        self.local_maxima(delta, self.gamma_star.min(self.ceiling))
            .into_iter()
            .find(|&g| self.value(Profile::Primitive, g) > T::zero())
    }

    fn check_f2(&self, delta: Option<T>, finite: bool) -> Verdict<T> {
        let fail = |s: T, msg: &str| Verdict::Fail(Witness { s, violated: msg.to_string() });
        if delta.is_none() {
            let s = if self.sign_near_zero(true) >= T::zero() { T::epsilon() } else { -T::epsilon() };
            return fail(s, "F(s) < 0 for 0 < |s| < delta");
        }
        let big = |s: T| self.value(Profile::Primitive, s);
        let maxima = self.local_maxima(self.floor, self.ceiling);
        if finite {
            let top = big(self.gamma_star);
            if !tol_eq(big(self.floor), top, top) {
                return fail(self.floor, "F(gamma_star_minus+) = F(gamma_star)");
            }
            if let Some(&s) = maxima.iter().find(|&&s| big(s) >= top) {
                return fail(s, "F(s) < F(gamma_star) on (gamma_star_minus, gamma_star)");
            }
            Verdict::Pass
        } else {
            let grows = self.tail_growth().is_some_and(|(_, c)| c > T::zero());
            if !grows {
                return fail(self.ceiling, "F(s) < lim F at +inf");
            }
            let left_unbounded = match &self.kind {
                ModelKind::Polynomial(c) => {
                    let c = poly::trim(c.clone());
                    let deg = c.len() - 1;
                    // F ~ c_deg s^(deg+1)/(deg+1)
                    self.gamma_star_minus.is_infinite() && deg % 2 == 1 && c[deg] > T::zero()
                }
                _ => self.gamma_star_minus.is_infinite(),
            };
            if !left_unbounded {
                return fail(self.floor, "lim F at gamma_star_minus = lim F at +inf");
            }
            let ref_level = maxima.iter().map(|&s| big(s)).fold(T::zero(), T::max);
            if big(self.floor) < T::lit(1.1) * ref_level {
                return fail(self.floor, "F at the computational floor exceeds every local maximum");
            }
            Verdict::Pass
        }
    }

    fn check_f5(&self, n: u32) -> Verdict<T> {
        let fail = |s: T, msg: &str| Verdict::Fail(Witness { s, violated: msg.to_string() });
        if self.s0(n).is_none() {
            return fail(self.floor, "Q(s) > 0 on (gamma_star_minus, s0)");
        }
        match self.tail_growth() {
            Some((p, c)) if c > T::zero() => {
                let ok = n == 2 || p < T::lit((n as f64 + 2.0) / (n as f64 - 2.0));
                if ok {
                    Verdict::Pass
                } else {
                    fail(self.ceiling, "growth exponent p < (N+2)/(N-2)")
                }
            }
            _ => fail(self.ceiling, "f grows like c s^p with c > 0"),
        }
    }

    /// Smallest zero of `Q` on `(floor, 0)`, when `Q > 0` to its left.
    pub fn s0(&self, n: u32) -> Option<T> {
        let q = Profile::Pohozaev(n);
        if self.value(q, self.floor) <= T::zero() {
            return None;
        }
        self.level_roots(q, T::zero(), self.floor, T::zero())
            .into_iter()
            .find(|&s| s > self.floor)
    }

    /// Depth of the `F < 0` well around the origin: `max |F|` between the
    /// nearest zeros of `F` on either side.
    pub fn origin_well_depth(&self) -> T {
        let z = T::zero();
        let hi = self
            .level_roots(Profile::Primitive, z, z, self.ceiling)
            .into_iter()
            .find(|&s| s > z)
            .unwrap_or(self.ceiling);
        let lo = self
            .level_roots(Profile::Primitive, z, self.floor, z)
            .into_iter()
            .rev()
            .find(|&s| s < z)
            .unwrap_or(self.floor);
        (-self.min_on(Profile::Primitive, lo, hi)).max(T::zero())
    }

    pub fn compute_landmarks(&self, n: u32) -> Result<Landmarks<T>, ModelError> {
        let report = self.check_hypotheses(n);
        if report.case == Case::Neither {
            return Err(ModelError::LandmarkNotFound(
                "hypotheses (A1)/(A2) do not hold".to_string(),
            ));
        }
        let missing = |m: &str| ModelError::LandmarkNotFound(m.to_string());
        let big = |s: T| self.value(Profile::Primitive, s);
        let delta = self.delta().ok_or_else(|| missing("delta"))?;

        let chain = self.gamma_chain();
        let gammas_pos: Vec<T> = chain.points[chain.origin + 1..chain.points.len() - 1].to_vec();
        if gammas_pos.is_empty() {
            return Err(missing("gamma_1"));
        }
        let gammas_neg: Vec<T> = chain.points[1..chain.origin].to_vec();
        let gammas_neg_desc: Vec<T> = gammas_neg.iter().rev().copied().collect();

        let largest = |level: T, lo: T, hi: T, what: &str| {
            self.level_roots(Profile::Primitive, level, lo, hi)
                .into_iter().rfind(|&s| s > lo && s < hi)
                .ok_or_else(|| missing(what))
        };
        let smallest = |level: T, lo: T, hi: T, what: &str| {
            self.level_roots(Profile::Primitive, level, lo, hi)
                .into_iter()
                .find(|&s| s > lo && s < hi)
                .ok_or_else(|| missing(what))
        };

        let mut betas_pos = Vec::new();
        let mut prev = T::zero();
        for &g in &gammas_pos {
            betas_pos.push(largest(big(prev), prev, g, "beta_i")?);
            prev = g;
        }
        let gamma_m = prev;
        let beta_star = largest(big(gamma_m), gamma_m, self.ceiling, "beta_star")?;

        let mut betas_neg_desc = Vec::new();
        let mut prev = T::zero();
        for &g in &gammas_neg_desc {
            betas_neg_desc.push(smallest(big(prev), g, prev, "beta_-i")?);
            prev = g;
        }
        let betas_neg: Vec<T> = betas_neg_desc.iter().rev().copied().collect();
        let gamma_mbar = prev;
        let beta_star_minus = smallest(big(gamma_mbar), self.floor, gamma_mbar, "beta_star_minus")?;

        let s0 = if self.is_finite_case() { None } else { self.s0(n) };
        let beta_bar = self.choose_beta_bar(n, beta_star, big(beta_star_minus))?;

        let u_bar = self.level_point_left(big(gammas_pos[0]))?;

        Ok(Landmarks {
            n,
            case: report.case,
            delta,
            m: gammas_pos.len(),
            m_bar: -(gammas_neg.len() as i32),
            gammas_pos,
            gammas_neg,
            betas_pos,
            betas_neg,
            beta_star,
            beta_star_minus,
            beta_bar,
            u_bar,
            s0,
            theta: s0.map(|_| T::lit(0.5)),
            gamma_star: self.gamma_star,
            gamma_star_minus: self.floor,
            origin_well_depth: self.origin_well_depth(),
        })
    }

    /// The increasing chains of maxima of `F` on both sides of the origin,
    /// closed by the domain endpoints.
    pub fn gamma_chain(&self) -> GammaChain<T> {
        let big = |s: T| self.value(Profile::Primitive, s);
        let top = self.gamma_star.min(self.ceiling);
        let mut pos: Vec<T> = Vec::new();
        for g in self.local_maxima(T::zero(), top) {
            let above = pos.last().map_or(T::zero(), |&p| big(p));
            if big(g) > above {
                pos.push(g);
            }
        }
        let mut neg: Vec<T> = Vec::new();
        for g in self.local_maxima(self.floor, T::zero()).into_iter().rev() {
            let above = neg.last().map_or(T::zero(), |&p| big(p));
            if big(g) > above {
                neg.push(g);
            }
        }
        let mut points = vec![self.floor];
        points.extend(neg.iter().rev());
        let origin = points.len();
        points.push(T::zero());
        points.extend(pos);
        points.push(self.gamma_star);
        let levels = points
            .iter()
            .map(|&s| if s.is_finite() { big(s) } else { T::infinity() })
            .collect();
        GammaChain { points, levels, origin }
    }

    /// Finite breakpoints between pieces.
    pub fn knots(&self) -> Vec<T> {
        self.pieces.iter().skip(1).map(|p| p.a).filter(|a| a.is_finite()).collect()
    }

    /// Isolated zeros of `f` (intervals where `f` vanishes identically are skipped).
    pub fn isolated_zeros(&self) -> Vec<T> {
        self.force_zeros().0
    }

    /// Largest point in `(floor, 0)` with `F = level`.
    pub fn level_point_left(&self, level: T) -> Result<T, ModelError> {
        self.level_roots(Profile::Primitive, level, self.floor, T::zero())
            .into_iter().rfind(|&s| s < T::zero())
            .ok_or(ModelError::LevelNotAttained(level.to_f64_lossy()))
    }

    fn choose_beta_bar(&self, n: u32, beta_star: T, level: T) -> Result<T, ModelError> {
        let margin = T::lit(1e-6);
        let big = |s: T| self.value(Profile::Primitive, s);
        if self.is_finite_case() {
            let span = self.gamma_star - beta_star;
            return (1..64)
                .map(|j| beta_star + span * T::count(j) / T::lit(64.0))
                .find(|&s| big(s) > level + margin)
                .ok_or_else(|| ModelError::LandmarkNotFound("beta_bar".to_string()));
        }
        let q = Profile::Pohozaev(n);
        let step = beta_star.max(T::one()) / T::lit(64.0);
        let samples = 4096;
        for j in 1..=64 * 64 {
            let s = beta_star + step * T::count(j);
            if big(s) <= level + margin {
                continue;
            }
            let lvl = big(s);
            // Q > 0 wherever F > F(s), sampled on the whole computational range
            let (lo, hi) = (self.floor, self.ceiling.max(s * T::lit(4.0)));
            let ok = (0..=samples).all(|i| {
                let x = lo + (hi - lo) * T::count(i) / T::count(samples);
                big(x) <= lvl || self.value(q, x) > T::zero()
            });
            if ok {
                return Ok(s);
            }
        }
        Err(ModelError::LandmarkNotFound("beta_bar".to_string()))
    }
}

/// `gamma_{M_bar - 1} < ... < gamma_0 = 0 < ... < gamma_{M+1}` with `F` at each.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaChain<T> {
    pub points: Vec<T>,
    pub levels: Vec<T>,
    /// Position of `gamma_0 = 0` in `points`.
    pub origin: usize,
}

impl<T: Real> GammaChain<T> {
    /// Index `i` (relative to the origin) of the open well containing `u`.
    pub fn well_of(&self, u: T) -> Option<i32> {
        let j = self.points.partition_point(|&p| p < u);
        if j == 0 || j >= self.points.len() || self.points[j] == u {
            return None;
        }
        Some(j as i32 - 1 - self.origin as i32)
    }

    /// Trapping level `min(F(gamma_i), F(gamma_{i+1}))` of well `i`.
    pub fn trap_level(&self, i: i32) -> T {
        let j = (i + self.origin as i32) as usize;
        self.levels[j].min(self.levels[j + 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroOfF<T> {
    pub s: T,
    pub sign_change: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    A1,
    A2,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness<T> {
    pub s: T,
    pub violated: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict<T> {
    Pass,
    Fail(Witness<T>),
    NotApplicable,
}

impl<T> Verdict<T> {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport<T> {
    pub case: Case,
    pub f1: Verdict<T>,
    pub f2: Verdict<T>,
    pub f3: Verdict<T>,
    pub f4: Verdict<T>,
    pub f5: Verdict<T>,
    pub zeros: Vec<ZeroOfF<T>>,
}

impl<T> HypothesisReport<T> {
    /// First failing condition as `(name, witness)`.
    pub fn first_failure(&self) -> Option<(&'static str, &Witness<T>)> {
        [("f1", &self.f1), ("f2", &self.f2), ("f3", &self.f3), ("f4", &self.f4), ("f5", &self.f5)]
            .into_iter()
            .find_map(|(name, v)| match v {
                Verdict::Fail(w) => Some((name, w)),
                _ => None,
            })
    }
}

/// The special constants attached to a nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landmarks<T> {
    pub n: u32,
    pub case: Case,
    pub delta: T,
    /// `gamma_1 < ... < gamma_M`
    pub gammas_pos: Vec<T>,
    /// `gamma_{M_bar} < ... < gamma_{-1}`
    pub gammas_neg: Vec<T>,
    pub m: usize,
    /// Non-positive: `-(number of negative maxima)`.
    pub m_bar: i32,
    pub betas_pos: Vec<T>,
    pub betas_neg: Vec<T>,
    pub beta_star: T,
    pub beta_star_minus: T,
    pub beta_bar: T,
    /// Largest point of `(gamma_star_minus, 0)` with `F = F(gamma_1)`.
    pub u_bar: T,
    pub s0: Option<T>,
    pub theta: Option<T>,
    pub gamma_star: T,
    /// Finite representative of the left endpoint.
    pub gamma_star_minus: T,
    pub origin_well_depth: T,
}

impl<T: Real> Landmarks<T> {
    /// `gamma_i` for `m_bar - 1 <= i <= m + 1`, with `gamma_0 = 0`.
    pub fn gamma(&self, i: i32) -> T {
        let m = self.m as i32;
        match i {
            0 => T::zero(),
            i if i == m + 1 => self.gamma_star,
            i if i > 0 && i <= m => self.gammas_pos[(i - 1) as usize],
            i if i == self.m_bar - 1 => self.gamma_star_minus,
            i if i < 0 && i >= self.m_bar => {
                let len = self.gammas_neg.len() as i32;
                self.gammas_neg[(len + i) as usize]
            }
            _ => panic!("gamma index {i} out of range"),
        }
    }

    pub fn beta_1(&self) -> T {
        self.betas_pos[0]
    }

    pub fn gamma_1(&self) -> T {
        self.gammas_pos[0]
    }

    pub fn gamma_m(&self) -> T {
        self.gammas_pos[self.m - 1]
    }

    /// Index `i` of the well `(gamma_i, gamma_{i+1})` containing `u`, or
    /// `None` if `u` sits exactly on a maximum or outside the domain.
    pub fn well_index(&self, u: T) -> Option<i32> {
        let m = self.m as i32;
        (self.m_bar - 1..=m).find(|&i| self.gamma(i) < u && u < self.gamma(i + 1))
    }

    /// All finite interior maxima with their indices (`gamma_0 = 0` included).
    pub fn indexed_gammas(&self) -> Vec<(i32, T)> {
        (self.m_bar..=self.m as i32).map(|i| (i, self.gamma(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> NonlinearityModel<f64> {
        let rows = [
            (-3.0, 1.0, 0.0),
            (-1.0, -0.3, 0.0),
            (0.0, 0.0, 0.0),
            (0.5, -0.2, 0.0),
            (1.0, 0.4, 0.0),
            (1.5, 0.1, 0.0),
            (2.0, 1.0, 0.0),
        ];
        let pts = rows.iter().map(|&(s, a, b)| ControlPoint::new(s, a, b)).collect();
        NonlinearityModel::new(ModelKind::HermiteF(pts), -3.0, 2.0).unwrap()
    }

    #[test]
    fn hermite_matches_control_data() {
        let m = m1();
        assert_eq!(m.eval_f(1.0).unwrap(), 0.0);
        assert_eq!(m.eval_F(1.0).unwrap(), 0.4);
        assert_eq!(m.eval_F(0.0).unwrap(), 0.0);
        assert!(m.eval_f(2.5).is_err());
        assert!(m.eval_f(-3.0).is_err());
    }

    #[test]
    fn anchored_evaluation_is_relative() {
        let m = m1();
        let d = 1e-60;
        let f = m.f_at(2.0, -d);
        // f'(2) from the right-centred cubic: 2 e2 with e2 = -3 D / h, D = 1.8
        let slope = 2.0 * (-3.0 * 1.8 / 0.5);
        assert!((f / (-d) - slope).abs() < 1e-9 * slope.abs(), "{f}");
    }

    #[test]
    fn m1_is_a1() {
        let r = m1().check_hypotheses(3);
        assert_eq!(r.case, Case::A1, "{r:?}");
    }

    #[test]
    fn cubic_without_positive_max_fails_f3() {
        let m = NonlinearityModel::new(ModelKind::Polynomial(vec![0.0, -1.0, 0.0, 1.0]), f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let r = m.check_hypotheses(3);
        assert_eq!(r.case, Case::Neither);
        assert_eq!(r.first_failure().unwrap().0, "f3");
    }
}
