//! Constants and inequality tests for the nonexistence and `k0 = 0`
//! criteria, and the radius bound `C_k`.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dop853::GAUSS8;
use crate::nonlinearity::{Case, Landmarks, ModelError, NonlinearityModel, Profile};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("missing landmark: {0}")]
    MissingLandmark(String),
    #[error("level {0} is not attained")]
    LevelNotAttained(f64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

impl From<ModelError> for TheoremError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::LevelNotAttained(l) => TheoremError::LevelNotAttained(l),
            other => TheoremError::MissingLandmark(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    NonexistenceA1,
    NonexistenceA2,
    K0Condition,
}

/// Named constants in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Constants<T>(pub Vec<(String, T)>);

impl<T: Real> Constants<T> {
    pub fn push(&mut self, name: &str, v: T) {
        self.0.push((name.to_string(), v));
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.0.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

impl<T: Serialize> Serialize for Constants<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport<T> {
    pub theorem: Theorem,
    pub k: Option<usize>,
    pub constants: Constants<T>,
    pub lhs: T,
    pub rhs: T,
    /// `lhs < rhs`.
    pub holds: bool,
}

impl<T: Real> TheoremReport<T> {
    fn new(theorem: Theorem, k: Option<usize>, constants: Constants<T>, lhs: T, rhs: T) -> Self {
        Self {
            theorem,
            k,
            constants,
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// `C_k = (k+1)(2 beta_bar - u)(N-1) sqrt(2(F(2 beta_bar) + F~)) / (F(2 beta_bar) - F(beta_bar))`.
pub fn ck_formula<T: Real>(k: usize, n: u32, beta_bar: T, u_bar: T, f_2bb: T, f_tilde: T, f_bb: T) -> T {
    let two = T::lit(2.0);
    let unit = (two * beta_bar - u_bar) * T::lit(n as f64 - 1.0) * (two * (f_2bb + f_tilde)).sqrt() / (f_2bb - f_bb);
    T::count(k + 1) * unit
}

fn big<T: Real>(model: &NonlinearityModel<T>, s: T) -> T {
    model.value(Profile::Primitive, s)
}

/// `F~ = -min F` on `[beta_star_minus, beta_star]`.
pub fn f_tilde<T: Real>(model: &NonlinearityModel<T>, lm: &Landmarks<T>) -> T {
    -model.min_on(Profile::Primitive, lm.beta_star_minus, lm.beta_star)
}

/// Largest point of `(gamma_star_minus, 0)` with `F = F(gamma_1)`.
pub fn compute_u_bar<T: Real>(model: &NonlinearityModel<T>, lm: &Landmarks<T>) -> Result<T, TheoremError> {
    Ok(model.level_point_left(big(model, lm.gamma_1()))?)
}

/// Level point of `F(2 beta_bar)` to the left of the origin.
pub fn u_bar_2betabar<T: Real>(model: &NonlinearityModel<T>, lm: &Landmarks<T>) -> Result<T, TheoremError> {
    let two_bb = T::lit(2.0) * lm.beta_bar;
    Ok(model.level_point_left(big(model, two_bb))?)
}

pub fn compute_ck<T: Real>(
    model: &NonlinearityModel<T>,
    lm: &Landmarks<T>,
    n: u32,
    k: usize,
) -> Result<T, TheoremError> {
    if lm.case != Case::A2 {
        return Err(TheoremError::NotApplicable("C_k is defined under (A2)".to_string()));
    }
    let two_bb = T::lit(2.0) * lm.beta_bar;
    if !model.in_domain(two_bb) {
        return Err(TheoremError::MissingLandmark("2 beta_bar outside the domain".to_string()));
    }
    let u = u_bar_2betabar(model, lm)?;
    Ok(ck_formula(
        k,
        n,
        lm.beta_bar,
        u,
        big(model, two_bb),
        f_tilde(model, lm),
        big(model, lm.beta_bar),
    ))
}

/// `Q_bar = -min Q` on `[s0, beta_bar]` (zero when `s0` is undefined).
pub fn q_bar<T: Real>(model: &NonlinearityModel<T>, lm: &Landmarks<T>, n: u32) -> T {
    match lm.s0 {
        Some(s0) => -model.min_on(Profile::Pohozaev(n), s0, lm.beta_bar),
        None => T::zero(),
    }
}

/// Pohozaev level that certifies `alpha_k` in the large-`alpha` argument:
/// `2 (C_k+1)^N B + (k+1) Q_bar (C_k+1)^N / N`.
pub fn pohozaev_threshold<T: Real>(
    model: &NonlinearityModel<T>,
    lm: &Landmarks<T>,
    n: u32,
    k: usize,
) -> Result<T, TheoremError> {
    let ck = compute_ck(model, lm, n, k)?;
    let u = u_bar_2betabar(model, lm)?;
    let nn = T::lit(n as f64);
    let two = T::lit(2.0);
    let c1 = ck + T::one();
    let b = (T::lit(4.0) * lm.beta_bar - two * u + (nn - two) * u.abs() / (two * c1)).powi(2)
        + big(model, two * lm.beta_bar);
    let c1n = c1.powi(n as i32);
    Ok(two * c1n * b + T::count(k + 1) * q_bar(model, lm, n) * c1n / nn)
}

/// Nonexistence criterion for bound states with at most `k` sign changes.
/// Under (A2) the sup of `F` runs over `[0, alpha_k]`, which must be given.
pub fn nonexistence_condition<T: Real>(
    model: &NonlinearityModel<T>,
    lm: &Landmarks<T>,
    n: u32,
    k: usize,
    alpha_k: Option<T>,
) -> Result<TheoremReport<T>, TheoremError> {
    let u_bar = compute_u_bar(model, lm)?;
    let g1 = lm.gamma_1();
    let lhs = f_tilde(model, lm);
    let (theorem, top_name, top) = match lm.case {
        Case::A1 => (Theorem::NonexistenceA1, "F(gamma_star)", big(model, lm.gamma_star)),
        Case::A2 => {
            let ak = alpha_k.ok_or_else(|| TheoremError::MissingLandmark("alpha_k".to_string()))?;
            (
                Theorem::NonexistenceA2,
                "sup F on [0, alpha_k]",
                model.max_on(Profile::Primitive, T::zero(), ak),
            )
        }
        Case::Neither => return Err(TheoremError::NotApplicable("hypotheses do not hold".to_string())),
    };
    let nn1 = T::lit(n as f64 - 1.0);
    let fg1 = big(model, g1);
    let rhs = (lm.beta_star - g1) / (T::lit(2.0) * nn1 * T::count(k + 1)) * fg1 / (g1 - u_bar) - top;
    let mut c = Constants::default();
    c.push("u_bar_gamma1", u_bar);
    c.push("gamma_1", g1);
    c.push("F(gamma_1)", fg1);
    c.push("beta_star", lm.beta_star);
    c.push("beta_star_minus", lm.beta_star_minus);
    c.push("F_tilde", lhs);
    if let Some(ak) = alpha_k.filter(|_| lm.case == Case::A2) {
        c.push("alpha_k", ak);
    }
    c.push(top_name, top);
    Ok(TheoremReport::new(theorem, Some(k), c, lhs, rhs))
}

/// Inputs of the `k0 = 0` criterion, separated from the model so the
/// formula can be evaluated on synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K0Inputs<T> {
    pub case: Case,
    pub n: u32,
    pub beta_1: T,
    pub beta_star: T,
    pub beta_bar: T,
    pub f_beta_bar: T,
    pub f_gamma_m: T,
    pub f_gamma_star: T,
    /// `min f` on `[beta_star, beta_bar]`.
    pub min_f: T,
    /// `min F` on `[beta_1, beta_star]`.
    pub min_big_f: T,
    /// `min F` on `[0, beta_1]`.
    pub min_big_f_well: T,
    /// `sup Q` on `[beta_1, beta_bar]`.
    pub sup_q: T,
    /// `min Q` on `[s0, beta_bar]`.
    pub min_q: T,
    /// `int_0^{beta_1} |F|`.
    pub well_integral: T,
    /// `lim F` at `+inf`, when finite.
    pub f_infinity: Option<T>,
}

pub fn k0_formula<T: Real>(x: &K0Inputs<T>) -> TheoremReport<T> {
    let two = T::lit(2.0);
    let n = T::lit(x.n as f64);
    let n1 = n - T::one();
    let f_bar = -x.min_big_f_well;
    let drop = x.f_beta_bar - x.f_gamma_m;
    let a_raw = (x.beta_star - x.beta_1) / drop.sqrt() + (two * n * (x.beta_bar - x.beta_star) / x.min_f).sqrt();
    let c_bar = two * n1 * (x.beta_bar - x.beta_1) / drop * (two * (x.f_beta_bar - x.min_big_f)).sqrt();
    let (a, i_bar) = match x.case {
        Case::A2 => {
            let i_bar = x.f_infinity.unwrap_or_else(|| {
                ((c_bar + T::one()) / c_bar).powi(x.n as i32)
                    * (two * x.f_beta_bar + (x.beta_bar - x.beta_1).powi(2) + (x.sup_q - x.min_q) / n)
                    + (n - two).powi(2) * x.beta_bar.powi(2) / (two * c_bar.powi(2))
            });
            (a_raw.max(T::one()), i_bar)
        }
        _ => (a_raw, x.f_gamma_star),
    };
    let lhs = (c_bar + a) * i_bar;
    let rhs = two.sqrt() * n1 / (i_bar + f_bar).sqrt() * x.well_integral;
    let mut c = Constants::default();
    c.push("F_bar", f_bar);
    c.push("A", a);
    c.push("I_bar", i_bar);
    c.push("C_bar", c_bar);
    if x.case == Case::A2 {
        c.push("Q_bar", -x.min_q);
    }
    c.push("F_hat", -x.min_big_f);
    c.push("int_0^beta_1 |F|", x.well_integral);
    if let Some(f) = x.f_infinity {
        c.push("F_infinity", f);
    }
    let lhs = if lhs.is_nan() { T::infinity() } else { lhs };
    let rhs = if rhs.is_nan() { T::zero() } else { rhs };
    TheoremReport::new(Theorem::K0Condition, None, c, lhs, rhs)
}

/// Adaptive Gauss–Legendre integral of `g` over `[a, b]`.
pub fn integrate_adaptive<T: Real>(g: &impl Fn(T) -> T, a: T, b: T, tol: T, depth: u32) -> T {
    let gl = |lo: T, hi: T| {
        GAUSS8
            .iter()
            .map(|&(x, w)| (hi - lo) * T::lit(w) * g(lo + (hi - lo) * T::lit(x)))
            .fold(T::zero(), |s, v| s + v)
    };
    let whole = gl(a, b);
    let mid = (a + b) / T::lit(2.0);
    let halves = gl(a, mid) + gl(mid, b);
    if depth == 0 || (whole - halves).abs() <= tol {
        halves
    } else {
        let t = tol / T::lit(2.0);
        integrate_adaptive(g, a, mid, t, depth - 1) + integrate_adaptive(g, mid, b, t, depth - 1)
    }
}

/// `int_lo^hi |F|`, split at the sign changes of `F` and the knots.
pub fn abs_integral<T: Real>(model: &NonlinearityModel<T>, lo: T, hi: T) -> T {
    let mut cuts: Vec<T> = vec![lo, hi];
    cuts.extend(model.level_roots(Profile::Primitive, T::zero(), lo, hi));
    cuts.extend(model.knots().into_iter().filter(|&s| s > lo && s < hi));
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();
    let g = |s: T| big(model, s).abs();
    cuts.windows(2)
        .map(|w| integrate_adaptive(&g, w[0], w[1], T::lit(1e-15), 30))
        .fold(T::zero(), |s, v| s + v)
}

pub fn k0_inputs<T: Real>(
    model: &NonlinearityModel<T>,
    lm: &Landmarks<T>,
    n: u32,
    f_infinity: Option<T>,
) -> Result<K0Inputs<T>, TheoremError> {
    if lm.case == Case::Neither {
        return Err(TheoremError::NotApplicable("hypotheses do not hold".to_string()));
    }
    let b1 = lm.beta_1();
    let q = Profile::Pohozaev(n);
    let (sup_q, min_q) = match lm.s0 {
        Some(s0) => (model.max_on(q, b1, lm.beta_bar), model.min_on(q, s0, lm.beta_bar)),
        None => (model.max_on(q, b1, lm.beta_bar), T::zero()),
    };
    Ok(K0Inputs {
        case: lm.case,
        n,
        beta_1: b1,
        beta_star: lm.beta_star,
        beta_bar: lm.beta_bar,
        f_beta_bar: big(model, lm.beta_bar),
        f_gamma_m: big(model, lm.gamma_m()),
        f_gamma_star: if lm.gamma_star.is_finite() {
            big(model, lm.gamma_star)
        } else {
            T::infinity()
        },
        min_f: model.min_on(Profile::Force, lm.beta_star, lm.beta_bar),
        min_big_f: model.min_on(Profile::Primitive, b1, lm.beta_star),
        min_big_f_well: model.min_on(Profile::Primitive, T::zero(), b1),
        sup_q,
        min_q,
        well_integral: abs_integral(model, T::zero(), b1),
        f_infinity,
    })
}

/// Sufficient condition for two bound states with every number of sign changes.
pub fn k0_condition<T: Real>(
    model: &NonlinearityModel<T>,
    lm: &Landmarks<T>,
    n: u32,
    f_infinity: Option<T>,
) -> Result<TheoremReport<T>, TheoremError> {
    Ok(k0_formula(&k0_inputs(model, lm, n, f_infinity)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ck_synthetic() {
        let c = ck_formula(0, 2, 2.0, -1.0, 3.0, 1.0, 1.0);
        assert!((c - 5.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ck_is_linear_in_k_plus_one() {
        let c0 = ck_formula(0, 3, 1.5, -0.7, 2.5, 0.3, 0.9);
        for k in 1..6 {
            let ck = ck_formula(k, 3, 1.5, -0.7, 2.5, 0.3, 0.9);
            assert_eq!(ck, c0 * (k + 1) as f64);
        }
    }

    #[test]
    fn adaptive_quadrature_on_cubic() {
        let v = integrate_adaptive(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-15, 20);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
