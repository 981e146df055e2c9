//! Set membership of a shooting trajectory: `N_k`, `G_k`, `Q_k`, `S_k`,
//! `Upsilon_k`, `F_k`.

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{EventKind, Termination, Trajectory};
use crate::nonlinearity::Landmarks;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum Label<T> {
    N,
    G { bracket: Option<(T, T)> },
    Q,
    S { well: i32 },
    Upsilon { gamma: i32 },
    F,
    Undetermined { reason: String },
}

impl<T> Label<T> {
    pub fn symbol(&self) -> &'static str {
        match self {
            Label::N => "N",
            Label::G { .. } => "G",
            Label::Q => "Q",
            Label::S { .. } => "S",
            Label::Upsilon { .. } => "Upsilon",
            Label::F => "F",
            Label::Undetermined { .. } => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification<T> {
    pub label: Label<T>,
    pub k: usize,
    /// Value of `u` at the turning point (or the limit) that decided the label.
    pub critical_value: Option<T>,
    pub margin: T,
    /// Every `k` for which the trajectory passed a `k`-th simple zero.
    pub n_history: Vec<usize>,
    pub sign_changes: usize,
}

impl<T: Real> Classification<T> {
    /// `"Q3"`, `"S2(1)"`, `"G1"`, ...
    pub fn tag(&self) -> String {
        match &self.label {
            Label::S { well } => format!("S{}({well})", self.k),
            Label::Upsilon { gamma } => format!("Upsilon{}({gamma})", self.k),
            Label::Undetermined { .. } => "Undetermined".to_string(),
            l => format!("{}{}", l.symbol(), self.k),
        }
    }

    pub fn is(&self, symbol: &str, k: usize) -> bool {
        self.label.symbol() == symbol && self.k == k
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError<T: Real> {
    #[error("classification margin {margin} below threshold; tentative {}", tentative.tag())]
    AmbiguousClassification {
        tentative: Box<Classification<T>>,
        margin: T,
    },
    #[error("malformed trajectory: {0}")]
    MalformedTrajectory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierOptions<T> {
    pub eps_gamma: T,
    pub eps_margin: T,
}

impl<T: Real> ClassifierOptions<T> {
    pub fn for_landmarks(lm: &Landmarks<T>) -> Self {
        let scale = if lm.gamma_star.is_finite() {
            lm.gamma_star.abs()
        } else {
            lm.gamma_m().abs()
        };
        Self {
            eps_gamma: T::lit(1e-6) * scale.max(T::one()),
            eps_margin: T::lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroMark<T> {
    pub r: T,
    pub uprime: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremumMark<T> {
    pub r: T,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZkTk<T> {
    /// `Z_1 < Z_2 < ...`; a terminal double zero is the last entry, with
    /// `u' = 0`.
    pub zeros: Vec<ZeroMark<T>>,
    /// `T_1 < T_2 < ...`, each `T_k` in `(Z_k, Z_{k+1})`.
    pub extrema: Vec<ExtremumMark<T>>,
    /// Extremum reached while heading toward 0 (the turning point of a
    /// `P_k` trajectory), if any.
    pub turning: Option<ExtremumMark<T>>,
}

/// Radii of the zeros and of the extrema between them.
pub fn extract_zk_tk<T: Real>(traj: &Trajectory<T>) -> Result<ZkTk<T>, ClassifyError<T>> {
    let mut out = ZkTk {
        zeros: Vec::new(),
        extrema: Vec::new(),
        turning: None,
    };
    let mut after_zero = false;
    for e in &traj.events {
        match e.kind {
            EventKind::SimpleZero { .. } => {
                if after_zero {
                    return Err(ClassifyError::MalformedTrajectory(format!(
                        "two zeros without an extremum between them near r = {}",
                        e.r
                    )));
                }
                if out.turning.is_some() {
                    return Err(ClassifyError::MalformedTrajectory(format!(
                        "zero after a turning point at r = {}",
                        e.r
                    )));
                }
                let expected = if out.zeros.len() % 2 == 0 { -T::one() } else { T::one() };
                if traj.i0 > T::zero() && traj.config.alpha.value() > T::zero() && e.uprime * expected < T::zero() {
                    return Err(ClassifyError::MalformedTrajectory(format!(
                        "zero {} has the wrong sign of u'",
                        out.zeros.len() + 1
                    )));
                }
                out.zeros.push(ZeroMark { r: e.r, uprime: e.uprime });
                after_zero = true;
            }
            EventKind::DoubleZero => {
                out.zeros.push(ZeroMark {
                    r: e.r,
                    uprime: T::zero(),
                });
            }
            EventKind::Extremum { value } => {
                let mark = ExtremumMark { r: e.r, value };
                if after_zero {
                    out.extrema.push(mark);
                    after_zero = false;
                } else {
                    out.turning = Some(mark);
                }
            }
            EventKind::LevelCrossing { .. } => {}
        }
    }
    Ok(out)
}

/// Label ignoring the margin test.
pub fn classify_lenient<T: Real>(
    traj: &Trajectory<T>,
    lm: &Landmarks<T>,
    opts: &ClassifierOptions<T>,
) -> Result<Classification<T>, ClassifyError<T>> {
    let marks = extract_zk_tk(traj)?;
    let zeros = traj.count_sign_changes();
    let n_history: Vec<usize> = (1..=zeros).collect();
    let chain = traj.model().gamma_chain();
    let mut out = Classification {
        label: Label::Undetermined {
            reason: String::new(),
        },
        k: zeros + 1,
        critical_value: None,
        margin: T::infinity(),
        n_history,
        sign_changes: zeros,
    };
    let gamma_hit = |c: T| {
        lm.indexed_gammas()
            .into_iter()
            .filter(|&(i, _)| i != 0)
            .find(|&(_, g)| (c - g).abs() <= opts.eps_gamma)
            .map(|(i, _)| i)
    };
    match traj.termination {
        Termination::DoubleZeroAt { .. } => {
            out.label = Label::G { bracket: None };
            out.critical_value = Some(T::zero());
            out.margin = T::zero();
        }
        Termination::TrappedInWell { well } => {
            let turn = marks.turning.ok_or_else(|| {
                ClassifyError::MalformedTrajectory("trapped without a turning point".to_string())
            })?;
            let c = turn.value;
            out.critical_value = Some(c);
            let (lo, hi) = (chain.points[(well + chain.origin as i32) as usize], chain.points[(well + chain.origin as i32 + 1) as usize]);
            let energy = traj.energy_i(turn.r).unwrap_or(c);
            out.margin = (c - lo).abs().min((hi - c).abs()).min(chain.trap_level(well) - energy);
            if let Some(i) = gamma_hit(c) {
                out.label = Label::Upsilon { gamma: i };
            } else if well == 0 || well == -1 {
                out.label = Label::Q;
                out.margin = out.margin.min(c.abs());
            } else {
                out.label = Label::S { well };
            }
        }
        Termination::ConvergedTo { ell } => {
            out.critical_value = Some(ell);
            out.margin = T::zero();
            let away = traj
                .events
                .iter()
                .rev()
                .find(|e| !matches!(e.kind, EventKind::LevelCrossing { .. }))
                .is_some_and(|e| matches!(e.kind, EventKind::SimpleZero { .. }));
            if ell.is_zero() {
                out.label = Label::G { bracket: None };
            } else if away {
                out.label = Label::F;
                out.k = zeros;
            } else if let Some(i) = gamma_hit(ell) {
                out.label = Label::Upsilon { gamma: i };
            } else {
                match chain.well_of(ell) {
                    Some(0) | Some(-1) => out.label = Label::Q,
                    Some(w) => out.label = Label::S { well: w },
                    None => {
                        out.label = Label::Upsilon {
                            gamma: lm.indexed_gammas().into_iter().find(|&(_, g)| g == ell).map_or(0, |(i, _)| i),
                        }
                    }
                }
            }
        }
        Termination::ReachedRmax => {
            out.label = Label::Undetermined {
                reason: "reached r_max".to_string(),
            };
            out.margin = T::zero();
        }
        Termination::OscillationFault { sign_changes } => {
            out.label = Label::Undetermined {
                reason: format!("oscillation fault after {sign_changes} sign changes"),
            };
            out.margin = T::zero();
        }
    }
    Ok(out)
}

/// Set membership with a margin check; labels closer than `eps_margin` to a
/// decision boundary are reported as ambiguous.
pub fn classify<T: Real>(
    traj: &Trajectory<T>,
    lm: &Landmarks<T>,
    opts: &ClassifierOptions<T>,
) -> Result<Classification<T>, ClassifyError<T>> {
    let c = classify_lenient(traj, lm, opts)?;
    let decided = matches!(c.label, Label::Q | Label::S { .. } | Label::N);
    if decided && c.margin < opts.eps_margin {
        let margin = c.margin;
        return Err(ClassifyError::AmbiguousClassification {
            tentative: Box::new(c),
            margin,
        });
    }
    Ok(c)
}
