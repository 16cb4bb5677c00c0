//! Attack, defense and overall strengths from CMP fits, and rankings.
//!
//! With `Y_a ~ CMP(λ_a, ν_a)` for goals scored and `Y_d ~ CMP(λ_d, ν_d)` for
//! goals conceded:
//!
//! * attack  `s_a = ln λ_a / ν_a`
//! * defense `s_d = ν_d / ln λ_d`
//! * overall `s = s_a · s_d`
//!
//! Both formulas need `λ > 1`; teams whose fits fall at or below 1 are
//! excluded rather than given a placeholder value.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::{CmpParams, SeriesControl};
use crate::data::Direction;
use crate::fitting::{fit_cmp, FitError, FitReport, GoalSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrengthError {
    #[error("λ = {0} is at most 1, so ln λ is not positive")]
    LambdaAtMostOne(f64),
    #[error("ν = 0 leaves the attack strength undefined")]
    NuZero,
    #[error("strengths must be finite and positive (attack {attack}, defense {defense})")]
    NonPositive { attack: f64, defense: f64 },
    #[error("finite-difference step {delta} is not usable at λ = {lambda}")]
    BadStep { delta: f64, lambda: f64 },
    #[error("{direction} fit failed: {source}")]
    Fit { direction: Direction, source: FitError },
    #[error("{direction} fit did not converge")]
    NotConverged { direction: Direction },
}

/// `ν_d / ln λ_d`.
pub fn defense_strength(params: CmpParams) -> Result<f64, StrengthError> {
    if params.lambda() <= 1.0 {
        return Err(StrengthError::LambdaAtMostOne(params.lambda()));
    }
    Ok(params.nu() / params.lambda().ln())
}

/// `ln λ_a / ν_a`.
pub fn attack_strength(params: CmpParams) -> Result<f64, StrengthError> {
    if params.lambda() <= 1.0 {
        return Err(StrengthError::LambdaAtMostOne(params.lambda()));
    }
    if params.nu() == 0.0 {
        return Err(StrengthError::NuZero);
    }
    Ok(params.lambda().ln() / params.nu())
}

pub fn overall_strength(attack: f64, defense: f64) -> Result<f64, StrengthError> {
    if !(attack.is_finite() && defense.is_finite() && attack > 0.0 && defense > 0.0) {
        return Err(StrengthError::NonPositive { attack, defense });
    }
    Ok(attack * defense)
}

fn overall_from_params(attack: CmpParams, defense: CmpParams) -> Result<f64, StrengthError> {
    overall_strength(attack_strength(attack)?, defense_strength(defense)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStrength {
    pub team: String,
    pub attack: f64,
    pub defense: f64,
    pub overall: f64,
    /// CMP fit on goals scored (`λ_a`, `ν_a`).
    pub attack_fit: FitReport,
    /// CMP fit on goals conceded (`λ_d`, `ν_d`).
    pub defense_fit: FitReport,
    pub matches_used: usize,
    /// Raw sample mean of goals scored.
    pub avg_scored: f64,
    /// Raw sample mean of goals conceded.
    pub avg_conceded: f64,
}

impl TeamStrength {
    /// Strength from already-fitted CMP reports.
    pub fn from_fits(
        team: impl Into<String>,
        attack_fit: FitReport,
        defense_fit: FitReport,
        scored: &GoalSeries,
        conceded: &GoalSeries,
    ) -> Result<Self, StrengthError> {
        let params = |fit: &FitReport, direction| fit.cmp_params().ok_or(StrengthError::NotConverged { direction });
        let attack = attack_strength(params(&attack_fit, Direction::Scored)?)?;
        let defense = defense_strength(params(&defense_fit, Direction::Conceded)?)?;
        Ok(Self {
            team: team.into(),
            attack,
            defense,
            overall: overall_strength(attack, defense)?,
            attack_fit,
            defense_fit,
            matches_used: scored.len(),
            avg_scored: scored.mean(),
            avg_conceded: conceded.mean(),
        })
    }
}

/// Fits CMP to both directions and derives the strengths. Fits that stop on
/// the iteration limit are rejected.
pub fn team_strength(
    team: &str,
    scored: &GoalSeries,
    conceded: &GoalSeries,
    ctrl: &SeriesControl,
) -> Result<TeamStrength, StrengthError> {
    let fit = |series, direction| {
        let report = fit_cmp(series, ctrl).map_err(|source| StrengthError::Fit { direction, source })?;
        if report.converged {
            Ok(report)
        } else {
            Err(StrengthError::NotConverged { direction })
        }
    };
    let attack_fit = fit(scored, Direction::Scored)?;
    let defense_fit = fit(conceded, Direction::Conceded)?;
    TeamStrength::from_fits(team, attack_fit, defense_fit, scored, conceded)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    #[serde(flatten)]
    pub strength: TeamStrength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
}

/// Descending overall strength; ties go to the stronger defense, then to
/// the alphabetically first team name.
pub fn ranking_order(a: &TeamStrength, b: &TeamStrength) -> Ordering {
    b.overall
        .total_cmp(&a.overall)
        .then_with(|| b.defense.total_cmp(&a.defense))
        .then_with(|| a.team.cmp(&b.team))
}

pub fn rank_teams(mut strengths: Vec<TeamStrength>) -> RankingTable {
    strengths.sort_by(ranking_order);
    RankingTable {
        rows: strengths
            .into_iter()
            .enumerate()
            .map(|(i, strength)| RankingRow { rank: i + 1, strength })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    /// `∂s/∂λ_a`
    pub d_lambda_attack: f64,
    /// `∂s/∂λ_d`
    pub d_lambda_defense: f64,
}

/// Central finite differences of the overall strength in `λ_a` and `λ_d`.
pub fn strength_sensitivity(attack: CmpParams, defense: CmpParams, delta: f64) -> Result<Sensitivity, StrengthError> {
    for lambda in [attack.lambda(), defense.lambda()] {
        if !(delta > 0.0) || lambda - delta <= 1.0 {
            return Err(StrengthError::BadStep { delta, lambda });
        }
    }
    let shift = |p: CmpParams, by: f64| CmpParams::new(p.lambda() + by, p.nu()).expect("shifted λ stays above 1");
    let d_lambda_attack = (overall_from_params(shift(attack, delta), defense)?
        - overall_from_params(shift(attack, -delta), defense)?)
        / (2.0 * delta);
    let d_lambda_defense = (overall_from_params(attack, shift(defense, delta))?
        - overall_from_params(attack, shift(defense, -delta))?)
        / (2.0 * delta);
    Ok(Sensitivity {
        d_lambda_attack,
        d_lambda_defense,
    })
}
