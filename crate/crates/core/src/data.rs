//! Match-result ingestion and per-team goal series.
//!
//! The canonical file is UTF-8 CSV with the header
//! `date,competition,home_team,away_team,home_goals,away_goals` and ISO-8601
//! dates. Bad rows are collected with their line numbers; loading only fails
//! outright on a wrong header or when no row survives.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitting::{FitError, GoalSeries};

pub const CSV_HEADER: [&str; 6] = ["date", "competition", "home_team", "away_team", "home_goals", "away_goals"];

/// Scores above this are kept but flagged as implausible for handball.
pub const PLAUSIBLE_GOALS: u32 = 60;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed header: expected `{}`, found `{found}`", CSV_HEADER.join(","))]
    MalformedHeader { found: String },
    #[error("no valid rows ({} rejected)", rejected.len())]
    NoValidRows { rejected: Vec<RowError> },
    #[error("unknown team `{0}`")]
    UnknownTeam(String),
    #[error("no matches left for `{0}` after filtering")]
    EmptyAfterFilter(String),
    #[error(transparent)]
    Series(#[from] FitError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line in the source, the header being line 1.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Scored,
    Conceded,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Scored => "scored",
            Direction::Conceded => "conceded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum InputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchRecord {
    pub date: NaiveDate,
    pub competition: String,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
}

impl MatchRecord {
    fn validate(&self) -> Result<(), String> {
        if self.home_team.trim().is_empty() || self.away_team.trim().is_empty() {
            return Err("team name is empty".into());
        }
        if self.home_team == self.away_team {
            return Err(format!("`{}` listed as both home and away team", self.home_team));
        }
        Ok(())
    }

    /// `(scored, conceded)` from `team`'s side, if it played.
    pub fn goals_for(&self, team: &str) -> Option<(u32, u32)> {
        if self.home_team == team {
            Some((self.home_goals, self.away_goals))
        } else if self.away_team == team {
            Some((self.away_goals, self.home_goals))
        } else {
            None
        }
    }
}

/// Validated, de-duplicated matches in a canonical order (by date, then the
/// remaining fields), so equal inputs in any row order give equal datasets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    matches: Vec<MatchRecord>,
    teams: BTreeSet<String>,
}

impl Dataset {
    /// Returns the dataset and how many duplicate fixtures were dropped.
    /// Fixtures are duplicates when date, teams and score agree.
    pub fn from_matches(mut matches: Vec<MatchRecord>) -> (Self, usize) {
        matches.sort();
        let before = matches.len();
        let mut seen = BTreeSet::new();
        matches.retain(|m| seen.insert((m.date, m.home_team.clone(), m.away_team.clone(), m.home_goals, m.away_goals)));
        let teams = matches
            .iter()
            .flat_map(|m| [m.home_team.clone(), m.away_team.clone()])
            .collect();
        let dropped = before - matches.len();
        (Self { matches, teams }, dropped)
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn teams(&self) -> &BTreeSet<String> {
        &self.teams
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn filtered(&self, filter: &MatchFilter) -> Dataset {
        Dataset::from_matches(self.matches.iter().filter(|m| filter.admits(m)).cloned().collect()).0
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for m in &self.matches {
            w.serialize(m)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected: Vec<RowError>,
    pub duplicates: usize,
    /// Non-fatal notes, such as implausibly high scores.
    pub warnings: Vec<RowError>,
}

pub fn load_matches<R: Read>(source: R, format: InputFormat) -> Result<LoadReport, DataError> {
    match format {
        InputFormat::Csv => load_csv(source),
    }
}

fn load_csv<R: Read>(source: R) -> Result<LoadReport, DataError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(DataError::MalformedHeader {
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rejected = Vec::new();
    let mut warnings = Vec::new();
    let mut matches = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let fallback_line = i as u64 + 2;
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(fallback_line, |p| p.line());
                rejected.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(fallback_line, |p| p.line());
        let parsed = record
            .deserialize::<MatchRecord>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|m| m.validate().map(|_| m));
        match parsed {
            Ok(m) => {
                if m.home_goals > PLAUSIBLE_GOALS || m.away_goals > PLAUSIBLE_GOALS {
                    warnings.push(RowError {
                        line,
                        message: format!("implausible score {}-{}", m.home_goals, m.away_goals),
                    });
                }
                matches.push(m);
            }
            Err(message) => rejected.push(RowError { line, message }),
        }
    }

    if matches.is_empty() {
        return Err(DataError::NoValidRows { rejected });
    }
    let (dataset, duplicates) = Dataset::from_matches(matches);
    Ok(LoadReport {
        dataset,
        rejected,
        duplicates,
        warnings,
    })
}

/// Inclusive date window and/or competition whitelist.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchFilter {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub competitions: Option<BTreeSet<String>>,
}

impl MatchFilter {
    pub fn admits(&self, m: &MatchRecord) -> bool {
        self.from.is_none_or(|d| m.date >= d)
            && self.to.is_none_or(|d| m.date <= d)
            && self.competitions.as_ref().is_none_or(|c| c.contains(&m.competition))
    }
}

/// Goals for `team` in `direction`, chronologically.
pub fn team_counts(
    data: &Dataset,
    team: &str,
    direction: Direction,
    filter: Option<&MatchFilter>,
) -> Result<Vec<u64>, DataError> {
    if !data.teams.contains(team) {
        return Err(DataError::UnknownTeam(team.to_string()));
    }
    let counts: Vec<u64> = data
        .matches
        .iter()
        .filter(|m| filter.is_none_or(|f| f.admits(m)))
        .filter_map(|m| m.goals_for(team))
        .map(|(scored, conceded)| u64::from(if direction == Direction::Scored { scored } else { conceded }))
        .collect();
    if counts.is_empty() {
        return Err(DataError::EmptyAfterFilter(team.to_string()));
    }
    Ok(counts)
}

pub fn team_series(
    data: &Dataset,
    team: &str,
    direction: Direction,
    filter: Option<&MatchFilter>,
) -> Result<GoalSeries, DataError> {
    let counts = team_counts(data, team, direction, filter)?;
    Ok(GoalSeries::new(counts, format!("{team} {direction}"))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "date,competition,home_team,away_team,home_goals,away_goals\n";

    fn load(body: &str) -> Result<LoadReport, DataError> {
        load_matches(format!("{HEADER}{body}").as_bytes(), InputFormat::Csv)
    }

    #[test]
    fn minimal_file() {
        let r = load("2022-09-10,League,A,B,30,25\n").unwrap();
        assert_eq!(r.dataset.matches().len(), 1);
        assert_eq!(r.dataset.teams().len(), 2);
        assert!(r.rejected.is_empty());
    }

    #[test]
    fn bad_row_rejected_with_line_number() {
        let r = load("2022-09-10,League,A,B,30,25\n2022-09-11,League,C,D,abc,20\n2022-09-12,League,A,C,28,27\n").unwrap();
        assert_eq!(r.dataset.matches().len(), 2);
        assert_eq!(r.rejected.len(), 1);
        assert_eq!(r.rejected[0].line, 3);
    }

    #[test]
    fn other_row_failures() {
        let r = load(concat!(
            "2022-13-40,League,A,B,30,25\n",
            "2022-09-11,League,A,A,30,25\n",
            "2022-09-12,League,A,B,30\n",
            "2022-09-13,League,A,B,-3,25\n",
            "2022-09-14,League,A,B,31,25\n",
        ))
        .unwrap();
        assert_eq!(r.dataset.matches().len(), 1);
        let lines: Vec<u64> = r.rejected.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn duplicate_fixture_dropped() {
        let r = load("2022-09-10,League,A,B,30,25\n2022-09-10,League,A,B,30,25\n").unwrap();
        assert_eq!(r.dataset.matches().len(), 1);
        assert_eq!(r.duplicates, 1);
    }

    #[test]
    fn header_and_empty_failures() {
        let err = load_matches("date,home,away\n2022-01-01,A,B\n".as_bytes(), InputFormat::Csv).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader { .. }));
        let err = load("2022-09-10,League,A,B,x,y\n").unwrap_err();
        assert!(matches!(err, DataError::NoValidRows { ref rejected } if rejected.len() == 1));
    }

    #[test]
    fn high_scores_warn_but_load() {
        let r = load("2022-09-10,Friendly,A,B,61,20\n").unwrap();
        assert_eq!(r.dataset.matches().len(), 1);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn scored_and_conceded_series() {
        let r = load("2022-10-01,League,C,A,28,27\n2022-09-10,League,A,B,30,25\n").unwrap();
        let d = &r.dataset;
        assert_eq!(team_counts(d, "A", Direction::Scored, None).unwrap(), vec![30, 27]);
        assert_eq!(team_counts(d, "A", Direction::Conceded, None).unwrap(), vec![25, 28]);
        let s = team_series(d, "A", Direction::Scored, None).unwrap();
        assert_eq!(s.label(), "A scored");
    }

    #[test]
    fn series_errors() {
        let r = load("2022-10-01,League,C,A,28,27\n2022-09-10,League,A,B,30,25\n").unwrap();
        let d = &r.dataset;
        assert!(matches!(team_counts(d, "Z", Direction::Scored, None), Err(DataError::UnknownTeam(_))));
        let filter = MatchFilter {
            competitions: Some(["Champions League".to_string()].into()),
            ..Default::default()
        };
        assert!(matches!(
            team_counts(d, "A", Direction::Scored, Some(&filter)),
            Err(DataError::EmptyAfterFilter(_))
        ));
        let window = MatchFilter {
            from: NaiveDate::from_ymd_opt(2022, 9, 15),
            ..Default::default()
        };
        assert!(matches!(
            team_series(d, "A", Direction::Scored, Some(&window)),
            Err(DataError::Series(FitError::SeriesTooShort { .. }))
        ));
    }
}
