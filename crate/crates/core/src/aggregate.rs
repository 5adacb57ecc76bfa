//! Collective decisions: power-weighted network decisions, the
//! full-participation ideal, and ballot-based voting rules.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Member, MemberId};
use crate::power::PowerAssignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    /// `(1/|N|) * sum(power_i * opinion_i)`; stranded power counts as zero.
    #[default]
    Literal,
    /// `sum(power_i * opinion_i) / sum(power_i)`.
    Renormalized,
}

impl std::str::FromStr for DecisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(DecisionMode::Literal),
            "renormalized" => Ok(DecisionMode::Renormalized),
            _ => Err(Error::invalid(format!("unknown decision mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecisionMode::Literal => "literal",
            DecisionMode::Renormalized => "renormalized",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionOutcome {
    pub value: f64,
    pub mode: DecisionMode,
}

/// Decision of the active members weighted by their absorbed power.
pub fn network_decision(
    assignment: &PowerAssignment,
    members: &[Member],
    mode: DecisionMode,
) -> Result<DecisionOutcome> {
    if members.is_empty() {
        return Err(Error::NoDecision("empty population".into()));
    }
    let opinions: BTreeMap<MemberId, f64> = members.iter().map(|m| (m.id, m.opinion)).collect();
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (id, &power) in &assignment.absorbed {
        let opinion = opinions
            .get(id)
            .ok_or_else(|| Error::invalid(format!("assignment names unknown member {id}")))?;
        weighted += power * opinion;
        total += power;
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NoDecision("no active member holds power".into()));
    }
    let value = match mode {
        DecisionMode::Literal => weighted / members.len() as f64,
        DecisionMode::Renormalized => weighted / total,
    };
    Ok(DecisionOutcome { value, mode })
}

/// Without delegation the decision is the mean opinion of the participants.
pub fn k0_decision(members: &[Member]) -> Result<DecisionOutcome> {
    let active: Vec<f64> = members
        .iter()
        .filter(|m| m.active)
        .map(|m| m.opinion)
        .collect();
    if active.is_empty() {
        return Err(Error::NoDecision("no active members".into()));
    }
    Ok(DecisionOutcome {
        value: active.iter().sum::<f64>() / active.len() as f64,
        mode: DecisionMode::Renormalized,
    })
}

/// Mean opinion over everyone, participating or not.
pub fn perfect_decision(members: &[Member]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::invalid("empty population"));
    }
    Ok(members.iter().map(|m| m.opinion).sum::<f64>() / members.len() as f64)
}

pub fn decision_error(network_value: f64, perfect_value: f64) -> f64 {
    (network_value - perfect_value).abs()
}

pub type CandidateId = String;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    /// Full ranking, most preferred first.
    Ranking(Vec<CandidateId>),
    Single(CandidateId),
    /// A numeric choice for averaging decisions.
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: MemberId,
    pub vote: Vote,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl Ballot {
    pub fn ranking<S: Into<String>>(voter: MemberId, ranking: impl IntoIterator<Item = S>) -> Self {
        Ballot {
            voter,
            vote: Vote::Ranking(ranking.into_iter().map(Into::into).collect()),
            weight: 1.0,
        }
    }

    pub fn single(voter: MemberId, choice: impl Into<String>) -> Self {
        Ballot {
            voter,
            vote: Vote::Single(choice.into()),
            weight: 1.0,
        }
    }

    pub fn value(voter: MemberId, value: f64) -> Self {
        Ballot {
            voter,
            vote: Vote::Value(value),
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// First choice of a single or ranked ballot.
    pub fn top_choice(&self) -> Option<&str> {
        match &self.vote {
            Vote::Single(c) => Some(c),
            Vote::Ranking(r) => r.first().map(String::as_str),
            Vote::Value(_) => None,
        }
    }
}

/// Ballots in a canonical order, so tallies do not depend on input order.
fn canonical(ballots: &[Ballot]) -> Vec<&Ballot> {
    fn vote_key(v: &Vote) -> (u8, Vec<&str>, u64) {
        match v {
            Vote::Ranking(r) => (0, r.iter().map(String::as_str).collect(), 0),
            Vote::Single(c) => (1, vec![c.as_str()], 0),
            Vote::Value(x) => (2, Vec::new(), x.to_bits()),
        }
    }
    let mut sorted: Vec<&Ballot> = ballots.iter().collect();
    sorted.sort_by(|a, b| {
        a.voter
            .cmp(&b.voter)
            .then_with(|| vote_key(&a.vote).cmp(&vote_key(&b.vote)))
            .then_with(|| a.weight.total_cmp(&b.weight))
    });
    sorted
}

fn check_weight(ballot: &Ballot) -> Result<()> {
    if ballot.weight.is_finite() && ballot.weight > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBallot(format!(
            "voter {} has non-positive weight {}",
            ballot.voter, ballot.weight
        )))
    }
}

fn candidate_index(candidates: &[CandidateId]) -> Result<BTreeMap<&str, usize>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates"));
    }
    let mut index = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        if index.insert(c.as_str(), i).is_some() {
            return Err(Error::invalid(format!("duplicate candidate '{c}'")));
        }
    }
    Ok(index)
}

/// Highest score wins; ties go to the lexicographically smallest id.
fn winner(scores: &[(CandidateId, f64)]) -> CandidateId {
    scores
        .iter()
        .max_by(|(a, sa), (b, sb)| sa.total_cmp(sb).then_with(|| b.cmp(a)))
        .map(|(c, _)| c.clone())
        .expect("at least one candidate")
}

/// Borda scores, sorted by candidate id. A ballot ranking `m` candidates
/// gives `m - 1` points to its first choice down to 0 for its last.
pub fn borda_scores(
    ballots: &[Ballot],
    candidates: &[CandidateId],
) -> Result<Vec<(CandidateId, f64)>> {
    let index = candidate_index(candidates)?;
    let m = candidates.len();
    let mut scores = vec![0.0; m];
    for ballot in canonical(ballots) {
        check_weight(ballot)?;
        let ranking: Vec<&str> = match &ballot.vote {
            Vote::Ranking(r) => r.iter().map(String::as_str).collect(),
            Vote::Single(c) if m == 1 => vec![c.as_str()],
            _ => {
                return Err(Error::InvalidBallot(format!(
                    "voter {} did not submit a ranking",
                    ballot.voter
                )))
            }
        };
        if ranking.len() != m {
            return Err(Error::InvalidBallot(format!(
                "voter {} ranked {} of {m} candidates",
                ballot.voter,
                ranking.len()
            )));
        }
        let mut seen = HashSet::new();
        for (position, c) in ranking.iter().enumerate() {
            let &i = index.get(c).ok_or_else(|| {
                Error::InvalidBallot(format!(
                    "voter {} ranked unknown candidate '{c}'",
                    ballot.voter
                ))
            })?;
            if !seen.insert(i) {
                return Err(Error::InvalidBallot(format!(
                    "voter {} ranked '{c}' twice",
                    ballot.voter
                )));
            }
            scores[i] += ballot.weight * (m - 1 - position) as f64;
        }
    }
    Ok(index
        .into_iter()
        .map(|(c, i)| (c.to_string(), scores[i]))
        .collect())
}

pub fn borda(ballots: &[Ballot], candidates: &[CandidateId]) -> Result<CandidateId> {
    if ballots.is_empty() {
        return Err(Error::NoDecision("no ballots".into()));
    }
    Ok(winner(&borda_scores(ballots, candidates)?))
}

/// Weighted first-choice tallies, sorted by candidate id.
pub fn plurality_tally(
    ballots: &[Ballot],
    candidates: &[CandidateId],
) -> Result<Vec<(CandidateId, f64)>> {
    let index = candidate_index(candidates)?;
    let mut totals = vec![0.0; candidates.len()];
    for ballot in canonical(ballots) {
        check_weight(ballot)?;
        let choice = ballot.top_choice().ok_or_else(|| {
            Error::InvalidBallot(format!("voter {} named no candidate", ballot.voter))
        })?;
        let &i = index.get(choice).ok_or_else(|| {
            Error::InvalidBallot(format!(
                "voter {} chose unknown candidate '{choice}'",
                ballot.voter
            ))
        })?;
        totals[i] += ballot.weight;
    }
    Ok(index
        .into_iter()
        .map(|(c, i)| (c.to_string(), totals[i]))
        .collect())
}

/// Weighted plurality: the candidate named by the most ballot weight wins.
pub fn plurality(ballots: &[Ballot], candidates: &[CandidateId]) -> Result<CandidateId> {
    if ballots.is_empty() {
        return Err(Error::NoDecision("no ballots".into()));
    }
    Ok(winner(&plurality_tally(ballots, candidates)?))
}

/// Weighted mean of numeric ballots.
pub fn weighted_mean(ballots: &[Ballot]) -> Result<f64> {
    if ballots.is_empty() {
        return Err(Error::NoDecision("no ballots".into()));
    }
    let (mut sum, mut total) = (0.0, 0.0);
    for ballot in canonical(ballots) {
        check_weight(ballot)?;
        let Vote::Value(v) = ballot.vote else {
            return Err(Error::InvalidBallot(format!(
                "voter {} did not submit a numeric value",
                ballot.voter
            )));
        };
        if !v.is_finite() {
            return Err(Error::InvalidBallot(format!(
                "voter {} submitted {v}",
                ballot.voter
            )));
        }
        sum += ballot.weight * v;
        total += ballot.weight;
    }
    Ok(sum / total)
}

/// Scale each ballot's weight by its voter's absorbed power.
pub fn power_weighted_ballots(
    ballots: &[Ballot],
    assignment: &PowerAssignment,
) -> Result<Vec<Ballot>> {
    ballots
        .iter()
        .map(|b| {
            let power = assignment.power_of(b.voter).ok_or_else(|| {
                Error::InvalidBallot(format!("voter {} is not an active member", b.voter))
            })?;
            Ok(Ballot {
                weight: b.weight * power,
                ..b.clone()
            })
        })
        .collect()
}

/// Index of the value closest to `target`; ties resolved by `tie_key`.
pub(crate) fn nearest_by<T, K: Ord>(
    items: &[T],
    target: f64,
    value: impl Fn(&T) -> f64,
    tie_key: impl Fn(&T) -> K,
) -> Option<usize> {
    (0..items.len()).min_by(|&a, &b| {
        let da = (value(&items[a]) - target).abs();
        let db = (value(&items[b]) - target).abs();
        da.partial_cmp(&db)
            .unwrap_or(Ordering::Equal)
            .then_with(|| tie_key(&items[a]).cmp(&tie_key(&items[b])))
    })
}
