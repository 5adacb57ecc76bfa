//! The collective workspace: problem- and solution-model pools.
//!
//! A pool grows while members submit models, is frozen when the group starts
//! deciding, and is pruned to a single winner by a voting rule. Problem
//! solving chains two such pools: the winning problem-model opens a
//! solution pool whose winner is the group's chosen solution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{self, Ballot, CandidateId};
use crate::error::{Error, Result};
use crate::network::MemberId;
use crate::power::PowerAssignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    ProblemModel,
    SolutionModel,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::ProblemModel => "problem-model",
            ModelKind::SolutionModel => "solution-model",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "problem-model" => Ok(ModelKind::ProblemModel),
            "solution-model" => Ok(ModelKind::SolutionModel),
            _ => Err(Error::invalid(format!("unknown model kind '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Modeling,
    Deciding,
    Closed,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Modeling => "modeling",
            Phase::Deciding => "deciding",
            Phase::Closed => "closed",
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modeling" => Ok(Phase::Modeling),
            "deciding" => Ok(Phase::Deciding),
            "closed" => Ok(Phase::Closed),
            _ => Err(Error::invalid(format!("unknown phase '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotingMethod {
    Mean,
    Borda,
    Plurality,
}

impl FromStr for VotingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(VotingMethod::Mean),
            "borda" => Ok(VotingMethod::Borda),
            "plurality" => Ok(VotingMethod::Plurality),
            _ => Err(Error::invalid(format!("unknown voting method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    pub author: MemberId,
    pub kind: ModelKind,
    /// Opaque model text.
    #[serde(default)]
    pub content: String,
    /// Numeric reading of the model, used by mean decisions.
    #[serde(default)]
    pub numeric_value: Option<f64>,
}

impl ModelEntry {
    pub fn new(
        id: impl Into<String>,
        author: MemberId,
        kind: ModelKind,
        content: impl Into<String>,
    ) -> Self {
        ModelEntry {
            id: id.into(),
            author,
            kind,
            content: content.into(),
            numeric_value: None,
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.numeric_value = Some(value);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelPool {
    kind: ModelKind,
    phase: Phase,
    entries: Vec<ModelEntry>,
    winner: Option<String>,
    /// `(event index, pool size)` after every size-changing event.
    size_history: Vec<(usize, usize)>,
    events: usize,
}

impl ModelPool {
    pub fn open(kind: ModelKind) -> Self {
        ModelPool {
            kind,
            phase: Phase::Modeling,
            entries: Vec::new(),
            winner: None,
            size_history: vec![(0, 0)],
            events: 0,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn winner(&self) -> Option<&str> {
        self.winner.as_deref()
    }

    pub fn winning_entry(&self) -> Option<&ModelEntry> {
        let id = self.winner.as_deref()?;
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn size_history(&self) -> &[(usize, usize)] {
        &self.size_history
    }

    /// Current pool size: every entry while open, one once decided.
    pub fn size(&self) -> usize {
        if self.phase == Phase::Closed {
            1
        } else {
            self.entries.len()
        }
    }

    fn violation(&self, action: &'static str) -> Error {
        Error::PhaseViolation {
            action,
            phase: self.phase.as_str(),
        }
    }

    fn record(&mut self) {
        self.events += 1;
        self.size_history.push((self.events, self.size()));
    }

    pub fn submit(&mut self, entry: ModelEntry) -> Result<()> {
        if self.phase != Phase::Modeling {
            return Err(self.violation("submit"));
        }
        if entry.kind != self.kind {
            return Err(Error::invalid(format!(
                "{} '{}' submitted to a {} pool",
                entry.kind, entry.id, self.kind
            )));
        }
        if entry.id.is_empty() || entry.id.contains([',', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "model id {:?} is empty or contains a separator",
                entry.id
            )));
        }
        if self.entries.iter().any(|e| e.id == entry.id) {
            return Err(Error::Conflict(format!(
                "model id '{}' already submitted",
                entry.id
            )));
        }
        self.entries.push(entry);
        self.record();
        Ok(())
    }

    pub fn begin_decision(&mut self) -> Result<()> {
        if self.phase != Phase::Modeling {
            return Err(self.violation("begin decision"));
        }
        if self.entries.is_empty() {
            return Err(Error::NoCandidates);
        }
        self.phase = Phase::Deciding;
        Ok(())
    }

    /// Select the winning model and close the pool. With an assignment the
    /// ballots are first weighted by their voters' absorbed power.
    pub fn decide(
        &mut self,
        ballots: &[Ballot],
        method: VotingMethod,
        assignment: Option<&PowerAssignment>,
    ) -> Result<String> {
        if self.phase != Phase::Deciding {
            return Err(self.violation("decide"));
        }
        let winner = select_winner(&self.entries, ballots, method, assignment)?;
        self.winner = Some(winner.clone());
        self.phase = Phase::Closed;
        self.record();
        Ok(winner)
    }

    /// Line-oriented snapshot: `kind=`, `phase=`, `winner=` header lines,
    /// then `id,author,numeric_value,content` per entry. Backslashes and
    /// line breaks in content are escaped.
    pub fn to_snapshot(&self) -> String {
        let mut out = format!(
            "kind={}\nphase={}\nwinner={}\n",
            self.kind,
            self.phase.as_str(),
            self.winner.as_deref().unwrap_or("")
        );
        for e in &self.entries {
            let value = e
                .numeric_value
                .map(crate::io::format_real)
                .unwrap_or_default();
            let content = e
                .content
                .replace('\\', "\\\\")
                .replace('\n', "\\n")
                .replace('\r', "\\r");
            out.push_str(&format!("{},{},{},{}\n", e.id, e.author, value, content));
        }
        out
    }

    /// Restore a pool from [`ModelPool::to_snapshot`] output. The size history
    /// is rebuilt as if the entries were submitted in order.
    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
        let mut header = |key: &str| -> Result<String> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing '{key}=' header")))?;
            text.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| Error::parse(line, format!("expected '{key}=' header")))
        };
        let kind: ModelKind = header("kind")?.parse()?;
        let phase: Phase = header("phase")?.parse()?;
        let winner = header("winner")?;

        let mut pool = ModelPool::open(kind);
        for (line, text) in lines {
            let mut fields = text.splitn(4, ',');
            let (Some(id), Some(author), Some(value), Some(content)) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(
                    line,
                    "expected id,author,numeric_value,content",
                ));
            };
            let author = author
                .parse()
                .map_err(|_| Error::parse(line, format!("bad author '{author}'")))?;
            let numeric_value = if value.is_empty() {
                None
            } else {
                Some(
                    value
                        .parse()
                        .map_err(|_| Error::parse(line, format!("bad value '{value}'")))?,
                )
            };
            let content = unescape(content);
            pool.submit(ModelEntry {
                id: id.to_string(),
                author,
                kind,
                content,
                numeric_value,
            })
            .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        if phase >= Phase::Deciding {
            pool.begin_decision()?;
        }
        match (phase, winner.is_empty()) {
            (Phase::Closed, false) => {
                if !pool.entries.iter().any(|e| e.id == winner) {
                    return Err(Error::parse(
                        3,
                        format!("winner '{winner}' is not an entry"),
                    ));
                }
                pool.winner = Some(winner);
                pool.phase = Phase::Closed;
                pool.record();
            }
            (Phase::Closed, true) => return Err(Error::parse(3, "closed pool without a winner")),
            (_, false) => return Err(Error::parse(3, "only a closed pool has a winner")),
            _ => {}
        }
        Ok(pool)
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn select_winner(
    entries: &[ModelEntry],
    ballots: &[Ballot],
    method: VotingMethod,
    assignment: Option<&PowerAssignment>,
) -> Result<String> {
    if ballots.is_empty() {
        return Err(Error::NoDecision("no ballots cast".into()));
    }
    let weighted;
    let ballots = match assignment {
        Some(power) => {
            weighted = aggregate::power_weighted_ballots(ballots, power)?;
            &weighted[..]
        }
        None => ballots,
    };
    let candidates: Vec<CandidateId> = entries.iter().map(|e| e.id.clone()).collect();
    match method {
        VotingMethod::Borda => aggregate::borda(ballots, &candidates),
        VotingMethod::Plurality => aggregate::plurality(ballots, &candidates),
        VotingMethod::Mean => {
            let valued: Vec<(&ModelEntry, f64)> = entries
                .iter()
                .map(|e| {
                    e.numeric_value.map(|v| (e, v)).ok_or_else(|| {
                        Error::invalid(format!("model '{}' has no numeric value", e.id))
                    })
                })
                .collect::<Result<_>>()?;
            let mean = aggregate::weighted_mean(ballots)?;
            let best = aggregate::nearest_by(&valued, mean, |(_, v)| *v, |(e, _)| e.id.clone())
                .expect("pool is non-empty");
            Ok(valued[best].0.id.clone())
        }
    }
}

/// Inputs for a full problem-solving run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemSolvingScenario {
    pub problems: Vec<ModelEntry>,
    pub problem_ballots: Vec<Ballot>,
    /// Candidate solution-models for each problem id.
    pub solutions: BTreeMap<String, Vec<ModelEntry>>,
    /// Ballots over the solutions of each problem id.
    pub solution_ballots: BTreeMap<String, Vec<Ballot>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSolvingOutcome {
    pub problem_pool: ModelPool,
    pub solution_pool: ModelPool,
}

impl ProblemSolvingOutcome {
    pub fn problem(&self) -> &str {
        self.problem_pool.winner().expect("closed pool")
    }

    pub fn solution(&self) -> &str {
        self.solution_pool.winner().expect("closed pool")
    }
}

/// Run one generation stage: open, submit all, decide.
pub fn run_generation(
    kind: ModelKind,
    entries: &[ModelEntry],
    ballots: &[Ballot],
    method: VotingMethod,
    assignment: Option<&PowerAssignment>,
) -> Result<ModelPool> {
    let mut pool = ModelPool::open(kind);
    for entry in entries {
        pool.submit(entry.clone())?;
    }
    pool.begin_decision()?;
    pool.decide(ballots, method, assignment)?;
    Ok(pool)
}

/// Problem generation followed by solution generation for the winning
/// problem.
pub fn run_problem_solving_loop(
    scenario: &ProblemSolvingScenario,
    method: VotingMethod,
    assignment: Option<&PowerAssignment>,
) -> Result<ProblemSolvingOutcome> {
    let problem_pool = run_generation(
        ModelKind::ProblemModel,
        &scenario.problems,
        &scenario.problem_ballots,
        method,
        assignment,
    )?;
    let problem = problem_pool.winner().expect("closed pool");
    let solutions = scenario.solutions.get(problem).ok_or(Error::NoCandidates)?;
    let ballots = scenario
        .solution_ballots
        .get(problem)
        .map(Vec::as_slice)
        .unwrap_or_default();
    let solution_pool = run_generation(
        ModelKind::SolutionModel,
        solutions,
        ballots,
        method,
        assignment,
    )?;
    Ok(ProblemSolvingOutcome {
        problem_pool,
        solution_pool,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solution(id: &str, author: MemberId) -> ModelEntry {
        ModelEntry::new(
            id,
            author,
            ModelKind::SolutionModel,
            format!("proposal {id}"),
        )
    }

    #[test]
    fn open_pools() {
        let problems = ModelPool::open(ModelKind::ProblemModel);
        assert_eq!(problems.phase(), Phase::Modeling);
        assert!(problems.entries().is_empty());
        assert_eq!(problems.size_history(), &[(0, 0)]);
        let mut solutions = ModelPool::open(ModelKind::SolutionModel);
        assert_eq!(solutions.kind(), ModelKind::SolutionModel);
        solutions.submit(solution("s1", 0)).unwrap();
        assert!(problems.entries().is_empty());
    }

    #[test]
    fn three_participants_submit() {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        for (i, id) in ["s1", "s2", "s3"].iter().enumerate() {
            pool.submit(solution(id, i as MemberId)).unwrap();
        }
        let sizes: Vec<usize> = pool.size_history().iter().map(|(_, s)| *s).collect();
        assert_eq!(sizes, vec![0, 1, 2, 3]);
        assert!(matches!(
            pool.submit(solution("s1", 4)),
            Err(Error::Conflict(_))
        ));
        assert!(pool
            .submit(ModelEntry::new("p1", 0, ModelKind::ProblemModel, ""))
            .is_err());
    }

    #[test]
    fn decision_lifecycle() {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        assert!(matches!(pool.begin_decision(), Err(Error::NoCandidates)));
        for id in ["e1", "e2", "e3"] {
            pool.submit(solution(id, 0)).unwrap();
        }
        assert!(pool
            .decide(&[Ballot::single(0, "e1")], VotingMethod::Plurality, None)
            .is_err());
        pool.begin_decision().unwrap();
        assert_eq!(pool.phase(), Phase::Deciding);
        assert_eq!(pool.entries().len(), 3);
        assert!(matches!(
            pool.begin_decision(),
            Err(Error::PhaseViolation { .. })
        ));
        assert!(matches!(
            pool.submit(solution("e4", 0)),
            Err(Error::PhaseViolation { .. })
        ));
        assert!(matches!(
            pool.decide(&[], VotingMethod::Plurality, None),
            Err(Error::NoDecision(_))
        ));

        let ballots = [
            Ballot::single(0, "e1"),
            Ballot::single(1, "e1"),
            Ballot::single(2, "e2"),
        ];
        assert_eq!(
            pool.decide(&ballots, VotingMethod::Plurality, None)
                .unwrap(),
            "e1"
        );
        assert_eq!(pool.phase(), Phase::Closed);
        assert_eq!(pool.winner(), Some("e1"));
        assert_eq!(pool.size_history().last(), Some(&(4, 1)));
        assert!(matches!(
            pool.submit(solution("e5", 0)),
            Err(Error::PhaseViolation { .. })
        ));
        assert!(pool
            .decide(&ballots, VotingMethod::Plurality, None)
            .is_err());
    }

    fn valued_pool() -> ModelPool {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        for (id, v) in [("a", 0.2), ("b", 0.5), ("c", 0.9)] {
            pool.submit(solution(id, 0).with_value(v)).unwrap();
        }
        pool.begin_decision().unwrap();
        pool
    }

    #[test]
    fn mean_decision_picks_nearest_value() {
        let ballots = [Ballot::value(0, 0.4), Ballot::value(1, 0.6)];
        assert_eq!(
            valued_pool()
                .decide(&ballots, VotingMethod::Mean, None)
                .unwrap(),
            "b"
        );

        let power = PowerAssignment {
            absorbed: [(0, 3.0), (1, 1.0)].into_iter().collect(),
            stranded: 0.0,
            steps_run: 1,
        };
        assert_eq!(
            valued_pool()
                .decide(&ballots, VotingMethod::Mean, Some(&power))
                .unwrap(),
            "b"
        );
    }

    #[test]
    fn mean_decision_tie_prefers_smaller_id() {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        pool.submit(solution("z", 0).with_value(0.25)).unwrap();
        pool.submit(solution("y", 0).with_value(0.75)).unwrap();
        pool.begin_decision().unwrap();
        assert_eq!(
            pool.decide(&[Ballot::value(0, 0.5)], VotingMethod::Mean, None)
                .unwrap(),
            "y"
        );
    }

    #[test]
    fn mean_decision_requires_values() {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        pool.submit(solution("a", 0)).unwrap();
        pool.begin_decision().unwrap();
        assert!(pool
            .decide(&[Ballot::value(0, 0.5)], VotingMethod::Mean, None)
            .is_err());
        assert_eq!(pool.phase(), Phase::Deciding);
    }

    #[test]
    fn single_candidate_loop() {
        let scenario = ProblemSolvingScenario {
            problems: vec![ModelEntry::new("p", 0, ModelKind::ProblemModel, "flooding")],
            problem_ballots: vec![Ballot::single(0, "p")],
            solutions: [("p".to_string(), vec![solution("s", 0)])]
                .into_iter()
                .collect(),
            solution_ballots: [("p".to_string(), vec![Ballot::single(0, "s")])]
                .into_iter()
                .collect(),
        };
        let outcome = run_problem_solving_loop(&scenario, VotingMethod::Plurality, None).unwrap();
        assert_eq!(outcome.problem(), "p");
        assert_eq!(outcome.solution(), "s");
    }

    #[test]
    fn loop_without_solutions_for_winner() {
        let scenario = ProblemSolvingScenario {
            problems: vec![ModelEntry::new("p", 0, ModelKind::ProblemModel, "")],
            problem_ballots: vec![Ballot::single(0, "p")],
            ..Default::default()
        };
        assert!(matches!(
            run_problem_solving_loop(&scenario, VotingMethod::Plurality, None),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut pool = valued_pool();
        pool.decide(&[Ballot::value(0, 0.8)], VotingMethod::Mean, None)
            .unwrap();
        let mut open = ModelPool::open(ModelKind::ProblemModel);
        open.submit(ModelEntry::new(
            "p1",
            3,
            ModelKind::ProblemModel,
            "a, b\nc \\ d",
        ))
        .unwrap();
        for original in [pool, open, ModelPool::open(ModelKind::SolutionModel)] {
            let text = original.to_snapshot();
            let restored = ModelPool::from_snapshot(&text).unwrap();
            assert_eq!(restored, original, "{text}");
        }
    }

    #[test]
    fn snapshot_format() {
        let mut pool = ModelPool::open(ModelKind::SolutionModel);
        pool.submit(solution("s1", 2).with_value(0.5)).unwrap();
        assert_eq!(
            pool.to_snapshot(),
            "kind=solution-model\nphase=modeling\nwinner=\ns1,2,0.5,proposal s1\n"
        );
        assert!(ModelPool::from_snapshot("kind=solution-model\nphase=closed\nwinner=\n").is_err());
        assert!(ModelPool::from_snapshot("phase=modeling\n").is_err());
        assert!(matches!(
            ModelPool::from_snapshot("kind=solution-model\nphase=modeling\nwinner=\ns1,x,,\n"),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
