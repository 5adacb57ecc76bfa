//! `workspace-demo`: the problem/solution loop on a bundled or scripted
//! scenario.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use holovote::workspace::{run_problem_solving_loop, ProblemSolvingScenario};
use holovote::{
    build_network, disseminate, Ballot, Member, ModelEntry, ModelKind, ModelPool, PowerAssignment,
    TopologyConfig, VotingMethod,
};

use crate::{runtime, Failure};

#[derive(Debug, Deserialize)]
pub struct DemoScenario {
    /// Population used to weight ballots with `--weighted`.
    #[serde(default)]
    pub members: Vec<Member>,
    #[serde(default = "default_topology")]
    pub topology: String,
    #[serde(default = "default_method")]
    pub method: VotingMethod,
    #[serde(flatten)]
    pub scenario: ProblemSolvingScenario,
}

fn default_topology() -> String {
    "k1d1".into()
}

fn default_method() -> VotingMethod {
    VotingMethod::Plurality
}

/// Three participants (0, 1, 2) and two absent members who both sit
/// closest in opinion to member 0, so member 0 carries three votes once
/// power is delegated.
pub fn bundled() -> DemoScenario {
    let problem =
        |id: &str, author, text: &str| ModelEntry::new(id, author, ModelKind::ProblemModel, text);
    let solution =
        |id: &str, author, text: &str| ModelEntry::new(id, author, ModelKind::SolutionModel, text);
    let mut solutions = BTreeMap::new();
    solutions.insert(
        "drought".to_string(),
        vec![
            solution(
                "reservoir",
                0,
                "dam the upper valley and store winter runoff",
            ),
            solution("wells", 1, "drill community wells at the village edge"),
            solution("rationing", 2, "meter household use in dry months"),
        ],
    );
    solutions.insert(
        "flooding".to_string(),
        vec![solution(
            "levee",
            2,
            "raise the river bank along the lowlands",
        )],
    );
    let mut solution_ballots = BTreeMap::new();
    solution_ballots.insert(
        "drought".to_string(),
        vec![
            Ballot::single(0, "reservoir"),
            Ballot::single(1, "wells"),
            Ballot::single(2, "wells"),
        ],
    );
    solution_ballots.insert("flooding".to_string(), vec![Ballot::single(2, "levee")]);

    DemoScenario {
        members: vec![
            Member::new(0, 0.8, true),
            Member::new(1, 0.2, true),
            Member::new(2, 0.25, true),
            Member::new(3, 0.85, false),
            Member::new(4, 0.9, false),
        ],
        topology: default_topology(),
        method: VotingMethod::Plurality,
        scenario: ProblemSolvingScenario {
            problems: vec![
                problem("flooding", 0, "spring floods wash out the lower fields"),
                problem("drought", 1, "wells run dry by late summer"),
                problem("roads", 2, "the market road is impassable after rain"),
            ],
            problem_ballots: vec![
                Ballot::single(0, "drought"),
                Ballot::single(1, "drought"),
                Ballot::single(2, "flooding"),
            ],
            solutions,
            solution_ballots,
        },
    }
}

fn load(path: &Path) -> Result<DemoScenario, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn delegated_power(demo: &DemoScenario) -> Result<PowerAssignment, Failure> {
    if demo.members.is_empty() {
        return Err(runtime("scenario lists no members to weight ballots by"));
    }
    let config: TopologyConfig = demo.topology.parse().map_err(runtime)?;
    let network = build_network(&demo.members, &config, 0).map_err(runtime)?;
    disseminate(&network, config.depth).map_err(runtime)
}

fn print_pool(title: &str, pool: &ModelPool) {
    let sizes: Vec<String> = pool
        .size_history()
        .iter()
        .map(|(_, s)| s.to_string())
        .collect();
    println!("{title} pool ({})", pool.kind());
    for entry in pool.entries() {
        println!(
            "  {} (member {}): {}",
            entry.id, entry.author, entry.content
        );
    }
    println!("  size history: {}", sizes.join(" -> "));
    if let Some(winner) = pool.winning_entry() {
        println!("  winner: {}", winner.id);
    }
}

pub fn run(path: Option<&Path>, weighted: bool) -> Result<(), Failure> {
    let demo = match path {
        Some(p) => load(p)?,
        None => bundled(),
    };
    let assignment = if weighted {
        Some(delegated_power(&demo)?)
    } else {
        None
    };
    if let Some(power) = &assignment {
        let held: Vec<String> = power
            .absorbed
            .iter()
            .map(|(id, p)| format!("{id}={p}"))
            .collect();
        println!("delegated power ({}): {}", demo.topology, held.join(" "));
    }
    let outcome = run_problem_solving_loop(&demo.scenario, demo.method, assignment.as_ref())
        .map_err(runtime)?;
    print_pool("problem", &outcome.problem_pool);
    print_pool("solution", &outcome.solution_pool);
    println!(
        "outcome: problem {} solved by {}",
        outcome.problem(),
        outcome.solution()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighting_flips_the_solution() {
        let demo = bundled();
        let plain = run_problem_solving_loop(&demo.scenario, demo.method, None).unwrap();
        assert_eq!((plain.problem(), plain.solution()), ("drought", "wells"));
        let power = delegated_power(&demo).unwrap();
        assert_eq!(power.power_of(0), Some(3.0));
        let weighted = run_problem_solving_loop(&demo.scenario, demo.method, Some(&power)).unwrap();
        assert_eq!(
            (weighted.problem(), weighted.solution()),
            ("drought", "reservoir")
        );
    }
}
