use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyTuple;

use holovote::aggregate::{self, CandidateId};
use holovote::workspace::{self, ProblemSolvingScenario};
use holovote::{
    simharness, Ballot, DecisionMode, Depth, Error, ModelKind, TopologyConfig, VotingMethod,
};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::InvalidArgument(_) | Error::InvalidBallot(_) | Error::Parse { .. } => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn depth(d: Option<u32>) -> Depth {
    d.map_or(Depth::Unbounded, Depth::Limited)
}

#[pyclass(name = "Member", frozen, get_all, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyMember {
    id: u32,
    opinion: f64,
    active: bool,
}

#[pymethods]
impl PyMember {
    #[new]
    #[pyo3(signature = (id, opinion, active=false))]
    fn new(id: u32, opinion: f64, active: bool) -> Self {
        PyMember {
            id,
            opinion,
            active,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Member(id={}, opinion={}, active={})",
            self.id, self.opinion, self.active
        )
    }
}

impl From<&holovote::Member> for PyMember {
    fn from(m: &holovote::Member) -> Self {
        PyMember {
            id: m.id,
            opinion: m.opinion,
            active: m.active,
        }
    }
}

fn to_members(members: &[PyMember]) -> Vec<holovote::Member> {
    members
        .iter()
        .map(|m| holovote::Member::new(m.id, m.opinion, m.active))
        .collect()
}

fn from_members(members: &[holovote::Member]) -> Vec<PyMember> {
    members.iter().map(PyMember::from).collect()
}

#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn generate_population(n: usize, seed: u64) -> PyResult<Vec<PyMember>> {
    Ok(from_members(
        &holovote::generate_population(n, seed).map_err(to_py)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (members, fraction, seed=0))]
fn set_activity(members: Vec<PyMember>, fraction: f64, seed: u64) -> PyResult<Vec<PyMember>> {
    let updated = holovote::set_activity(&to_members(&members), fraction, seed).map_err(to_py)?;
    Ok(from_members(&updated))
}

#[pyclass(name = "Network", frozen)]
struct PyNetwork(holovote::DelegationNetwork);

#[pymethods]
impl PyNetwork {
    #[getter]
    fn topology(&self) -> String {
        self.0.topology().label()
    }

    #[getter]
    fn members(&self) -> Vec<PyMember> {
        from_members(self.0.members())
    }

    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    /// `(from, to, weight)` triples, sorted by source then target.
    fn edges(&self) -> Vec<(u32, u32, f64)> {
        self.0.edges().map(|e| (e.from, e.to, e.weight)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(topology={}, members={}, edges={})",
            self.0.topology().label(),
            self.0.members().len(),
            self.0.edge_count()
        )
    }
}

/// Build a delegation network from a topology label such as `k0`, `k1d1`,
/// `k3dinf` or `full`.
#[pyfunction]
#[pyo3(signature = (members, topology, seed=0))]
fn build_network(members: Vec<PyMember>, topology: &str, seed: u64) -> PyResult<PyNetwork> {
    let config: TopologyConfig = parse(topology)?;
    let network = holovote::build_network(&to_members(&members), &config, seed).map_err(to_py)?;
    Ok(PyNetwork(network))
}

#[pyclass(name = "PowerAssignment", frozen, from_py_object)]
#[derive(Clone)]
struct PyPower(holovote::PowerAssignment);

#[pymethods]
impl PyPower {
    #[getter]
    fn absorbed(&self) -> BTreeMap<u32, f64> {
        self.0.absorbed.clone()
    }

    #[getter]
    fn stranded(&self) -> f64 {
        self.0.stranded
    }

    #[getter]
    fn steps_run(&self) -> u32 {
        self.0.steps_run
    }

    fn power_of(&self, id: u32) -> Option<f64> {
        self.0.power_of(id)
    }

    fn total(&self) -> f64 {
        self.0.total()
    }
}

/// Spread power over the network; `depth=None` iterates to convergence,
/// otherwise the topology's own depth is overridden.
#[pyfunction]
#[pyo3(signature = (network, depth=None))]
fn disseminate(network: &PyNetwork, depth: Option<u32>) -> PyResult<PyPower> {
    let d = match depth {
        Some(_) => self::depth(depth),
        None => network.0.topology().depth,
    };
    Ok(PyPower(
        holovote::disseminate(&network.0, d).map_err(to_py)?,
    ))
}

#[pyfunction]
fn disseminate_oracle(network: &PyNetwork, depth: u32) -> PyResult<PyPower> {
    Ok(PyPower(
        holovote::disseminate_oracle(&network.0, depth).map_err(to_py)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (power, members, mode="literal"))]
fn network_decision(power: &PyPower, members: Vec<PyMember>, mode: &str) -> PyResult<f64> {
    let mode: DecisionMode = parse(mode)?;
    let outcome =
        aggregate::network_decision(&power.0, &to_members(&members), mode).map_err(to_py)?;
    Ok(outcome.value)
}

#[pyfunction]
fn k0_decision(members: Vec<PyMember>) -> PyResult<f64> {
    Ok(aggregate::k0_decision(&to_members(&members))
        .map_err(to_py)?
        .value)
}

#[pyfunction]
fn perfect_decision(members: Vec<PyMember>) -> PyResult<f64> {
    aggregate::perfect_decision(&to_members(&members)).map_err(to_py)
}

#[pyfunction]
fn decision_error(network_value: f64, perfect_value: f64) -> f64 {
    aggregate::decision_error(network_value, perfect_value)
}

/// Ballots are `(voter, vote)` or `(voter, vote, weight)` tuples where the
/// vote is a candidate id, a ranking list or a number.
fn to_ballot(obj: &Bound<'_, PyAny>) -> PyResult<Ballot> {
    let tuple = obj.cast::<PyTuple>()?;
    if !(2..=3).contains(&tuple.len()) {
        return Err(PyValueError::new_err(
            "ballot must be (voter, vote) or (voter, vote, weight)",
        ));
    }
    let voter: u32 = tuple.get_item(0)?.extract()?;
    let vote = tuple.get_item(1)?;
    let ballot = if let Ok(choice) = vote.extract::<String>() {
        Ballot::single(voter, choice)
    } else if let Ok(value) = vote.extract::<f64>() {
        Ballot::value(voter, value)
    } else {
        Ballot::ranking(voter, vote.extract::<Vec<String>>()?)
    };
    Ok(match tuple.len() {
        3 => ballot.with_weight(tuple.get_item(2)?.extract()?),
        _ => ballot,
    })
}

fn to_ballots(ballots: &[Bound<'_, PyAny>]) -> PyResult<Vec<Ballot>> {
    ballots.iter().map(to_ballot).collect()
}

fn weighted(ballots: Vec<Ballot>, power: Option<&PyPower>) -> PyResult<Vec<Ballot>> {
    match power {
        Some(p) => aggregate::power_weighted_ballots(&ballots, &p.0).map_err(to_py),
        None => Ok(ballots),
    }
}

#[pyfunction]
#[pyo3(signature = (ballots, candidates, power=None))]
fn borda(
    ballots: Vec<Bound<'_, PyAny>>,
    candidates: Vec<CandidateId>,
    power: Option<&PyPower>,
) -> PyResult<String> {
    let ballots = weighted(to_ballots(&ballots)?, power)?;
    aggregate::borda(&ballots, &candidates).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (ballots, candidates, power=None))]
fn borda_scores(
    ballots: Vec<Bound<'_, PyAny>>,
    candidates: Vec<CandidateId>,
    power: Option<&PyPower>,
) -> PyResult<Vec<(String, f64)>> {
    let ballots = weighted(to_ballots(&ballots)?, power)?;
    aggregate::borda_scores(&ballots, &candidates).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (ballots, candidates, power=None))]
fn plurality(
    ballots: Vec<Bound<'_, PyAny>>,
    candidates: Vec<CandidateId>,
    power: Option<&PyPower>,
) -> PyResult<String> {
    let ballots = weighted(to_ballots(&ballots)?, power)?;
    aggregate::plurality(&ballots, &candidates).map_err(to_py)
}

#[pyclass(name = "SweepRecord", frozen, get_all)]
struct PySweepRecord {
    topology: String,
    participation: f64,
    mean_error: f64,
    std_error: f64,
    mean_stranded_fraction: f64,
    trials: usize,
}

#[pymethods]
impl PySweepRecord {
    fn __repr__(&self) -> String {
        format!(
            "SweepRecord(topology={:?}, participation={}, mean_error={}, std_error={})",
            self.topology, self.participation, self.mean_error, self.std_error
        )
    }
}

#[pyfunction]
#[pyo3(signature = (
    population=simharness::DEFAULT_POPULATION,
    topologies=vec!["k0".to_string(), "k1d1".to_string(), "k3dinf".to_string(), "full".to_string()],
    participation=None,
    trials=simharness::DEFAULT_TRIALS,
    seed=0,
    mode="literal",
    fixed_population=false,
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    population: usize,
    topologies: Vec<String>,
    participation: Option<Vec<f64>>,
    trials: usize,
    seed: u64,
    mode: &str,
    fixed_population: bool,
) -> PyResult<Vec<PySweepRecord>> {
    let config = holovote::SweepConfig {
        population,
        participation_grid: participation.unwrap_or_else(simharness::default_grid),
        trials,
        topologies: topologies
            .iter()
            .map(|t| parse(t))
            .collect::<PyResult<_>>()?,
        master_seed: seed,
        decision_mode: parse(mode)?,
        fixed_population,
    };
    let records = py.detach(|| simharness::sweep(&config)).map_err(to_py)?;
    Ok(records
        .into_iter()
        .map(|r| PySweepRecord {
            topology: r.topology,
            participation: r.participation,
            mean_error: r.mean_error,
            std_error: r.std_error,
            mean_stranded_fraction: r.mean_stranded_fraction,
            trials: r.trials,
        })
        .collect())
}

#[pyclass(name = "ModelPool")]
struct PyModelPool(holovote::ModelPool);

#[pymethods]
impl PyModelPool {
    /// `kind` is `problem-model` or `solution-model`.
    #[new]
    fn new(kind: &str) -> PyResult<Self> {
        Ok(PyModelPool(holovote::ModelPool::open(parse::<ModelKind>(
            kind,
        )?)))
    }

    #[pyo3(signature = (id, author, content="", value=None))]
    fn submit(&mut self, id: &str, author: u32, content: &str, value: Option<f64>) -> PyResult<()> {
        let mut entry = holovote::ModelEntry::new(id, author, self.0.kind(), content);
        entry.numeric_value = value;
        self.0.submit(entry).map_err(to_py)
    }

    fn begin_decision(&mut self) -> PyResult<()> {
        self.0.begin_decision().map_err(to_py)
    }

    #[pyo3(signature = (ballots, method="plurality", power=None))]
    fn decide(
        &mut self,
        ballots: Vec<Bound<'_, PyAny>>,
        method: &str,
        power: Option<&PyPower>,
    ) -> PyResult<String> {
        let method: VotingMethod = parse(method)?;
        let ballots = to_ballots(&ballots)?;
        self.0
            .decide(&ballots, method, power.map(|p| &p.0))
            .map_err(to_py)
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.0.phase().as_str()
    }

    #[getter]
    fn winner(&self) -> Option<String> {
        self.0.winner().map(str::to_string)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn size_history(&self) -> Vec<(usize, usize)> {
        self.0.size_history().to_vec()
    }

    #[getter]
    fn entry_ids(&self) -> Vec<String> {
        self.0.entries().iter().map(|e| e.id.clone()).collect()
    }

    fn snapshot(&self) -> String {
        self.0.to_snapshot()
    }

    #[staticmethod]
    fn from_snapshot(text: &str) -> PyResult<Self> {
        Ok(PyModelPool(
            holovote::ModelPool::from_snapshot(text).map_err(to_py)?,
        ))
    }
}

/// Run problem generation then solution generation on a JSON scenario and
/// return `(problem, solution)`.
#[pyfunction]
#[pyo3(signature = (scenario_json, method="plurality", power=None))]
fn run_problem_solving_loop(
    scenario_json: &str,
    method: &str,
    power: Option<&PyPower>,
) -> PyResult<(String, String)> {
    let scenario: ProblemSolvingScenario =
        serde_json::from_str(scenario_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome =
        workspace::run_problem_solving_loop(&scenario, parse(method)?, power.map(|p| &p.0))
            .map_err(to_py)?;
    Ok((
        outcome.problem().to_string(),
        outcome.solution().to_string(),
    ))
}

#[pymodule]
#[pyo3(name = "holovote")]
fn holovote_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMember>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyPower>()?;
    m.add_class::<PySweepRecord>()?;
    m.add_class::<PyModelPool>()?;
    m.add_function(wrap_pyfunction!(generate_population, m)?)?;
    m.add_function(wrap_pyfunction!(set_activity, m)?)?;
    m.add_function(wrap_pyfunction!(build_network, m)?)?;
    m.add_function(wrap_pyfunction!(disseminate, m)?)?;
    m.add_function(wrap_pyfunction!(disseminate_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(network_decision, m)?)?;
    m.add_function(wrap_pyfunction!(k0_decision, m)?)?;
    m.add_function(wrap_pyfunction!(perfect_decision, m)?)?;
    m.add_function(wrap_pyfunction!(decision_error, m)?)?;
    m.add_function(wrap_pyfunction!(borda, m)?)?;
    m.add_function(wrap_pyfunction!(borda_scores, m)?)?;
    m.add_function(wrap_pyfunction!(plurality, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_problem_solving_loop, m)?)?;
    Ok(())
}
