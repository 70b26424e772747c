use bbhc_core::bbmodel::{pattern_from_str, pattern_to_string};
use bbhc_core::bench::fit_scaling as core_fit;
use bbhc_core::{
    BbState, BbStructure, BbhcError, BuildingBlock, Genotype, LevelWeight, MemoryBuffer, Problem,
    ProblemKind, ProblemSpec, RunConfig, RunResult,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: BbhcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bits(bits: &str) -> PyResult<Genotype> {
    bits.parse().map_err(err)
}

/// A hierarchical test problem: "hiff", "hxor" or "htrap".
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (kind, size, shuffle_seed=None, level_weight="block_size"))]
    fn new(kind: &str, size: usize, shuffle_seed: Option<u64>, level_weight: &str) -> PyResult<Self> {
        let kind: ProblemKind = kind.parse().map_err(err)?;
        let mut spec = ProblemSpec::with_length(kind, size).map_err(err)?;
        spec.shuffle_seed = shuffle_seed;
        spec.level_weight = match level_weight {
            "block_size" => LevelWeight::BlockSize,
            "uniform" => LevelWeight::Uniform,
            other => return Err(PyValueError::new_err(format!("unknown level weight {other:?}"))),
        };
        Ok(PyProblem {
            inner: Problem::new(spec).map_err(err)?,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn length(&self) -> usize {
        self.inner.length()
    }

    #[getter]
    fn optimum(&self) -> f64 {
        self.inner.global_optimum_value()
    }

    #[getter]
    fn permutation(&self) -> Option<Vec<usize>> {
        self.inner.permutation().map(<[usize]>::to_vec)
    }

    /// Score a bit string such as "0110"; does not count as an evaluation anywhere.
    fn evaluate(&self, bits: &str) -> PyResult<f64> {
        self.inner.score(&parse_bits(bits)?).map_err(err)
    }

    fn is_optimal(&self, score: f64) -> bool {
        self.inner.is_optimal(score)
    }

    fn to_structural(&self, bits: &str) -> PyResult<String> {
        Ok(self.inner.to_structural(&parse_bits(bits)?).to_string())
    }

    #[pyo3(name = "from_structural")]
    fn genotype_of(&self, bits: &str) -> PyResult<String> {
        Ok(self.inner.from_structural(&parse_bits(bits)?).to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({:?}, {})",
            self.inner.kind().to_string(),
            self.inner.length()
        )
    }
}

/// A partition of the loci into building blocks, each with its allowed configurations.
#[pyclass(name = "Structure", frozen)]
struct PyStructure {
    inner: BbStructure,
}

#[pymethods]
impl PyStructure {
    /// Blocks given as `(loci, configs)` pairs, configs as bit strings over the sorted loci.
    #[new]
    fn new(blocks: Vec<(Vec<usize>, Vec<String>)>, length: usize) -> PyResult<Self> {
        let blocks = blocks
            .into_iter()
            .map(|(loci, configs)| {
                let configs = configs
                    .iter()
                    .map(|c| pattern_from_str(c))
                    .collect::<Result<_, _>>()?;
                BuildingBlock::new(loci, configs)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        Ok(PyStructure {
            inner: BbStructure::new(blocks, length).map_err(err)?,
        })
    }

    /// One single-locus block per bit.
    #[staticmethod]
    fn initial(length: usize) -> Self {
        PyStructure {
            inner: BbStructure::initial(length),
        }
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.num_blocks()
    }

    fn blocks(&self) -> Vec<(Vec<usize>, Vec<String>)> {
        self.inner
            .blocks()
            .iter()
            .map(|b| {
                (
                    b.loci().to_vec(),
                    b.configs().iter().map(|c| pattern_to_string(c)).collect(),
                )
            })
            .collect()
    }

    /// Decode a state of 1-based configuration indices into a bit string.
    fn decode(&self, state: Vec<usize>) -> PyResult<String> {
        let state = BbState::from_one_based(&state).map_err(err)?;
        Ok(self.inner.decode(&state).map_err(err)?.to_string())
    }

    /// 1-based state expressing `bits`, or None if the structure cannot express it.
    fn encode(&self, bits: &str) -> PyResult<Option<Vec<usize>>> {
        Ok(self.inner.encode(&parse_bits(bits)?).map(|s| s.to_one_based()))
    }

    /// Number of states the structure can express, as an exact integer.
    fn neighborhood_size<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let digits = self.inner.neighborhood_size().to_string();
        py.import("builtins")?.getattr("int")?.call1((digits,))
    }

    /// Linkage clusters (0-based block indices) for a memory of 1-based states.
    fn detect_clusters(&self, states: Vec<Vec<usize>>) -> PyResult<Vec<Vec<usize>>> {
        let memory = self.memory(&states)?;
        bbhc_core::detect_clusters(&self.inner, &memory).map_err(err)
    }

    /// Structure after one round of linkage learning on a memory of 1-based states.
    fn learn(&self, states: Vec<Vec<usize>>) -> PyResult<PyStructure> {
        let memory = self.memory(&states)?;
        let clusters = bbhc_core::detect_clusters(&self.inner, &memory).map_err(err)?;
        Ok(PyStructure {
            inner: bbhc_core::rebuild_structure(&self.inner, &clusters, &memory).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Structure({} blocks, {} loci)",
            self.inner.num_blocks(),
            self.inner.total_length()
        )
    }
}

impl PyStructure {
    fn memory(&self, states: &[Vec<usize>]) -> PyResult<MemoryBuffer> {
        let states = states
            .iter()
            .map(|s| BbState::from_one_based(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        MemoryBuffer::from_states(&self.inner, &states).map_err(err)
    }
}

/// Outcome of one hill-climber run.
#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    best_genotype: String,
    best_score: f64,
    total_evals: u64,
    epochs: usize,
    reached_optimum: bool,
    optimum_id: Option<u8>,
    structure_correct: bool,
    /// Per-epoch `(num_blocks, memory_size, evals_so_far, best_score)`.
    trace: Vec<(usize, usize, u64, f64)>,
    final_structure: Py<PyStructure>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(best_score={}, total_evals={}, reached_optimum={})",
            self.best_score, self.total_evals, self.reached_optimum
        )
    }
}

fn wrap_result(py: Python<'_>, problem: &Problem, r: RunResult) -> PyResult<PyRunResult> {
    let structure_correct = bbhc_core::structure_correct(&r, problem);
    Ok(PyRunResult {
        best_genotype: r.best_genotype.to_string(),
        best_score: r.best_score,
        total_evals: r.total_evals,
        epochs: r.epochs,
        reached_optimum: r.reached_optimum,
        optimum_id: r.optimum_id,
        structure_correct,
        trace: r
            .trace
            .iter()
            .map(|e| (e.num_blocks, e.memory_size, e.evals_so_far, e.best_score))
            .collect(),
        final_structure: Py::new(
            py,
            PyStructure {
                inner: r.final_structure,
            },
        )?,
    })
}

/// Run the building block hill-climber on `problem`.
#[pyfunction]
#[pyo3(signature = (problem, seed, memory_const=None, max_evals=None, stagnation_epochs=None))]
fn run_bbhc(
    py: Python<'_>,
    problem: &PyProblem,
    seed: u64,
    memory_const: Option<usize>,
    max_evals: Option<u64>,
    stagnation_epochs: Option<usize>,
) -> PyResult<PyRunResult> {
    let mut config = RunConfig::for_problem(&problem.inner, seed);
    if let Some(c) = memory_const {
        config.memory_const = c;
    }
    if let Some(b) = max_evals {
        config.max_evals = b;
    }
    if let Some(t) = stagnation_epochs {
        config.stagnation_epochs = t;
    }
    let result = py
        .detach(|| bbhc_core::run_bbhc(&problem.inner, &config))
        .map_err(err)?;
    wrap_result(py, &problem.inner, result)
}

/// Fit `a * x^b * ln(x)` to `(size, mean_evals)` points. Returns `(a, b, residual)`.
#[pyfunction]
fn fit_scaling(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = core_fit(&points).map_err(err)?;
    Ok((f.a, f.b, f.residual))
}

#[pymodule]
fn bbhc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyStructure>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_bbhc, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling, m)?)?;
    Ok(())
}
