//! Python bindings: the formula, program, net and proof surfaces plus the
//! simulator, exposed through text-friendly wrappers.
//!
//! Build with maturin (`maturin develop -m crates/python/Cargo.toml`) or
//! copy the built cdylib next to your script as `mallnet_py.so`; see
//! `python/smoke_test.py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mallnet::analysis::is_proof_net_fast;
use mallnet::bipolarizer::Program;
use mallnet::engine::{desequentialize, sequentialize, simulate, Policy, Schedule};
use mallnet::formulas::{parse_formula, Atom, Formula};
use mallnet::proofnet::{
    dot::net_to_dot, find_singularity_free_loop, is_proof_net, net_from_text, net_to_text,
    ProofStructure,
};
use mallnet::sequent::{check_proof, proof_from_text, proof_to_text, Sequent};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A MALL formula.
#[pyclass(name = "Formula")]
#[derive(Clone)]
struct PyFormula {
    inner: Formula,
}

#[pymethods]
impl PyFormula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyFormula {
            inner: parse_formula(text).map_err(value_err)?,
        })
    }

    fn polarity(&self) -> String {
        self.inner.polarity().to_string()
    }

    fn is_monopole(&self) -> bool {
        self.inner.is_monopole()
    }

    fn is_bipole(&self) -> bool {
        self.inner.is_bipole()
    }

    fn dual(&self) -> PyFormula {
        PyFormula {
            inner: self.inner.dual(),
        }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({})", self.inner)
    }

    fn __eq__(&self, other: &PyFormula) -> bool {
        self.inner == other.inner
    }
}

/// An ordered set of universal-program clauses.
#[pyclass(name = "Program")]
#[derive(Clone)]
struct PyProgram {
    inner: Program,
}

#[pymethods]
impl PyProgram {
    /// Bipolarizes a formula into its universal program.
    #[staticmethod]
    fn from_formula(formula: &PyFormula) -> PyProgram {
        PyProgram {
            inner: Program::from_formula(&formula.inner).0,
        }
    }

    /// Parses the `head := clause` line format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyProgram> {
        Ok(PyProgram {
            inner: Program::parse(text).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `head := clause` lines.
    fn bipoles(&self) -> Vec<String> {
        self.inner.bipoles().iter().map(|b| b.to_string()).collect()
    }

    /// Rendered inference schemes, one line per plus-variant.
    fn schemes(&self) -> Vec<String> {
        self.inner.schemes().iter().map(|s| s.to_string()).collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Program({} bipoles)", self.inner.len())
    }
}

/// A bipolar focussing proof structure.
#[pyclass(name = "Net")]
#[derive(Clone)]
struct PyNet {
    inner: ProofStructure,
}

#[pymethods]
impl PyNet {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyNet> {
        Ok(PyNet {
            inner: net_from_text(text).map_err(value_err)?,
        })
    }

    /// Structural violations; empty means well formed.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn is_proof_net(&self) -> bool {
        is_proof_net(&self.inner)
    }

    /// The maximal-switching variant of the check; agrees with
    /// `is_proof_net`.
    fn is_proof_net_fast(&self) -> bool {
        is_proof_net_fast(&self.inner)
    }

    fn slice_count(&self) -> u64 {
        self.inner.resolution_count() as u64
    }

    /// A singularity-free proper loop of some slice, as step strings, or
    /// None when the structure is correct.
    fn find_loop(&self) -> Option<Vec<String>> {
        for slice in self.inner.slices() {
            if let Some(trip) = find_singularity_free_loop(&self.inner, &slice) {
                return Some(
                    trip.steps
                        .iter()
                        .map(|s| format!("{}[{}/{}]", s.link, s.entry, s.exit))
                        .collect(),
                );
            }
        }
        None
    }

    fn conclusion(&self) -> String {
        self.inner.conclusion_atoms().to_string()
    }

    fn is_closed(&self) -> bool {
        self.inner.is_closed()
    }

    fn to_text(&self) -> String {
        net_to_text(&self.inner)
    }

    fn to_dot(&self) -> String {
        net_to_dot(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Net({} links, {} hyperlinks, conclusion [{}])",
            self.inner.links().count(),
            self.inner.hyperlinks().count(),
            self.inner.conclusion_atoms()
        )
    }
}

/// Checks a proof (indented text format) against a program; returns the
/// list of defects, empty when the proof is good.
#[pyfunction]
fn check_proof_text(proof: &str, program: &PyProgram) -> PyResult<Vec<String>> {
    let proof = proof_from_text(proof).map_err(value_err)?;
    Ok(check_proof(&proof, &program.inner)
        .failures
        .iter()
        .map(|f| f.to_string())
        .collect())
}

/// De-sequentializes a checked proof into a net.
#[pyfunction]
fn deseq(proof: &str, program: &PyProgram) -> PyResult<PyNet> {
    let proof = proof_from_text(proof).map_err(value_err)?;
    let report = check_proof(&proof, &program.inner);
    if !report.is_ok() {
        return Err(value_err(format!("proof does not check:\n{report}")));
    }
    Ok(PyNet {
        inner: desequentialize(&proof, &program.inner).map_err(value_err)?,
    })
}

/// Sequentializes a correct net into proof text.
#[pyfunction]
fn seq(net: &PyNet, program: &PyProgram) -> PyResult<String> {
    let proof = sequentialize(&net.inner, &program.inner).map_err(value_err)?;
    Ok(proof_to_text(&proof))
}

/// Runs the concurrent construction: returns (trace lines, final net,
/// closed).
#[pyfunction]
#[pyo3(signature = (program, goal, seed=0, max_steps=10_000, policy="round-robin"))]
fn run_simulation(
    program: &PyProgram,
    goal: &str,
    seed: u64,
    max_steps: u64,
    policy: &str,
) -> PyResult<(Vec<String>, PyNet, bool)> {
    let mut atoms = Vec::new();
    for part in goal.split(',') {
        match parse_formula(part.trim()) {
            Ok(Formula::NegAtom(a)) => atoms.push(Atom::new(a.name())),
            _ => return Err(value_err(format!("goal must list atoms, got {part:?}"))),
        }
    }
    let policy = match policy {
        "round-robin" => Policy::RoundRobin,
        "random" => Policy::Random,
        other => return Err(value_err(format!("unknown policy {other:?}"))),
    };
    let outcome = simulate(
        &program.inner,
        &Sequent::from_atoms(atoms),
        &Schedule { seed, policy },
        max_steps,
    );
    Ok((
        outcome.trace.events.iter().map(|e| e.to_string()).collect(),
        PyNet {
            inner: outcome.final_net,
        },
        outcome.closed,
    ))
}

#[pymodule]
fn mallnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyFormula>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyNet>()?;
    m.add_function(wrap_pyfunction!(check_proof_text, m)?)?;
    m.add_function(wrap_pyfunction!(deseq, m)?)?;
    m.add_function(wrap_pyfunction!(seq, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    Ok(())
}
