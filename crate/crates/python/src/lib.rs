//! Python module `bbt_lab`: truth tables, spectra, contraction profiles,
//! mask synthesis, minimum-support certificates, NPN canonical forms and the
//! n=3 censuses. Exact quantities come back as `fractions.Fraction`.

use std::path::PathBuf;

use bbt_core::analytics;
use bbt_core::cancellation;
use bbt_core::certstore;
use bbt_core::contraction::{check_bounds, contraction_profile};
use bbt_core::families::{self, FamilyKind, FamilySpec};
use bbt_core::influence::{influence_entropy, influences, Rational};
use bbt_core::minsupport::{self, Budget};
use bbt_core::npn;
use bbt_core::synthesis;
use bbt_core::walsh::{self, fwht};
use num_bigint::BigInt;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(bbt_lab, BbtError, PyValueError);

fn err(e: bbt_core::Error) -> PyErr {
    BbtError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    let cls = py.import("fractions")?.getattr("Fraction")?;
    cls.call1((r.numer().clone(), r.denom().clone()))
}

fn from_json<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| BbtError::new_err(e.to_string()))?;
    py.import("json")?.getattr("loads")?.call1((text,))
}

/// Boolean function as a ±1 table; bit j of the index set means x_{j+1} = -1.
#[pyclass(name = "TruthTable", module = "bbt_lab", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyTruthTable(walsh::TruthTable);

#[pymethods]
impl PyTruthTable {
    #[new]
    fn new(values: Vec<i8>) -> PyResult<Self> {
        walsh::TruthTable::from_values(values).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_fid(n: usize, fid: u64) -> PyResult<Self> {
        walsh::TruthTable::from_fid(n, fid).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (name, n, k=None, width=None))]
    fn family(name: &str, n: usize, k: Option<usize>, width: Option<usize>) -> PyResult<Self> {
        let kind: FamilyKind = name.parse().map_err(err)?;
        families::generate(&FamilySpec { kind, n, k, width })
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn values(&self) -> Vec<i8> {
        self.0.values().to_vec()
    }

    #[getter]
    fn fid(&self) -> Option<u64> {
        self.0.fid()
    }

    /// Integer coefficients `2^n f̂(S)`.
    fn spectrum(&self) -> Vec<i64> {
        fwht(&self.0).coeffs().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        match self.0.fid() {
            Some(fid) => format!("TruthTable(n={}, fid={})", self.0.n(), walsh::format_fid(fid)),
            None => format!("TruthTable(n={})", self.0.n()),
        }
    }
}

/// Spectrum, influences, contraction profile and bound slacks as a dict.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, f: &PyTruthTable) -> PyResult<Bound<'py, PyDict>> {
    let s = fwht(&f.0);
    let v = influences(&s);
    let p = contraction_profile(&v);
    let b = check_bounds(&p, &v).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("spectrum", s.coeffs().to_vec())?;
    let infl = v
        .as_rationals()
        .iter()
        .map(|r| fraction(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("influences", PyList::new(py, infl)?)?;
    d.set_item("total_influence", fraction(py, &v.total())?)?;
    let exps = p
        .exponents
        .iter()
        .map(|r| fraction(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("exponents", PyList::new(py, exps)?)?;
    d.set_item("log2_mu", fraction(py, &p.log2_mu)?)?;
    d.set_item("algebraic_degree", p.algebraic_degree.clone())?;
    d.set_item("mu", p.mu_float)?;
    d.set_item("influence_entropy", influence_entropy(&v))?;
    let slack = PyDict::new(py);
    slack.set_item("coarse_lower", fraction(py, &b.coarse_lower)?)?;
    slack.set_item("coarse_upper", fraction(py, &b.coarse_upper)?)?;
    slack.set_item("jensen", fraction(py, &b.jensen)?)?;
    d.set_item("bound_slacks", slack)?;
    Ok(d)
}

#[pyclass(name = "TernaryMask", module = "bbt_lab", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyTernaryMask(synthesis::TernaryMask);

#[pymethods]
impl PyTernaryMask {
    #[new]
    fn new(weights: Vec<i8>) -> PyResult<Self> {
        synthesis::TernaryMask::new(weights).map(Self).map_err(err)
    }

    #[getter]
    fn weights(&self) -> Vec<i8> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn support(&self) -> usize {
        self.0.support()
    }

    /// `(ok, margin)` for `sign(H w) = f`.
    fn verify(&self, f: &PyTruthTable) -> PyResult<(bool, i64)> {
        let v = synthesis::verify(&self.0, &f.0).map_err(err)?;
        Ok((v.ok, v.margin))
    }

    fn __repr__(&self) -> String {
        format!("TernaryMask({:?})", self.0.weights())
    }
}

#[pyfunction]
#[pyo3(signature = (f, tau=0.05))]
fn heuristic_mask(f: &PyTruthTable, tau: f64) -> PyResult<PyTernaryMask> {
    synthesis::heuristic_mask(&fwht(&f.0), tau)
        .map(PyTernaryMask)
        .map_err(err)
}

/// `(mask, status, strategy)`.
#[pyfunction]
fn multi_start_repair(f: &PyTruthTable) -> PyResult<(PyTernaryMask, String, String)> {
    let r = synthesis::multi_start_repair(&f.0).map_err(err)?;
    let mask = r.mask.ok_or_else(|| BbtError::new_err("no mask"))?;
    Ok((PyTernaryMask(mask), r.status.to_string(), r.strategy))
}

#[pyclass(name = "Certificate", module = "bbt_lab", frozen, from_py_object)]
#[derive(Clone)]
struct PyCertificate(minsupport::Certificate);

#[pymethods]
impl PyCertificate {
    #[getter]
    fn fid(&self) -> u64 {
        self.0.fid()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn mask(&self) -> PyTernaryMask {
        PyTernaryMask(self.0.mask().clone())
    }

    #[getter]
    fn min_support(&self) -> usize {
        self.0.min_support()
    }

    #[getter]
    fn margin_min(&self) -> i64 {
        self.0.margin_min()
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.0.optimal()
    }

    #[getter]
    fn solver(&self) -> String {
        self.0.solver().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate(fid={}, n={}, support={}, optimal={})",
            walsh::format_fid(self.0.fid()),
            self.0.n(),
            self.0.min_support(),
            self.0.optimal()
        )
    }
}

/// Exact minimum-support certificate; raises `BbtError` when the node budget
/// runs out.
#[pyfunction]
#[pyo3(signature = (f, max_nodes=None))]
fn min_support(py: Python<'_>, f: &PyTruthTable, max_nodes: Option<u64>) -> PyResult<PyCertificate> {
    let budget = Budget {
        max_nodes,
        ..Budget::unlimited()
    };
    let t = f.0.clone();
    py.detach(move || minsupport::min_support_exact(&t, &budget))
        .map(PyCertificate)
        .map_err(err)
}

#[pyfunction]
fn canonicalize(f: &PyTruthTable) -> PyResult<u64> {
    npn::canonicalize(&f.0).map_err(err)
}

/// Ascending canonical fids of every NPN class.
#[pyfunction]
fn enumerate_npn_classes(py: Python<'_>, n: usize) -> PyResult<Vec<u64>> {
    py.detach(move || npn::enumerate_universe(n))
        .map(|u| u.canonical_fids)
        .map_err(err)
}

#[pyfunction]
fn npn_group_size(n: usize) -> u64 {
    npn::group_size(n)
}

#[pyfunction]
fn pair_ratio(a: f64, b: f64) -> f64 {
    cancellation::pair_ratio(a, b)
}

#[pyfunction]
fn layer_cancellation<'py>(py: Python<'py>, w: &PyTernaryMask) -> PyResult<Bound<'py, PyAny>> {
    from_json(py, &cancellation::layer_cancellation(&w.0))
}

/// Separation pairs, witness and degree histogram for every function on n
/// variables (n <= 4).
#[pyfunction]
fn separation_census<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = analytics::separation_census(n).map_err(err)?;
    from_json(py, &r)
}

/// Rows `(family, n, log2_mu, log2_mu_2dp)` with exact `Fraction` values.
#[pyfunction]
fn scaling_table<'py>(
    py: Python<'py>,
    n_values: Vec<usize>,
) -> PyResult<Vec<(String, usize, Bound<'py, PyAny>, String)>> {
    families::scaling_table(&n_values)
        .map_err(err)?
        .into_iter()
        .map(|r| Ok((r.family.to_string(), r.n, fraction(py, &r.log2_mu)?, r.log2_mu_2dp)))
        .collect()
}

/// Loads and re-verifies a certificate file.
#[pyfunction]
fn load_certificates(path: PathBuf) -> PyResult<Vec<PyCertificate>> {
    certstore::load_certificates(&path)
        .map(|f| f.certificates.into_iter().map(PyCertificate).collect())
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (path, certificates, force=false))]
fn save_certificates(path: PathBuf, certificates: Vec<PyCertificate>, force: bool) -> PyResult<()> {
    let n = certificates.first().map_or(1, |c| c.0.n());
    let certs: Vec<_> = certificates.into_iter().map(|c| c.0).collect();
    certstore::save_certificates(&path, n, &certs, false, force).map_err(err)
}

#[pyfunction]
fn audit_certificates<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let r = certstore::audit_file(&path).map_err(err)?;
    from_json(py, &r)
}

#[pyfunction]
fn algebraic_degree(f: &PyTruthTable) -> BigInt {
    contraction_profile(&influences(&fwht(&f.0))).algebraic_degree
}

#[pymodule]
fn bbt_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BbtError", m.py().get_type::<BbtError>())?;
    m.add_class::<PyTruthTable>()?;
    m.add_class::<PyTernaryMask>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(algebraic_degree, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic_mask, m)?)?;
    m.add_function(wrap_pyfunction!(multi_start_repair, m)?)?;
    m.add_function(wrap_pyfunction!(min_support, m)?)?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_npn_classes, m)?)?;
    m.add_function(wrap_pyfunction!(npn_group_size, m)?)?;
    m.add_function(wrap_pyfunction!(pair_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(layer_cancellation, m)?)?;
    m.add_function(wrap_pyfunction!(separation_census, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_table, m)?)?;
    m.add_function(wrap_pyfunction!(load_certificates, m)?)?;
    m.add_function(wrap_pyfunction!(save_certificates, m)?)?;
    m.add_function(wrap_pyfunction!(audit_certificates, m)?)?;
    Ok(())
}
