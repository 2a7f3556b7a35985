//! Python bindings: the domain types and the operations most useful from a
//! notebook (divergences, the lower-bound LP, estimators, and single
//! episodes of the policy).

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lipband::estimator;
use lipband::lipschitz::{self, Lipschitz};
use lipband::oracle;
use lipband::policy::{BanditPolicy, DelPolicy, PolicyConfig};
use lipband::sim;

fn value_err(e: lipband::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `inf` maps to the unstructured belief; any finite nonnegative float is a
/// structured constant.
fn parse_constant(l: f64) -> PyResult<Lipschitz> {
    if l.is_nan() || l < 0.0 {
        Err(PyValueError::new_err("constant must be nonnegative or inf"))
    } else if l.is_infinite() {
        Ok(Lipschitz::Unbounded)
    } else {
        Ok(Lipschitz::Finite(l))
    }
}

/// Arm positions with cached pairwise distances.
#[pyclass(frozen)]
struct ArmEmbedding {
    inner: Arc<lipband::ArmEmbedding>,
}

#[pymethods]
impl ArmEmbedding {
    /// Builds from a list of coordinate vectors in [0,1]^D.
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(ArmEmbedding { inner: Arc::new(lipband::ArmEmbedding::new(points).map_err(value_err)?) })
    }

    /// Convenience constructor for 1-D embeddings.
    #[staticmethod]
    fn line(coords: Vec<f64>) -> PyResult<Self> {
        Ok(ArmEmbedding { inner: Arc::new(lipband::ArmEmbedding::line(&coords).map_err(value_err)?) })
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn delta_x(&self) -> f64 {
        self.inner.delta_x()
    }

    fn dist(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.num_arms() || j >= self.inner.num_arms() {
            return Err(PyValueError::new_err("arm index out of range"));
        }
        Ok(self.inner.dist(i, j))
    }

    fn __repr__(&self) -> String {
        format!("ArmEmbedding(K={}, D={}, delta_x={})", self.inner.num_arms(), self.inner.dim(), self.inner.delta_x())
    }
}

/// Bernoulli instance with cached best-arm structure.
#[pyclass(frozen)]
struct BanditInstance {
    inner: lipband::BanditInstance,
}

#[pymethods]
impl BanditInstance {
    #[new]
    fn new(means: Vec<f64>) -> PyResult<Self> {
        Ok(BanditInstance { inner: lipband::BanditInstance::new(means).map_err(value_err)? })
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means().to_vec()
    }

    #[getter]
    fn best_value(&self) -> f64 {
        self.inner.best_value()
    }

    #[getter]
    fn best_set(&self) -> Vec<usize> {
        self.inner.best_set().to_vec()
    }

    #[getter]
    fn min_gap(&self) -> Option<f64> {
        self.inner.min_gap()
    }

    fn gap(&self, i: usize) -> PyResult<f64> {
        if i >= self.inner.num_arms() {
            return Err(PyValueError::new_err("arm index out of range"));
        }
        Ok(self.inner.gap(i))
    }

    fn __repr__(&self) -> String {
        format!("BanditInstance(means={:?})", self.inner.means())
    }
}

/// Bernoulli KL divergence in nats.
#[pyfunction]
fn bernoulli_kl(p: f64, q: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(PyValueError::new_err("probabilities must lie in [0,1]"));
    }
    Ok(lipband::bernoulli_kl(p, q))
}

/// Tightest constant of a mean vector over an embedding.
#[pyfunction]
fn tightest_lipschitz(means: Vec<f64>, emb: &ArmEmbedding) -> PyResult<f64> {
    if means.len() != emb.inner.num_arms() || means.len() < 2 {
        return Err(PyValueError::new_err("means must match the embedding and have K >= 2"));
    }
    Ok(lipschitz::lipschitz_of(&means, &emb.inner))
}

/// Membership in the structure class for constant `l` (`inf` accepted).
#[pyfunction]
fn is_member(instance: &BanditInstance, emb: &ArmEmbedding, l: f64) -> PyResult<bool> {
    Ok(lipschitz::is_member(&instance.inner, &emb.inner, parse_constant(l)?))
}

/// Most confusing parameter for suboptimal arm `j`.
#[pyfunction]
fn confusing_parameter(
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: f64,
    j: usize,
) -> PyResult<Vec<f64>> {
    if instance.inner.is_optimal(j) {
        return Err(PyValueError::new_err("arm j must be suboptimal"));
    }
    Ok(oracle::confusing_parameter(&instance.inner, &emb.inner, parse_constant(l)?, j))
}

/// Solves the lower-bound LP; returns `(value, rates, status)` where rates
/// are per-arm (infinite on the best set) and status is one of "optimal",
/// "degenerate", "infeasible", "unbounded".
#[pyfunction]
fn solve_lower_bound(
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: f64,
) -> PyResult<(f64, Vec<f64>, String)> {
    let sol = oracle::solve_lower_bound(&instance.inner, &emb.inner, parse_constant(l)?);
    let status = match sol.status {
        oracle::LpStatus::Optimal => "optimal",
        oracle::LpStatus::Degenerate => "degenerate",
        oracle::LpStatus::Infeasible => "infeasible",
        oracle::LpStatus::Unbounded => "unbounded",
    };
    Ok((sol.value, sol.allocation.rates().to_vec(), status.to_string()))
}

/// Closed-form ceiling on the LP value.
#[pyfunction]
fn scale_free_bound(instance: &BanditInstance, l: f64, dim: usize) -> PyResult<f64> {
    if instance.inner.min_gap().is_none() {
        return Err(PyValueError::new_err("instance needs a suboptimal arm"));
    }
    Ok(oracle::scale_free_bound(&instance.inner, l, dim))
}

/// Width of the continuity window above `l`.
#[pyfunction]
fn continuity_delta(instance: &BanditInstance, emb: &ArmEmbedding, l: f64) -> f64 {
    oracle::continuity_delta(&instance.inner, &emb.inner, l)
}

/// Quantile-with-margin estimate from per-episode constants.
#[pyfunction]
fn quantile_estimator(estimates: Vec<f64>, beta: f64, eps_beta: f64) -> PyResult<f64> {
    let cfg = estimator::EstimatorConfig::new(beta, eps_beta).map_err(value_err)?;
    if estimates.is_empty() {
        return Err(PyValueError::new_err("estimates must be nonempty"));
    }
    Ok(estimator::quantile_estimator(&estimates, &cfg))
}

/// Prefix maxima of per-episode constants.
#[pyfunction]
fn running_max(estimates: Vec<f64>) -> PyResult<Vec<f64>> {
    if estimates.is_empty() {
        return Err(PyValueError::new_err("estimates must be nonempty"));
    }
    Ok(estimator::running_max(&estimates))
}

/// Sufficient per-arm pulls per episode for the quantile estimator.
#[pyfunction]
fn required_tau(
    beta: f64,
    eps_beta: f64,
    alpha: f64,
    eps_alpha: f64,
    delta_x: f64,
    num_arms: usize,
) -> PyResult<f64> {
    let cfg = estimator::EstimatorConfig::new(beta, eps_beta).map_err(value_err)?;
    if !(beta < alpha && eps_beta > eps_alpha) {
        return Err(PyValueError::new_err("needs beta < alpha and eps_beta > eps_alpha"));
    }
    let profile = estimator::LearnabilityProfile { alpha, eps_alpha, tau: 0.0 };
    Ok(estimator::required_tau(&cfg, &profile, delta_x, num_arms))
}

/// Sufficient number of past episodes for the quantile estimator.
#[pyfunction]
fn required_episodes(
    beta: f64,
    eps_beta: f64,
    alpha: f64,
    eps_alpha: f64,
    num_arms: usize,
    horizon: u64,
) -> PyResult<f64> {
    let cfg = estimator::EstimatorConfig::new(beta, eps_beta).map_err(value_err)?;
    if !(beta < alpha && eps_beta > eps_alpha) {
        return Err(PyValueError::new_err("needs beta < alpha and eps_beta > eps_alpha"));
    }
    let profile = estimator::LearnabilityProfile { alpha, eps_alpha, tau: 0.0 };
    Ok(estimator::required_episodes(&cfg, &profile, num_arms, horizon))
}

/// Tail bound on the quantile estimator missing its window.
#[pyfunction]
fn concentration_bound(
    beta: f64,
    eps_beta: f64,
    alpha: f64,
    eps_alpha: f64,
    tau: f64,
    delta_x: f64,
    episodes: usize,
) -> PyResult<f64> {
    let cfg = estimator::EstimatorConfig::new(beta, eps_beta).map_err(value_err)?;
    if !(beta < alpha && eps_beta > eps_alpha) {
        return Err(PyValueError::new_err("needs beta < alpha and eps_beta > eps_alpha"));
    }
    let profile = estimator::LearnabilityProfile { alpha, eps_alpha, tau };
    Ok(estimator::concentration_bound(&profile, &cfg, delta_x, episodes))
}

/// Draws an instance from the chain sampler over a sorted 1-D embedding.
#[pyfunction]
#[pyo3(signature = (emb, l, seed, lo=0.05, hi=0.95))]
fn generate_instance(
    emb: &ArmEmbedding,
    l: f64,
    seed: u64,
    lo: f64,
    hi: f64,
) -> PyResult<BanditInstance> {
    if !emb.inner.is_sorted_line() {
        return Err(PyValueError::new_err("chain sampler needs a sorted 1-D embedding"));
    }
    if !(l >= 0.0) || !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(PyValueError::new_err("bad constant or bounds"));
    }
    let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
    Ok(BanditInstance { inner: sim::generate_instance(&emb.inner, l, (lo, hi), &mut rng) })
}

/// Runs one seeded episode of the policy with believed constant `l`
/// (`inf` for unstructured, `nan` not allowed; pass `l=None` for the
/// online-estimated variant). Returns a result dict with final pulls,
/// empirical means, checkpointed regret, and phase counts.
#[pyfunction]
#[pyo3(signature = (instance, emb, horizon, seed, l=None, lam=0.1, est_const=1.0))]
#[allow(clippy::too_many_arguments)]
fn run_episode(
    py: Python<'_>,
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    horizon: u64,
    seed: u64,
    l: Option<f64>,
    lam: f64,
    est_const: f64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    if instance.inner.num_arms() != emb.inner.num_arms() {
        return Err(PyValueError::new_err("instance/embedding arm count mismatch"));
    }
    if horizon < emb.inner.num_arms() as u64 {
        return Err(PyValueError::new_err("horizon must cover at least one pull per arm"));
    }
    let mut config = PolicyConfig::new(Lipschitz::Unbounded).with_lambda(lam);
    config.est_const = est_const;
    let mut policy = match l {
        Some(value) => {
            config.believed = parse_constant(value)?;
            DelPolicy::fixed(Arc::clone(&emb.inner), config)
        }
        None => DelPolicy::online(Arc::clone(&emb.inner), config),
    };
    let mut env = sim::Environment::new(instance.inner.clone(), seed);
    let checkpoints = sim::log_spaced_checkpoints(10, horizon, 100);
    let result = sim::run_episode(&mut policy, &mut env, horizon, &checkpoints);

    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("pulls", result.pulls.clone())?;
    dict.set_item("means_hat", result.means_hat.clone())?;
    dict.set_item("regret", result.final_regret())?;
    dict.set_item("regret_trace", result.regret_trace.clone())?;
    dict.set_item("final_belief", policy.believed().map(|b| b.as_f64()))?;
    dict.set_item(
        "phases",
        (
            result.phase_counts.estimation,
            result.phase_counts.exploitation,
            result.phase_counts.exploration,
        ),
    )?;
    Ok(dict.unbind())
}

#[pymodule]
fn lipband_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ArmEmbedding>()?;
    m.add_class::<BanditInstance>()?;
    m.add_function(wrap_pyfunction!(bernoulli_kl, m)?)?;
    m.add_function(wrap_pyfunction!(tightest_lipschitz, m)?)?;
    m.add_function(wrap_pyfunction!(is_member, m)?)?;
    m.add_function(wrap_pyfunction!(confusing_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(scale_free_bound, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_delta, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_estimator, m)?)?;
    m.add_function(wrap_pyfunction!(running_max, m)?)?;
    m.add_function(wrap_pyfunction!(required_tau, m)?)?;
    m.add_function(wrap_pyfunction!(required_episodes, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_bound, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    Ok(())
}
