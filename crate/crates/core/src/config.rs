//! Structured experiment configuration (TOML).
//!
//! Schema overview (all sections optional; each subcommand validates that
//! the sections it needs are present):
//!
//! ```toml
//! [experiment]                  # name = "...", seed = 7
//! [target]                      # eta, alpha, dim
//! [proposal]                    # kind = "independent"|"random_walk"|"mala"
//!                               # independent: gamma, beta
//!                               # mala: epsilon
//! [proposal.increment]          # random_walk: kind = "gaussian"|"uniform_ball"
//!                               # gaussian: scale; uniform_ball: radius
//! [quadrature]                  # abs_tol, rel_tol, truncation_mass,
//!                               # max_subdivisions, mc_samples, mc_seed
//! [probe]                       # radii, directions, candidates,
//!                               # proximity, separation, trend_slack,
//!                               # stall_fraction
//! [classify]                    # cells = [{family, eta, alpha, gamma,
//!                               #           beta, epsilon, label}, ...]
//! [grid]                        # lower, upper, cells
//! [chain]                       # trans = [[...], ...]
//! [rate]                        # mu = "stationary" | [w0, w1, ...]
//! [slope]                       # x0, n_values, mesh_step, event
//! [ergodicity]                  # x0, i_max, minorization_j, small_set
//! [simulate]                    # x0 = [...], steps
//! ```
//!
//! Unknown keys are rejected everywhere.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{MhKernel, QuadratureConfig};
use crate::lyapunov::{LyapunovCandidate, ProbeThresholds, RegimeParams};
use crate::model::{IncrementDensity, ProposalSpec, ProposalVariant, TargetSpec};
use crate::point::Point;
use crate::rate::{GridChain, OccupancyEvent};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentMeta>,
    pub target: Option<TargetSection>,
    pub proposal: Option<ProposalSection>,
    pub quadrature: Option<QuadratureSection>,
    pub probe: Option<ProbeSection>,
    pub classify: Option<ClassifySection>,
    pub grid: Option<GridSection>,
    pub chain: Option<ChainSection>,
    pub rate: Option<RateSection>,
    pub slope: Option<SlopeSection>,
    pub ergodicity: Option<ErgodicitySection>,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMeta {
    pub name: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub eta: f64,
    pub alpha: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalSection {
    pub kind: String,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub increment: Option<IncrementSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementSection {
    pub kind: String,
    pub scale: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub truncation_mass: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub mc_samples: Option<usize>,
    pub mc_seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub radii: Option<Vec<f64>>,
    /// Number of probe directions (d = 1 always uses the two signs).
    pub directions: Option<usize>,
    pub candidates: Vec<CandidateSection>,
    pub proximity: Option<f64>,
    pub separation: Option<f64>,
    pub trend_slack: Option<f64>,
    pub stall_fraction: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSection {
    /// "zero" | "radial_power" | "log1p_square" | "shipped"
    pub form: String,
    pub coeff: Option<f64>,
    pub power: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub cells: Vec<CellSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    /// "imh" | "mala" | "rwm"
    pub family: String,
    pub label: Option<String>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub trans: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub mu: MeasureSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Named(String),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeSection {
    pub x0: usize,
    pub n_values: Vec<usize>,
    pub mesh_step: Option<f64>,
    pub event: Vec<EventSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicitySection {
    pub x0: usize,
    pub i_max: usize,
    pub minorization_j: Option<usize>,
    pub small_set: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub x0: Vec<f64>,
    pub steps: usize,
}

fn missing(section: &str) -> Error {
    Error::InvalidParameter(format!("config is missing the [{section}] section"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config parse error: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn seed(&self) -> u64 {
        self.experiment.as_ref().and_then(|m| m.seed).unwrap_or(0)
    }

    pub fn build_target(&self) -> Result<TargetSpec<f64>> {
        let t = self.target.as_ref().ok_or_else(|| missing("target"))?;
        TargetSpec::new(t.eta, t.alpha, t.dim)
    }

    pub fn build_proposal(&self) -> Result<ProposalSpec<f64>> {
        let t = self.target.as_ref().ok_or_else(|| missing("target"))?;
        let p = self.proposal.as_ref().ok_or_else(|| missing("proposal"))?;
        match p.kind.as_str() {
            "independent" => {
                let gamma = p
                    .gamma
                    .ok_or_else(|| Error::InvalidParameter("independent proposal needs gamma".into()))?;
                let beta = p
                    .beta
                    .ok_or_else(|| Error::InvalidParameter("independent proposal needs beta".into()))?;
                ProposalSpec::independent(gamma, beta, t.dim)
            }
            "random_walk" => {
                let inc = p.increment.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("random_walk proposal needs [proposal.increment]".into())
                })?;
                let density = match inc.kind.as_str() {
                    "gaussian" => IncrementDensity::Gaussian {
                        scale: inc.scale.ok_or_else(|| {
                            Error::InvalidParameter("gaussian increment needs scale".into())
                        })?,
                    },
                    "uniform_ball" => IncrementDensity::UniformBall {
                        radius: inc.radius.ok_or_else(|| {
                            Error::InvalidParameter("uniform_ball increment needs radius".into())
                        })?,
                    },
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "unknown increment kind '{other}'"
                        )))
                    }
                };
                ProposalSpec::random_walk(density, t.dim)
            }
            "mala" => {
                let epsilon = p
                    .epsilon
                    .ok_or_else(|| Error::InvalidParameter("mala proposal needs epsilon".into()))?;
                ProposalSpec::langevin(epsilon, t.dim)
            }
            other => Err(Error::InvalidParameter(format!("unknown proposal kind '{other}'"))),
        }
    }

    pub fn build_quadrature(&self) -> Result<QuadratureConfig<f64>> {
        let mut q = QuadratureConfig::default();
        if let Some(s) = &self.quadrature {
            if let Some(v) = s.abs_tol {
                q.abs_tol = v;
            }
            if let Some(v) = s.rel_tol {
                q.rel_tol = v;
            }
            if let Some(v) = s.truncation_mass {
                q.truncation_mass = v;
            }
            if let Some(v) = s.max_subdivisions {
                q.max_subdivisions = v;
            }
            if let Some(v) = s.mc_samples {
                q.mc_samples = v;
            }
            if let Some(v) = s.mc_seed {
                q.mc_seed = v;
            }
        }
        q.validate()?;
        Ok(q)
    }

    pub fn build_kernel(&self) -> Result<MhKernel<f64>> {
        MhKernel::new(self.build_target()?, self.build_proposal()?, self.build_quadrature()?)
    }

    pub fn build_grid(&self) -> Result<GridSpec<f64>> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid"))?;
        GridSpec::new(g.lower.clone(), g.upper.clone(), g.cells.clone())
    }

    /// Builds a finite chain from `[chain]` when present, otherwise by
    /// discretizing the configured kernel over `[grid]`.
    pub fn build_chain(&self) -> Result<GridChain<f64>> {
        if let Some(c) = &self.chain {
            return GridChain::from_transitions(c.trans.clone());
        }
        let kernel = self.build_kernel()?;
        let grid = self.build_grid()?;
        crate::rate::discretize(&kernel, &grid)
    }

    pub fn probe_thresholds(&self) -> ProbeThresholds<f64> {
        let mut th = ProbeThresholds::default();
        if let Some(p) = &self.probe {
            if let Some(v) = p.proximity {
                th.proximity = v;
            }
            if let Some(v) = p.separation {
                th.separation = v;
            }
            if let Some(v) = p.trend_slack {
                th.trend_slack = v;
            }
            if let Some(v) = p.stall_fraction {
                th.stall_fraction = v;
            }
        }
        th
    }

    /// Default probe radii: {1, 2, 5, 10, 20, 50, 100} in d = 1 and
    /// {1, 2, 5, 10} in higher dimension (exp-scale integrands overflow the
    /// quadrature range beyond |x| ~ 100 for quadratic candidates).
    pub fn probe_radii(&self, dim: usize) -> Vec<f64> {
        if let Some(p) = &self.probe {
            if let Some(r) = &p.radii {
                return r.clone();
            }
        }
        if dim == 1 {
            vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
        } else {
            vec![1.0, 2.0, 5.0, 10.0]
        }
    }

    /// Probe directions: the two signs in d = 1; otherwise `count` random
    /// unit vectors drawn deterministically from the experiment seed.
    pub fn probe_directions(&self, dim: usize) -> Result<Vec<Point<f64>>> {
        if dim == 1 {
            return Ok(vec![Point::scalar(1.0), Point::scalar(-1.0)]);
        }
        let count = self.probe.as_ref().and_then(|p| p.directions).unwrap_or(8);
        if count == 0 {
            return Err(Error::InvalidParameter("need at least one probe direction".into()));
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(self.seed() ^ 0x6469_7265_6374);
        Ok((0..count).map(|_| crate::model::sample_unit_direction(dim, &mut rng)).collect())
    }

    /// Materializes the configured candidate list for the given kernel.
    pub fn build_candidates(&self, kernel: &MhKernel<f64>) -> Result<Vec<LyapunovCandidate<f64>>> {
        let p = self.probe.as_ref().ok_or_else(|| missing("probe"))?;
        if p.candidates.is_empty() {
            return Err(Error::InvalidParameter("probe needs at least one candidate".into()));
        }
        p.candidates.iter().map(|c| self.build_candidate(c, kernel)).collect()
    }

    fn build_candidate(
        &self,
        c: &CandidateSection,
        kernel: &MhKernel<f64>,
    ) -> Result<LyapunovCandidate<f64>> {
        match c.form.as_str() {
            "zero" => Ok(LyapunovCandidate::Zero),
            "log1p_square" => Ok(LyapunovCandidate::log_one_plus_square()),
            "radial_power" => {
                let coeff = c.coeff.ok_or_else(|| {
                    Error::InvalidParameter("radial_power candidate needs coeff".into())
                })?;
                let power = c.power.ok_or_else(|| {
                    Error::InvalidParameter("radial_power candidate needs power".into())
                })?;
                LyapunovCandidate::radial_power(coeff, power)
            }
            "shipped" => match kernel.proposal().variant() {
                ProposalVariant::Independent(f) => {
                    LyapunovCandidate::for_independence(f.coeff(), f.exponent())
                }
                ProposalVariant::Langevin { epsilon } => LyapunovCandidate::for_langevin(*epsilon),
                ProposalVariant::RandomWalk(_) => Err(Error::InvalidParameter(
                    "no shipped candidate exists for random-walk kernels; configure one explicitly"
                        .into(),
                )),
            },
            other => Err(Error::InvalidParameter(format!("unknown candidate form '{other}'"))),
        }
    }

    pub fn classify_cells(&self) -> Result<Vec<(String, RegimeParams<f64>)>> {
        let section = self.classify.as_ref().ok_or_else(|| missing("classify"))?;
        section
            .cells
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                let label = cell.label.clone().unwrap_or_else(|| format!("cell{i}"));
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "classify cell {i} ({}) needs {name}",
                            cell.family
                        ))
                    })
                };
                let params = match cell.family.as_str() {
                    "imh" => RegimeParams::Imh {
                        eta: need(cell.eta, "eta")?,
                        alpha: need(cell.alpha, "alpha")?,
                        gamma: need(cell.gamma, "gamma")?,
                        beta: need(cell.beta, "beta")?,
                    },
                    "mala" => RegimeParams::Mala {
                        eta: need(cell.eta, "eta")?,
                        alpha: need(cell.alpha, "alpha")?,
                        epsilon: need(cell.epsilon, "epsilon")?,
                    },
                    "rwm" => RegimeParams::Rwm,
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "classify cell {i}: unknown family '{other}'"
                        )))
                    }
                };
                Ok((label, params))
            })
            .collect()
    }

    pub fn rate_measure(&self, chain: &GridChain<f64>) -> Result<Vec<f64>> {
        let r = self.rate.as_ref().ok_or_else(|| missing("rate"))?;
        match &r.mu {
            MeasureSpec::Named(name) if name == "stationary" => chain.stationary(),
            MeasureSpec::Named(other) => {
                Err(Error::InvalidParameter(format!("unknown measure name '{other}'")))
            }
            MeasureSpec::Vector(v) => Ok(v.clone()),
        }
    }

    pub fn slope_event(&self, n_states: usize) -> Result<(OccupancyEvent<f64>, &SlopeSection)> {
        let s = self.slope.as_ref().ok_or_else(|| missing("slope"))?;
        for (i, c) in s.event.iter().enumerate() {
            if c.coeffs.len() != n_states {
                return Err(Error::InvalidParameter(format!(
                    "slope event constraint {i} has {} coefficients for {n_states} states",
                    c.coeffs.len()
                )));
            }
        }
        let event =
            OccupancyEvent::new(s.event.iter().map(|c| (c.coeffs.clone(), c.bound)).collect());
        Ok((event, s))
    }
}
