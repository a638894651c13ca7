//! JSON run configuration and its translation into solver parameters.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spflow_core::cones::{ConeGeometry, DistanceMode};
use spflow_core::continuation::ContinuationSchedule;
use spflow_core::flow::{FlowParams, Projection, StagnationParams};
use spflow_core::io::read_dump;
use spflow_core::minimax::{MinimaxParams, PathMode};
use spflow_core::{Bump, CoulombMode, Grid3, ModelConfig, PotentialKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "box")]
    pub grid: BoxConfig,
    pub model: ModelSection,
    #[serde(default)]
    pub cones: ConesSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub minimax: MinimaxSection,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSection {
    #[default]
    Harmonic,
    Constant(f64),
    /// Nodal values and `x . grad V` read from field dumps.
    Custom { values: PathBuf, x_dot_grad: Option<PathBuf> },
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoulombSection {
    #[default]
    Freespace,
    Dirichlet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub potential: PotentialSection,
    pub p: f64,
    /// Defaults to `p`.
    pub mu: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    /// Defaults to `(p + 6) / 2`.
    pub r: Option<f64>,
    #[serde(default)]
    pub coulomb: CoulombSection,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ConeModeSection {
    #[default]
    Surrogate,
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConesSection {
    pub eps: f64,
    pub mode: ConeModeSection,
    /// Replace `eps` by the largest candidate passing the contraction monitor.
    pub calibrate: bool,
    pub candidates: Vec<f64>,
    pub samples: usize,
}

impl Default for ConesSection {
    fn default() -> Self {
        Self { eps: 1e-3, mode: ConeModeSection::Surrogate, calibrate: false, candidates: vec![1e-3, 1e-2, 1e-1], samples: 20 }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionSection {
    None,
    Ray,
    #[default]
    Nodal,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagnationSection {
    pub beta_min: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub step_init: f64,
    pub step_shrink: f64,
    pub max_halvings: usize,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub energy_floor: f64,
    pub kappa: f64,
    pub projection: ProjectionSection,
    pub stagnation: Option<StagnationSection>,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowParams::<f64>::default();
        Self {
            step_init: d.step_init,
            step_shrink: d.step_shrink,
            max_halvings: d.max_halvings,
            max_steps: 3000,
            residual_tol: d.residual_tol,
            energy_floor: d.energy_floor,
            kappa: d.kappa,
            projection: ProjectionSection::Nodal,
            stagnation: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PathModeSection {
    Amplitude,
    Scaled,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSection {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimaxSection {
    pub lattice: usize,
    pub sweeps: usize,
    pub steps_per_sweep: usize,
    /// Amplitude for plain solves, scaled for continuation when absent.
    pub mode: Option<PathModeSection>,
    pub max_doublings: usize,
    /// Two opposite-signed bumps by default: a pair at `-0.3 L` and `0.3 L` on the x axis.
    pub seeds: Option<Vec<BumpSection>>,
    /// More than one runs the deflation loop over all sign splits of the seeds.
    pub count: usize,
    pub separation: f64,
}

impl Default for MinimaxSection {
    fn default() -> Self {
        let d = MinimaxParams::<f64>::default();
        Self {
            lattice: d.lattice,
            sweeps: d.sweeps,
            steps_per_sweep: d.steps_per_sweep,
            mode: None,
            max_doublings: d.max_doublings,
            seeds: None,
            count: 1,
            separation: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSection {
    /// Defaults to `model.lambda` when positive, else 1.
    pub lambda0: Option<f64>,
    pub shrink: f64,
    pub lambda_min: f64,
    pub polish_tol: f64,
    pub branch_jump: f64,
    pub pohozaev_tol: f64,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        let d = ContinuationSchedule::<f64>::default();
        Self {
            lambda0: None,
            shrink: d.shrink,
            lambda_min: d.lambda_min,
            polish_tol: d.polish_flow.residual_tol,
            branch_jump: d.branch_jump,
            pohozaev_tol: d.pohozaev_tol,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Relative paths are taken from the directory holding the config file.
    pub dir: PathBuf,
    pub rng_seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), rng_seed: 0 }
    }
}

/// A parsed config plus the raw bytes it came from.
pub struct Loaded {
    pub config: Config,
    pub bytes: Vec<u8>,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> anyhow::Result<Loaded> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let config: Config =
        serde_json::from_slice(&bytes).with_context(|| format!("invalid config {}", path.display()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, bytes, base_dir })
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn grid(&self) -> anyhow::Result<Grid3<f64>> {
        Ok(Grid3::new(self.config.grid.half_width, self.config.grid.n)?)
    }

    pub fn model(&self) -> anyhow::Result<ModelConfig<f64>> {
        let m = &self.config.model;
        let grid = self.grid()?;
        let potential = match &m.potential {
            PotentialSection::Harmonic => PotentialKind::Harmonic,
            PotentialSection::Constant(c) => PotentialKind::Constant(*c),
            PotentialSection::Custom { values, x_dot_grad } => {
                let read = |p: &Path| -> anyhow::Result<Vec<f64>> {
                    let path = self.resolve(p);
                    let file = std::fs::File::open(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    let f = read_dump::<f64>(std::io::BufReader::new(file))?;
                    if !f.grid().same_as(&grid) {
                        bail!("potential dump {} does not match the box", p.display());
                    }
                    Ok(f.into_values())
                };
                PotentialKind::Custom {
                    values: read(values)?,
                    x_dot_grad: x_dot_grad.as_deref().map(read).transpose()?,
                }
            }
        };
        let mut cfg = ModelConfig::new(m.p).with_potential(potential).with_lambda(m.lambda);
        if let Some(mu) = m.mu {
            cfg.mu = mu;
        }
        if let Some(r) = m.r {
            cfg = cfg.with_r(r);
        }
        cfg = cfg.with_coulomb(match m.coulomb {
            CoulombSection::Freespace => CoulombMode::FreeSpace,
            CoulombSection::Dirichlet => CoulombMode::Dirichlet,
        });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn geometry(&self, eps: f64) -> anyhow::Result<ConeGeometry<f64>> {
        let g = ConeGeometry::new(eps)?;
        Ok(match self.config.cones.mode {
            ConeModeSection::Surrogate => ConeGeometry { mode: DistanceMode::Surrogate, ..g },
            ConeModeSection::Exact => g.exact(),
        })
    }

    pub fn flow(&self) -> FlowParams<f64> {
        let f = &self.config.flow;
        FlowParams {
            step_init: f.step_init,
            step_shrink: f.step_shrink,
            max_halvings: f.max_halvings,
            max_steps: f.max_steps,
            residual_tol: f.residual_tol,
            energy_floor: f.energy_floor,
            kappa: f.kappa,
            projection: match f.projection {
                ProjectionSection::None => Projection::None,
                ProjectionSection::Ray => Projection::Ray,
                ProjectionSection::Nodal => Projection::Nodal,
            },
            stagnation: f.stagnation.map(|s| StagnationParams { beta_min: s.beta_min, alpha: s.alpha }),
        }
    }

    pub fn minimax(&self, default_mode: PathMode) -> MinimaxParams<f64> {
        let m = &self.config.minimax;
        let flow = self.flow();
        MinimaxParams {
            lattice: m.lattice,
            mode: match m.mode {
                None => default_mode,
                Some(PathModeSection::Amplitude) => PathMode::Amplitude,
                Some(PathModeSection::Scaled) => PathMode::Scaled,
            },
            sweeps: m.sweeps,
            steps_per_sweep: m.steps_per_sweep,
            sweep_flow: FlowParams { projection: Projection::None, ..flow },
            final_flow: flow,
            max_doublings: m.max_doublings,
        }
    }

    pub fn schedule(&self) -> ContinuationSchedule<f64> {
        let c = &self.config.continuation;
        let flow = self.flow();
        let lambda0 = c.lambda0.unwrap_or(if self.config.model.lambda > 0.0 { self.config.model.lambda } else { 1.0 });
        ContinuationSchedule {
            lambda0,
            shrink: c.shrink,
            lambda_min: c.lambda_min,
            stage_flow: flow,
            minimax: self.minimax(PathMode::Scaled),
            polish_flow: FlowParams { residual_tol: c.polish_tol, ..flow },
            branch_jump: c.branch_jump,
            pohozaev_tol: c.pohozaev_tol,
        }
    }

    pub fn seeds(&self) -> Vec<Bump<f64>> {
        match &self.config.minimax.seeds {
            Some(s) => s.iter().map(|b| Bump::new(b.center, b.radius, b.amplitude)).collect(),
            None => {
                let l = self.config.grid.half_width;
                vec![
                    Bump::new([-0.3 * l, 0.0, 0.0], 0.28 * l, -1.0),
                    Bump::new([0.3 * l, 0.0, 0.0], 0.28 * l, 1.0),
                ]
            }
        }
    }
}
