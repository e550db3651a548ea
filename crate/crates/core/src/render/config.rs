use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pt::{path_trace_guided, path_trace_reference, PtSettings};
use super::{ImageBuffer, DEFAULT_TILE};
use crate::baking::{self, BakeConfig, TrainSettings, VoxelNetGrid};
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::guiding::{QGrid, DEFAULT_COSINE_MIX, DEFAULT_DIRECTION_RESOLUTION, DEFAULT_GRID_RESOLUTION};
use crate::nee::{self, LightSelectionNet, OnlineConfig, Selector, SelectorName, TablePolicy, TdTable};
use crate::nn::LearningRate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    PtReference,
    NeeUniform,
    NeeTabular,
    NeeNet,
    Baked,
    GuidedPt,
}

impl Integrator {
    pub const ALL: [Integrator; 6] = [
        Integrator::PtReference,
        Integrator::NeeUniform,
        Integrator::NeeTabular,
        Integrator::NeeNet,
        Integrator::Baked,
        Integrator::GuidedPt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Integrator::PtReference => "pt-reference",
            Integrator::NeeUniform => "nee-uniform",
            Integrator::NeeTabular => "nee-tabular",
            Integrator::NeeNet => "nee-net",
            Integrator::Baked => "baked",
            Integrator::GuidedPt => "guided-pt",
        }
    }

    /// Integrator implied by a light-selection policy.
    pub fn for_selector(s: SelectorName) -> Integrator {
        match s {
            SelectorName::Uniform => Integrator::NeeUniform,
            SelectorName::Net => Integrator::NeeNet,
            SelectorName::TabularTd | SelectorName::EpsGreedy | SelectorName::SoftmaxT => Integrator::NeeTabular,
        }
    }
}

impl FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Integrator::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown integrator '{s}'")))
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings of the learning integrators.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSettings {
    pub selector: SelectorName,
    pub epsilon: f64,
    pub temperature: f64,
    /// Outer iterations of the online network loop.
    pub iterations: usize,
    /// Minibatches per iteration.
    pub batches: usize,
    pub batch_size: usize,
    pub rate: f64,
    pub epochs: usize,
    pub td_resolution: usize,
    pub guide_mix: f64,
    pub guide_resolution: usize,
    pub bake_resolution: usize,
    pub bake_points: usize,
    pub bake_rays: usize,
    pub bake_epochs: usize,
    pub bake_rate: f64,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings {
            selector: SelectorName::TabularTd,
            epsilon: 0.1,
            temperature: 2.0,
            iterations: 16,
            batches: 64,
            batch_size: 64,
            rate: OnlineConfig::DEFAULT_RATE,
            epochs: 10,
            td_resolution: 16,
            guide_mix: DEFAULT_COSINE_MIX,
            guide_resolution: DEFAULT_GRID_RESOLUTION,
            bake_resolution: 3,
            bake_points: 10_000,
            bake_rays: 512,
            bake_epochs: 500,
            bake_rate: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scene: String,
    pub integrator: Integrator,
    pub width: usize,
    pub height: usize,
    pub spp: usize,
    pub max_path_length: usize,
    pub seed: u64,
    pub tile: usize,
    pub learner: LearnerSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scene: "cornell-diffuse".into(),
            integrator: Integrator::PtReference,
            width: 256,
            height: 256,
            spp: 16,
            max_path_length: 6,
            seed: 0,
            tile: DEFAULT_TILE,
            learner: LearnerSettings::default(),
        }
    }
}

/// Image plus whatever the integrator learned.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub image: ImageBuffer,
    /// Final training loss of learning integrators.
    pub mean_loss: Option<f64>,
    pub net: Option<LightSelectionNet>,
    pub qgrid: Option<QGrid>,
    pub baked: Option<VoxelNetGrid>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.pt_settings().validate()?;
        let l = &self.learner;
        if !(0.0..=1.0).contains(&l.epsilon) {
            return Err(Error::usage("epsilon must lie in [0,1]"));
        }
        if !(l.temperature > 0.0) {
            return Err(Error::usage("temperature must be positive"));
        }
        if !(l.rate > 0.0 && l.bake_rate > 0.0) {
            return Err(Error::usage("learning rate must be positive"));
        }
        if l.batches == 0 || l.iterations == 0 || l.batch_size == 0 {
            return Err(Error::usage("iteration and batch counts must be positive"));
        }
        Ok(())
    }

    pub fn pt_settings(&self) -> PtSettings {
        PtSettings {
            width: self.width,
            height: self.height,
            spp: self.spp,
            max_path_length: self.max_path_length,
            seed: self.seed,
            tile: self.tile,
        }
    }

    pub fn online_config(&self) -> OnlineConfig {
        let l = &self.learner;
        OnlineConfig {
            width: self.width,
            height: self.height,
            iterations: l.iterations,
            batches: l.batches,
            batch_size: l.batch_size,
            rate: LearningRate::with_base(l.rate),
            epochs: l.epochs,
            hidden: LightSelectionNet::DEFAULT_HIDDEN.to_vec(),
            seed: self.seed,
        }
    }

    pub fn table_policy(&self) -> TablePolicy {
        match self.learner.selector {
            SelectorName::EpsGreedy => TablePolicy::EpsilonGreedy(self.learner.epsilon),
            SelectorName::SoftmaxT => TablePolicy::SoftmaxTemperature(self.learner.temperature),
            _ => TablePolicy::Proportional,
        }
    }

    /// Renders `scene` with the configured integrator.
    pub fn run(&self, scene: &Scene) -> Result<RunOutput> {
        self.validate()?;
        let pt = self.pt_settings();
        let mut out = RunOutput {
            image: ImageBuffer::new(self.width, self.height)?,
            mean_loss: None,
            net: None,
            qgrid: None,
            baked: None,
        };
        match self.integrator {
            Integrator::PtReference => out.image = path_trace_reference(scene, &pt)?,
            Integrator::NeeUniform => out.image = nee::render_direct(scene, &pt, &Selector::Uniform)?,
            Integrator::NeeTabular => {
                let mut t = TdTable::new(scene.bounds(), self.learner.td_resolution, scene.light_count().max(1))?;
                let (img, trace) = nee::render_direct_tabular(scene, &pt, &mut t, self.table_policy())?;
                out.image = img;
                out.mean_loss = trace.last().map(|p| p.mean_td_error);
            }
            Integrator::NeeNet => {
                let online = nee::render_with_online_learning(scene, &self.online_config(), None)?;
                out.image = nee::render_direct(scene, &pt, &Selector::Net(&online.net))?;
                out.mean_loss = online.trace.last().map(|m| m.mean_loss);
                out.net = Some(online.net);
            }
            Integrator::GuidedPt => {
                let mut g = QGrid::new(scene.bounds(), self.learner.guide_resolution, DEFAULT_DIRECTION_RESOLUTION)?;
                out.image = path_trace_guided(scene, &pt, &mut g, self.learner.guide_mix)?.0;
                out.qgrid = Some(g);
            }
            Integrator::Baked => {
                let l = &self.learner;
                let data = baking::generate_training_data(
                    scene,
                    &BakeConfig {
                        points: l.bake_points,
                        rays: l.bake_rays,
                        max_path_length: self.max_path_length,
                        seed: self.seed,
                    },
                )?;
                let mut grid = VoxelNetGrid::new(scene.bounds(), l.bake_resolution, self.seed)?;
                grid.assign(&data);
                let reports = baking::train_voxel_networks(
                    &mut grid,
                    &TrainSettings {
                        epochs: l.bake_epochs,
                        rate: LearningRate::with_base(l.bake_rate),
                        seed: self.seed,
                        ..TrainSettings::default()
                    },
                )?;
                out.mean_loss = mean_final_loss(&reports);
                out.image = baking::render_baked(scene, &grid, &pt)?;
                out.baked = Some(grid);
            }
        }
        Ok(out)
    }
}

fn mean_final_loss(reports: &[baking::VoxelReport]) -> Option<f64> {
    let v: Vec<f64> = reports.iter().filter_map(|r| r.loss_trace.last().copied()).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
