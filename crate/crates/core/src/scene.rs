//! The self-contained scene document: everything a viewer or a headless
//! replay needs to run one trial.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::navigation::{octant_colors, ConfigError, DisplayMode, NavConfig, NavStyle, Rgb, SceneGeometry};
use crate::object_model::{
    generate_lattice, place_defects, rods_for_target, DefectRegion, LatticePattern, LatticeSpec,
    ObjectError, RodMarker, TriangleMesh,
};
use crate::study::{Measure, TrialSetup};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unsupported schema version {found}, expected {SCHEMA_VERSION}")]
    Schema { found: u64 },
    #[error("malformed scene: {0}")]
    Malformed(String),
    #[error("target defect {0} is not in the scene")]
    UnknownTarget(u32),
    #[error("defect {0} does not fit its cell at the navigation depth")]
    BadDefect(u32),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialInfo {
    pub measure: Measure,
    pub question_seed: u64,
    /// Ask the object-level question after the reveal.
    pub ask_q2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub primo_schema: u32,
    pub seed: u64,
    /// How `mesh` was generated; absent for imported meshes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    pub mesh: TriangleMesh,
    pub defects: Vec<DefectRegion>,
    /// Id of the defect this trial is about.
    pub target: u32,
    pub rods: [RodMarker; 3],
    pub nav: NavConfig,
    pub palette: [Rgb; 8],
    pub trial: TrialInfo,
}

/// Inputs for [`SceneDocument::generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateParams {
    pub seed: u64,
    pub depth: u32,
    pub defects: usize,
    pub lattice_cells: u32,
    pub strut_thickness: f64,
    pub pattern: LatticePattern,
    pub style: NavStyle,
    pub display: DisplayMode,
    /// Index into the placed defects.
    pub target_index: usize,
    pub measure: Measure,
}

impl Default for GenerateParams {
    fn default() -> Self {
        let lattice = LatticeSpec::default();
        Self {
            seed: 0,
            depth: NavConfig::DEFAULT_MAX_DEPTH,
            defects: 4,
            lattice_cells: lattice.cells_per_axis,
            strut_thickness: lattice.strut_thickness,
            pattern: lattice.pattern,
            style: NavStyle::Structured,
            display: DisplayMode::Selection,
            target_index: 0,
            measure: Measure::Time,
        }
    }
}

impl SceneDocument {
    pub fn generate(p: &GenerateParams) -> Result<Self, SceneError> {
        let nav = NavConfig::new(p.style, p.display).with_max_depth(p.depth);
        nav.validate()?;
        let lattice = LatticeSpec {
            cells_per_axis: p.lattice_cells,
            strut_thickness: p.strut_thickness,
            pattern: p.pattern,
        };
        let mesh = generate_lattice(&lattice)?;
        let defects = place_defects(p.seed, p.depth, p.defects)?;
        let target = defects
            .get(p.target_index)
            .ok_or(SceneError::UnknownTarget(p.target_index as u32 + 1))?;
        Ok(Self {
            primo_schema: SCHEMA_VERSION,
            seed: p.seed,
            lattice: Some(lattice),
            target: target.id,
            rods: rods_for_target(target.center),
            mesh,
            nav,
            palette: octant_colors(),
            trial: TrialInfo {
                measure: p.measure,
                question_seed: p.seed,
                ask_q2: false,
            },
            defects,
        })
    }

    /// Parses a scene, checking the schema version before anything else.
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
        match value.get("primo_schema").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(found) => return Err(SceneError::Schema { found }),
            None => return Err(SceneError::Malformed("missing primo_schema".into())),
        }
        let doc: Self = serde_json::from_value(value).map_err(|e| SceneError::Malformed(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenes serialize")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.nav.validate()?;
        self.target_defect()?;
        for d in &self.defects {
            if d.cell_path.depth() != self.nav.max_depth as usize || !d.is_contained() {
                return Err(SceneError::BadDefect(d.id));
            }
        }
        Ok(())
    }

    pub fn target_defect(&self) -> Result<&DefectRegion, SceneError> {
        self.defects
            .iter()
            .find(|d| d.id == self.target)
            .ok_or(SceneError::UnknownTarget(self.target))
    }

    pub fn trial_setup(&self) -> Result<TrialSetup, SceneError> {
        Ok(TrialSetup {
            target: self.target_defect()?.clone(),
            scene: Arc::new(SceneGeometry {
                object: self.mesh.clone(),
                defects: self.defects.clone(),
            }),
            config: self.nav,
            measure: self.trial.measure,
            question_seed: self.trial.question_seed,
            ask_q2: self.trial.ask_q2,
        })
    }
}
