//! Versioned JSON documents holding a fitted configuration and its report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MppcError, Result};
use crate::model::{EnergyBreakdown, FitReport, MultiCurve, Params, Polyline, TopologyEvent};

pub const FORMAT: &str = "mppc-result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub vertices: Vec<Vec<f64>>,
    pub singleton: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub format: String,
    pub params: Params,
    pub energy: EnergyBreakdown,
    pub components: Vec<Component>,
    pub history: Vec<f64>,
    pub refinement_iterations: Vec<usize>,
    pub events: Vec<TopologyEvent>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl FitResult {
    pub fn new(curves: &MultiCurve, report: &FitReport, params: &Params) -> Self {
        let components = curves
            .components()
            .iter()
            .map(|p| Component {
                vertices: (0..p.len()).map(|j| p.vertex(j).to_vec()).collect(),
                singleton: p.is_singleton(),
            })
            .collect();
        Self {
            format: FORMAT.to_owned(),
            params: params.clone(),
            energy: report.energy,
            components,
            history: report.history.clone(),
            refinement_iterations: report.refinement_iterations.clone(),
            events: report.events.clone(),
            converged: report.converged,
            iterations: report.iterations,
            wall_time_s: report.wall_time_s,
        }
    }

    pub fn curves(&self) -> Result<MultiCurve> {
        let dim = self
            .components
            .first()
            .and_then(|c| c.vertices.first())
            .map(Vec::len)
            .ok_or_else(|| MppcError::Schema("no components".into()))?;
        let mut comps = Vec::with_capacity(self.components.len());
        for (c, comp) in self.components.iter().enumerate() {
            if comp.vertices.iter().any(|v| v.len() != dim) {
                return Err(MppcError::Schema(format!("component {c}: vertex dimension differs from {dim}")));
            }
            if comp.singleton != (comp.vertices.len() == 1) {
                return Err(MppcError::Schema(format!("component {c}: singleton flag disagrees with vertex count")));
            }
            let p = Polyline::new(dim, comp.vertices.concat()).map_err(|e| MppcError::Schema(format!("component {c}: {e}")))?;
            comps.push(p);
        }
        MultiCurve::new(comps).map_err(|e| MppcError::Schema(e.to_string()))
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            energy: self.energy,
            iterations: self.iterations,
            history: self.history.clone(),
            refinement_iterations: self.refinement_iterations.clone(),
            events: self.events.clone(),
            converged: self.converged,
            wall_time_s: self.wall_time_s,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| MppcError::Schema(e.to_string()))?;
        if doc.format != FORMAT {
            return Err(MppcError::Schema(format!("unsupported format `{}`", doc.format)));
        }
        doc.curves()?;
        Ok(doc)
    }
}

pub fn save_result(curves: &MultiCurve, report: &FitReport, params: &Params, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, FitResult::new(curves, report, params).to_json())?;
    Ok(())
}

pub fn load_result(path: impl AsRef<Path>) -> Result<(MultiCurve, FitReport, Params)> {
    let doc = FitResult::from_json(&std::fs::read_to_string(path)?)?;
    Ok((doc.curves()?, doc.report(), doc.params))
}
