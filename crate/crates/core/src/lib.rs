//! Multiple penalized principal curves: fitting a collection of polylines and
//! isolated points to weighted point clouds by minimizing a fidelity,
//! length and component-count energy.

pub mod admm;
pub mod driver;
pub mod energy;
pub mod error;
pub mod io;
mod geom;
pub mod kmeans;
pub mod model;
pub mod oracle;
mod par;
pub mod projection;
pub mod resolution;
pub mod topology;

pub use driver::{fit, init_singletons};
pub use error::{MppcError, Result};
pub use model::{
    normalize, validate, EnergyBreakdown, EventKind, FitReport, MultiCurve, Params, PointCloud, Polyline,
    TopologyEvent,
};
