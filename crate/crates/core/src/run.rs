use serde::{Deserialize, Serialize};

/// Which Gibbs sampler to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerVariant {
    /// Alternate explicit parameter draws with per-site resampling given
    /// the parameters.
    #[serde(rename = "pc")]
    PartiallyCollapsed,
    /// Parameters integrated out; sites resampled from count predictives.
    #[serde(rename = "collapsed")]
    Collapsed,
}

/// One measurement along a sampler run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
}
