use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of the two-branch recurrent network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the first encoder convolution of each branch and of the
    /// refine module.
    pub base_channels: usize,
    /// Number of unrolled recurrent iterations per branch.
    pub iterations: usize,
    /// Encoder / decoder blocks per branch. Only 2 is supported.
    pub depth: usize,
    pub use_oc: bool,
    pub use_uc: bool,
    pub use_rm: bool,
    /// Add the current estimate to the decoder output before data
    /// consistency. When false the decoder output goes to DC directly.
    pub residual: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            base_channels: 24,
            iterations: 5,
            depth: 2,
            use_oc: true,
            use_uc: true,
            use_rm: true,
            residual: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("iterations J must be at least 1".into()));
        }
        if self.depth != 2 {
            return Err(Error::InvalidArgument(format!(
                "depth {} unsupported: each branch has exactly 2 encoder and 2 decoder blocks",
                self.depth
            )));
        }
        if self.base_channels < 1 {
            return Err(Error::InvalidArgument("base_channels must be positive".into()));
        }
        if !self.use_oc && !self.use_uc {
            return Err(Error::InvalidArgument("at least one recurrent branch must be enabled".into()));
        }
        Ok(())
    }

    /// Short tag naming the enabled modules, e.g. `oc+uc+rm`.
    pub fn variant_tag(&self) -> String {
        let mut parts = Vec::new();
        if self.use_oc {
            parts.push("oc");
        }
        if self.use_uc {
            parts.push("uc");
        }
        if self.use_rm {
            parts.push("rm");
        }
        parts.join("+")
    }
}
