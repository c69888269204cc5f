use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which logit adjustment the loss applies.
///
/// `Ce` is plain cross-entropy, i.e. either loss with `delta = 1_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Factor tied to the classifier's class: logits `delta_c w_c^T h`.
    Cdt,
    /// Factor tied to the sample's class: logits `delta_y w_c^T h`.
    Ldt,
    Ce,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Cdt, LossKind::Ldt, LossKind::Ce];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Cdt => "cdt",
            LossKind::Ldt => "ldt",
            LossKind::Ce => "ce",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cdt" => Ok(LossKind::Cdt),
            "ldt" => Ok(LossKind::Ldt),
            "ce" => Ok(LossKind::Ce),
            other => Err(Error::Config(format!("unknown loss '{other}' (expected cdt, ldt or ce)"))),
        }
    }
}
