use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};

/// How many images had every object fully inpainted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub total_images: usize,
    pub completely_inpainted: usize,
    /// Whole percent, rounded down.
    pub percentage: usize,
}

impl CompletenessReport {
    pub fn from_counts(total_images: usize, completely_inpainted: usize) -> Result<Self> {
        if total_images == 0 {
            return Err(MetricsError::EmptyInput);
        }
        assert!(completely_inpainted <= total_images, "more complete images than images");
        Ok(Self { total_images, completely_inpainted, percentage: 100 * completely_inpainted / total_images })
    }

    pub fn fraction(&self) -> f64 {
        self.completely_inpainted as f64 / self.total_images as f64
    }
}

pub fn completeness_report<S: AsRef<str>>(flags: &[(S, bool)]) -> Result<CompletenessReport> {
    CompletenessReport::from_counts(flags.len(), flags.iter().filter(|(_, done)| *done).count())
}
