use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result};

/// Points with optional per-point part labels (`-1` = background).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub labels: Option<Vec<i32>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            labels: None,
        }
    }

    pub fn with_labels(points: Vec<Vec3>, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::InvalidValue(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l < -1) {
            return Err(Error::InvalidValue(format!("label {l} below -1")));
        }
        Ok(Self {
            points,
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points carrying `label`, unlabeled.
    pub fn select_label(&self, label: i32) -> PointCloud {
        let points = match &self.labels {
            Some(labels) => self
                .points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == label)
                .map(|(p, _)| *p)
                .collect(),
            None => Vec::new(),
        };
        PointCloud::new(points)
    }

    /// Largest label present, or `None` for unlabeled/background-only clouds.
    pub fn max_label(&self) -> Option<i32> {
        self.labels.as_ref()?.iter().copied().filter(|&l| l >= 0).max()
    }
}
