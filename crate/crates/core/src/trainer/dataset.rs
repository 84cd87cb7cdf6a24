use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dmn::{homogenize_linear, Topology};
use crate::error::{Error, Result};
use crate::tensor::Mat6;

pub const ORDERING: &str = "mandel 11,22,33,12,13,23 (sqrt2 on shear)";

/// One training triple: phase stiffnesses and the effective stiffness.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub c1: Mat6,
    pub c2: Mat6,
    pub effective: Mat6,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub ordering: String,
    pub units: String,
    #[serde(default)]
    pub source: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SampleRecord {
    c1: [[f64; 6]; 6],
    c2: [[f64; 6]; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    effective: Option<[[f64; 6]; 6]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DatasetFile {
    header: DatasetHeader,
    samples: Vec<SampleRecord>,
}

fn rows(m: &Mat6) -> [[f64; 6]; 6] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn matrix(r: &[[f64; 6]; 6]) -> Mat6 {
    Mat6::from_fn(|i, j| r[i][j])
}

/// Samples plus the header describing them. Pairs without an effective
/// stiffness are allowed on disk (input of ground-truth homogenization).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub pairs: Vec<(Mat6, Mat6)>,
    pub effective: Vec<Option<Mat6>>,
}

impl Dataset {
    pub fn from_pairs(pairs: Vec<(Mat6, Mat6)>, units: &str, source: &str) -> Self {
        let n = pairs.len();
        Self {
            header: DatasetHeader { ordering: ORDERING.into(), units: units.into(), source: source.into() },
            pairs,
            effective: vec![None; n],
        }
    }

    /// Labels every pair with the linear homogenization of `teacher`.
    pub fn label_with(&mut self, teacher: &Topology) -> Result<()> {
        for (i, (c1, c2)) in self.pairs.iter().enumerate() {
            self.effective[i] = Some(homogenize_linear(teacher, c1, c2)?);
        }
        Ok(())
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        self.pairs
            .iter()
            .zip(&self.effective)
            .enumerate()
            .map(|(i, ((c1, c2), eff))| {
                let effective = eff.ok_or_else(|| Error::Schema(format!("sample {i} has no effective stiffness")))?;
                Ok(Sample { c1: *c1, c2: *c2, effective })
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: DatasetFile =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        if file.header.ordering != ORDERING {
            return Err(Error::Schema(format!("unsupported component ordering {:?}", file.header.ordering)));
        }
        Ok(Self {
            header: file.header,
            pairs: file.samples.iter().map(|s| (matrix(&s.c1), matrix(&s.c2))).collect(),
            effective: file.samples.iter().map(|s| s.effective.as_ref().map(matrix)).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DatasetFile {
            header: self.header.clone(),
            samples: self
                .pairs
                .iter()
                .zip(&self.effective)
                .map(|((c1, c2), e)| SampleRecord { c1: rows(c1), c2: rows(c2), effective: e.as_ref().map(rows) })
                .collect(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }
}
