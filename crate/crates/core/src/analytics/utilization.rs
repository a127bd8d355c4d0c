use std::collections::HashSet;

use crate::codebook::{CodebookLayout, TokenFrame};
use crate::error::{Error, Result};

/// Distinct-code bookkeeping over a token stream. Accumulators over disjoint parts of a
/// stream can be merged in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationAccumulator {
    layout: CodebookLayout,
    used: Vec<Vec<bool>>,
    global: HashSet<u128>,
    frames: u64,
}

impl UtilizationAccumulator {
    pub fn new(layout: &CodebookLayout) -> Self {
        UtilizationAccumulator {
            used: layout.pair_sizes().iter().map(|&s| vec![false; s as usize]).collect(),
            layout: layout.clone(),
            global: HashSet::new(),
            frames: 0,
        }
    }

    pub fn push_codes(&mut self, pair_codes: &[u32]) -> Result<()> {
        let global = self
            .layout
            .encode_global(pair_codes)
            .map_err(|e| Error::InvalidStream(format!("frame {}: {e}", self.frames)))?;
        for (used, &code) in self.used.iter_mut().zip(pair_codes) {
            used[code as usize] = true;
        }
        self.global.insert(global);
        self.frames += 1;
        Ok(())
    }

    pub fn push(&mut self, frame: &TokenFrame) -> Result<()> {
        self.push_codes(&frame.pair_codes)
    }

    pub fn merge(&mut self, other: &UtilizationAccumulator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::ConfigMismatch("cannot merge accumulators over different codebooks".into()));
        }
        for (mine, theirs) in self.used.iter_mut().zip(&other.used) {
            for (a, &b) in mine.iter_mut().zip(theirs) {
                *a |= b;
            }
        }
        self.global.extend(&other.global);
        self.frames += other.frames;
        Ok(())
    }

    pub fn report(&self) -> UtilizationReport {
        let per_pair_used: Vec<u64> = self.used.iter().map(|u| u.iter().filter(|&&b| b).count() as u64).collect();
        let per_pair_fraction: Vec<f64> = per_pair_used
            .iter()
            .zip(self.layout.pair_sizes())
            .map(|(&used, &size)| used as f64 / size as f64)
            .collect();
        let pair_utilization = per_pair_fraction.iter().copied().fold(f64::INFINITY, f64::min);
        UtilizationReport {
            pair_utilization: if per_pair_fraction.is_empty() { 0.0 } else { pair_utilization },
            per_pair_used,
            per_pair_fraction,
            distinct_codes: self.global.len() as u64,
            codebook_utilization: self.global.len() as f64 / self.layout.total_size() as f64,
            frames_seen: self.frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationReport {
    /// Distinct pair codes seen, per pair.
    pub per_pair_used: Vec<u64>,
    pub per_pair_fraction: Vec<f64>,
    /// Minimum of `per_pair_fraction`: 1.0 means every point of every pair grid was used.
    pub pair_utilization: f64,
    pub distinct_codes: u64,
    /// Distinct global codes divided by `|C|`.
    pub codebook_utilization: f64,
    pub frames_seen: u64,
}

impl UtilizationReport {
    pub fn key_values(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",");
        vec![
            ("frames_seen".into(), self.frames_seen.to_string()),
            ("pair_utilization".into(), format!("{:.6}", self.pair_utilization)),
            ("per_pair_fraction".into(), join(&self.per_pair_fraction)),
            ("per_pair_used".into(), self.per_pair_used.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
            ("distinct_codes".into(), self.distinct_codes.to_string()),
            ("codebook_utilization".into(), format!("{:.6}", self.codebook_utilization)),
        ]
    }
}

/// Utilization of a whole stream of pair-code frames.
pub fn measure_utilization<'a, I>(frames: I, layout: &CodebookLayout) -> Result<UtilizationReport>
where
    I: IntoIterator<Item = &'a [u32]>,
{
    let mut acc = UtilizationAccumulator::new(layout);
    for codes in frames {
        acc.push_codes(codes)?;
    }
    Ok(acc.report())
}
