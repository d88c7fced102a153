//! Confusion matrix, per-class IoU and mean IoU.

use std::fmt::Write as _;
use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::imagecore::{ClassId, ClassTable, LabelMap};

/// VOC "void" label, skipped during scoring.
pub const DEFAULT_IGNORE_INDEX: ClassId = 255;

/// `k x k` pixel counts, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
    ignore_count: u64,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
            ignore_count: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.k + pred]
    }

    pub fn ignore_count(&self) -> u64 {
        self.ignore_count
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.ignore_count
    }

    /// Adds one image pair. Pixels whose ground truth equals `ignore` are
    /// counted in `ignore_count` only. On error the matrix is unchanged.
    pub fn accumulate(&mut self, gt: &LabelMap, pred: &LabelMap, ignore: Option<ClassId>) -> Result<()> {
        if gt.dims() != pred.dims() {
            return Err(Error::DimensionMismatch {
                expected: gt.dims(),
                found: pred.dims(),
            });
        }
        let mut local = Self::new(self.k);
        for (&g, &p) in gt.data().iter().zip(pred.data()) {
            if Some(g) == ignore {
                local.ignore_count += 1;
                continue;
            }
            for label in [g, p] {
                if label as usize >= self.k {
                    return Err(Error::LabelOutOfRange { label, k: self.k });
                }
            }
            local.counts[g as usize * self.k + p as usize] += 1;
        }
        *self += &local;
        Ok(())
    }

    /// IoU per class; `None` marks a class absent from both ground truth
    /// and prediction.
    pub fn iou_per_class(&self) -> Vec<Option<f64>> {
        (0..self.k)
            .map(|c| {
                let tp = self.get(c, c);
                let row: u64 = (0..self.k).map(|p| self.get(c, p)).sum();
                let col: u64 = (0..self.k).map(|g| self.get(g, c)).sum();
                let union = row + col - tp;
                (union > 0).then(|| tp as f64 / union as f64)
            })
            .collect()
    }

    /// Mean IoU over present classes, background included.
    pub fn mean_iou(&self) -> Result<f64> {
        let present: Vec<f64> = self.iou_per_class().into_iter().flatten().collect();
        if present.is_empty() {
            return Err(Error::NoPresentClasses);
        }
        Ok(present.iter().sum::<f64>() / present.len() as f64)
    }

    /// Plain-text report: `class<TAB>iou` per class (`absent` when the class
    /// occurs nowhere), then `mIoU<TAB>value`; values with 4 decimals.
    pub fn report(&self) -> Result<String> {
        let mean = self.mean_iou()?;
        let mut out = String::new();
        for (c, iou) in self.iou_per_class().into_iter().enumerate() {
            match iou {
                Some(v) => writeln!(out, "{c}\t{v:.4}"),
                None => writeln!(out, "{c}\tabsent"),
            }
            .unwrap();
        }
        writeln!(out, "mIoU\t{mean:.4}").unwrap();
        Ok(out)
    }
}

impl AddAssign<&ConfusionMatrix> for ConfusionMatrix {
    fn add_assign(&mut self, rhs: &ConfusionMatrix) {
        assert_eq!(self.k, rhs.k, "confusion matrices of different size");
        for (a, b) in self.counts.iter_mut().zip(&rhs.counts) {
            *a += b;
        }
        self.ignore_count += rhs.ignore_count;
    }
}

/// Convenience: matrix sized for `table`, filled from one pair.
pub fn confusion_for(table: &ClassTable, gt: &LabelMap, pred: &LabelMap, ignore: Option<ClassId>) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(table.len());
    cm.accumulate(gt, pred, ignore)?;
    Ok(cm)
}
