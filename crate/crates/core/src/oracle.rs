//! Example oracles with deferred label reveal and exact label accounting.

use crate::error::{Error, Result};
use crate::geometry::UnitVector;
use crate::regression::LabeledSample;

/// A stream of labeled examples. Labels are fixed at draw time but only
/// counted once revealed through [`Oracle`].
pub trait ExampleSource: Send {
    fn dimension(&self) -> usize;
    /// `None` once the source is exhausted.
    fn next_example(&mut self) -> Option<(UnitVector, i8)>;
}

/// A drawn point whose label has not been looked at.
#[derive(Debug, Clone)]
pub struct Unlabeled {
    point: UnitVector,
    label: i8,
}

impl Unlabeled {
    pub fn point(&self) -> &UnitVector {
        &self.point
    }
}

/// Counts draws and label reveals over an [`ExampleSource`].
#[derive(Debug)]
pub struct Oracle<S> {
    source: S,
    draws: u64,
    labels: u64,
}

impl<S: ExampleSource> Oracle<S> {
    pub fn new(source: S) -> Self {
        Self {
            source,
            draws: 0,
            labels: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.source.dimension()
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn labels_revealed(&self) -> u64 {
        self.labels
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn draw_unlabeled(&mut self) -> Option<Unlabeled> {
        let (point, label) = self.source.next_example()?;
        self.draws += 1;
        Some(Unlabeled { point, label })
    }

    pub fn reveal(&mut self, u: Unlabeled) -> (UnitVector, i8) {
        self.labels += 1;
        (u.point, u.label)
    }

    /// `n` labeled examples with no filtering.
    pub fn labeled(&mut self, n: usize) -> Result<LabeledSample> {
        self.filtered(n, u64::MAX, |_| true)
    }

    /// Draws until `n` points satisfy `keep` or `budget` points were drawn,
    /// revealing labels only for kept points.
    pub fn filtered(
        &mut self,
        n: usize,
        budget: u64,
        keep: impl FnMut(&[f64]) -> bool,
    ) -> Result<LabeledSample> {
        let start = self.draws;
        let sample = self.collect(n, budget, keep)?;
        if sample.len() < n {
            return Err(Error::Budget {
                kept: sample.len(),
                wanted: n,
                drawn: self.draws - start,
                budget,
            });
        }
        Ok(sample)
    }

    /// Like [`Self::filtered`] but returns whatever was kept when the budget
    /// or the source runs out.
    pub fn collect(
        &mut self,
        n: usize,
        budget: u64,
        mut keep: impl FnMut(&[f64]) -> bool,
    ) -> Result<LabeledSample> {
        let start = self.draws;
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        while points.len() < n && self.draws - start < budget {
            let Some(u) = self.draw_unlabeled() else {
                break;
            };
            if keep(u.point.as_slice()) {
                let (p, y) = self.reveal(u);
                points.push(p);
                labels.push(y);
            }
        }
        LabeledSample::new(points, labels)
    }
}

/// Replays a fixed sample once, in order.
#[derive(Debug, Clone)]
pub struct SampleSource {
    sample: LabeledSample,
    next: usize,
}

impl SampleSource {
    pub fn new(sample: LabeledSample) -> Result<Self> {
        if sample.is_empty() {
            return Err(crate::error::invalid("sample source needs at least one example"));
        }
        Ok(Self { sample, next: 0 })
    }
}

impl ExampleSource for SampleSource {
    fn dimension(&self) -> usize {
        self.sample.dimension().unwrap_or(0)
    }

    fn next_example(&mut self) -> Option<(UnitVector, i8)> {
        let i = self.next;
        if i >= self.sample.len() {
            return None;
        }
        self.next += 1;
        Some((self.sample.points()[i].clone(), self.sample.labels()[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform_sphere;

    fn source(n: usize) -> SampleSource {
        let pts = sample_uniform_sphere(3, n, 5).unwrap();
        let labels = pts.iter().map(|p| if p.as_slice()[0] > 0.0 { 1 } else { -1 }).collect();
        SampleSource::new(LabeledSample::new(pts, labels).unwrap()).unwrap()
    }

    #[test]
    fn accounting_is_exact() {
        let mut o = Oracle::new(source(100));
        let s = o.filtered(10, 100, |x| x[0] > 0.0).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.labels().iter().all(|&y| y == 1));
        assert_eq!(o.labels_revealed(), 10);
        assert!(o.draws() >= 10);
        let all = o.labeled(5).unwrap();
        assert_eq!(all.len(), 5);
        assert_eq!(o.labels_revealed(), 15);
    }

    #[test]
    fn budget_and_exhaustion() {
        let mut o = Oracle::new(source(50));
        match o.filtered(10, 5, |_| false) {
            Err(Error::Budget { kept: 0, wanted: 10, drawn: 5, budget: 5 }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(o.labeled(100), Err(Error::Budget { kept: 45, .. })));
        assert_eq!(o.labels_revealed(), 45);
    }
}
