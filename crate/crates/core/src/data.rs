//! Observation containers: raw samples and interval-frequency (grouped) data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw observations, kept in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Builds a sample from arbitrary-order values. Non-finite values are
    /// rejected; an empty vector is allowed here and rejected by estimators.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample contains non-finite value {bad}"
            )));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `X_(n) - X_(1)`.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn negated(&self) -> Self {
        // negation reverses order, no re-sort needed
        Self {
            values: self.values.iter().rev().map(|x| -x).collect(),
        }
    }

    /// Number of distinct values.
    pub fn distinct(&self) -> usize {
        let mut count = 0;
        let mut last = None;
        for &v in &self.values {
            if last != Some(v) {
                count += 1;
                last = Some(v);
            }
        }
        count
    }

    /// Estimator entry check: more than two observations, not all equal.
    pub fn require_estimable(&self) -> Result<()> {
        if self.n() <= 2 {
            return Err(Error::TooFewObservations { n: self.n() });
        }
        if self.distinct() < 2 {
            return Err(Error::DegenerateSample(
                "all observations are equal".to_string(),
            ));
        }
        Ok(())
    }

    /// Copy with repeated values pulled apart: the k-th duplicate within a run
    /// of equal values is raised by `k * fraction * spread`. Returns the copy
    /// and the number of adjusted observations.
    pub fn break_ties(&self, fraction: f64) -> (Self, usize) {
        let step = fraction * self.spread();
        let mut out = self.values.clone();
        let mut adjusted = 0;
        let mut i = 0;
        while i < out.len() {
            let mut j = i + 1;
            while j < out.len() && self.values[j] == self.values[i] {
                out[j] = self.values[i] + (j - i) as f64 * step;
                adjusted += 1;
                j += 1;
            }
            i = j;
        }
        out.sort_by(f64::total_cmp);
        (Self { values: out }, adjusted)
    }
}

/// One class of grouped data: observations counted in `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupClass {
    pub lower: f64,
    pub upper: f64,
    pub frequency: u64,
}

impl GroupClass {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Interval-frequency data with ascending, non-overlapping classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSample {
    classes: Vec<GroupClass>,
}

impl GroupedSample {
    pub fn new(classes: Vec<GroupClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidGroups("no classes".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if !(c.lower.is_finite() && c.upper.is_finite()) {
                return Err(Error::InvalidGroups(format!("class {} has a non-finite bound", i + 1)));
            }
            if c.upper <= c.lower {
                return Err(Error::InvalidGroups(format!(
                    "class {} has zero or negative width ({}, {})",
                    i + 1,
                    c.lower,
                    c.upper
                )));
            }
        }
        for (i, pair) in classes.windows(2).enumerate() {
            if pair[1].lower < pair[0].upper {
                return Err(Error::InvalidGroups(format!(
                    "classes {} and {} overlap or are not ascending",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[GroupClass] {
        &self.classes
    }

    pub fn total(&self) -> u64 {
        self.classes.iter().map(|c| c.frequency).sum()
    }

    /// Common class width, when every class has the same width (to 1e-9
    /// relative).
    pub fn common_width(&self) -> Option<f64> {
        let w0 = self.classes[0].width();
        self.classes
            .iter()
            .all(|c| (c.width() - w0).abs() <= 1e-9 * w0)
            .then_some(w0)
    }

    /// Each class midpoint repeated `frequency` times.
    pub fn expand(&self) -> Sample {
        let values = self
            .classes
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.midpoint(), c.frequency as usize))
            .collect();
        Sample::new(values).expect("finite class bounds give finite midpoints")
    }

    /// Classes of `-X`: bounds swap and flip sign, order reverses.
    pub fn negated(&self) -> Self {
        Self {
            classes: self
                .classes
                .iter()
                .rev()
                .map(|c| GroupClass {
                    lower: -c.upper,
                    upper: -c.lower,
                    frequency: c.frequency,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sorts_and_rejects_nan() {
        let s = Sample::new(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[-1.0, 2.0, 3.0]);
        assert_eq!(s.spread(), 4.0);
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn estimable_requires_three_distinct_enough() {
        let two = Sample::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(two.require_estimable(), Err(Error::TooFewObservations { n: 2 })));
        let flat = Sample::new(vec![1.0; 5]).unwrap();
        assert!(matches!(flat.require_estimable(), Err(Error::DegenerateSample(_))));
        let ok = Sample::new(vec![1.0, 1.0, 2.0]).unwrap();
        assert!(ok.require_estimable().is_ok());
    }

    #[test]
    fn break_ties_separates_runs() {
        let s = Sample::new(vec![0.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let (t, adjusted) = s.break_ties(1e-9);
        assert_eq!(adjusted, 2);
        assert_eq!(t.distinct(), 5);
        assert_eq!(t.min(), 0.0);
        assert_eq!(t.values()[1], 1.0);
        assert!((t.values()[3] - (1.0 + 4e-9)).abs() < 1e-15);
    }

    #[test]
    fn negation_keeps_order() {
        let s = Sample::new(vec![1.0, 5.0, 2.0]).unwrap();
        assert_eq!(s.negated().values(), &[-5.0, -2.0, -1.0]);
    }

    #[test]
    fn single_class_expands_to_midpoints() {
        let g = GroupedSample::new(vec![GroupClass { lower: 0.0, upper: 2.0, frequency: 3 }]).unwrap();
        assert_eq!(g.expand().values(), &[1.0, 1.0, 1.0]);
        assert_eq!(g.total(), 3);
    }

    #[test]
    fn grouped_validation() {
        let overlap = vec![
            GroupClass { lower: 0.0, upper: 2.0, frequency: 1 },
            GroupClass { lower: 1.0, upper: 3.0, frequency: 1 },
        ];
        assert!(GroupedSample::new(overlap).is_err());
        let zero = vec![GroupClass { lower: 1.0, upper: 1.0, frequency: 1 }];
        assert!(GroupedSample::new(zero).is_err());
    }

    #[test]
    fn grouped_negation_mirrors_classes() {
        let g = GroupedSample::new(vec![
            GroupClass { lower: 0.0, upper: 1.0, frequency: 2 },
            GroupClass { lower: 1.0, upper: 3.0, frequency: 5 },
        ])
        .unwrap();
        let n = g.negated();
        assert_eq!(n.classes()[0], GroupClass { lower: -3.0, upper: -1.0, frequency: 5 });
        assert_eq!(n.expand().values(), g.expand().negated().values());
        assert_eq!(g.common_width(), None);
    }
}
