//! Closed time intervals in seconds.
//!
//! Two intersection tests are provided. [`TimeInterval::intersects`] treats both
//! intervals as closed and is used wherever execution windows are compared
//! against task intervals. [`TimeInterval::overlaps`] requires a shared span of
//! positive length and is used for processing conflicts, so that back-to-back
//! tasks can share an endpoint.

use serde::{Deserialize, Serialize};

/// Seconds since the reference epoch of a scenario.
pub type Seconds = f64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: Seconds,
    pub end: Seconds,
}

impl TimeInterval {
    /// Panics if `end < start` or either bound is not finite.
    pub fn new(start: Seconds, end: Seconds) -> Self {
        assert!(
            start.is_finite() && end.is_finite() && start <= end,
            "invalid interval [{start}, {end}]"
        );
        Self { start, end }
    }

    pub fn try_new(start: Seconds, end: Seconds) -> Option<Self> {
        (start.is_finite() && end.is_finite() && start <= end).then_some(Self { start, end })
    }

    pub fn duration(&self) -> Seconds {
        self.end - self.start
    }

    pub fn contains_time(&self, t: Seconds) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn contains(&self, other: &TimeInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Closed-interval intersection test: touching endpoints intersect.
    pub fn intersects(&self, other: &TimeInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Positive-length overlap test.
    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        TimeInterval::try_new(start, end)
    }

    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval::new(self.start.min(other.start), self.end.max(other.end))
    }
}
