use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cumulative discoveries over time: `(seconds, count)` points starting at time 0.
///
/// Times are strictly increasing and counts non-decreasing. The first point
/// is `(0, 0)` unless something was found at exactly time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashTimeSeries {
    points: Vec<(f64, u64)>,
}

impl CrashTimeSeries {
    pub fn new(points: Vec<(f64, u64)>) -> Result<Self> {
        match points.first() {
            Some(&(t, _)) if t == 0.0 => {}
            _ => return Err(Error::arg("time series must start at time 0")),
        }
        if points.iter().any(|(t, _)| !t.is_finite()) {
            return Err(Error::arg("time series times must be finite"));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 > w[1].1) {
            return Err(Error::arg("time series must have increasing times and non-decreasing counts"));
        }
        Ok(Self { points })
    }

    /// Series of a single trial's discovery times (one count per time; any order).
    pub fn from_event_times(times: &[f64]) -> Result<Self> {
        if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::arg("event times must be finite and >= 0"));
        }
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut points: Vec<(f64, u64)> = alloc::vec![(0.0, 0)];
        for (i, t) in sorted.iter().enumerate() {
            let count = i as u64 + 1;
            match points.last_mut() {
                Some(last) if last.0 == *t => last.1 = count,
                _ => points.push((*t, count)),
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, u64)] {
        &self.points
    }

    /// Step-function count: discoveries at or before `t`.
    pub fn count_at(&self, t: f64) -> u64 {
        let i = self.points.partition_point(|p| p.0 <= t);
        if i == 0 {
            0
        } else {
            self.points[i - 1].1
        }
    }

    /// Adds `k` discoveries at time `t`, which must not precede the last point.
    pub fn push_events(&mut self, t: f64, k: u64) -> Result<()> {
        let last = *self.points.last().expect("series is never empty");
        if !(t >= last.0 && t.is_finite()) {
            return Err(Error::arg("events must be appended in time order"));
        }
        if t == last.0 {
            self.points.last_mut().expect("non-empty").1 += k;
        } else {
            self.points.push((t, last.1 + k));
        }
        Ok(())
    }
}

/// Area under the cumulative-count curve up to `horizon`, in crash-seconds.
///
/// The curve is the piecewise-linear interpolation through the series'
/// points, held flat after the last point. A fuzzer finding one crash per
/// second for five seconds scores 12.5; five crashes arriving in the last of
/// those five seconds score 2.5.
pub fn crash_auc(series: &CrashTimeSeries, horizon: f64) -> Result<f64> {
    if !(horizon >= 0.0) {
        return Err(Error::arg(alloc::format!("horizon {horizon} must be >= 0")));
    }
    let pts = series.points();
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((t0, c0), (t1, c1)) = ((w[0].0, w[0].1 as f64), (w[1].0, w[1].1 as f64));
        if t1 <= horizon {
            area += 0.5 * (c0 + c1) * (t1 - t0);
        } else {
            if horizon > t0 {
                let ch = c0 + (c1 - c0) * (horizon - t0) / (t1 - t0);
                area += 0.5 * (c0 + ch) * (horizon - t0);
            }
            return Ok(area);
        }
    }
    let (t_last, c_last) = pts[pts.len() - 1];
    if horizon > t_last {
        area += c_last as f64 * (horizon - t_last);
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_crashes_is_zero() {
        let s = CrashTimeSeries::from_event_times(&[]).unwrap();
        assert_eq!(crash_auc(&s, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn steady_finder() {
        let s = CrashTimeSeries::from_event_times(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((crash_auc(&s, 5.0).unwrap() - 12.5).abs() < 1e-9);
    }

    #[test]
    fn clipping_at_horizon() {
        let s = CrashTimeSeries::from_event_times(&[2.0]).unwrap();
        // Ramp from (0,0) to (2,1), cut at t=1 where the curve is at 0.5.
        assert!((crash_auc(&s, 1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((crash_auc(&s, 4.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_events_collapse() {
        let s = CrashTimeSeries::from_event_times(&[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.points(), &[(0.0, 0), (1.0, 2), (3.0, 3)]);
        assert_eq!(s.count_at(0.5), 0);
        assert_eq!(s.count_at(1.0), 2);
        assert_eq!(s.count_at(99.0), 3);
    }

    #[test]
    fn invalid_series() {
        assert!(CrashTimeSeries::new(alloc::vec![(1.0, 0)]).is_err());
        assert!(CrashTimeSeries::new(alloc::vec![(0.0, 0), (1.0, 2), (1.0, 3)]).is_err());
        assert!(CrashTimeSeries::new(alloc::vec![(0.0, 2), (1.0, 1)]).is_err());
        let s = CrashTimeSeries::from_event_times(&[]).unwrap();
        assert!(crash_auc(&s, -1.0).is_err());
    }
}
