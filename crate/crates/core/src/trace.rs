use serde::{Deserialize, Serialize};

/// One iteration of an iterative solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Algorithm-specific step measure (relative change, step length, penalty weight).
    pub step: f64,
    /// Constraint residual or violation at this iterate.
    pub residual: f64,
}

/// Per-iteration history of an optimizer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizerTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, objective: f64, step: f64, residual: f64) {
        let iteration = self.records.len();
        self.records.push(TraceRecord {
            iteration,
            objective,
            step,
            residual,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// True when no objective drops by more than `rel_slack` of its predecessor.
    pub fn is_non_decreasing(&self, rel_slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective >= w[0].objective - rel_slack * w[0].objective.abs())
    }

    /// `iteration,objective,step,residual` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,step,residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                r.iteration, r.objective, r.step, r.residual
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_with_slack() {
        let mut t = OptimizerTrace::new();
        t.push(1.0, 0.0, 0.0);
        t.push(2.0, 0.0, 0.0);
        t.push(2.0 - 1e-14, 0.0, 0.0);
        assert!(t.is_non_decreasing(1e-12));
        t.push(1.5, 0.0, 0.0);
        assert!(!t.is_non_decreasing(1e-12));
        assert_eq!(t.last().unwrap().iteration, 3);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = OptimizerTrace::new();
        t.push(1.0, 0.5, 0.0);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("iteration,"));
    }
}
