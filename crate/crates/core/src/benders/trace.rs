use std::io::Write;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    #[serde(rename = "LB")]
    pub lb: f64,
    #[serde(rename = "UB")]
    pub ub: f64,
    pub n_feas_cuts: usize,
    pub n_opt_cuts: usize,
    pub n_filtered: usize,
    /// Cumulative since the start of the run.
    pub millis: f64,
    /// Cut rows in the master after this iteration.
    #[serde(skip)]
    pub mp_rows: usize,
    /// Scenario lifted into the master at the end of this iteration.
    #[serde(skip)]
    pub lifted: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BendersTrace {
    pub rows: Vec<TraceRow>,
}

impl BendersTrace {
    pub const HEADER: [&'static str; 7] = ["t", "LB", "UB", "n_feas_cuts", "n_opt_cuts", "n_filtered", "millis"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        crate::studio::write_csv(&self.rows, &Self::HEADER, out)
    }

    /// LB never decreases and UB never increases.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].lb >= w[0].lb && w[1].ub <= w[0].ub)
    }

    /// Master rows summed over iterations.
    pub fn cumulative_mp_rows(&self) -> usize {
        self.rows.iter().map(|r| r.mp_rows).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns() {
        let t = BendersTrace {
            rows: vec![TraceRow {
                t: 1,
                lb: 0.5,
                ub: f64::INFINITY,
                n_feas_cuts: 2,
                n_opt_cuts: 0,
                n_filtered: 1,
                millis: 3.0,
                mp_rows: 2,
                lifted: None,
            }],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,LB,UB,n_feas_cuts,n_opt_cuts,n_filtered,millis\n1,0.5,inf,2,0,1,3.0\n");
    }
}
