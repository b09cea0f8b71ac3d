use serde::{Deserialize, Serialize};

/// Log marker for a metric omitted for lack of samples.
pub const MISSING: &str = "NA";

/// One metrics log row. `None` fields are written as [`MISSING`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tick: u64,
    pub phi: Option<f64>,
    pub r_mean: Option<f64>,
    /// One entry per configured lag.
    pub t_persistence: Vec<Option<f64>>,
    pub e_efficacy: Option<f64>,
    pub gamma_mean: Option<f64>,
    pub gamma_max: Option<f64>,
    pub coherence: Option<f64>,
    pub per_agent_loss: Vec<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| format!("{x}"))
}

impl MetricsRecord {
    /// Column order: tick, phi, r_mean, t_lag<τ>..., e_efficacy, gamma_mean,
    /// gamma_max, coherence, per_agent_loss (comma separated).
    pub fn header(lags: &[usize]) -> String {
        let mut cols = vec!["tick".to_string(), "phi".into(), "r_mean".into()];
        cols.extend(lags.iter().map(|l| format!("t_lag{l}")));
        cols.extend(
            ["e_efficacy", "gamma_mean", "gamma_max", "coherence", "per_agent_loss"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join("\t")
    }

    pub fn to_row(&self) -> String {
        let mut cols = vec![self.tick.to_string(), cell(self.phi), cell(self.r_mean)];
        cols.extend(self.t_persistence.iter().map(|&t| cell(t)));
        cols.extend([self.e_efficacy, self.gamma_mean, self.gamma_max, self.coherence].map(cell));
        let losses: Vec<String> = self.per_agent_loss.iter().map(|l| format!("{l}")).collect();
        cols.push(losses.join(","));
        cols.join("\t")
    }

    /// Every present value is finite.
    pub fn is_finite(&self) -> bool {
        [
            self.phi,
            self.r_mean,
            self.e_efficacy,
            self.gamma_mean,
            self.gamma_max,
            self.coherence,
        ]
        .iter()
        .chain(&self.t_persistence)
        .flatten()
        .all(|x| x.is_finite())
            && self.per_agent_loss.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_matches_header_width() {
        let r = MetricsRecord {
            tick: 64,
            phi: Some(0.5),
            r_mean: None,
            t_persistence: vec![Some(1.0), None],
            e_efficacy: Some(0.0),
            gamma_mean: None,
            gamma_max: None,
            coherence: Some(2.0),
            per_agent_loss: vec![0.25, 0.5],
        };
        let header = MetricsRecord::header(&[1, 8]);
        assert_eq!(header.split('\t').count(), r.to_row().split('\t').count());
        assert_eq!(r.to_row(), "64\t0.5\tNA\t1\tNA\t0\tNA\tNA\t2\t0.25,0.5");
    }
}
