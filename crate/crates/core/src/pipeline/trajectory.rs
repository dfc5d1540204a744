use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;

/// Metrics of one unlearning epoch-equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epoch: usize,
    pub fq: f64,
    pub log10_fq: f64,
    pub mu: f64,
    pub ci: f64,
    pub mean_tc: f64,
    pub fu: f64,
    pub self_confidence: f64,
}

impl TrajectoryPoint {
    pub fn from_report(epoch: usize, r: &MetricReport) -> Self {
        TrajectoryPoint {
            epoch,
            fq: r.fq,
            log10_fq: r.fq.log10(),
            mu: r.mu,
            ci: r.ci,
            mean_tc: r.mean_tc,
            fu: r.fu,
            self_confidence: r.self_confidence,
        }
    }
}

pub const TRAJECTORY_HEADER: &str = "epoch,FQ,log10_FQ,MU,CI,mean_TC,FU,self_confidence";

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the header and one row per point.
pub fn emit_trajectory(points: &[TrajectoryPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("trajectory needs at least one point"));
    }
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for p in points {
        let cells = [p.fq, p.log10_fq, p.mu, p.ci, p.mean_tc, p.fu, p.self_confidence].map(format_sig6);
        out.push_str(&format!("{},{}\n", p.epoch, cells.join(",")));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRAJECTORY_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "unexpected trajectory header".into() }),
    }
    lines
        .map(|(i, line)| {
            let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 8 {
                return Err(bad("expected 8 columns"));
            }
            let num = |j: usize| cells[j].parse::<f64>().map_err(|_| bad("bad number"));
            Ok(TrajectoryPoint {
                epoch: cells[0].parse().map_err(|_| bad("bad epoch"))?,
                fq: num(1)?,
                log10_fq: num(2)?,
                mu: num(3)?,
                ci: num(4)?,
                mean_tc: num(5)?,
                fu: num(6)?,
                self_confidence: num(7)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn point(epoch: usize, fq: f64) -> TrajectoryPoint {
        TrajectoryPoint { epoch, fq, log10_fq: fq.log10(), mu: 0.61234567, ci: 0.9, mean_tc: 0.75, fu: 0.5, self_confidence: 0.123456789 }
    }

    #[test]
    fn ten_points_eleven_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let pts: Vec<_> = (1..=10).map(|e| point(e, 10f64.powi(-(e as i32)))).collect();
        emit_trajectory(&pts, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse::<usize>().unwrap()).eq(1..=10));
    }

    #[test]
    fn fq_one_has_zero_log() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_trajectory(&[point(1, 1.0)], &path).unwrap();
        let row = fs::read_to_string(&path).unwrap().lines().nth(1).unwrap().to_string();
        assert_eq!(row.split(',').nth(2), Some("0"));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_sig6(0.612345678), "0.612346");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(-19.6576), "-19.6576");
        assert_eq!(format_sig6(2.2e-20), "2.2e-20");
        assert_eq!(format_sig6(123456789.0), "1.23457e8");
        assert_eq!(format_sig6(0.0001), "0.0001");
        assert!(emit_trajectory(&[], Path::new("x.csv")).is_err());
    }

    fn close6(a: f64, b: f64) -> bool {
        a == b || ((a - b) / b).abs() <= 5e-6
    }

    proptest! {
        #[test]
        fn round_trip_to_six_digits(fq in 1e-30f64..1.0, mu in 0.0f64..1.0, sc in 0.0f64..1.0) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let p = TrajectoryPoint { epoch: 3, fq, log10_fq: fq.log10(), mu, ci: 1.0 - mu, mean_tc: sc, fu: 0.25, self_confidence: sc };
            emit_trajectory(&[p], &path).unwrap();
            let back = read_trajectory(&path).unwrap();
            let q = back[0];
            prop_assert_eq!(q.epoch, 3);
            for (a, b) in [(q.fq, p.fq), (q.log10_fq, p.log10_fq), (q.mu, p.mu), (q.ci, p.ci), (q.mean_tc, p.mean_tc), (q.fu, p.fu), (q.self_confidence, p.self_confidence)] {
                prop_assert!(close6(a, b), "{} vs {}", a, b);
            }
        }
    }
}
