use std::io::Write;

use super::{Trajectory, TrajectoryRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "step,tau,shift,n_walkers,n_occupied,e_mixed";

/// One row per record; a missing mixed energy is an empty field. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_trajectory_csv(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    let mut out = String::with_capacity(64 * (traj.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &traj.records {
        out.push_str(&format!("{},{},{},{},{},", r.step, r.tau, r.shift, r.n_walkers, r.n_occupied));
        if let Some(e) = r.e_mixed {
            out.push_str(&e.to_string());
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid("trajectory CSV header mismatch"));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let bad = |what: &str| Error::invalid(format!("trajectory CSV row {}: bad {what}", k + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("field count"));
        }
        out.push(TrajectoryRecord {
            step: f[0].parse().map_err(|_| bad("step"))?,
            tau: f[1].parse().map_err(|_| bad("tau"))?,
            shift: f[2].parse().map_err(|_| bad("shift"))?,
            n_walkers: f[3].parse().map_err(|_| bad("n_walkers"))?,
            n_occupied: f[4].parse().map_err(|_| bad("n_occupied"))?,
            e_mixed: if f[5].is_empty() { None } else { Some(f[5].parse().map_err(|_| bad("e_mixed"))?) },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_missing_energy() {
        let traj = Trajectory {
            delta_tau: 0.1,
            reference: 3,
            activation_step: None,
            records: vec![
                TrajectoryRecord { step: 0, tau: 0.0, shift: -1.25, n_walkers: 10, n_occupied: 1, e_mixed: Some(-1.25) },
                TrajectoryRecord {
                    step: 1,
                    tau: 0.1,
                    shift: -1.25,
                    n_walkers: 12,
                    n_occupied: 3,
                    e_mixed: None,
                },
                TrajectoryRecord {
                    step: 2,
                    tau: 0.2,
                    shift: 1.0 / 3.0,
                    n_walkers: 9,
                    n_occupied: 2,
                    e_mixed: Some(0.1 + 0.2),
                },
            ],
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().ends_with(','));
        assert_eq!(read_trajectory_csv(&text).unwrap(), traj.records);
        assert!(read_trajectory_csv("nope\n").is_err());
    }
}
