//! CSV outputs. Every file opens with a `# jtr <name> schema v<N>` line;
//! numbers use `%.9g`.

use std::io::{self, Write};

use jtr_core::models::Registration;

use super::gfmt::g9;
use crate::simkit::bench::TimingSample;
use crate::simkit::driver::{Algo, EpochRecord};
use crate::simkit::metrics::ErrorTable;
use crate::simkit::scenario::Truth;

pub const SCHEMA_VERSION: u32 = 1;

pub const TRACKS_HEADER: &str =
    "algo,t,id,truth_id,xi,v_xi,eta,v_eta,xi_true,v_xi_true,eta_true,v_eta_true";
pub const REGISTRATION_HEADER: &str =
    "algo,t,sensor,xi0,eta0,psi0_deg,xi0_true,eta0_true,psi0_deg_true,innovation,reset";
pub const TIMING_HEADER: &str = "algo,n,trial,seconds";
pub const TRACK_COUNT_HEADER: &str = "algo,t,tracks";
pub const METRICS_HEADER: &str = "algo,trials,xi,v_xi,eta,v_eta,sensor,xi0,eta0,psi0_deg";

pub fn write_preamble(w: &mut impl Write, name: &str, header: &str) -> io::Result<()> {
    writeln!(w, "# jtr {name} schema v{SCHEMA_VERSION}")?;
    writeln!(w, "{header}")
}

/// Track rows; the truth columns stay empty without a matching live target.
pub fn write_tracks(w: &mut impl Write, algo: Algo, records: &[EpochRecord], truth: Option<&Truth>) -> io::Result<()> {
    for (k, rec) in records.iter().enumerate() {
        for tr in &rec.tracks {
            let est = tr.state.to_array();
            let x_true = tr.truth_id.and_then(|i| truth?.states.get(k)?.get(i).copied().flatten());
            write!(w, "{algo},{},{},", g9(rec.t), tr.id)?;
            if let Some(i) = tr.truth_id {
                write!(w, "{i}")?;
            }
            for v in est {
                write!(w, ",{}", g9(v))?;
            }
            match x_true {
                Some(x) => {
                    for v in x.to_array() {
                        write!(w, ",{}", g9(v))?;
                    }
                }
                None => write!(w, ",,,,")?,
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// One row per (epoch, sensor). `truth_at` gives the true registrations in
/// force at a time; the innovation column is the epoch's `‖e‖² / m`.
pub fn write_registration(
    w: &mut impl Write,
    algo: Algo,
    records: &[EpochRecord],
    truth_at: impl Fn(f64) -> Vec<Registration>,
) -> io::Result<()> {
    for rec in records {
        let truth = truth_at(rec.t);
        for (s, a) in rec.registration.iter().enumerate() {
            write!(w, "{algo},{},{s},{},{},{}", g9(rec.t), g9(a.xi0), g9(a.eta0), g9(a.psi0.to_degrees()))?;
            match truth.get(s) {
                Some(t) => write!(w, ",{},{},{}", g9(t.xi0), g9(t.eta0), g9(t.psi0.to_degrees()))?,
                None => write!(w, ",,,")?,
            }
            writeln!(w, ",{},{}", g9(rec.innovation.per_dof()), u8::from(rec.reset))?;
        }
    }
    Ok(())
}

pub fn write_timing(w: &mut impl Write, samples: &[TimingSample]) -> io::Result<()> {
    for s in samples {
        writeln!(w, "{},{},{},{}", s.algo, s.n, s.trial, g9(s.seconds))?;
    }
    Ok(())
}

pub fn write_track_count(w: &mut impl Write, algo: Algo, records: &[EpochRecord]) -> io::Result<()> {
    for rec in records {
        writeln!(w, "{algo},{},{}", g9(rec.t), rec.tracks.len())?;
    }
    Ok(())
}

/// One row per sensor; the track columns repeat on each.
pub fn write_metrics(w: &mut impl Write, algo: Algo, trials: usize, table: &ErrorTable) -> io::Result<()> {
    for (s, reg) in table.registration.iter().enumerate() {
        write!(w, "{algo},{trials}")?;
        for v in table.track {
            write!(w, ",{}", g9(v))?;
        }
        writeln!(w, ",{s},{},{},{}", g9(reg[0]), g9(reg[1]), g9(reg[2].to_degrees()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::driver::TrackRecord;
    use jtr_core::models::TrackState;
    use jtr_core::Innovation;

    fn record() -> EpochRecord {
        EpochRecord {
            t: 0.1,
            tracks: vec![TrackRecord { id: 4, state: TrackState::new(1.0, 0.5, -2.0, 0.0), truth_id: None }],
            registration: vec![Registration::from_degrees(2.0, 0.6, 10.0)],
            innovation: Innovation { norm_sq: 3.0, dims: 6 },
            reset: true,
        }
    }

    #[test]
    fn preamble_is_versioned() {
        let mut out = Vec::new();
        write_preamble(&mut out, "tracks.csv", TRACKS_HEADER).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("# jtr tracks.csv schema v1\nalgo,t,id,"));
    }

    #[test]
    fn track_row_without_truth_leaves_blanks() {
        let mut out = Vec::new();
        write_tracks(&mut out, Algo::Fmap, &[record()], None).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s, "fmap,0.1,4,,1,0.5,-2,0,,,,\n");
        assert_eq!(s.trim_end().split(',').count(), TRACKS_HEADER.split(',').count());
    }

    #[test]
    fn registration_row_in_degrees() {
        let mut out = Vec::new();
        write_registration(&mut out, Algo::Sep, &[record()], |_| vec![Registration::from_degrees(2.0, 0.6, 10.0)])
            .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "sep,0.1,0,2,0.6,10,2,0.6,10,0.5,1\n");
    }
}
