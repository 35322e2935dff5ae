//! Detection stream: one detection per line as `t,sensor_id,r,rdot,theta_deg`.
//! Blank lines and `#` comments are skipped, as is an optional
//! `t,sensor_id,...` header. Lines must be ordered by `t`; equal times form
//! one epoch.

use std::io::{self, Write};

use jtr_core::models::{wrap_angle, Measurement, NoiseSigmas};

use super::gfmt::g17;
use crate::error::CliError;
use crate::simkit::synth::Detection;

pub const HEADER: &str = "t,sensor_id,r,rdot,theta_deg";

pub type Epochs = Vec<(f64, Vec<Detection>)>;

pub fn parse_detections(text: &str, sensors: usize, sigmas: &NoiseSigmas) -> Result<Epochs, CliError> {
    let mut epochs: Epochs = Vec::new();
    let mut seen_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_data && line.replace(' ', "") == HEADER {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let bad = |msg: &str| CliError::Input(format!("detections line {line_no}: {msg}"));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(bad(&format!("expected 5 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, CliError> {
            let v: f64 = s.parse().map_err(|_| bad(&format!("cannot parse {what} {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(&format!("{what} is not finite")))
            }
        };
        let t = num(f[0], "t")?;
        let sensor: usize = f[1].parse().map_err(|_| bad(&format!("cannot parse sensor_id {:?}", f[1])))?;
        if sensor >= sensors {
            return Err(bad(&format!("sensor_id {sensor} but only {sensors} sensors are configured")));
        }
        let r = num(f[2], "r")?;
        if r <= 0.0 {
            return Err(bad("range must be positive"));
        }
        let rdot = num(f[3], "rdot")?;
        let theta = wrap_angle(num(f[4], "theta_deg")?.to_radians());
        let det = Detection {
            measurement: Measurement { r, rdot, theta, sensor_id: sensor, t, sigmas: *sigmas },
            origin: None,
        };
        match epochs.last_mut() {
            Some((last, dets)) if *last == t => dets.push(det),
            Some((last, _)) if *last > t => {
                return Err(bad(&format!("time {t} is earlier than the previous {last}")));
            }
            _ => epochs.push((t, vec![det])),
        }
    }
    Ok(epochs)
}

/// Writes detections in the replay format at full precision.
pub fn write_detections(w: &mut impl Write, epochs: &[(f64, Vec<Detection>)]) -> io::Result<()> {
    writeln!(w, "# jtr detections schema v1")?;
    writeln!(w, "{HEADER}")?;
    for (t, dets) in epochs {
        for d in dets {
            let m = &d.measurement;
            writeln!(w, "{},{},{},{},{}", g17(*t), m.sensor_id, g17(m.r), g17(m.rdot), g17(m.theta.to_degrees()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> NoiseSigmas {
        NoiseSigmas::new(0.1, 0.2, 0.01).unwrap()
    }

    #[test]
    fn groups_equal_times() {
        let text = "# comment\nt,sensor_id,r,rdot,theta_deg\n0,0,10,0.5,12\n0,1,10.2,0.4,-3\n\n0.1,0,10.1,0.5,12\n";
        let e = parse_detections(text, 2, &sig()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].1.len(), 2);
        assert_eq!(e[1].0, 0.1);
        assert!((e[0].1[0].measurement.theta - 12f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn empty_input_has_no_epochs() {
        assert!(parse_detections("", 2, &sig()).unwrap().is_empty());
        assert!(parse_detections("# only a comment\n", 2, &sig()).unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_their_number() {
        for (text, line) in [
            ("0,0,10,0.5,12\n0,0,ten,0.5,12\n", "line 2"),
            ("\n\n0,0,10,0.5\n", "line 3"),
            ("0,7,10,0.5,12\n", "line 1"),
            ("0,0,-1,0.5,12\n", "line 1"),
        ] {
            match parse_detections(text, 2, &sig()) {
                Err(CliError::Input(msg)) => assert!(msg.contains(line), "{msg}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn time_must_not_go_backwards() {
        let err = parse_detections("1,0,10,0,0\n0.5,0,10,0,0\n", 1, &sig()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn written_files_parse_back() {
        let text = "0,0,10,0.5,12\n0,1,10.2,0.4,-3\n0.1,0,10.1,0.5,12\n";
        let e = parse_detections(text, 2, &sig()).unwrap();
        let mut out = Vec::new();
        write_detections(&mut out, &e).unwrap();
        let back = parse_detections(&String::from_utf8(out).unwrap(), 2, &sig()).unwrap();
        for ((ta, a), (tb, b)) in back.iter().zip(&e) {
            assert_eq!(ta, tb);
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.measurement.r, y.measurement.r);
                assert!((x.measurement.theta - y.measurement.theta).abs() < 1e-15);
            }
        }
    }
}
