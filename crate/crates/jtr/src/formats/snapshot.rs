//! Plain-text snapshot of a [`FilterState`]; numbers at `%.17g`, so a
//! write/read round trip is exact.
//!
//! ```text
//! jtr-snapshot v1
//! epoch 12
//! config <epsilon> <quantile> <window> <gate> <miss_limit>
//! sensors 2
//! prior 0 surveyed <xi0> <eta0> <psi0> <sigma_xi0> <sigma_eta0> <sigma_psi0>
//! prior 1 unknown <xi0> <eta0> <psi0>
//! innovation 2 <norm_sq> <dims> <norm_sq> <dims>
//! tracks 3 <id> <id> <id>
//! dim 18
//! R
//! <18 rows of 18 values>
//! z
//! <18 values>
//! end
//! ```

use std::io::{self, Write};

use jtr_core::fmap::{FmapConfig, JointLayout, RegistrationPrior};
use jtr_core::info::SquareRootInfo;
use jtr_core::models::Registration;
use jtr_core::{FilterState, Innovation, Matrix};

use super::gfmt::g17;
use crate::error::CliError;

pub const MAGIC: &str = "jtr-snapshot v1";

pub fn write_snapshot(w: &mut impl Write, state: &FilterState) -> io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "epoch {}", state.epoch())?;
    let c = state.config();
    writeln!(
        w,
        "config {} {} {} {} {}",
        g17(c.epsilon),
        g17(c.innovation_quantile),
        c.innovation_window,
        g17(c.gate_distance),
        c.miss_limit
    )?;
    writeln!(w, "sensors {}", state.layout().sensors())?;
    for (i, p) in state.registration_priors().iter().enumerate() {
        match p {
            RegistrationPrior::Unknown(a) => writeln!(w, "prior {i} unknown {}", join(&a.to_array()))?,
            RegistrationPrior::Surveyed { mean, sigma } => {
                writeln!(w, "prior {i} surveyed {} {}", join(&mean.to_array()), join(sigma))?
            }
        }
    }
    let hist: Vec<Innovation> = state.monitor().history().collect();
    write!(w, "innovation {}", hist.len())?;
    for h in &hist {
        write!(w, " {} {}", g17(h.norm_sq), h.dims)?;
    }
    writeln!(w)?;
    let ids = state.layout().track_ids();
    write!(w, "tracks {}", ids.len())?;
    for id in ids {
        write!(w, " {id}")?;
    }
    writeln!(w)?;
    write_info_body(w, state.info())?;
    writeln!(w, "end")
}

/// `dim`, the rows of `R` and `z`; also the `--dump-info` format.
pub fn write_info_body(w: &mut impl Write, info: &SquareRootInfo) -> io::Result<()> {
    let d = info.dim();
    writeln!(w, "dim {d}")?;
    writeln!(w, "R")?;
    for i in 0..d {
        writeln!(w, "{}", join(info.r.row(i)))?;
    }
    writeln!(w, "z")?;
    writeln!(w, "{}", join(&info.z))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(" ")
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, CliError> {
        match self.it.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim())
            }
            None => Err(CliError::Input("snapshot truncated".into())),
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Input(format!("snapshot line {}: {msg}", self.line))
    }

    /// Fields after the expected keyword.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, CliError> {
        let l = self.next()?;
        let mut f = l.split_whitespace();
        if f.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(f.collect())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, CliError> {
        s.parse().map_err(|_| self.err(format!("cannot parse {s:?}")))
    }

    fn floats(&self, fields: &[&str]) -> Result<Vec<f64>, CliError> {
        fields.iter().map(|s| self.parse(s)).collect()
    }
}

pub fn read_snapshot(text: &str) -> Result<FilterState, CliError> {
    let mut l = Lines { it: text.lines().enumerate(), line: 0 };
    if l.next()? != MAGIC {
        return Err(l.err("not a jtr snapshot"));
    }
    let epoch: u64 = {
        let f = l.keyed("epoch")?;
        l.parse(f.first().ok_or_else(|| l.err("missing epoch"))?)?
    };
    let f = l.keyed("config")?;
    if f.len() != 5 {
        return Err(l.err("config needs five fields"));
    }
    let config = FmapConfig {
        epsilon: l.parse(f[0])?,
        innovation_quantile: l.parse(f[1])?,
        innovation_window: l.parse(f[2])?,
        gate_distance: l.parse(f[3])?,
        miss_limit: l.parse(f[4])?,
    };
    let sensors: usize = {
        let f = l.keyed("sensors")?;
        l.parse(f.first().ok_or_else(|| l.err("missing sensor count"))?)?
    };
    let mut priors = Vec::with_capacity(sensors);
    for i in 0..sensors {
        let f = l.keyed("prior")?;
        if f.first().map(|s| l.parse::<usize>(s)).transpose()? != Some(i) {
            return Err(l.err(format!("expected prior {i}")));
        }
        let prior = match (f.get(1).copied(), f.len()) {
            (Some("unknown"), 5) => RegistrationPrior::Unknown(Registration::from_slice(&l.floats(&f[2..])?)),
            (Some("surveyed"), 8) => {
                let v = l.floats(&f[2..])?;
                RegistrationPrior::Surveyed { mean: Registration::from_slice(&v[..3]), sigma: [v[3], v[4], v[5]] }
            }
            _ => return Err(l.err("malformed prior")),
        };
        priors.push(prior);
    }
    let f = l.keyed("innovation")?;
    let count: usize = l.parse(f.first().ok_or_else(|| l.err("missing innovation count"))?)?;
    if f.len() != 1 + 2 * count {
        return Err(l.err("innovation count does not match"));
    }
    let history = (0..count)
        .map(|i| Ok(Innovation { norm_sq: l.parse(f[1 + 2 * i])?, dims: l.parse(f[2 + 2 * i])? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let f = l.keyed("tracks")?;
    let n: usize = l.parse(f.first().ok_or_else(|| l.err("missing track count"))?)?;
    if f.len() != n + 1 {
        return Err(l.err("track count does not match"));
    }
    let ids = f[1..].iter().map(|s| l.parse(s)).collect::<Result<Vec<u64>, _>>()?;
    let info = read_info_body(&mut l)?;
    if l.next()? != "end" {
        return Err(l.err("expected `end`"));
    }
    let layout = JointLayout::with_tracks(ids, sensors)?;
    if layout.dim() != info.dim() {
        return Err(l.err(format!("dimension {} does not match the layout ({})", info.dim(), layout.dim())));
    }
    let mut state = FilterState::from_parts(info, layout, epoch, config, priors)?;
    state.restore_innovation_history(&history);
    Ok(state)
}

fn read_info_body(l: &mut Lines<'_>) -> Result<SquareRootInfo, CliError> {
    let d: usize = {
        let f = l.keyed("dim")?;
        l.parse(f.first().ok_or_else(|| l.err("missing dimension"))?)?
    };
    l.keyed("R")?;
    let mut data = Vec::with_capacity(d * d);
    for _ in 0..d {
        let row = l.next()?;
        let v = l.floats(&row.split_whitespace().collect::<Vec<_>>())?;
        if v.len() != d {
            return Err(l.err(format!("expected {d} values")));
        }
        data.extend(v);
    }
    l.keyed("z")?;
    let row = l.next()?;
    let z = l.floats(&row.split_whitespace().collect::<Vec<_>>())?;
    if z.len() != d {
        return Err(l.err(format!("expected {d} values")));
    }
    Ok(SquareRootInfo::new(Matrix::from_row_slice(d, d, &data), z)?)
}

/// Reads a `--dump-info` file.
pub fn read_info(text: &str) -> Result<SquareRootInfo, CliError> {
    let mut l = Lines { it: text.lines().enumerate(), line: 0 };
    read_info_body(&mut l)
}
