//! Reader and writer for Molpro-style FCIDUMP integral files.
//!
//! ```text
//!  &FCI NORB=2,NELEC=2,MS2=0,
//!   ORBSYM=1,1,
//!   ISYM=1,
//!  &END
//!  0.6746 1 1 1 1        two-electron (11|11)
//!  -1.2528 1 1 0 0       one-electron h_11
//!  0.7137 0 0 0 0        core energy
//! ```
//!
//! Orbital indices are 1-based, as in the file. Integrals are real with
//! 8-fold symmetry; values are stored under a canonical index order so every
//! symmetry-equivalent lookup hits the same entry.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FcidumpData {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    pub core_energy: f64,
    /// `h_pq` keyed by `(max(p,q), min(p,q))`.
    pub one_body: BTreeMap<(usize, usize), f64>,
    /// `(pq|rs)` keyed canonically, see [`canonical_eri`].
    pub two_body: BTreeMap<(usize, usize, usize, usize), f64>,
    /// Orbital symmetry labels; parsed and written back, otherwise unused.
    pub orbsym: Option<Vec<i64>>,
    pub isym: Option<i64>,
}

/// Canonical key for `(pq|rs)` under `(pq|rs)=(qp|rs)=(pq|sr)=(rs|pq)`.
pub fn canonical_eri(p: usize, q: usize, r: usize, s: usize) -> (usize, usize, usize, usize) {
    let a = (p.max(q), p.min(q));
    let b = (r.max(s), r.min(s));
    let (x, y) = if a >= b { (a, b) } else { (b, a) };
    (x.0, x.1, y.0, y.1)
}

impl FcidumpData {
    /// `h_pq` (1-based), zero when absent.
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.one_body.get(&(p.max(q), p.min(q))).copied().unwrap_or(0.0)
    }

    /// `(pq|rs)` (1-based, chemist notation), zero when absent.
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body.get(&canonical_eri(p, q, r, s)).copied().unwrap_or(0.0)
    }

    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        self.one_body.insert((p.max(q), p.min(q)), v);
    }

    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        self.two_body.insert(canonical_eri(p, q, r, s), v);
    }

    /// Serialize in FCIDUMP layout; numbers use shortest round-trip form.
    pub fn to_fcidump_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            " &FCI NORB={},NELEC={},MS2={},",
            self.n_orbitals, self.n_electrons, self.ms2
        );
        if let Some(sym) = &self.orbsym {
            let joined: Vec<String> = sym.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "  ORBSYM={},", joined.join(","));
        }
        if let Some(isym) = self.isym {
            let _ = writeln!(out, "  ISYM={isym},");
        }
        out.push_str(" &END\n");
        for (&(p, q, r, s), v) in &self.two_body {
            let _ = writeln!(out, "{v:e} {p} {q} {r} {s}");
        }
        for (&(p, q), v) in &self.one_body {
            let _ = writeln!(out, "{v:e} {p} {q} 0 0");
        }
        let _ = writeln!(out, "{:e} 0 0 0 0", self.core_energy);
        out
    }
}

fn parse_float(tok: &str, line: usize) -> Result<f64> {
    let norm: String = tok.chars().map(|c| if c == 'D' || c == 'd' { 'e' } else { c }).collect();
    norm.parse::<f64>().map_err(|_| Error::Fcidump { line, msg: format!("not a number: {tok:?}") })
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Fcidump { line, msg: format!("bad orbital index {tok:?}") })
}

fn parse_header(text: &str, line: usize) -> Result<FcidumpData> {
    // Strip the namelist opener and split into KEY=v1,v2,... groups.
    let body = text.trim_start();
    let upper = body.to_ascii_uppercase();
    let start = upper
        .find("&FCI")
        .ok_or(Error::Fcidump { line, msg: "header does not start with &FCI".into() })?;
    let body = &body[start + 4..];

    let mut values: Vec<(String, Vec<String>)> = Vec::new();
    for tok in body.split([',', '\n', '\r', ' ', '\t']).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let mut vs = Vec::new();
            if !v.is_empty() {
                vs.push(v.to_string());
            }
            values.push((k.trim().to_ascii_uppercase(), vs));
        } else if let Some(last) = values.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(Error::Fcidump { line, msg: format!("unexpected header token {tok:?}") });
        }
    }

    let mut data = FcidumpData::default();
    let mut have_norb = false;
    let mut have_nelec = false;
    let int = |k: &str, vs: &[String]| -> Result<i64> {
        match vs {
            [v] => v.parse::<i64>().map_err(|_| Error::Fcidump {
                line,
                msg: format!("{k} expects an integer, got {v:?}"),
            }),
            _ => Err(Error::Fcidump { line, msg: format!("{k} expects one value") }),
        }
    };
    for (k, vs) in &values {
        match k.as_str() {
            "NORB" => {
                let v = int(k, vs)?;
                if v < 0 {
                    return Err(Error::Fcidump { line, msg: "NORB must be non-negative".into() });
                }
                data.n_orbitals = v as usize;
                have_norb = true;
            }
            "NELEC" => {
                let v = int(k, vs)?;
                if v < 0 {
                    return Err(Error::Fcidump { line, msg: "NELEC must be non-negative".into() });
                }
                data.n_electrons = v as usize;
                have_nelec = true;
            }
            "MS2" => data.ms2 = int(k, vs)?,
            "ISYM" => data.isym = Some(int(k, vs)?),
            "ORBSYM" => {
                let sym = vs
                    .iter()
                    .map(|v| v.parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Fcidump { line, msg: "bad ORBSYM entry".into() })?;
                data.orbsym = Some(sym);
            }
            other => log::warn!("FCIDUMP: ignoring unknown header key {other}"),
        }
    }
    if !have_norb || !have_nelec {
        return Err(Error::Fcidump { line, msg: "header lacks NORB or NELEC".into() });
    }
    Ok(data)
}

/// Parse FCIDUMP text. Errors carry the 1-based line number.
pub fn parse_fcidump(text: &str) -> Result<FcidumpData> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut header_line = 1;
    let mut closed = false;
    for (k, raw) in lines.by_ref() {
        if header.is_empty() {
            header_line = k + 1;
        }
        let l = raw.trim();
        let upper = l.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END") {
            header.push_str(&l[..pos]);
            closed = true;
            break;
        }
        if l == "/" || l.ends_with('/') {
            header.push_str(l.trim_end_matches('/'));
            closed = true;
            break;
        }
        header.push_str(l);
        header.push('\n');
    }
    if !closed {
        return Err(Error::Fcidump { line: header_line, msg: "header not terminated by &END or /".into() });
    }
    let mut data = parse_header(&header, header_line)?;
    let norb = data.n_orbitals;

    for (k, raw) in lines {
        let line = k + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(Error::Fcidump { line, msg: format!("expected 5 fields, found {}", toks.len()) });
        }
        let v = parse_float(toks[0], line)?;
        let mut idx = [0usize; 4];
        for (slot, t) in idx.iter_mut().zip(&toks[1..]) {
            *slot = parse_index(t, line)?;
            if *slot > norb {
                return Err(Error::Fcidump { line, msg: format!("index {} exceeds NORB={norb}", *slot) });
            }
        }
        match idx {
            [0, 0, 0, 0] => data.core_energy = v,
            [p, q, 0, 0] if p > 0 && q > 0 => data.set_h1(p, q, v),
            [p, 0, 0, 0] if p > 0 => {} // orbital energy, not needed
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => data.set_eri(p, q, r, s, v),
            _ => return Err(Error::Fcidump { line, msg: format!("unsupported index pattern {idx:?}") }),
        }
    }
    Ok(data)
}
