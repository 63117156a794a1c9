//! Versioned line-oriented text format for a circuit, its bound parameters
//! and the reference basis state it acts on.
//!
//! ```text
//! # qcqmc circuit v1
//! qubits 4
//! reference 0x3
//! slots 2
//! rot 0x3 0x1 slot 0 scale 2e0
//! rot 0x0 0x4 fixed 1.5e-1
//! pauli 0x1 0x0
//! flip 2
//! param 0 -3.2e-1
//! param 1 7e-2
//! ```
//!
//! Masks are hexadecimal `x z` pairs; floats use shortest round-trip form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Angle, Circuit, Gate};
use crate::error::{Error, Result};
use crate::operators::pauli::PauliWord;

pub const CIRCUIT_HEADER: &str = "# qcqmc circuit v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub circuit: Circuit,
    pub params: Vec<f64>,
    pub reference: u64,
}

pub fn write_circuit_text(f: &CircuitFile) -> String {
    let c = &f.circuit;
    let mut out = String::new();
    out.push_str(CIRCUIT_HEADER);
    out.push('\n');
    let _ = writeln!(out, "qubits {}", c.n_qubits());
    let _ = writeln!(out, "reference {:#x}", f.reference);
    let _ = writeln!(out, "slots {}", c.n_slots());
    for g in c.gates() {
        match g {
            Gate::Rotation { word, angle } => {
                let _ = write!(out, "rot {:#x} {:#x} ", word.x_mask(), word.z_mask());
                match angle {
                    Angle::Fixed(a) => {
                        let _ = writeln!(out, "fixed {a:e}");
                    }
                    Angle::Slot { slot, scale } => {
                        let _ = writeln!(out, "slot {slot} scale {scale:e}");
                    }
                }
            }
            Gate::Pauli(word) => {
                let _ = writeln!(out, "pauli {:#x} {:#x}", word.x_mask(), word.z_mask());
            }
            Gate::Flip(q) => {
                let _ = writeln!(out, "flip {q}");
            }
        }
    }
    for (k, p) in f.params.iter().enumerate() {
        let _ = writeln!(out, "param {k} {p:e}");
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::CircuitFormat { line, msg: msg.into() }
}

fn hex(tok: Option<&str>, line: usize) -> Result<u64> {
    let t = tok.ok_or_else(|| err(line, "missing mask"))?;
    let digits = t.strip_prefix("0x").ok_or_else(|| err(line, format!("mask {t:?} lacks 0x")))?;
    u64::from_str_radix(digits, 16).map_err(|_| err(line, format!("bad mask {t:?}")))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let t = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    t.parse().map_err(|_| err(line, format!("bad {what} {t:?}")))
}

fn keyword(tok: Option<&str>, want: &str, line: usize) -> Result<()> {
    match tok {
        Some(t) if t == want => Ok(()),
        other => Err(err(line, format!("expected {want:?}, found {other:?}"))),
    }
}

pub fn read_circuit_text(text: &str) -> Result<CircuitFile> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == CIRCUIT_HEADER => {}
        Some((n, h)) => return Err(err(n, format!("unsupported header {h:?}"))),
        None => return Err(err(1, "empty input")),
    }
    let mut lines = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut header = |key: &str| -> Result<(usize, String)> {
        let (n, l) = lines.next().ok_or_else(|| err(0, format!("missing {key} line")))?;
        let mut t = l.split_whitespace();
        keyword(t.next(), key, n)?;
        let v = t.next().ok_or_else(|| err(n, format!("missing {key} value")))?;
        Ok((n, v.to_string()))
    };
    let (n, q) = header("qubits")?;
    let n_qubits: usize = num(Some(&q), n, "qubit count")?;
    let (n, r) = header("reference")?;
    let reference = hex(Some(&r), n)?;
    let (n, s) = header("slots")?;
    let n_slots: usize = num(Some(&s), n, "slot count")?;

    let mut circuit = Circuit::new(n_qubits);
    circuit.reserve_slots(n_slots);
    let mut params: Vec<Option<f64>> = vec![None; n_slots];
    for (n, l) in lines {
        let mut t = l.split_whitespace();
        let gate = match t.next() {
            Some("rot") => {
                let word = PauliWord::new(n_qubits, hex(t.next(), n)?, hex(t.next(), n)?)
                    .map_err(|e| err(n, e.to_string()))?;
                let angle = match t.next() {
                    Some("fixed") => Angle::Fixed(num(t.next(), n, "angle")?),
                    Some("slot") => {
                        let slot = num(t.next(), n, "slot")?;
                        keyword(t.next(), "scale", n)?;
                        Angle::Slot { slot, scale: num(t.next(), n, "scale")? }
                    }
                    other => return Err(err(n, format!("bad angle kind {other:?}"))),
                };
                Some(Gate::Rotation { word, angle })
            }
            Some("pauli") => Some(Gate::Pauli(
                PauliWord::new(n_qubits, hex(t.next(), n)?, hex(t.next(), n)?)
                    .map_err(|e| err(n, e.to_string()))?,
            )),
            Some("flip") => Some(Gate::Flip(num(t.next(), n, "qubit")?)),
            Some("param") => {
                let k: usize = num(t.next(), n, "slot")?;
                let v: f64 = num(t.next(), n, "value")?;
                let entry = params.get_mut(k).ok_or_else(|| err(n, format!("param {k} beyond slots")))?;
                if entry.replace(v).is_some() {
                    return Err(err(n, format!("param {k} given twice")));
                }
                None
            }
            other => return Err(err(n, format!("unknown record {other:?}"))),
        };
        if let Some(extra) = t.next() {
            return Err(err(n, format!("trailing token {extra:?}")));
        }
        if let Some(g) = gate {
            circuit.push(g).map_err(|e| err(n, e.to_string()))?;
        }
    }
    let params = params
        .into_iter()
        .enumerate()
        .map(|(k, p)| p.ok_or_else(|| err(0, format!("param {k} missing"))))
        .collect::<Result<Vec<f64>>>()?;
    if n_qubits < 64 && reference >> n_qubits != 0 {
        return Err(Error::IndexOutOfRange { index: reference, n_qubits });
    }
    Ok(CircuitFile { circuit, params, reference })
}
