//! Circuit emission as an OpenQASM-2.0 subset, one gate per line, plus a
//! parser for the same subset (used by the verify command).
//!
//! Exchange gates are not part of qelib and are declared opaque. Initial
//! state preparation is emitted as comment directives; the parser skips
//! comments.

use std::fmt::Write as _;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Preparation directive emitted ahead of the gate list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepDirective {
    /// Qubits started in the +x eigenstate.
    Plus(Vec<usize>),
    /// Computational-basis bits for one polynomial-constraint group.
    GroupBits {
        group: usize,
        bits: Vec<(usize, u8)>,
    },
    /// Group whose initial state was left to the user.
    GroupUnspecified { group: usize, nodes: Vec<usize> },
}

pub fn emit(
    circuit: &Circuit,
    n_qubits: usize,
    prep: &[PrepDirective],
    header_comments: &[String],
) -> String {
    let mut out = String::new();
    for line in header_comments {
        let _ = writeln!(out, "// {line}");
    }
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str("opaque exch(theta) a,b;\n");
    let _ = writeln!(out, "qreg q[{n_qubits}];");
    for p in prep {
        match p {
            PrepDirective::Plus(qs) => {
                let list: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                let _ = writeln!(out, "// prep plus {}", list.join(" "));
            }
            PrepDirective::GroupBits { group, bits } => {
                let list: Vec<String> = bits.iter().map(|(q, b)| format!("q[{q}]={b}")).collect();
                let _ = writeln!(out, "// prep group {group} bits {}", list.join(" "));
            }
            PrepDirective::GroupUnspecified { group, nodes } => {
                let list: Vec<String> = nodes.iter().map(|q| format!("q[{q}]")).collect();
                let _ = writeln!(
                    out,
                    "// prep group {group} user-defined over {}",
                    list.join(" ")
                );
            }
        }
    }
    for g in &circuit.gates {
        match *g {
            Gate::Cnot { control, target } => {
                let _ = writeln!(out, "cx q[{control}],q[{target}];");
            }
            Gate::Rz { qubit, angle } => {
                let _ = writeln!(out, "rz({angle}) q[{qubit}];");
            }
            Gate::Rx { qubit, angle } => {
                let _ = writeln!(out, "rx({angle}) q[{qubit}];");
            }
            Gate::Exchange { a, b, angle } => {
                let _ = writeln!(out, "exch({angle}) q[{a}],q[{b}];");
            }
        }
    }
    out
}

fn parse_qubit(tok: &str) -> Result<usize> {
    let inner = tok
        .trim()
        .strip_prefix("q[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::Input(format!("bad qubit reference: {tok}")))?;
    inner
        .parse()
        .map_err(|_| Error::Input(format!("bad qubit index: {tok}")))
}

fn parse_angle(head: &str, name: &str) -> Result<f64> {
    let inner = head
        .strip_prefix(name)
        .and_then(|s| s.strip_prefix('('))
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Input(format!("bad gate syntax: {head}")))?;
    inner
        .parse()
        .map_err(|_| Error::Input(format!("bad angle: {head}")))
}

/// Parses the emitted subset back into a circuit: returns the gate list and
/// the declared register size.
pub fn parse(text: &str) -> Result<(Circuit, usize)> {
    let mut circuit = Circuit::new();
    let mut n_qubits = None;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with("//")
            || line.starts_with("OPENQASM")
            || line.starts_with("include")
            || line.starts_with("opaque")
        {
            continue;
        }
        let line = line
            .strip_suffix(';')
            .ok_or_else(|| Error::Input(format!("missing semicolon: {raw}")))?;
        if let Some(rest) = line.strip_prefix("qreg q[") {
            let n = rest
                .strip_suffix(']')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Input(format!("bad qreg: {raw}")))?;
            n_qubits = Some(n);
            continue;
        }
        let (head, args) = line
            .split_once(' ')
            .ok_or_else(|| Error::Input(format!("bad gate line: {raw}")))?;
        let args: Vec<&str> = args.split(',').collect();
        let gate = if head == "cx" {
            if args.len() != 2 {
                return Err(Error::Input(format!("cx needs two qubits: {raw}")));
            }
            Gate::Cnot {
                control: parse_qubit(args[0])?,
                target: parse_qubit(args[1])?,
            }
        } else if head.starts_with("rz(") {
            Gate::Rz {
                qubit: parse_qubit(args[0])?,
                angle: parse_angle(head, "rz")?,
            }
        } else if head.starts_with("rx(") {
            Gate::Rx {
                qubit: parse_qubit(args[0])?,
                angle: parse_angle(head, "rx")?,
            }
        } else if head.starts_with("exch(") {
            if args.len() != 2 {
                return Err(Error::Input(format!("exch needs two qubits: {raw}")));
            }
            Gate::Exchange {
                a: parse_qubit(args[0])?,
                b: parse_qubit(args[1])?,
                angle: parse_angle(head, "exch")?,
            }
        } else {
            return Err(Error::Input(format!("unsupported gate: {raw}")));
        };
        circuit.push(gate);
    }
    let n = n_qubits.ok_or_else(|| Error::Input("missing qreg declaration".into()))?;
    Ok((circuit, n))
}
