//! Gate circuits and their text format.
//!
//! One instruction per line:
//!
//! ```text
//! QUBITS 2          # optional; otherwise the largest index + 1
//! RY q0 1.5707963
//! RX q0 3.1415926
//! CNOT q0 q1        # expanded into rotations and two SWAP(π/4)
//! SWAP q0 q1 0.7853981
//! PHASE q1 3.1415926
//! MEASURE q0
//! ```
//!
//! Everything after `#` is ignored. Mnemonics are case-insensitive.

use std::fmt;

use crate::error::{Error, Result};
use crate::gates::{cnot_from_sqrt_swap, Axis, GateKind, ProgramStep, StepTarget};

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub gate: GateKind,
    /// One qubit, or two for `Swap` (first, second).
    pub qubits: Vec<usize>,
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = |i: usize| format!("q{}", self.qubits[i]);
        match self.gate {
            GateKind::Rot { axis, theta } => {
                let name = match axis {
                    Axis::X => "RX",
                    Axis::Y => "RY",
                    Axis::Z => "RZ",
                };
                write!(f, "{name} {} {theta}", q(0))
            }
            GateKind::Phase { phi } => write!(f, "PHASE {} {phi}", q(0)),
            GateKind::Swap { theta } => write!(f, "SWAP {} {} {theta}", q(0), q(1)),
            GateKind::Measure => write!(f, "MEASURE {}", q(0)),
            GateKind::PiPulse { ancilla } => write!(f, "PI {} {ancilla}", q(0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, instructions: Vec::new() }
    }

    pub fn push(&mut self, gate: GateKind, qubits: &[usize]) -> Result<&mut Self> {
        let inst = Instruction { gate, qubits: qubits.to_vec() };
        check_instruction(&inst, self.num_qubits).map_err(|reason| Error::Compile {
            index: self.instructions.len(),
            reason,
        })?;
        self.instructions.push(inst);
        Ok(self)
    }

    /// Appends a two-cell program with `First = a`, `Second = b`.
    pub fn push_program(&mut self, steps: &[ProgramStep], a: usize, b: usize) -> Result<&mut Self> {
        for step in steps {
            let qubits: &[usize] = match step.cells {
                StepTarget::First => &[a],
                StepTarget::Second => &[b],
                StepTarget::Pair => &[a, b],
            };
            self.push(step.gate, qubits)?;
        }
        Ok(self)
    }

    pub fn push_cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push_program(&cnot_from_sqrt_swap(), control, target)
    }

    pub fn validate(&self) -> Result<()> {
        for (index, inst) in self.instructions.iter().enumerate() {
            check_instruction(inst, self.num_qubits).map_err(|reason| Error::Compile { index, reason })?;
        }
        Ok(())
    }

    pub fn measurement_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.gate == GateKind::Measure).count()
    }

    /// Parses the text format; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut lines: Vec<(usize, Vec<Instruction>)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let err = |message: String| Error::Parse { line, message };
            let name = toks[0].to_ascii_uppercase();
            let args = &toks[1..];
            let want = |n: usize| -> Result<()> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("{name} takes {n} argument(s), got {}", args.len())))
                }
            };
            let qubit = |s: &str| -> Result<usize> {
                s.strip_prefix(['q', 'Q'])
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("expected a qubit like q0, got {s:?}")))
            };
            let angle = |s: &str| -> Result<f64> {
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(err(format!("expected a finite angle, got {s:?}"))),
                }
            };
            let insts = match name.as_str() {
                "QUBITS" => {
                    want(1)?;
                    if declared.is_some() || !lines.is_empty() {
                        return Err(err("QUBITS must come first and only once".into()));
                    }
                    let n = args[0].parse::<usize>().map_err(|_| err(format!("bad qubit count {:?}", args[0])))?;
                    declared = Some(n);
                    continue;
                }
                "RX" | "RY" | "RZ" => {
                    want(2)?;
                    let axis = match name.as_str() {
                        "RX" => Axis::X,
                        "RY" => Axis::Y,
                        _ => Axis::Z,
                    };
                    vec![Instruction { gate: GateKind::Rot { axis, theta: angle(args[1])? }, qubits: vec![qubit(args[0])?] }]
                }
                "PHASE" => {
                    want(2)?;
                    vec![Instruction { gate: GateKind::Phase { phi: angle(args[1])? }, qubits: vec![qubit(args[0])?] }]
                }
                "SWAP" => {
                    want(3)?;
                    vec![Instruction {
                        gate: GateKind::Swap { theta: angle(args[2])? },
                        qubits: vec![qubit(args[0])?, qubit(args[1])?],
                    }]
                }
                "CNOT" => {
                    want(2)?;
                    let (c, t) = (qubit(args[0])?, qubit(args[1])?);
                    let mut tmp = Circuit::new(usize::MAX);
                    tmp.push_cnot(c, t).map_err(|e| err(e.to_string()))?;
                    tmp.instructions
                }
                "MEASURE" => {
                    want(1)?;
                    vec![Instruction { gate: GateKind::Measure, qubits: vec![qubit(args[0])?] }]
                }
                other => return Err(err(format!("unknown instruction {other:?}"))),
            };
            lines.push((line, insts));
        }
        let inferred = lines
            .iter()
            .flat_map(|(_, v)| v.iter().flat_map(|i| i.qubits.iter().copied()))
            .max()
            .map_or(0, |q| q + 1);
        let num_qubits = declared.unwrap_or(inferred);
        let mut circuit = Circuit::new(num_qubits);
        for (line, insts) in lines {
            for inst in insts {
                check_instruction(&inst, num_qubits).map_err(|message| Error::Parse { line, message })?;
                circuit.instructions.push(inst);
            }
        }
        Ok(circuit)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.num_qubits);
        for inst in &self.instructions {
            s.push_str(&inst.to_string());
            s.push('\n');
        }
        s
    }
}

fn check_instruction(inst: &Instruction, n: usize) -> std::result::Result<(), String> {
    inst.gate.validate().map_err(|e| e.to_string())?;
    let arity = match inst.gate {
        GateKind::Swap { .. } => 2,
        GateKind::PiPulse { .. } => return Err("π-pulses are not circuit instructions".into()),
        _ => 1,
    };
    if inst.qubits.len() != arity {
        return Err(format!("{} expects {arity} qubit(s)", inst.gate));
    }
    if let Some(&q) = inst.qubits.iter().find(|&&q| q >= n) {
        return Err(format!("qubit q{q} out of range for {n} qubits"));
    }
    if arity == 2 && inst.qubits[0] == inst.qubits[1] {
        return Err("two-qubit gate needs distinct qubits".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_all_mnemonics() {
        let c = Circuit::parse(
            "# demo\nQUBITS 3\nRX q0 1.5\nry q1 -0.25  # trailing\nRZ q2 3\nPHASE q2 3.1415926\nSWAP q0 q1 0.7853981\nMEASURE q2\n",
        )
        .unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.instructions.len(), 6);
        assert_eq!(c.instructions[1].gate, GateKind::ry(-0.25));
        assert_eq!(c.instructions[4].qubits, vec![0, 1]);
        assert_eq!(c.measurement_count(), 1);
    }

    #[test]
    fn cnot_expands() {
        let c = Circuit::parse("CNOT q1 q0").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.instructions.len(), cnot_from_sqrt_swap().len());
        assert_eq!(c.instructions[2].gate, GateKind::Swap { theta: PI / 4.0 });
        assert_eq!(c.instructions[2].qubits, vec![1, 0]);
        assert_eq!(c.instructions[0].qubits, vec![1]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("RX q0 1\nRX q0\n", 2),
            ("\n\nFOO q1\n", 3),
            ("RX x0 1\n", 1),
            ("SWAP q0 q0 1\n", 1),
            ("QUBITS 1\nRX q3 1\n", 2),
            ("RX q0 nan\n", 1),
            ("RX q0 1\nQUBITS 2\n", 2),
        ];
        for (text, line) in cases {
            match Circuit::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut c = Circuit::new(2);
        c.push(GateKind::rx(0.1), &[0]).unwrap();
        c.push(GateKind::Swap { theta: PI / 4.0 }, &[1, 0]).unwrap();
        c.push(GateKind::Phase { phi: -2.5 }, &[1]).unwrap();
        c.push(GateKind::Measure, &[1]).unwrap();
        assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn push_rejects_invalid() {
        let mut c = Circuit::new(2);
        assert!(c.push(GateKind::rx(1.0), &[2]).is_err());
        assert!(c.push(GateKind::Swap { theta: 1.0 }, &[0]).is_err());
        assert!(c.push(GateKind::PiPulse { ancilla: 2 }, &[0]).is_err());
        assert!(c.push(GateKind::rx(f64::INFINITY), &[0]).is_err());
        assert!(Circuit::parse("").unwrap().instructions.is_empty());
    }
}
