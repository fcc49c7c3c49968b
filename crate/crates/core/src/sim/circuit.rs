//! Gate lists with mid-circuit measurement, reset and state-preparation slots.

use std::sync::Arc;

use crate::linalg::CMatrix;
use crate::pauli::{PauliObservable, PauliString};
use crate::sim::state::MixedState;
use crate::{Error, Result};

/// Handle to a mixed state slot in a [`Circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateId(pub usize);

/// A control qubit together with the value it must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub value: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Control { qubit, value: true }
    }

    pub fn off(qubit: usize) -> Self {
        Control { qubit, value: false }
    }

    /// Controls requiring `qubits` (most significant first) to spell `pattern`.
    pub fn pattern(qubits: &[usize], pattern: usize) -> Vec<Control> {
        let w = qubits.len();
        qubits
            .iter()
            .enumerate()
            .map(|(j, &q)| Control {
                qubit: q,
                value: (pattern >> (w - 1 - j)) & 1 == 1,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum Instruction {
    Hadamard { qubit: usize },
    RotationY { qubit: usize, angle: f64 },
    ControlledNot { control: usize, target: usize },
    ControlledZ { controls: Vec<Control>, target: usize },
    MultiControlledRotationY { controls: Vec<Control>, target: usize, angle: f64 },
    ControlledSwap { controls: Vec<Control>, a: Vec<usize>, b: Vec<usize> },
    /// Dense unitary on `targets` (most significant first), applied when all controls hold.
    ControlledUnitary { controls: Vec<Control>, targets: Vec<usize>, unitary: Arc<CMatrix> },
    MeasureX { qubit: usize, slot: usize },
    MeasureZ { qubit: usize, slot: usize },
    MeasurePauliString { string: PauliString, qubits: Vec<usize>, slot: usize },
    /// Measures the Pauli term drawn for the current shot from the circuit's sampler.
    MeasureSampledPauli { qubits: Vec<usize>, slot: usize },
    ResetToZero { qubits: Vec<usize> },
    PrepareMixed { qubits: Vec<usize>, state: StateId },
}

impl Instruction {
    pub fn slot(&self) -> Option<usize> {
        match self {
            Instruction::MeasureX { slot, .. }
            | Instruction::MeasureZ { slot, .. }
            | Instruction::MeasurePauliString { slot, .. }
            | Instruction::MeasureSampledPauli { slot, .. } => Some(*slot),
            _ => None,
        }
    }

    pub fn is_unitary(&self) -> bool {
        matches!(
            self,
            Instruction::Hadamard { .. }
                | Instruction::RotationY { .. }
                | Instruction::ControlledNot { .. }
                | Instruction::ControlledZ { .. }
                | Instruction::MultiControlledRotationY { .. }
                | Instruction::ControlledSwap { .. }
                | Instruction::ControlledUnitary { .. }
        )
    }

    fn qubits(&self) -> Vec<usize> {
        let ctl = |cs: &[Control]| cs.iter().map(|c| c.qubit).collect::<Vec<_>>();
        match self {
            Instruction::Hadamard { qubit }
            | Instruction::RotationY { qubit, .. }
            | Instruction::MeasureX { qubit, .. }
            | Instruction::MeasureZ { qubit, .. } => vec![*qubit],
            Instruction::ControlledNot { control, target } => vec![*control, *target],
            Instruction::ControlledZ { controls, target } | Instruction::MultiControlledRotationY { controls, target, .. } => {
                let mut v = ctl(controls);
                v.push(*target);
                v
            }
            Instruction::ControlledSwap { controls, a, b } => {
                let mut v = ctl(controls);
                v.extend(a);
                v.extend(b);
                v
            }
            Instruction::ControlledUnitary { controls, targets, .. } => {
                let mut v = ctl(controls);
                v.extend(targets);
                v
            }
            Instruction::MeasurePauliString { qubits, .. }
            | Instruction::MeasureSampledPauli { qubits, .. }
            | Instruction::ResetToZero { qubits }
            | Instruction::PrepareMixed { qubits, .. } => qubits.clone(),
        }
    }
}

/// An ordered instruction list on a fixed number of qubits.
#[derive(Debug, Clone)]
pub struct Circuit {
    qubits: usize,
    instructions: Vec<Instruction>,
    slots: usize,
    states: Vec<Option<Arc<MixedState>>>,
    sampler: Option<Arc<PauliObservable>>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit {
            qubits,
            instructions: Vec::new(),
            slots: 0,
            states: Vec::new(),
            sampler: None,
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn sampler(&self) -> Option<&Arc<PauliObservable>> {
        self.sampler.as_ref()
    }

    /// Declares a state slot, to be filled later with [`Circuit::bind`].
    pub fn add_state(&mut self) -> StateId {
        self.states.push(None);
        StateId(self.states.len() - 1)
    }

    pub fn bind(&mut self, id: StateId, state: Arc<MixedState>) -> Result<()> {
        let slot = self
            .states
            .get_mut(id.0)
            .ok_or_else(|| Error::circuit(format!("unknown state id {}", id.0)))?;
        *slot = Some(state);
        Ok(())
    }

    pub fn state(&self, id: StateId) -> Result<&Arc<MixedState>> {
        self.states
            .get(id.0)
            .and_then(|s| s.as_ref())
            .ok_or_else(|| Error::circuit(format!("state id {} is not bound", id.0)))
    }

    /// Sets the observable whose terms are importance-sampled once per shot.
    pub fn set_sampler(&mut self, observable: Arc<PauliObservable>) {
        self.sampler = Some(observable);
    }

    pub fn push(&mut self, instruction: Instruction) -> Result<()> {
        let qs = instruction.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= self.qubits) {
            return Err(Error::circuit(format!("qubit {q} out of range for {} qubits", self.qubits)));
        }
        let mut sorted = qs.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::circuit(format!("repeated qubit in {instruction:?}")));
        }
        match &instruction {
            Instruction::ControlledSwap { a, b, .. } if a.len() != b.len() => {
                return Err(Error::circuit("swap registers differ in length"));
            }
            Instruction::ControlledUnitary { targets, unitary, .. } if unitary.nrows() != 1 << targets.len() || !unitary.is_square() => {
                return Err(Error::circuit("unitary size does not match its targets"));
            }
            Instruction::MeasurePauliString { string, qubits, .. } if string.len() != qubits.len() => {
                return Err(Error::circuit("Pauli string length does not match its qubits"));
            }
            Instruction::PrepareMixed { state, .. } if state.0 >= self.states.len() => {
                return Err(Error::circuit(format!("unknown state id {}", state.0)));
            }
            _ => {}
        }
        if let Some(slot) = instruction.slot() {
            if self.instructions.iter().any(|i| i.slot() == Some(slot)) {
                return Err(Error::circuit(format!("record slot {slot} written twice")));
            }
            self.slots = self.slots.max(slot + 1);
        }
        self.instructions.push(instruction);
        Ok(())
    }

    /// Appends several instructions; all validation rules of [`Circuit::push`] apply.
    pub fn extend(&mut self, instructions: impl IntoIterator<Item = Instruction>) -> Result<()> {
        for i in instructions {
            self.push(i)?;
        }
        Ok(())
    }

    /// Full check before execution: bound states with matching sizes,
    /// preparations only onto fresh qubits, every slot written once.
    pub fn validate(&self) -> Result<()> {
        let mut fresh = vec![true; self.qubits];
        let mut written = vec![false; self.slots];
        for ins in &self.instructions {
            match ins {
                Instruction::PrepareMixed { qubits, state } => {
                    let s = self.state(*state)?;
                    if s.qubits() != qubits.len() {
                        return Err(Error::circuit(format!(
                            "state {} has {} qubits but preparation targets {}",
                            state.0,
                            s.qubits(),
                            qubits.len()
                        )));
                    }
                    if let Some(q) = qubits.iter().find(|&&q| !fresh[q]) {
                        return Err(Error::circuit(format!("preparation onto qubit {q} which is not reset")));
                    }
                    qubits.iter().for_each(|&q| fresh[q] = false);
                }
                Instruction::ResetToZero { qubits } => qubits.iter().for_each(|&q| fresh[q] = true),
                Instruction::MeasureSampledPauli { qubits, .. } => {
                    let Some(obs) = &self.sampler else {
                        return Err(Error::circuit("sampled Pauli measurement without a sampler"));
                    };
                    if obs.qubits() != qubits.len() {
                        return Err(Error::circuit("sampled observable size does not match its qubits"));
                    }
                    if obs.l1_norm() == 0.0 {
                        return Err(Error::circuit("sampled observable has zero weight"));
                    }
                    qubits.iter().for_each(|&q| fresh[q] = false);
                }
                other => other.qubits().into_iter().for_each(|q| fresh[q] = false),
            }
            if let Some(slot) = ins.slot() {
                written[slot] = true;
            }
        }
        if let Some(slot) = written.iter().position(|w| !w) {
            return Err(Error::circuit(format!("record slot {slot} is never written")));
        }
        Ok(())
    }

    /// Copy in which every sampled Pauli measurement is fixed to term `p`.
    pub fn with_sampled_term(&self, p: usize) -> Result<Circuit> {
        let obs = self.sampler.as_ref().ok_or_else(|| Error::circuit("circuit has no sampler"))?;
        let (_, string) = obs
            .terms()
            .get(p)
            .ok_or_else(|| Error::circuit(format!("term {p} out of range")))?;
        let mut out = self.clone();
        out.sampler = None;
        for ins in &mut out.instructions {
            if let Instruction::MeasureSampledPauli { qubits, slot } = ins {
                *ins = Instruction::MeasurePauliString {
                    string: string.clone(),
                    qubits: qubits.clone(),
                    slot: *slot,
                };
            }
        }
        Ok(out)
    }

    pub fn count(&self, pred: impl Fn(&Instruction) -> bool) -> usize {
        self.instructions.iter().filter(|i| pred(i)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_rejects_bad_instructions() {
        let mut c = Circuit::new(3);
        assert!(c.push(Instruction::Hadamard { qubit: 3 }).is_err());
        assert!(c
            .push(Instruction::ControlledSwap {
                controls: vec![Control::on(0)],
                a: vec![1],
                b: vec![1]
            })
            .is_err());
        c.push(Instruction::MeasureZ { qubit: 0, slot: 0 }).unwrap();
        assert!(c.push(Instruction::MeasureX { qubit: 1, slot: 0 }).is_err());
    }

    #[test]
    fn validate_requires_fresh_qubits() {
        let mut c = Circuit::new(2);
        let id = c.add_state();
        c.bind(id, Arc::new(MixedState::maximally_mixed(1).unwrap())).unwrap();
        c.push(Instruction::Hadamard { qubit: 1 }).unwrap();
        c.push(Instruction::PrepareMixed { qubits: vec![1], state: id }).unwrap();
        assert!(c.validate().is_err());
        let mut ok = Circuit::new(2);
        let id = ok.add_state();
        ok.bind(id, Arc::new(MixedState::maximally_mixed(1).unwrap())).unwrap();
        ok.push(Instruction::Hadamard { qubit: 1 }).unwrap();
        ok.push(Instruction::ResetToZero { qubits: vec![1] }).unwrap();
        ok.push(Instruction::PrepareMixed { qubits: vec![1], state: id }).unwrap();
        ok.validate().unwrap();
    }

    #[test]
    fn control_pattern_is_msb_first() {
        let cs = Control::pattern(&[4, 5], 0b10);
        assert!(cs[0].value && !cs[1].value);
    }
}
