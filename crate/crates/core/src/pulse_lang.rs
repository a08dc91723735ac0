//! A small line-oriented pulse-program language.
//!
//! ```text
//! # |00> pseudopure preparation
//! selpulse (10,11) 70.5287793655 x
//! grad
//! selpulse (01,11) 90 x
//! grad
//! ```
//!
//! Instructions run top to bottom. Phases may name a slot of the phase-cycle
//! table (`P1` or `$P1`); transitions may name a slot with `$K`, which lets a
//! cycle row pick the transition as well as the phase.

use crate::dynamics::{
    crush_gradient, free_evolution, hard_pulse_unitary, selective_pulse_unitary, DeviationDensityMatrix, PulseAxis,
};
use crate::error::{Result, SpinError};
use crate::linalg::{pairwise_sum, CMatrix};
use crate::spin::{parse_label, EigenSystem, TransitionCatalog};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionRef {
    /// Catalog id (`t3`).
    Id(usize),
    /// Eigenstate labels (`(10,11)`).
    Pair(String, String),
    /// Cycle slot (`$K`).
    Slot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    Fixed(PulseAxis),
    Slot(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Seconds(f64),
    T1,
    T2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    SelPulse {
        transition: TransitionRef,
        angle_deg: f64,
        phase: PhaseSpec,
    },
    Pulse {
        angle_deg: f64,
        phase: PhaseSpec,
    },
    Grad,
    Delay(Delay),
    Acquire {
        points: usize,
        dwell: f64,
    },
}

/// Value a cycle row assigns to one slot.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotValue {
    Phase(PulseAxis),
    Transition(TransitionRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRow {
    pub values: Vec<SlotValue>,
    /// Receiver weight, +1 or −1.
    pub receiver: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCycle {
    pub slots: Vec<String>,
    pub rows: Vec<CycleRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub item: T,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseProgram {
    pub instructions: Vec<Located<Instruction>>,
    pub cycle: Option<PhaseCycle>,
}

// ---------------------------------------------------------------- parsing

fn perr(line: usize, col: usize, message: impl Into<String>) -> SpinError {
    SpinError::Parse {
        line,
        col,
        message: message.into(),
    }
}

/// Splits on whitespace, keeping a parenthesised group as one token.
fn tokenize(line: &str, lno: usize) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, ch)) = chars.peek() {
        if ch.is_whitespace() {
            chars.next();
            continue;
        }
        let mut tok = String::new();
        if ch == '(' {
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                if !c.is_whitespace() {
                    tok.push(c);
                }
                if c == ')' {
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(perr(lno, i + 1, "unclosed '('"));
            }
        } else {
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                tok.push(c);
                chars.next();
            }
        }
        out.push((i + 1, tok));
    }
    Ok(out)
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_transition_literal(tok: &str) -> Option<TransitionRef> {
    if let Some(num) = tok.strip_prefix('t') {
        return num.parse().ok().filter(|&v: &usize| v > 0).map(TransitionRef::Id);
    }
    let inner = tok.strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    let ok = |s: &str| !s.is_empty() && s.chars().all(|c| c == '0' || c == '1');
    (ok(a) && ok(b) && a.len() == b.len()).then(|| TransitionRef::Pair(a.into(), b.into()))
}

fn parse_angle(tok: &str, line: usize, col: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(perr(line, col, format!("invalid angle '{tok}'"))),
    }
}

fn parse_phase(tok: &str, line: usize, col: usize) -> Result<PhaseSpec> {
    if let Some(axis) = PulseAxis::parse(tok) {
        return Ok(PhaseSpec::Fixed(axis));
    }
    let name = tok.strip_prefix('$').unwrap_or(tok);
    if is_ident(name) {
        Ok(PhaseSpec::Slot(name.into()))
    } else {
        Err(perr(line, col, format!("invalid phase '{tok}'")))
    }
}

fn parse_row_value(tok: &str) -> Option<SlotValue> {
    if let Some(a) = PulseAxis::parse(tok) {
        return Some(SlotValue::Phase(a));
    }
    parse_transition_literal(tok).map(SlotValue::Transition)
}

impl PulseProgram {
    pub fn parse(text: &str) -> Result<Self> {
        let mut prog = PulseProgram::default();
        let mut cycle_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks = tokenize(content, line)?;
            let Some((kcol, key)) = toks.first().cloned() else {
                continue;
            };
            let arity = |want: usize| -> Result<()> {
                if toks.len() == want {
                    Ok(())
                } else if toks.len() < want {
                    Err(perr(
                        line,
                        content.trim_end().len() + 1,
                        format!("'{key}' expects {} operand(s)", want - 1),
                    ))
                } else {
                    Err(perr(line, toks[want].0, format!("unexpected token '{}'", toks[want].1)))
                }
            };
            let instr = match key.as_str() {
                "selpulse" => {
                    arity(4)?;
                    let (tc, tt) = &toks[1];
                    let transition = if let Some(slot) = tt.strip_prefix('$') {
                        if !is_ident(slot) {
                            return Err(perr(line, *tc, format!("invalid slot '{tt}'")));
                        }
                        TransitionRef::Slot(slot.into())
                    } else {
                        parse_transition_literal(tt)
                            .ok_or_else(|| perr(line, *tc, format!("invalid transition '{tt}'")))?
                    };
                    Instruction::SelPulse {
                        transition,
                        angle_deg: parse_angle(&toks[2].1, line, toks[2].0)?,
                        phase: parse_phase(&toks[3].1, line, toks[3].0)?,
                    }
                }
                "pulse" => {
                    arity(3)?;
                    Instruction::Pulse {
                        angle_deg: parse_angle(&toks[1].1, line, toks[1].0)?,
                        phase: parse_phase(&toks[2].1, line, toks[2].0)?,
                    }
                }
                "grad" => {
                    arity(1)?;
                    Instruction::Grad
                }
                "delay" => {
                    arity(2)?;
                    let (c, t) = &toks[1];
                    Instruction::Delay(match t.as_str() {
                        "t1" => Delay::T1,
                        "t2" => Delay::T2,
                        _ => match t.parse::<f64>() {
                            Ok(v) if v.is_finite() && v >= 0.0 => Delay::Seconds(v),
                            _ => return Err(perr(line, *c, format!("invalid delay '{t}'"))),
                        },
                    })
                }
                "acquire" => {
                    arity(3)?;
                    let points = toks[1]
                        .1
                        .parse::<usize>()
                        .ok()
                        .filter(|&p| p > 0)
                        .ok_or_else(|| perr(line, toks[1].0, format!("invalid point count '{}'", toks[1].1)))?;
                    let dwell = toks[2]
                        .1
                        .parse::<f64>()
                        .ok()
                        .filter(|d| d.is_finite() && *d > 0.0)
                        .ok_or_else(|| perr(line, toks[2].0, format!("invalid dwell '{}'", toks[2].1)))?;
                    Instruction::Acquire { points, dwell }
                }
                "cycle" => {
                    if prog.cycle.is_some() {
                        return Err(perr(line, kcol, "duplicate 'cycle'"));
                    }
                    if toks.len() < 2 {
                        return Err(perr(line, kcol, "'cycle' needs at least one slot"));
                    }
                    let mut slots = Vec::new();
                    for (c, t) in &toks[1..] {
                        let name = t.strip_prefix('$').unwrap_or(t);
                        if !is_ident(name) || PulseAxis::parse(name).is_some() {
                            return Err(perr(line, *c, format!("invalid slot name '{t}'")));
                        }
                        if slots.iter().any(|s| s == name) {
                            return Err(perr(line, *c, format!("duplicate slot '{name}'")));
                        }
                        slots.push(name.to_string());
                    }
                    prog.cycle = Some(PhaseCycle {
                        slots,
                        rows: Vec::new(),
                    });
                    cycle_line = line;
                    continue;
                }
                "row" => {
                    let cyc = prog
                        .cycle
                        .as_mut()
                        .ok_or_else(|| perr(line, kcol, "'row' before 'cycle'"))?;
                    let mut vals = &toks[1..];
                    let mut receiver = 1.0;
                    if let Some((_, last)) = vals.last() {
                        if last == "+" || last == "-" {
                            receiver = if last == "-" { -1.0 } else { 1.0 };
                            vals = &vals[..vals.len() - 1];
                        }
                    }
                    if vals.len() != cyc.slots.len() {
                        return Err(perr(
                            line,
                            kcol,
                            format!("row has {} values, cycle has {} slots", vals.len(), cyc.slots.len()),
                        ));
                    }
                    let values = vals
                        .iter()
                        .map(|(c, t)| {
                            parse_row_value(t).ok_or_else(|| perr(line, *c, format!("invalid row value '{t}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    cyc.rows.push(CycleRow { values, receiver });
                    continue;
                }
                other => return Err(perr(line, kcol, format!("unknown instruction '{other}'"))),
            };
            prog.instructions.push(Located {
                item: instr,
                line,
                col: kcol,
            });
        }
        if let Some(c) = &prog.cycle {
            if c.rows.is_empty() {
                return Err(perr(cycle_line, 1, "cycle has no rows"));
            }
        }
        prog.check_slots()?;
        Ok(prog)
    }

    fn check_slots(&self) -> Result<()> {
        let slots: &[String] = self.cycle.as_ref().map(|c| c.slots.as_slice()).unwrap_or(&[]);
        for ins in &self.instructions {
            let (name, want_phase) = match &ins.item {
                Instruction::SelPulse {
                    transition: TransitionRef::Slot(s),
                    ..
                } => (s, false),
                Instruction::SelPulse {
                    phase: PhaseSpec::Slot(s),
                    ..
                }
                | Instruction::Pulse {
                    phase: PhaseSpec::Slot(s),
                    ..
                } => (s, true),
                _ => continue,
            };
            let Some(k) = slots.iter().position(|s| s == name) else {
                return Err(perr(
                    ins.line,
                    ins.col,
                    format!("slot '{name}' is not defined by a cycle"),
                ));
            };
            let rows = &self.cycle.as_ref().expect("slot implies cycle").rows;
            for row in rows {
                let ok = matches!(
                    (&row.values[k], want_phase),
                    (SlotValue::Phase(_), true) | (SlotValue::Transition(_), false)
                );
                if !ok {
                    let kind = if want_phase { "phase" } else { "transition" };
                    return Err(perr(
                        ins.line,
                        ins.col,
                        format!("slot '{name}' needs a {kind} in every row"),
                    ));
                }
            }
            // A selpulse with both a transition slot and a phase slot
            if let Instruction::SelPulse {
                transition: TransitionRef::Slot(_),
                phase: PhaseSpec::Slot(p),
                ..
            } = &ins.item
            {
                let Some(k) = slots.iter().position(|s| s == p) else {
                    return Err(perr(ins.line, ins.col, format!("slot '{p}' is not defined by a cycle")));
                };
                if rows.iter().any(|r| !matches!(r.values[k], SlotValue::Phase(_))) {
                    return Err(perr(
                        ins.line,
                        ins.col,
                        format!("slot '{p}' needs a phase in every row"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.cycle.as_ref().map_or(1, |c| c.rows.len())
    }
}

impl fmt::Display for TransitionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionRef::Id(k) => write!(f, "t{k}"),
            TransitionRef::Pair(a, b) => write!(f, "({a},{b})"),
            TransitionRef::Slot(s) => write!(f, "${s}"),
        }
    }
}

impl fmt::Display for PhaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSpec::Fixed(a) => write!(f, "{a}"),
            PhaseSpec::Slot(s) => write!(f, "${s}"),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::SelPulse {
                transition,
                angle_deg,
                phase,
            } => {
                write!(f, "selpulse {transition} {angle_deg} {phase}")
            }
            Instruction::Pulse { angle_deg, phase } => write!(f, "pulse {angle_deg} {phase}"),
            Instruction::Grad => f.write_str("grad"),
            Instruction::Delay(Delay::Seconds(s)) => write!(f, "delay {s}"),
            Instruction::Delay(Delay::T1) => f.write_str("delay t1"),
            Instruction::Delay(Delay::T2) => f.write_str("delay t2"),
            Instruction::Acquire { points, dwell } => write!(f, "acquire {points} {dwell}"),
        }
    }
}

impl fmt::Display for PulseProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instructions {
            writeln!(f, "{}", ins.item)?;
        }
        if let Some(c) = &self.cycle {
            let names: Vec<String> = c.slots.iter().map(|s| format!("${s}")).collect();
            writeln!(f, "cycle {}", names.join(" "))?;
            for row in &c.rows {
                let vals: Vec<String> = row
                    .values
                    .iter()
                    .map(|v| match v {
                        SlotValue::Phase(a) => a.to_string(),
                        SlotValue::Transition(t) => t.to_string(),
                    })
                    .collect();
                let rx = if row.receiver < 0.0 { " -" } else { "" };
                writeln!(f, "row {}{rx}", vals.join(" "))?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- compiling

/// One executable step.
#[derive(Debug, Clone)]
pub enum Op {
    Unitary(CMatrix),
    Crush,
    Evolve(f64),
    Symbolic(Delay),
    Acquire { points: usize, dwell: f64 },
}

#[derive(Debug, Clone)]
pub struct CompiledRow {
    pub ops: Vec<Op>,
    pub receiver: f64,
}

#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub rows: Vec<CompiledRow>,
    /// Transitions touched by the program: (reference as written, eigenstate pair, catalog id).
    pub resolved: Vec<(String, (usize, usize), usize)>,
}

fn located(ins: &Located<Instruction>, what: &str) -> String {
    format!("{what} at {}:{}", ins.line, ins.col)
}

fn resolve_transition(
    tref: &TransitionRef,
    es: &EigenSystem,
    cat: &TransitionCatalog,
    ins: &Located<Instruction>,
) -> Result<(usize, usize, usize)> {
    match tref {
        TransitionRef::Id(k) => cat
            .get(*k)
            .map(|t| (t.lower, t.upper, t.id))
            .ok_or_else(|| SpinError::UnknownTransition(located(ins, &tref.to_string()))),
        TransitionRef::Pair(a, b) => {
            let (Some(ia), Some(ib)) = (parse_label(a, es.n), parse_label(b, es.n)) else {
                return Err(SpinError::UnknownTransition(located(ins, &tref.to_string())));
            };
            match cat.find_pair(ia, ib) {
                Some(t) => Ok((t.lower, t.upper, t.id)),
                None => Err(SpinError::NotSingleQuantum(located(ins, &tref.to_string()))),
            }
        }
        TransitionRef::Slot(s) => Err(SpinError::UnknownTransition(located(ins, &format!("${s}")))),
    }
}

/// Resolves transitions and cycle slots into explicit unitaries, one op list
/// per cycle row.
pub fn compile(prog: &PulseProgram, es: &EigenSystem, cat: &TransitionCatalog) -> Result<CompiledProgram> {
    let default_row = CycleRow {
        values: Vec::new(),
        receiver: 1.0,
    };
    let (slots, rows): (&[String], Vec<&CycleRow>) = match &prog.cycle {
        Some(c) => (&c.slots, c.rows.iter().collect()),
        None => (&[], vec![&default_row]),
    };
    let lookup = |row: &CycleRow, name: &str| -> Option<SlotValue> {
        slots.iter().position(|s| s == name).map(|k| row.values[k].clone())
    };
    let mut resolved: Vec<(String, (usize, usize), usize)> = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut ops = Vec::with_capacity(prog.instructions.len());
        for ins in &prog.instructions {
            let phase_of = |p: &PhaseSpec| -> Result<f64> {
                match p {
                    PhaseSpec::Fixed(a) => Ok(a.degrees()),
                    PhaseSpec::Slot(s) => match lookup(row, s) {
                        Some(SlotValue::Phase(a)) => Ok(a.degrees()),
                        _ => Err(perr(ins.line, ins.col, format!("slot '{s}' has no phase value"))),
                    },
                }
            };
            let op = match &ins.item {
                Instruction::SelPulse {
                    transition,
                    angle_deg,
                    phase,
                } => {
                    let tref = match transition {
                        TransitionRef::Slot(s) => match lookup(row, s) {
                            Some(SlotValue::Transition(t)) => t,
                            _ => return Err(perr(ins.line, ins.col, format!("slot '{s}' has no transition value"))),
                        },
                        t => t.clone(),
                    };
                    let (r, s, id) = resolve_transition(&tref, es, cat, ins)?;
                    let key = tref.to_string();
                    if !resolved.iter().any(|(k, _, _)| *k == key) {
                        resolved.push((key, (r, s), id));
                    }
                    Op::Unitary(selective_pulse_unitary(es, r, s, *angle_deg, phase_of(phase)?)?)
                }
                Instruction::Pulse { angle_deg, phase } => {
                    Op::Unitary(hard_pulse_unitary(es, *angle_deg, phase_of(phase)?))
                }
                Instruction::Grad => Op::Crush,
                Instruction::Delay(Delay::Seconds(t)) => Op::Evolve(*t),
                Instruction::Delay(d) => Op::Symbolic(*d),
                Instruction::Acquire { points, dwell } => Op::Acquire {
                    points: *points,
                    dwell: *dwell,
                },
            };
            ops.push(op);
        }
        out.push(CompiledRow {
            ops,
            receiver: row.receiver,
        });
    }
    Ok(CompiledProgram { rows: out, resolved })
}

/// Values substituted for the symbolic delays `t1` / `t2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Delays {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
}

impl CompiledRow {
    /// Applies the row to `rho`. `acquire` leaves the state untouched.
    pub fn run(
        &self,
        es: &EigenSystem,
        rho: &DeviationDensityMatrix,
        delays: Delays,
    ) -> Result<DeviationDensityMatrix> {
        let mut cur = rho.clone();
        for op in &self.ops {
            cur = match op {
                Op::Unitary(u) => cur.apply(u),
                Op::Crush => crush_gradient(&cur),
                Op::Evolve(t) => free_evolution(es, &cur, *t),
                Op::Symbolic(Delay::T1) => free_evolution(
                    es,
                    &cur,
                    delays.t1.ok_or_else(|| SpinError::UnresolvedDelay("t1".into()))?,
                ),
                Op::Symbolic(Delay::T2) => free_evolution(
                    es,
                    &cur,
                    delays.t2.ok_or_else(|| SpinError::UnresolvedDelay("t2".into()))?,
                ),
                Op::Symbolic(Delay::Seconds(t)) => free_evolution(es, &cur, *t),
                Op::Acquire { .. } => cur,
            };
        }
        Ok(cur)
    }

    /// Product of the row's pulses in application order, if the row holds
    /// nothing but pulses.
    pub fn unitary(&self, dim: usize) -> Option<CMatrix> {
        let mut u = CMatrix::identity(dim);
        for op in &self.ops {
            match op {
                Op::Unitary(p) => u = p.matmul(&u),
                _ => return None,
            }
        }
        Some(u)
    }
}

impl CompiledProgram {
    /// Runs the first row (the whole program when there is no cycle).
    pub fn execute(
        &self,
        es: &EigenSystem,
        rho: &DeviationDensityMatrix,
        delays: Delays,
    ) -> Result<DeviationDensityMatrix> {
        self.rows[0].run(es, rho, delays)
    }

    /// Receiver-weighted average over every cycle row, summed pairwise.
    pub fn execute_cycled(
        &self,
        es: &EigenSystem,
        rho: &DeviationDensityMatrix,
        delays: Delays,
    ) -> Result<DeviationDensityMatrix> {
        let parts = self
            .rows
            .iter()
            .map(|row| Ok(row.run(es, rho, delays)?.mat.scale_real(row.receiver)))
            .collect::<Result<Vec<_>>>()?;
        let sum = pairwise_sum(&parts).expect("at least one row");
        Ok(DeviationDensityMatrix::from_matrix(
            sum.scale_real(1.0 / parts.len() as f64),
        ))
    }

    /// The `acquire` instruction, if any.
    pub fn acquisition(&self) -> Option<(usize, f64)> {
        self.rows[0].ops.iter().find_map(|op| match op {
            Op::Acquire { points, dwell } => Some((*points, *dwell)),
            _ => None,
        })
    }
}

/// Compiles `prog` and runs its first row on `rho0`.
pub fn execute(
    prog: &PulseProgram,
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho0: &DeviationDensityMatrix,
) -> Result<DeviationDensityMatrix> {
    compile(prog, es, cat)?.execute(es, rho0, Delays::default())
}

/// Compiles `prog` and runs every cycle row, averaging with receiver weights.
pub fn execute_cycled(
    prog: &PulseProgram,
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho0: &DeviationDensityMatrix,
) -> Result<DeviationDensityMatrix> {
    compile(prog, es, cat)?.execute_cycled(es, rho0, Delays::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::equilibrium_deviation;
    use crate::spin::{eigensystem, transition_catalog, SpinSystem, DEFAULT_THRESHOLD};

    fn citrate() -> (EigenSystem, TransitionCatalog) {
        let es = eigensystem(&SpinSystem::new("c", vec![27.75, -27.75]).with_j(0, 1, 15.0), false).unwrap();
        let cat = transition_catalog(&es, DEFAULT_THRESHOLD);
        (es, cat)
    }

    #[test]
    fn parses_single_selpulse() {
        let p = PulseProgram::parse("selpulse t3 90 x\n").unwrap();
        assert_eq!(
            p.instructions[0].item,
            Instruction::SelPulse {
                transition: TransitionRef::Id(3),
                angle_deg: 90.0,
                phase: PhaseSpec::Fixed(PulseAxis::X)
            }
        );
    }

    #[test]
    fn malformed_angle_reports_column() {
        match PulseProgram::parse("selpulse t3 ninety x") {
            Err(SpinError::Parse { line, col, message }) => {
                assert_eq!((line, col), (1, 13));
                assert!(message.contains("ninety"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undefined_slot_rejected() {
        let e = PulseProgram::parse("selpulse t1 90 P1\n").unwrap_err();
        assert!(e.to_string().contains("not defined"), "{e}");
        let e = PulseProgram::parse("selpulse $K 90 x\ncycle K\nrow x\n").unwrap_err();
        assert!(e.to_string().contains("transition"), "{e}");
    }

    #[test]
    fn round_trip_print() {
        let text = "selpulse (00,10) 90 P1 # c\n\nselpulse $K 180 $P2\npulse 70.52877936550931 deg:12.5\ngrad\ndelay t1\ndelay 0.001\nacquire 1024 0.0005\ncycle P1 P2 K\nrow x -x t1\nrow y -y (00,01) -\n";
        let p = PulseProgram::parse(text).unwrap();
        let printed = p.to_string();
        let q = PulseProgram::parse(&printed).unwrap();
        assert_eq!(q.to_string(), printed);
        assert_eq!(q.cycle, p.cycle);
        let strip = |p: &PulseProgram| p.instructions.iter().map(|i| i.item.clone()).collect::<Vec<_>>();
        assert_eq!(strip(&p), strip(&q));
    }

    #[test]
    fn empty_program_is_identity() {
        let (es, cat) = citrate();
        let rho = equilibrium_deviation(&es);
        let p = PulseProgram::parse("# nothing\n").unwrap();
        assert_eq!(execute(&p, &es, &cat, &rho).unwrap(), rho);
    }

    #[test]
    fn unknown_transition_and_unresolved_delay() {
        let (es, cat) = citrate();
        let p = PulseProgram::parse("grad\nselpulse t9 90 x\n").unwrap();
        let e = compile(&p, &es, &cat).unwrap_err();
        assert_eq!(e.to_string(), "unknown transition t9 at 2:1");
        let p = PulseProgram::parse("selpulse (00,11) 90 x\n").unwrap();
        assert!(matches!(compile(&p, &es, &cat), Err(SpinError::NotSingleQuantum(_))));
        let p = PulseProgram::parse("delay t1\n").unwrap();
        let rho = equilibrium_deviation(&es);
        assert_eq!(
            execute(&p, &es, &cat, &rho).unwrap_err(),
            SpinError::UnresolvedDelay("t1".into())
        );
    }

    #[test]
    fn identical_rows_equal_single_execution() {
        let (es, cat) = citrate();
        let rho = equilibrium_deviation(&es).apply(&hard_pulse_unitary(&es, 30.0, 10.0));
        let single = PulseProgram::parse("selpulse (00,10) 90 y\nselpulse t2 45 -x\n").unwrap();
        let cycled =
            PulseProgram::parse("selpulse (00,10) 90 P\nselpulse t2 45 Q\ncycle P Q\nrow y -x\nrow y -x\nrow y -x\n")
                .unwrap();
        let a = execute(&single, &es, &cat, &rho).unwrap();
        let b = execute_cycled(&cycled, &es, &cat, &rho).unwrap();
        assert!(a.mat.max_abs_diff(&b.mat) < 1e-15);
    }

    #[test]
    fn receiver_minus_cancels() {
        let (es, cat) = citrate();
        let rho = equilibrium_deviation(&es);
        let p = PulseProgram::parse("pulse 90 P\ncycle P\nrow x\nrow x -\n").unwrap();
        let out = execute_cycled(&p, &es, &cat, &rho).unwrap();
        assert!(out.mat.max_abs() < 1e-15);
    }
}
