//! Canned experiments: pseudopure states, POPS, Deutsch–Jozsa, EPR, GHZ and
//! permutation gates. Every protocol is expressed as a pulse program that is
//! compiled and executed through [`crate::pulse_lang`], so the emitted `.pp`
//! file reproduces the reported final state.
//!
//! Transitions are named by eigenstate label pairs and resolved against the
//! catalog; the resolved ids are reported as `transition (a,b)` metrics.

use crate::acquisition::{coherence_lines, default_dwell, Dataset2D};
use crate::dynamics::{
    basis_state, coherence_amplitudes, equilibrium_deviation, pseudopure_matrix, pure_part, reduce_to_qubit,
    signed_overlap, DeviationDensityMatrix,
};
use crate::error::{Result, SpinError};
use crate::format::g12;
use crate::linalg::{pseudo_inverse, CMatrix, C64, ONE, ZERO};
use crate::pulse_lang::{compile, CompiledProgram, Delays, PulseProgram};
use crate::spin::{EigenSystem, Transition, TransitionCatalog};
use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Num(x) => f.write_str(&g12(*x)),
            Metric::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub name: String,
    pub program: PulseProgram,
    pub initial_state: DeviationDensityMatrix,
    pub final_state: DeviationDensityMatrix,
    pub metrics: Vec<(String, Metric)>,
}

impl ProtocolReport {
    fn new(name: &str, program: PulseProgram, initial: DeviationDensityMatrix, fin: DeviationDensityMatrix) -> Self {
        ProtocolReport {
            name: name.into(),
            program,
            initial_state: initial,
            final_state: fin,
            metrics: Vec::new(),
        }
    }

    fn num(&mut self, key: &str, v: f64) {
        self.metrics.push((key.into(), Metric::Num(v)));
    }

    fn text(&mut self, key: &str, v: impl Into<String>) {
        self.metrics.push((key.into(), Metric::Text(v.into())));
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find_map(|(k, v)| match v {
            Metric::Num(x) if k == key => Some(*x),
            _ => None,
        })
    }

    pub fn text_metric(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find_map(|(k, v)| match v {
            Metric::Text(s) if k == key => Some(s.as_str()),
            _ => None,
        })
    }

    /// `key=value` lines.
    pub fn report_text(&self) -> String {
        let mut s = format!("name={}\n", self.name);
        for (k, v) in &self.metrics {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    /// Writes `<name>.pp`, `<name>.state` and `<name>.report` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.pp", self.name)), self.program.to_string())?;
        std::fs::write(dir.join(format!("{}.state", self.name)), self.final_state.to_text())?;
        std::fs::write(dir.join(format!("{}.report", self.name)), self.report_text())
    }

    fn record_transitions(&mut self, compiled: &CompiledProgram) {
        for (key, _, id) in &compiled.resolved {
            self.num(&format!("transition {key}"), *id as f64);
        }
    }
}

/// Catalog entry joining two labelled eigenstates.
pub fn resolve_pair<'a>(es: &EigenSystem, cat: &'a TransitionCatalog, a: &str, b: &str) -> Result<&'a Transition> {
    let name = || format!("({a},{b})");
    let (Some(ka), Some(kb)) = (es.index_of_label(a), es.index_of_label(b)) else {
        return Err(SpinError::UnknownTransition(name()));
    };
    cat.find_pair(ka, kb).ok_or_else(|| SpinError::NotSingleQuantum(name()))
}

fn require_observable(es: &EigenSystem, cat: &TransitionCatalog, a: &str, b: &str) -> Result<usize> {
    let t = resolve_pair(es, cat, a, b)?;
    if !t.observable {
        return Err(SpinError::Unobservable(format!("({a},{b}) = t{}", t.id)));
    }
    Ok(t.id)
}

fn require_n(es: &EigenSystem, n: usize) -> Result<()> {
    if es.n != n {
        return Err(SpinError::Precondition(format!("a {n}-spin system, got n = {}", es.n)));
    }
    Ok(())
}

fn run(
    text: &str,
    es: &EigenSystem,
    cat: &TransitionCatalog,
    initial: &DeviationDensityMatrix,
) -> Result<(PulseProgram, CompiledProgram, DeviationDensityMatrix)> {
    let prog = PulseProgram::parse(text)?;
    let compiled = compile(&prog, es, cat)?;
    let fin = compiled.execute_cycled(es, initial, Delays::default())?;
    Ok((prog, compiled, fin))
}

fn label_index(es: &EigenSystem, label: &str) -> Result<usize> {
    es.index_of_label(label)
        .ok_or_else(|| SpinError::UnknownTransition(label.into()))
}

/// Flip angle that leaves 2/3 of the population in place: cos²(θ/2) = 2/3.
pub fn pps_flip_angle_deg() -> f64 {
    2.0 * (2.0f64 / 3.0).sqrt().acos().to_degrees()
}

/// Two-spin pseudopure preparation from equilibrium.
///
/// |00⟩, |01⟩ and |10⟩ leave an excess on the target; the mirrored |11⟩
/// sequence leaves a deficit there instead (`pps_sign` = −1).
pub fn pseudopure_2spin(es: &EigenSystem, cat: &TransitionCatalog, target: &str) -> Result<ProtocolReport> {
    require_n(es, 2)?;
    let th = pps_flip_angle_deg();
    let text = match target {
        "00" | "01" | "10" => {
            let mut t = format!("selpulse (10,11) {th} x\ngrad\nselpulse (01,11) 90 x\ngrad\n");
            match target {
                "01" => t.push_str("selpulse (00,01) 180 x\n"),
                "10" => t.push_str("selpulse (00,10) 180 x\n"),
                _ => {}
            }
            t
        }
        "11" => format!("selpulse (00,01) {th} x\ngrad\nselpulse (00,10) 90 x\ngrad\n"),
        other => {
            return Err(SpinError::Precondition(format!(
                "a two-bit target label, got '{other}'"
            )))
        }
    };
    let eq = equilibrium_deviation(es);
    let (prog, compiled, fin) = run(&text, es, cat, &eq)?;
    let k = label_index(es, target)?;
    let overlap = signed_overlap(&fin, &basis_state(4, k));
    let p = fin.populations();
    let others: Vec<f64> = (0..4).filter(|&j| j != k).map(|j| p[j]).collect();
    let spread = others.iter().cloned().fold(f64::MIN, f64::max) - others.iter().cloned().fold(f64::MAX, f64::min);
    let mut rep = ProtocolReport::new(&format!("pps{target}"), prog, eq, fin);
    rep.record_transitions(&compiled);
    rep.num("pps_fidelity", overlap.abs());
    rep.num("pps_sign", overlap.signum());
    rep.num("target_population", p[k]);
    rep.num("others_spread", spread);
    Ok(rep)
}

/// Equilibrium minus equilibrium-with-one-transition-inverted.
pub fn pops_pair(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    a: &str,
    b: &str,
) -> Result<(ProtocolReport, DeviationDensityMatrix, DeviationDensityMatrix)> {
    let id = require_observable(es, cat, a, b)?;
    let text = format!("selpulse ({a},{b}) 180 x\n");
    let eq = equilibrium_deviation(es);
    let (prog, compiled, inverted) = run(&text, es, cat, &eq)?;
    let diff = DeviationDensityMatrix::from_matrix(&eq.mat - &inverted.mat);
    let t = cat.get(id).expect("resolved");
    let dp = eq.populations()[t.lower] - eq.populations()[t.upper];
    let mut ideal = CMatrix::zeros(es.dim(), es.dim());
    ideal[(t.lower, t.lower)] = C64::new(dp, 0.0);
    ideal[(t.upper, t.upper)] = C64::new(-dp, 0.0);
    let mut rep = ProtocolReport::new(&format!("pops{id}"), prog, eq.clone(), diff.clone());
    rep.record_transitions(&compiled);
    rep.num("population_difference", dp);
    rep.num("pair_error", diff.mat.max_abs_diff(&ideal));
    Ok((rep, eq, inverted))
}

// ---------------------------------------------------------------- DJ

/// Transition pairs of the one-qubit DJ functions f1..f4 (first label bit
/// is the input qubit, second the work qubit).
fn dj1_pulses(f: usize) -> Result<&'static [(&'static str, &'static str)]> {
    Ok(match f {
        1 => &[],
        2 => &[("00", "01"), ("10", "11")],
        3 => &[("10", "11")],
        4 => &[("00", "01")],
        _ => return Err(SpinError::Precondition(format!("a one-qubit function 1..=4, got f{f}"))),
    })
}

/// One-qubit Deutsch–Jozsa on the |00⟩ pseudopure state: (π/2)_−y, U_f as
/// selective π_y pulses, then detection of the two input-qubit lines.
pub fn dj_one_qubit(es: &EigenSystem, cat: &TransitionCatalog, f: usize) -> Result<ProtocolReport> {
    require_n(es, 2)?;
    let pulses = dj1_pulses(f)?;
    let pps = pseudopure_2spin(es, cat, "00")?.final_state;
    let mut text = String::from("pulse 90 -y\n");
    for (a, b) in pulses {
        text.push_str(&format!("selpulse ({a},{b}) 180 y\n"));
    }
    let (prog, compiled, fin) = run(&text, es, cat, &pps)?;
    let lines = coherence_lines(es, cat, &fin);
    let amp = |a: &str, b: &str| -> Result<C64> {
        let t = resolve_pair(es, cat, a, b)?;
        Ok(lines[cat.entries.iter().position(|e| e.id == t.id).expect("entry")])
    };
    let a1 = amp("00", "10")?;
    let a2 = amp("01", "11")?;
    let constant = (a1 * a2.conj()).re > 0.0;
    let mut rep = ProtocolReport::new(&format!("dj1_f{f}"), prog, pps, fin);
    rep.record_transitions(&compiled);
    rep.num("input_line_a_re", a1.re);
    rep.num("input_line_a_im", a1.im);
    rep.num("input_line_b_re", a2.re);
    rep.num("input_line_b_im", a2.im);
    rep.text("verdict", if constant { "constant" } else { "balanced" });
    Ok(rep)
}

/// Work-qubit transition patterns of the two-qubit functions f1..f8.
pub fn dj2_pattern(f: usize) -> Result<[bool; 4]> {
    const P: [[u8; 4]; 8] = [
        [0, 0, 0, 0],
        [1, 1, 1, 1],
        [0, 0, 1, 1],
        [1, 1, 0, 0],
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [1, 0, 0, 1],
        [0, 1, 1, 0],
    ];
    if !(1..=8).contains(&f) {
        return Err(SpinError::Precondition(format!("a two-qubit function 1..=8, got f{f}")));
    }
    Ok(P[f - 1].map(|x| x == 1))
}

/// Transition assignment for the two-qubit DJ experiment.
#[derive(Debug, Clone)]
pub struct Dj2Config {
    /// Work-qubit transitions in pattern order.
    pub work: [(String, String); 4],
    /// Input-qubit transitions whose coherence is tracked; each entry's
    /// partner is the same pair with the work bit flipped.
    pub inputs: [(String, String); 4],
    pub t1_points: usize,
    pub t2_points: usize,
}

fn pairs<const N: usize>(p: [(&str, &str); N]) -> [(String, String); N] {
    p.map(|(a, b)| (a.to_string(), b.to_string()))
}

impl Default for Dj2Config {
    fn default() -> Self {
        Dj2Config {
            work: pairs([("110", "111"), ("010", "011"), ("100", "101"), ("000", "001")]),
            inputs: pairs([("000", "010"), ("001", "011"), ("010", "110"), ("011", "111")]),
            t1_points: 128,
            t2_points: 512,
        }
    }
}

fn flip_bit(label: &str, bit: usize) -> String {
    label
        .chars()
        .enumerate()
        .map(|(i, c)| {
            if i == bit {
                if c == '0' {
                    '1'
                } else {
                    '0'
                }
            } else {
                c
            }
        })
        .collect()
}

fn differing_bit(a: &str, b: &str) -> Option<usize> {
    let diff: Vec<usize> = a
        .chars()
        .zip(b.chars())
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(i, _)| i)
        .collect();
    (diff.len() == 1).then(|| diff[0])
}

struct Dj2Run {
    program: PulseProgram,
    compiled: CompiledProgram,
    dataset: Dataset2D,
    /// Peak amplitudes: rows t1 line, columns t2 line (catalog order).
    peaks: CMatrix,
    state: DeviationDensityMatrix,
}

fn dj2_run(es: &EigenSystem, cat: &TransitionCatalog, cfg: &Dj2Config, pattern: [bool; 4]) -> Result<Dj2Run> {
    let dwell = default_dwell(es);
    let mut text = String::from("pulse 90 y\ndelay t1\n");
    for ((a, b), on) in cfg.work.iter().zip(pattern) {
        if on {
            text.push_str(&format!("selpulse ({a},{b}) 180 x\n"));
        }
    }
    text.push_str(&format!("acquire {} {}\n", cfg.t2_points, dwell));
    let program = PulseProgram::parse(&text)?;
    let compiled = compile(&program, es, cat)?;
    let eq = equilibrium_deviation(es);
    let (n1, n2) = (cfg.t1_points, cfg.t2_points);
    let mut data = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let delays = Delays {
            t1: Some(i as f64 * dwell),
            t2: None,
        };
        let rho = compiled.execute(es, &eq, delays)?;
        data.extend(crate::acquisition::acquire_fid(es, &rho, n2, dwell)?);
    }
    let state = compiled.execute(
        es,
        &eq,
        Delays {
            t1: Some(0.0),
            t2: None,
        },
    )?;
    let dataset = Dataset2D {
        t1_points: n1,
        t2_points: n2,
        dwell1: dwell,
        dwell2: dwell,
        data,
    };
    let tau = 2.0 * std::f64::consts::PI;
    let a1 = CMatrix::from_fn(n1, cat.len(), |i, l| {
        C64::from_polar(1.0, tau * cat.entries[l].freq_hz * i as f64 * dwell)
    });
    let a2 = CMatrix::from_fn(n2, cat.len(), |m, l| {
        C64::from_polar(1.0, tau * cat.entries[l].freq_hz * m as f64 * dwell)
    });
    let (p1, _) = pseudo_inverse(&a1, 1e-12);
    let (p2, _) = pseudo_inverse(&a2, 1e-12);
    let s = CMatrix::from_vec(n1, n2, dataset.data.clone());
    let peaks = p1.matmul(&s).matmul(&p2.transpose());
    Ok(Dj2Run {
        program,
        compiled,
        dataset,
        peaks,
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceFate {
    Stay,
    Move,
    Lost,
}

/// Two-qubit Deutsch–Jozsa read out in two dimensions:
/// (π/2) − t1 − U_f − acquire(t2), starting from equilibrium.
///
/// Each tracked input-qubit coherence either stays on its transition, moves
/// to the partner transition, or is converted into unobservable coherence.
/// The function is constant iff all stay or all move.
pub fn dj_two_qubit_2d(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    f: usize,
    cfg: &Dj2Config,
) -> Result<(ProtocolReport, Dataset2D)> {
    require_n(es, 3)?;
    let pattern = dj2_pattern(f)?;
    let work_bit = differing_bit(&cfg.work[0].0, &cfg.work[0].1)
        .ok_or_else(|| SpinError::NotSingleQuantum(format!("({},{})", cfg.work[0].0, cfg.work[0].1)))?;
    for (a, b) in &cfg.work {
        resolve_pair(es, cat, a, b)?;
        if differing_bit(a, b) != Some(work_bit) {
            return Err(SpinError::Precondition(format!(
                "work transitions that all flip the same qubit; ({a},{b}) does not"
            )));
        }
    }
    let index_of = |a: &str, b: &str| -> Result<usize> {
        let t = resolve_pair(es, cat, a, b)?;
        Ok(cat.entries.iter().position(|e| e.id == t.id).expect("entry"))
    };
    let fm = es.lowering();
    let weight = |idx: usize| fm[(cat.entries[idx].upper, cat.entries[idx].lower)].norm();

    let run = dj2_run(es, cat, cfg, pattern)?;
    let reference = if pattern == [false; 4] {
        None
    } else {
        Some(dj2_run(es, cat, cfg, [false; 4])?)
    };
    let ref_peaks = reference.as_ref().map_or(&run.peaks, |r| &r.peaks);

    let mut fates = Vec::new();
    let mut details = Vec::new();
    for (a, b) in &cfg.inputs {
        let ia = index_of(a, b)?;
        let ip = index_of(&flip_bit(a, work_bit), &flip_bit(b, work_bit))?;
        let w_ref = ref_peaks[(ia, ia)].norm() / weight(ia);
        let w_stay = run.peaks[(ia, ia)].norm() / weight(ia);
        let w_move = run.peaks[(ia, ip)].norm() / weight(ip);
        let fate = if w_stay > 0.5 * w_ref {
            CoherenceFate::Stay
        } else if w_move > 0.5 * w_ref {
            CoherenceFate::Move
        } else {
            CoherenceFate::Lost
        };
        details.push(format!(
            "({a},{b}):{}",
            match fate {
                CoherenceFate::Stay => "stay",
                CoherenceFate::Move => "move",
                CoherenceFate::Lost => "lost",
            }
        ));
        fates.push(fate);
    }
    let constant = fates.iter().all(|&x| x == CoherenceFate::Stay) || fates.iter().all(|&x| x == CoherenceFate::Move);
    let eq = equilibrium_deviation(es);
    let mut rep = ProtocolReport::new(&format!("dj2_f{f}"), run.program, eq, run.state);
    rep.record_transitions(&run.compiled);
    rep.text("pattern", pattern.map(|b| if b { "pi" } else { "0" }).join(","));
    rep.text("input_coherences", details.join(" "));
    rep.text("verdict", if constant { "constant" } else { "balanced" });
    Ok((rep, run.dataset))
}

// ---------------------------------------------------------------- entanglement

/// Label pairs of the 2-spin transitions numbered 1..4 in the qubit-labelled
/// level diagram (1: 01-11, 2: 00-10, 3: 10-11, 4: 00-01).
pub const TWO_SPIN_DIAGRAM_TRANSITIONS: [(&str, &str); 4] = [("01", "11"), ("00", "10"), ("10", "11"), ("00", "01")];

fn epr_program_text() -> String {
    let t = |k: usize| {
        let (a, b) = TWO_SPIN_DIAGRAM_TRANSITIONS[k - 1];
        format!("({a},{b})")
    };
    let mut s = String::from("selpulse $K 90 P1\nselpulse $L 180 P2\ncycle K L P1 P2\n");
    for (k, l) in [(2, 3), (4, 1)] {
        for (p1, p2) in [("x", "-x"), ("-x", "x"), ("y", "y"), ("-y", "-y")] {
            s.push_str(&format!("row {} {} {p1} {p2}\n", t(k), t(l)));
        }
    }
    s
}

/// Bell-state target vector (|00⟩ + |11⟩)/√2 in the label basis.
pub fn epr_vector() -> Vec<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    vec![h, ZERO, ZERO, h]
}

/// The 4×4 matrix of the two-pulse sequence (π/2)_x on 00-10 then π_−x on
/// 10-11, as printed for the EPR preparation.
pub fn eq11_matrix() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let r = |x: f64| C64::new(x, 0.0);
    CMatrix::from_rows(&[
        vec![r(s), ZERO, -i * s, ZERO],
        vec![ZERO, ONE, ZERO, ZERO],
        vec![ZERO, ZERO, ZERO, i],
        vec![r(s), ZERO, i * s, ZERO],
    ])
}

/// Largest entry difference after removing the best global phase.
pub fn phase_aligned_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let ip = b.inner(a);
    let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { ONE };
    a.max_abs_diff(&b.scale(ph))
}

/// EPR creation on the |00⟩ pseudopure state with the eight-step cycle.
pub fn epr_create(es: &EigenSystem, cat: &TransitionCatalog) -> Result<ProtocolReport> {
    require_n(es, 2)?;
    let pps = pseudopure_2spin(es, cat, "00")?.final_state;
    let (prog, compiled, fin) = run(&epr_program_text(), es, cat, &pps)?;
    let scale = pure_part(&pps).0;
    let coh = coherence_amplitudes(es, &fin);
    let (a, psi, residual) = pure_part(&fin);
    let p = CMatrix::from_fn(4, 4, |r, c| psi[r] * psi[c].conj());
    let mut eq12 = CMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        eq12[(r, c)] = C64::new(0.5, 0.0);
    }
    let pure = &fin.mat.scale_real(1.0 / a) + &CMatrix::identity(4).scale_real(0.25);
    let reduced = (0..2)
        .map(|q| reduce_to_qubit(&p, 2, q).max_abs_diff(&CMatrix::identity(2).scale_real(0.5)))
        .fold(0.0, f64::max);
    let row_spread = compiled
        .rows
        .iter()
        .map(|row| {
            row.run(es, &pps, Delays::default())
                .map(|r| r.mat.max_abs_diff(&fin.mat))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let u_row1 = compiled.rows[0].unitary(4).expect("pulses only");
    let mut rep = ProtocolReport::new("epr", prog, pps, fin.clone());
    rep.record_transitions(&compiled);
    rep.num("dq_amplitude", coh[2] / scale);
    rep.num("sq_amplitude", coh[1] / scale);
    rep.num("zq_amplitude", coh[0] / scale);
    rep.num("fidelity", signed_overlap(&fin, &epr_vector()));
    rep.num("eq11_error", phase_aligned_error(&u_row1, &eq11_matrix()));
    rep.num("eq12_error", pure.max_abs_diff(&eq12));
    rep.num("pseudopure_residual", residual);
    rep.num("reduced_state_error", reduced);
    rep.num("cycle_row_spread", row_spread);
    Ok(rep)
}

/// Transition assignment for the GHZ cascade.
#[derive(Debug, Clone)]
pub struct GhzConfig {
    /// (π/2), π, π ladder from |000⟩ to |111⟩.
    pub ladder: [(String, String); 3],
    /// POPS transition that prepares the initial pair of pseudopure states.
    pub pops: (String, String),
}

impl Default for GhzConfig {
    fn default() -> Self {
        GhzConfig {
            ladder: pairs([("000", "010"), ("010", "011"), ("011", "111")]),
            pops: ("000".into(), "001".into()),
        }
    }
}

const GHZ_CYCLE: [[&str; 3]; 16] = [
    ["y", "y", "y"],
    ["y", "-y", "-y"],
    ["-y", "y", "-y"],
    ["-y", "-y", "y"],
    ["y", "x", "-x"],
    ["y", "-x", "x"],
    ["-y", "x", "x"],
    ["-y", "-x", "-x"],
    ["x", "y", "-x"],
    ["x", "-y", "x"],
    ["-x", "y", "x"],
    ["-x", "-y", "-x"],
    ["x", "x", "-y"],
    ["x", "-x", "y"],
    ["-x", "x", "y"],
    ["-x", "-x", "-y"],
];

/// GHZ creation from the POPS pair |000⟩⟨000| − |001⟩⟨001| with the
/// 16-step cycle.
pub fn ghz_create(es: &EigenSystem, cat: &TransitionCatalog, cfg: &GhzConfig) -> Result<ProtocolReport> {
    require_n(es, 3)?;
    let start = &cfg.ladder[0].0;
    let end = &cfg.ladder[2].1;
    let connected = cfg.ladder.windows(2).all(|w| w[0].1 == w[1].0);
    if start != "000" || end != "111" || !connected {
        return Err(SpinError::Precondition(
            "a connected ladder of transitions from 000 to 111".into(),
        ));
    }
    for (a, b) in &cfg.ladder {
        resolve_pair(es, cat, a, b)?;
    }
    let (pops_rep, _, _) = pops_pair(es, cat, &cfg.pops.0, &cfg.pops.1)?;
    let initial = pops_rep.final_state.clone();
    let dp = pops_rep.metric("population_difference").expect("metric");
    let [(a1, b1), (a2, b2), (a3, b3)] = &cfg.ladder;
    let mut text = format!(
        "selpulse ({a1},{b1}) 90 P1\nselpulse ({a2},{b2}) 180 P2\nselpulse ({a3},{b3}) 180 P3\ncycle P1 P2 P3\n"
    );
    for row in GHZ_CYCLE {
        text.push_str(&format!("row {} {} {}\n", row[0], row[1], row[2]));
    }
    let (prog, compiled, fin) = run(&text, es, cat, &initial)?;
    let coh = coherence_amplitudes(es, &fin);
    let i000 = label_index(es, "000")?;
    let i111 = label_index(es, "111")?;
    let i001 = label_index(es, "001")?;
    let mut ghz = vec![ZERO; 8];
    ghz[i000] = C64::new(FRAC_1_SQRT_2, 0.0);
    ghz[i111] = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut target = CMatrix::from_fn(8, 8, |r, c| ghz[r] * ghz[c].conj());
    target[(i001, i001)] -= ONE;
    let target = target.scale_real(dp);
    let row_spread = compiled
        .rows
        .iter()
        .map(|row| {
            row.run(es, &initial, Delays::default())
                .map(|r| r.mat.max_abs_diff(&fin.mat))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut rep = ProtocolReport::new("ghz", prog, initial, fin.clone());
    rep.record_transitions(&compiled);
    rep.num("tq_amplitude", fin.mat[(i000, i111)].norm() / dp);
    for (q, v) in coh.iter().enumerate().take(3) {
        rep.num(&format!("coherence_order_{q}"), v / dp);
    }
    rep.num("state_error", fin.mat.max_abs_diff(&target));
    rep.num("cycle_row_spread", row_spread);
    Ok(rep)
}

// ---------------------------------------------------------------- gates

/// The `g`-th (1-based) permutation of four items in lexicographic order;
/// gate 1 is the identity. `perm[k]` is the image of eigenstate `k`.
pub fn gate_permutation(g: usize) -> Result<[usize; 4]> {
    if !(1..=24).contains(&g) {
        return Err(SpinError::Precondition(format!("a gate number 1..=24, got {g}")));
    }
    let mut items = vec![0, 1, 2, 3];
    let mut rank = g - 1;
    let mut out = [0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let f = (1..4 - i).product::<usize>();
        *slot = items.remove(rank / f);
        rank %= f;
    }
    Ok(out)
}

/// Shortest sequence of single-quantum transpositions realising `perm`,
/// in application order.
pub fn gate_sequence(perm: [usize; 4]) -> Vec<(usize, usize)> {
    const EDGES: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 3), (2, 3)];
    let id = [0, 1, 2, 3];
    // permutation -> (predecessor, transposition applied)
    let mut prev = HashMap::<[usize; 4], ([usize; 4], (usize, usize))>::new();
    let mut q = VecDeque::from([id]);
    let mut seen = HashSet::from([id]);
    while let Some(p) = q.pop_front() {
        if p == perm {
            break;
        }
        for e in EDGES {
            // applying transposition e after p
            let next = p.map(|x| {
                if x == e.0 {
                    e.1
                } else if x == e.1 {
                    e.0
                } else {
                    x
                }
            });
            if seen.insert(next) {
                prev.insert(next, (p, e));
                q.push_back(next);
            }
        }
    }
    let mut seq = Vec::new();
    let mut cur = perm;
    while cur != id {
        let (p, e) = prev[&cur];
        seq.push(e);
        cur = p;
    }
    seq.reverse();
    seq
}

/// Gate `g` of the 24 two-qubit permutation gates, checked by truth table.
pub fn gate_library_2spin(es: &EigenSystem, cat: &TransitionCatalog, g: usize) -> Result<ProtocolReport> {
    require_n(es, 2)?;
    let perm = gate_permutation(g)?;
    let seq = gate_sequence(perm);
    let lab = |k: usize| crate::spin::label_string(k, 2);
    let mut text = String::new();
    for (a, b) in &seq {
        text.push_str(&format!("selpulse ({},{}) 180 x\n", lab(*a), lab(*b)));
    }
    let prog = PulseProgram::parse(&text)?;
    let compiled = compile(&prog, es, cat)?;
    let mut ok = true;
    for k in 0..4 {
        let input = DeviationDensityMatrix::from_matrix(pseudopure_matrix(&basis_state(4, k)));
        let out = compiled.execute(es, &input, Delays::default())?;
        let want = pseudopure_matrix(&basis_state(4, perm[k]));
        let pops_ok = (0..4).all(|j| (out.mat[(j, j)] - want[(j, j)]).norm() < 1e-12);
        ok &= pops_ok;
    }
    let initial = DeviationDensityMatrix::from_matrix(pseudopure_matrix(&basis_state(4, 0)));
    let fin = compiled.execute(es, &initial, Delays::default())?;
    let mut rep = ProtocolReport::new(&format!("gate{g}"), prog, initial, fin);
    rep.record_transitions(&compiled);
    rep.text("permutation", perm.map(lab).join(","));
    rep.num("pulses", seq.len() as f64);
    rep.num("truth_table_ok", if ok { 1.0 } else { 0.0 });
    Ok(rep)
}

/// Label pairs of the four-spin transitions used by the gate demonstrations.
#[derive(Debug, Clone)]
pub struct FourSpinConfig {
    /// Controlled-controlled-controlled NOT transition (1110-1111).
    pub t4: (String, String),
    /// Second leg of the controlled SWAP (1101-1111).
    pub t14: (String, String),
    /// Input POPS transition (1010-1110).
    pub t1: (String, String),
    /// Expected output POPS transition (1010-1101).
    pub t15: (String, String),
}

impl Default for FourSpinConfig {
    fn default() -> Self {
        let p = |a: &str, b: &str| (a.to_string(), b.to_string());
        FourSpinConfig {
            t4: p("1110", "1111"),
            t14: p("1101", "1111"),
            t1: p("1010", "1110"),
            t15: p("1010", "1101"),
        }
    }
}

/// C³-NOT: a single π pulse on the 1110-1111 transition.
pub fn c3not_4spin(es: &EigenSystem, cat: &TransitionCatalog, cfg: &FourSpinConfig) -> Result<ProtocolReport> {
    require_n(es, 4)?;
    let (a, b) = &cfg.t4;
    require_observable(es, cat, a, b)?;
    let (pops_rep, _, _) = pops_pair(es, cat, &cfg.t4.0, &cfg.t4.1)?;
    let initial = pops_rep.final_state.clone();
    let (prog, compiled, fin) = run(&format!("selpulse ({a},{b}) 180 x\n"), es, cat, &initial)?;
    let u = compiled.rows[0].unitary(16).expect("pulses only");
    let ia = label_index(es, a)?;
    let ib = label_index(es, b)?;
    let perm_ok = (0..16).all(|k| {
        let img = if k == ia {
            ib
        } else if k == ib {
            ia
        } else {
            k
        };
        (u[(img, k)].norm() - 1.0).abs() < 1e-12
    });
    let twice = u.matmul(&u);
    let twice_pops = (0..16).all(|k| (twice[(k, k)].norm() - 1.0).abs() < 1e-12);
    let mut rep = ProtocolReport::new("c3not", prog, initial, fin);
    rep.record_transitions(&compiled);
    rep.num("truth_table_ok", if perm_ok { 1.0 } else { 0.0 });
    rep.num("twice_identity_ok", if twice_pops { 1.0 } else { 0.0 });
    Ok(rep)
}

/// C²-SWAP as π pulses on t4, t14, t4 applied to the POPS(t1) pair.
pub fn c2swap_4spin(es: &EigenSystem, cat: &TransitionCatalog, cfg: &FourSpinConfig) -> Result<ProtocolReport> {
    require_n(es, 4)?;
    for (a, b) in [&cfg.t4, &cfg.t14, &cfg.t1, &cfg.t15] {
        require_observable(es, cat, a, b)?;
    }
    let (pops1, _, _) = pops_pair(es, cat, &cfg.t1.0, &cfg.t1.1)?;
    let (pops15, _, _) = pops_pair(es, cat, &cfg.t15.0, &cfg.t15.1)?;
    let initial = pops1.final_state.clone();
    let (a4, b4) = &cfg.t4;
    let (a14, b14) = &cfg.t14;
    let text = format!("selpulse ({a4},{b4}) 180 x\nselpulse ({a14},{b14}) 180 x\nselpulse ({a4},{b4}) 180 x\n");
    let (prog, compiled, fin) = run(&text, es, cat, &initial)?;
    let dp = pops1.metric("population_difference").expect("metric");
    let mut expected = CMatrix::zeros(16, 16);
    expected[(label_index(es, &cfg.t15.0)?, label_index(es, &cfg.t15.0)?)] = C64::new(dp, 0.0);
    expected[(label_index(es, &cfg.t15.1)?, label_index(es, &cfg.t15.1)?)] = C64::new(-dp, 0.0);
    let mut rep = ProtocolReport::new("c2swap", prog, initial, fin.clone());
    rep.record_transitions(&compiled);
    rep.num("mapping_error", fin.mat.max_abs_diff(&expected));
    rep.num("pops15_error", fin.mat.max_abs_diff(&pops15.final_state.mat));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_lexicographic() {
        assert_eq!(gate_permutation(1).unwrap(), [0, 1, 2, 3]);
        assert_eq!(gate_permutation(2).unwrap(), [0, 1, 3, 2]);
        assert_eq!(gate_permutation(24).unwrap(), [3, 2, 1, 0]);
        assert!(gate_permutation(25).is_err());
    }

    #[test]
    fn gate_words() {
        assert!(gate_sequence([0, 1, 2, 3]).is_empty());
        assert_eq!(gate_sequence([0, 1, 3, 2]), vec![(2, 3)]);
        assert_eq!(gate_sequence([1, 0, 3, 2]).len(), 2);
        for g in 1..=24 {
            let perm = gate_permutation(g).unwrap();
            let mut p = [0, 1, 2, 3];
            for (a, b) in gate_sequence(perm) {
                p = p.map(|x| {
                    if x == a {
                        b
                    } else if x == b {
                        a
                    } else {
                        x
                    }
                });
            }
            assert_eq!(p, perm, "gate {g}");
        }
    }

    #[test]
    fn flip_angle() {
        assert!((pps_flip_angle_deg() - 70.528779).abs() < 1e-6);
    }

    #[test]
    fn dj2_patterns() {
        assert_eq!(dj2_pattern(1).unwrap(), [false; 4]);
        assert_eq!(dj2_pattern(5).unwrap(), [true, false, true, false]);
        assert!(dj2_pattern(9).is_err());
    }
}
