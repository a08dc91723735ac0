//! Deviation density matrices and the primitive evolutions acting on them.
//!
//! Every state lives in the eigenbasis of the spin Hamiltonian. Rotations
//! follow U = exp(−iθ I_φ) with φ = 0 along x.

use crate::error::{Result, SpinError};
use crate::format::g12;
use crate::linalg::{hermitian_eigen, CMatrix, C64, ONE, ZERO};
use crate::spin::{label_string, EigenSystem};
use std::fmt;

const SERIAL_EPS: f64 = 1e-14;

/// Traceless Hermitian deviation part of the density operator, eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDensityMatrix {
    pub mat: CMatrix,
}

impl DeviationDensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        DeviationDensityMatrix {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_matrix(mat: CMatrix) -> Self {
        DeviationDensityMatrix { mat }
    }

    pub fn from_populations(p: &[f64]) -> Self {
        DeviationDensityMatrix {
            mat: CMatrix::from_real_diag(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.mat.diag().iter().map(|z| z.re).collect()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| r == c || self.mat[(r, c)].norm() <= tol))
    }

    /// Checks Hermiticity and tracelessness within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if !self.mat.is_finite() {
            return Err(SpinError::NonFinite("density matrix"));
        }
        if self.mat.hermiticity_error() > tol {
            return Err(SpinError::Precondition("a Hermitian density matrix".into()));
        }
        if self.trace().norm() > tol {
            return Err(SpinError::Precondition("a traceless deviation density matrix".into()));
        }
        Ok(())
    }

    pub fn apply(&self, u: &CMatrix) -> Self {
        DeviationDensityMatrix {
            mat: self.mat.conjugate_by(u),
        }
    }

    /// Writes the `dim N` / `k l re im` text form (1-based indices).
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = format!("dim {d}\n");
        for k in 0..d {
            for l in 0..d {
                let z = self.mat[(k, l)];
                if z.norm() >= SERIAL_EPS {
                    s.push_str(&format!("{} {} {} {}\n", k + 1, l + 1, g12(z.re), g12(z.im)));
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| SpinError::Parse { line, col: 1, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing 'dim' header".into()))?;
        let dim: usize = header
            .strip_prefix("dim")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| perr(hl, "expected 'dim <N>'".into()))?;
        if dim == 0 || !dim.is_power_of_two() || dim > 256 {
            return Err(perr(hl, format!("invalid dimension {dim}")));
        }
        let mut mat = CMatrix::zeros(dim, dim);
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 4 {
                return Err(perr(ln, "expected 'k l re im'".into()));
            }
            let k: usize = t[0].parse().map_err(|_| perr(ln, format!("bad index '{}'", t[0])))?;
            let c: usize = t[1].parse().map_err(|_| perr(ln, format!("bad index '{}'", t[1])))?;
            let re: f64 = t[2].parse().map_err(|_| perr(ln, format!("bad number '{}'", t[2])))?;
            let im: f64 = t[3].parse().map_err(|_| perr(ln, format!("bad number '{}'", t[3])))?;
            if k == 0 || c == 0 || k > dim || c > dim {
                return Err(perr(ln, format!("index ({k}, {c}) out of range")));
            }
            mat[(k - 1, c - 1)] = C64::new(re, im);
        }
        Ok(DeviationDensityMatrix { mat })
    }
}

impl fmt::Display for DeviationDensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Pulse phase in degrees, normalised to [0, 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAxis {
    phase: f64,
}

impl PulseAxis {
    pub const X: PulseAxis = PulseAxis { phase: 0.0 };
    pub const Y: PulseAxis = PulseAxis { phase: 90.0 };
    pub const MINUS_X: PulseAxis = PulseAxis { phase: 180.0 };
    pub const MINUS_Y: PulseAxis = PulseAxis { phase: 270.0 };

    pub fn new(deg: f64) -> Self {
        let mut p = deg.rem_euclid(360.0);
        if p >= 360.0 {
            p = 0.0;
        }
        PulseAxis { phase: p }
    }

    pub fn degrees(self) -> f64 {
        self.phase
    }

    pub fn radians(self) -> f64 {
        self.phase.to_radians()
    }

    /// Accepts `x`, `y`, `-x`, `-y` and `deg:<float>`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" | "+x" => Some(Self::X),
            "y" | "+y" => Some(Self::Y),
            "-x" => Some(Self::MINUS_X),
            "-y" => Some(Self::MINUS_Y),
            _ => {
                let v: f64 = s.strip_prefix("deg:")?.parse().ok()?;
                v.is_finite().then(|| Self::new(v))
            }
        }
    }
}

impl fmt::Display for PulseAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            p if p == 0.0 => f.write_str("x"),
            p if p == 90.0 => f.write_str("y"),
            p if p == 180.0 => f.write_str("-x"),
            p if p == 270.0 => f.write_str("-y"),
            p => write!(f, "deg:{p}"),
        }
    }
}

/// High-temperature equilibrium deviation: populations equal to M_z, so the
/// spread between the highest and lowest level is `n`.
pub fn equilibrium_deviation(es: &EigenSystem) -> DeviationDensityMatrix {
    DeviationDensityMatrix::from_populations(&es.mz)
}

fn rotation_block(theta_deg: f64, phase_deg: f64) -> [[C64; 2]; 2] {
    let half = theta_deg.to_radians() / 2.0;
    let (s, c) = half.sin_cos();
    let phi = phase_deg.to_radians();
    let mi = C64::new(0.0, -1.0);
    [
        [C64::new(c, 0.0), mi * C64::from_polar(s, -phi)],
        [mi * C64::from_polar(s, phi), C64::new(c, 0.0)],
    ]
}

/// Transition-selective rotation on the two-level subspace {r, s}.
/// The state with the larger M_z plays the role of α in the block.
pub fn selective_pulse_unitary(
    es: &EigenSystem,
    r: usize,
    s: usize,
    theta_deg: f64,
    phase_deg: f64,
) -> Result<CMatrix> {
    let d = es.dim();
    let name = || {
        format!(
            "{}<->{}",
            if r < d { label_string(r, es.n) } else { r.to_string() },
            if s < d { label_string(s, es.n) } else { s.to_string() }
        )
    };
    if r >= d || s >= d {
        return Err(SpinError::UnknownTransition(name()));
    }
    if ((es.mz[r] - es.mz[s]).abs() - 1.0).abs() > 1e-9 {
        return Err(SpinError::NotSingleQuantum(name()));
    }
    if !theta_deg.is_finite() || !phase_deg.is_finite() {
        return Err(SpinError::NonFinite("pulse angle"));
    }
    let (hi, lo) = if es.mz[r] > es.mz[s] { (r, s) } else { (s, r) };
    let b = rotation_block(theta_deg, phase_deg);
    let mut u = CMatrix::identity(d);
    u[(hi, hi)] = b[0][0];
    u[(hi, lo)] = b[0][1];
    u[(lo, hi)] = b[1][0];
    u[(lo, lo)] = b[1][1];
    Ok(u)
}

/// Non-selective rotation exp(−iθ F_φ), built in the product basis and
/// rotated into the eigenbasis.
pub fn hard_pulse_unitary(es: &EigenSystem, theta_deg: f64, phase_deg: f64) -> CMatrix {
    let b = rotation_block(theta_deg, phase_deg);
    let single = CMatrix::from_rows(&[vec![b[0][0], b[0][1]], vec![b[1][0], b[1][1]]]);
    let mut u = CMatrix::identity(1);
    for _ in 0..es.n {
        u = u.kron(&single);
    }
    es.to_eigenbasis(&u)
}

/// Ideal gradient crusher: removes every off-diagonal element.
pub fn crush_gradient(rho: &DeviationDensityMatrix) -> DeviationDensityMatrix {
    let d = rho.dim();
    let mut mat = CMatrix::zeros(d, d);
    for k in 0..d {
        mat[(k, k)] = rho.mat[(k, k)];
    }
    DeviationDensityMatrix { mat }
}

/// ρ_kl ← ρ_kl · exp(−i (E_k − E_l) t).
pub fn free_evolution(es: &EigenSystem, rho: &DeviationDensityMatrix, t: f64) -> DeviationDensityMatrix {
    let d = rho.dim();
    let mut mat = rho.mat.clone();
    for k in 0..d {
        for l in 0..d {
            if k != l {
                let ph = C64::from_polar(1.0, -(es.energies[k] - es.energies[l]) * t);
                mat[(k, l)] *= ph;
            }
        }
    }
    DeviationDensityMatrix { mat }
}

/// Population exchange produced by a selective θ pulse followed by a crusher.
pub fn selective_population_update(p_i: f64, p_j: f64, theta_deg: f64) -> (f64, f64) {
    let half = theta_deg.to_radians() / 2.0;
    let c2 = half.cos().powi(2);
    let s2 = half.sin().powi(2);
    (p_i * c2 + p_j * s2, p_j * c2 + p_i * s2)
}

/// Decomposes ρ as a·(|ψ⟩⟨ψ| − I/d) using the eigenvector of the largest
/// eigenvalue. Returns (a, ψ, residual) where residual is the Frobenius
/// distance between ρ and that pseudopure form.
pub fn pure_part(rho: &DeviationDensityMatrix) -> (f64, Vec<C64>, f64) {
    let d = rho.dim();
    let (w, v) = hermitian_eigen(&rho.mat);
    let top = d - 1;
    let a = w[top] * d as f64 / (d as f64 - 1.0);
    let psi: Vec<C64> = (0..d).map(|r| v[(r, top)]).collect();
    let model = pseudopure_matrix(&psi).scale_real(a);
    (a, psi, (&rho.mat - &model).frobenius())
}

/// |ψ⟩⟨ψ| − I/d.
pub fn pseudopure_matrix(psi: &[C64]) -> CMatrix {
    let d = psi.len();
    let mut m = CMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj());
    for k in 0..d {
        m[(k, k)] -= C64::new(1.0 / d as f64, 0.0);
    }
    m
}

/// Normalised overlap Tr(ρ T)/(‖ρ‖‖T‖) of the traceless parts of ρ and
/// T = |ψ⟩⟨ψ| − I/d. Equals ±1 for an ideal (inverted) pseudopure state.
pub fn signed_overlap(rho: &DeviationDensityMatrix, psi: &[C64]) -> f64 {
    let d = rho.dim();
    let mut a = rho.mat.clone();
    let tr = a.trace() / d as f64;
    for k in 0..d {
        a[(k, k)] -= tr;
    }
    let t = pseudopure_matrix(psi);
    let na = a.frobenius();
    let nt = t.frobenius();
    if na == 0.0 || nt == 0.0 {
        return 0.0;
    }
    a.inner(&t).re / (na * nt)
}

/// Normalised overlap Tr(A B)/(‖A‖‖B‖) of two deviation matrices.
pub fn state_fidelity(a: &DeviationDensityMatrix, b: &DeviationDensityMatrix) -> f64 {
    let na = a.mat.frobenius();
    let nb = b.mat.frobenius();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.mat.inner(&b.mat).re / (na * nb)
}

/// Basis vector for eigenstate `k`.
pub fn basis_state(d: usize, k: usize) -> Vec<C64> {
    (0..d).map(|i| if i == k { ONE } else { ZERO }).collect()
}

/// Largest |ρ_kl| over off-diagonal elements of each coherence order
/// |ΔM_z| = 0..=n.
pub fn coherence_amplitudes(es: &EigenSystem, rho: &DeviationDensityMatrix) -> Vec<f64> {
    let d = rho.dim();
    let mut out = vec![0.0; es.n + 1];
    for k in 0..d {
        for l in 0..d {
            if k != l {
                let q = (es.mz[k] - es.mz[l]).abs().round() as usize;
                out[q] = f64::max(out[q], rho.mat[(k, l)].norm());
            }
        }
    }
    out
}

/// Partial trace of a matrix in the label basis, keeping qubit `keep` (0-based,
/// qubit 0 = first label bit).
pub fn reduce_to_qubit(m: &CMatrix, n: usize, keep: usize) -> CMatrix {
    let d = 1 << n;
    let shift = n - 1 - keep;
    let mut out = CMatrix::zeros(2, 2);
    for r in 0..d {
        for c in 0..d {
            if (r & !(1 << shift)) == (c & !(1 << shift)) {
                out[((r >> shift) & 1, (c >> shift) & 1)] += m[(r, c)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{eigensystem, SpinSystem};

    fn citrate() -> EigenSystem {
        eigensystem(&SpinSystem::new("c", vec![27.75, -27.75]).with_j(0, 1, 15.0), false).unwrap()
    }

    #[test]
    fn equilibrium_two_spin() {
        let es = citrate();
        assert_eq!(equilibrium_deviation(&es).populations(), vec![1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn selective_pulse_basics() {
        let es = citrate();
        let u0 = selective_pulse_unitary(&es, 1, 3, 0.0, 0.0).unwrap();
        assert!(u0.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
        let u = selective_pulse_unitary(&es, 1, 3, 360.0, 33.0).unwrap();
        assert!((u[(1, 1)] + ONE).norm() < 1e-15 && (u[(0, 0)] - ONE).norm() < 1e-15);
        assert!(u.matmul(&u).max_abs_diff(&CMatrix::identity(4)) < 1e-14);
        assert!(matches!(
            selective_pulse_unitary(&es, 0, 3, 90.0, 0.0),
            Err(SpinError::NotSingleQuantum(_))
        ));
        assert!(matches!(
            selective_pulse_unitary(&es, 0, 7, 90.0, 0.0),
            Err(SpinError::UnknownTransition(_))
        ));
    }

    #[test]
    fn hard_pi_on_single_spin() {
        let es = eigensystem(&SpinSystem::new("a", vec![10.0]), false).unwrap();
        let u = hard_pulse_unitary(&es, 180.0, 0.0);
        let mi = C64::new(0.0, -1.0);
        assert!((u[(0, 1)] - mi).norm() < 1e-15 && (u[(1, 0)] - mi).norm() < 1e-15);
        assert!(u[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn hard_pulse_inverse_and_double_turn() {
        let es = citrate();
        let a = hard_pulse_unitary(&es, 37.0, 120.0);
        let b = hard_pulse_unitary(&es, -37.0, 120.0);
        assert!(a.matmul(&b).max_abs_diff(&CMatrix::identity(4)) < 1e-14);
        let full = hard_pulse_unitary(&es, 720.0, 45.0);
        assert!(full.max_abs_diff(&CMatrix::identity(4)) < 1e-13);
    }

    #[test]
    fn population_update_examples() {
        let (a, b) = selective_population_update(1.0, 0.0, 90.0);
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let theta = 2.0 * (2.0f64 / 3.0).sqrt().acos().to_degrees();
        let (a, b) = selective_population_update(1.0, 0.0, theta);
        assert!((a - 2.0 / 3.0).abs() < 1e-15 && (b - 1.0 / 3.0).abs() < 1e-15);
        let (a, b) = selective_population_update(0.3, -0.7, 180.0);
        assert!((a + 0.7).abs() < 1e-15 && (b - 0.3).abs() < 1e-15);
    }

    #[test]
    fn crush_and_evolution() {
        let es = citrate();
        let rho = equilibrium_deviation(&es).apply(&hard_pulse_unitary(&es, 90.0, 90.0));
        let c = crush_gradient(&rho);
        assert!(c.is_diagonal(0.0));
        assert_eq!(crush_gradient(&c), c);
        let same = free_evolution(&es, &rho, 0.0);
        assert!(same.mat.max_abs_diff(&rho.mat) < 1e-15);
        let eq = equilibrium_deviation(&es);
        assert_eq!(free_evolution(&es, &eq, 1.234), eq);
    }

    #[test]
    fn dq_phase_quarter_period() {
        let sys = SpinSystem::new("ab", vec![120.0, -30.0]).with_j(0, 1, 15.0);
        let es = eigensystem(&sys, false).unwrap();
        let mut rho = DeviationDensityMatrix::zeros(4);
        rho.mat[(3, 0)] = ONE;
        rho.mat[(0, 3)] = ONE;
        let f_dq = (es.energies[3] - es.energies[0]) / (2.0 * std::f64::consts::PI);
        let out = free_evolution(&es, &rho, 1.0 / (4.0 * f_dq));
        assert!((out.mat[(3, 0)] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut rho = DeviationDensityMatrix::from_populations(&[0.5, 0.0, 0.0, -0.5]);
        rho.mat[(0, 3)] = C64::new(0.25, -0.125);
        rho.mat[(3, 0)] = C64::new(0.25, 0.125);
        let text = rho.to_text();
        assert!(text.starts_with("dim 4\n1 1 0.5 0\n1 4 0.25 -0.125\n"));
        assert_eq!(DeviationDensityMatrix::parse(&text).unwrap(), rho);
        assert!(DeviationDensityMatrix::parse("dim 3\n").is_err());
        assert!(DeviationDensityMatrix::parse("dim 4\n5 1 0 0\n").is_err());
    }

    #[test]
    fn axis_parse_print() {
        for s in ["x", "y", "-x", "-y", "deg:45", "deg:12.5"] {
            assert_eq!(PulseAxis::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(PulseAxis::parse("deg:-90").unwrap(), PulseAxis::MINUS_Y);
        assert_eq!(PulseAxis::new(720.0).degrees(), 0.0);
        assert!(PulseAxis::parse("z").is_none());
    }

    #[test]
    fn pure_part_of_pseudopure() {
        let rho = DeviationDensityMatrix::from_populations(&[1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]);
        let (a, psi, res) = pure_part(&rho);
        assert!((a - 4.0 / 3.0).abs() < 1e-14 && res < 1e-14);
        assert!((psi[0].norm() - 1.0).abs() < 1e-14);
        assert!((signed_overlap(&rho, &basis_state(4, 0)) - 1.0).abs() < 1e-14);
        let inv = DeviationDensityMatrix::from_matrix(rho.mat.scale_real(-1.0));
        assert!((signed_overlap(&inv, &basis_state(4, 0)) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn reduced_epr_is_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let p = CMatrix::from_fn(4, 4, |r, c| psi[r] * psi[c].conj());
        for q in 0..2 {
            let red = reduce_to_qubit(&p, 2, q);
            assert!(red.max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);
        }
    }
}
