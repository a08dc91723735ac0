//! Spin systems, Hamiltonians, eigenstates and single-quantum transitions.
//!
//! Product-basis convention: basis index bit `n-1-i` holds spin `i`
//! (spin 1 is the most significant bit); bit value 0 is α (m = +½) and
//! bit value 1 is β (m = −½). Eigenstates are labelled with the n-bit
//! string of the product state they overlap most, and are stored in label
//! order so that eigen-index == label value.

use crate::error::{Result, SpinError};
use crate::linalg::{binomial, hermitian_eigen, CMatrix, C64, ONE, ZERO};
use std::f64::consts::PI;
use std::fmt;

pub const MAX_SPINS: usize = 8;

/// Declarative description of `n` coupled spin-½ nuclei. Frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub name: String,
    pub offset_hz: Vec<f64>,
    pub j_hz: Vec<Vec<f64>>,
    pub d_hz: Vec<Vec<f64>>,
}

impl SpinSystem {
    /// Uncoupled system with the given offsets.
    pub fn new(name: impl Into<String>, offset_hz: Vec<f64>) -> Self {
        let n = offset_hz.len();
        SpinSystem {
            name: name.into(),
            offset_hz,
            j_hz: vec![vec![0.0; n]; n],
            d_hz: vec![vec![0.0; n]; n],
        }
    }

    /// Sets the scalar coupling between spins `i` and `j` (0-based).
    pub fn with_j(mut self, i: usize, j: usize, hz: f64) -> Self {
        self.j_hz[i][j] = hz;
        self.j_hz[j][i] = hz;
        self
    }

    /// Sets the effective dipolar coupling between spins `i` and `j` (0-based).
    pub fn with_d(mut self, i: usize, j: usize, hz: f64) -> Self {
        self.d_hz[i][j] = hz;
        self.d_hz[j][i] = hz;
        self
    }

    pub fn n(&self) -> usize {
        self.offset_hz.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || n > MAX_SPINS {
            return Err(SpinError::SpinCount(n));
        }
        if self.offset_hz.iter().any(|x| !x.is_finite()) {
            return Err(SpinError::NonFinite("offset_hz"));
        }
        for (what, m) in [("j_hz", &self.j_hz), ("d_hz", &self.d_hz)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(SpinError::InvalidSystem(format!("{what} is not {n}x{n}")));
            }
            for i in 0..n {
                if m[i][i] != 0.0 {
                    return Err(SpinError::InvalidSystem(format!("{what} diagonal must be zero")));
                }
                for j in 0..n {
                    if !m[i][j].is_finite() {
                        return Err(SpinError::NonFinite(what));
                    }
                    if m[i][j] != m[j][i] {
                        return Err(SpinError::InvalidSystem(format!("{what} is not symmetric")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the line-oriented spin-system format:
    ///
    /// ```text
    /// name citrate
    /// nspins 2
    /// offset_hz 27.75 -27.75
    /// j_hz 1 2 15.0
    /// d_hz 1 2 0.0
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("unnamed");
        let mut n: Option<usize> = None;
        let mut offsets: Option<Vec<f64>> = None;
        let mut pairs: Vec<(usize, &'static str, usize, usize, f64)> = Vec::new();

        let err = |line: usize, col: usize, msg: String| SpinError::Parse {
            line,
            col,
            message: msg,
        };

        for (lno, raw) in text.lines().enumerate() {
            let line = lno + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks = tokens_with_cols(content);
            let Some(&(kcol, key)) = toks.first() else { continue };
            let num = |idx: usize| -> Result<f64> {
                let (c, t) = toks
                    .get(idx)
                    .ok_or_else(|| err(line, content.len() + 1, format!("missing value for {key}")))?;
                t.parse::<f64>()
                    .map_err(|_| err(line, *c, format!("invalid number '{t}'")))
            };
            let index = |idx: usize| -> Result<usize> {
                let (c, t) = toks
                    .get(idx)
                    .ok_or_else(|| err(line, content.len() + 1, format!("missing index for {key}")))?;
                t.parse::<usize>()
                    .map_err(|_| err(line, *c, format!("invalid spin index '{t}'")))
            };
            match key {
                "name" => {
                    name = toks[1..].iter().map(|(_, t)| *t).collect::<Vec<_>>().join(" ");
                }
                "nspins" => {
                    let v = index(1)?;
                    if v == 0 || v > MAX_SPINS {
                        return Err(SpinError::SpinCount(v));
                    }
                    n = Some(v);
                }
                "offset_hz" => {
                    let vals = (1..toks.len()).map(num).collect::<Result<Vec<_>>>()?;
                    offsets = Some(vals);
                }
                "j_hz" | "d_hz" => {
                    if toks.len() != 4 {
                        return Err(err(line, kcol, format!("{key} expects: <i> <j> <hz>")));
                    }
                    let kind = if key == "j_hz" { "j_hz" } else { "d_hz" };
                    pairs.push((line, kind, index(1)?, index(2)?, num(3)?));
                }
                other => return Err(err(line, kcol, format!("unknown keyword '{other}'"))),
            }
        }

        let n = n.ok_or_else(|| err(1, 1, "missing 'nspins'".into()))?;
        let offsets = offsets.ok_or_else(|| err(1, 1, "missing 'offset_hz'".into()))?;
        if offsets.len() != n {
            return Err(err(
                1,
                1,
                format!("offset_hz has {} values, nspins is {n}", offsets.len()),
            ));
        }
        let mut sys = SpinSystem::new(name, offsets);
        for (line, kind, i, j, hz) in pairs {
            if i == 0 || j == 0 || i > n || j > n || i == j {
                return Err(err(line, 1, format!("invalid spin pair ({i}, {j})")));
            }
            sys = if kind == "j_hz" {
                sys.with_j(i - 1, j - 1, hz)
            } else {
                sys.with_d(i - 1, j - 1, hz)
            };
        }
        sys.validate()?;
        Ok(sys)
    }
}

impl fmt::Display for SpinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name {}", self.name)?;
        writeln!(f, "nspins {}", self.n())?;
        let offs: Vec<String> = self.offset_hz.iter().map(|x| format!("{x}")).collect();
        writeln!(f, "offset_hz {}", offs.join(" "))?;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.j_hz[i][j] != 0.0 {
                    writeln!(f, "j_hz {} {} {}", i + 1, j + 1, self.j_hz[i][j])?;
                }
                if self.d_hz[i][j] != 0.0 {
                    writeln!(f, "d_hz {} {} {}", i + 1, j + 1, self.d_hz[i][j])?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn tokens_with_cols(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in s.char_indices() {
        if ch.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((st + 1, &s[st..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((st + 1, &s[st..]));
    }
    out
}

/// Total magnetic quantum number of product state `k`.
pub fn product_mz(k: usize, n: usize) -> f64 {
    (0..n).map(|i| 0.5 - ((k >> (n - 1 - i)) & 1) as f64).sum()
}

/// Bit-string label of index `k`, spin 1 first.
pub fn label_string(k: usize, n: usize) -> String {
    (0..n)
        .map(|i| if (k >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses an n-bit label such as `"010"`.
pub fn parse_label(s: &str, n: usize) -> Option<usize> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return None;
    }
    usize::from_str_radix(s, 2).ok()
}

/// Single-spin operator `op` on spin `k` (0-based) embedded in the n-spin space.
fn embed(op: &CMatrix, k: usize, n: usize) -> CMatrix {
    let id = CMatrix::identity(2);
    let mut m = CMatrix::identity(1);
    for i in 0..n {
        m = m.kron(if i == k { op } else { &id });
    }
    m
}

/// Cartesian spin operators (x, y, z) for each spin in the product basis.
pub fn spin_operators(n: usize) -> Vec<[CMatrix; 3]> {
    let h = C64::new(0.5, 0.0);
    let sx = CMatrix::from_rows(&[vec![ZERO, h], vec![h, ZERO]]);
    let sy = CMatrix::from_rows(&[vec![ZERO, C64::new(0.0, -0.5)], vec![C64::new(0.0, 0.5), ZERO]]);
    let sz = CMatrix::from_rows(&[vec![h, ZERO], vec![ZERO, -h]]);
    (0..n)
        .map(|k| [embed(&sx, k, n), embed(&sy, k, n), embed(&sz, k, n)])
        .collect()
}

/// Total lowering operator F⁻ = Σ I_k⁻ in the product basis.
pub fn total_lowering(n: usize) -> CMatrix {
    let d = 1 << n;
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        for i in 0..n {
            let bit = 1 << (n - 1 - i);
            if k & bit == 0 {
                m[(k | bit, k)] += ONE;
            }
        }
    }
    m
}

/// Total `F_z` in the product basis (diagonal).
pub fn total_fz(n: usize) -> CMatrix {
    let d = 1 << n;
    CMatrix::from_real_diag(&(0..d).map(|k| product_mz(k, n)).collect::<Vec<_>>())
}

/// Hamiltonian in rad/s. `weak` keeps only the I_iz·I_jz part of the scalar
/// coupling; the dipolar term keeps its truncated secular form in both modes.
pub fn build_hamiltonian(sys: &SpinSystem, weak: bool) -> Result<CMatrix> {
    sys.validate()?;
    let n = sys.n();
    let d = sys.dim();
    let ops = spin_operators(n);
    let tau = 2.0 * PI;
    let mut h = CMatrix::zeros(d, d);
    for i in 0..n {
        h = &h + &ops[i][2].scale_real(tau * sys.offset_hz[i]);
    }
    for i in 0..n {
        for j in i + 1..n {
            let zz = ops[i][2].matmul(&ops[j][2]);
            let dot = &(&ops[i][0].matmul(&ops[j][0]) + &ops[i][1].matmul(&ops[j][1])) + &zz;
            let jij = sys.j_hz[i][j];
            if jij != 0.0 {
                let term = if weak { zz.clone() } else { dot.clone() };
                h = &h + &term.scale_real(tau * jij);
            }
            let dij = sys.d_hz[i][j];
            if dij != 0.0 {
                let term = &zz.scale_real(3.0) - &dot;
                h = &h + &term.scale_real(tau * dij);
            }
        }
    }
    // Exact hermiticity: average with the adjoint to strip rounding asymmetry.
    let hh = &h + &h.adjoint();
    Ok(hh.scale_real(0.5))
}

/// Eigenstates of a spin Hamiltonian, indexed by their qubit label.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub n: usize,
    /// Energies in rad/s, `energies[k]` belongs to the eigenstate labelled `k`.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the product basis.
    pub vectors: CMatrix,
    /// `labels[k]` is the product-basis index whose label eigenstate `k` carries.
    pub labels: Vec<usize>,
    pub mz: Vec<f64>,
    /// Number of eigenstates whose maximum-overlap product state had already
    /// been claimed and that were relabelled by the greedy assignment.
    pub label_conflicts: usize,
    /// Hamiltonian the decomposition came from.
    pub hamiltonian: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn label(&self, k: usize) -> String {
        label_string(self.labels[k], self.n)
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        let target = parse_label(label, self.n)?;
        self.labels.iter().position(|&l| l == target)
    }

    /// Product-basis operator rotated into the eigenbasis: `V† A V`.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.vectors.adjoint().matmul(op).matmul(&self.vectors)
    }

    /// F⁻ in the eigenbasis.
    pub fn lowering(&self) -> CMatrix {
        self.to_eigenbasis(&total_lowering(self.n))
    }

    /// Manifold index (number of β spins) of eigenstate `k`.
    pub fn manifold(&self, k: usize) -> usize {
        (self.n as f64 / 2.0 - self.mz[k]).round() as usize
    }
}

/// Diagonalises `h` block by block over the M_z manifolds.
///
/// Eigenvector phases are fixed by making the largest-magnitude component
/// real and positive; labels are assigned greedily by descending overlap
/// |⟨product|eigen⟩|² inside each manifold.
pub fn diagonalize(h: &CMatrix, n: usize) -> Result<EigenSystem> {
    if n == 0 || n > MAX_SPINS {
        return Err(SpinError::SpinCount(n));
    }
    let d = 1 << n;
    if h.dim() != d {
        return Err(SpinError::InvalidSystem(format!(
            "Hamiltonian is {}x{}, expected {d}",
            h.dim(),
            h.dim()
        )));
    }
    if !h.is_finite() {
        return Err(SpinError::NonFinite("hamiltonian"));
    }
    let mut energies = vec![0.0; d];
    let mut vectors = CMatrix::zeros(d, d);
    let mut conflicts = 0;

    for m in 0..=n {
        let idx: Vec<usize> = (0..d).filter(|&k| (k.count_ones() as usize) == m).collect();
        let block = h.submatrix(&idx);
        let (w, mut v) = hermitian_eigen(&block);
        let b = idx.len();
        for e in 0..b {
            let mut best = 0;
            for r in 1..b {
                if v[(r, e)].norm() > v[(best, e)].norm() + 1e-12 {
                    best = r;
                }
            }
            let ph = v[(best, e)] / v[(best, e)].norm();
            for r in 0..b {
                v[(r, e)] /= ph;
            }
            v[(best, e)] = C64::new(v[(best, e)].re, 0.0);
        }

        let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(b * b);
        for p in 0..b {
            for e in 0..b {
                cand.push((v[(p, e)].norm_sqr(), p, e));
            }
        }
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut prod_used = vec![false; b];
        let mut eig_used = vec![false; b];
        let mut assignment = vec![usize::MAX; b];
        for (_, p, e) in cand {
            if prod_used[p] || eig_used[e] {
                continue;
            }
            prod_used[p] = true;
            eig_used[e] = true;
            assignment[e] = p;
        }
        for e in 0..b {
            let argmax = (0..b)
                .max_by(|&x, &y| v[(x, e)].norm_sqr().total_cmp(&v[(y, e)].norm_sqr()))
                .unwrap_or(0);
            if argmax != assignment[e] {
                conflicts += 1;
            }
            let slot = idx[assignment[e]];
            energies[slot] = w[e];
            for r in 0..b {
                vectors[(idx[r], slot)] = v[(r, e)];
            }
        }
    }

    Ok(EigenSystem {
        n,
        energies,
        vectors,
        labels: (0..d).collect(),
        mz: (0..d).map(|k| product_mz(k, n)).collect(),
        label_conflicts: conflicts,
        hamiltonian: h.clone(),
    })
}

/// Convenience: Hamiltonian plus diagonalisation.
pub fn eigensystem(sys: &SpinSystem, weak: bool) -> Result<EigenSystem> {
    let h = build_hamiltonian(sys, weak)?;
    diagonalize(&h, sys.n())
}

/// Strong-coupling mixing angle of an AB system in degrees, in (−45°, 45°].
pub fn mixing_angle_ab(sys: &SpinSystem) -> Result<f64> {
    if sys.n() != 2 {
        return Err(SpinError::Precondition(format!(
            "a two-spin system, got n = {}",
            sys.n()
        )));
    }
    sys.validate()?;
    let j = sys.j_hz[0][1];
    let dnu = sys.offset_hz[0] - sys.offset_hz[1];
    let theta = 0.5 * (2.0 * PI * j).atan2(2.0 * PI * dnu);
    let mut deg = theta.to_degrees();
    if deg <= -45.0 {
        deg += 90.0;
    } else if deg > 45.0 {
        deg -= 90.0;
    }
    Ok(deg)
}

/// Number of single-quantum transitions of `n` spin-½ nuclei: C(2n, n−1).
pub fn sq_transition_count(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_SPINS {
        return Err(SpinError::SpinCount(n));
    }
    Ok(binomial(2 * n, n - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub id: usize,
    /// Eigenstate with the larger M_z (F⁻ takes `lower` to `upper`).
    pub lower: usize,
    pub upper: usize,
    /// (E_lower − E_upper) / 2π
    pub freq_hz: f64,
    /// |⟨upper|F⁻|lower⟩|²
    pub intensity: f64,
    pub observable: bool,
}

#[derive(Debug, Clone)]
pub struct TransitionCatalog {
    pub entries: Vec<Transition>,
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.05;

impl TransitionCatalog {
    pub fn get(&self, id: usize) -> Option<&Transition> {
        self.entries.iter().find(|t| t.id == id)
    }

    /// Transition joining eigenstates `a` and `b`, in either order.
    pub fn find_pair(&self, a: usize, b: usize) -> Option<&Transition> {
        self.entries
            .iter()
            .find(|t| (t.lower == a && t.upper == b) || (t.lower == b && t.upper == a))
    }

    pub fn observable(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter().filter(|t| t.observable)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Enumerates every ΔM_z = −1 pair with its frequency and intensity.
/// Ids follow descending intensity, ties broken by ascending frequency.
pub fn transition_catalog(es: &EigenSystem, threshold: f64) -> TransitionCatalog {
    let d = es.dim();
    let fm = es.lowering();
    let mut entries = Vec::new();
    for r in 0..d {
        for s in 0..d {
            if (es.mz[r] - es.mz[s] - 1.0).abs() < 1e-9 {
                entries.push(Transition {
                    id: 0,
                    lower: r,
                    upper: s,
                    freq_hz: (es.energies[r] - es.energies[s]) / (2.0 * PI),
                    intensity: fm[(s, r)].norm_sqr(),
                    observable: false,
                });
            }
        }
    }
    let quant = |x: f64| (x * 1e9).round() as i64;
    entries.sort_by(|a, b| {
        quant(b.intensity)
            .cmp(&quant(a.intensity))
            .then(a.freq_hz.total_cmp(&b.freq_hz))
            .then(a.lower.cmp(&b.lower))
            .then(a.upper.cmp(&b.upper))
    });
    let max = entries.iter().map(|t| t.intensity).fold(0.0, f64::max);
    for (i, t) in entries.iter_mut().enumerate() {
        t.id = i + 1;
        t.observable = max > 0.0 && t.intensity >= threshold * max;
    }
    TransitionCatalog { entries, threshold }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn citrate() -> SpinSystem {
        SpinSystem::new("citrate", vec![27.75, -27.75]).with_j(0, 1, 15.0)
    }

    #[test]
    fn single_spin_hamiltonian() {
        let h = build_hamiltonian(&SpinSystem::new("a", vec![100.0]), false).unwrap();
        assert!((h[(0, 0)].re - PI * 100.0).abs() < 1e-12);
        assert!((h[(1, 1)].re + PI * 100.0).abs() < 1e-12);
        assert_eq!(h[(0, 1)], ZERO);
    }

    #[test]
    fn citrate_mixing_angle_and_vectors() {
        let sys = citrate();
        let theta = mixing_angle_ab(&sys).unwrap();
        assert!((theta - 7.6).abs() < 0.05, "theta = {theta}");
        let es = eigensystem(&sys, false).unwrap();
        let t = theta.to_radians();
        // |01> = cos|αβ> + sin|βα>, |10> = cos|βα> - sin|αβ>
        assert!((es.vectors[(1, 1)].re - t.cos()).abs() < 1e-12);
        assert!((es.vectors[(2, 1)].re - t.sin()).abs() < 1e-12);
        assert!((es.vectors[(2, 2)].re - t.cos()).abs() < 1e-12);
        assert!((es.vectors[(1, 2)].re + t.sin()).abs() < 1e-12);
    }

    #[test]
    fn mixing_angle_limits() {
        let eq = SpinSystem::new("x", vec![10.0, 0.0]).with_j(0, 1, 10.0);
        assert!((mixing_angle_ab(&eq).unwrap() - 22.5).abs() < 1e-12);
        let far = SpinSystem::new("x", vec![1e7, 0.0]).with_j(0, 1, 10.0);
        assert!(mixing_angle_ab(&far).unwrap().abs() < 1e-4);
        assert!(mixing_angle_ab(&SpinSystem::new("x", vec![1.0])).is_err());
    }

    #[test]
    fn weak_mode_is_diagonal_identity() {
        let sys = SpinSystem::new("w", vec![100.0, -40.0, 7.0])
            .with_j(0, 1, 12.0)
            .with_j(1, 2, 3.0);
        let es = eigensystem(&sys, true).unwrap();
        assert!(es.vectors.max_abs_diff(&CMatrix::identity(8)) < 1e-15);
        assert_eq!(es.label_conflicts, 0);
    }

    #[test]
    fn transition_counts() {
        assert_eq!(sq_transition_count(2).unwrap(), 4);
        assert_eq!(sq_transition_count(3).unwrap(), 15);
        assert_eq!(sq_transition_count(4).unwrap(), 56);
        assert!(sq_transition_count(9).is_err());
        assert!(sq_transition_count(0).is_err());
    }

    #[test]
    fn weak_two_spin_equal_intensities() {
        let sys = SpinSystem::new("w", vec![100.0, -40.0]).with_j(0, 1, 7.0);
        let cat = transition_catalog(&eigensystem(&sys, true).unwrap(), DEFAULT_THRESHOLD);
        assert_eq!(cat.len(), 4);
        for t in &cat.entries {
            assert!((t.intensity - 1.0).abs() < 1e-15);
        }
        // equal intensities: ids by ascending frequency
        assert!(cat.entries.windows(2).all(|w| w[0].freq_hz <= w[1].freq_hz));
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "# citrate\nname citrate\nnspins 2\noffset_hz 27.75 -27.75\nj_hz 1 2 15\n";
        let sys = SpinSystem::parse(text).unwrap();
        assert_eq!(sys, citrate().clone_named("citrate"));
        assert_eq!(SpinSystem::parse(&sys.to_string()).unwrap(), sys);
        assert!(matches!(SpinSystem::parse(""), Err(SpinError::Parse { .. })));
        match SpinSystem::parse("nspins 2\noffset_hz 1 x\n") {
            Err(SpinError::Parse { line, col, .. }) => assert_eq!((line, col), (2, 13)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(SpinSystem::parse("nspins 9\n"), Err(SpinError::SpinCount(9))));
        assert!(SpinSystem::parse("nspins 2\noffset_hz 1 2\nj_hz 1 3 4\n").is_err());
    }

    impl SpinSystem {
        fn clone_named(&self, n: &str) -> Self {
            let mut s = self.clone();
            s.name = n.into();
            s
        }
    }

    #[test]
    fn validation_errors() {
        let mut s = citrate();
        s.offset_hz[0] = f64::NAN;
        assert_eq!(build_hamiltonian(&s, false), Err(SpinError::NonFinite("offset_hz")));
        let mut s = citrate();
        s.j_hz[0][1] = 3.0;
        assert!(matches!(s.validate(), Err(SpinError::InvalidSystem(_))));
        let big = SpinSystem::new("big", vec![0.0; 9]);
        assert_eq!(big.validate(), Err(SpinError::SpinCount(9)));
    }
}
