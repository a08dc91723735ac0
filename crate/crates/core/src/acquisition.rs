//! Detection: stick spectra, FIDs, FFT processing, density-matrix
//! tomography and Z-COSY connectivity.
//!
//! A coherence ρ_kl oscillates as exp(+2πi ν_kl t) with
//! ν_kl = (E_l − E_k)/2π, so the signal of transition (r, s) appears at its
//! catalog frequency (E_r − E_s)/2π.

use crate::assignment::ConnectivityMatrix;
use crate::dynamics::{crush_gradient, free_evolution, hard_pulse_unitary, DeviationDensityMatrix, PulseAxis};
use crate::error::{Result, SpinError};
use crate::format::g12;
use crate::linalg::{pseudo_inverse, CMatrix, C64, ZERO};
use crate::spin::{EigenSystem, TransitionCatalog};
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Default flip angle of small-angle readouts.
pub const DEFAULT_BETA_DEG: f64 = 10.0;
const LINE_EPS: f64 = 1e-13;
const RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StickLine {
    pub id: usize,
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StickSpectrum {
    pub lines: Vec<StickLine>,
}

impl StickSpectrum {
    pub fn amplitude(&self, id: usize) -> f64 {
        self.lines.iter().find(|l| l.id == id).map_or(0.0, |l| l.amplitude)
    }

    /// `freq_hz,amplitude` rows in ascending frequency.
    pub fn to_csv(&self) -> String {
        let mut lines = self.lines.clone();
        lines.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz).then(a.id.cmp(&b.id)));
        let mut s = String::from("freq_hz,amplitude\n");
        for l in lines {
            s.push_str(&format!("{},{}\n", g12(l.freq_hz), g12(l.amplitude)));
        }
        s
    }
}

/// Linear-response spectrum of the populations of `rho` after a β pulse:
/// line (r, s) has amplitude sin β · (p_r − p_s) · |⟨s|F⁻|r⟩|².
pub fn detect_small_angle(
    _es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    beta_deg: f64,
) -> StickSpectrum {
    let p = rho.populations();
    let sb = beta_deg.to_radians().sin();
    let lines = cat
        .entries
        .iter()
        .filter_map(|t| {
            let a = sb * (p[t.lower] - p[t.upper]) * t.intensity;
            (a.abs() > LINE_EPS).then_some(StickLine {
                id: t.id,
                freq_hz: t.freq_hz,
                amplitude: a,
            })
        })
        .collect();
    StickSpectrum { lines }
}

/// Complex amplitude of every catalog line carried by the single-quantum
/// coherences of `rho`: A = ρ_sr · ⟨r|F⁺|s⟩, indexed like `cat.entries`.
pub fn coherence_lines(es: &EigenSystem, cat: &TransitionCatalog, rho: &DeviationDensityMatrix) -> Vec<C64> {
    let fm = es.lowering();
    cat.entries
        .iter()
        .map(|t| rho.mat[(t.upper, t.lower)] * fm[(t.upper, t.lower)].conj())
        .collect()
}

/// Real line amplitudes read out by an exact β_x pulse: Re(2i·A). For a
/// small angle and a diagonal input this is sin β · Δp · intensity.
pub fn readout_lines(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    beta_deg: f64,
) -> Vec<f64> {
    let after = rho.apply(&hard_pulse_unitary(es, beta_deg, PulseAxis::X.degrees()));
    coherence_lines(es, cat, &after)
        .into_iter()
        .map(|a| (C64::new(0.0, 2.0) * a).re)
        .collect()
}

fn check_points(points: usize) -> Result<()> {
    if points == 0 || !points.is_power_of_two() {
        return Err(SpinError::NotPowerOfTwo(points));
    }
    Ok(())
}

/// s(m) = Tr(ρ(m·dwell) F⁺) under free evolution.
pub fn acquire_fid(es: &EigenSystem, rho: &DeviationDensityMatrix, points: usize, dwell: f64) -> Result<Vec<C64>> {
    check_points(points)?;
    if !(dwell.is_finite() && dwell > 0.0) {
        return Err(SpinError::NonFinite("dwell"));
    }
    let fp = es.lowering().adjoint();
    let d = es.dim();
    let mut terms: Vec<(C64, f64)> = Vec::new();
    for k in 0..d {
        for l in 0..d {
            let f = fp[(l, k)];
            if f.norm() > 0.0 && rho.mat[(k, l)].norm() > 0.0 {
                terms.push((rho.mat[(k, l)] * f, es.energies[l] - es.energies[k]));
            }
        }
    }
    Ok((0..points)
        .map(|m| {
            let t = m as f64 * dwell;
            terms.iter().map(|&(c, w)| c * C64::from_polar(1.0, w * t)).sum()
        })
        .collect())
}

/// Forward FFT with the zero frequency moved to the centre.
pub fn fft(series: &[C64]) -> Result<Vec<C64>> {
    check_points(series.len())?;
    let mut buf = series.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.rotate_right(series.len() / 2);
    Ok(buf)
}

/// Frequency axis matching [`fft`]: (k − N/2)/(N·dwell).
pub fn fft_frequencies(points: usize, dwell: f64) -> Vec<f64> {
    let n = points as f64;
    (0..points).map(|k| (k as f64 - n / 2.0) / (n * dwell)).collect()
}

/// `freq_hz,amplitude` rows.
pub fn spectrum_csv(freqs: &[f64], values: &[f64]) -> String {
    let mut s = String::from("freq_hz,amplitude\n");
    for (f, v) in freqs.iter().zip(values) {
        s.push_str(&format!("{},{}\n", g12(*f), g12(*v)));
    }
    s
}

/// Default dwell: 1/(4·max|E|/2π).
pub fn default_dwell(es: &EigenSystem) -> f64 {
    let emax = es.energies.iter().fold(0.0f64, |a, e| a.max(e.abs())) / (2.0 * PI);
    if emax == 0.0 {
        1e-3
    } else {
        1.0 / (4.0 * emax)
    }
}

// ------------------------------------------------------------- tomography

#[derive(Debug, Clone)]
pub struct DiagonalEstimate {
    pub populations: Vec<f64>,
    /// Directions dropped by the pseudo-inverse (nonzero means underdetermined).
    pub rank_deficiency: usize,
}

/// Linear map from the population vector to the observable line amplitudes
/// of a β_x readout, one row per observable transition.
fn readout_matrix(es: &EigenSystem, cat: &TransitionCatalog, beta_deg: f64) -> (Vec<usize>, CMatrix) {
    let d = es.dim();
    let obs: Vec<usize> = cat
        .entries
        .iter()
        .enumerate()
        .filter(|(_, t)| t.observable)
        .map(|(i, _)| i)
        .collect();
    let mut m = CMatrix::zeros(obs.len(), d);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let amps = readout_lines(es, cat, &DeviationDensityMatrix::from_populations(&e), beta_deg);
        for (row, &i) in obs.iter().enumerate() {
            m[(row, j)] = C64::new(amps[i], 0.0);
        }
    }
    (obs, m)
}

fn solve_populations(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    beta_deg: f64,
    measured: &[f64],
    trace: f64,
) -> DiagonalEstimate {
    let d = es.dim();
    let (obs, m) = readout_matrix(es, cat, beta_deg);
    let rows = obs.len() + 1;
    let mut a = CMatrix::zeros(rows, d);
    let mut b = vec![ZERO; rows];
    for (r, &i) in obs.iter().enumerate() {
        for j in 0..d {
            a[(r, j)] = m[(r, j)];
        }
        b[r] = C64::new(measured[i], 0.0);
    }
    // Trace row scaled like the readout so it carries comparable weight.
    let w = m.max_abs().max(1e-300);
    for j in 0..d {
        a[(rows - 1, j)] = C64::new(w, 0.0);
    }
    b[rows - 1] = C64::new(w * trace, 0.0);
    let (pinv, dropped) = pseudo_inverse(&a, RCOND);
    let x: Vec<f64> = (0..d)
        .map(|j| (0..rows).map(|r| pinv[(j, r)] * b[r]).sum::<C64>().re)
        .collect();
    DiagonalEstimate {
        populations: x,
        rank_deficiency: dropped,
    }
}

/// Crusher, β_x readout and inversion of the observable line amplitudes
/// (plus a trace condition) for the diagonal of `rho`.
pub fn tomo_diagonal(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    beta_deg: f64,
) -> DiagonalEstimate {
    let crushed = crush_gradient(rho);
    let measured = readout_lines(es, cat, &crushed, beta_deg);
    solve_populations(es, cat, beta_deg, &measured, rho.trace().re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset2D {
    pub t1_points: usize,
    pub t2_points: usize,
    pub dwell1: f64,
    pub dwell2: f64,
    /// Row-major: `data[i1 * t2_points + i2]`.
    pub data: Vec<C64>,
}

impl Dataset2D {
    pub fn at(&self, i1: usize, i2: usize) -> C64 {
        self.data[i1 * self.t2_points + i2]
    }

    /// Header plus `t1_idx t2_idx re im` rows.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# dataset2d t1_points {} t2_points {} dwell1 {} dwell2 {}\n",
            self.t1_points,
            self.t2_points,
            g12(self.dwell1),
            g12(self.dwell2)
        );
        for i in 0..self.t1_points {
            for j in 0..self.t2_points {
                let z = self.at(i, j);
                s.push_str(&format!("{i} {j} {} {}\n", g12(z.re), g12(z.im)));
            }
        }
        s
    }

    /// Magnitude-mode 2D spectrum.
    pub fn spectrum(&self) -> Result<Spectrum2D> {
        let (n1, n2) = (self.t1_points, self.t2_points);
        check_points(n1)?;
        check_points(n2)?;
        let mut planner = FftPlanner::new();
        let f2 = planner.plan_fft_forward(n2);
        let f1 = planner.plan_fft_forward(n1);
        let mut rows = self.data.clone();
        for r in rows.chunks_mut(n2) {
            f2.process(r);
            r.rotate_right(n2 / 2);
        }
        let mut col = vec![ZERO; n1];
        let mut mag = vec![0.0; n1 * n2];
        for j in 0..n2 {
            for i in 0..n1 {
                col[i] = rows[i * n2 + j];
            }
            f1.process(&mut col);
            col.rotate_right(n1 / 2);
            for i in 0..n1 {
                mag[i * n2 + j] = col[i].norm();
            }
        }
        Ok(Spectrum2D {
            f1: fft_frequencies(n1, self.dwell1),
            f2: fft_frequencies(n2, self.dwell2),
            mag,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum2D {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Row-major over (f1, f2).
    pub mag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak2D {
    pub f1: f64,
    pub f2: f64,
    pub height: f64,
    /// |ΔM_z| of the coherence whose frequency is nearest to `f1`.
    pub order: usize,
}

impl Spectrum2D {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.mag[i * self.f2.len() + j]
    }

    /// Local maxima above `rel` of the global maximum, refined by a 3-bin
    /// centroid along each axis.
    pub fn peaks(&self, rel: f64) -> Vec<(f64, f64, f64)> {
        let (n1, n2) = (self.f1.len(), self.f2.len());
        let gmax = self.mag.iter().cloned().fold(0.0, f64::max);
        if gmax == 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                let v = self.at(i, j);
                if v < rel * gmax {
                    continue;
                }
                let mut is_max = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= n1 as i64 || b >= n2 as i64 {
                            continue;
                        }
                        let w = self.at(a as usize, b as usize);
                        let earlier = (di, dj) < (0, 0);
                        if w > v || (earlier && w == v) {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
                if is_max {
                    let c1 = centroid(&self.f1, |k| self.at(k, j), i);
                    let c2 = centroid(&self.f2, |k| self.at(i, k), j);
                    out.push((c1, c2, v));
                }
            }
        }
        out
    }

    /// `f1 f2 magnitude` rows, blank line between f1 blocks (gnuplot grid).
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::from("# f1_hz f2_hz magnitude\n");
        for (i, f1) in self.f1.iter().enumerate() {
            for (j, f2) in self.f2.iter().enumerate() {
                s.push_str(&format!("{} {} {}\n", g12(*f1), g12(*f2), g12(self.at(i, j))));
            }
            s.push('\n');
        }
        s
    }

    pub fn bin_width_f1(&self) -> f64 {
        if self.f1.len() > 1 {
            self.f1[1] - self.f1[0]
        } else {
            0.0
        }
    }
}

fn centroid(axis: &[f64], val: impl Fn(usize) -> f64, k: usize) -> f64 {
    let lo = k.saturating_sub(1);
    let hi = (k + 1).min(axis.len() - 1);
    let (mut num, mut den) = (0.0, 0.0);
    for q in lo..=hi {
        num += axis[q] * val(q);
        den += val(q);
    }
    if den > 0.0 {
        num / den
    } else {
        axis[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tomo2DOptions {
    pub t1_points: usize,
    pub t2_points: usize,
    /// Defaults to [`default_dwell`] when `None`.
    pub dwell1: Option<f64>,
    pub dwell2: Option<f64>,
}

impl Default for Tomo2DOptions {
    fn default() -> Self {
        Tomo2DOptions {
            t1_points: 512,
            t2_points: 2048,
            dwell1: None,
            dwell2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceEstimate {
    pub k: usize,
    pub l: usize,
    /// M_z(k) − M_z(l).
    pub order: i32,
    pub freq_hz: f64,
    pub value: C64,
}

#[derive(Debug, Clone)]
pub struct Tomo2D {
    pub dataset: Dataset2D,
    pub peaks: Vec<Peak2D>,
    pub coherences: Vec<CoherenceEstimate>,
    pub rank_deficiency: usize,
}

fn coherence_freq(es: &EigenSystem, k: usize, l: usize) -> f64 {
    (es.energies[l] - es.energies[k]) / (2.0 * PI)
}

/// Mixing of the multiple-quantum experiment: (π/2)_y, crusher, (π/4)_−y.
fn mq_mixing(es: &EigenSystem) -> (CMatrix, CMatrix) {
    (
        hard_pulse_unitary(es, 90.0, PulseAxis::Y.degrees()),
        hard_pulse_unitary(es, 45.0, PulseAxis::MINUS_Y.degrees()),
    )
}

/// Line amplitudes (all catalog lines) produced by unit |k⟩⟨l| through the
/// mixing sequence.
fn mixing_response(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    u1: &CMatrix,
    pop_lines: &[Vec<C64>],
    k: usize,
    l: usize,
) -> Vec<C64> {
    let d = es.dim();
    let mut out = vec![ZERO; cat.len()];
    for j in 0..d {
        let p = u1[(j, k)] * u1[(j, l)].conj();
        if p.norm() == 0.0 {
            continue;
        }
        for (o, c) in out.iter_mut().zip(&pop_lines[j]) {
            *o += p * c;
        }
    }
    out
}

/// 2D multiple-quantum tomography: t1 − (π/2)_y − crusher − (π/4)_−y − t2.
///
/// Returns the time-domain dataset, its magnitude-mode peaks with coherence
/// orders, and quantitative off-diagonal estimates obtained by fitting the
/// known t1 frequencies and t2 line patterns.
pub fn tomo_offdiagonal_2d(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    opts: Tomo2DOptions,
) -> Result<Tomo2D> {
    check_points(opts.t1_points)?;
    check_points(opts.t2_points)?;
    let d = es.dim();
    let dwell1 = opts.dwell1.unwrap_or_else(|| default_dwell(es));
    let dwell2 = opts.dwell2.unwrap_or_else(|| default_dwell(es));
    for dw in [dwell1, dwell2] {
        if !(dw.is_finite() && dw > 0.0) {
            return Err(SpinError::NonFinite("dwell"));
        }
    }
    let mut fmax1 = 0.0f64;
    for k in 0..d {
        for l in 0..d {
            fmax1 = fmax1.max(coherence_freq(es, k, l).abs());
        }
    }
    let fmax2 = cat.entries.iter().fold(0.0f64, |a, t| a.max(t.freq_hz.abs()));
    for (dw, fm) in [(dwell1, fmax1), (dwell2, fmax2)] {
        if fm > 0.0 && fm >= 1.0 / (2.0 * dw) {
            return Err(SpinError::Folding {
                dwell: dw,
                required: 1.0 / (2.0 * fm),
            });
        }
    }

    let (u1, u2) = mq_mixing(es);
    // Line amplitudes produced by unit population on level j after (π/4)_−y.
    let pop_lines: Vec<Vec<C64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            coherence_lines(es, cat, &DeviationDensityMatrix::from_populations(&e).apply(&u2))
        })
        .collect();
    let (n1, n2) = (opts.t1_points, opts.t2_points);
    let phasors: Vec<Vec<C64>> = cat
        .entries
        .iter()
        .map(|t| {
            (0..n2)
                .map(|m| C64::from_polar(1.0, 2.0 * PI * t.freq_hz * m as f64 * dwell2))
                .collect()
        })
        .collect();

    let mut data = vec![ZERO; n1 * n2];
    for i in 0..n1 {
        let r1 = free_evolution(es, rho, i as f64 * dwell1);
        let pops = crush_gradient(&r1.apply(&u1)).populations();
        let row = &mut data[i * n2..(i + 1) * n2];
        for (li, ph) in phasors.iter().enumerate() {
            let amp: C64 = (0..d).map(|j| pop_lines[j][li] * pops[j]).sum();
            if amp.norm() == 0.0 {
                continue;
            }
            for (x, p) in row.iter_mut().zip(ph) {
                *x += amp * p;
            }
        }
    }
    let dataset = Dataset2D {
        t1_points: n1,
        t2_points: n2,
        dwell1,
        dwell2,
        data,
    };

    // Peak picking with coherence-order assignment from f1.
    let spec = dataset.spectrum()?;
    let peaks = spec
        .peaks(0.05)
        .into_iter()
        .map(|(f1, f2, h)| {
            let mut best = (f64::INFINITY, 0usize);
            for k in 0..d {
                for l in 0..d {
                    let dist = (coherence_freq(es, k, l) - f1).abs();
                    if dist < best.0 {
                        best = (dist, (es.mz[k] - es.mz[l]).abs().round() as usize);
                    }
                }
            }
            Peak2D {
                f1,
                f2,
                height: h,
                order: best.1,
            }
        })
        .collect();

    // Quantitative fit. Group every (k, l) by its t1 frequency.
    let tol = 1e-6;
    let mut groups: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for k in 0..d {
        for l in 0..d {
            let f = coherence_freq(es, k, l);
            match groups.iter_mut().find(|g| (g.0 - f).abs() < tol) {
                Some(g) => g.1.push((k, l)),
                None => groups.push((f, vec![(k, l)])),
            }
        }
    }
    let a1 = CMatrix::from_fn(n1, groups.len(), |i, g| {
        C64::from_polar(1.0, 2.0 * PI * groups[g].0 * i as f64 * dwell1)
    });
    let a2 = CMatrix::from_fn(n2, cat.len(), |m, li| phasors[li][m]);
    let (p1, mut deficiency) = pseudo_inverse(&a1, RCOND);
    let (p2, def2) = pseudo_inverse(&a2, RCOND);
    deficiency += def2;
    let s = CMatrix::from_vec(n1, n2, dataset.data.clone());
    // X[g][line] = Σ_i Σ_m P1[g,i] S[i,m] P2[line,m]
    let x = p1.matmul(&s).matmul(&p2.transpose());

    let mut coherences = Vec::new();
    for (g, (freq, members)) in groups.iter().enumerate() {
        if members.iter().all(|&(k, l)| k == l) {
            continue;
        }
        let mut design = CMatrix::zeros(cat.len(), members.len());
        for (c, &(k, l)) in members.iter().enumerate() {
            let resp = mixing_response(es, cat, &u1, &pop_lines, k, l);
            for (r, v) in resp.into_iter().enumerate() {
                design[(r, c)] = v;
            }
        }
        let (pg, dropped) = pseudo_inverse(&design, RCOND);
        let diag_members = members.iter().filter(|(k, l)| k == l).count();
        // The uniform diagonal direction is invisible by construction.
        deficiency += dropped.saturating_sub(diag_members.min(1));
        for (c, &(k, l)) in members.iter().enumerate() {
            if k == l {
                continue;
            }
            let value: C64 = (0..cat.len()).map(|r| pg[(c, r)] * x[(g, r)]).sum();
            coherences.push(CoherenceEstimate {
                k,
                l,
                order: (es.mz[k] - es.mz[l]).round() as i32,
                freq_hz: *freq,
                value,
            });
        }
    }
    coherences.sort_by_key(|c| (c.k, c.l));
    Ok(Tomo2D {
        dataset,
        peaks,
        coherences,
        rank_deficiency: deficiency,
    })
}

#[derive(Debug, Clone)]
pub struct Calibration {
    /// Observable line amplitudes directly after (π/4)_x.
    pub sum_lines: Vec<C64>,
    /// The same after (π/4)_y.
    pub diff_lines: Vec<C64>,
    /// ‖diff‖ / ‖sum‖.
    pub ratio: f64,
}

fn calibration_lines(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    phase: PulseAxis,
) -> Vec<C64> {
    let r = rho.apply(&hard_pulse_unitary(es, 45.0, phase.degrees()));
    let all = coherence_lines(es, cat, &r);
    cat.entries
        .iter()
        .zip(all)
        .filter(|(t, _)| t.observable)
        .map(|(_, a)| a)
        .collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Experiments (π/4)_x and (π/4)_y with direct detection. For a state with
/// no single-quantum coherence, the diagonal and double-quantum
/// contributions add in the first and cancel in the second, so the second
/// vanishes for (|00⟩ + |11⟩)/√2.
pub fn tomo_scale_calibration(es: &EigenSystem, cat: &TransitionCatalog, rho: &DeviationDensityMatrix) -> Calibration {
    let sum_lines = calibration_lines(es, cat, rho, PulseAxis::X);
    let diff_lines = calibration_lines(es, cat, rho, PulseAxis::Y);
    let ns = norm(&sum_lines);
    let ratio = if ns == 0.0 { 0.0 } else { norm(&diff_lines) / ns };
    Calibration {
        sum_lines,
        diff_lines,
        ratio,
    }
}

/// Least-squares gain that reconciles the coherence estimates with the
/// (π/4)_x calibration experiment, given the diagonal estimate. Returns 1
/// when the coherences do not contribute to that experiment.
pub fn fit_scale(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    cal: &Calibration,
    diag: &[f64],
    coherences: &[CoherenceEstimate],
) -> f64 {
    let d = es.dim();
    let diag_rho = DeviationDensityMatrix::from_populations(diag);
    let mut coh = CMatrix::zeros(d, d);
    for c in coherences {
        coh[(c.k, c.l)] = c.value;
    }
    let coh_rho = DeviationDensityMatrix::from_matrix(coh);
    let fd = calibration_lines(es, cat, &diag_rho, PulseAxis::X);
    let fc = calibration_lines(es, cat, &coh_rho, PulseAxis::X);
    let den: f64 = fc.iter().map(|x| x.norm_sqr()).sum();
    if den <= 1e-24 * norm(&cal.sum_lines).powi(2).max(1e-300) {
        return 1.0;
    }
    let num: f64 = fc
        .iter()
        .zip(cal.sum_lines.iter().zip(&fd))
        .map(|(c, (m, f))| (c.conj() * (m - f)).re)
        .sum();
    num / den
}

/// Assembles diagonal and scaled coherences. Returns the matrix and whether
/// a non-Hermitian assembly had to be symmetrised.
pub fn reconstruct_density(
    diag: &[f64],
    coherences: &[CoherenceEstimate],
    scale: f64,
) -> (DeviationDensityMatrix, bool) {
    let mut m = CMatrix::from_real_diag(diag);
    for c in coherences {
        m[(c.k, c.l)] = c.value * scale;
    }
    let herm = m.hermiticity_error();
    let sym = (&m + &m.adjoint()).scale_real(0.5);
    (
        DeviationDensityMatrix::from_matrix(sym),
        herm > 1e-9 * m.max_abs().max(1e-300),
    )
}

// ------------------------------------------------------------- Z-COSY

/// Observable catalog ids in ascending order.
pub fn observable_ids(cat: &TransitionCatalog) -> Vec<usize> {
    let mut ids: Vec<usize> = cat.observable().map(|t| t.id).collect();
    ids.sort_unstable();
    ids
}

/// Analytic connectivity of the observable transitions: +1 progressive,
/// −1 regressive, 0 when they share no level.
pub fn zcosy_connectivity(cat: &TransitionCatalog) -> ConnectivityMatrix {
    let ids = observable_ids(cat);
    let t = ids.len();
    let get = |id: usize| cat.get(id).expect("observable id");
    let m = (0..t)
        .map(|a| {
            (0..t)
                .map(|b| {
                    let (x, y) = (get(ids[a]), get(ids[b]));
                    if a == b {
                        0
                    } else if x.upper == y.lower || x.lower == y.upper {
                        1
                    } else if x.lower == y.lower || x.upper == y.upper {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    ConnectivityMatrix { ids, m }
}

/// Z-COSY pathway simulation: β − (coherence of transition a) − β −
/// z-filter − β − readout of transition b. Entry (a, b) is the cross-peak
/// amplitude normalised by the diagonal peak of `a` and the intensity ratio,
/// so connected pairs give about ∓½ and unconnected pairs about 0.
pub fn zcosy_pathway(es: &EigenSystem, cat: &TransitionCatalog, beta_deg: f64) -> Vec<Vec<f64>> {
    let ids = observable_ids(cat);
    let u = hard_pulse_unitary(es, beta_deg, PulseAxis::X.degrees());
    let rho1 = crate::dynamics::equilibrium_deviation(es).apply(&u);
    let idx: Vec<usize> = ids
        .iter()
        .map(|&id| cat.entries.iter().position(|t| t.id == id).expect("id"))
        .collect();
    let mut out = vec![vec![0.0; ids.len()]; ids.len()];
    for (ia, &ca) in idx.iter().enumerate() {
        let ta = &cat.entries[ca];
        let mut sel = CMatrix::zeros(es.dim(), es.dim());
        sel[(ta.upper, ta.lower)] = rho1.mat[(ta.upper, ta.lower)];
        sel[(ta.lower, ta.upper)] = rho1.mat[(ta.lower, ta.upper)];
        let z = crush_gradient(&DeviationDensityMatrix::from_matrix(sel).apply(&u));
        let lines = readout_lines(es, cat, &z, beta_deg);
        let diag = lines[ca];
        for (ib, &cb) in idx.iter().enumerate() {
            let tb = &cat.entries[cb];
            out[ia][ib] = if diag == 0.0 {
                0.0
            } else {
                lines[cb] / diag * ta.intensity / tb.intensity
            };
        }
    }
    out
}

/// Signs read off [`zcosy_pathway`]: +1 when the normalised cross peak is
/// below −¼ (opposite to the diagonal), −1 above +¼, else 0.
pub fn zcosy_signs(es: &EigenSystem, cat: &TransitionCatalog, beta_deg: f64) -> ConnectivityMatrix {
    let z = zcosy_pathway(es, cat, beta_deg);
    let ids = observable_ids(cat);
    let m = (0..ids.len())
        .map(|a| {
            (0..ids.len())
                .map(|b| {
                    if a == b {
                        0
                    } else if z[a][b] < -0.25 {
                        1
                    } else if z[a][b] > 0.25 {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    ConnectivityMatrix { ids, m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::equilibrium_deviation;
    use crate::spin::{eigensystem, transition_catalog, SpinSystem, DEFAULT_THRESHOLD};

    fn citrate() -> (EigenSystem, TransitionCatalog) {
        let es = eigensystem(&SpinSystem::new("c", vec![127.75, 72.25]).with_j(0, 1, 15.0), false).unwrap();
        let cat = transition_catalog(&es, DEFAULT_THRESHOLD);
        (es, cat)
    }

    #[test]
    fn equilibrium_lines_positive() {
        let (es, cat) = citrate();
        let s = detect_small_angle(&es, &cat, &equilibrium_deviation(&es), 10.0);
        assert_eq!(s.lines.len(), 4);
        assert!(s.lines.iter().all(|l| l.amplitude > 0.0));
        assert!(detect_small_angle(&es, &cat, &DeviationDensityMatrix::zeros(4), 10.0)
            .lines
            .is_empty());
        assert!(s.to_csv().starts_with("freq_hz,amplitude\n"));
    }

    #[test]
    fn fid_of_diagonal_is_zero_and_parseval_holds() {
        let (es, _) = citrate();
        let eq = equilibrium_deviation(&es);
        assert!(acquire_fid(&es, &eq, 64, 1e-3).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(matches!(
            acquire_fid(&es, &eq, 100, 1e-3),
            Err(SpinError::NotPowerOfTwo(100))
        ));
        let rho = eq.apply(&hard_pulse_unitary(&es, 90.0, 90.0));
        let fid = acquire_fid(&es, &rho, 256, 1e-3).unwrap();
        let spec = fft(&fid).unwrap();
        let et: f64 = fid.iter().map(|z| z.norm_sqr()).sum();
        let ef: f64 = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / 256.0;
        assert!((et - ef).abs() < 1e-10 * et);
    }

    #[test]
    fn single_coherence_peaks_at_catalog_frequency() {
        let (es, cat) = citrate();
        let t = &cat.entries[0];
        let mut rho = DeviationDensityMatrix::zeros(4);
        rho.mat[(t.upper, t.lower)] = C64::new(0.5, 0.0);
        rho.mat[(t.lower, t.upper)] = C64::new(0.5, 0.0);
        let dwell = 1.0 / 1000.0;
        let spec = fft(&acquire_fid(&es, &rho, 1024, dwell).unwrap()).unwrap();
        let freqs = fft_frequencies(1024, dwell);
        let k = (0..1024)
            .max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm()))
            .unwrap();
        assert!((freqs[k] - t.freq_hz).abs() <= 1000.0 / 1024.0);
    }

    #[test]
    fn diagonal_tomography_round_trip() {
        let (es, cat) = citrate();
        let eq = equilibrium_deviation(&es);
        let est = tomo_diagonal(&es, &cat, &eq, 10.0);
        assert_eq!(est.rank_deficiency, 0);
        for (a, b) in est.populations.iter().zip(eq.populations()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let zero = tomo_diagonal(&es, &cat, &DeviationDensityMatrix::zeros(4), 10.0);
        assert!(zero.populations.iter().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn folding_is_rejected() {
        let (es, cat) = citrate();
        let opts = Tomo2DOptions {
            t1_points: 16,
            t2_points: 16,
            dwell1: Some(0.1),
            dwell2: None,
        };
        match tomo_offdiagonal_2d(&es, &cat, &equilibrium_deviation(&es), opts) {
            Err(SpinError::Folding { dwell, required }) => assert!(dwell == 0.1 && required < 0.1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_input_gives_axial_peaks_only() {
        let (es, cat) = citrate();
        let opts = Tomo2DOptions {
            t1_points: 64,
            t2_points: 256,
            dwell1: None,
            dwell2: None,
        };
        let t = tomo_offdiagonal_2d(&es, &cat, &equilibrium_deviation(&es), opts).unwrap();
        assert!(!t.peaks.is_empty());
        assert!(t.peaks.iter().all(|p| p.order == 0 && p.f1.abs() < 1e-9));
        assert!(t.coherences.iter().all(|c| c.value.norm() < 1e-9));
    }

    #[test]
    fn citrate_zcosy_matches_analytic() {
        let (es, cat) = citrate();
        let cm = zcosy_connectivity(&cat);
        let zeros = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .filter(|&(a, b)| a < b && cm.m[a][b] == 0)
            .count();
        assert_eq!(zeros, 2);
        assert_eq!(zcosy_signs(&es, &cat, 10.0), cm);
    }

    #[test]
    fn calibration_sum_and_difference() {
        let (es, cat) = citrate();
        let diag = DeviationDensityMatrix::from_populations(&[1.0, -1.0, -1.0, 1.0]);
        let cal = tomo_scale_calibration(&es, &cat, &diag);
        assert!((cal.ratio - 1.0).abs() < 1e-12);
        let mut m = diag.mat.clone();
        m[(0, 3)] = C64::new(2.0, 0.0);
        m[(3, 0)] = C64::new(2.0, 0.0);
        let bell = DeviationDensityMatrix::from_matrix(m.clone());
        assert!(tomo_scale_calibration(&es, &cat, &bell).ratio < 1e-12);
        m[(0, 3)] = C64::new(1.0, 0.0);
        m[(3, 0)] = C64::new(1.0, 0.0);
        let half = tomo_scale_calibration(&es, &cat, &DeviationDensityMatrix::from_matrix(m));
        assert!(half.ratio > 0.1, "{}", half.ratio);
    }
}
