//! Hierarchy construction for the extended HEOM.
//!
//! Each dissipation channel couples one qubit's `sigma_z` to a bath whose
//! correlation function is a certified [`ExponentialSeries`].  Every
//! complex exponential term contributes an `(m_k, n_k)` index pair with
//! left/right-multiplication down-couplings; terms marked classical (real
//! amplitude and rate) and the zero-decay static term each contribute a
//! single commutator-coupled index, the scaled hierarchy being identical
//! to the `(m, n)` form for such terms.  The square-root-scaled ladder
//! factors follow the extended-HEOM convention and are frozen by the
//! analytic pure-dephasing golden tests.

use crate::series::ExponentialSeries;
use crate::{C64, CMatrix, ExecMode};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("hierarchy index count exceeded the configured maximum ({max}); reached {reached}")]
    Overflow { max: usize, reached: usize },
    #[error("channel coupling dimension mismatch: {0}")]
    Coupling(String),
    #[error("series invalid: {0}")]
    Series(#[from] crate::series::SeriesError),
}

/// `sigma_z` acting on one qubit of an `n_qubits` register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingOp {
    pub qubit: usize,
    pub n_qubits: usize,
}

impl CouplingOp {
    pub fn new(qubit: usize, n_qubits: usize) -> Self {
        assert!(qubit < n_qubits);
        CouplingOp { qubit, n_qubits }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Diagonal of the coupling operator in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        let bit = self.n_qubits - 1 - self.qubit; // qubit 0 is the leftmost tensor factor
        (0..dim)
            .map(|b| if (b >> bit) & 1 == 0 { 1.0 } else { -1.0 })
            .collect()
    }
}

/// One qubit's bath: the coupling operator and its exponential series.
#[derive(Clone, Debug)]
pub struct DissipationChannel {
    pub coupling: CouplingOp,
    pub series: ExponentialSeries,
}

/// Truncation of the hierarchy.
#[derive(Clone, Copy, Debug)]
pub struct TruncationScheme {
    /// Cap on the total excitation tier of dynamic slots.
    pub tier_cap: usize,
    /// Separate cap for static slots.  `None` counts static excitations
    /// toward `tier_cap` (the flat truncation used for the perturbative
    /// TNL-QME surrogate).
    pub static_cap: Option<usize>,
    /// Drop indices whose estimated influence is below this threshold
    /// (product of per-slot Poisson weights).  `None` keeps the full
    /// stars-and-bars index set.
    pub importance_threshold: Option<f64>,
    /// Time horizon used by the importance weights.
    pub horizon: f64,
    /// Hard limit on the index count.
    pub max_ados: usize,
}

impl TruncationScheme {
    /// Flat truncation at total tier `depth`: the stars-and-bars index set
    /// whose count is `C(M + L, L)` over `M` slots.
    pub fn flat(depth: usize) -> Self {
        TruncationScheme {
            tier_cap: depth,
            static_cap: None,
            importance_threshold: None,
            horizon: 1.0,
            max_ados: 2_000_000,
        }
    }

    /// Importance-pruned truncation for production runs.
    pub fn pruned(tier_cap: usize, horizon: f64, threshold: f64) -> Self {
        TruncationScheme {
            tier_cap,
            static_cap: Some(64),
            importance_threshold: Some(threshold),
            horizon,
            max_ados: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlotKind {
    /// `m`-type index of a quantum pair: amplitude `d`, left multiplication.
    PairM,
    /// `n`-type index: conjugate amplitude, right multiplication.
    PairN,
    /// Single commutator-coupled index for a classical term.
    Classical,
    /// Zero-decay static mode.
    Static,
}

#[derive(Clone, Debug)]
struct Slot {
    kind: SlotKind,
    channel: usize,
    /// `sqrt(d)` (or `sqrt(variance)` for static); conjugated for `PairN`.
    root_amp: C64,
    /// Decay rate entering the damping sum (conjugated for `PairN`).
    rate: C64,
    /// Poisson influence weight `2|d| T min(T, 1/Re gamma)`.
    weight: f64,
    /// Per-slot depth cap derived from the weight.
    cap: u8,
}

const OP_COMM: u8 = 0;
const OP_LEFT: u8 = 1;
const OP_RIGHT: u8 = 2;

#[derive(Clone, Copy, Debug)]
struct Link {
    target: u32,
    coef: C64,
    op: u8,
    channel: u8,
}

/// Immutable hierarchy: canonical index list plus precomputed neighbor
/// links and damping coefficients, ready for propagation.
#[derive(Debug)]
pub struct Hierarchy {
    dim: usize,
    n_ados: usize,
    indices: Vec<Box<[u8]>>,
    damping: Vec<C64>,
    links: Vec<Link>,
    link_offsets: Vec<u32>,
    couplings: Vec<Vec<f64>>,
}

impl Hierarchy {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of auxiliary density operators (including the root).
    pub fn len(&self) -> usize {
        self.n_ados
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of ADO `i` in canonical (lexicographic) order.
    pub fn index(&self, i: usize) -> &[u8] {
        &self.indices[i]
    }

    /// Total state length in complex numbers.
    pub fn state_len(&self) -> usize {
        self.n_ados * self.dim * self.dim
    }

    /// Fresh state vector with all non-root ADOs zero (factorized
    /// system-bath initial condition).
    pub fn initial_state(&self, rho0: &CMatrix) -> Vec<C64> {
        assert_eq!(rho0.nrows(), self.dim);
        let d2 = self.dim * self.dim;
        let mut y = vec![C64::ZERO; self.state_len()];
        for r in 0..self.dim {
            for c in 0..self.dim {
                y[r * self.dim + c] = rho0[(r, c)];
            }
        }
        let _ = d2;
        y
    }

    /// Root ADO (the physical reduced density matrix) of a state vector.
    pub fn reduced_density(&self, y: &[C64]) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |r, c| y[r * d + c])
    }

    /// Apply a system unitary to every ADO: `rho -> U rho U^dagger`.
    pub fn apply_unitary(&self, u: &CMatrix, y: &mut [C64]) {
        let d = self.dim;
        let d2 = d * d;
        let uf: Vec<C64> = (0..d2).map(|i| u[(i / d, i % d)]).collect();
        let mut tmp = vec![C64::ZERO; d2];
        let mut tmp2 = vec![C64::ZERO; d2];
        for blk in y.chunks_mut(d2) {
            // tmp = U * rho
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C64::ZERO;
                    for k in 0..d {
                        acc += uf[r * d + k] * blk[k * d + c];
                    }
                    tmp[r * d + c] = acc;
                }
            }
            // tmp2 = tmp * U^dagger
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C64::ZERO;
                    for k in 0..d {
                        acc += tmp[r * d + k] * uf[c * d + k].conj();
                    }
                    tmp2[r * d + c] = acc;
                }
            }
            blk.copy_from_slice(&tmp2);
        }
    }

    /// Hierarchy right-hand side.
    ///
    /// Per ADO: `-i[H, rho] - (sum m_k gamma_k + sum n_k gamma_k^*) rho`
    /// plus the square-root-scaled couplings to tier neighbors; truncated
    /// neighbors are zero.  `out` slots are disjoint per ADO, so both
    /// execution modes are bit-identical.
    pub fn rhs(&self, y: &[C64], h_flat: Option<&[C64]>, out: &mut [C64], mode: ExecMode) {
        let d = self.dim;
        let d2 = d * d;
        debug_assert_eq!(y.len(), self.state_len());
        debug_assert_eq!(out.len(), self.state_len());
        let work = |i: usize, out_blk: &mut [C64]| {
            self.rhs_one(i, y, h_flat, out_blk);
        };
        match mode {
            ExecMode::Sequential => {
                for (i, out_blk) in out.chunks_mut(d2).enumerate() {
                    work(i, out_blk);
                }
            }
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => {
                use rayon::prelude::*;
                out.par_chunks_mut(d2).enumerate().for_each(|(i, out_blk)| {
                    work(i, out_blk);
                });
            }
        }
    }

    #[inline]
    fn rhs_one(&self, i: usize, y: &[C64], h_flat: Option<&[C64]>, out_blk: &mut [C64]) {
        let d = self.dim;
        let d2 = d * d;
        let blk = &y[i * d2..(i + 1) * d2];
        let damp = self.damping[i];
        // -i [H, rho] + damping
        if let Some(h) = h_flat {
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C64::ZERO;
                    for k in 0..d {
                        acc += h[r * d + k] * blk[k * d + c] - blk[r * d + k] * h[k * d + c];
                    }
                    out_blk[r * d + c] = -C64::I * acc + damp * blk[r * d + c];
                }
            }
        } else {
            for (o, &v) in out_blk.iter_mut().zip(blk.iter()) {
                *o = damp * v;
            }
        }
        let (lo, hi) = (
            self.link_offsets[i] as usize,
            self.link_offsets[i + 1] as usize,
        );
        for l in &self.links[lo..hi] {
            let nb = &y[l.target as usize * d2..(l.target as usize + 1) * d2];
            let q = &self.couplings[l.channel as usize];
            match l.op {
                OP_COMM => {
                    for r in 0..d {
                        for c in 0..d {
                            let f = q[r] - q[c];
                            if f != 0.0 {
                                out_blk[r * d + c] += l.coef * f * nb[r * d + c];
                            }
                        }
                    }
                }
                OP_LEFT => {
                    for r in 0..d {
                        for c in 0..d {
                            out_blk[r * d + c] += l.coef * q[r] * nb[r * d + c];
                        }
                    }
                }
                _ => {
                    for r in 0..d {
                        for c in 0..d {
                            out_blk[r * d + c] += l.coef * q[c] * nb[r * d + c];
                        }
                    }
                }
            }
        }
    }
}

fn build_slots(channels: &[DissipationChannel], scheme: &TruncationScheme) -> Vec<Slot> {
    let t = scheme.horizon;
    let mut slots = Vec::new();
    for (ci, ch) in channels.iter().enumerate() {
        for term in &ch.series.terms {
            let s = term.amplitude.sqrt();
            let tau = (1.0 / term.rate.re.max(1e-300)).min(t);
            let weight = 2.0 * term.amplitude.norm() * t * tau;
            let cap = per_slot_cap(weight);
            if term.classical {
                slots.push(Slot {
                    kind: SlotKind::Classical,
                    channel: ci,
                    root_amp: s,
                    rate: term.rate,
                    weight,
                    cap,
                });
            } else {
                slots.push(Slot {
                    kind: SlotKind::PairM,
                    channel: ci,
                    root_amp: s,
                    rate: term.rate,
                    weight,
                    cap,
                });
                slots.push(Slot {
                    kind: SlotKind::PairN,
                    channel: ci,
                    root_amp: s.conj(),
                    rate: term.rate.conj(),
                    weight,
                    cap,
                });
            }
        }
        if ch.series.static_variance > 0.0 {
            let sigma = ch.series.static_variance.sqrt();
            let x = 2.0 * sigma * t;
            slots.push(Slot {
                kind: SlotKind::Static,
                channel: ci,
                root_amp: C64::new(sigma, 0.0),
                rate: C64::ZERO,
                weight: 2.0 * ch.series.static_variance * t * t,
                // amplitude-based cap: the static ladder is one-dimensional
                // and cheap, so keep it generous
                cap: (x * x + 10.0 * x + 6.0).ceil().min(120.0) as u8,
            });
        }
    }
    slots
}

fn per_slot_cap(lambda: f64) -> u8 {
    (lambda + 8.0 * lambda.sqrt() + 3.0).ceil().min(120.0) as u8
}

/// Build the hierarchy index set with neighbor maps for the given channels.
///
/// With `TruncationScheme::flat(depth)` the index set is every multi-index
/// of total tier `<= depth`, in deterministic lexicographic order; the
/// count over `M` slots is the stars-and-bars number `C(M + depth, depth)`.
pub fn build_hierarchy(
    channels: &[DissipationChannel],
    scheme: &TruncationScheme,
) -> Result<Hierarchy, HierarchyError> {
    let dim = channels
        .first()
        .map(|c| c.coupling.dim())
        .unwrap_or(2);
    for ch in channels {
        ch.series.validate()?;
        if ch.coupling.dim() != dim {
            return Err(HierarchyError::Coupling(
                "all channels must act on the same register".into(),
            ));
        }
    }
    let slots = build_slots(channels, scheme);
    let nslots = slots.len();

    // breadth-first enumeration, then canonical sort
    let mut seen: HashMap<Box<[u8]>, ()> = HashMap::new();
    let root: Box<[u8]> = vec![0u8; nslots].into_boxed_slice();
    let mut list: Vec<Box<[u8]>> = vec![root.clone()];
    seen.insert(root, ());
    let mut head = 0usize;
    while head < list.len() {
        let cur = list[head].clone();
        head += 1;
        let dyn_tier: usize = cur
            .iter()
            .zip(&slots)
            .filter(|(_, s)| s.kind != SlotKind::Static)
            .map(|(&m, _)| m as usize)
            .sum();
        let stat_tier: usize = cur
            .iter()
            .zip(&slots)
            .filter(|(_, s)| s.kind == SlotKind::Static)
            .map(|(&m, _)| m as usize)
            .sum();
        for j in 0..nslots {
            let is_static = slots[j].kind == SlotKind::Static;
            match scheme.static_cap {
                Some(cap) if is_static => {
                    if stat_tier >= cap {
                        continue;
                    }
                }
                Some(_) => {
                    if dyn_tier >= scheme.tier_cap {
                        continue;
                    }
                }
                None => {
                    if dyn_tier + stat_tier >= scheme.tier_cap {
                        continue;
                    }
                }
            }
            if scheme.importance_threshold.is_some() && cur[j] >= slots[j].cap {
                continue;
            }
            let mut next = cur.clone();
            next[j] += 1;
            if seen.contains_key(&next) {
                continue;
            }
            if let Some(thr) = scheme.importance_threshold {
                let total: usize = next.iter().map(|&m| m as usize).sum();
                if total > 2 && poisson_importance(&next, &slots) < thr {
                    continue;
                }
            }
            if list.len() >= scheme.max_ados {
                return Err(HierarchyError::Overflow {
                    max: scheme.max_ados,
                    reached: list.len() + 1,
                });
            }
            seen.insert(next.clone(), ());
            list.push(next);
        }
    }
    drop(seen);
    list.sort();
    let lookup: HashMap<&[u8], u32> = list
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_ref(), i as u32))
        .collect();

    let n_ados = list.len();
    let mut damping = Vec::with_capacity(n_ados);
    let mut links = Vec::new();
    let mut link_offsets = Vec::with_capacity(n_ados + 1);
    link_offsets.push(0u32);
    let minus_i = -C64::I;
    let mut scratch = vec![0u8; nslots];
    for idx in &list {
        let mut damp = C64::ZERO;
        for (j, slot) in slots.iter().enumerate() {
            let dep = idx[j] as f64;
            damp += slot.rate * dep;

            scratch.copy_from_slice(idx);
            // raise
            scratch[j] = idx[j] + 1;
            if let Some(&t) = lookup.get(&scratch[..]) {
                let c = minus_i * (dep + 1.0).sqrt() * slot.root_amp;
                links.push(Link {
                    target: t,
                    coef: c,
                    op: OP_COMM,
                    channel: slot.channel as u8,
                });
            }
            // lower
            if idx[j] > 0 {
                scratch[j] = idx[j] - 1;
                if let Some(&t) = lookup.get(&scratch[..]) {
                    let (coef, op) = match slot.kind {
                        SlotKind::PairM => (minus_i * dep.sqrt() * slot.root_amp, OP_LEFT),
                        SlotKind::PairN => (C64::I * dep.sqrt() * slot.root_amp, OP_RIGHT),
                        SlotKind::Classical | SlotKind::Static => {
                            (minus_i * dep.sqrt() * slot.root_amp, OP_COMM)
                        }
                    };
                    links.push(Link {
                        target: t,
                        coef,
                        op,
                        channel: slot.channel as u8,
                    });
                }
            }
            scratch[j] = idx[j];
        }
        damping.push(-damp);
        link_offsets.push(links.len() as u32);
    }

    Ok(Hierarchy {
        dim,
        n_ados,
        indices: list,
        damping,
        links,
        link_offsets,
        couplings: channels.iter().map(|c| c.coupling.diagonal()).collect(),
    })
}

/// Estimated relative influence of a multi-index: product over slots of
/// `lambda^m / m!` with `lambda` the slot's phase-variance share.
fn poisson_importance(idx: &[u8], slots: &[Slot]) -> f64 {
    let mut v = 1.0f64;
    for (j, &m) in idx.iter().enumerate() {
        for q in 1..=m as usize {
            v *= slots[j].weight / q as f64;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ExpTerm;

    fn quantum_series(k: usize) -> ExponentialSeries {
        ExponentialSeries {
            terms: (0..k)
                .map(|i| ExpTerm {
                    amplitude: C64::new(1e-6, 1e-7),
                    rate: C64::new(0.1 * (i + 1) as f64, 0.05),
                    classical: false,
                })
                .collect(),
            static_variance: 0.0,
        }
    }

    fn channel(k: usize) -> DissipationChannel {
        DissipationChannel {
            coupling: CouplingOp::new(0, 1),
            series: quantum_series(k),
        }
    }

    #[test]
    fn counts_follow_stars_and_bars() {
        // no terms: root only
        let h = build_hierarchy(
            &[DissipationChannel {
                coupling: CouplingOp::new(0, 1),
                series: ExponentialSeries::empty(),
            }],
            &TruncationScheme::flat(3),
        )
        .unwrap();
        assert_eq!(h.len(), 1);
        // K=2 terms -> M=4 slots, L=1: 1 + 4
        let h = build_hierarchy(&[channel(2)], &TruncationScheme::flat(1)).unwrap();
        assert_eq!(h.len(), 5);
        // K=3 terms -> M=6 slots, L=2: C(8,2) = 28
        let h = build_hierarchy(&[channel(3)], &TruncationScheme::flat(2)).unwrap();
        assert_eq!(h.len(), 28);
    }

    #[test]
    fn canonical_order_is_deterministic() {
        let a = build_hierarchy(&[channel(3)], &TruncationScheme::flat(2)).unwrap();
        let b = build_hierarchy(&[channel(3)], &TruncationScheme::flat(2)).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.index(i), b.index(i));
        }
        // root is first
        assert!(a.index(0).iter().all(|&m| m == 0));
    }

    #[test]
    fn overflow_is_reported() {
        let mut scheme = TruncationScheme::flat(4);
        scheme.max_ados = 10;
        let err = build_hierarchy(&[channel(3)], &scheme).unwrap_err();
        match err {
            HierarchyError::Overflow { max, reached } => {
                assert_eq!(max, 10);
                assert!(reached > 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn root_derivative_is_traceless_without_channels() {
        // no channels: d rho/dt = -i [H, rho]
        let h = build_hierarchy(
            &[DissipationChannel {
                coupling: CouplingOp::new(0, 1),
                series: ExponentialSeries::empty(),
            }],
            &TruncationScheme::flat(2),
        )
        .unwrap();
        let rho = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.7, 0.0),
                C64::new(0.1, 0.2),
                C64::new(0.1, -0.2),
                C64::new(0.3, 0.0),
            ],
        );
        let ham = crate::pauli::sigma_x() * C64::new(0.4, 0.0);
        let hf: Vec<C64> = (0..4).map(|i| ham[(i / 2, i % 2)]).collect();
        let y = h.initial_state(&rho);
        let mut out = vec![C64::ZERO; y.len()];
        h.rhs(&y, Some(&hf), &mut out, ExecMode::Sequential);
        let expected = crate::pauli::commutator(&ham, &rho) * (-C64::I);
        for r in 0..2 {
            for c in 0..2 {
                assert!((out[r * 2 + c] - expected[(r, c)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn root_derivative_trace_is_structurally_zero() {
        let series = ExponentialSeries {
            terms: vec![ExpTerm {
                amplitude: C64::new(2e-6, 5e-7),
                rate: C64::new(0.02, 0.01),
                classical: false,
            }],
            static_variance: 1e-6,
        };
        let h = build_hierarchy(
            &[DissipationChannel {
                coupling: CouplingOp::new(0, 1),
                series,
            }],
            &TruncationScheme::flat(3),
        )
        .unwrap();
        // populate every ADO with a random-ish dense block
        let mut y = vec![C64::ZERO; h.state_len()];
        for (i, v) in y.iter_mut().enumerate() {
            let x = (i as f64 * 0.37).sin();
            *v = C64::new(x, 0.3 * x * x - 0.1);
        }
        let mut out = vec![C64::ZERO; y.len()];
        h.rhs(&y, None, &mut out, ExecMode::Sequential);
        let tr = out[0] + out[3];
        assert!(tr.norm() < 1e-16, "root trace derivative {tr}");
    }

    #[test]
    fn coupling_diagonal_two_qubits() {
        let q0 = CouplingOp::new(0, 2).diagonal();
        let q1 = CouplingOp::new(1, 2).diagonal();
        assert_eq!(q0, vec![1.0, 1.0, -1.0, -1.0]); // z (x) 1
        assert_eq!(q1, vec![1.0, -1.0, 1.0, -1.0]); // 1 (x) z
    }
}
