//! Experiment drivers composing the bath, hierarchy, control and
//! tomography layers.  Shared by the command-line runner and the
//! acceptance suite.

use crate::analytics::{echo_peaks, AnalyticsError, EchoSeries};
use crate::bath::{self, BathModel, QuadConfig};
use crate::control::PulseSchedule;
use crate::crgate::{calibrated_propagator, CrParams};
use crate::fit::{fit_exponentials, FitError, FitOutcome};
use crate::heom::{build_hierarchy, CouplingOp, DissipationChannel, HierarchyError, TruncationScheme};
use crate::lindblad;
use crate::pauli::rz;
use crate::propagate::{propagate_events, Event, PropagationError, PropagatorConfig, Trajectory};
use crate::series::{ExponentialSeries, SeriesError};
use crate::tomography::{assemble_channel, hermitian_probes, QuantumChannel};
use crate::{C64, CMatrix, ExecMode};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bath(#[from] bath::BathError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("experiment configuration: {0}")]
    Config(String),
}

/// Solver settings common to all experiments.
#[derive(Clone, Copy, Debug)]
pub struct SolverSettings {
    /// Nominal integrator step, ns.
    pub dt: f64,
    /// Total dynamic tier cap of the hierarchy.
    pub tier_cap: usize,
    /// Importance threshold for index pruning.
    pub importance_threshold: f64,
    /// Relative tolerance of the exponential decomposition.
    pub fit_tolerance: f64,
    /// Record every n-th integrator step.
    pub sample_stride: usize,
    pub exec: ExecMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dt: 0.04,
            tier_cap: 8,
            importance_threshold: 1e-7,
            fit_tolerance: 1e-3,
            sample_stride: 5,
            exec: ExecMode::default(),
        }
    }
}

impl SolverSettings {
    pub fn truncation(&self, horizon: f64) -> TruncationScheme {
        TruncationScheme::pruned(self.tier_cap, horizon, self.importance_threshold)
    }
}

/// Noise environment selection for an experiment.
#[derive(Clone, Debug)]
pub enum NoiseModel {
    /// Full 1/f bath through the certified exponential decomposition.
    Full1F(BathModel),
    /// Dynamic part above the cutoff plus the quasi-static sub-cutoff
    /// variance attached as a zero-frequency mode.
    CutoffPlusStatic(BathModel),
    /// The whole spectrum as one frozen Gaussian mode of this variance.
    TotalStatic(f64),
    /// Markovian pure dephasing with this `T_phi` (ns).
    Lindblad(f64),
    /// Noiseless.
    None,
}

/// Dissipation channels (one per qubit, identical independent baths) for
/// a noise model, plus the fit outcome when a decomposition was run.
pub fn noise_channels(
    noise: &NoiseModel,
    n_qubits: usize,
    horizon: f64,
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<(Vec<DissipationChannel>, Option<FitOutcome>), PipelineError> {
    let (series, outcome) = match noise {
        NoiseModel::Full1F(model) => {
            let out = fit_exponentials(model, horizon, solver.fit_tolerance, quad_cfg)?;
            (out.series.clone(), Some(out))
        }
        NoiseModel::CutoffPlusStatic(model) => {
            let out = fit_exponentials(model, horizon, solver.fit_tolerance, quad_cfg)?;
            let sigma2 = bath::subcutoff_static_variance(model);
            (out.series.clone().with_static_mode(sigma2)?, Some(out))
        }
        NoiseModel::TotalStatic(variance) => (
            ExponentialSeries::empty().with_static_mode(*variance)?,
            None,
        ),
        NoiseModel::Lindblad(_) | NoiseModel::None => (ExponentialSeries::empty(), None),
    };
    let channels = (0..n_qubits)
        .map(|q| DissipationChannel {
            coupling: CouplingOp::new(q, n_qubits),
            series: series.clone(),
        })
        .collect();
    Ok((channels, outcome))
}

/// Free dephasing of a single qubit from |+> in the rotating frame.
pub fn free_dephasing(
    noise: &NoiseModel,
    horizon: f64,
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<Trajectory, PipelineError> {
    let events = [Event::Evolve {
        duration: horizon,
        hamiltonian: None,
    }];
    run_single_qubit(noise, horizon, &events, solver, quad_cfg)
}

/// Result of a dynamical-decoupling run.
#[derive(Clone, Debug)]
pub struct DdRun {
    pub trajectory: Trajectory,
    pub echoes: EchoSeries,
}

/// Propagate |+> through a pulse schedule under the chosen noise model
/// and extract the echo peaks.
pub fn dd_run(
    noise: &NoiseModel,
    schedule: &PulseSchedule,
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<DdRun, PipelineError> {
    schedule
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let events = schedule.events();
    let trajectory = run_single_qubit(noise, schedule.total_time, &events, solver, quad_cfg)?;
    let echoes = echo_peaks(&trajectory, schedule)?;
    Ok(DdRun { trajectory, echoes })
}

fn plus_state() -> CMatrix {
    let h = C64::new(0.5, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, h])
}

fn run_single_qubit(
    noise: &NoiseModel,
    horizon: f64,
    events: &[Event],
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<Trajectory, PipelineError> {
    if let NoiseModel::Lindblad(t_phi) = noise {
        return Ok(lindblad::propagate_events(
            &plus_state(),
            *t_phi,
            0.0,
            events,
            solver.dt,
            solver.sample_stride,
        )?);
    }
    let (channels, _) = noise_channels(noise, 1, horizon, solver, quad_cfg)?;
    let hierarchy = build_hierarchy(&channels, &solver.truncation(horizon))?;
    let mut state = hierarchy.initial_state(&plus_state());
    let cfg = PropagatorConfig {
        dt: solver.dt,
        sample_stride: solver.sample_stride,
        exec: solver.exec,
    };
    Ok(propagate_events(&hierarchy, &mut state, 0.0, events, &cfg)?)
}

/// Time-resolved process tomography of the CR gate.
#[derive(Clone, Debug)]
pub struct CrTomography {
    /// Sample times within `[0, tau]`.
    pub times: Vec<f64>,
    /// Noisy channel at each sample time (pre/post rotations included).
    pub noisy: Vec<QuantumChannel>,
    /// Noiseless calibrated channel at the same times.
    pub calibrated: Vec<QuantumChannel>,
}

impl CrTomography {
    /// Gate fidelity trace `F(t) = Tr(chi_n chi_c) / Tr(chi_c^2)`.
    pub fn fidelity_series(&self) -> Vec<f64> {
        use crate::tomography::{choi, gate_fidelity};
        self.noisy
            .iter()
            .zip(&self.calibrated)
            .map(|(n, c)| {
                gate_fidelity(&choi(n), &choi(c)).expect("calibrated channel is nonzero")
            })
            .collect()
    }
}

/// Propagate the 16 tomography probes through the noisy CR evolution.
///
/// Each probe is sandwiched as `post (U(t) (pre P pre^+)) post^+`; the
/// probes are independent and run in parallel under the `parallel`
/// feature with a deterministic output layout.
pub fn cr_tomography(
    noise: &NoiseModel,
    params: &CrParams,
    n_samples: usize,
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<CrTomography, PipelineError> {
    let pre = crate::pauli::kron(&rz(params.rz_pre_1), &rz(params.rz_pre_2));
    let post = crate::pauli::kron(&rz(params.rz_post_1), &rz(params.rz_post_2));
    let h_cr = crate::crgate::cr_hamiltonian(0.0, params);
    let probes = hermitian_probes(4);
    // one segment per sample keeps the recorded grid identical across probes
    let seg = params.tau / n_samples as f64;
    let events: Vec<Event> = (0..n_samples)
        .map(|_| Event::Evolve {
            duration: seg,
            hamiltonian: Some(h_cr.clone()),
        })
        .collect();
    let stride = usize::MAX; // record segment boundaries only

    let run_probe = |probe: &CMatrix| -> Result<Trajectory, PipelineError> {
        let seeded = &pre * probe * pre.adjoint();
        match noise {
            NoiseModel::Lindblad(t_phi) => Ok(lindblad::propagate_events(
                &seeded, *t_phi, 0.0, &events, solver.dt, stride,
            )?),
            NoiseModel::None => {
                let mut traj = Trajectory::default();
                for k in 0..=n_samples {
                    let t = params.tau * k as f64 / n_samples as f64;
                    let u = crate::pauli::evolution_operator(&h_cr, t);
                    traj.times.push(t);
                    traj.states.push(&u * &seeded * u.adjoint());
                }
                Ok(traj)
            }
            _ => {
                let (channels, _) = noise_channels(noise, 2, params.tau, solver, quad_cfg)?;
                let hierarchy = build_hierarchy(&channels, &solver.truncation(params.tau))?;
                let mut state = hierarchy.initial_state(&seeded);
                let cfg = PropagatorConfig {
                    dt: solver.dt,
                    sample_stride: stride,
                    exec: solver.exec,
                };
                Ok(propagate_events(&hierarchy, &mut state, 0.0, &events, &cfg)?)
            }
        }
    };

    let trajectories = run_all_probes(&probes, &run_probe)?;
    let times = trajectories[0].times.clone();
    let mut noisy = Vec::with_capacity(times.len());
    let mut calibrated = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let outputs: Vec<CMatrix> = trajectories
            .iter()
            .map(|traj| &post * &traj.states[k] * post.adjoint())
            .collect();
        noisy.push(assemble_channel(&outputs, 4));
        calibrated.push(QuantumChannel::from_unitary(&calibrated_propagator(
            params, t,
        )));
    }
    Ok(CrTomography {
        times,
        noisy,
        calibrated,
    })
}

#[cfg(feature = "parallel")]
fn run_all_probes<F>(probes: &[CMatrix], run: &F) -> Result<Vec<Trajectory>, PipelineError>
where
    F: Fn(&CMatrix) -> Result<Trajectory, PipelineError> + Sync,
{
    use rayon::prelude::*;
    probes.par_iter().map(run).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all_probes<F>(probes: &[CMatrix], run: &F) -> Result<Vec<Trajectory>, PipelineError>
where
    F: Fn(&CMatrix) -> Result<Trajectory, PipelineError> + Sync,
{
    probes.iter().map(run).collect()
}

/// Free-dephasing curves of flat tier-truncated hierarchies (the order-2L
/// master-equation surrogates) against the converged run.
pub struct TnlComparison {
    pub times: Vec<f64>,
    /// Coherence of the converged (importance-pruned, deep) hierarchy.
    pub converged: Vec<f64>,
    /// Coherences at the requested flat truncation depths.
    pub truncated: Vec<(usize, Vec<f64>)>,
    /// Self-error of the converged reference (tier cap + 2).
    pub self_error: f64,
}

pub fn tnl_compare(
    model: &BathModel,
    horizon: f64,
    depths: &[usize],
    solver: &SolverSettings,
    quad_cfg: &QuadConfig,
) -> Result<TnlComparison, PipelineError> {
    let out = fit_exponentials(model, horizon, solver.fit_tolerance, quad_cfg)?;
    let channels = vec![DissipationChannel {
        coupling: CouplingOp::new(0, 1),
        series: out.series.clone(),
    }];
    let cfg = PropagatorConfig {
        dt: solver.dt,
        sample_stride: solver.sample_stride,
        exec: solver.exec,
    };
    let run = |scheme: &TruncationScheme| -> Result<Trajectory, PipelineError> {
        let h = build_hierarchy(&channels, scheme)?;
        let mut y = h.initial_state(&plus_state());
        Ok(propagate_events(
            &h,
            &mut y,
            0.0,
            &[Event::Evolve {
                duration: horizon,
                hamiltonian: None,
            }],
            &cfg,
        )?)
    };
    let reference = run(&solver.truncation(horizon))?;
    let mut deeper_solver = *solver;
    deeper_solver.tier_cap += 2;
    deeper_solver.importance_threshold *= 0.1;
    let deeper = run(&deeper_solver.truncation(horizon))?;
    let self_error = reference
        .coherence()
        .iter()
        .zip(deeper.coherence())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut truncated = Vec::new();
    for &depth in depths {
        let traj = run(&TruncationScheme::flat(depth))?;
        truncated.push((depth, traj.coherence()));
    }
    Ok(TnlComparison {
        times: reference.times.clone(),
        converged: reference.coherence(),
        truncated,
        self_error,
    })
}
