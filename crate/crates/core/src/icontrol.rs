//! Instantaneous control: one projected gradient step per time slice with an
//! Armijo step size, the state handed on to the next slice, and the next
//! slice warm-started from a tenth of the accepted control.

use crate::error::{ConfigError, NumericalError, SolverError};
use crate::meanfield::{adjoint_strang_step, DensityField, MeanFieldSolver, MfStep};
use crate::microsim::{micro_adjoint_backward, micro_step, AdjointMode, MicroStep, ModelParams, ParticleEnsemble};
use crate::objective::{
    control_norm_sq, mf_moments, micro_moments, project_slice, reduced_gradient, slice_cost, CostWeights, SliceCost,
};
use crate::real::Real;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmijoParams {
    pub initial_step: f64,
    /// Sufficient-decrease constant γ.
    pub gamma: f64,
    pub max_halvings: u32,
}

impl Default for ArmijoParams {
    /// The initial step is of the order `M/σ3` of the Newton step for the
    /// default control weight, so the search usually accepts after a few halvings.
    fn default() -> Self {
        Self { initial_step: 1e8, gamma: 1e-4, max_halvings: 30 }
    }
}

impl ArmijoParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            errors.push("armijo.initial_step must be finite and > 0".to_string());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            errors.push("armijo.gamma must lie in (0, 1)".to_string());
        }
        if self.max_halvings < 1 {
            errors.push("armijo.max_halvings must be >= 1".to_string());
        }
    }
}

/// Outcome of the step-size search on one slice.
#[derive(Clone, Debug)]
pub struct ArmijoOutcome<T, S> {
    pub control: Vec<Vec2<T>>,
    pub state: Option<S>,
    pub cost: T,
    pub step: T,
    pub halvings: u32,
    /// No trial step gave sufficient decrease; the projected start control was kept.
    pub exhausted: bool,
}

/// Projected Armijo rule: halve `ω` while
/// `J(P(c - ω q)) ≥ J(c) - γ ω weight |q|²`.
///
/// `eval` returns the cost of a candidate and whatever it wants to keep with
/// it. On exhaustion the outcome carries `P(c)` without a state when
/// `P(c) = c`, as the caller already has it.
pub fn armijo_search<T: Real, S, E>(
    c: &[Vec2<T>],
    q: &[Vec2<T>],
    j_c: T,
    weight: T,
    u_max: T,
    params: &ArmijoParams,
    mut eval: impl FnMut(&[Vec2<T>]) -> Result<(T, S), E>,
) -> Result<ArmijoOutcome<T, S>, E> {
    let omega0 = T::cst(params.initial_step);
    let gamma = T::cst(params.gamma);
    let q2 = control_norm_sq(q) * weight;
    let keep = project_slice(c, u_max);
    let keep_is_c = keep.iter().zip(c).all(|(a, b)| a == b);
    let fallback = |step, halvings, exhausted, eval: &mut dyn FnMut(&[Vec2<T>]) -> Result<(T, S), E>| {
        if keep_is_c {
            Ok(ArmijoOutcome { control: keep.clone(), state: None, cost: j_c, step, halvings, exhausted })
        } else {
            let (cost, s) = eval(&keep)?;
            Ok(ArmijoOutcome { control: keep.clone(), state: Some(s), cost, step, halvings, exhausted })
        }
    };
    if q2 == T::zero() {
        return fallback(omega0, 0, false, &mut eval);
    }
    let mut omega = omega0;
    for k in 0..=params.max_halvings {
        let trial: Vec<Vec2<T>> = c.iter().zip(q).map(|(a, b)| *a - b.scale(omega)).collect();
        let trial = project_slice(&trial, u_max);
        let (cost, s) = eval(&trial)?;
        if cost < j_c - gamma * omega * q2 {
            return Ok(ArmijoOutcome { control: trial, state: Some(s), cost, step: omega, halvings: k, exhausted: false });
        }
        if k < params.max_halvings {
            omega *= T::half();
        }
    }
    fallback(omega, params.max_halvings, true, &mut eval)
}

/// One level of the model as seen by the control loop.
pub trait Level<T: Real> {
    type State: Clone;
    type Step;

    fn dt(&self) -> T;
    fn u_max(&self) -> T;
    fn sigma3(&self) -> T;
    fn forward(&self, y: &Self::State, u: &[Vec2<T>]) -> Result<Self::Step, SolverError>;
    fn end(step: Self::Step) -> Self::State;
    fn end_ref(step: &Self::Step) -> &Self::State;
    /// End state of `step`'s start under another control.
    fn candidate(&self, step: &Self::Step, u: &[Vec2<T>]) -> Result<Self::State, SolverError>;
    /// Slice cost with the state part evaluated at `end`.
    fn cost(&self, end: &Self::State, u: &[Vec2<T>]) -> SliceCost<T>;
    /// Gradient of the slice cost per unit time with respect to the slice control.
    fn gradient(&self, step: &Self::Step) -> Vec<Vec2<T>>;
    fn agents(y: &Self::State) -> &[Vec2<T>];
}

#[derive(Clone, Debug)]
pub struct MicroLevel<T> {
    pub params: ModelParams<T>,
    pub weights: CostWeights<T>,
    pub dt: T,
    pub u_max: T,
}

impl<T: Real> Level<T> for MicroLevel<T> {
    type State = ParticleEnsemble<T>;
    type Step = MicroStep<T>;

    fn dt(&self) -> T {
        self.dt
    }

    fn u_max(&self) -> T {
        self.u_max
    }

    fn sigma3(&self) -> T {
        self.weights.sigma3
    }

    fn forward(&self, y: &Self::State, u: &[Vec2<T>]) -> Result<Self::Step, SolverError> {
        let step = micro_step(y, u, self.dt, &self.params)?;
        if !step.end.is_finite() {
            return Err(NumericalError::NonFinite("particle step".to_string()).into());
        }
        Ok(step)
    }

    fn end(step: Self::Step) -> Self::State {
        step.end
    }

    fn end_ref(step: &Self::Step) -> &Self::State {
        &step.end
    }

    fn candidate(&self, step: &Self::Step, u: &[Vec2<T>]) -> Result<Self::State, SolverError> {
        let end = step.with_control(u, &self.params)?.end;
        if !end.is_finite() {
            return Err(NumericalError::NonFinite("particle step".to_string()).into());
        }
        Ok(end)
    }

    fn cost(&self, end: &Self::State, u: &[Vec2<T>]) -> SliceCost<T> {
        let (e, v) = micro_moments(&end.x);
        slice_cost(e, v, u, &self.weights, self.dt)
    }

    fn gradient(&self, step: &Self::Step) -> Vec<Vec2<T>> {
        let adj = micro_adjoint_backward(step, &self.weights, &self.params, AdjointMode::ControlOnly);
        reduced_gradient(&step.control, &adj.phi_slice, self.weights.sigma3)
    }

    fn agents(y: &Self::State) -> &[Vec2<T>] {
        &y.d
    }
}

#[derive(Clone, Debug)]
pub struct MeanFieldLevel<T> {
    pub solver: MeanFieldSolver<T>,
    pub weights: CostWeights<T>,
    pub u_max: T,
}

impl<T: Real> Level<T> for MeanFieldLevel<T> {
    type State = DensityField<T>;
    type Step = MfStep<T>;

    fn dt(&self) -> T {
        self.solver.tau
    }

    fn u_max(&self) -> T {
        self.u_max
    }

    fn sigma3(&self) -> T {
        self.weights.sigma3
    }

    fn forward(&self, y: &Self::State, u: &[Vec2<T>]) -> Result<Self::Step, SolverError> {
        self.solver.step(y, u)
    }

    fn end(step: Self::Step) -> Self::State {
        step.end
    }

    fn end_ref(step: &Self::Step) -> &Self::State {
        &step.end
    }

    fn candidate(&self, step: &Self::Step, u: &[Vec2<T>]) -> Result<Self::State, SolverError> {
        step.candidate(&self.solver, u)
    }

    fn cost(&self, end: &Self::State, u: &[Vec2<T>]) -> SliceCost<T> {
        let (e, v, _) = mf_moments(end);
        slice_cost(e, v, u, &self.weights, self.solver.tau)
    }

    fn gradient(&self, step: &Self::Step) -> Vec<Vec2<T>> {
        let adj = adjoint_strang_step(step, &self.solver, &self.weights, AdjointMode::ControlOnly);
        reduced_gradient(&step.control, &adj.phi_slice, self.weights.sigma3)
    }

    fn agents(y: &Self::State) -> &[Vec2<T>] {
        &y.d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord<T> {
    pub slice: usize,
    /// Time at the slice end.
    pub time: T,
    pub step: T,
    pub cost: SliceCost<T>,
    /// Euclidean norm of the slice gradient over all agent components.
    pub gradient_norm: T,
    pub halvings: u32,
    pub exhausted: bool,
    pub control: Vec<Vec2<T>>,
}

/// Where a run starts: the first slice index, its state and the control the
/// slice is warm-started from.
#[derive(Clone, Debug)]
pub struct IcStart<T, S> {
    pub slice: usize,
    pub state: S,
    pub warm: Vec<Vec2<T>>,
}

impl<T: Real, S> IcStart<T, S> {
    pub fn new(state: S, m: usize) -> Self {
        Self { slice: 0, state, warm: vec![Vec2::zero(); m] }
    }
}

/// What the loop hands out after every slice.
pub struct SliceEvent<'a, T, S> {
    pub record: &'a SliceRecord<T>,
    /// State at the slice end.
    pub state: &'a S,
    /// Warm start of the next slice.
    pub warm: &'a [Vec2<T>],
}

#[derive(Debug)]
pub struct IcFailure<T> {
    pub error: SolverError,
    /// Records of the slices finished before the failure.
    pub records: Vec<SliceRecord<T>>,
}

impl<T> std::fmt::Display for IcFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} completed slices)", self.error, self.records.len())
    }
}

/// Runs slices `start.slice..slices`. Only the current slice is kept in
/// memory; the observer sees every slice end state and may persist it.
pub fn ic_run<T: Real, L: Level<T>>(
    level: &L,
    start: IcStart<T, L::State>,
    slices: usize,
    armijo: &ArmijoParams,
    mut observer: impl FnMut(SliceEvent<'_, T, L::State>) -> Result<(), SolverError>,
) -> Result<(Vec<SliceRecord<T>>, L::State), IcFailure<T>> {
    let mut records = Vec::new();
    let mut y = start.state;
    let mut warm = start.warm;
    for k in start.slice..slices {
        match control_slice(level, &y, &warm, k, armijo) {
            Ok((rec, next)) => {
                warm = rec.control.iter().map(|u| u.scale(T::cst(0.1))).collect();
                y = next;
                let ev = SliceEvent { record: &rec, state: &y, warm: &warm };
                if let Err(e) = observer(ev) {
                    return Err(IcFailure { error: e.at_slice(k), records });
                }
                records.push(rec);
            }
            Err(e) => return Err(IcFailure { error: e.at_slice(k), records }),
        }
    }
    Ok((records, y))
}

fn check_cost<T: Real>(c: &SliceCost<T>) -> Result<(), SolverError> {
    if c.is_valid() {
        Ok(())
    } else {
        Err(NumericalError::NonFinite("slice cost".to_string()).into())
    }
}

fn control_slice<T: Real, L: Level<T>>(
    level: &L,
    y: &L::State,
    warm: &[Vec2<T>],
    k: usize,
    armijo: &ArmijoParams,
) -> Result<(SliceRecord<T>, L::State), SolverError> {
    let dt = level.dt();
    let step = level.forward(y, warm)?;
    let j_c = level.cost(L::end_ref(&step), warm);
    check_cost(&j_c)?;
    let q = level.gradient(&step);
    if !q.iter().all(|p| p.is_finite()) {
        return Err(NumericalError::NonFinite("reduced gradient".to_string()).into());
    }
    let out = armijo_search(warm, &q, j_c.total, dt, level.u_max(), armijo, |u| {
        let end = level.candidate(&step, u)?;
        let c = level.cost(&end, u);
        check_cost(&c)?;
        Ok::<_, SolverError>((c.total, (end, c)))
    })?;
    let (state, cost) = match out.state {
        Some(pair) => pair,
        None => (L::end(step), j_c),
    };
    let rec = SliceRecord {
        slice: k,
        time: dt * T::cst((k + 1) as f64),
        step: out.step,
        cost,
        gradient_norm: control_norm_sq(&q).sqrt(),
        halvings: out.halvings,
        exhausted: out.exhausted,
        control: out.control,
    };
    Ok((rec, state))
}

/// Runs with a prescribed control per slice, recording costs only.
pub fn run_prescribed<T: Real, L: Level<T>>(
    level: &L,
    start: IcStart<T, L::State>,
    controls: &[Vec<Vec2<T>>],
    mut observer: impl FnMut(SliceEvent<'_, T, L::State>) -> Result<(), SolverError>,
) -> Result<(Vec<SliceRecord<T>>, L::State), IcFailure<T>> {
    let mut records = Vec::new();
    let mut y = start.state;
    let dt = level.dt();
    for (k, u) in controls.iter().enumerate().skip(start.slice) {
        let run = || -> Result<(SliceRecord<T>, L::State), SolverError> {
            if u.len() != L::agents(&y).len() {
                return Err(ConfigError::single(format!("slice {k} control has {} entries", u.len())).into());
            }
            let u = project_slice(u, level.u_max());
            let end = L::end(level.forward(&y, &u)?);
            let cost = level.cost(&end, &u);
            check_cost(&cost)?;
            let rec = SliceRecord {
                slice: k,
                time: dt * T::cst((k + 1) as f64),
                step: T::zero(),
                cost,
                gradient_norm: T::zero(),
                halvings: 0,
                exhausted: false,
                control: u,
            };
            Ok((rec, end))
        };
        match run() {
            Ok((rec, next)) => {
                y = next;
                let zero = vec![Vec2::zero(); rec.control.len()];
                if let Err(e) = observer(SliceEvent { record: &rec, state: &y, warm: &zero }) {
                    return Err(IcFailure { error: e.at_slice(k), records });
                }
                records.push(rec);
            }
            Err(e) => return Err(IcFailure { error: e.at_slice(k), records }),
        }
    }
    Ok((records, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microsim::{agents_on_circle, sample_initial, Rect, VelocityInit};

    type V = Vec2<f64>;

    fn quad(c: &[V]) -> Result<(f64, ()), ()> {
        Ok((control_norm_sq(c), ()))
    }

    #[test]
    fn quadratic_trace() {
        let p = ArmijoParams { initial_step: 1e3, gamma: 1e-4, max_halvings: 30 };
        let c = [V::new(1.0, 0.0)];
        let q = [V::new(2.0, 0.0)];
        let out = armijo_search(&c, &q, 1.0, 1.0, f64::INFINITY, &p, quad).unwrap();
        assert_eq!(out.halvings, 10);
        assert_eq!(out.step, 0.9765625);
        assert!(!out.exhausted);
        assert!(out.cost < 1.0 - 1e-4 * out.step * 4.0);
    }

    #[test]
    fn zero_gradient_accepts_at_once() {
        let p = ArmijoParams::default();
        let c = [V::new(3.0, 4.0)];
        let out = armijo_search(&c, &[V::zero()], 25.0, 1.0, 2.0, &p, quad).unwrap();
        assert_eq!(out.step, 1e8);
        assert_eq!(out.halvings, 0);
        assert_eq!(out.control, vec![V::new(1.2, 1.6)]);
    }

    #[test]
    fn exhaustion_keeps_the_start_control() {
        let p = ArmijoParams { initial_step: 1.0, gamma: 1e-4, max_halvings: 3 };
        // ascent direction: no step can decrease
        let c = [V::new(1.0, 0.0)];
        let out = armijo_search(&c, &[V::new(-1.0, 0.0)], 1.0, 1.0, 10.0, &p, quad).unwrap();
        assert!(out.exhausted);
        assert_eq!(out.control, c.to_vec());
        assert!(out.state.is_none());
        assert_eq!(out.halvings, 3);
    }

    fn small_level(s1: f64, s2: f64) -> (MicroLevel<f64>, ParticleEnsemble<f64>) {
        let (x, v) = sample_initial(30, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Zero, 3).unwrap();
        let d = agents_on_circle(3, V::new(22.5, 17.5), 60.0);
        let y = ParticleEnsemble::new(x, v, d).unwrap();
        let w = CostWeights::new(s1, s2, 1e-7, 1.0, 300.0, V::new(-20.0, -20.0));
        (MicroLevel { params: ModelParams::default(), weights: w, dt: 0.02, u_max: 5.0 }, y)
    }

    #[test]
    fn no_state_cost_means_no_control() {
        let (level, y) = small_level(0.0, 0.0);
        let (recs, end) = ic_run(&level, IcStart::new(y.clone(), 3), 10, &ArmijoParams::default(), |_| Ok(())).unwrap();
        assert!(recs.iter().all(|r| r.control.iter().all(|u| *u == V::zero())));
        let mut free = y;
        for _ in 0..10 {
            free = micro_step(&free, &[V::zero(); 3], 0.02, &ModelParams::default()).unwrap().end;
        }
        assert_eq!(end, free);
    }

    #[test]
    fn controls_stay_feasible_and_runs_repeat() {
        let (level, y) = small_level(5e-3, 5e-1);
        let run = || ic_run(&level, IcStart::new(y.clone(), 3), 20, &ArmijoParams::default(), |_| Ok(())).unwrap();
        let (a, ya) = run();
        let (b, yb) = run();
        assert_eq!(a, b);
        assert_eq!(ya, yb);
        assert!(a.iter().all(|r| r.control.iter().all(|u| u.norm() <= 5.0)));
        assert!(a.iter().any(|r| r.control.iter().any(|u| *u != V::zero())));
    }

    #[test]
    fn resuming_reproduces_the_tail() {
        let (level, y) = small_level(5e-3, 5e-1);
        let mut mid = None;
        let (all, _) = ic_run(&level, IcStart::new(y.clone(), 3), 12, &ArmijoParams::default(), |ev| {
            if ev.record.slice == 5 {
                mid = Some(IcStart { slice: 6, state: ev.state.clone(), warm: ev.warm.to_vec() });
            }
            Ok(())
        })
        .unwrap();
        let (tail, _) = ic_run(&level, mid.unwrap(), 12, &ArmijoParams::default(), |_| Ok(())).unwrap();
        assert_eq!(&all[6..], &tail[..]);
    }

    #[test]
    fn observer_failure_keeps_partial_records() {
        let (level, y) = small_level(5e-3, 5e-1);
        let err = ic_run(&level, IcStart::new(y, 3), 10, &ArmijoParams::default(), |ev| {
            if ev.record.slice == 4 {
                Err(NumericalError::NonFinite("test".to_string()).into())
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert_eq!(err.records.len(), 4);
        assert!(matches!(err.error, SolverError::Slice { slice: 4, .. }));
    }
}
