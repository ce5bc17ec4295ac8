//! Parameter studies: formation threshold, velocity against λ, and height
//! traces. Every study is a deterministic function of its inputs; grid points
//! of a sweep run in parallel and are re-ordered by their sort key.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{InitialCondition, SimulationConfig, C64};
use crate::metrics::{
    detect_collisions, detect_reflections, estimate_velocity, height_series, track_peaks, EventRecord,
    PeakTrack, TrackSample, TrackingParams, VelocityWindow,
};
use crate::scheme::{simulate, Trajectory};

/// Knobs shared by all studies. Recorded verbatim in output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub tracking: TrackingParams,
    /// Snapshots a track must span to count as a formed soliton.
    pub min_lifetime: usize,
    pub window: VelocityWindow,
    /// Collision proximity in units of h.
    pub collision_proximity_h: f64,
    /// Velocity fits use samples at least this far (in h) from every other
    /// track and at least half of it from either wall.
    pub isolation_h: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            tracking: TrackingParams::default(),
            min_lifetime: 20,
            window: VelocityWindow::default(),
            collision_proximity_h: 50.0,
            isolation_h: 40.0,
        }
    }
}

/// Tracks and interaction events of one run.
#[derive(Debug, Clone)]
pub struct RunAnalysis {
    pub tracks: Vec<PeakTrack>,
    pub collisions: Vec<EventRecord>,
    pub reflections: Vec<EventRecord>,
}

impl RunAnalysis {
    pub fn new(traj: &Trajectory, params: &DetectionParams) -> Self {
        let grid = &traj.config.grid;
        let h = grid.h();
        let tracks = track_peaks(traj, &params.tracking);
        let collisions = detect_collisions(&tracks, params.collision_proximity_h * h);
        let reflections = detect_reflections(&tracks, params.tracking.boundary_band_h * h, grid.domain_length());
        Self {
            tracks,
            collisions,
            reflections,
        }
    }

    pub fn dominant(&self) -> Option<&PeakTrack> {
        dominant_track(&self.tracks)
    }

    /// Collision and reflection events in time order.
    pub fn events(&self) -> Vec<&EventRecord> {
        let mut all: Vec<&EventRecord> = self.collisions.iter().chain(&self.reflections).collect();
        all.sort_by_key(|e| e.time_index);
        all
    }

    /// Events in which `track_id` takes part.
    pub fn events_of(&self, track_id: usize) -> Vec<&EventRecord> {
        self.events()
            .into_iter()
            .filter(|e| e.track_ids.contains(&track_id))
            .collect()
    }
}

/// Longest-lived track; ties go to the larger mean height, then the smaller id.
pub fn dominant_track(tracks: &[PeakTrack]) -> Option<&PeakTrack> {
    tracks.iter().min_by(|a, b| {
        b.lifetime()
            .cmp(&a.lifetime())
            .then(b.mean_height().total_cmp(&a.mean_height()))
            .then(a.track_id.cmp(&b.track_id))
    })
}

fn formed_track<'a>(tracks: &'a [PeakTrack], params: &DetectionParams) -> Option<&'a PeakTrack> {
    tracks
        .iter()
        .filter(|t| t.lifetime() >= params.min_lifetime)
        .min_by_key(|t| (t.first_time(), t.track_id))
}

/// Whether the run produces at least one track spanning `min_lifetime`
/// snapshots. Samples of a track are above the prominence floor by
/// construction.
pub fn formed(cfg: &SimulationConfig, params: &DetectionParams) -> Result<bool> {
    let traj = simulate(cfg)?;
    let tracks = track_peaks(&traj, &params.tracking);
    Ok(formed_track(&tracks, params).is_some())
}

/// How the threshold experiment turns the bisection variable into an
/// initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientMode {
    /// Unit plateau with edge ramps of slope ε.
    EdgeRamp { ramp_width: f64 },
    /// Plateau at level ε, so the jump to the zero boundary has size ε.
    BoundaryJump,
}

impl Default for GradientMode {
    fn default() -> Self {
        GradientMode::EdgeRamp { ramp_width: 0.1 }
    }
}

impl GradientMode {
    pub fn initial_condition(&self, eps: f64) -> InitialCondition {
        match *self {
            GradientMode::EdgeRamp { ramp_width } => InitialCondition::UniformWithEdgeRamp {
                level: 1.0,
                gradient: eps,
                ramp_width,
            },
            GradientMode::BoundaryJump => InitialCondition::Uniform { level: eps },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lambda: f64,
    pub c_coef: C64,
    pub epsilon_lo: f64,
    pub epsilon_hi: f64,
    pub epsilon_star: f64,
    pub n_bisections: usize,
}

/// Bisect `formed` on `[lo, hi]` until the bracket is at most `tol` wide.
/// Requires `formed(lo) == false` and `formed(hi) == true`; both ends stay
/// that way throughout. Returns `(lo, hi, iterations)`.
pub fn bisect_threshold<F>(mut formed: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("bisection tolerance must be > 0, got {tol}")));
    }
    if !(lo < hi) || formed(lo)? || !formed(hi)? {
        return Err(Error::BracketInvalid { lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut n = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if formed(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        n += 1;
    }
    Ok((lo, hi, n))
}

/// Smallest initial gradient that still produces a formed soliton.
pub fn threshold_gradient(
    lambda: f64,
    c: C64,
    bracket: (f64, f64),
    tol: f64,
    base: &SimulationConfig,
    mode: GradientMode,
    params: &DetectionParams,
) -> Result<ThresholdResult> {
    let run = |eps: f64| {
        let cfg = SimulationConfig {
            lambda,
            c_coef: c,
            ic: mode.initial_condition(eps),
            ..base.clone()
        };
        formed(&cfg, params)
    };
    let (lo, hi, n) = bisect_threshold(run, bracket.0, bracket.1, tol)?;
    Ok(ThresholdResult {
        lambda,
        c_coef: c,
        epsilon_lo: lo,
        epsilon_hi: hi,
        epsilon_star: 0.5 * (lo + hi),
        n_bisections: n,
    })
}

/// Longest run of consecutive samples of `track` that keep `isolation` from
/// every other track alive at the same time and `isolation / 2` from both
/// walls, and at which no other track starts or ends within `2 · isolation`.
/// Runs are also cut where the step from the previous sample is shorter than
/// a quarter of the track's median step.
///
/// Neighbouring packets and the mirror image behind a wall pull the envelope
/// maximum. A track appearing or vanishing nearby marks a merge or split that
/// the concurrency test alone misses, and a merged pair of wide packets shows
/// up as a stall.
pub fn isolated_flight<'a>(
    track: &'a PeakTrack,
    tracks: &[PeakTrack],
    isolation: f64,
    domain_length: f64,
) -> &'a [TrackSample] {
    let others: Vec<&PeakTrack> = tracks
        .iter()
        .filter(|o| o.track_id != track.track_id && !o.samples.is_empty())
        .collect();
    let isolated = |s: &TrackSample| {
        let wall = s.position.min(domain_length - s.position);
        wall >= 0.5 * isolation
            && others.iter().all(|o| match o.sample_at(s.time_index) {
                Some(i) => {
                    let d = (o.samples[i].position - s.position).abs();
                    let edge = i == 0 || i + 1 == o.samples.len();
                    d >= isolation && !(edge && d < 2.0 * isolation)
                }
                None => true,
            })
    };
    let samples = &track.samples;
    let steps: Vec<f64> = samples.windows(2).map(|w| (w[1].position - w[0].position).abs()).collect();
    let min_step = 0.25 * median(steps.clone()).unwrap_or(0.0);
    let mut best = &samples[0..0];
    let mut start = 0;
    let mut close = |start: usize, end: usize| {
        if end - start > best.len() {
            best = &samples[start..end];
        }
    };
    for i in 0..=samples.len() {
        if i == samples.len() || !isolated(&samples[i]) {
            close(start, i);
            start = i + 1;
        } else if i > start && steps[i - 1] < min_step {
            close(start, i);
            start = i;
        }
    }
    best
}

/// Velocity (signed, domain lengths per unit time) of the dominant track over
/// its longest isolated stretch, or `None` when no track qualifies.
pub fn dominant_velocity(analysis: &RunAnalysis, grid: &crate::GridSpec, dt: f64, params: &DetectionParams) -> Option<f64> {
    let dom = analysis.dominant()?;
    let segment = PeakTrack {
        track_id: dom.track_id,
        samples: isolated_flight(dom, &analysis.tracks, params.isolation_h * grid.h(), grid.domain_length()).to_vec(),
        status: dom.status,
    };
    estimate_velocity(&segment, params.window, dt).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub c_coef: C64,
    /// Speed of the dominant track; `None` when no track formed.
    pub velocity_abs: Option<f64>,
    /// `velocity_abs` over the λ = 1 row of the same C.
    pub velocity_relative: Option<f64>,
    pub n_tracks: usize,
    pub formation_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// λ-ordered rows of one C series.
    pub fn series(&self, c: C64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.c_coef == c).collect()
    }
}

pub const DEFAULT_VELOCITY_C: [f64; 3] = [0.5, 1.0, 1.5];
pub const DEFAULT_HEIGHT_C: [f64; 3] = [2.8, 1.5, 0.5];

/// Open-interval λ grid {0.1, 0.2, ..., 1.9}.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 10.0).collect()
}

fn sweep_row(base: &SimulationConfig, lambda: f64, c: C64, params: &DetectionParams) -> Result<SweepRow> {
    let cfg = SimulationConfig {
        lambda,
        c_coef: c,
        ..base.clone()
    };
    let traj = simulate(&cfg)?;
    let analysis = RunAnalysis::new(&traj, params);
    let formed = formed_track(&analysis.tracks, params);
    let velocity = match formed {
        Some(_) => dominant_velocity(&analysis, &cfg.grid, cfg.dt, params).map(f64::abs),
        None => None,
    };
    Ok(SweepRow {
        lambda,
        c_coef: c,
        velocity_abs: velocity,
        velocity_relative: None,
        n_tracks: analysis.tracks.len(),
        formation_step: formed.and_then(|t| t.first_time()),
    })
}

/// Speed of the dominant soliton for every `(C, λ)` pair.
pub fn velocity_vs_lambda(
    c_list: &[C64],
    lambda_grid: &[f64],
    base: &SimulationConfig,
    params: &DetectionParams,
) -> Result<SweepResult> {
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("lambda grid must be strictly ascending".into()));
    }
    if let Some(l) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 2.0)) {
        return Err(Error::InvalidConfig(format!("lambda {l} outside (0, 2)")));
    }
    let jobs: Vec<(C64, f64)> = c_list
        .iter()
        .flat_map(|&c| lambda_grid.iter().map(move |&l| (c, l)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(c, l)| sweep_row(base, l, c, params))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.c_coef
            .norm()
            .total_cmp(&b.c_coef.norm())
            .then(a.c_coef.re.total_cmp(&b.c_coef.re))
            .then(a.c_coef.im.total_cmp(&b.c_coef.im))
            .then(a.lambda.total_cmp(&b.lambda))
    });
    let reference: Vec<(C64, f64)> = rows
        .iter()
        .filter(|r| r.lambda == 1.0)
        .filter_map(|r| r.velocity_abs.map(|v| (r.c_coef, v)))
        .collect();
    for row in &mut rows {
        let norm = reference.iter().find(|(c, _)| *c == row.c_coef).map(|(_, v)| *v);
        row.velocity_relative = match (row.velocity_abs, norm) {
            (Some(_), Some(_)) if row.lambda == 1.0 => Some(1.0),
            (Some(v), Some(v1)) if v1 != 0.0 => Some(v / v1),
            _ => None,
        };
    }
    Ok(SweepResult { rows })
}

/// Height of the dominant track over time plus the events it takes part in.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightTrace {
    pub c_coef: C64,
    pub lambda: f64,
    pub track_id: Option<usize>,
    pub series: Vec<(usize, f64)>,
    pub events: Vec<EventRecord>,
    pub snapshot_stride: usize,
}

impl HeightTrace {
    /// Median height of the series, the reference level the spikes rise above.
    pub fn plateau(&self) -> Option<f64> {
        median(self.series.iter().map(|s| s.1).collect())
    }

    /// Interior samples strictly higher than both neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, f64)> {
        self.series
            .windows(3)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
            .map(|w| w[1])
            .collect()
    }

    /// Local maxima higher than `factor` times the plateau.
    pub fn spikes(&self, factor: f64) -> Vec<(usize, f64)> {
        let Some(p) = self.plateau() else { return Vec::new() };
        self.local_maxima().into_iter().filter(|m| m.1 > factor * p).collect()
    }

    /// Spikes with no event within `strides` snapshot strides.
    pub fn unexplained_spikes(&self, factor: f64, strides: usize) -> Vec<(usize, f64)> {
        let reach = strides * self.snapshot_stride;
        self.spikes(factor)
            .into_iter()
            .filter(|(t, _)| !self.events.iter().any(|e| e.time_index.abs_diff(*t) <= reach))
            .collect()
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn height_trace_of(traj: &Trajectory, params: &DetectionParams) -> HeightTrace {
    let analysis = RunAnalysis::new(traj, params);
    let dom = analysis.dominant();
    HeightTrace {
        c_coef: traj.config.c_coef,
        lambda: traj.config.lambda,
        track_id: dom.map(|t| t.track_id),
        series: dom.map(height_series).unwrap_or_default(),
        events: dom
            .map(|t| analysis.events_of(t.track_id).into_iter().cloned().collect())
            .unwrap_or_default(),
        snapshot_stride: traj.config.snapshot_stride,
    }
}

/// One height trace per coefficient in `c_list`, in the given order.
pub fn height_vs_time(
    c_list: &[C64],
    lambda: f64,
    base: &SimulationConfig,
    params: &DetectionParams,
) -> Result<Vec<HeightTrace>> {
    if c_list.is_empty() {
        return Err(Error::InvalidConfig("height trace needs at least one C".into()));
    }
    c_list
        .par_iter()
        .map(|&c| {
            let cfg = SimulationConfig {
                lambda,
                c_coef: c,
                ..base.clone()
            };
            Ok(height_trace_of(&simulate(&cfg)?, params))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monotonicity {
    pub monotone: bool,
    /// Index into the present-velocity sequence of the first sample that
    /// breaks the established direction.
    pub first_violation: Option<usize>,
}

/// Weak monotonicity (either direction) of a value sequence.
pub fn monotonicity_of(values: &[f64]) -> Monotonicity {
    let mut direction = 0.0;
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        if d == 0.0 {
            continue;
        }
        if direction == 0.0 {
            direction = d.signum();
        } else if d.signum() != direction {
            return Monotonicity {
                monotone: false,
                first_violation: Some(i),
            };
        }
    }
    Monotonicity {
        monotone: true,
        first_violation: None,
    }
}

/// Weak monotonicity of the present speeds of one C series over ascending λ.
pub fn monotonicity_check(sweep: &SweepResult, c: C64) -> Result<Monotonicity> {
    let values: Vec<f64> = sweep.series(c).iter().filter_map(|r| r.velocity_abs).collect();
    if values.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: values.len(),
        });
    }
    Ok(monotonicity_of(&values))
}
