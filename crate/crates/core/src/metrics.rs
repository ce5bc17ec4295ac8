//! Peak detection on `|u|`, peak tracking across snapshots, and the
//! measurements derived from tracks: velocity, height, collisions, and
//! boundary reflections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, StateVector};
use crate::scheme::Trajectory;

/// A strict local maximum of `|u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub node_index: usize,
    /// Parabola-refined location in domain units.
    pub position: f64,
    /// Parabola-refined `|u|` at `position`.
    pub height: f64,
    /// Node height above the higher of the two flanking minima.
    pub prominence: f64,
}

/// Minimum prominence for a local maximum to count as a peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ProminenceFloor {
    Absolute(f64),
    /// Fraction of the snapshot's `max |u|`.
    RelativeToMax(f64),
}

impl Default for ProminenceFloor {
    fn default() -> Self {
        ProminenceFloor::RelativeToMax(0.05)
    }
}

impl ProminenceFloor {
    /// Absolute floor for a snapshot with the given magnitudes, or `None` when
    /// the snapshot cannot hold any peak (all zero).
    pub fn resolve(&self, magnitudes: &[f64]) -> Option<f64> {
        let floor = match *self {
            ProminenceFloor::Absolute(v) => v,
            ProminenceFloor::RelativeToMax(frac) => frac * magnitudes.iter().copied().fold(0.0, f64::max),
        };
        (floor > 0.0).then_some(floor)
    }
}

/// Prominence of node `j` in `a`: walk outwards until a strictly higher node
/// (or the end of the array) and take the lowest value on each side.
pub fn prominence(a: &[f64], j: usize) -> f64 {
    let peak = a[j];
    let mut left_min = peak;
    for &v in a[..j].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &a[j + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

fn refine(a: &[f64], j: usize) -> (f64, f64) {
    let (l, c, r) = (a[j - 1], a[j], a[j + 1]);
    let curv = l - 2.0 * c + r;
    if curv >= 0.0 {
        return (0.0, c);
    }
    let offset = 0.5 * (l - r) / curv;
    (offset, c - 0.25 * (l - r) * offset)
}

/// Peaks of `|u|` found directly from node magnitudes.
pub fn detect_peaks_in(magnitudes: &[f64], h: f64, min_prominence: f64) -> Vec<Peak> {
    let n = magnitudes.len();
    if n < 3 {
        return Vec::new();
    }
    (1..n - 1)
        .filter(|&j| magnitudes[j] > magnitudes[j - 1] && magnitudes[j] > magnitudes[j + 1])
        .filter_map(|j| {
            let prom = prominence(magnitudes, j);
            if prom < min_prominence {
                return None;
            }
            let (offset, height) = refine(magnitudes, j);
            Some(Peak {
                node_index: j,
                position: (j as f64 + offset) * h,
                height,
                prominence: prom,
            })
        })
        .collect()
}

/// Strict interior local maxima of `|u|` with prominence at least
/// `min_prominence`, sorted by position.
pub fn detect_peaks(field: &StateVector, grid: &GridSpec, min_prominence: f64) -> Vec<Peak> {
    detect_peaks_in(&field.magnitudes(), grid.h(), min_prominence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Active,
    Merged,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub time_index: usize,
    pub position: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakTrack {
    pub track_id: usize,
    pub samples: Vec<TrackSample>,
    pub status: TrackStatus,
}

impl PeakTrack {
    /// Number of snapshots the track spans.
    pub fn lifetime(&self) -> usize {
        self.samples.len()
    }

    pub fn mean_height(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.height).sum::<f64>() / self.samples.len() as f64
    }

    pub fn first_time(&self) -> Option<usize> {
        self.samples.first().map(|s| s.time_index)
    }

    pub fn sample_at(&self, time_index: usize) -> Option<usize> {
        self.samples.binary_search_by_key(&time_index, |s| s.time_index).ok()
    }
}

/// What `track_peaks` scans for maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// Node magnitudes `|u_j|` as they are.
    Raw,
    /// `|u|²` smoothed by a Gaussian of width [`carrier_sigma`], square-rooted.
    /// Peaks are located on the smoothed curve; their height is the largest
    /// `|u_j|` within `⌈σ⌉` nodes.
    Carrier,
}

/// Smoothing width, in nodes, that suppresses interference fringes of the
/// carrier the λ-step leaves undamped (`2 cos θ = λ`). Counter-propagating
/// packets modulate `|u|²` at spatial frequency `2θ`; a Gaussian of width
/// `σ = 2/θ` attenuates that frequency by `e^{-8}`. Returns 0 when `|λ| ≥ 2`.
pub fn carrier_sigma(lambda: f64) -> f64 {
    if !(lambda.abs() < 2.0) {
        return 0.0;
    }
    2.0 / (lambda / 2.0).acos()
}

/// `sqrt(G_σ * a²)` with the kernel truncated at 3σ and renormalised where it
/// overhangs the array ends. `sigma ≤ 0` returns `a` unchanged.
pub fn smoothed_envelope(a: &[f64], sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return a.to_vec();
    }
    let half = (3.0 * sigma).ceil() as usize;
    let kernel: Vec<f64> = (0..=half)
        .map(|d| (-0.5 * (d as f64 / sigma).powi(2)).exp())
        .collect();
    let n = a.len();
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(half);
            let hi = (j + half).min(n - 1);
            let (mut num, mut den) = (0.0, 0.0);
            for (i, v) in a.iter().enumerate().take(hi + 1).skip(lo) {
                let w = kernel[i.abs_diff(j)];
                num += w * v * v;
                den += w;
            }
            (num / den).sqrt()
        })
        .collect()
}

/// Detection and association thresholds. Distances are multiples of the grid
/// spacing so they rescale with resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingParams {
    pub floor: ProminenceFloor,
    pub envelope: Envelope,
    /// Largest displacement between consecutive snapshots, in units of h.
    pub gate_h: f64,
    /// A vanished peak this close to a surviving track counts as merged.
    pub merge_h: f64,
    /// Width of the band next to each boundary, in units of h.
    pub boundary_band_h: f64,
    /// Rank candidates by distance to the position extrapolated from a
    /// track's last two samples instead of to its last position. The gate
    /// still bounds the raw displacement.
    pub predict: bool,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            floor: ProminenceFloor::default(),
            envelope: Envelope::Carrier,
            gate_h: 10.0,
            merge_h: 3.0,
            boundary_band_h: 5.0,
            predict: true,
        }
    }
}

fn in_band(position: f64, band: f64, domain_length: f64) -> bool {
    position <= band || position >= domain_length - band
}

fn predicted_position(track: &PeakTrack, time_index: usize) -> f64 {
    match track.samples.as_slice() {
        [.., a, b] => {
            let rate = (b.position - a.position) / (b.time_index - a.time_index) as f64;
            b.position + rate * (time_index - b.time_index) as f64
        }
        [b] => b.position,
        [] => unreachable!("tracks are never empty"),
    }
}

/// Link peaks of consecutive snapshots into tracks.
///
/// Association is greedy: candidate (track, peak) pairs within the gate are
/// taken in order of increasing distance (to the predicted position when
/// [`TrackingParams::predict`] is set). Unclaimed peaks open new tracks;
/// tracks left without a peak are closed.
pub fn track_peaks(traj: &Trajectory, params: &TrackingParams) -> Vec<PeakTrack> {
    let grid = &traj.config.grid;
    let h = grid.h();
    let gate = params.gate_h * h;
    let merge = params.merge_h * h;
    let band = params.boundary_band_h * h;
    let sigma = match params.envelope {
        Envelope::Raw => 0.0,
        Envelope::Carrier => carrier_sigma(traj.config.lambda),
    };

    let mut tracks: Vec<PeakTrack> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    for snap in &traj.snapshots {
        let raw = snap.magnitudes();
        let mags = smoothed_envelope(&raw, sigma);
        let mut peaks = match params.floor.resolve(&mags) {
            Some(floor) => detect_peaks_in(&mags, h, floor),
            None => Vec::new(),
        };
        if sigma > 0.0 {
            // heights report |u| itself, including interference maxima
            let reach = sigma.ceil() as usize;
            for p in &mut peaks {
                let lo = p.node_index.saturating_sub(reach);
                let hi = (p.node_index + reach).min(raw.len() - 1);
                p.height = raw[lo..=hi].iter().copied().fold(0.0, f64::max);
            }
        }

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, &tid) in active.iter().enumerate() {
            let last = tracks[tid].samples.last().expect("tracks are never empty").position;
            let target = if params.predict {
                predicted_position(&tracks[tid], snap.time_index)
            } else {
                last
            };
            for (pi, p) in peaks.iter().enumerate() {
                if (p.position - last).abs() <= gate {
                    pairs.push(((p.position - target).abs(), ai, pi));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_taken = vec![false; active.len()];
        let mut peak_taken = vec![false; peaks.len()];
        for (_, ai, pi) in pairs {
            if track_taken[ai] || peak_taken[pi] {
                continue;
            }
            track_taken[ai] = true;
            peak_taken[pi] = true;
            let p = &peaks[pi];
            tracks[active[ai]].samples.push(TrackSample {
                time_index: snap.time_index,
                position: p.position,
                height: p.height,
            });
        }

        let survivors: Vec<f64> = active
            .iter()
            .zip(&track_taken)
            .filter(|(_, &t)| t)
            .map(|(&tid, _)| tracks[tid].samples.last().unwrap().position)
            .collect();
        let mut next_active = Vec::with_capacity(active.len());
        for (&tid, &taken) in active.iter().zip(&track_taken) {
            if taken {
                next_active.push(tid);
                continue;
            }
            let last = tracks[tid].samples.last().unwrap().position;
            tracks[tid].status = if in_band(last, band, grid.domain_length()) {
                TrackStatus::Exited
            } else if survivors.iter().any(|s| (s - last).abs() <= merge) {
                TrackStatus::Merged
            } else {
                TrackStatus::Exited
            };
        }
        for (pi, p) in peaks.iter().enumerate() {
            if !peak_taken[pi] {
                let tid = tracks.len();
                tracks.push(PeakTrack {
                    track_id: tid,
                    samples: vec![TrackSample {
                        time_index: snap.time_index,
                        position: p.position,
                        height: p.height,
                    }],
                    status: TrackStatus::Active,
                });
                next_active.push(tid);
            }
        }
        active = next_active;
    }
    tracks
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Fraction of a track's lifetime used for velocity fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityWindow {
    pub start_frac: f64,
    pub end_frac: f64,
}

impl Default for VelocityWindow {
    fn default() -> Self {
        Self {
            start_frac: 0.2,
            end_frac: 0.8,
        }
    }
}

pub const MIN_VELOCITY_SAMPLES: usize = 5;

/// Least-squares velocity (domain lengths per unit time) of the part of
/// `track` inside `window`.
pub fn estimate_velocity(track: &PeakTrack, window: VelocityWindow, dt: f64) -> Result<f64> {
    let (Some(first), Some(last)) = (track.samples.first(), track.samples.last()) else {
        return Err(Error::TooFewSamples {
            needed: MIN_VELOCITY_SAMPLES,
            got: 0,
        });
    };
    if !(0.0..=1.0).contains(&window.start_frac)
        || !(0.0..=1.0).contains(&window.end_frac)
        || window.start_frac > window.end_frac
    {
        return Err(Error::InvalidConfig(format!("velocity window {window:?} not inside [0, 1]")));
    }
    let t0 = first.time_index as f64;
    let span = (last.time_index - first.time_index) as f64;
    let lo = t0 + window.start_frac * span;
    let hi = t0 + window.end_frac * span;
    let (ts, xs): (Vec<f64>, Vec<f64>) = track
        .samples
        .iter()
        .filter(|s| (lo..=hi).contains(&(s.time_index as f64)))
        .map(|s| (s.time_index as f64 * dt, s.position))
        .unzip();
    if ts.len() < MIN_VELOCITY_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_VELOCITY_SAMPLES,
            got: ts.len(),
        });
    }
    Ok(least_squares_slope(&ts, &xs))
}

/// `(time_index, height)` for every sample of the track.
pub fn height_series(track: &PeakTrack) -> Vec<(usize, f64)> {
    track.samples.iter().map(|s| (s.time_index, s.height)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collision,
    Reflection,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Collision => "collision",
            EventKind::Reflection => "reflection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub kind: EventKind,
    pub time_index: usize,
    pub position: f64,
    pub track_ids: Vec<usize>,
    pub peak_height: f64,
}

/// Number of samples used for a local velocity.
const LOCAL_SAMPLES: usize = 4;

/// Slope of position against time index over `samples[lo..=hi]`.
fn local_slope(samples: &[TrackSample], lo: usize, hi: usize) -> Option<f64> {
    if hi <= lo {
        return None;
    }
    let (ts, xs): (Vec<f64>, Vec<f64>) = samples[lo..=hi]
        .iter()
        .map(|s| (s.time_index as f64, s.position))
        .unzip();
    Some(least_squares_slope(&ts, &xs))
}

/// Velocity sign just before (and including) sample `i`.
fn recent_slope(samples: &[TrackSample], i: usize) -> Option<f64> {
    local_slope(samples, i.saturating_sub(LOCAL_SAMPLES - 1), i)
}

/// Collisions: two tracks moving towards each other (opposite recent
/// velocities, each heading for the other) that come within `proximity` at a
/// shared time index.
///
/// One event per contiguous approach. When one of the pair ends during the
/// approach (the two maxima merged), the episode continues on the survivor
/// while it stays within `proximity / 2` of the last midpoint. The event sits
/// at the episode's tallest sample, ties going to the closer approach.
pub fn detect_collisions(tracks: &[PeakTrack], proximity: f64) -> Vec<EventRecord> {
    // (height, distance, time, position) of one episode sample
    type Sample = (f64, f64, usize, f64);
    let better = |x: &Sample, y: &Sample| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);
    let mut events = Vec::new();
    for (ia, a) in tracks.iter().enumerate() {
        for b in &tracks[ia + 1..] {
            let mut episode: Option<Sample> = None;
            let mut last_common: Option<usize> = None;
            let mut last_pair: Option<(usize, usize)> = None;
            let emit = |ep: &mut Option<Sample>, pair: Option<(usize, usize)>, events: &mut Vec<EventRecord>| {
                let Some(mut best) = ep.take() else { return };
                if let Some((i, j)) = pair {
                    let mid = 0.5 * (a.samples[i].position + b.samples[j].position);
                    let survivor = match (i + 1 == a.samples.len(), j + 1 == b.samples.len()) {
                        (true, false) => Some((b, j)),
                        (false, true) => Some((a, i)),
                        _ => None,
                    };
                    if let Some((t, k)) = survivor {
                        for s in t.samples[k + 1..].iter().take_while(|s| (s.position - mid).abs() <= 0.5 * proximity) {
                            let cand = (s.height, 0.0, s.time_index, s.position);
                            if better(&cand, &best) {
                                best = cand;
                            }
                        }
                    }
                }
                events.push(EventRecord {
                    kind: EventKind::Collision,
                    time_index: best.2,
                    position: best.3,
                    track_ids: vec![a.track_id, b.track_id],
                    peak_height: best.0,
                });
            };
            for (i, sa) in a.samples.iter().enumerate() {
                let Some(j) = b.sample_at(sa.time_index) else { continue };
                let sb = &b.samples[j];
                let contiguous = last_common == Some(i.wrapping_sub(1));
                last_common = Some(i);
                let dist = (sa.position - sb.position).abs();
                let approaching = match (recent_slope(&a.samples, i), recent_slope(&b.samples, j)) {
                    // opposite signs, each heading towards the other
                    (Some(va), Some(vb)) => va * vb < 0.0 && (sb.position - sa.position) * (va - vb) > 0.0,
                    _ => false,
                };
                if dist <= proximity && approaching {
                    if !contiguous {
                        emit(&mut episode, last_pair, &mut events);
                    }
                    let cand = (sa.height.max(sb.height), dist, sa.time_index, 0.5 * (sa.position + sb.position));
                    if episode.as_ref().is_none_or(|e| better(&cand, e)) {
                        episode = Some(cand);
                    }
                    last_pair = Some((i, j));
                } else {
                    emit(&mut episode, None, &mut events);
                }
            }
            emit(&mut episode, last_pair, &mut events);
        }
    }
    events.sort_by(|x, y| x.time_index.cmp(&y.time_index).then(x.track_ids.cmp(&y.track_ids)));
    events
}

/// Reflections: a track that enters the band next to either boundary and
/// leaves it moving the other way. The event sits at the sample closest to
/// the wall.
pub fn detect_reflections(tracks: &[PeakTrack], boundary_band: f64, domain_length: f64) -> Vec<EventRecord> {
    let mut events = Vec::new();
    for track in tracks {
        let s = &track.samples;
        let mut i = 0;
        while i < s.len() {
            if !in_band(s[i].position, boundary_band, domain_length) {
                i += 1;
                continue;
            }
            let start = i;
            let left = s[i].position <= boundary_band;
            while i < s.len() && in_band(s[i].position, boundary_band, domain_length) {
                i += 1;
            }
            let end = i - 1;
            let wall_dist = |p: f64| if left { p } else { domain_length - p };
            let closest = (start..=end)
                .min_by(|&x, &y| wall_dist(s[x].position).total_cmp(&wall_dist(s[y].position)))
                .unwrap();
            let before = local_slope(s, closest.saturating_sub(LOCAL_SAMPLES - 1), closest);
            let after = local_slope(s, closest, (closest + LOCAL_SAMPLES - 1).min(s.len() - 1));
            if let (Some(vb), Some(va)) = (before, after) {
                if vb * va < 0.0 {
                    events.push(EventRecord {
                        kind: EventKind::Reflection,
                        time_index: s[closest].time_index,
                        position: s[closest].position,
                        track_ids: vec![track.track_id],
                        peak_height: s[closest].height,
                    });
                }
            }
        }
    }
    events.sort_by(|x, y| x.time_index.cmp(&y.time_index).then(x.track_ids.cmp(&y.track_ids)));
    events
}
