//! Adversarial contamination experiments for finite-sample breakdown points.
//!
//! For a reference point `u_i`, a contamination plan replaces `ell` target
//! points by a tight cluster `anchor + k v + spread * offset_m` and pushes it
//! to the horizon along a schedule of magnitudes `k`. The direction `v` is a
//! depth-minimizing direction of `u_i` (or, for the lower-depth sweep, a
//! direction minimizing the open-halfspace count). A plan *diverges* when the
//! transported image of `u_i` tracks the escaping cluster:
//!
//! ```text
//! m_K > 0.5 k_K   and   (m_K / m_{K-1}) / (k_K / k_{K-1}) >= 0.8
//! ```
//!
//! where `m_t` is the distance of the probed statistic from the anchor (for
//! the map) or the Hausdorff distance to the clean contour (for contours and
//! medians) at magnitude `k_t`.
//!
//! A divergence found at `ell` certifies `BP <= ell/n`. The absence of one
//! only means no tried plan broke the estimator; the lower brackets come from
//! depth theory, not from the search.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, TAU};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::depth::{lexicographic_first, lower_tukey_depth, tukey_depth, DepthMode, DepthValue};
use crate::error::{Error, Result};
use crate::geometry::{
    dist2, dot, hausdorff, in_general_position, max_hyperplane_count, norm, AntiCone, Cone, Point, PointCloud,
};
use crate::quantiles::TransportQuantileFn;
use crate::reference::halton_point;
use crate::rng;
use crate::transport::{check_pairwise_monotone, solve_assignment, Matching};

/// Default magnitudes, in units of the data diameter.
pub const DEFAULT_SCHEDULE: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

/// The probed distance must exceed this fraction of the final magnitude.
pub const ESCAPE_FRACTION: f64 = 0.5;

/// Minimum growth of the probe between the last two magnitudes, relative to
/// the growth of the magnitudes themselves.
pub const GROWTH_THRESHOLD: f64 = 0.8;

/// Radius of the contaminant cluster, in units of the data diameter.
pub const OFFSET_SPREAD: f64 = 1e-3;

/// Half-angles audited by the cone check.
pub const CONE_HALF_ANGLES: [f64; 3] = [FRAC_PI_8, FRAC_PI_6, FRAC_PI_4];

/// Number of cone axes audited by the cone check.
pub const CONE_AXES: usize = 16;

/// How a contamination plan picks its direction and the target points it replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The last `ell` target indices.
    LastEll,
    /// The `ell` targets farthest from the escape ray.
    FarthestFromRay,
    /// A seeded uniformly random `ell`-subset.
    Random,
    /// The clean-matching images of `u_i` and of the `ell - 1` reference
    /// points furthest along the direction.
    MatchedCap,
    /// Every exact depth-minimizing direction, each with `matched_cap` and `last_ell`.
    AllMinDirectionsSweep,
    /// Every direction minimizing the open-halfspace count, with `matched_cap`.
    LowerDepthSweep,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::MatchedCap,
        Strategy::LastEll,
        Strategy::FarthestFromRay,
        Strategy::Random,
        Strategy::AllMinDirectionsSweep,
        Strategy::LowerDepthSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::LastEll => "last_ell",
            Strategy::FarthestFromRay => "farthest_from_ray",
            Strategy::Random => "random",
            Strategy::MatchedCap => "matched_cap",
            Strategy::AllMinDirectionsSweep => "all_min_directions_sweep",
            Strategy::LowerDepthSweep => "lower_depth_sweep",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

/// Knobs shared by all estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    /// Magnitudes in units of the data diameter; strictly increasing, at least two.
    pub schedule: Vec<f64>,
    /// Inclusive range of contamination sizes to sweep; defaults to `1..=n`.
    pub ell_range: Option<(usize, usize)>,
    /// Audit every solved instance for pairwise monotonicity and the cone property.
    pub audit: bool,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            strategies: Strategy::ALL.to_vec(),
            seed: 0,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            ell_range: None,
            audit: true,
        }
    }
}

impl HarnessOptions {
    fn validate(&self) -> Result<()> {
        if self.schedule.len() < 2 {
            return Err(Error::InvalidArgument("the schedule needs at least two magnitudes".into()));
        }
        if !self.schedule.iter().all(|k| k.is_finite() && *k > 0.0) || !self.schedule.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("the schedule must be positive and strictly increasing".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidArgument("no contamination strategy selected".into()));
        }
        Ok(())
    }
}

/// Replacement of `ell` target points by a cluster escaping along `direction`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContaminationPlan {
    pub id: String,
    pub ref_index: usize,
    pub replace_indices: Vec<usize>,
    pub direction: Vec<f64>,
    pub anchor: Point,
    /// Cluster radius; contaminant `m` sits at `anchor + k direction + spread * offsets[m]`.
    pub spread: f64,
    /// Distinct points of the closed unit ball.
    pub offsets: Vec<Vec<f64>>,
    /// Absolute magnitudes `k`, strictly increasing.
    pub schedule: Vec<f64>,
}

impl ContaminationPlan {
    pub fn ell(&self) -> usize {
        self.replace_indices.len()
    }

    /// The target cloud with the planned points replaced at magnitude `k`.
    pub fn contaminate(&self, target: &PointCloud, k: f64) -> Result<PointCloud> {
        let mut z = target.clone();
        for (&j, offset) in self.replace_indices.iter().zip(&self.offsets) {
            let coords = self
                .anchor
                .coords()
                .iter()
                .zip(&self.direction)
                .zip(offset)
                .map(|((a, v), o)| a + k * v + self.spread * o)
                .collect();
            z.replace(j, Point::new(coords)?)?;
        }
        Ok(z)
    }
}

/// Result of escalating one plan along its schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceVerdict {
    pub plan_id: String,
    pub ref_index: usize,
    pub ell: usize,
    pub diverged: bool,
    /// First magnitude at which the probe exceeded the escape fraction.
    pub witness_k: Option<f64>,
    pub schedule: Vec<f64>,
    /// Probe value per magnitude: map distance from the anchor, or Hausdorff distance.
    pub map_norms: Vec<f64>,
    /// `(m_K / m_{K-1}) / (k_K / k_{K-1})`.
    pub growth_ratio: f64,
    pub monotone_violations: usize,
    pub cone_violations: usize,
}

/// A named interval `[lo, hi]` and whether the estimate falls inside it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub name: String,
    pub lo: DepthValue,
    pub hi: DepthValue,
    pub contains_estimate: Option<bool>,
}

impl Bracket {
    fn new(name: &str, lo: DepthValue, hi: DepthValue, bp: Option<DepthValue>) -> Self {
        Bracket { name: name.into(), lo, hi, contains_estimate: bp.map(|b| lo <= b && b <= hi) }
    }
}

/// What an estimate is about.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimateTarget {
    Map { index: usize },
    Contour { tau: DepthValue },
    Median { tau_star: DepthValue },
}

/// One row of the per-magnitude trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub ell: usize,
    pub plan: String,
    pub k: f64,
    pub map_norm_or_hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllOutcome {
    pub ell: usize,
    pub plans_tried: usize,
    /// The first diverging plan, or else the one whose probe grew the most.
    pub best: DivergenceVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakdownEstimate {
    pub target: EstimateTarget,
    pub n: usize,
    pub per_ell: Vec<EllOutcome>,
    /// Smallest `ell/n` at which a plan diverged; `None` if none did.
    pub bp_estimate: Option<DepthValue>,
    pub bracket_lo: DepthValue,
    pub bracket_hi: DepthValue,
    pub within_bracket: bool,
    /// Further theoretical brackets reported alongside the primary one.
    pub extra_brackets: Vec<Bracket>,
    /// True when two reported brackets disagree about containing the estimate.
    pub bracket_disagreement: bool,
    pub instances_solved: usize,
    pub monotone_violations: usize,
    pub cone_violations: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

struct Directions {
    lexicographic_min: Vec<f64>,
    minimizers: Vec<Vec<f64>>,
    open_minimizers: Vec<Vec<f64>>,
}

/// Precomputed state for contamination experiments on one clean instance.
pub struct Harness<'a> {
    reference: &'a PointCloud,
    target: &'a PointCloud,
    clean: Matching,
    ref_depths: Vec<DepthValue>,
    options: HarnessOptions,
    scale: f64,
    anchor: Point,
    directions: HashMap<usize, Directions>,
    cone_axes: Vec<Vec<f64>>,
}

impl<'a> Harness<'a> {
    pub fn new(reference: &'a PointCloud, target: &'a PointCloud, options: HarnessOptions) -> Result<Self> {
        options.validate()?;
        let clean = solve_assignment(reference, target)?;
        let ref_depths = crate::depth::cloud_depths(reference)?;
        let scale = reference.diameter().max(target.diameter());
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let cone_axes = audit_axes(reference.dim());
        Ok(Harness {
            reference,
            target,
            clean,
            ref_depths,
            options,
            scale,
            anchor: target.centroid(),
            directions: HashMap::new(),
            cone_axes,
        })
    }

    pub fn clean_matching(&self) -> &Matching {
        &self.clean
    }

    pub fn reference_depths(&self) -> &[DepthValue] {
        &self.ref_depths
    }

    /// Absolute magnitudes used by every plan.
    pub fn schedule(&self) -> Vec<f64> {
        self.options.schedule.iter().map(|k| k * self.scale).collect()
    }

    fn directions(&mut self, i: usize) -> Result<&Directions> {
        if !self.directions.contains_key(&i) {
            let u = &self.reference[i];
            let depth = tukey_depth(u, self.reference, DepthMode::Exact)?;
            let lower = lower_tukey_depth(u, self.reference, DepthMode::Exact)?;
            let sort = |dirs: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                let mut dirs = dirs;
                dirs.sort_by(|a, b| {
                    let key = |v: &Vec<f64>| v.iter().map(|x| (x * 1e9).round() as i64).collect::<Vec<_>>();
                    key(a).cmp(&key(b))
                });
                dirs
            };
            let open_minimizers = lower.directions.iter().map(|v| v.iter().map(|c| -c).collect()).collect();
            let entry = Directions {
                lexicographic_min: lexicographic_first(&depth.directions).expect("non-empty candidate set"),
                minimizers: sort(depth.directions),
                open_minimizers: sort(open_minimizers),
            };
            self.directions.insert(i, entry);
        }
        Ok(&self.directions[&i])
    }

    /// Reference index `i` plus the `ell - 1` others furthest along `v`.
    fn cap(&self, i: usize, v: &[f64], ell: usize) -> Vec<usize> {
        let u = &self.reference[i];
        let mut others: Vec<(usize, f64)> =
            (0..self.reference.len()).filter(|&j| j != i).map(|j| (j, dot(&self.reference[j].diff(u), v))).collect();
        others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        std::iter::once(i).chain(others.into_iter().take(ell - 1).map(|(j, _)| j)).collect()
    }

    fn replacement(&self, strategy: Strategy, i: usize, v: &[f64], ell: usize) -> Vec<usize> {
        let n = self.target.len();
        let mut idx: Vec<usize> = match strategy {
            Strategy::LastEll => (n - ell..n).collect(),
            Strategy::FarthestFromRay => {
                let mut dist: Vec<(usize, f64)> = self
                    .target
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let w = x.diff(&self.anchor);
                        let t = dot(&w, v).max(0.0);
                        let along: Vec<f64> = v.iter().map(|c| c * t).collect();
                        (j, dist2(&w, &along))
                    })
                    .collect();
                dist.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                dist.into_iter().take(ell).map(|(j, _)| j).collect()
            }
            Strategy::Random => {
                let stream = rng::split(rng::split(i as u64, ell as u64), 0x5eed);
                sample(&mut rng::stream(self.options.seed, stream), n, ell).into_vec()
            }
            _ => self.cap(i, v, ell).into_iter().map(|r| self.clean.sigma[r]).collect(),
        };
        idx.sort_unstable();
        idx
    }

    fn plan(&self, id: String, i: usize, v: Vec<f64>, replace_indices: Vec<usize>) -> ContaminationPlan {
        let ell = replace_indices.len();
        ContaminationPlan {
            id,
            ref_index: i,
            replace_indices,
            direction: v,
            anchor: self.anchor.clone(),
            spread: OFFSET_SPREAD * self.scale,
            offsets: ball_offsets(self.reference.dim(), ell),
            schedule: self.schedule(),
        }
    }

    /// Every plan `strategy` produces for reference index `i` and `ell` replacements.
    pub fn build_plans(&mut self, i: usize, ell: usize, strategy: Strategy) -> Result<Vec<ContaminationPlan>> {
        let n = self.reference.len();
        self.reference.get(i)?;
        if ell == 0 || ell > n {
            return Err(Error::InvalidArgument(format!("ell = {ell} outside 1..={n}")));
        }
        let dirs = self.directions(i)?;
        let (min_dir, minimizers, open_minimizers) =
            (dirs.lexicographic_min.clone(), dirs.minimizers.clone(), dirs.open_minimizers.clone());
        let single = |s: Strategy| vec![(s.name().to_string(), s, min_dir.clone())];
        let specs: Vec<(String, Strategy, Vec<f64>)> = match strategy {
            Strategy::AllMinDirectionsSweep => minimizers
                .iter()
                .enumerate()
                .flat_map(|(m, v)| {
                    [Strategy::MatchedCap, Strategy::LastEll]
                        .map(|s| (format!("{}[{m}]/{}", strategy.name(), s.name()), s, v.clone()))
                })
                .collect(),
            Strategy::LowerDepthSweep => open_minimizers
                .iter()
                .enumerate()
                .map(|(m, v)| (format!("{}[{m}]", strategy.name()), Strategy::MatchedCap, v.clone()))
                .collect(),
            s => single(s),
        };
        Ok(specs
            .into_iter()
            .map(|(id, s, v)| {
                let replace = self.replacement(s, i, &v, ell);
                self.plan(id, i, v, replace)
            })
            .collect())
    }

    /// Plans for every configured strategy, duplicates (same direction and
    /// replacement set) removed.
    pub fn all_plans(&mut self, i: usize, ell: usize) -> Result<Vec<ContaminationPlan>> {
        let mut plans: Vec<ContaminationPlan> = Vec::new();
        for s in self.options.strategies.clone() {
            for p in self.build_plans(i, ell, s)? {
                let duplicate = plans.iter().any(|q| {
                    q.replace_indices == p.replace_indices
                        && q.direction.iter().zip(&p.direction).all(|(a, b)| (a - b).abs() <= 1e-12)
                });
                if !duplicate {
                    plans.push(p);
                }
            }
        }
        Ok(plans)
    }

    fn audit(&self, z: &PointCloud, m: &Matching, vertices: &[usize]) -> (usize, usize) {
        if !self.options.audit {
            return (0, 0);
        }
        let monotone = check_pairwise_monotone(m, self.reference, z).len();
        let cone = vertices
            .iter()
            .map(|&i| cone_property_violations(self.reference, z, m, i, &CONE_HALF_ANGLES, &self.cone_axes))
            .sum();
        (monotone, cone)
    }

    /// Escalates `plan`, probing how far the image of `plan.ref_index` travels.
    pub fn run_divergence_test(&self, plan: &ContaminationPlan) -> Result<(DivergenceVerdict, Vec<TraceRow>)> {
        let i = plan.ref_index;
        self.escalate(plan, &[i], |z, m| Ok(z[m.sigma[i]].distance(&plan.anchor)))
    }

    fn escalate(
        &self,
        plan: &ContaminationPlan,
        vertices: &[usize],
        probe: impl Fn(&PointCloud, &Matching) -> Result<f64>,
    ) -> Result<(DivergenceVerdict, Vec<TraceRow>)> {
        let mut norms = Vec::with_capacity(plan.schedule.len());
        let mut trace = Vec::with_capacity(plan.schedule.len());
        let (mut monotone, mut cone) = (0, 0);
        for &k in &plan.schedule {
            let z = plan.contaminate(self.target, k)?;
            let m = solve_assignment(self.reference, &z)?;
            let value = probe(&z, &m)?;
            let (mv, cv) = self.audit(&z, &m, vertices);
            monotone += mv;
            cone += cv;
            norms.push(value);
            trace.push(TraceRow { ell: plan.ell(), plan: plan.id.clone(), k, map_norm_or_hausdorff: value });
        }
        let verdict = judge(plan, norms, monotone, cone);
        Ok((verdict, trace))
    }

    fn sweep<F>(&mut self, vertices: &[usize], target: EstimateTarget, mut run: F) -> Result<BreakdownEstimate>
    where
        F: FnMut(&Self, &ContaminationPlan) -> Result<(DivergenceVerdict, Vec<TraceRow>)>,
    {
        let n = self.reference.len();
        let (lo, hi) = self.options.ell_range.unwrap_or((1, n));
        if lo == 0 || hi > n || lo > hi {
            return Err(Error::InvalidArgument(format!("ell range {lo}..={hi} outside 1..={n}")));
        }
        let mut per_ell = Vec::new();
        let mut trace = Vec::new();
        let mut bp = None;
        let (mut solved, mut monotone, mut cone) = (0, 0, 0);
        for ell in lo..=hi {
            let mut plans = Vec::new();
            for &i in vertices {
                plans.extend(self.all_plans(i, ell)?);
            }
            let mut best: Option<DivergenceVerdict> = None;
            let mut tried = 0;
            for plan in &plans {
                let (verdict, rows) = run(self, plan)?;
                tried += 1;
                solved += plan.schedule.len();
                monotone += verdict.monotone_violations;
                cone += verdict.cone_violations;
                trace.extend(rows);
                let replace = match &best {
                    None => true,
                    Some(b) => verdict.diverged && !b.diverged || (!b.diverged && last(&verdict) > last(b)),
                };
                let diverged = verdict.diverged;
                if replace {
                    best = Some(verdict);
                }
                if diverged {
                    break;
                }
            }
            let best = best.expect("at least one plan per ell");
            let diverged = best.diverged;
            per_ell.push(EllOutcome { ell, plans_tried: tried, best });
            if diverged {
                bp = Some(DepthValue::new(ell, n)?);
                break;
            }
        }
        Ok(BreakdownEstimate {
            target,
            n,
            per_ell,
            bp_estimate: bp,
            bracket_lo: DepthValue::new(0, n)?,
            bracket_hi: DepthValue::new(n, n)?,
            within_bracket: false,
            extra_brackets: Vec::new(),
            bracket_disagreement: false,
            instances_solved: solved,
            monotone_violations: monotone,
            cone_violations: cone,
            trace,
        })
    }

    /// Breakdown of the transport map evaluated at reference point `i`.
    ///
    /// Primary bracket `[TD^-(u_i), TD(u_i)]`; under general position the
    /// bracket `[TD - (d-1)/n, TD]` is reported as well.
    pub fn estimate_bp_map(&mut self, i: usize) -> Result<BreakdownEstimate> {
        self.reference.get(i)?;
        let u = &self.reference[i];
        let td = tukey_depth(u, self.reference, DepthMode::Exact)?.depth;
        let td_lower = lower_tukey_depth(u, self.reference, DepthMode::Exact)?.depth;
        let mut est = self.sweep(&[i], EstimateTarget::Map { index: i }, |h, plan| h.run_divergence_test(plan))?;
        let mut extra = Vec::new();
        if in_general_position(self.reference) {
            let d = self.reference.dim();
            extra.push(Bracket::new("general_position", td.minus_fraction(d - 1), td, est.bp_estimate));
        }
        finish(&mut est, td_lower, td, extra);
        Ok(est)
    }

    fn estimate_set(&mut self, tau: DepthValue, target: EstimateTarget) -> Result<(BreakdownEstimate, Vec<usize>)> {
        let q = TransportQuantileFn::from_parts(
            self.reference.clone(),
            self.target.clone(),
            self.clean.clone(),
            self.ref_depths.clone(),
        )?;
        let contour = q.transport_contour(tau);
        let clean =
            contour.to_cloud().ok_or_else(|| Error::InvalidArgument(format!("no reference point has depth {tau}")))?;
        let members = contour.ref_indices.clone();
        let est = self.sweep(&members.clone(), target, |h, plan| {
            h.escalate(plan, &members, |z, m| {
                let moved = PointCloud::new(members.iter().map(|&r| z[m.sigma[r]].clone()).collect())?;
                hausdorff(&clean, &moved)
            })
        })?;
        Ok((est, members))
    }

    fn lower_depth_over(&self, members: &[usize]) -> Result<DepthValue> {
        let mut best: Option<DepthValue> = None;
        for &r in members {
            let v = lower_tukey_depth(&self.reference[r], self.reference, DepthMode::Exact)?.depth;
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        best.ok_or(Error::EmptyCloud)
    }

    /// `N`: the largest number of reference points on one hyperplane, minus one.
    fn hyperplane_excess(&self) -> usize {
        max_hyperplane_count(self.reference).map_or(self.reference.len(), |c| c.saturating_sub(1))
    }

    /// Breakdown of the depth contour at level `tau`, probed by Hausdorff distance.
    ///
    /// Primary bracket `[tau - N/n, tau]`. Also reported: the lower-depth
    /// bracket `[min TD^-, tau]` over the contour's reference points and,
    /// under general position, `[tau - (d-1)/n, tau]`.
    pub fn estimate_bp_contour(&mut self, tau: DepthValue) -> Result<BreakdownEstimate> {
        let n = self.reference.len();
        let tau = tau
            .with_denominator(n)
            .ok_or_else(|| Error::InvalidArgument(format!("{tau} is not a depth level of {n} points")))?;
        let (mut est, members) = self.estimate_set(tau, EstimateTarget::Contour { tau })?;
        let bp = est.bp_estimate;
        let mut extra = vec![Bracket::new("lower_depth", self.lower_depth_over(&members)?, tau, bp)];
        if in_general_position(self.reference) {
            extra.push(Bracket::new("general_position", tau.minus_fraction(self.reference.dim() - 1), tau, bp));
        }
        finish(&mut est, tau.minus_fraction(self.hyperplane_excess()), tau, extra);
        Ok(est)
    }

    /// Breakdown of the median set (the contour at maximal depth `tau*`).
    ///
    /// Primary bracket `[tau* - (d-1)/n, tau*]` under general position, else
    /// `[tau* - N/n, tau*]`. The bracket `[1/2 - N/n, 1/2]` is reported as
    /// well; the two can disagree for finite reference clouds, which sets
    /// `bracket_disagreement`.
    pub fn estimate_bp_median(&mut self) -> Result<BreakdownEstimate> {
        let n = self.reference.len();
        let tau_star = *self.ref_depths.iter().max().expect("non-empty");
        let (mut est, members) = self.estimate_set(tau_star, EstimateTarget::Median { tau_star })?;
        let bp = est.bp_estimate;
        let excess = self.hyperplane_excess();
        let lo = if in_general_position(self.reference) {
            tau_star.minus_fraction(self.reference.dim() - 1)
        } else {
            tau_star.minus_fraction(excess)
        };
        let half = DepthValue::new(n, 2 * n)?;
        let extra = vec![
            Bracket::new("lower_depth", self.lower_depth_over(&members)?, tau_star, bp),
            Bracket::new("one_half", DepthValue::new(n.saturating_sub(2 * excess), 2 * n)?, half, bp),
        ];
        finish(&mut est, lo, tau_star, extra);
        Ok(est)
    }
}

fn last(v: &DivergenceVerdict) -> f64 {
    v.map_norms.last().copied().unwrap_or(0.0)
}

fn finish(est: &mut BreakdownEstimate, lo: DepthValue, hi: DepthValue, extra: Vec<Bracket>) {
    est.bracket_lo = lo;
    est.bracket_hi = hi;
    est.within_bracket = est.bp_estimate.is_some_and(|b| lo <= b && b <= hi);
    let primary = est.bp_estimate.map(|_| est.within_bracket);
    est.bracket_disagreement = extra.iter().any(|b| b.contains_estimate.is_some() && b.contains_estimate != primary);
    est.extra_brackets = extra;
}

fn judge(plan: &ContaminationPlan, norms: Vec<f64>, monotone: usize, cone: usize) -> DivergenceVerdict {
    let k = &plan.schedule;
    let len = norms.len();
    let (m_prev, m_last) = (norms[len - 2], norms[len - 1]);
    let k_growth = k[len - 1] / k[len - 2];
    let growth_ratio = if m_prev > 0.0 {
        (m_last / m_prev) / k_growth
    } else if m_last > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let diverged = m_last > ESCAPE_FRACTION * k[len - 1] && growth_ratio >= GROWTH_THRESHOLD;
    let witness_k =
        if diverged { norms.iter().zip(k).find(|(m, k)| **m > ESCAPE_FRACTION * **k).map(|(_, k)| *k) } else { None };
    DivergenceVerdict {
        plan_id: plan.id.clone(),
        ref_index: plan.ref_index,
        ell: plan.ell(),
        diverged,
        witness_k,
        schedule: k.clone(),
        map_norms: norms,
        growth_ratio,
        monotone_violations: monotone,
        cone_violations: cone,
    }
}

/// `count` distinct deterministic points of the closed unit ball (Halton
/// points of `[-1, 1]^d` that fall inside the ball).
pub fn ball_offsets(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let dim_eff = dim.min(16);
    (1u64..)
        .map(|k| {
            let mut p: Vec<f64> = halton_point(k, dim_eff).into_iter().map(|c| 2.0 * c - 1.0).collect();
            p.resize(dim, 0.0);
            p
        })
        .filter(|p| norm(p) <= 1.0)
        .take(count)
        .collect()
}

/// Deterministic audit axes: equally spaced angles in the plane, a
/// Fibonacci sphere in 3D, Halton directions otherwise.
pub fn audit_axes(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..CONE_AXES).map(|m| TAU * m as f64 / CONE_AXES as f64).map(|a| vec![a.cos(), a.sin()]).collect(),
        _ => (1u64..)
            .map(|k| halton_point(k, dim.min(16)).into_iter().map(|c| 2.0 * c - 1.0).collect::<Vec<_>>())
            .filter_map(|mut p| {
                p.resize(dim, 0.0);
                crate::geometry::normalized(&p)
            })
            .take(CONE_AXES)
            .collect(),
    }
}

/// Counts reference points `u_j` in the cone at `u_i` whose images leave the
/// matching anti-cone at `T(u_i)`, over every half-angle and axis given.
///
/// Any monotone matching gives zero; the anti-cone test allows a slack of
/// `1e-9 (1 + |T(u_i)| + |T(u_j)|)` for rounding.
pub fn cone_property_violations(
    reference: &PointCloud,
    target: &PointCloud,
    m: &Matching,
    i: usize,
    half_angles: &[f64],
    axes: &[Vec<f64>],
) -> usize {
    let x = &reference[i];
    let y = &target[m.sigma[i]];
    let mut violations = 0;
    for &theta in half_angles {
        for e in axes {
            let (Ok(cone), Ok(anti)) =
                (Cone::new(x.clone(), e.clone(), theta), AntiCone::new(y.clone(), e.clone(), theta))
            else {
                continue;
            };
            for j in (0..reference.len()).filter(|&j| j != i) {
                if !cone.contains(&reference[j]).unwrap_or(false) {
                    continue;
                }
                let yj = &target[m.sigma[j]];
                let slack = 1e-9 * (1.0 + y.norm() + yj.norm());
                if !anti.contains_with_slack(yj, slack).unwrap_or(true) {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Builds the plans of one strategy for reference index `i`.
pub fn build_plan(
    reference: &PointCloud,
    target: &PointCloud,
    i: usize,
    ell: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<Vec<ContaminationPlan>> {
    let options = HarnessOptions { seed, ..HarnessOptions::default() };
    Harness::new(reference, target, options)?.build_plans(i, ell, strategy)
}

/// Escalates one plan and returns its verdict.
pub fn run_divergence_test(
    reference: &PointCloud,
    target: &PointCloud,
    plan: &ContaminationPlan,
) -> Result<DivergenceVerdict> {
    let harness = Harness::new(reference, target, HarnessOptions::default())?;
    Ok(harness.run_divergence_test(plan)?.0)
}

pub fn estimate_bp_map(
    reference: &PointCloud,
    target: &PointCloud,
    i: usize,
    options: HarnessOptions,
) -> Result<BreakdownEstimate> {
    Harness::new(reference, target, options)?.estimate_bp_map(i)
}

pub fn estimate_bp_contour(
    reference: &PointCloud,
    target: &PointCloud,
    tau: DepthValue,
    options: HarnessOptions,
) -> Result<BreakdownEstimate> {
    Harness::new(reference, target, options)?.estimate_bp_contour(tau)
}

pub fn estimate_bp_median(
    reference: &PointCloud,
    target: &PointCloud,
    options: HarnessOptions,
) -> Result<BreakdownEstimate> {
    Harness::new(reference, target, options)?.estimate_bp_median()
}

/// Writes the per-magnitude trace as CSV (`ell,plan,k,map_norm_or_hausdorff`).
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("ell,plan,k,map_norm_or_hausdorff\n");
    for row in trace {
        out.push_str(&format!("{},{},{:?},{:?}\n", row.ell, row.plan, row.k, row.map_norm_or_hausdorff));
    }
    out
}

impl fmt::Display for BreakdownEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bp = self.bp_estimate.map_or_else(|| "none".to_string(), |b| b.to_string());
        write!(f, "bp={bp} bracket=[{}, {}] within={}", self.bracket_lo, self.bracket_hi, self.within_bracket)?;
        if !self.extra_brackets.is_empty() {
            let extra = self.extra_brackets.iter().map(|b| format!("{}=[{}, {}]", b.name, b.lo, b.hi)).join(" ");
            write!(f, " {extra}")?;
        }
        Ok(())
    }
}
