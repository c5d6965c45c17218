//! Randomized and exhaustive checks of the geometric theorems the library
//! relies on.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, suite,
//! index)`, so results do not depend on thread count or scheduling. The
//! `WC_THREADS` environment variable caps the worker pool.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::{
    argmin_max_angle_function, delaunay_triangulation, enumerate_triangulations,
    is_locally_delaunay, optimal_triangulation, Criterion, TriangulationSet,
};
use crate::geometry::{
    circumcenter, equatorial_ball, is_k_well_centered, normalized_volume, vertex_angles, Point,
    SimplexGeometry,
};

/// Samples closer than this (relative to `R`) to an equatorial sphere are
/// excluded from the characterization check.
pub const CHARACTERIZATION_MARGIN: f64 = 1e-8;
/// Random simplices with smaller normalized volume are redrawn.
pub const MIN_NORMALIZED_VOLUME: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const LEMMA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub samples: usize,
    /// Samples the property applied to.
    pub checked: usize,
    /// Samples skipped as too close to a decision boundary or not meeting
    /// the theorem's hypothesis.
    pub excluded: usize,
    pub failures: usize,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: {} samples, {} checked, {} excluded, {} failures",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.checked,
            self.excluded,
            self.failures
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Pass,
    Fail,
    Excluded,
}

fn tally(name: &str, outcomes: Vec<Outcome>) -> SuiteResult {
    let count = |o| outcomes.iter().filter(|&&x| x == o).count();
    SuiteResult {
        name: name.to_string(),
        samples: outcomes.len(),
        checked: count(Outcome::Pass) + count(Outcome::Fail),
        excluded: count(Outcome::Excluded),
        failures: count(Outcome::Fail),
    }
}

/// Worker pool sized by `WC_THREADS`, or by rayon's default if unset.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("WC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

pub fn sample_rng(seed: u64, suite: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((suite << 40) | index as u64);
    rng
}

fn run<F>(seed: u64, suite: u64, samples: usize, check: F) -> Vec<Outcome>
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|i| check(&mut sample_rng(seed, suite, i)))
        .collect()
}

/// `n + 1` vertices uniform in the unit `n`-cube, redrawn until the
/// normalized volume reaches [`MIN_NORMALIZED_VOLUME`].
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<Point> {
    loop {
        let pts: Vec<Point> = (0..=n)
            .map(|_| {
                let c: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                Point::new(&c)
            })
            .collect();
        if normalized_volume(&pts) >= MIN_NORMALIZED_VOLUME {
            return pts;
        }
    }
}

fn facet(vertices: &[Point], skip: usize) -> Vec<Point> {
    vertices
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, p)| *p)
        .collect()
}

/// The equatorial-ball test and barycentric circumcenter containment agree.
pub fn characterization(seed: u64, n: usize, samples: usize) -> SuiteResult {
    let outcomes = run(seed, 1 + n as u64, samples, |rng| {
        let s = random_simplex(rng, n);
        let (Ok(ball), Ok(bary)) = (equatorial_ball(&s), is_k_well_centered(&s, n)) else {
            return Outcome::Excluded;
        };
        if ball.margin <= CHARACTERIZATION_MARGIN {
            Outcome::Excluded
        } else if ball.strictly_outside == bary {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    });
    tally(&format!("characterization n={n}"), outcomes)
}

/// `h_i^2 + R_i^2 = R^2` for every facet, and `h_i / R = cos θ_i` for
/// triangles.
pub fn identities(seed: u64, n: usize, samples: usize) -> SuiteResult {
    let outcomes = run(seed, 10 + n as u64, samples, |rng| {
        let s = random_simplex(rng, n);
        let Ok(g) = SimplexGeometry::new(&s) else {
            return Outcome::Excluded;
        };
        if g.degenerate {
            return Outcome::Excluded;
        }
        let r2 = g.circumradius * g.circumradius;
        for i in 0..=n {
            let Ok(f) = circumcenter(&facet(&s, i)) else {
                return Outcome::Excluded;
            };
            let h = g.heights()[i];
            if (h * h + f.radius * f.radius - r2).abs() > IDENTITY_TOLERANCE * r2 {
                return Outcome::Fail;
            }
        }
        if n == 2 {
            let angles = vertex_angles(&[s[0], s[1], s[2]]);
            for (i, theta) in angles.iter().enumerate() {
                if (g.ratio(i) - theta.cos()).abs() > IDENTITY_TOLERANCE {
                    return Outcome::Fail;
                }
            }
        }
        Outcome::Pass
    });
    tally(&format!("identities n={n}"), outcomes)
}

/// `min_i h_i / R <= 1/n`.
pub fn min_ratio_bound(seed: u64, n: usize, samples: usize) -> SuiteResult {
    let outcomes = run(seed, 20 + n as u64, samples, |rng| {
        let s = random_simplex(rng, n);
        let Ok(g) = SimplexGeometry::new(&s) else {
            return Outcome::Excluded;
        };
        let min = g.ratios().fold(f64::INFINITY, f64::min);
        if min <= 1.0 / n as f64 + LEMMA_TOLERANCE {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    });
    tally(&format!("min ratio bound n={n}"), outcomes)
}

/// Between 4 and 7 planar points with no three collinear. Even indices are
/// uniform in the unit square; odd ones perturb a subset of a triangular
/// lattice patch so that acute triangulations actually occur.
pub fn random_point_set<R: Rng>(rng: &mut R, index: usize) -> Vec<Point> {
    let n = rng.gen_range(4..=7);
    if index % 2 == 0 {
        return (0..n).map(|_| Point::xy(rng.gen(), rng.gen())).collect();
    }
    let mut lattice: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    lattice.extend((0..6).map(|i| {
        let t = std::f64::consts::PI / 3.0 * i as f64;
        (t.cos(), t.sin())
    }));
    lattice.shuffle(rng);
    lattice
        .into_iter()
        .take(n)
        .map(|(x, y)| Point::xy(x + rng.gen_range(-0.08..0.08), y + rng.gen_range(-0.08..0.08)))
        .collect()
}

fn enumerate_sample(seed: u64, suite: u64, index: usize) -> Option<TriangulationSet> {
    let mut rng = sample_rng(seed, suite, index);
    enumerate_triangulations(&random_point_set(&mut rng, index)).ok()
}

fn run_point_sets<F>(seed: u64, suite: u64, sets: usize, check: F) -> Vec<Outcome>
where
    F: Fn(&TriangulationSet) -> Outcome + Sync,
{
    (0..sets)
        .into_par_iter()
        .map(|i| match enumerate_sample(seed, suite, i) {
            Some(set) => check(&set),
            None => Outcome::Excluded,
        })
        .collect()
}

fn is_acute(set: &TriangulationSet, t: usize) -> bool {
    set.triangulations[t].max_angle(&set.points) < FRAC_PI_2 - 1e-9
}

/// Every 2-well-centered triangulation of a convex hull is Delaunay.
pub fn well_centered_implies_delaunay(seed: u64, sets: usize) -> SuiteResult {
    let outcomes = run_point_sets(seed, 30, sets, |set| {
        let mut applied = false;
        for t in &set.triangulations {
            let well_centered = t.triangles.iter().all(|tri| {
                let pts = [set.points[tri[0]], set.points[tri[1]], set.points[tri[2]]];
                is_k_well_centered(&pts, 2).unwrap_or(false)
            });
            if !well_centered {
                continue;
            }
            applied = true;
            let Ok(mesh) = t.to_mesh(&set.points) else {
                return Outcome::Fail;
            };
            if !is_locally_delaunay(&mesh).is_delaunay {
                return Outcome::Fail;
            }
        }
        if applied {
            Outcome::Pass
        } else {
            Outcome::Excluded
        }
    });
    tally("well-centered implies Delaunay", outcomes)
}

/// When no triangulation is acute, minimizing `max |2 cos θ - 1|` and
/// minimizing the largest angle select the same triangulations. The
/// increasing extension `1 - 2 cos θ` must agree with the largest angle on
/// every point set.
pub fn cosine_minmax_agreement(seed: u64, sets: usize) -> SuiteResult {
    let outcomes = run_point_sets(seed, 31, sets, |set| {
        let emax = argmin_max_angle_function(set, |t| t);
        let extended = argmin_max_angle_function(set, |t| 1.0 - 2.0 * t.cos());
        if extended.iter().any(|i| !emax.contains(i)) {
            return Outcome::Fail;
        }
        let all_nonacute = set
            .triangulations
            .iter()
            .all(|t| t.max_angle(&set.points) >= FRAC_PI_2);
        if !all_nonacute {
            return Outcome::Excluded;
        }
        let ecos = argmin_max_angle_function(set, |t| (2.0 * t.cos() - 1.0).abs());
        if ecos == emax {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    });
    tally("cosine and minmax agree", outcomes)
}

/// An acute triangulation, when one exists, is unique, Delaunay, and the
/// unique minimizer of the largest angle.
pub fn acute_is_unique_delaunay(seed: u64, sets: usize) -> SuiteResult {
    let outcomes = run_point_sets(seed, 32, sets, |set| {
        let acute: Vec<usize> = (0..set.triangulations.len())
            .filter(|&t| is_acute(set, t))
            .collect();
        if acute.is_empty() {
            return Outcome::Excluded;
        }
        if acute.len() != 1 {
            return Outcome::Fail;
        }
        let Ok(delaunay) = delaunay_triangulation(&set.points) else {
            return Outcome::Fail;
        };
        if set.triangulations[acute[0]].edges != delaunay.edges() {
            return Outcome::Fail;
        }
        match optimal_triangulation(&set.points, Criterion::Emax) {
            Ok((_, best)) if best == acute => Outcome::Pass,
            _ => Outcome::Fail,
        }
    });
    tally("acute triangulation is unique Delaunay minmax", outcomes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

/// Number of point sets enumerated for a given simplex sample count.
pub fn point_set_count(samples: usize) -> usize {
    (samples / 100).max(100)
}

/// Runs every suite for each simplex dimension in `dims`.
pub fn verify_all(seed: u64, samples: usize, dims: &[usize]) -> VerifyReport {
    thread_pool().install(|| {
        let mut suites = Vec::new();
        for &n in dims {
            suites.push(characterization(seed, n, samples));
            suites.push(identities(seed, n, samples));
            suites.push(min_ratio_bound(seed, n, samples));
        }
        let sets = point_set_count(samples);
        suites.push(well_centered_implies_delaunay(seed, sets));
        suites.push(cosine_minmax_agreement(seed, sets));
        suites.push(acute_is_unique_delaunay(seed, sets));
        VerifyReport { seed, suites }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_deterministic_and_nondegenerate() {
        let a = random_simplex(&mut sample_rng(7, 1, 3), 3);
        let b = random_simplex(&mut sample_rng(7, 1, 3), 3);
        assert_eq!(a, b);
        assert!(normalized_volume(&a) >= MIN_NORMALIZED_VOLUME);
        assert_ne!(a, random_simplex(&mut sample_rng(7, 1, 4), 3));
    }

    #[test]
    fn small_suites_pass() {
        let report = verify_all(3, 500, &[2, 3]);
        for s in &report.suites {
            assert!(s.passed(), "{}", s.summary_line());
        }
        assert!(report.suites.iter().all(|s| s.checked > 0), "{report:?}");
    }

    #[test]
    fn lattice_sets_produce_acute_cases() {
        let r = acute_is_unique_delaunay(1, 100);
        assert!(r.checked >= 5, "{}", r.summary_line());
    }
}
