//! Temporary geometry-tuning probe (not part of the test suite).

use arcopt::kinematics::RobotDesign;
use arcopt::problems::{builtin_problem, RobotTemplate};
use arcopt::reachability::{
    estimate_reachability_fk, hybrid_reachability, GridInfo, SamplingBudget, TargetSet,
};
use arcopt::vec3::Vec3;

fn arm() -> RobotTemplate {
    builtin_problem("mobile_platform").unwrap().robot
}

fn box_targets(y0: f64) -> TargetSet {
    let half_w = std::env::var("PROBE_HALF_W")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(40.0);
    let depth = std::env::var("PROBE_DEPTH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(32.0);
    let half_h = std::env::var("PROBE_HALF_H")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(25.5);
    let lo = Vec3::new(-half_w, y0, -half_h);
    let hi = Vec3::new(half_w, y0 + depth, half_h);
    let s = 3.0;
    let snap = |v: f64| s * (v / s).floor();
    let origin = Vec3::new(snap(lo.x), snap(lo.y), snap(lo.z));
    let count = |o: f64, h: f64| (((h - o) / s - 1e-9).ceil().max(1.0)) as usize;
    let n = [
        count(origin.x, hi.x),
        count(origin.y, hi.y),
        count(origin.z, hi.z),
    ];
    let mut points = Vec::new();
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let c = origin
                    + Vec3::new(
                        (ix as f64 + 0.5) * s,
                        (iy as f64 + 0.5) * s,
                        (iz as f64 + 0.5) * s,
                    );
                if (lo.x..=hi.x).contains(&c.x)
                    && (lo.y..=hi.y).contains(&c.y)
                    && (lo.z..=hi.z).contains(&c.z)
                {
                    points.push(c);
                }
            }
        }
    }
    TargetSet {
        points,
        tolerance: 1.0,
        required_fraction: 0.95,
        grid: Some(GridInfo {
            origin,
            voxel_size: s,
        }),
    }
}

fn designs() -> Vec<(String, RobotDesign)> {
    let template = arm();
    let mut out = Vec::new();
    for (name, x) in [
        ("L=77", vec![4.0, 12.0, 4.0, 9.0, 4.0, 8.0, 36.0]),
        ("L=85", vec![4.0, 15.0, 4.0, 12.0, 4.0, 10.0, 36.0]),
        ("L=95", vec![4.0, 20.0, 4.0, 15.0, 4.0, 12.0, 36.0]),
        ("L=103", vec![4.0, 25.0, 4.0, 18.0, 4.0, 12.0, 36.0]),
        ("L=120", vec![8.0, 25.0, 8.0, 20.0, 8.0, 15.0, 36.0]),
        (
            "L=132-maxspine",
            vec![4.0, 32.1, 4.0, 26.076, 4.0, 26.076, 36.0],
        ),
        ("L=145-mid", vec![17.0, 17.39, 17.0, 14.12, 17.0, 14.12, 48.0]),
        (
            "L=163-baseheavy",
            vec![25.0, 20.0, 25.0, 16.0, 25.0, 16.0, 36.0],
        ),
        (
            "L=157-bigtip",
            vec![17.0, 17.39, 17.0, 14.12, 17.0, 14.12, 60.0],
        ),
        ("L=197-long", vec![25.0, 28.0, 25.0, 22.0, 25.0, 22.0, 50.0]),
    ] {
        out.push((name.to_string(), template.instantiate(&x).unwrap()));
    }
    out
}

#[test]
#[ignore]
fn scan_box_offsets() {
    for y0 in [8.0, 16.0, 24.0, 32.0, 40.0, 55.0] {
        let targets = box_targets(y0);
        println!("--- box y0={y0} ({} targets)", targets.points.len());
        for (name, design) in designs() {
            let budget = SamplingBudget {
                fk_samples: 100_000,
                refine_window: (0.9, 0.95),
                seed: 42,
            };
            let mask = estimate_reachability_fk(&design, &targets, &budget).unwrap();
            let frac = mask.iter().filter(|&&r| r).count() as f64 / mask.len() as f64;
            println!("  {name}: fk_theta={frac:.4}");
        }
    }
}

#[test]
#[ignore]
fn hybrid_on_candidate_offset() {
    // Full evaluation (with IK refinement) for the shortlisted offset, on
    // mid-length designs near the expected feasibility boundary.
    let y0: f64 = std::env::var("PROBE_Y0")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(24.0);
    let targets = box_targets(y0);
    println!("--- hybrid truth, box y0={y0}");
    for (name, design) in designs() {
        let budget = SamplingBudget {
            fk_samples: 100_000,
            refine_window: (0.0, 1.0),
            seed: 42,
        };
        let restarts = std::env::var("PROBE_RESTARTS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(10);
        let opts = arcopt::ik::IkOptions {
            tolerance: 1.0,
            restarts,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let report = hybrid_reachability(&design, &targets, &budget, &opts).unwrap();
        if std::env::var("PROBE_DUMP").is_ok() {
            let missed: Vec<&Vec3> = targets
                .points
                .iter()
                .zip(&report.reached)
                .filter(|(_, &r)| !r)
                .map(|(p, _)| p)
                .collect();
            if !missed.is_empty() {
                let base = Vec3::ZERO;
                let mut rmin = f64::INFINITY;
                let mut rmax: f64 = 0.0;
                let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut zlo, mut zhi) = (f64::INFINITY, f64::NEG_INFINITY);
                for p in &missed {
                    let r = (**p - base).norm();
                    rmin = rmin.min(r);
                    rmax = rmax.max(r);
                    xlo = xlo.min(p.x);
                    xhi = xhi.max(p.x);
                    ylo = ylo.min(p.y);
                    yhi = yhi.max(p.y);
                    zlo = zlo.min(p.z);
                    zhi = zhi.max(p.z);
                }
                println!(
                    "    missed {}: r=[{rmin:.1},{rmax:.1}] x=[{xlo:.1},{xhi:.1}] y=[{ylo:.1},{yhi:.1}] z=[{zlo:.1},{zhi:.1}]",
                    missed.len()
                );
            }
        }
        println!(
            "  {name}: fk_theta={:.4} theta={:.4} ik_checked={} ({:.2}s)",
            report.fk_theta,
            report.theta,
            report.ik_checked,
            t0.elapsed().as_secs_f64()
        );
    }
}
