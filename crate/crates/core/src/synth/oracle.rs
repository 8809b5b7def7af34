//! Exhaustive reference implementations for cross-checking the optimised
//! linking and evaluation code. Only small instances are accepted.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::evaluation::VideoTube;
use crate::geometry::{Box2D, Tube};
use crate::linking::{BoxPath, LinkingProblem};

/// Largest number of paths [`brute_force_link`] will enumerate.
pub const MAX_PATHS: f64 = 1e6;
/// Largest number of predictions or ground-truth tubes per class.
pub const MAX_TUBES_PER_CLASS: usize = 10;

fn iou(a: &Box2D, b: &Box2D) -> f64 {
    let w = a.x2.min(b.x2) - a.x1.max(b.x1);
    let h = a.y2.min(b.y2) - a.y1.max(b.y1);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    let union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
    if inter >= union {
        1.0
    } else {
        inter / union
    }
}

/// Is `a` smaller than `b` when compared from the last frame backwards?
fn reverse_lex_less(a: &[usize], b: &[usize]) -> bool {
    a.iter().rev().lt(b.iter().rev())
}

/// Enumerates every box sequence and keeps the best one, with the same tie
/// rule as the dynamic program.
pub fn brute_force_link(problem: &LinkingProblem) -> Result<BoxPath> {
    if problem.path_count() > MAX_PATHS {
        return Err(Error::TooLarge(format!(
            "{} paths exceed the limit of {MAX_PATHS}",
            problem.path_count()
        )));
    }
    let frames = problem.candidates();
    let mut current = vec![0usize; frames.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let mut objective = 0.0;
        for t in 1..frames.len() {
            objective += iou(&frames[t - 1][current[t - 1]], &frames[t][current[t]]);
        }
        let better = match &best {
            None => true,
            Some((path, value)) => objective > *value || (objective == *value && reverse_lex_less(&current, path)),
        };
        if better {
            best = Some((current.clone(), objective));
        }
        // odometer increment, last frame fastest
        let mut t = frames.len();
        loop {
            if t == 0 {
                let (path, objective) = best.unwrap();
                return Ok(BoxPath::from_indices(problem, path, objective));
            }
            t -= 1;
            current[t] += 1;
            if current[t] < frames[t].len() {
                break;
            }
            current[t] = 0;
        }
    }
}

fn tube_overlap(p: &Tube, g: &Tube) -> f64 {
    let pf: BTreeMap<u32, &Box2D> = p.boxes().iter().map(|b| (b.frame, b)).collect();
    let gf: BTreeMap<u32, &Box2D> = g.boxes().iter().map(|b| (b.frame, b)).collect();
    let shared: Vec<u32> = pf.keys().filter(|t| gf.contains_key(t)).copied().collect();
    if shared.is_empty() {
        return 0.0;
    }
    let all: BTreeSet<u32> = pf.keys().chain(gf.keys()).copied().collect();
    let spatial = shared.iter().map(|t| iou(pf[t], gf[t])).sum::<f64>() / shared.len() as f64;
    (shared.len() as f64 / all.len() as f64) * spatial
}

/// Number of true positives among the first `k` ranked predictions, matched
/// from scratch.
fn true_positives(ranked: &[&VideoTube], gts: &[&VideoTube], delta: f64) -> usize {
    let mut used = vec![false; gts.len()];
    let mut tp = 0;
    for p in ranked {
        let mut pick: Option<usize> = None;
        let mut pick_iou = f64::NEG_INFINITY;
        for (j, g) in gts.iter().enumerate() {
            if used[j] || g.video_id != p.video_id {
                continue;
            }
            let v = tube_overlap(&p.tube, &g.tube);
            if v > pick_iou {
                pick = Some(j);
                pick_iou = v;
            }
        }
        if let Some(j) = pick.filter(|_| pick_iou >= delta) {
            used[j] = true;
            tp += 1;
        }
    }
    tp
}

/// Per-class AP computed by re-matching every score-ordered prefix.
pub fn brute_force_eval(preds: &[VideoTube], gts: &[VideoTube], delta: f64) -> Result<BTreeMap<u32, f64>> {
    let label = |t: &VideoTube| {
        t.tube
            .label
            .ok_or_else(|| Error::InvalidInput("unlabelled tube".into()))
    };
    let mut classes = BTreeSet::new();
    for t in preds.iter().chain(gts) {
        classes.insert(label(t)?);
    }
    let mut out = BTreeMap::new();
    for class in classes {
        let class_gts: Vec<&VideoTube> = gts.iter().filter(|g| g.tube.label == Some(class)).collect();
        let mut pool: Vec<(usize, &VideoTube)> = preds
            .iter()
            .enumerate()
            .filter(|(_, p)| p.tube.label == Some(class))
            .collect();
        if class_gts.len() > MAX_TUBES_PER_CLASS || pool.len() > MAX_TUBES_PER_CLASS {
            return Err(Error::TooLarge(format!("class {class} has too many tubes")));
        }
        // selection by highest score, earliest index on ties
        let mut ranked: Vec<&VideoTube> = Vec::with_capacity(pool.len());
        while !pool.is_empty() {
            let mut best = 0;
            for i in 1..pool.len() {
                let (si, sb) = (pool[i].1.tube.score.unwrap(), pool[best].1.tube.score.unwrap());
                if si > sb || (si == sb && pool[i].0 < pool[best].0) {
                    best = i;
                }
            }
            ranked.push(pool.remove(best).1);
        }
        if class_gts.is_empty() {
            out.insert(class, 0.0);
            continue;
        }
        let n = class_gts.len() as f64;
        let points: Vec<(f64, f64)> = (1..=ranked.len())
            .map(|k| {
                let tp = true_positives(&ranked[..k], &class_gts, delta) as f64;
                (tp / n, tp / k as f64)
            })
            .collect();
        let mut ap = 0.0;
        let mut prev = 0.0;
        for k in 0..points.len() {
            let envelope = points[k..].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            ap += (points[k].0 - prev) * envelope;
            prev = points[k].0;
        }
        out.insert(class, ap);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::viterbi_link;

    fn bx(x: f64, y: f64) -> Box2D {
        Box2D::new(0, x, y, x + 10.0, y + 10.0).unwrap()
    }

    #[test]
    fn single_frame() {
        let p = LinkingProblem::new(0, vec![vec![bx(0., 0.), bx(5., 5.)]]).unwrap();
        let path = brute_force_link(&p).unwrap();
        assert_eq!(path.indices, vec![0]);
        assert_eq!(path.objective, 0.0);
    }

    #[test]
    fn agrees_with_viterbi_on_two_frames() {
        let p = LinkingProblem::new(0, vec![vec![bx(0., 0.)], vec![bx(50., 50.), bx(0., 0.)]]).unwrap();
        assert_eq!(brute_force_link(&p).unwrap(), viterbi_link(&p));
    }

    #[test]
    fn oversized_problem_rejected() {
        let frame: Vec<Box2D> = (0..10).map(|i| bx(i as f64, 0.)).collect();
        let p = LinkingProblem::new(0, vec![frame; 7]).unwrap();
        assert!(matches!(brute_force_link(&p), Err(Error::TooLarge(_))));
    }

    fn tube(x: f64, label: u32, score: Option<f64>) -> VideoTube {
        let boxes = (0..6).map(|t| bx(x, 0.).on_frame(t)).collect();
        VideoTube::new("v", Tube::new(boxes, Some(label), score).unwrap())
    }

    #[test]
    fn eval_trivial_cases() {
        let gts = vec![tube(0., 0, None), tube(40., 1, None)];
        let perfect = vec![tube(0., 0, Some(1.0)), tube(40., 1, Some(0.5))];
        let ap = brute_force_eval(&perfect, &gts, 0.5).unwrap();
        assert!(ap.values().all(|&v| v == 1.0));
        let none = brute_force_eval(&[], &gts, 0.5).unwrap();
        assert!(none.values().all(|&v| v == 0.0));
    }
}
