//! Queue-based vision tracker.
//!
//! One-stage detectors flicker, and a vanishing box reads as an obstacle
//! popping in and out of existence, which whipsaws any controller consuming
//! the output. The tracker keeps the last ten frames of output. Candidates
//! are the most recent entry per live identity; detections claim the first
//! candidate whose box center lies within a pixel gate, and candidates that
//! got no detection this frame are carried through to the output unchanged.
//! An identity therefore survives any detection gap shorter than the queue
//! depth, and no longer.

use super::{Detection, ObjectClass, RegressionModel, VisionTrack};
use std::collections::VecDeque;

const QUEUE_DEPTH: usize = 10;

#[derive(Debug, Clone)]
pub struct VisionTracker {
    queue: VecDeque<Vec<VisionTrack>>,
    /// Center-distance gate in pixels.
    pub dist_th: f64,
    pub model: RegressionModel,
    /// Snap distances to bin centers instead of using the raw estimate.
    pub bin_distances: bool,
    next_id: u64,
    frame: u64,
}

impl VisionTracker {
    pub fn new(dist_th: f64, model: RegressionModel) -> Self {
        Self {
            queue: VecDeque::with_capacity(QUEUE_DEPTH),
            dist_th,
            model,
            bin_distances: false,
            next_id: 1,
            frame: 0,
        }
    }

    fn distance_for(&self, det: &Detection) -> Option<f64> {
        if det.class != ObjectClass::Car {
            return None;
        }
        let est = self.model.estimate_distance(det.bbox.height()).ok()?;
        if self.bin_distances {
            self.model.bin_distance(est)
        } else {
            // The far-range cutoff still applies: estimates beyond it are
            // too noisy to act on.
            (est <= self.model.max_distance).then_some(est)
        }
    }

    /// Processes one frame of detections and returns the tracked output.
    pub fn step(&mut self, detections: &[Detection]) -> Vec<VisionTrack> {
        self.frame += 1;
        let frame = self.frame;

        let mut output: Vec<VisionTrack> = Vec::with_capacity(detections.len());

        if self.queue.is_empty() {
            for det in detections {
                output.push(VisionTrack {
                    id: self.next_id,
                    detection: *det,
                    distance: self.distance_for(det),
                    last_seen: frame,
                });
                self.next_id += 1;
            }
        } else {
            // Most recent entry per identity still inside the lookback
            // window, newest first.
            let mut candidates: Vec<VisionTrack> = Vec::new();
            for past in self.queue.iter().rev() {
                for t in past {
                    if frame - t.last_seen > QUEUE_DEPTH as u64 {
                        continue;
                    }
                    if candidates.iter().all(|c| c.id != t.id) {
                        candidates.push(*t);
                    }
                }
            }

            let mut claimed = vec![false; candidates.len()];
            for det in detections {
                let (cx, cy) = det.bbox.center();
                let mut matched = None;
                for (k, cand) in candidates.iter().enumerate() {
                    if claimed[k] {
                        continue;
                    }
                    let (tx, ty) = cand.detection.bbox.center();
                    let l2 = ((cx - tx).powi(2) + (cy - ty).powi(2)).sqrt();
                    if l2 < self.dist_th {
                        matched = Some(k);
                        break;
                    }
                }
                let (id, prev_distance) = match matched {
                    Some(k) => {
                        claimed[k] = true;
                        (candidates[k].id, candidates[k].distance)
                    }
                    None => {
                        let id = self.next_id;
                        self.next_id += 1;
                        (id, None)
                    }
                };
                // A discarded far-range estimate leaves the previous value
                // in place rather than erasing it.
                output.push(VisionTrack {
                    id,
                    detection: *det,
                    distance: self.distance_for(det).or(prev_distance),
                    last_seen: frame,
                });
            }

            // Persistence: unmatched candidates ride along unchanged.
            for (k, cand) in candidates.iter().enumerate() {
                if !claimed[k] {
                    output.push(*cand);
                }
            }
        }

        self.queue.push_back(output.clone());
        if self.queue.len() > QUEUE_DEPTH {
            self.queue.pop_front();
        }
        output
    }
}
