use log::warn;
use rayon::prelude::*;

use super::correct::corrected_dvc;
use super::decode::decode_subset;
use super::split::split_indices;
use super::{Diagnostics, DvcComponents, DvcConfig, DvcEntry, DvcResult, SplitDvSet};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

/// Feature-split seeds for the two observers at one repeat. The first seed
/// belongs to the observer whose id sorts first; equal ids still get
/// distinct seeds.
pub fn split_seeds(root: u64, id_a: &str, id_b: &str, repeat: usize) -> (u64, u64) {
    let (lo, hi) = if id_a <= id_b { (id_a, id_b) } else { (id_b, id_a) };
    let pair = seed::derive(root, &[seed::hash_str(lo), seed::hash_str(hi), repeat as u64]);
    (seed::derive(pair, &[0]), seed::derive(pair, &[1]))
}

struct UnitOutcome {
    per_class: [std::result::Result<DvcComponents, String>; 2],
    clamped: usize,
}

fn run_unit(
    a: &RepresentationSet,
    b: &RepresentationSet,
    halves: &[[Vec<usize>; 2]; 2],
    pair: (usize, usize),
    config: &DvcConfig,
) -> UnitOutcome {
    let decode = |set: &RepresentationSet, cols: &[usize]| decode_subset(set, Some(cols), pair, config);
    let decoded = (|| -> Result<_> {
        Ok([
            decode(a, &halves[0][0])?,
            decode(a, &halves[0][1])?,
            decode(b, &halves[1][0])?,
            decode(b, &halves[1][1])?,
        ])
    })();
    let dvs = match decoded {
        Ok(d) => d,
        Err(e) => {
            let msg = format!("decoding failed: {e}");
            return UnitOutcome {
                per_class: [Err(msg.clone()), Err(msg)],
                clamped: 0,
            };
        }
    };
    let clamped = dvs.iter().filter(|d| d.clamped).count();
    let labels = &a.labels;
    let per_class = [pair.0, pair.1].map(|c| {
        let s = SplitDvSet {
            dv_a1: dvs[0].restrict(labels, c),
            dv_a2: dvs[1].restrict(labels, c),
            dv_b1: dvs[2].restrict(labels, c),
            dv_b2: dvs[3].restrict(labels, c),
        };
        corrected_dvc(&s, config).map_err(|e| e.to_string())
    });
    UnitOutcome { per_class, clamped }
}

fn mean_components(runs: &[DvcComponents]) -> DvcComponents {
    let n = runs.len() as f64;
    let avg = |f: &dyn Fn(&DvcComponents) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let corrected = avg(&|c| c.corrected);
    DvcComponents {
        cross: [0, 1, 2, 3].map(|i| avg(&|c| c.cross[i])),
        self_a: avg(&|c| c.self_a),
        self_b: avg(&|c| c.self_b),
        r_cross: avg(&|c| c.r_cross),
        r_self: avg(&|c| c.r_self),
        corrected,
        capped_flag: corrected > 1.0,
    }
}

/// DVC between two observers of the same stimuli.
///
/// Observers are put in id order first, so `dvc_pair(a, b)` and
/// `dvc_pair(b, a)` run the identical computation. Work units (class pair
/// by split repeat) run in parallel and are reduced in a fixed order.
pub fn dvc_pair(a: &RepresentationSet, b: &RepresentationSet, config: &DvcConfig) -> Result<DvcResult> {
    config.validate()?;
    if a.n_samples() != b.n_samples() || !a.same_stimuli(b) {
        return Err(Error::LabelMismatch(format!(
            "observers {:?} and {:?} do not share stimuli and labels",
            a.observer_id, b.observer_id
        )));
    }
    a.validate()?;
    b.validate()?;
    let (first, second) = if a.observer_id <= b.observer_id { (a, b) } else { (b, a) };

    let repeats = config.split_repeats;
    let halves: Vec<[[Vec<usize>; 2]; 2]> = (0..repeats)
        .map(|r| {
            let (s0, s1) = split_seeds(config.seed, &first.observer_id, &second.observer_id, r);
            let (a1, a2) = split_indices(first.n_features(), s0)?;
            let (b1, b2) = split_indices(second.n_features(), s1)?;
            Ok([[a1, a2], [b1, b2]])
        })
        .collect::<Result<_>>()?;

    let c = first.n_classes();
    let pairs: Vec<(usize, usize)> = (0..c)
        .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
        .collect();
    let units: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..repeats).map(move |r| (p, r)))
        .collect();
    let outcomes: Vec<UnitOutcome> = units
        .par_iter()
        .map(|&(p, r)| run_unit(first, second, &halves[r], pairs[p], config))
        .collect();

    let mut diagnostics = Diagnostics::default();
    let mut entries = Vec::with_capacity(2 * pairs.len());
    for (p, &(c0, c1)) in pairs.iter().enumerate() {
        let block = &outcomes[p * repeats..(p + 1) * repeats];
        diagnostics.pcs_clamped += block.iter().map(|u| u.clamped).sum::<usize>();
        for (slot, cond) in [c0, c1].into_iter().enumerate() {
            let mut valid = Vec::new();
            let mut reason = None;
            for unit in block {
                match &unit.per_class[slot] {
                    Ok(comp) => valid.push(*comp),
                    Err(msg) => {
                        diagnostics.degenerate_repeats += 1;
                        reason.get_or_insert_with(|| msg.clone());
                    }
                }
            }
            let components = (!valid.is_empty()).then(|| mean_components(&valid));
            entries.push(DvcEntry {
                class_pair: (first.class_names[c0].clone(), first.class_names[c1].clone()),
                conditioning_class: first.class_names[cond].clone(),
                components,
                valid_repeats: valid.len(),
                capped_repeats: valid.iter().filter(|v| v.capped_flag).count(),
                degenerate_reason: reason,
            });
        }
    }

    let corrected: Vec<f64> = entries
        .iter()
        .filter_map(|e| e.components.map(|c| c.corrected))
        .collect();
    diagnostics.n_entries = entries.len();
    diagnostics.n_valid = corrected.len();
    diagnostics.n_degenerate = entries.len() - corrected.len();
    diagnostics.n_capped = entries
        .iter()
        .filter(|e| e.components.is_some_and(|c| c.capped_flag))
        .count();
    if diagnostics.pcs_clamped > 0 {
        warn!(
            "{} vs {}: n_pcs = {} exceeded the data rank in {} decodes; clamped",
            first.observer_id, second.observer_id, config.n_pcs, diagnostics.pcs_clamped
        );
    }
    let aggregate = (!corrected.is_empty()).then(|| corrected.iter().sum::<f64>() / corrected.len() as f64);

    Ok(DvcResult {
        observer_a: first.observer_id.clone(),
        observer_b: second.observer_id.clone(),
        entries,
        aggregate,
        diagnostics,
        config_echo: config.clone(),
    })
}
