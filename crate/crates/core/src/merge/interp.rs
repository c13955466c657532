use std::collections::{BTreeMap, BTreeSet};

use half::{bf16, f16};
use rayon::prelude::*;
use serde::Serialize;

use super::{Checkpoint, Dtype, MergeError, TensorRecord};

pub const META_BETA: &str = "ggez.merge.beta";
pub const META_GLOBAL: &str = "ggez.merge.global";
pub const META_REGIONAL: &str = "ggez.merge.regional";

/// Summary of one linear merge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeReport {
    pub beta: f64,
    pub tensor_count: usize,
    pub dtype_counts: BTreeMap<String, usize>,
    /// Largest elementwise |merged - global| over floating tensors.
    pub max_abs_delta: f64,
    /// Tensors identical in both inputs, copied unchanged.
    pub frozen_tensors: usize,
    /// Non-floating tensors copied verbatim from the global checkpoint.
    pub passthrough_tensors: Vec<String>,
}

/// `beta * regional + (1 - beta) * global`, tensor by tensor.
///
/// Both checkpoints must have the same tensor names, shapes and dtypes.
/// Half-precision tensors are interpolated in f32 and rounded back; f32
/// tensors in f32; f64 tensors in f64. Output order follows `global`.
pub fn merge_linear(
    global: &Checkpoint,
    regional: &Checkpoint,
    beta: f64,
) -> Result<(Checkpoint, MergeReport), MergeError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(MergeError::InvalidBeta(beta));
    }
    check_compatible(global, regional)?;

    let pairs: Vec<(&TensorRecord, &TensorRecord)> =
        global.tensors().map(|g| (g, regional.get(g.name()).expect("checked"))).collect();
    let merged: Vec<(TensorRecord, TensorOutcome)> =
        pairs.par_iter().map(|(g, r)| merge_tensor(g, r, beta)).collect();

    let mut out = Checkpoint::default();
    out.metadata = global.metadata.clone();
    out.metadata.insert(META_BETA.into(), beta.to_string());
    out.metadata.insert(META_GLOBAL.into(), origin_label(global));
    out.metadata.insert(META_REGIONAL.into(), origin_label(regional));

    let mut report = MergeReport {
        beta,
        tensor_count: merged.len(),
        dtype_counts: BTreeMap::new(),
        max_abs_delta: 0.0,
        frozen_tensors: 0,
        passthrough_tensors: Vec::new(),
    };
    for ((tensor, outcome), (g, _)) in merged.into_iter().zip(&pairs) {
        *report.dtype_counts.entry(tensor.dtype().to_string()).or_default() += 1;
        match outcome {
            TensorOutcome::Passthrough => report.passthrough_tensors.push(tensor.name().to_string()),
            TensorOutcome::Frozen => report.frozen_tensors += 1,
            TensorOutcome::Interpolated => {
                let delta = max_abs_delta(g, &tensor);
                if delta > report.max_abs_delta || delta.is_nan() {
                    report.max_abs_delta = delta;
                }
            }
        }
        out.insert(tensor)?;
    }
    Ok((out, report))
}

fn origin_label(ckpt: &Checkpoint) -> String {
    ckpt.origin.clone().unwrap_or_else(|| "<memory>".to_string())
}

fn check_compatible(global: &Checkpoint, regional: &Checkpoint) -> Result<(), MergeError> {
    let g: BTreeSet<&str> = global.names().collect();
    let r: BTreeSet<&str> = regional.names().collect();
    let only_global: Vec<String> = g.difference(&r).map(|s| s.to_string()).collect();
    let only_regional: Vec<String> = r.difference(&g).map(|s| s.to_string()).collect();
    let mut mismatched = Vec::new();
    for name in g.intersection(&r) {
        let (a, b) = (global.get(name).unwrap(), regional.get(name).unwrap());
        if a.dtype() != b.dtype() {
            mismatched.push(format!("{name}: dtype {} vs {}", a.dtype(), b.dtype()));
        }
        if a.shape() != b.shape() {
            mismatched.push(format!("{name}: shape {:?} vs {:?}", a.shape(), b.shape()));
        }
    }
    if only_global.is_empty() && only_regional.is_empty() && mismatched.is_empty() {
        Ok(())
    } else {
        Err(MergeError::IncompatibleCheckpoints { only_global, only_regional, mismatched })
    }
}

enum TensorOutcome {
    Interpolated,
    Frozen,
    Passthrough,
}

fn merge_tensor(g: &TensorRecord, r: &TensorRecord, beta: f64) -> (TensorRecord, TensorOutcome) {
    if !g.dtype().is_float() {
        return (g.clone(), TensorOutcome::Passthrough);
    }
    if g.data() == r.data() {
        return (g.clone(), TensorOutcome::Frozen);
    }
    if beta == 0.0 {
        return (g.clone(), TensorOutcome::Interpolated);
    }
    if beta == 1.0 {
        return (g.with_data(r.data().to_vec()), TensorOutcome::Interpolated);
    }
    let data = match g.dtype() {
        Dtype::F64 => lerp_bytes::<8>(g.data(), r.data(), |a, b| {
            let (wr, wg) = (beta, 1.0 - beta);
            (wr * f64::from_le_bytes(b) + wg * f64::from_le_bytes(a)).to_le_bytes()
        }),
        Dtype::F32 => {
            let (wr, wg) = f32_weights(beta);
            lerp_bytes::<4>(g.data(), r.data(), |a, b| {
                (wr * f32::from_le_bytes(b) + wg * f32::from_le_bytes(a)).to_le_bytes()
            })
        }
        Dtype::F16 => {
            let (wr, wg) = f32_weights(beta);
            lerp_bytes::<2>(g.data(), r.data(), |a, b| {
                let v = wr * f16::from_le_bytes(b).to_f32() + wg * f16::from_le_bytes(a).to_f32();
                f16::from_f32(v).to_le_bytes()
            })
        }
        Dtype::BF16 => {
            let (wr, wg) = f32_weights(beta);
            lerp_bytes::<2>(g.data(), r.data(), |a, b| {
                let v = wr * bf16::from_le_bytes(b).to_f32() + wg * bf16::from_le_bytes(a).to_f32();
                bf16::from_f32(v).to_le_bytes()
            })
        }
        _ => unreachable!("non-float dtypes handled above"),
    };
    (g.with_data(data), TensorOutcome::Interpolated)
}

/// Interpolation weights (regional, global) as used for f32 accumulation.
pub fn f32_weights(beta: f64) -> (f32, f32) {
    (beta as f32, (1.0 - beta) as f32)
}

fn lerp_bytes<const N: usize>(
    global: &[u8],
    regional: &[u8],
    f: impl Fn([u8; N], [u8; N]) -> [u8; N],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(global.len());
    for (a, b) in global.chunks_exact(N).zip(regional.chunks_exact(N)) {
        out.extend_from_slice(&f(a.try_into().unwrap(), b.try_into().unwrap()));
    }
    out
}

fn max_abs_delta(global: &TensorRecord, merged: &TensorRecord) -> f64 {
    let (Some(a), Some(b)) = (global.to_f64_vec(), merged.to_f64_vec()) else {
        return 0.0;
    };
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
