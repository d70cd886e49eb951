//! Wavefront OBJ export of a sampled surface patch in R^3.

use std::fmt::Write as _;

use ruled_core::multilinear::AmbientVector;
use ruled_core::ruledgeom::{eval_sigma, RuledPatch};
use ruled_core::Result;

fn vertex(out: &mut String, p: &AmbientVector) {
    let c = p.coords();
    let _ = writeln!(out, "v {} {} {}", c[0], c[1], c[2]);
}

/// Grid vertices with quad faces, plus the striction curve as one polyline.
/// Only meaningful for surfaces in R^3; callers check the dimensions.
pub fn mesh_obj(p: &RuledPatch, striction: Option<&[AmbientVector]>) -> Result<String> {
    let ts = p.grid().t_samples();
    let us = p.grid().u_values();
    let nu = us.len();
    let mut out = String::from("# ruled patch sampled on its (t, u) grid\no patch\n");
    for &t in ts {
        for &u in &us {
            vertex(&mut out, &eval_sigma(p, t, &[u])?);
        }
    }
    let idx = |i: usize, k: usize| i * nu + k + 1;
    for i in 0..ts.len() - 1 {
        for k in 0..nu.saturating_sub(1) {
            let _ = writeln!(out, "f {} {} {} {}", idx(i, k), idx(i + 1, k), idx(i + 1, k + 1), idx(i, k + 1));
        }
    }
    if let Some(curve) = striction.filter(|c| !c.is_empty()) {
        out.push_str("o striction\n");
        let base = ts.len() * nu;
        for q in curve {
            vertex(&mut out, q);
        }
        let ids: Vec<String> = (1..=curve.len()).map(|i| (base + i).to_string()).collect();
        let _ = writeln!(out, "l {}", ids.join(" "));
    }
    Ok(out)
}
