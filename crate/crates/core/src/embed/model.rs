use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::holo::{circular_convolution, circular_correlation};
use super::{ModelKind, Norm};
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill_uniform<R: Rng>(&mut self, bound: f64, rng: &mut R) {
        for x in &mut self.data {
            *x = rng.random_range(-bound..bound);
        }
    }

    /// Scales row `i` down to l2 norm `radius` if it is longer.
    pub fn clip_row(&mut self, i: usize, radius: f64) {
        let row = self.row_mut(i);
        let n = norm2(row);
        if n > radius {
            row.iter_mut().for_each(|x| *x *= radius / n);
        }
    }

    pub fn normalize_row(&mut self, i: usize) {
        let row = self.row_mut(i);
        let n = norm2(row);
        if n > 0.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Entity,
    Relation,
}

/// One parameter table of a model, indexed by entity or by relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub axis: Axis,
}

const fn spec(name: &'static str, axis: Axis) -> ParamSpec {
    ParamSpec { name, axis }
}

const BASIC: &[ParamSpec] = &[spec("entity", Axis::Entity), spec("relation", Axis::Relation)];
const TRANSD: &[ParamSpec] = &[
    spec("entity", Axis::Entity),
    spec("relation", Axis::Relation),
    spec("entity_projection", Axis::Entity),
    spec("relation_projection", Axis::Relation),
];
const TRANSH: &[ParamSpec] = &[
    spec("entity", Axis::Entity),
    spec("relation_translation", Axis::Relation),
    spec("relation_normal", Axis::Relation),
];
const COMPLEX: &[ParamSpec] = &[
    spec("entity_re", Axis::Entity),
    spec("relation_re", Axis::Relation),
    spec("entity_im", Axis::Entity),
    spec("relation_im", Axis::Relation),
];

// Slot indices. Slot 0 is always the (real) entity table, slot 1 the
// (real) relation table.
const ENT: usize = 0;
const REL: usize = 1;
const ENT_PROJ: usize = 2;
const REL_PROJ: usize = 3;
const NORMAL: usize = 2;
const ENT_IM: usize = 2;
const REL_IM: usize = 3;

impl ModelKind {
    pub fn layout(self) -> &'static [ParamSpec] {
        match self {
            ModelKind::TransE | ModelKind::DistMult | ModelKind::HolE => BASIC,
            ModelKind::TransD => TRANSD,
            ModelKind::TransH => TRANSH,
            ModelKind::ComplEx => COMPLEX,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Sparse gradient: one dense row per touched (table, row).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    rows: HashMap<(usize, u32), Vec<f64>>,
}

impl Gradient {
    pub fn row_mut(&mut self, slot: usize, row: u32, dim: usize) -> &mut [f64] {
        self.rows.entry((slot, row)).or_insert_with(|| vec![0.0; dim])
    }

    pub fn get(&self, slot: usize, row: u32) -> Option<&[f64]> {
        self.rows.get(&(slot, row)).map(Vec::as_slice)
    }

    pub fn merge(&mut self, other: Gradient) {
        for (k, v) in other.rows {
            match self.rows.get_mut(&k) {
                Some(acc) => axpy(1.0, &v, acc),
                None => {
                    self.rows.insert(k, v);
                }
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.rows.values_mut() {
            v.iter_mut().for_each(|x| *x *= c);
        }
    }

    /// Touched rows in (slot, row) order.
    pub fn entries(&self) -> Vec<(usize, u32, &[f64])> {
        let mut out: Vec<_> = self.rows.iter().map(|(&(s, r), v)| (s, r, v.as_slice())).collect();
        out.sort_by_key(|&(s, r, _)| (s, r));
        out
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    kind: ModelKind,
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    norm: Norm,
    params: Vec<Matrix>,
}

impl EmbeddingModel {
    pub fn zeros(kind: ModelKind, dim: usize, num_entities: usize, num_relations: usize) -> Self {
        let params = kind
            .layout()
            .iter()
            .map(|p| match p.axis {
                Axis::Entity => Matrix::zeros(num_entities, dim),
                Axis::Relation => Matrix::zeros(num_relations, dim),
            })
            .collect();
        EmbeddingModel {
            kind,
            dim,
            num_entities,
            num_relations,
            norm: Norm::L2,
            params,
        }
    }

    /// Uniform initialization in `[-6/sqrt(dim), 6/sqrt(dim)]`. Translational
    /// entity vectors and TransH normals start on the unit sphere.
    pub fn init<R: Rng>(kind: ModelKind, dim: usize, num_entities: usize, num_relations: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(kind, dim, num_entities, num_relations);
        let bound = 6.0 / (dim as f64).sqrt();
        for p in &mut m.params {
            p.fill_uniform(bound, rng);
        }
        if matches!(kind, ModelKind::TransE | ModelKind::TransH) {
            m.normalize_entities();
        }
        if kind == ModelKind::TransH {
            for r in 0..num_relations {
                m.params[NORMAL].normalize_row(r);
            }
        }
        m
    }

    pub(crate) fn from_params(kind: ModelKind, dim: usize, num_entities: usize, num_relations: usize, params: Vec<Matrix>) -> Result<Self> {
        let layout = kind.layout();
        if params.len() != layout.len() {
            return Err(Error::Format(format!("{kind} needs {} tables, got {}", layout.len(), params.len())));
        }
        for (p, s) in params.iter().zip(layout) {
            let rows = match s.axis {
                Axis::Entity => num_entities,
                Axis::Relation => num_relations,
            };
            if p.rows() != rows || p.cols() != dim {
                return Err(Error::Format(format!("table `{}` has the wrong shape", s.name)));
            }
        }
        Ok(EmbeddingModel {
            kind,
            dim,
            num_entities,
            num_relations,
            norm: Norm::L2,
            params,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn params(&self) -> &[Matrix] {
        &self.params
    }

    pub fn param(&self, slot: usize) -> &Matrix {
        &self.params[slot]
    }

    pub fn param_mut(&mut self, slot: usize) -> &mut Matrix {
        &mut self.params[slot]
    }

    /// Real entity vector (the real part for ComplEx).
    pub fn entity_vec(&self, e: EntityId) -> &[f64] {
        self.params[ENT].row(e.index())
    }

    pub fn relation_vec(&self, r: RelationId) -> &[f64] {
        self.params[REL].row(r.index())
    }

    pub fn normalize_entities(&mut self) {
        for e in 0..self.num_entities {
            self.params[ENT].normalize_row(e);
        }
    }

    /// Re-applies the model's hard constraints to the given rows after an
    /// update: unit TransH normals.
    pub(crate) fn project_rows(&mut self, slot: usize, row: usize) {
        if self.kind == ModelKind::TransH && slot == NORMAL {
            self.params[NORMAL].normalize_row(row);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.as_slice().iter().all(|x| x.is_finite()))
    }

    fn check(&self, h: EntityId, r: RelationId, t: EntityId) -> Result<()> {
        if h.index() >= self.num_entities || t.index() >= self.num_entities {
            let bad = if h.index() >= self.num_entities { h } else { t };
            return Err(Error::Unknown {
                what: "entity id",
                name: bad.to_string(),
            });
        }
        if r.index() >= self.num_relations {
            return Err(Error::Unknown {
                what: "relation id",
                name: r.to_string(),
            });
        }
        Ok(())
    }

    /// Plausibility of `(h, r, t)`; higher is more plausible for every kind.
    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> Result<f64> {
        self.check(h, r, t)?;
        Ok(self.score_unchecked(h, r, t))
    }

    pub(crate) fn score_unchecked(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        let (hi, ri, ti) = (h.index(), r.index(), t.index());
        let p = &self.params;
        match self.kind {
            ModelKind::TransE => {
                let (hv, rv, tv) = (p[ENT].row(hi), p[REL].row(ri), p[ENT].row(ti));
                let diff = hv.iter().zip(rv).zip(tv).map(|((a, b), c)| a + b - c);
                -match self.norm {
                    Norm::L1 => diff.map(f64::abs).sum(),
                    Norm::L2 => diff.map(|x| x * x).sum::<f64>().sqrt(),
                }
            }
            ModelKind::TransD => {
                let x = self.transd_residual(hi, ri, ti);
                -dot(&x, &x)
            }
            ModelKind::TransH => {
                let x = self.transh_residual(hi, ri, ti);
                -dot(&x, &x)
            }
            ModelKind::DistMult => {
                let (hv, rv, tv) = (p[ENT].row(hi), p[REL].row(ri), p[ENT].row(ti));
                hv.iter().zip(rv).zip(tv).map(|((a, b), c)| a * b * c).sum()
            }
            ModelKind::HolE => {
                let c = circular_correlation(p[ENT].row(hi), p[ENT].row(ti));
                dot(p[REL].row(ri), &c)
            }
            ModelKind::ComplEx => {
                let (hr, hm) = (p[ENT].row(hi), p[ENT_IM].row(hi));
                let (rr, rm) = (p[REL].row(ri), p[REL_IM].row(ri));
                let (tr, tm) = (p[ENT].row(ti), p[ENT_IM].row(ti));
                (0..self.dim)
                    .map(|k| hr[k] * rr[k] * tr[k] + hm[k] * rr[k] * tm[k] + hr[k] * rm[k] * tm[k] - hm[k] * rm[k] * tr[k])
                    .sum()
            }
        }
    }

    /// Distance norm used by TransE; other kinds ignore it.
    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    /// `h⊥ + r − t⊥` with `e⊥ = e + (e_p · e) r_p`.
    fn transd_residual(&self, hi: usize, ri: usize, ti: usize) -> Vec<f64> {
        let p = &self.params;
        let (h, hp) = (p[ENT].row(hi), p[ENT_PROJ].row(hi));
        let (t, tp) = (p[ENT].row(ti), p[ENT_PROJ].row(ti));
        let (r, rp) = (p[REL].row(ri), p[REL_PROJ].row(ri));
        let (a, b) = (dot(hp, h), dot(tp, t));
        (0..self.dim).map(|k| h[k] + a * rp[k] + r[k] - t[k] - b * rp[k]).collect()
    }

    /// `h⊥ + d_r − t⊥` with `e⊥ = e − (w_r · e) w_r`.
    fn transh_residual(&self, hi: usize, ri: usize, ti: usize) -> Vec<f64> {
        let p = &self.params;
        let (h, t) = (p[ENT].row(hi), p[ENT].row(ti));
        let (d, w) = (p[REL].row(ri), p[NORMAL].row(ri));
        let (a, b) = (dot(w, h), dot(w, t));
        (0..self.dim).map(|k| h[k] - a * w[k] + d[k] - t[k] + b * w[k]).collect()
    }

    /// Adds `coeff · ∂score(h,r,t)/∂θ` to `grad`.
    pub(crate) fn accumulate_score_grad(&self, h: EntityId, r: RelationId, t: EntityId, coeff: f64, grad: &mut Gradient) {
        let (hi, ri, ti) = (h.index(), r.index(), t.index());
        let (hu, ru, tu) = (h.0, r.0, t.0);
        let d = self.dim;
        let p = &self.params;
        match self.kind {
            ModelKind::TransE => {
                let (hv, rv, tv) = (p[ENT].row(hi), p[REL].row(ri), p[ENT].row(ti));
                let x: Vec<f64> = (0..d).map(|k| hv[k] + rv[k] - tv[k]).collect();
                // ∂D/∂x for the chosen norm
                let g: Vec<f64> = match self.norm {
                    Norm::L1 => x.iter().map(|v| v.signum() * (*v != 0.0) as u8 as f64).collect(),
                    Norm::L2 => {
                        let n = norm2(&x);
                        if n == 0.0 {
                            vec![0.0; d]
                        } else {
                            x.iter().map(|v| v / n).collect()
                        }
                    }
                };
                // score = −D
                axpy(-coeff, &g, grad.row_mut(ENT, hu, d));
                axpy(-coeff, &g, grad.row_mut(REL, ru, d));
                axpy(coeff, &g, grad.row_mut(ENT, tu, d));
            }
            ModelKind::TransD => {
                let x = self.transd_residual(hi, ri, ti);
                let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
                let (h, hp) = (p[ENT].row(hi), p[ENT_PROJ].row(hi));
                let (t, tp) = (p[ENT].row(ti), p[ENT_PROJ].row(ti));
                let rp = p[REL_PROJ].row(ri);
                let grp = dot(&g, rp);
                let (a, b) = (dot(hp, h), dot(tp, t));
                let c = -coeff;
                {
                    let gh = grad.row_mut(ENT, hu, d);
                    axpy(c, &g, gh);
                    axpy(c * grp, hp, gh);
                }
                axpy(c * grp, h, grad.row_mut(ENT_PROJ, hu, d));
                axpy(c, &g, grad.row_mut(REL, ru, d));
                {
                    let gt = grad.row_mut(ENT, tu, d);
                    axpy(-c, &g, gt);
                    axpy(-c * grp, tp, gt);
                }
                axpy(-c * grp, t, grad.row_mut(ENT_PROJ, tu, d));
                axpy(c * (a - b), &g, grad.row_mut(REL_PROJ, ru, d));
            }
            ModelKind::TransH => {
                let x = self.transh_residual(hi, ri, ti);
                let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
                let (h, t) = (p[ENT].row(hi), p[ENT].row(ti));
                let w = p[NORMAL].row(ri);
                let gw = dot(&g, w);
                let (a, b) = (dot(w, h), dot(w, t));
                let c = -coeff;
                {
                    let gh = grad.row_mut(ENT, hu, d);
                    axpy(c, &g, gh);
                    axpy(-c * gw, w, gh);
                }
                {
                    let gt = grad.row_mut(ENT, tu, d);
                    axpy(-c, &g, gt);
                    axpy(c * gw, w, gt);
                }
                axpy(c, &g, grad.row_mut(REL, ru, d));
                let gn = grad.row_mut(NORMAL, ru, d);
                axpy(-c * gw, h, gn);
                axpy(-c * a, &g, gn);
                axpy(c * gw, t, gn);
                axpy(c * b, &g, gn);
            }
            ModelKind::DistMult => {
                let (hv, rv, tv) = (p[ENT].row(hi), p[REL].row(ri), p[ENT].row(ti));
                let rt: Vec<f64> = (0..d).map(|k| rv[k] * tv[k]).collect();
                let ht: Vec<f64> = (0..d).map(|k| hv[k] * tv[k]).collect();
                let hr: Vec<f64> = (0..d).map(|k| hv[k] * rv[k]).collect();
                axpy(coeff, &rt, grad.row_mut(ENT, hu, d));
                axpy(coeff, &ht, grad.row_mut(REL, ru, d));
                axpy(coeff, &hr, grad.row_mut(ENT, tu, d));
            }
            ModelKind::HolE => {
                let (hv, rv, tv) = (p[ENT].row(hi), p[REL].row(ri), p[ENT].row(ti));
                let dr = circular_correlation(hv, tv);
                let dh = circular_correlation(rv, tv);
                let dt = circular_convolution(rv, hv);
                axpy(coeff, &dh, grad.row_mut(ENT, hu, d));
                axpy(coeff, &dr, grad.row_mut(REL, ru, d));
                axpy(coeff, &dt, grad.row_mut(ENT, tu, d));
            }
            ModelKind::ComplEx => {
                let (hr, hm) = (p[ENT].row(hi), p[ENT_IM].row(hi));
                let (rr, rm) = (p[REL].row(ri), p[REL_IM].row(ri));
                let (tr, tm) = (p[ENT].row(ti), p[ENT_IM].row(ti));
                let d_hr: Vec<f64> = (0..d).map(|k| rr[k] * tr[k] + rm[k] * tm[k]).collect();
                let d_hm: Vec<f64> = (0..d).map(|k| rr[k] * tm[k] - rm[k] * tr[k]).collect();
                let d_rr: Vec<f64> = (0..d).map(|k| hr[k] * tr[k] + hm[k] * tm[k]).collect();
                let d_rm: Vec<f64> = (0..d).map(|k| hr[k] * tm[k] - hm[k] * tr[k]).collect();
                let d_tr: Vec<f64> = (0..d).map(|k| hr[k] * rr[k] - hm[k] * rm[k]).collect();
                let d_tm: Vec<f64> = (0..d).map(|k| hm[k] * rr[k] + hr[k] * rm[k]).collect();
                axpy(coeff, &d_hr, grad.row_mut(ENT, hu, d));
                axpy(coeff, &d_hm, grad.row_mut(ENT_IM, hu, d));
                axpy(coeff, &d_rr, grad.row_mut(REL, ru, d));
                axpy(coeff, &d_rm, grad.row_mut(REL_IM, ru, d));
                axpy(coeff, &d_tr, grad.row_mut(ENT, tu, d));
                axpy(coeff, &d_tm, grad.row_mut(ENT_IM, tu, d));
            }
        }
    }

    /// Sum of squared parameters involved in scoring `(h, r, t)`.
    pub(crate) fn triple_sq_norm(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        self.kind
            .layout()
            .iter()
            .enumerate()
            .map(|(slot, s)| match s.axis {
                Axis::Entity => {
                    let m = &self.params[slot];
                    dot(m.row(h.index()), m.row(h.index())) + dot(m.row(t.index()), m.row(t.index()))
                }
                Axis::Relation => {
                    let m = &self.params[slot];
                    dot(m.row(r.index()), m.row(r.index()))
                }
            })
            .sum()
    }

    /// Adds `coeff · ∂ triple_sq_norm / ∂θ` to `grad`.
    pub(crate) fn accumulate_sq_norm_grad(&self, h: EntityId, r: RelationId, t: EntityId, coeff: f64, grad: &mut Gradient) {
        let d = self.dim;
        for (slot, s) in self.kind.layout().iter().enumerate() {
            let m = &self.params[slot];
            let rows: &[u32] = match s.axis {
                Axis::Entity => &[h.0, t.0],
                Axis::Relation => &[r.0],
            };
            for &row in rows {
                axpy(2.0 * coeff, m.row(row as usize), grad.row_mut(slot, row, d));
            }
        }
    }
}

