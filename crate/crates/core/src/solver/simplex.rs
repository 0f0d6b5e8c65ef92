//! Bounded-variable revised simplex.
//!
//! Every row gets a logical variable (`a'x + s = b`), so the slack basis is
//! always available. The basis is factored by splitting it into basic
//! logicals (identity columns) and basic structurals: only the square block
//! `A[T, C]` (rows whose logical is nonbasic, by basic structural columns) is
//! LU-factored, and basis changes are applied as product-form etas until the
//! next refactorization.

use super::lu::DenseLu;
use super::{Basis, BasisStatus, LinearProgram, LpSolution, LpStatus, ReferenceSolver, RowSense};

const INF: f64 = f64::INFINITY;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Nb {
    Lower,
    Upper,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic(usize),
    Non(Nb),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Failed,
}

/// Which original row supplies a folded bound, with the row coefficient.
type BoundSource = Option<(usize, f64)>;

/// Presolved, scaled problem seen by the simplex engine.
struct Reduced {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    row_map: Vec<usize>,
    row_scale: Vec<f64>,
    /// Structural `j` is solved as `x_j / col_scale[j]`.
    col_scale: Vec<f64>,
    cost_scale: f64,
    lower_src: Vec<BoundSource>,
    upper_src: Vec<BoundSource>,
    // original row -> reduced row
    orig_to_red: Vec<Option<usize>>,
}

fn presolve(lp: &LinearProgram, tol: f64) -> Result<Reduced, LpStatus> {
    let n = lp.vars.len();
    let mut lower: Vec<f64> = lp.vars.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = lp.vars.iter().map(|v| v.upper).collect();
    let mut lower_src: Vec<BoundSource> = vec![None; n];
    let mut upper_src: Vec<BoundSource> = vec![None; n];
    let mut kept: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut orig_to_red = vec![None; lp.rows.len()];

    for (i, row) in lp.rows.iter().enumerate() {
        let mut coefs = row.coefs.clone();
        coefs.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coefs.len());
        for (j, a) in coefs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        match merged.len() {
            0 => {
                let ok = match row.sense {
                    RowSense::Le => 0.0 <= row.rhs + tol,
                    RowSense::Ge => 0.0 >= row.rhs - tol,
                    RowSense::Eq => row.rhs.abs() <= tol,
                };
                if !ok {
                    return Err(LpStatus::Infeasible);
                }
            }
            1 => {
                let (j, a) = merged[0];
                let b = row.rhs / a;
                let (sets_lower, sets_upper) = match (row.sense, a > 0.0) {
                    (RowSense::Eq, _) => (true, true),
                    (RowSense::Le, true) | (RowSense::Ge, false) => (false, true),
                    (RowSense::Le, false) | (RowSense::Ge, true) => (true, false),
                };
                if sets_upper && b < upper[j] {
                    upper[j] = b;
                    upper_src[j] = Some((i, a));
                }
                if sets_lower && b > lower[j] {
                    lower[j] = b;
                    lower_src[j] = Some((i, a));
                }
            }
            _ => {
                orig_to_red[i] = Some(kept.len());
                kept.push((i, merged));
            }
        }
    }
    for j in 0..n {
        if lower[j] > upper[j] {
            if lower[j] - upper[j] > tol * (1.0 + lower[j].abs()) {
                return Err(LpStatus::Infeasible);
            }
            upper[j] = lower[j];
        }
    }

    let m = kept.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rhs = Vec::with_capacity(m);
    let mut row_map = Vec::with_capacity(m);
    let mut row_scale = Vec::with_capacity(m);
    let mut log_lower = Vec::with_capacity(m);
    let mut log_upper = Vec::with_capacity(m);
    for (r, (i, coefs)) in kept.iter().enumerate() {
        let big = coefs.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
        let s = 1.0 / big;
        for &(j, a) in coefs {
            cols[j].push((r, a * s));
        }
        let row = &lp.rows[*i];
        rhs.push(row.rhs * s);
        row_map.push(*i);
        row_scale.push(s);
        let (lo, hi) = match row.sense {
            RowSense::Le => (0.0, INF),
            RowSense::Ge => (-INF, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        log_lower.push(lo);
        log_upper.push(hi);
    }
    let mut col_scale = vec![1.0; n];
    for j in 0..n {
        let big = cols[j].iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
        if big > 0.0 {
            let s = 2f64.powi(-(big.log2().round() as i32));
            for e in cols[j].iter_mut() {
                e.1 *= s;
            }
            lower[j] /= s;
            upper[j] /= s;
            col_scale[j] = s;
        }
    }
    let scaled_cost: Vec<f64> = lp.vars.iter().zip(&col_scale).map(|(v, s)| v.cost * s).collect();
    let cost_scale = scaled_cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let cost_scale = if cost_scale < 1e-300 { 1.0 } else { cost_scale };
    let mut cost: Vec<f64> = scaled_cost.iter().map(|c| c / cost_scale).collect();
    cost.extend(std::iter::repeat_n(0.0, m));
    lower.extend(log_lower);
    upper.extend(log_upper);

    Ok(Reduced {
        m,
        n,
        cols,
        lower,
        upper,
        cost,
        rhs,
        row_map,
        row_scale,
        col_scale,
        cost_scale,
        lower_src,
        upper_src,
        orig_to_red,
    })
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Factor {
    logical: Vec<(usize, usize)>,
    structural: Vec<(usize, usize)>,
    t_rows: Vec<usize>,
    is_logical_row: Vec<bool>,
    lu: Option<DenseLu>,
    etas: Vec<Eta>,
}

impl Factor {
    fn build(p: &Reduced, heading: &[usize]) -> Option<Self> {
        let m = p.m;
        let mut is_logical_row = vec![false; m];
        let mut logical = Vec::new();
        let mut structural = Vec::new();
        for (pos, &v) in heading.iter().enumerate() {
            if v >= p.n {
                let row = v - p.n;
                if is_logical_row[row] {
                    return None;
                }
                is_logical_row[row] = true;
                logical.push((pos, row));
            } else {
                structural.push((pos, v));
            }
        }
        let t_rows: Vec<usize> = (0..m).filter(|&i| !is_logical_row[i]).collect();
        let k = t_rows.len();
        if k != structural.len() {
            return None;
        }
        let lu = if k > 0 {
            let mut row_in_t = vec![usize::MAX; m];
            for (r, &row) in t_rows.iter().enumerate() {
                row_in_t[row] = r;
            }
            let mut kmat = vec![0.0; k * k];
            for (c, &(_, var)) in structural.iter().enumerate() {
                for &(i, a) in &p.cols[var] {
                    let r = row_in_t[i];
                    if r != usize::MAX {
                        kmat[r * k + c] = a;
                    }
                }
            }
            Some(DenseLu::factor(kmat, k, 1e-11)?)
        } else {
            None
        };
        Some(Self {
            logical,
            structural,
            t_rows,
            is_logical_row,
            lu,
            etas: Vec::new(),
        })
    }

    /// `B^{-1} rhs`, result indexed by basis position.
    fn ftran(&self, p: &Reduced, rhs: &[f64]) -> Vec<f64> {
        let m = p.m;
        let mut out = vec![0.0; m];
        let k = self.structural.len();
        let mut acc = rhs.to_vec();
        if let Some(lu) = &self.lu {
            debug_assert_eq!(lu.dim(), k);
            let mut zc: Vec<f64> = self.t_rows.iter().map(|&row| rhs[row]).collect();
            lu.solve(&mut zc);
            for (c, &(pos, var)) in self.structural.iter().enumerate() {
                let z = zc[c];
                out[pos] = z;
                if z != 0.0 {
                    for &(i, a) in &p.cols[var] {
                        acc[i] -= a * z;
                    }
                }
            }
        }
        for &(pos, row) in &self.logical {
            out[pos] = acc[row];
        }
        for eta in &self.etas {
            let zr = out[eta.pos] / eta.pivot;
            out[eta.pos] = zr;
            if zr != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * zr;
                }
            }
        }
        out
    }

    /// Solves `y' B = c'` for `c` indexed by basis position; `y` by row.
    fn btran(&self, p: &Reduced, cpos: &[f64]) -> Vec<f64> {
        let mut c = cpos.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let mut y = vec![0.0; p.m];
        for &(pos, row) in &self.logical {
            y[row] = c[pos];
        }
        if let Some(lu) = &self.lu {
            let mut rhs: Vec<f64> = self
                .structural
                .iter()
                .map(|&(pos, var)| {
                    let mut s = c[pos];
                    for &(i, a) in &p.cols[var] {
                        if self.is_logical_row[i] {
                            s -= a * y[i];
                        }
                    }
                    s
                })
                .collect();
            lu.solve_transpose(&mut rhs);
            for (r, &row) in self.t_rows.iter().enumerate() {
                y[row] = rhs[r];
            }
        }
        y
    }

    fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

struct Engine<'a> {
    p: &'a Reduced,
    heading: Vec<usize>,
    place: Vec<Place>,
    x: Vec<f64>,
    factor: Factor,
    iterations: usize,
    max_iterations: usize,
    tol_p: f64,
    tol_d: f64,
}

impl<'a> Engine<'a> {
    fn new(p: &'a Reduced, heading: Vec<usize>, place: Vec<Place>, max_iterations: usize) -> Option<Self> {
        let factor = Factor::build(p, &heading)?;
        let mut e = Self {
            p,
            heading,
            place,
            x: vec![0.0; p.n + p.m],
            factor,
            iterations: 0,
            max_iterations,
            tol_p: 1e-9,
            tol_d: 1e-9,
        };
        e.compute_xb();
        Some(e)
    }

    fn slack_start(p: &Reduced) -> (Vec<usize>, Vec<Place>) {
        let mut place = Vec::with_capacity(p.n + p.m);
        for j in 0..p.n {
            place.push(Place::Non(default_nb(p.lower[j], p.upper[j], p.cost[j])));
        }
        let heading: Vec<usize> = (p.n..p.n + p.m).collect();
        for pos in 0..p.m {
            place.push(Place::Basic(pos));
        }
        (heading, place)
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.p.lower[j] == self.p.upper[j]
    }

    fn nb_value(&self, j: usize, nb: Nb) -> f64 {
        match nb {
            Nb::Lower => self.p.lower[j],
            Nb::Upper => self.p.upper[j],
            Nb::Zero => 0.0,
        }
    }

    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.p.n {
            self.p.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            y[j - self.p.n]
        }
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.p.m];
        if j < self.p.n {
            for &(i, a) in &self.p.cols[j] {
                v[i] = a;
            }
        } else {
            v[j - self.p.n] = 1.0;
        }
        v
    }

    fn compute_xb(&mut self) {
        let mut r = self.p.rhs.clone();
        for j in 0..self.p.n + self.p.m {
            if let Place::Non(nb) = self.place[j] {
                let v = self.nb_value(j, nb);
                self.x[j] = v;
                if v != 0.0 {
                    if j < self.p.n {
                        for &(i, a) in &self.p.cols[j] {
                            r[i] -= a * v;
                        }
                    } else {
                        r[j - self.p.n] -= v;
                    }
                }
            }
        }
        let z = self.factor.ftran(self.p, &r);
        for (pos, &b) in self.heading.iter().enumerate() {
            self.x[b] = z[pos];
        }
    }

    fn refactor(&mut self) -> bool {
        match Factor::build(self.p, &self.heading) {
            Some(f) => {
                self.factor = f;
                self.compute_xb();
                true
            }
            None => false,
        }
    }

    fn infeasibility(&self, b: usize) -> f64 {
        let x = self.x[b];
        let (l, u) = (self.p.lower[b], self.p.upper[b]);
        if x < l - self.tol_p * (1.0 + l.abs()) {
            l - x
        } else if x > u + self.tol_p * (1.0 + u.abs()) {
            x - u
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.p.n + self.p.m)
            .map(|j| match self.place[j] {
                Place::Basic(_) => 0.0,
                Place::Non(_) => self.p.cost[j] - self.dot_col(j, y),
            })
            .collect()
    }

    fn real_prices(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.heading.iter().map(|&b| self.p.cost[b]).collect();
        self.factor.btran(self.p, &cb)
    }

    /// Moves boxed nonbasic variables to the bound that makes their reduced
    /// cost dual feasible. Returns whether the whole basis is dual feasible.
    fn make_dual_feasible(&mut self) -> bool {
        let y = self.real_prices();
        let d = self.reduced_costs(&y);
        let mut feasible = true;
        let mut moved = false;
        for j in 0..self.p.n + self.p.m {
            let Place::Non(nb) = self.place[j] else { continue };
            if self.is_fixed(j) {
                continue;
            }
            let (l, u) = (self.p.lower[j], self.p.upper[j]);
            match nb {
                Nb::Lower if d[j] < -self.tol_d => {
                    if u.is_finite() {
                        self.place[j] = Place::Non(Nb::Upper);
                        moved = true;
                    } else {
                        feasible = false;
                    }
                }
                Nb::Upper if d[j] > self.tol_d => {
                    if l.is_finite() {
                        self.place[j] = Place::Non(Nb::Lower);
                        moved = true;
                    } else {
                        feasible = false;
                    }
                }
                Nb::Zero if d[j].abs() > self.tol_d => feasible = false,
                _ => {}
            }
        }
        if moved {
            self.compute_xb();
        }
        feasible
    }

    fn pivot(&mut self, pos: usize, entering: usize, alpha: &[f64], leave_to: Nb) -> bool {
        let leaving = self.heading[pos];
        self.x[leaving] = self.nb_value(leaving, leave_to);
        self.place[leaving] = Place::Non(leave_to);
        self.heading[pos] = entering;
        self.place[entering] = Place::Basic(pos);
        self.factor.push_eta(pos, alpha);
        if self.factor.etas.len() >= REFACTOR_EVERY {
            return self.refactor();
        }
        true
    }

    fn primal(&mut self) -> Outcome {
        let mut degenerate = 0usize;
        let mut bland = false;
        let total = self.p.n + self.p.m;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Failed;
            }
            let infeasible: Vec<f64> = self.heading.iter().map(|&b| self.infeasibility(b)).collect();
            let phase1 = infeasible.iter().any(|&v| v > 0.0);
            let cb: Vec<f64> = if phase1 {
                self.heading
                    .iter()
                    .zip(&infeasible)
                    .map(|(&b, &inf)| {
                        if inf == 0.0 {
                            0.0
                        } else if self.x[b] < self.p.lower[b] {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            } else {
                self.heading.iter().map(|&b| self.p.cost[b]).collect()
            };
            let y = self.factor.btran(self.p, &cb);

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                let Place::Non(nb) = self.place[j] else { continue };
                if self.is_fixed(j) {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.p.cost[j] };
                let d = cj - self.dot_col(j, &y);
                let dir = match nb {
                    Nb::Lower if d < -self.tol_d => 1.0,
                    Nb::Upper if d > self.tol_d => -1.0,
                    Nb::Zero if d.abs() > self.tol_d => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.is_none_or(|(_, _, s)| d.abs() > s) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                return if phase1 { Outcome::Infeasible } else { Outcome::Optimal };
            };
            self.iterations += 1;

            let alpha = self.factor.ftran(self.p, &self.dense_col(q));
            let flip = self.p.upper[q] - self.p.lower[q];
            let mut step = if flip.is_finite() { flip } else { INF };
            let mut leave: Option<(usize, Nb, f64)> = None;
            for (pos, &a) in alpha.iter().enumerate() {
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let delta = -dir * a;
                let b = self.heading[pos];
                let xb = self.x[b];
                let (l, u) = (self.p.lower[b], self.p.upper[b]);
                let below = infeasible[pos] > 0.0 && xb < l;
                let above = infeasible[pos] > 0.0 && xb > u;
                let (limit, to) = if delta < 0.0 {
                    if above {
                        ((xb - u) / -delta, Nb::Upper)
                    } else if below || !l.is_finite() {
                        continue;
                    } else {
                        ((xb - l).max(0.0) / -delta, Nb::Lower)
                    }
                } else if below {
                    ((l - xb) / delta, Nb::Lower)
                } else if above || !u.is_finite() {
                    continue;
                } else {
                    ((u - xb).max(0.0) / delta, Nb::Upper)
                };
                let eps = 1e-12 * (1.0 + step.min(1e12));
                let better = match leave {
                    None => limit < step + if step.is_finite() { eps } else { 0.0 },
                    Some((lp, _, _)) => {
                        if limit < step - eps {
                            true
                        } else if limit <= step + eps {
                            if bland {
                                b < self.heading[lp]
                            } else {
                                a.abs() > alpha[lp].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((pos, to, a));
                }
            }
            if !step.is_finite() {
                return if phase1 { Outcome::Failed } else { Outcome::Unbounded };
            }
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.x[q] += dir * step;
            for (pos, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let b = self.heading[pos];
                    self.x[b] -= dir * a * step;
                }
            }
            match leave {
                None => {
                    let to = if dir > 0.0 { Nb::Upper } else { Nb::Lower };
                    self.place[q] = Place::Non(to);
                    self.x[q] = self.nb_value(q, to);
                }
                Some((pos, to, _)) => {
                    if !self.pivot(pos, q, &alpha, to) {
                        return Outcome::Failed;
                    }
                }
            }
        }
    }

    fn dual(&mut self) -> Outcome {
        let mut degenerate = 0usize;
        let mut bland = false;
        let total = self.p.n + self.p.m;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Failed;
            }
            // leaving variable
            let mut leave: Option<(usize, f64)> = None;
            for (pos, &b) in self.heading.iter().enumerate() {
                let inf = self.infeasibility(b);
                if inf <= 0.0 {
                    continue;
                }
                let take = match leave {
                    None => true,
                    Some((lp, li)) => {
                        if bland {
                            b < self.heading[lp]
                        } else {
                            inf > li
                        }
                    }
                };
                if take {
                    leave = Some((pos, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Optimal;
            };
            self.iterations += 1;
            let b = self.heading[r];
            let increase = self.x[b] < self.p.lower[b];
            let target = if increase { Nb::Lower } else { Nb::Upper };

            let y = self.real_prices();
            let mut e = vec![0.0; self.p.m];
            e[r] = 1.0;
            let rho = self.factor.btran(self.p, &e);

            // Harris two-pass ratio test
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut bound = INF;
            for j in 0..total {
                let Place::Non(nb) = self.place[j] else { continue };
                if self.is_fixed(j) {
                    continue;
                }
                let a = self.dot_col(j, &rho);
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                // x_b moves by -a per unit increase of x_j
                let ok = match nb {
                    Nb::Lower => (increase && a < 0.0) || (!increase && a > 0.0),
                    Nb::Upper => (increase && a > 0.0) || (!increase && a < 0.0),
                    Nb::Zero => true,
                };
                if !ok {
                    continue;
                }
                let d = self.p.cost[j] - self.dot_col(j, &y);
                let dabs = match nb {
                    Nb::Lower => d.max(0.0),
                    Nb::Upper => (-d).max(0.0),
                    Nb::Zero => d.abs(),
                };
                bound = bound.min((dabs + self.tol_d) / a.abs());
                cands.push((j, a, dabs / a.abs()));
            }
            if cands.is_empty() {
                return Outcome::Infeasible;
            }
            let mut chosen: Option<(usize, f64, f64)> = None;
            for &(j, a, ratio) in &cands {
                if ratio > bound {
                    continue;
                }
                let take = match chosen {
                    None => true,
                    Some((cj, ca, _)) => {
                        if bland {
                            j < cj
                        } else {
                            a.abs() > ca.abs()
                        }
                    }
                };
                if take {
                    chosen = Some((j, a, ratio));
                }
            }
            let (q, _, ratio) = chosen.expect("harris pass keeps the minimum ratio");
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            let alpha = self.factor.ftran(self.p, &self.dense_col(q));
            if alpha[r].abs() < PIVOT_TOL {
                if !self.refactor() {
                    return Outcome::Failed;
                }
                continue;
            }
            let bound_val = self.nb_value(b, target);
            let delta_q = (self.x[b] - bound_val) / alpha[r];
            self.x[q] += delta_q;
            for (pos, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let bb = self.heading[pos];
                    self.x[bb] -= a * delta_q;
                }
            }
            if !self.pivot(r, q, &alpha, target) {
                return Outcome::Failed;
            }
        }
    }

    fn run(&mut self) -> Outcome {
        for _attempt in 0..4 {
            let outcome = if self.make_dual_feasible() {
                match self.dual() {
                    Outcome::Optimal => Outcome::Optimal,
                    Outcome::Infeasible => {
                        // confirm with a primal phase 1 after a clean refactor
                        if !self.refactor() {
                            return Outcome::Failed;
                        }
                        self.primal()
                    }
                    other => other,
                }
            } else {
                self.primal()
            };
            match outcome {
                Outcome::Optimal => {
                    if !self.refactor() {
                        return Outcome::Failed;
                    }
                    let primal_ok = self.heading.iter().all(|&b| self.infeasibility(b) == 0.0);
                    let y = self.real_prices();
                    let d = self.reduced_costs(&y);
                    let dual_ok = (0..self.p.n + self.p.m).all(|j| match self.place[j] {
                        Place::Basic(_) => true,
                        Place::Non(_) if self.is_fixed(j) => true,
                        Place::Non(Nb::Lower) => d[j] >= -1e-7,
                        Place::Non(Nb::Upper) => d[j] <= 1e-7,
                        Place::Non(Nb::Zero) => d[j].abs() <= 1e-7,
                    });
                    if primal_ok && dual_ok {
                        return Outcome::Optimal;
                    }
                }
                other => return other,
            }
        }
        Outcome::Failed
    }
}

fn default_nb(l: f64, u: f64, c: f64) -> Nb {
    match (l.is_finite(), u.is_finite()) {
        (true, true) => {
            if c < 0.0 {
                Nb::Upper
            } else {
                Nb::Lower
            }
        }
        (true, false) => Nb::Lower,
        (false, true) => Nb::Upper,
        (false, false) => Nb::Zero,
    }
}

fn nb_from_status(s: BasisStatus, l: f64, u: f64, c: f64) -> Nb {
    match s {
        BasisStatus::AtLower if l.is_finite() => Nb::Lower,
        BasisStatus::AtUpper if u.is_finite() => Nb::Upper,
        BasisStatus::Free if !l.is_finite() && !u.is_finite() => Nb::Zero,
        _ => default_nb(l, u, c),
    }
}

/// Maps an original-LP basis onto the reduced problem.
fn warm_start(p: &Reduced, lp: &LinearProgram, basis: &Basis) -> Option<(Vec<usize>, Vec<Place>)> {
    if basis.vars.len() != p.n || basis.rows.len() > lp.rows.len() {
        return None;
    }
    let row_status = |i: usize| basis.rows.get(i).copied().unwrap_or(BasisStatus::Basic);
    let mut basic = vec![false; p.n + p.m];
    let mut place = vec![Place::Non(Nb::Zero); p.n + p.m];
    for j in 0..p.n {
        let (l, u) = (p.lower[j], p.upper[j]);
        match basis.vars[j] {
            BasisStatus::Basic => {
                let lower_active = p.lower_src[j].is_some_and(|(i, _)| row_status(i) != BasisStatus::Basic);
                let upper_active = p.upper_src[j].is_some_and(|(i, _)| row_status(i) != BasisStatus::Basic);
                if lower_active {
                    place[j] = Place::Non(Nb::Lower);
                } else if upper_active {
                    place[j] = Place::Non(Nb::Upper);
                } else {
                    basic[j] = true;
                }
            }
            s => place[j] = Place::Non(nb_from_status(s, l, u, p.cost[j])),
        }
    }
    for r in 0..p.m {
        let j = p.n + r;
        match row_status(p.row_map[r]) {
            BasisStatus::Basic => basic[j] = true,
            s => place[j] = Place::Non(nb_from_status(s, p.lower[j], p.upper[j], 0.0)),
        }
    }
    let heading: Vec<usize> = (0..p.n + p.m).filter(|&j| basic[j]).collect();
    if heading.len() != p.m {
        return None;
    }
    for (pos, &j) in heading.iter().enumerate() {
        place[j] = Place::Basic(pos);
    }
    Some((heading, place))
}

pub(super) fn solve(lp: &LinearProgram, warm: Option<&Basis>, cfg: &ReferenceSolver) -> LpSolution {
    let n = lp.vars.len();
    let m_orig = lp.rows.len();
    let p = match presolve(lp, cfg.tolerances.feasibility) {
        Ok(p) => p,
        Err(status) => return LpSolution::failed(status, n, m_orig, 0),
    };
    let max_iterations = cfg.max_iterations.unwrap_or(50 * (p.m + p.n) + 2000);

    let mut engine = None;
    if let Some(b) = warm {
        if let Some((heading, place)) = warm_start(&p, lp, b) {
            engine = Engine::new(&p, heading, place, max_iterations);
        }
    }
    let mut engine = match engine {
        Some(e) => e,
        None => {
            let (heading, place) = Engine::slack_start(&p);
            Engine::new(&p, heading, place, max_iterations).expect("slack basis is nonsingular")
        }
    };
    let mut outcome = engine.run();
    if outcome == Outcome::Failed && warm.is_some() {
        // retry cold before giving up
        let (heading, place) = Engine::slack_start(&p);
        let mut cold = Engine::new(&p, heading, place, max_iterations).expect("slack basis is nonsingular");
        outcome = cold.run();
        cold.iterations += engine.iterations;
        engine = cold;
    }
    let iterations = engine.iterations;
    match outcome {
        Outcome::Optimal => {}
        Outcome::Infeasible => return LpSolution::failed(LpStatus::Infeasible, n, m_orig, iterations),
        Outcome::Unbounded => return LpSolution::failed(LpStatus::Unbounded, n, m_orig, iterations),
        Outcome::Failed => return LpSolution::failed(LpStatus::NumericalFailure, n, m_orig, iterations),
    }

    let y = engine.real_prices();
    let d = engine.reduced_costs(&y);
    let primal: Vec<f64> = engine.x[..n].iter().zip(&p.col_scale).map(|(x, s)| x * s).collect();
    let mut duals = vec![0.0; m_orig];
    for r in 0..p.m {
        duals[p.row_map[r]] = y[r] * p.row_scale[r] * p.cost_scale;
    }
    let mut reduced_costs = vec![0.0; n];
    let mut var_status = vec![BasisStatus::Basic; n];
    let mut row_status = vec![BasisStatus::Basic; m_orig];
    for j in 0..n {
        let dj = d[j] * p.cost_scale / p.col_scale[j];
        match engine.place[j] {
            Place::Basic(_) => {}
            Place::Non(nb) => {
                // a fixed variable presses on whichever side its reduced cost points to
                let side = if p.lower[j] == p.upper[j] {
                    if dj >= 0.0 {
                        Nb::Lower
                    } else {
                        Nb::Upper
                    }
                } else {
                    nb
                };
                let src = match side {
                    Nb::Lower => p.lower_src[j],
                    Nb::Upper => p.upper_src[j],
                    Nb::Zero => None,
                };
                match src {
                    Some((i, a)) => {
                        duals[i] = dj / a;
                        row_status[i] = if side == Nb::Lower { BasisStatus::AtLower } else { BasisStatus::AtUpper };
                    }
                    None => {
                        reduced_costs[j] = dj;
                        var_status[j] = match side {
                            Nb::Lower => BasisStatus::AtLower,
                            Nb::Upper => BasisStatus::AtUpper,
                            Nb::Zero => BasisStatus::Free,
                        };
                    }
                }
            }
        }
    }
    for (i, red) in p.orig_to_red.iter().enumerate() {
        if let Some(r) = red {
            if let Place::Non(nb) = engine.place[p.n + r] {
                row_status[i] = match nb {
                    Nb::Lower => BasisStatus::AtLower,
                    Nb::Upper => BasisStatus::AtUpper,
                    Nb::Zero => BasisStatus::Free,
                };
            }
        }
    }
    let objective = lp.objective_at(&primal);
    LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        duals,
        reduced_costs,
        iterations,
        basis: Some(Basis {
            vars: var_status,
            rows: row_status,
        }),
    }
}
