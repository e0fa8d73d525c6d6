use crate::conditions::{Cell, ConditionKind, ConditionReport, Residual};
use crate::error::ModelError;
use crate::joint::{JointDistribution, Marginal, Var};
use crate::model::{Behavior, HvModel, Scenario, EPS_ZERO};

use Var::{Lambda, A, B, X, Y};

fn ratio(num: f64, den: f64, eps_zero: f64) -> Option<f64> {
    if den < eps_zero {
        None
    } else {
        Some(num / den)
    }
}

fn cells_from(lines: &[(u8, &[usize])]) -> Vec<Cell> {
    let mut out = Vec::new();
    for &(line, dims) in lines {
        let total: usize = dims.iter().product();
        for flat in 0..total {
            let mut idx = vec![0; dims.len()];
            let mut rem = flat;
            for k in (0..dims.len()).rev() {
                idx[k] = rem % dims[k];
                rem /= dims[k];
            }
            out.push(Cell::new(line, idx));
        }
    }
    out
}

/// `P(A|B,lambda) = P(A)` and `P(B|A,lambda) = P(B)`.
pub struct NoConspiracy {
    dims: [usize; 3],
    lab: Marginal,
    lb: Marginal,
    la: Marginal,
    pa: Marginal,
    pb: Marginal,
    pub eps_zero: f64,
}

impl NoConspiracy {
    pub fn new(j: &JointDistribution) -> Self {
        Self::with_eps_zero(j, EPS_ZERO)
    }

    pub fn with_eps_zero(j: &JointDistribution, eps_zero: f64) -> Self {
        NoConspiracy {
            dims: [j.size(Lambda), j.size(A), j.size(B)],
            lab: j.marginal(&[Lambda, A, B]),
            lb: j.marginal(&[Lambda, B]),
            la: j.marginal(&[Lambda, A]),
            pa: j.marginal(&[A]),
            pb: j.marginal(&[B]),
            eps_zero,
        }
    }
}

impl Residual for NoConspiracy {
    fn kind(&self) -> ConditionKind {
        ConditionKind::NoConspiracy
    }

    fn cells(&self) -> Vec<Cell> {
        cells_from(&[(0, &self.dims), (1, &self.dims)])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let (l, a, b) = (cell.index[0], cell.index[1], cell.index[2]);
        let joint = self.lab.get(&[l, a, b]);
        if cell.line == 0 {
            let cond = ratio(joint, self.lb.get(&[l, b]), self.eps_zero)?;
            Some((cond - self.pa.get(&[a])).abs())
        } else {
            let cond = ratio(joint, self.la.get(&[l, a]), self.eps_zero)?;
            Some((cond - self.pb.get(&[b])).abs())
        }
    }
}

pub fn check_no_conspiracy(j: &JointDistribution, tol: f64) -> ConditionReport {
    NoConspiracy::new(j).report(tol)
}

/// `P(X|A,B,lambda) = P(X|A,lambda)` and `P(Y|A,B,lambda) = P(Y|B,lambda)`.
pub struct ParameterIndependence {
    dims_x: [usize; 4],
    dims_y: [usize; 4],
    lab: Marginal,
    labx: Marginal,
    laby: Marginal,
    la: Marginal,
    lb: Marginal,
    lax: Marginal,
    lby: Marginal,
    pub eps_zero: f64,
}

impl ParameterIndependence {
    pub fn new(j: &JointDistribution) -> Self {
        Self::with_eps_zero(j, EPS_ZERO)
    }

    pub fn with_eps_zero(j: &JointDistribution, eps_zero: f64) -> Self {
        let [nl, na, nb, nx, ny] = j.dims();
        ParameterIndependence {
            dims_x: [nl, na, nb, nx],
            dims_y: [nl, na, nb, ny],
            lab: j.marginal(&[Lambda, A, B]),
            labx: j.marginal(&[Lambda, A, B, X]),
            laby: j.marginal(&[Lambda, A, B, Y]),
            la: j.marginal(&[Lambda, A]),
            lb: j.marginal(&[Lambda, B]),
            lax: j.marginal(&[Lambda, A, X]),
            lby: j.marginal(&[Lambda, B, Y]),
            eps_zero,
        }
    }
}

impl Residual for ParameterIndependence {
    fn kind(&self) -> ConditionKind {
        ConditionKind::ParameterIndependence
    }

    fn cells(&self) -> Vec<Cell> {
        cells_from(&[(0, &self.dims_x), (1, &self.dims_y)])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let [l, a, b, o] = cell.index[..] else {
            return None;
        };
        let both = self.lab.get(&[l, a, b]);
        if cell.line == 0 {
            let fine = ratio(self.labx.get(&[l, a, b, o]), both, self.eps_zero)?;
            let coarse = ratio(
                self.lax.get(&[l, a, o]),
                self.la.get(&[l, a]),
                self.eps_zero,
            )?;
            Some((fine - coarse).abs())
        } else {
            let fine = ratio(self.laby.get(&[l, a, b, o]), both, self.eps_zero)?;
            let coarse = ratio(
                self.lby.get(&[l, b, o]),
                self.lb.get(&[l, b]),
                self.eps_zero,
            )?;
            Some((fine - coarse).abs())
        }
    }
}

pub fn check_parameter_independence(j: &JointDistribution, tol: f64) -> ConditionReport {
    ParameterIndependence::new(j).report(tol)
}

/// `P(X|Y,A,B,lambda) = P(X|A,B,lambda)` and the symmetric line.
pub struct OutcomeIndependence {
    dims: [usize; 5],
    full: Marginal,
    lab: Marginal,
    labx: Marginal,
    laby: Marginal,
    pub eps_zero: f64,
}

impl OutcomeIndependence {
    pub fn new(j: &JointDistribution) -> Self {
        Self::with_eps_zero(j, EPS_ZERO)
    }

    pub fn with_eps_zero(j: &JointDistribution, eps_zero: f64) -> Self {
        OutcomeIndependence {
            dims: j.dims(),
            full: j.marginal(&Var::ALL),
            lab: j.marginal(&[Lambda, A, B]),
            labx: j.marginal(&[Lambda, A, B, X]),
            laby: j.marginal(&[Lambda, A, B, Y]),
            eps_zero,
        }
    }
}

impl Residual for OutcomeIndependence {
    fn kind(&self) -> ConditionKind {
        ConditionKind::OutcomeIndependence
    }

    fn cells(&self) -> Vec<Cell> {
        cells_from(&[(0, &self.dims), (1, &self.dims)])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let [l, a, b, x, y] = cell.index[..] else {
            return None;
        };
        let p = self.full.get(&[l, a, b, x, y]);
        let both = self.lab.get(&[l, a, b]);
        if cell.line == 0 {
            let given_y = ratio(p, self.laby.get(&[l, a, b, y]), self.eps_zero)?;
            let plain = ratio(self.labx.get(&[l, a, b, x]), both, self.eps_zero)?;
            Some((given_y - plain).abs())
        } else {
            let given_x = ratio(p, self.labx.get(&[l, a, b, x]), self.eps_zero)?;
            let plain = ratio(self.laby.get(&[l, a, b, y]), both, self.eps_zero)?;
            Some((given_x - plain).abs())
        }
    }
}

pub fn check_outcome_independence(j: &JointDistribution, tol: f64) -> ConditionReport {
    OutcomeIndependence::new(j).report(tol)
}

/// FR condition: `P(A|Y,B,lambda) = P(A)` and `P(B|X,A,lambda) = P(B)`.
pub struct FreeChoice {
    dims_y: [usize; 4],
    dims_x: [usize; 4],
    laby: Marginal,
    lby: Marginal,
    labx: Marginal,
    lax: Marginal,
    pa: Marginal,
    pb: Marginal,
    pub eps_zero: f64,
}

impl FreeChoice {
    pub fn new(j: &JointDistribution) -> Self {
        Self::with_eps_zero(j, EPS_ZERO)
    }

    pub fn with_eps_zero(j: &JointDistribution, eps_zero: f64) -> Self {
        let [nl, na, nb, nx, ny] = j.dims();
        FreeChoice {
            dims_y: [nl, na, nb, ny],
            dims_x: [nl, na, nb, nx],
            laby: j.marginal(&[Lambda, A, B, Y]),
            lby: j.marginal(&[Lambda, B, Y]),
            labx: j.marginal(&[Lambda, A, B, X]),
            lax: j.marginal(&[Lambda, A, X]),
            pa: j.marginal(&[A]),
            pb: j.marginal(&[B]),
            eps_zero,
        }
    }
}

impl Residual for FreeChoice {
    fn kind(&self) -> ConditionKind {
        ConditionKind::FreeChoice
    }

    fn cells(&self) -> Vec<Cell> {
        cells_from(&[(0, &self.dims_y), (1, &self.dims_x)])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let [l, a, b, o] = cell.index[..] else {
            return None;
        };
        if cell.line == 0 {
            let cond = ratio(
                self.laby.get(&[l, a, b, o]),
                self.lby.get(&[l, b, o]),
                self.eps_zero,
            )?;
            Some((cond - self.pa.get(&[a])).abs())
        } else {
            let cond = ratio(
                self.labx.get(&[l, a, b, o]),
                self.lax.get(&[l, a, o]),
                self.eps_zero,
            )?;
            Some((cond - self.pb.get(&[b])).abs())
        }
    }
}

pub fn check_fr(j: &JointDistribution, tol: f64) -> ConditionReport {
    FreeChoice::new(j).report(tol)
}

/// One-sided marginals of a single behavior, averaged uniformly over the
/// distant setting.
struct SideMarginals {
    alice: Vec<f64>,
    bob: Vec<f64>,
}

impl SideMarginals {
    fn of(p: &Behavior) -> Self {
        let s = p.scenario();
        let mut alice = vec![0.0; s.settings_a * s.outcomes_x];
        let mut bob = vec![0.0; s.settings_b * s.outcomes_y];
        for a in 0..s.settings_a {
            for x in 0..s.outcomes_x {
                let sum: f64 = (0..s.settings_b).map(|b| p.marginal_a(a, b, x)).sum();
                alice[a * s.outcomes_x + x] = sum / s.settings_b as f64;
            }
        }
        for b in 0..s.settings_b {
            for y in 0..s.outcomes_y {
                let sum: f64 = (0..s.settings_a).map(|a| p.marginal_b(a, b, y)).sum();
                bob[b * s.outcomes_y + y] = sum / s.settings_a as f64;
            }
        }
        SideMarginals { alice, bob }
    }
}

struct PerLambda {
    behavior: Behavior,
    sides: SideMarginals,
    weight: f64,
}

fn per_lambda(m: &HvModel) -> Vec<PerLambda> {
    m.components()
        .iter()
        .map(|c| PerLambda {
            sides: SideMarginals::of(&c.behavior),
            behavior: c.behavior.clone(),
            weight: c.weight,
        })
        .collect()
}

/// `P(X,Y|A,B,lambda) = P(X|A,lambda) P(Y|B,lambda)` on the model's
/// per-component behaviors.
///
/// `P(X|A,lambda)` is the marginal averaged over Bob's setting; lines 2 and 3
/// measure how far each per-setting marginal strays from that average, so
/// a model whose one-sided marginals depend on the distant setting cannot pass.
pub struct BellLocalFactorized {
    scenario: Scenario,
    parts: Vec<PerLambda>,
    pub eps_zero: f64,
}

impl BellLocalFactorized {
    pub fn new(m: &HvModel) -> Self {
        Self::with_eps_zero(m, EPS_ZERO)
    }

    pub fn with_eps_zero(m: &HvModel, eps_zero: f64) -> Self {
        BellLocalFactorized {
            scenario: m.scenario(),
            parts: per_lambda(m),
            eps_zero,
        }
    }
}

impl Residual for BellLocalFactorized {
    fn kind(&self) -> ConditionKind {
        ConditionKind::BellLocalFactorized
    }

    fn cells(&self) -> Vec<Cell> {
        let s = self.scenario;
        let nl = self.parts.len();
        cells_from(&[
            (
                0,
                &[nl, s.settings_a, s.settings_b, s.outcomes_x, s.outcomes_y],
            ),
            (1, &[nl, s.settings_a, s.settings_b, s.outcomes_x]),
            (2, &[nl, s.settings_a, s.settings_b, s.outcomes_y]),
        ])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let s = self.scenario;
        let part = &self.parts[cell.index[0]];
        if part.weight < self.eps_zero {
            return None;
        }
        let (a, b) = (cell.index[1], cell.index[2]);
        let p = &part.behavior;
        match cell.line {
            0 => {
                let (x, y) = (cell.index[3], cell.index[4]);
                let prod =
                    part.sides.alice[a * s.outcomes_x + x] * part.sides.bob[b * s.outcomes_y + y];
                Some((p.get(a, b, x, y) - prod).abs())
            }
            1 => {
                let x = cell.index[3];
                Some((p.marginal_a(a, b, x) - part.sides.alice[a * s.outcomes_x + x]).abs())
            }
            _ => {
                let y = cell.index[3];
                Some((p.marginal_b(a, b, y) - part.sides.bob[b * s.outcomes_y + y]).abs())
            }
        }
    }
}

pub fn check_bell_local_factorized(m: &HvModel, tol: f64) -> ConditionReport {
    BellLocalFactorized::new(m).report(tol)
}

/// `P(X|Y,A,B,lambda) = P(X|A,lambda)` and `P(Y|X,A,B,lambda) = P(Y|B,lambda)`,
/// with the same one-sided marginals as [`BellLocalFactorized`].
pub struct BellLocalConditional {
    scenario: Scenario,
    parts: Vec<PerLambda>,
    pub eps_zero: f64,
}

impl BellLocalConditional {
    pub fn new(m: &HvModel) -> Self {
        Self::with_eps_zero(m, EPS_ZERO)
    }

    pub fn with_eps_zero(m: &HvModel, eps_zero: f64) -> Self {
        BellLocalConditional {
            scenario: m.scenario(),
            parts: per_lambda(m),
            eps_zero,
        }
    }
}

impl Residual for BellLocalConditional {
    fn kind(&self) -> ConditionKind {
        ConditionKind::BellLocalConditional
    }

    fn cells(&self) -> Vec<Cell> {
        let s = self.scenario;
        let d = [
            self.parts.len(),
            s.settings_a,
            s.settings_b,
            s.outcomes_x,
            s.outcomes_y,
        ];
        cells_from(&[(0, &d), (1, &d)])
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let s = self.scenario;
        let [l, a, b, x, y] = cell.index[..] else {
            return None;
        };
        let part = &self.parts[l];
        if part.weight < self.eps_zero {
            return None;
        }
        let p = part.behavior.get(a, b, x, y);
        if cell.line == 0 {
            let cond = ratio(p, part.behavior.marginal_b(a, b, y), self.eps_zero)?;
            Some((cond - part.sides.alice[a * s.outcomes_x + x]).abs())
        } else {
            let cond = ratio(p, part.behavior.marginal_a(a, b, x), self.eps_zero)?;
            Some((cond - part.sides.bob[b * s.outcomes_y + y]).abs())
        }
    }
}

pub fn check_bell_local_conditional(m: &HvModel, tol: f64) -> ConditionReport {
    BellLocalConditional::new(m).report(tol)
}

/// Setting-independence of the marginals of a single behavior.
pub struct NoSignaling<'a> {
    behavior: &'a Behavior,
}

impl<'a> NoSignaling<'a> {
    pub fn new(behavior: &'a Behavior) -> Self {
        NoSignaling { behavior }
    }
}

impl Residual for NoSignaling<'_> {
    fn kind(&self) -> ConditionKind {
        ConditionKind::NoSignaling
    }

    fn cells(&self) -> Vec<Cell> {
        let s = self.behavior.scenario();
        let mut out = Vec::new();
        for a in 0..s.settings_a {
            for b in 0..s.settings_b {
                for b2 in b + 1..s.settings_b {
                    for x in 0..s.outcomes_x {
                        out.push(Cell::new(0, vec![a, b, b2, x]));
                    }
                }
            }
        }
        for a in 0..s.settings_a {
            for a2 in a + 1..s.settings_a {
                for b in 0..s.settings_b {
                    for y in 0..s.outcomes_y {
                        out.push(Cell::new(1, vec![a, a2, b, y]));
                    }
                }
            }
        }
        out
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let p = self.behavior;
        let i = &cell.index;
        if cell.line == 0 {
            Some((p.marginal_a(i[0], i[1], i[3]) - p.marginal_a(i[0], i[2], i[3])).abs())
        } else {
            Some((p.marginal_b(i[0], i[2], i[3]) - p.marginal_b(i[1], i[2], i[3])).abs())
        }
    }
}

pub fn check_no_signaling(b: &Behavior, tol: f64) -> ConditionReport {
    NoSignaling::new(b).report(tol)
}

struct XiGroup {
    weight: f64,
    behavior: Vec<f64>,
}

struct PsiGroup {
    xis: Vec<XiGroup>,
    average: Vec<f64>,
    weight: f64,
}

/// `P(X,Y|A,B,psi,Xi) = P(X,Y|A,B,psi)` within every group of components
/// sharing a `psi` tag. Components sharing both tags are pooled into one
/// `Xi` value; groups with a single `Xi` value are vacuous.
pub struct NoExtension {
    scenario: Scenario,
    groups: Vec<PsiGroup>,
    pub eps_zero: f64,
}

impl NoExtension {
    pub fn new(m: &HvModel) -> Result<Self, ModelError> {
        Self::with_eps_zero(m, EPS_ZERO)
    }

    pub fn with_eps_zero(m: &HvModel, eps_zero: f64) -> Result<Self, ModelError> {
        let labels = m.labels().ok_or(ModelError::MissingLabels)?;
        let s = m.scenario();
        let n = s.behavior_len();
        let mut psi_names: Vec<&str> = Vec::new();
        let mut xi_names: Vec<Vec<&str>> = Vec::new();
        let mut groups: Vec<PsiGroup> = Vec::new();
        for (c, label) in m.components().iter().zip(labels) {
            let g = match psi_names.iter().position(|p| *p == label.psi) {
                Some(g) => g,
                None => {
                    psi_names.push(&label.psi);
                    xi_names.push(Vec::new());
                    groups.push(PsiGroup {
                        xis: Vec::new(),
                        average: vec![0.0; n],
                        weight: 0.0,
                    });
                    groups.len() - 1
                }
            };
            let k = match xi_names[g].iter().position(|x| *x == label.xi) {
                Some(k) => k,
                None => {
                    xi_names[g].push(&label.xi);
                    groups[g].xis.push(XiGroup {
                        weight: 0.0,
                        behavior: vec![0.0; n],
                    });
                    groups[g].xis.len() - 1
                }
            };
            let xi = &mut groups[g].xis[k];
            xi.weight += c.weight;
            for (acc, v) in xi.behavior.iter_mut().zip(c.behavior.as_slice()) {
                *acc += c.weight * v;
            }
        }
        for g in &mut groups {
            for xi in &mut g.xis {
                g.weight += xi.weight;
                for (acc, v) in g.average.iter_mut().zip(&xi.behavior) {
                    *acc += v;
                }
                if xi.weight >= eps_zero {
                    xi.behavior.iter_mut().for_each(|v| *v /= xi.weight);
                }
            }
            if g.weight >= eps_zero {
                let w = g.weight;
                g.average.iter_mut().for_each(|v| *v /= w);
            }
        }
        Ok(NoExtension {
            scenario: s,
            groups,
            eps_zero,
        })
    }
}

impl Residual for NoExtension {
    fn kind(&self) -> ConditionKind {
        ConditionKind::NoExtension
    }

    fn cells(&self) -> Vec<Cell> {
        let s = self.scenario;
        let mut out = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            for k in 0..group.xis.len() {
                for c in
                    cells_from(&[(0, &[s.settings_a, s.settings_b, s.outcomes_x, s.outcomes_y])])
                {
                    let mut index = vec![g, k];
                    index.extend(c.index);
                    out.push(Cell::new(0, index));
                }
            }
        }
        out
    }

    fn deviation(&self, cell: &Cell) -> Option<f64> {
        let [g, k, a, b, x, y] = cell.index[..] else {
            return None;
        };
        let group = &self.groups[g];
        let xi = &group.xis[k];
        if group.xis.len() < 2 || group.weight < self.eps_zero || xi.weight < self.eps_zero {
            return None;
        }
        let i = self.scenario.index(a, b, x, y);
        Some((xi.behavior[i] - group.average[i]).abs())
    }
}

pub fn check_no_extension(m: &HvModel, tol: f64) -> Result<ConditionReport, ModelError> {
    Ok(NoExtension::new(m)?.report(tol))
}
