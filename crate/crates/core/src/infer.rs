//! Cause-effect estimation and Bayesian root-cause ranking.
//!
//! Two event classes co-occur when an event of the first happens before an
//! event of the second. From those counts the model keeps smoothed priors
//! `P(c)` and edge conditionals `P(effect | cause)`, and ranks candidate
//! causes of a symptom with Bayes' rule
//! `P(cause | symptom) = P(symptom | cause) * P(cause) / P(symptom)`,
//! where `P(symptom | cause)` is the best product of edge conditionals along
//! any directed path from cause to symptom.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CausalGraph;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferError {
    #[error("cannot estimate a model from an empty graph")]
    EmptyGraph,
    #[error("event class {0:?} is not in the model")]
    UnknownClass(String),
    #[error("the evidence has zero probability")]
    ZeroEvidence,
    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("event class labels must be non-empty")]
    EmptyClass,
    #[error("model edges form a cycle through {0:?}")]
    Cycle(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventClass(String);

impl EventClass {
    pub fn new(label: impl Into<String>) -> Result<Self, InferError> {
        let label = label.into();
        if label.is_empty() {
            Err(InferError::EmptyClass)
        } else {
            Ok(EventClass(label))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<f64, InferError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(InferError::InvalidProbability { name, value })
    }
}

/// A Bayes posterior, clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesPosterior {
    pub probability: f64,
    /// The raw quotient exceeded 1, which means the inputs are inconsistent.
    pub clamped: bool,
}

/// `P(cause | effect) = P(effect | cause) * P(cause) / P(effect)`.
pub fn bayes_posterior(
    p_effect_given_cause: f64,
    p_cause: f64,
    p_effect: f64,
) -> Result<BayesPosterior, InferError> {
    check_probability("P(effect|cause)", p_effect_given_cause)?;
    check_probability("P(cause)", p_cause)?;
    check_probability("P(effect)", p_effect)?;
    if p_effect == 0.0 {
        return Err(InferError::ZeroEvidence);
    }
    let raw = p_effect_given_cause * p_cause / p_effect;
    if raw > 1.0 {
        log::warn!(
            "posterior {raw} exceeds 1 (P(e|c)={p_effect_given_cause}, P(c)={p_cause}, P(e)={p_effect}); clamping"
        );
        Ok(BayesPosterior {
            probability: 1.0,
            clamped: true,
        })
    } else {
        Ok(BayesPosterior {
            probability: raw,
            clamped: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub cause: EventClass,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    /// Laplace smoothing constant.
    pub alpha: f64,
    /// Number of classes used in prior smoothing; defaults to the number observed.
    pub class_count: Option<usize>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            alpha: 1.0,
            class_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEdge {
    pub cause: EventClass,
    pub effect: EventClass,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauseEffectModel {
    priors: BTreeMap<EventClass, f64>,
    edges: BTreeMap<(EventClass, EventClass), f64>,
    warnings: Vec<String>,
}

impl CauseEffectModel {
    /// Builds a model from explicit priors and edges. Every edge endpoint
    /// needs a prior, and the edges must be acyclic.
    pub fn new(
        priors: impl IntoIterator<Item = (EventClass, f64)>,
        edges: impl IntoIterator<Item = (EventClass, EventClass, f64)>,
    ) -> Result<Self, InferError> {
        let mut model = CauseEffectModel {
            priors: BTreeMap::new(),
            edges: BTreeMap::new(),
            warnings: Vec::new(),
        };
        for (c, p) in priors {
            model.priors.insert(c, check_probability("prior", p)?);
        }
        for (a, b, p) in edges {
            for c in [&a, &b] {
                if !model.priors.contains_key(c) {
                    return Err(InferError::UnknownClass(c.0.clone()));
                }
            }
            model.edges.insert((a, b), check_probability("edge", p)?);
        }
        if let Some(cycle) = model.find_cycle() {
            return Err(InferError::Cycle(cycle[0].0.clone()));
        }
        Ok(model)
    }

    pub fn classes(&self) -> impl Iterator<Item = &EventClass> {
        self.priors.keys()
    }

    pub fn prior(&self, c: &EventClass) -> Option<f64> {
        self.priors.get(c).copied()
    }

    pub fn edge(&self, cause: &EventClass, effect: &EventClass) -> Option<f64> {
        self.edges.get(&(cause.clone(), effect.clone())).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = ModelEdge> + '_ {
        self.edges.iter().map(|((a, b), &p)| ModelEdge {
            cause: a.clone(),
            effect: b.clone(),
            p,
        })
    }

    /// Edges dropped to keep the model acyclic, one message each.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn children(&self) -> BTreeMap<&EventClass, Vec<(&EventClass, f64)>> {
        let mut out: BTreeMap<&EventClass, Vec<(&EventClass, f64)>> = BTreeMap::new();
        for ((a, b), &p) in &self.edges {
            out.entry(a).or_default().push((b, p));
        }
        out
    }

    /// Classes along some directed cycle, if one exists.
    fn find_cycle(&self) -> Option<Vec<EventClass>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let children = self.children();
        let mut mark: HashMap<&EventClass, Mark> = self.priors.keys().map(|c| (c, Mark::New)).collect();
        let mut stack: Vec<&EventClass> = Vec::new();

        fn visit<'a>(
            c: &'a EventClass,
            children: &BTreeMap<&'a EventClass, Vec<(&'a EventClass, f64)>>,
            mark: &mut HashMap<&'a EventClass, Mark>,
            stack: &mut Vec<&'a EventClass>,
        ) -> Option<Vec<EventClass>> {
            mark.insert(c, Mark::Open);
            stack.push(c);
            for &(d, _) in children.get(c).map(Vec::as_slice).unwrap_or(&[]) {
                match mark.get(d).copied().unwrap_or(Mark::New) {
                    Mark::Open => {
                        let start = stack.iter().position(|x| *x == d).unwrap_or(0);
                        return Some(stack[start..].iter().map(|x| (*x).clone()).collect());
                    }
                    Mark::New => {
                        if let Some(cyc) = visit(d, children, mark, stack) {
                            return Some(cyc);
                        }
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            mark.insert(c, Mark::Done);
            None
        }

        for c in self.priors.keys() {
            if mark[c] == Mark::New {
                if let Some(cyc) = visit(c, &children, &mut mark, &mut stack) {
                    return Some(cyc);
                }
            }
        }
        None
    }

    /// Drops the weakest edge of each cycle until the edges are acyclic.
    fn break_cycles(&mut self) {
        while let Some(cycle) = self.find_cycle() {
            let n = cycle.len();
            let weakest = (0..n)
                .map(|i| (cycle[i].clone(), cycle[(i + 1) % n].clone()))
                .min_by(|x, y| {
                    self.edges[x]
                        .total_cmp(&self.edges[y])
                        .then_with(|| x.cmp(y))
                })
                .expect("cycle has at least one edge");
            let p = self.edges.remove(&weakest).unwrap_or_default();
            let msg = format!(
                "dropped edge {} -> {} (p = {p}) to break a cycle",
                weakest.0, weakest.1
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
    }

    /// Best product of edge conditionals along any path from each class to
    /// `target`. Classes that cannot reach `target` are absent.
    fn best_paths_to(&self, target: &EventClass) -> BTreeMap<EventClass, f64> {
        let children = self.children();
        let mut memo: HashMap<&EventClass, Option<f64>> = HashMap::new();

        fn best<'a>(
            c: &'a EventClass,
            target: &EventClass,
            children: &BTreeMap<&'a EventClass, Vec<(&'a EventClass, f64)>>,
            memo: &mut HashMap<&'a EventClass, Option<f64>>,
        ) -> Option<f64> {
            if c == target {
                return Some(1.0);
            }
            if let Some(&v) = memo.get(c) {
                return v;
            }
            let mut out: Option<f64> = None;
            for &(d, p) in children.get(c).map(Vec::as_slice).unwrap_or(&[]) {
                if let Some(rest) = best(d, target, children, memo) {
                    let v = p * rest;
                    out = Some(out.map_or(v, |o: f64| o.max(v)));
                }
            }
            memo.insert(c, out);
            out
        }

        self.priors
            .keys()
            .filter(|c| *c != target)
            .filter_map(|c| best(c, target, &children, &mut memo).map(|v| (c.clone(), v)))
            .collect()
    }

    /// Top `k` ancestor classes of `symptom` by posterior, ties by label.
    pub fn rank_root_causes(&self, symptom: &EventClass, k: usize) -> Result<Vec<Posterior>, InferError> {
        if k == 0 {
            return Err(InferError::InvalidArgument("k must be at least 1".into()));
        }
        let p_symptom = self
            .prior(symptom)
            .ok_or_else(|| InferError::UnknownClass(symptom.0.clone()))?;
        if p_symptom == 0.0 {
            return Err(InferError::ZeroEvidence);
        }
        let mut scored = Vec::new();
        for (cause, path_p) in self.best_paths_to(symptom) {
            let prior = self.priors[&cause];
            let post = bayes_posterior(path_p, prior, p_symptom)?;
            scored.push(Posterior {
                cause,
                probability: post.probability,
            });
        }
        scored.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then_with(|| a.cause.cmp(&b.cause))
        });
        scored.truncate(k);
        Ok(scored)
    }

    pub fn to_export(&self) -> ModelExport {
        ModelExport {
            classes: self.priors.keys().cloned().collect(),
            priors: self.priors.clone(),
            edges: self.edges().collect(),
        }
    }
}

/// JSON form of a model: `{classes, priors, edges: [{cause, effect, p}]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelExport {
    pub classes: Vec<EventClass>,
    pub priors: BTreeMap<EventClass, f64>,
    pub edges: Vec<ModelEdge>,
}

/// Estimates priors and edge conditionals from happens-before co-occurrence.
///
/// `P(c) = (n_c + a) / (N + a*K)`. `P(b | a) = (m_ab + a) / (n_a + 2a)` where
/// `m_ab` counts class-`a` events that happen before at least one class-`b`
/// event. Edges with `m_ab = 0` are not created.
pub fn estimate_model<F>(
    g: &CausalGraph,
    classifier: F,
    cfg: &EstimateConfig,
) -> Result<CauseEffectModel, InferError>
where
    F: Fn(&str) -> EventClass,
{
    if g.is_empty() {
        return Err(InferError::EmptyGraph);
    }
    let alpha = cfg.alpha;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(InferError::InvalidArgument(format!("alpha = {alpha}")));
    }

    let classes: HashMap<usize, EventClass> = g
        .events()
        .iter()
        .map(|e| (e.id, classifier(&e.action)))
        .collect();
    let mut counts: BTreeMap<&EventClass, usize> = BTreeMap::new();
    for c in classes.values() {
        *counts.entry(c).or_default() += 1;
    }
    let k = cfg.class_count.unwrap_or(counts.len());
    if k == 0 {
        return Err(InferError::InvalidArgument("class count must be at least 1".into()));
    }

    let mut followed: BTreeMap<(&EventClass, &EventClass), usize> = BTreeMap::new();
    for e in g.events() {
        let a = &classes[&e.id];
        let effects: BTreeSet<&EventClass> = g
            .descendants(e.id)
            .unwrap_or_default()
            .iter()
            .map(|d| &classes[d])
            .filter(|b| *b != a)
            .collect();
        for b in effects {
            *followed.entry((a, b)).or_default() += 1;
        }
    }

    let n = g.len() as f64;
    let priors: BTreeMap<EventClass, f64> = counts
        .iter()
        .map(|(c, &nc)| ((*c).clone(), (nc as f64 + alpha) / (n + alpha * k as f64)))
        .collect();
    let edges = followed
        .iter()
        .map(|(&(a, b), &m)| {
            let p = (m as f64 + alpha) / (counts[a] as f64 + 2.0 * alpha);
            ((a.clone(), b.clone()), p)
        })
        .collect();

    let mut model = CauseEffectModel {
        priors,
        edges,
        warnings: Vec::new(),
    };
    model.break_cycles();
    Ok(model)
}

/// Classifier that uses the action text as the class label.
pub fn by_action(action: &str) -> EventClass {
    EventClass(if action.is_empty() { "-".into() } else { action.to_string() })
}
