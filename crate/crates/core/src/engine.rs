//! Single Mamdani controller: fuzzify, fire rules with min, clip consequents,
//! aggregate with max, defuzzify by centroid.

use std::collections::BTreeMap;

use log::warn;
use thiserror::Error;

use crate::dsl::{Config, ControllerSpec, RuleDecl};
use crate::fuzzy::{
    defuzzify_centroid, FuzzyError, LinguisticVariable, SampledFuzzySet, DEFAULT_RESOLUTION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("controller `{controller}`: unknown variable `{variable}`")]
    UnknownVariable { controller: String, variable: String },
    #[error("controller `{controller}`: variable `{variable}` has no term `{term}`")]
    UnknownTerm { controller: String, variable: String, term: String },
    #[error("controller `{controller}`: rule {rule} does not conclude on the output variable")]
    ForeignConsequent { controller: String, rule: usize },
    #[error("controller `{0}` has no rules")]
    NoRules(String),
    #[error("no degree for `{variable} IS {term}` in the fuzzified input")]
    MissingTerm { variable: String, term: String },
    #[error("no crisp value for input `{0}`")]
    MissingInput(String),
    #[error("input `{variable}` is not a number ({value})")]
    NotANumber { variable: String, value: f64 },
    #[error("controller `{controller}`: empty aggregate, no rule fired")]
    EmptyAggregate { controller: String },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Degree of every term of one variable.
pub type TermDegrees = BTreeMap<String, f64>;

/// Fuzzified inputs keyed by variable name.
pub type FuzzifiedInput = BTreeMap<String, TermDegrees>;

/// Crisp inputs keyed by variable name.
pub type CrispInputs = BTreeMap<String, f64>;

/// Degrees of `x` in every term of `var`. Values outside the universe are
/// clamped to the nearest bound.
pub fn fuzzify(var: &LinguisticVariable, x: f64) -> TermDegrees {
    let u = &var.universe;
    let x = if u.contains(x) {
        x
    } else {
        let c = u.clamp(x);
        warn!("{}: input {x} outside [{}, {}], clamped to {c}", var.name, u.lo(), u.hi());
        c
    };
    var.terms.iter().map(|t| (t.name.clone(), t.mf.eval(x))).collect()
}

/// Activation of a rule: the minimum of its antecedent degrees.
pub fn fire_rule(rule: &RuleDecl, inputs: &FuzzifiedInput) -> Result<f64, EngineError> {
    let mut activation: f64 = 1.0;
    for cond in &rule.antecedents {
        let degrees = inputs
            .get(&cond.variable)
            .ok_or_else(|| EngineError::MissingInput(cond.variable.clone()))?;
        let d = degrees.get(&cond.term).copied().ok_or_else(|| EngineError::MissingTerm {
            variable: cond.variable.clone(),
            term: cond.term.clone(),
        })?;
        activation = activation.min(d);
    }
    Ok(activation)
}

/// A controller with its variables resolved and output terms pre-sampled.
#[derive(Debug, Clone)]
pub struct Controller {
    name: String,
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<RuleDecl>,
    // consequent term index per rule
    consequents: Vec<usize>,
    output_samples: Vec<SampledFuzzySet>,
}

impl Controller {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<RuleDecl>,
    ) -> Result<Self, EngineError> {
        let name = name.into();
        if rules.is_empty() {
            return Err(EngineError::NoRules(name));
        }
        let mut consequents = Vec::with_capacity(rules.len());
        for (i, rule) in rules.iter().enumerate() {
            for cond in &rule.antecedents {
                let var = inputs.iter().find(|v| v.name == cond.variable).ok_or_else(|| {
                    EngineError::UnknownVariable {
                        controller: name.clone(),
                        variable: cond.variable.clone(),
                    }
                })?;
                if var.term(&cond.term).is_none() {
                    return Err(EngineError::UnknownTerm {
                        controller: name.clone(),
                        variable: var.name.clone(),
                        term: cond.term.clone(),
                    });
                }
            }
            if rule.consequent.variable != output.name {
                return Err(EngineError::ForeignConsequent { controller: name, rule: i + 1 });
            }
            let idx = output.term_index(&rule.consequent.term).ok_or_else(|| {
                EngineError::UnknownTerm {
                    controller: name.clone(),
                    variable: output.name.clone(),
                    term: rule.consequent.term.clone(),
                }
            })?;
            consequents.push(idx);
        }
        let output_samples = output.terms.iter().map(|t| t.mf.sample(&output.universe)).collect();
        Ok(Self { name, inputs, output, rules, consequents, output_samples })
    }

    /// Resolves `spec` against the variables declared in `cfg`.
    pub fn from_spec(spec: &ControllerSpec, cfg: &Config) -> Result<Self, EngineError> {
        Self::from_spec_with_resolution(spec, cfg, DEFAULT_RESOLUTION)
    }

    pub fn from_spec_with_resolution(
        spec: &ControllerSpec,
        cfg: &Config,
        resolution: usize,
    ) -> Result<Self, EngineError> {
        let resolve = |name: &str| -> Result<LinguisticVariable, EngineError> {
            let decl = cfg.variable(name).ok_or_else(|| EngineError::UnknownVariable {
                controller: spec.name.clone(),
                variable: name.to_string(),
            })?;
            Ok(decl.to_linguistic(resolution)?)
        };
        let inputs = spec.inputs.iter().map(|n| resolve(n)).collect::<Result<Vec<_>, _>>()?;
        let output = resolve(&spec.output)?;
        Self::new(spec.name.clone(), inputs, output, spec.rules.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[RuleDecl] {
        &self.rules
    }

    pub fn fuzzify_all(&self, crisp: &CrispInputs) -> Result<FuzzifiedInput, EngineError> {
        self.inputs
            .iter()
            .map(|var| {
                let x = *crisp
                    .get(&var.name)
                    .ok_or_else(|| EngineError::MissingInput(var.name.clone()))?;
                if x.is_nan() {
                    return Err(EngineError::NotANumber { variable: var.name.clone(), value: x });
                }
                Ok((var.name.clone(), fuzzify(var, x)))
            })
            .collect()
    }

    /// Activation of every rule, in rule order.
    pub fn activations(&self, crisp: &CrispInputs) -> Result<Vec<f64>, EngineError> {
        let fuzzified = self.fuzzify_all(crisp)?;
        self.rules.iter().map(|r| fire_rule(r, &fuzzified)).collect()
    }

    /// Aggregated output fuzzy set.
    pub fn infer(&self, crisp: &CrispInputs) -> Result<SampledFuzzySet, EngineError> {
        let activations = self.activations(crisp)?;
        let mut acc: Option<SampledFuzzySet> = None;
        for (&alpha, &term) in activations.iter().zip(&self.consequents) {
            if alpha <= 0.0 {
                continue;
            }
            let clipped = self.output_samples[term].clipped(alpha)?;
            match acc.as_mut() {
                Some(set) => set.union_with(&clipped)?,
                None => acc = Some(clipped),
            }
        }
        acc.filter(|s| !s.is_empty())
            .ok_or_else(|| EngineError::EmptyAggregate { controller: self.name.clone() })
    }

    /// Crisp output: centroid of the aggregated set.
    pub fn evaluate(&self, crisp: &CrispInputs) -> Result<f64, EngineError> {
        let set = self.infer(crisp)?;
        defuzzify_centroid(&set).map_err(|e| match e {
            FuzzyError::EmptyAggregate => EngineError::EmptyAggregate { controller: self.name.clone() },
            other => other.into(),
        })
    }
}
