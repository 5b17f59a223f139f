//! Two-level scoring: category levels feed one base controller per
//! component, and the component scores feed the top controller.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{
    parse_config, validate, Condition, Config, ControllerSpec, ParseError, RuleDecl, Severity,
};
use crate::engine::{Controller, CrispInputs, EngineError};
use crate::ingest::{
    category_series, date_of_day, day_index, mood_top_k, ActivityLog, CategoryDef, CategorySeries,
    IngestError, LabelMap,
};
use crate::stl::{self, stl_decompose, StlError, StlParams};

pub const DEFAULT_FZC: &str = include_str!("../configs/wellness-default.fzc");
pub const DEFAULT_SETTINGS: &str = include_str!("../configs/wellness-default.toml");

/// Component score variable names, in report order.
pub const COMPONENTS: [&str; 3] = ["health", "productive", "social"];

/// Hand-fixed rows of the top rule base as (health, productive, social) →
/// overall.
pub const TOP_ANCHORS: [([&str; 3], &str); 10] = [
    (["L", "L", "L"], "L"),
    (["M", "L", "L"], "L"),
    (["H", "L", "L"], "L"),
    (["M", "M", "L"], "M"),
    (["H", "M", "L"], "M"),
    (["L", "M", "H"], "M"),
    (["H", "M", "H"], "H"),
    (["L", "H", "H"], "M"),
    (["M", "H", "H"], "H"),
    (["H", "H", "H"], "H"),
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Parse(#[from] ParseError),
    #[error("config: {0}")]
    Invalid(String),
    #[error("settings: {0}")]
    Settings(#[from] toml::de::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("insufficient coverage: no day reaches the coverage threshold")]
    InsufficientCoverage,
    #[error("{uuid}: {source}")]
    User { uuid: String, source: Box<PipelineError> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlSettings {
    pub period: usize,
    pub seasonal_window: usize,
    /// Derived from the period and seasonal window when absent.
    #[serde(default)]
    pub trend_window: Option<usize>,
    pub inner_iters: usize,
    pub outer_iters: usize,
}

impl StlSettings {
    pub fn params(&self) -> StlParams {
        let mut p = StlParams::for_period(self.period);
        p.seasonal_window = self.seasonal_window;
        p.trend_window = self
            .trend_window
            .unwrap_or_else(|| StlParams::default_trend_window(self.period, self.seasonal_window));
        p.inner_iters = self.inner_iters;
        p.outer_iters = self.outer_iters;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySettings {
    #[serde(flatten)]
    pub def: CategoryDef,
    /// Daily fraction that maps to the top of the variable's universe.
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub coverage_min: f64,
    pub top_controller: String,
    pub mood_count: usize,
    pub moods: Vec<String>,
    pub stl: StlSettings,
    pub categories: Vec<CategorySettings>,
}

impl PipelineSettings {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        Ok(toml::from_str(text)?)
    }

    pub fn label_map(&self) -> LabelMap {
        LabelMap {
            categories: self.categories.iter().map(|c| c.def.clone()).collect(),
            moods: self.moods.clone(),
        }
    }
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self::from_toml(DEFAULT_SETTINGS).expect("embedded settings parse")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentScores {
    pub health: f64,
    pub productive: f64,
    pub social: f64,
}

impl ComponentScores {
    pub fn as_inputs(&self) -> CrispInputs {
        COMPONENTS.iter().map(|c| c.to_string()).zip([self.health, self.productive, self.social]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellnessReport {
    pub uuid: String,
    pub total: f64,
    pub components: ComponentScores,
    pub moods: Vec<String>,
    /// First and last day of the analysed rows.
    pub window: Option<(NaiveDate, NaiveDate)>,
}

/// Consequent rank for antecedent ranks `ranks` on a scale of `levels`
/// terms: the lower of the median rank and the rank nearest the mean. An
/// exact half rounds toward the middle of the scale. For an even number of
/// antecedents the lower median is used.
pub fn ordinal_consequent(ranks: &[usize], levels: usize) -> usize {
    assert!(!ranks.is_empty() && levels > 0);
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let median = sorted[(sorted.len() - 1) / 2];
    let mean = ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
    let floor = mean.floor();
    let frac = mean - floor;
    let nearest = if (frac - 0.5).abs() < 1e-12 {
        let mid = (levels - 1) as f64 / 2.0;
        if (floor + 1.0 - mid).abs() < (floor - mid).abs() {
            floor + 1.0
        } else {
            floor
        }
    } else {
        mean.round()
    } as usize;
    median.min(nearest).min(levels - 1)
}

/// Adds a rule for every input-term combination the controller leaves
/// uncovered, choosing the consequent by [`ordinal_consequent`]. Term ranks
/// follow declaration order. All inputs and the output must have the same
/// number of terms.
pub fn complete_rule_base(spec: &ControllerSpec, cfg: &Config) -> Result<ControllerSpec, PipelineError> {
    let output = cfg
        .variable(&spec.output)
        .ok_or_else(|| PipelineError::Invalid(format!("unknown variable `{}`", spec.output)))?;
    let levels = output.terms.len();
    let mut inputs = Vec::new();
    for name in &spec.inputs {
        let v = cfg
            .variable(name)
            .ok_or_else(|| PipelineError::Invalid(format!("unknown variable `{name}`")))?;
        if v.terms.len() != levels {
            return Err(PipelineError::Invalid(format!(
                "controller `{}`: cannot complete rules, `{name}` has {} terms and `{}` has {levels}",
                spec.name,
                v.terms.len(),
                spec.output
            )));
        }
        inputs.push(v);
    }
    let lookup = |n: &str| cfg.variable(n);
    let mut out = spec.clone();
    for combo in crate::dsl::uncovered_combinations(spec, &lookup) {
        let ranks: Vec<usize> = combo
            .iter()
            .zip(&inputs)
            .map(|(t, v)| v.terms.iter().position(|x| x.name == *t).expect("term from variable"))
            .collect();
        let consequent = &output.terms[ordinal_consequent(&ranks, levels)].name;
        out.rules.push(RuleDecl {
            antecedents: spec
                .inputs
                .iter()
                .zip(&combo)
                .map(|(v, t)| Condition::new(v.clone(), t.clone()))
                .collect(),
            consequent: Condition::new(spec.output.clone(), consequent.clone()),
        });
    }
    Ok(out)
}

/// Consequent of the first rule matching `terms` exactly on every input.
pub fn consequent_for<'a>(spec: &'a ControllerSpec, terms: &[&str]) -> Option<&'a str> {
    spec.rules.iter().find_map(|r| {
        let hit = r.antecedents.len() == terms.len()
            && spec.inputs.iter().zip(terms).all(|(v, t)| {
                r.antecedents.iter().any(|c| c.variable == *v && c.term == *t)
            });
        hit.then_some(r.consequent.term.as_str())
    })
}

/// Replaces days below the coverage threshold by linear interpolation
/// between the nearest included days. Leading and trailing excluded days are
/// dropped. Returns `None` if every day is excluded.
pub fn fill_excluded(values: &[f64], excluded: &[bool]) -> Option<Vec<f64>> {
    let first = excluded.iter().position(|e| !e)?;
    let last = excluded.iter().rposition(|e| !e)?;
    let mut out = values[first..=last].to_vec();
    let ex = &excluded[first..=last];
    let mut prev = 0;
    for i in 1..out.len() {
        if ex[i] {
            continue;
        }
        if i > prev + 1 {
            let (a, b) = (out[prev], out[i]);
            let span = (i - prev) as f64;
            for (k, v) in out.iter_mut().enumerate().take(i).skip(prev + 1) {
                *v = a + (b - a) * (k - prev) as f64 / span;
            }
        }
        prev = i;
    }
    Some(out)
}

/// Mean of the STL trend of `values`, or the plain mean when the series is
/// shorter than two periods.
pub fn trend_level(values: &[f64], params: &StlParams) -> Result<f64, PipelineError> {
    if values.len() < 2 * params.period {
        warn!(
            "series of {} days is shorter than two periods ({}), using its mean",
            values.len(),
            params.period
        );
        return stl::mean(values).ok_or(PipelineError::InsufficientCoverage);
    }
    let d = stl_decompose(values, params)?;
    Ok(stl::mean(&d.trend).expect("non-empty trend"))
}

/// Scored configuration: parsed rule bases, controllers and settings.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: Config,
    settings: PipelineSettings,
    params: StlParams,
    /// Base controllers keyed by component name.
    base: BTreeMap<String, Controller>,
    top: Controller,
}

impl Pipeline {
    /// Builds a pipeline, completing any rule base that leaves input
    /// combinations uncovered.
    pub fn new(config: Config, settings: PipelineSettings) -> Result<Self, PipelineError> {
        let errors: Vec<String> = validate(&config)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message)
            .collect();
        if !errors.is_empty() {
            return Err(PipelineError::Invalid(errors.join("; ")));
        }
        let params = settings.stl.params();
        params.validate()?;
        settings.label_map().validate()?;
        if !(0.0..=1.0).contains(&settings.coverage_min) {
            return Err(PipelineError::Invalid(format!(
                "coverage_min {} is outside [0, 1]",
                settings.coverage_min
            )));
        }

        let build = |name: &str| -> Result<Controller, PipelineError> {
            let spec = config
                .controller(name)
                .ok_or_else(|| PipelineError::Invalid(format!("no controller `{name}`")))?;
            let completed = complete_rule_base(spec, &config)?;
            if completed.rules.len() > spec.rules.len() {
                info!(
                    "controller `{name}`: completed {} missing rules",
                    completed.rules.len() - spec.rules.len()
                );
            }
            Ok(Controller::from_spec(&completed, &config)?)
        };

        let categories: BTreeMap<&str, &CategorySettings> =
            settings.categories.iter().map(|c| (c.def.name.as_str(), c)).collect();
        let components: BTreeSet<&str> =
            settings.categories.iter().map(|c| c.def.component.as_str()).collect();
        let mut base = BTreeMap::new();
        for component in components {
            let c = build(component)?;
            for input in c.inputs() {
                let cat = categories.get(input.name.as_str()).ok_or_else(|| {
                    PipelineError::Invalid(format!(
                        "controller `{component}`: input `{}` is not a category",
                        input.name
                    ))
                })?;
                if cat.def.component != component {
                    return Err(PipelineError::Invalid(format!(
                        "category `{}` belongs to `{}`, not `{component}`",
                        input.name, cat.def.component
                    )));
                }
                if !(cat.cap > 0.0 && cat.cap.is_finite()) {
                    return Err(PipelineError::Invalid(format!(
                        "category `{}`: cap must be positive",
                        input.name
                    )));
                }
            }
            base.insert(component.to_string(), c);
        }
        let mut outputs: Vec<&str> = base.values().map(|c| c.output().name.as_str()).collect();
        outputs.sort_unstable();
        let mut expected = COMPONENTS.to_vec();
        expected.sort_unstable();
        if outputs != expected {
            return Err(PipelineError::Invalid(format!(
                "base controllers must produce {}, found {}",
                COMPONENTS.join(", "),
                outputs.join(", ")
            )));
        }

        let top = build(&settings.top_controller)?;
        let mut top_inputs: Vec<&str> = top.inputs().iter().map(|v| v.name.as_str()).collect();
        top_inputs.sort_unstable();
        if top_inputs != expected {
            return Err(PipelineError::Invalid(format!(
                "controller `{}` must take {} as inputs",
                settings.top_controller,
                COMPONENTS.join(", ")
            )));
        }
        Ok(Self { config, settings, params, base, top })
    }

    /// Parses `.fzc` text and TOML settings text.
    pub fn from_texts(fzc: &str, settings: &str) -> Result<Self, PipelineError> {
        Self::new(parse_config(fzc)?, PipelineSettings::from_toml(settings)?)
    }

    pub fn default_pipeline() -> Self {
        Self::from_texts(DEFAULT_FZC, DEFAULT_SETTINGS).expect("embedded configuration is valid")
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn settings(&self) -> &PipelineSettings {
        &self.settings
    }

    pub fn stl_params(&self) -> &StlParams {
        &self.params
    }

    pub fn set_stl_params(&mut self, params: StlParams) -> Result<(), PipelineError> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn set_coverage_min(&mut self, coverage_min: f64) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&coverage_min) {
            return Err(PipelineError::Invalid(format!("coverage_min {coverage_min} is outside [0, 1]")));
        }
        self.settings.coverage_min = coverage_min;
        Ok(())
    }

    pub fn base_controller(&self, component: &str) -> Option<&Controller> {
        self.base.get(component)
    }

    pub fn top_controller(&self) -> &Controller {
        &self.top
    }

    pub fn series(&self, log: &ActivityLog) -> CategorySeries {
        category_series(log, &self.settings.label_map(), self.settings.coverage_min)
    }

    /// Daily fractions of one category with excluded days filled in.
    pub fn category_values(&self, series: &CategorySeries, category: &str) -> Result<Vec<f64>, PipelineError> {
        let values = series
            .fractions
            .get(category)
            .ok_or_else(|| PipelineError::Invalid(format!("unknown category `{category}`")))?;
        fill_excluded(values, &series.excluded).ok_or(PipelineError::InsufficientCoverage)
    }

    /// Crisp input per category: the trend level mapped onto the variable's
    /// universe through the category cap.
    pub fn controller_inputs(&self, series: &CategorySeries) -> Result<CrispInputs, PipelineError> {
        let mut out = CrispInputs::new();
        for c in self.base.values() {
            for var in c.inputs() {
                let cat = self
                    .settings
                    .categories
                    .iter()
                    .find(|s| s.def.name == var.name)
                    .expect("checked at construction");
                let level = trend_level(&self.category_values(series, &var.name)?, &self.params)?;
                let u = &var.universe;
                let x = u.lo() + (u.hi() - u.lo()) * (level / cat.cap).clamp(0.0, 1.0);
                out.insert(var.name.clone(), x);
            }
        }
        Ok(out)
    }

    pub fn base_scores(&self, inputs: &CrispInputs) -> Result<ComponentScores, PipelineError> {
        let mut scores = BTreeMap::new();
        for c in self.base.values() {
            scores.insert(c.output().name.as_str(), c.evaluate(inputs)?);
        }
        Ok(ComponentScores {
            health: scores["health"],
            productive: scores["productive"],
            social: scores["social"],
        })
    }

    pub fn overall_score(&self, scores: &ComponentScores) -> Result<f64, PipelineError> {
        Ok(self.top.evaluate(&scores.as_inputs())?)
    }

    /// Scores one user's log restricted to the given day window.
    pub fn analyze_user(
        &self,
        log: &ActivityLog,
        start: Option<NaiveDate>,
        end: Option<NaiveDate>,
    ) -> Result<WellnessReport, PipelineError> {
        let wrap = |e: PipelineError| PipelineError::User { uuid: log.uuid().to_string(), source: Box::new(e) };
        let log = log.window(start, end);
        let series = self.series(&log);
        let inputs = self.controller_inputs(&series).map_err(wrap)?;
        let components = self.base_scores(&inputs).map_err(wrap)?;
        let total = self.overall_score(&components).map_err(wrap)?;
        let window = match (log.rows().first(), log.rows().last()) {
            (Some(a), Some(b)) => {
                date_of_day(day_index(a.timestamp)).zip(date_of_day(day_index(b.timestamp)))
            }
            _ => None,
        };
        Ok(WellnessReport {
            uuid: log.uuid().to_string(),
            total,
            components,
            moods: mood_top_k(&log, &self.settings.moods, self.settings.mood_count),
            window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::defuzzify_centroid;

    #[test]
    fn ordinal_rule_reproduces_anchor_rows() {
        let rank = |t: &str| ["L", "M", "H"].iter().position(|x| *x == t).unwrap();
        for (ants, cons) in TOP_ANCHORS {
            let ranks: Vec<usize> = ants.iter().map(|t| rank(t)).collect();
            assert_eq!(ordinal_consequent(&ranks, 3), rank(cons), "{ants:?}");
        }
    }

    #[test]
    fn ordinal_rule_is_monotone() {
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let base = ordinal_consequent(&[a, b, c], 3);
                    if a < 2 {
                        assert!(ordinal_consequent(&[a + 1, b, c], 3) >= base);
                    }
                }
            }
        }
        assert_eq!(ordinal_consequent(&[0, 1], 3), 0);
        assert_eq!(ordinal_consequent(&[0, 3], 4), 0);
        // half rounds toward the middle
        assert_eq!(ordinal_consequent(&[2, 3], 4), 2);
    }

    #[test]
    fn completing_the_anchor_rows_gives_the_shipped_top_rule_base() {
        let excerpt = parse_config(include_str!("../configs/wellness-excerpt.fzc")).unwrap();
        let shipped = parse_config(DEFAULT_FZC).unwrap();
        let done = complete_rule_base(excerpt.controller("wellness").unwrap(), &excerpt).unwrap();
        assert_eq!(done.rules.len(), 27);
        let full = shipped.controller("wellness").unwrap();
        let levels = ["L", "M", "H"];
        for h in levels {
            for p in levels {
                for s in levels {
                    assert_eq!(consequent_for(&done, &[h, p, s]), consequent_for(full, &[h, p, s]));
                }
            }
        }
        for (ants, cons) in TOP_ANCHORS {
            assert_eq!(consequent_for(full, &ants), Some(cons));
        }
    }

    #[test]
    fn fill_interpolates_and_trims() {
        let v = [9.0, 1.0, 0.0, 0.0, 4.0, 9.0];
        let ex = [true, false, true, true, false, true];
        assert_eq!(fill_excluded(&v, &ex).unwrap(), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fill_excluded(&v, &[true; 6]), None);
    }

    #[test]
    fn constant_fraction_trend_is_the_constant() {
        let p = StlParams::for_period(7);
        assert!((trend_level(&[0.3; 28], &p).unwrap() - 0.3).abs() < 1e-12);
        assert!((trend_level(&[0.2, 0.4, 0.3], &p).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn spike_barely_moves_the_level() {
        let mut v: Vec<f64> = (0..28).map(|d| 0.3 + 0.02 * ((d % 7) as f64 - 3.0) / 3.0).collect();
        let clean = v.iter().sum::<f64>() / 28.0;
        v[12] = 0.95;
        let level = trend_level(&v, &StlParams::for_period(7)).unwrap();
        assert!((level - clean).abs() / clean < 0.05, "{level} vs {clean}");
    }

    fn apex_inputs(c: &Controller, terms: &[&str]) -> CrispInputs {
        c.inputs()
            .iter()
            .zip(terms)
            .map(|(v, t)| (v.name.clone(), v.term(t).unwrap().mf.apex()))
            .collect()
    }

    fn term_centroid(c: &Controller, term: &str) -> f64 {
        let out = c.output();
        defuzzify_centroid(&out.term(term).unwrap().mf.sample(&out.universe)).unwrap()
    }

    #[test]
    fn single_rule_apex_gives_consequent_centroid() {
        let p = Pipeline::default_pipeline();
        let physical = p.base_controller("physical").unwrap();
        let x = apex_inputs(physical, &["L", "L", "L"]);
        let expect = term_centroid(physical, "L");
        assert!((physical.evaluate(&x).unwrap() - expect).abs() < 1e-9);
        let social = p.base_controller("social").unwrap();
        let x = apex_inputs(social, &["H", "H"]);
        assert!((social.evaluate(&x).unwrap() - term_centroid(social, "H")).abs() < 1e-9);
    }

    #[test]
    fn top_level_bands() {
        let p = Pipeline::default_pipeline();
        let mid = term_centroid(p.top_controller(), "M");
        let s = |h, pr, so| ComponentScores { health: h, productive: pr, social: so };
        assert!(p.overall_score(&s(5.0, 5.0, 5.0)).unwrap() < mid);
        assert!(p.overall_score(&s(95.0, 95.0, 95.0)).unwrap() > mid);
        let m = p.overall_score(&s(95.0, 50.0, 5.0)).unwrap();
        let top = p.top_controller().output();
        assert_eq!(top.dominant_term(m).unwrap().name, "M");
    }

    #[test]
    fn shipped_top_rule_base_is_monotone_on_grid() {
        let p = Pipeline::default_pipeline();
        let grid = [0.0, 25.0, 50.0, 75.0, 100.0];
        let score = |v: [f64; 3]| {
            p.overall_score(&ComponentScores { health: v[0], productive: v[1], social: v[2] }).unwrap()
        };
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    let idx = [a, b, c];
                    let here = score(idx.map(|i| grid[i]));
                    for k in 0..3 {
                        if idx[k] == 4 {
                            continue;
                        }
                        let mut up = idx;
                        up[k] += 1;
                        let next = score(up.map(|i| grid[i]));
                        assert!(next >= here - 1e-9, "{idx:?} dim {k}: {here} -> {next}");
                    }
                }
            }
        }
    }

    #[test]
    fn settings_errors() {
        let mut s = PipelineSettings::default();
        s.categories.retain(|c| c.def.name != "online");
        let err = Pipeline::new(parse_config(DEFAULT_FZC).unwrap(), s).unwrap_err();
        assert!(err.to_string().contains("online"), "{err}");
        let mut s = PipelineSettings::default();
        s.top_controller = "nope".into();
        assert!(Pipeline::new(parse_config(DEFAULT_FZC).unwrap(), s).is_err());
        let mut s = PipelineSettings::default();
        s.stl.seasonal_window = 4;
        assert!(matches!(
            Pipeline::new(parse_config(DEFAULT_FZC).unwrap(), s),
            Err(PipelineError::Stl(_))
        ));
    }
}
