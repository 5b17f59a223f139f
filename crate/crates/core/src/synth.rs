//! Seeded synthetic label logs and rule configurations for tests, demos and
//! benchmarks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{Condition, Config, ControllerSpec, RuleDecl, TermDecl, VariableDecl, KEYWORDS};
use crate::fuzzy::MembershipFunction;
use crate::ingest::{ActivityLog, LabelMap, LabelValue, LogRow, SECONDS_PER_DAY};

/// Behaviour of one synthetic user. Fractions are probabilities that a
/// reported minute carries a true label of the category.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub fractions: BTreeMap<String, f64>,
    /// Relative weights of the moods that get reported.
    pub moods: Vec<(String, f64)>,
    /// Probability that a reported minute also carries a mood.
    pub mood_rate: f64,
    pub minutes_per_day: usize,
    pub days: usize,
    pub start_day: i64,
    /// Relative weekly modulation of every fraction.
    pub weekly_amplitude: f64,
    /// Additive change of every fraction per day.
    pub daily_drift: f64,
}

fn fractions(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn moods(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// 2021-01-04, a Monday
const DEFAULT_START_DAY: i64 = 18_631;

impl Profile {
    /// Eight hours of sleep, regular meals and exercise, balanced work and
    /// leisure, daily company. Each fraction sits on the best-rated term of
    /// the default rule bases under the default caps.
    pub fn ideal() -> Self {
        Self {
            fractions: fractions(&[
                ("sleep", 1.0 / 3.0),
                ("diet", 0.1),
                ("exercise", 0.1),
                ("work", 0.2),
                ("leisure", 0.1),
                ("interaction", 0.4),
                ("online", 0.2),
            ]),
            moods: moods(&[("HAPPY", 5.0), ("CALM", 3.0), ("ACTIVE", 2.0)]),
            mood_rate: 0.2,
            minutes_per_day: 240,
            days: 28,
            start_day: DEFAULT_START_DAY,
            weekly_amplitude: 0.0,
            daily_drift: 0.0,
        }
    }

    /// Middling habits and next to no social contact.
    pub fn isolated() -> Self {
        Self {
            fractions: fractions(&[
                ("sleep", 0.28),
                ("diet", 0.05),
                ("exercise", 0.05),
                ("work", 0.2),
                ("leisure", 0.1),
                ("interaction", 0.0),
                ("online", 0.0),
            ]),
            moods: moods(&[("TIRED", 4.0), ("SLEEPY", 3.0), ("STRESSED", 2.0)]),
            ..Self::ideal()
        }
    }

    /// A profile with every fraction drawn from a plausible range.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut p = Self::ideal();
        let ranges = [
            ("sleep", 0.1, 0.5),
            ("diet", 0.0, 0.12),
            ("exercise", 0.0, 0.12),
            ("work", 0.0, 0.45),
            ("leisure", 0.0, 0.25),
            ("interaction", 0.0, 0.45),
            ("online", 0.0, 0.45),
        ];
        p.fractions = ranges
            .iter()
            .map(|&(k, lo, hi)| (k.to_string(), rng.gen_range(lo..=hi)))
            .collect();
        let vocab = crate::ingest::DEFAULT_MOODS;
        p.moods = (0..3)
            .map(|_| (vocab[rng.gen_range(0..vocab.len())].to_string(), rng.gen_range(1.0..5.0)))
            .collect();
        p.weekly_amplitude = rng.gen_range(0.0..0.3);
        p
    }

    fn fraction(&self, category: &str, day: usize) -> f64 {
        let base = self.fractions.get(category).copied().unwrap_or(0.0);
        let season = 1.0 + self.weekly_amplitude * (2.0 * PI * day as f64 / 7.0).sin();
        (base * season + self.daily_drift * day as f64).clamp(0.0, 1.0)
    }
}

/// Random upper-case id in the 8-4-4-4-12 hex layout.
pub fn random_uuid(rng: &mut impl Rng) -> String {
    let hex: String = (0..32).map(|_| format!("{:X}", rng.gen_range(0..16u8))).collect();
    format!("{}-{}-{}-{}-{}", &hex[..8], &hex[8..12], &hex[12..16], &hex[16..20], &hex[20..])
}

/// Generates a log with one column per label known to `map`. Each day gets a
/// contiguous block of `minutes_per_day` reported minutes at a random offset.
/// Within a category, a true minute sets one of its labels at random.
pub fn generate_log(uuid: &str, profile: &Profile, map: &LabelMap, seed: u64) -> ActivityLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = map.all_labels();
    let index = |l: &String| labels.binary_search(l).expect("label from map");
    let categories: Vec<(&str, Vec<usize>)> = map
        .categories
        .iter()
        .map(|c| (c.name.as_str(), c.labels.iter().map(index).collect()))
        .collect();
    let mood_cols: Vec<(usize, f64)> = profile
        .moods
        .iter()
        .filter_map(|(m, w)| labels.binary_search(m).ok().map(|i| (i, *w)))
        .collect();
    let mood_total: f64 = mood_cols.iter().map(|(_, w)| w).sum();
    let all_moods: Vec<usize> = map.moods.iter().map(index).collect();

    let per_day = profile.minutes_per_day.min(1440);
    let mut rows = Vec::with_capacity(profile.days * per_day);
    for day in 0..profile.days {
        let probs: Vec<f64> = categories.iter().map(|(c, _)| profile.fraction(c, day)).collect();
        let offset = rng.gen_range(0..=1440 - per_day) as i64;
        let day_start = (profile.start_day + day as i64) * SECONDS_PER_DAY;
        for minute in 0..per_day as i64 {
            let mut values = vec![LabelValue::Missing; labels.len()];
            for ((_, cols), &p) in categories.iter().zip(&probs) {
                for &c in cols {
                    values[c] = LabelValue::False;
                }
                if rng.gen_bool(p) {
                    values[cols[rng.gen_range(0..cols.len())]] = LabelValue::True;
                }
            }
            if mood_total > 0.0 && rng.gen_bool(profile.mood_rate) {
                for &c in &all_moods {
                    values[c] = LabelValue::False;
                }
                let mut pick = rng.gen_range(0.0..mood_total);
                for &(c, w) in &mood_cols {
                    if pick < w {
                        values[c] = LabelValue::True;
                        break;
                    }
                    pick -= w;
                }
            }
            rows.push(LogRow { timestamp: day_start + (offset + minute) * 60, values });
        }
    }
    ActivityLog::new(uuid, labels, rows).expect("generated log is well formed")
}

/// `n` users with random profiles, deterministic in `seed`.
pub fn random_cohort(n: usize, days: usize, minutes_per_day: usize, seed: u64) -> Vec<ActivityLog> {
    let map = LabelMap::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let uuid = random_uuid(&mut rng);
            let mut p = Profile::random(&mut rng);
            p.days = days;
            p.minutes_per_day = minutes_per_day;
            generate_log(&uuid, &p, &map, rng.gen())
        })
        .collect()
}

fn random_ident(rng: &mut impl Rng, taken: &mut Vec<String>) -> String {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";
    loop {
        let len = rng.gen_range(1..=8);
        let mut id = String::new();
        id.push(FIRST[rng.gen_range(0..FIRST.len())] as char);
        for _ in 1..len {
            id.push(REST[rng.gen_range(0..REST.len())] as char);
        }
        if !KEYWORDS.contains(&id.as_str()) && !taken.contains(&id) {
            taken.push(id.clone());
            return id;
        }
    }
}

fn quarter(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 4.0).floor() as i64;
    lo + rng.gen_range(0..=steps) as f64 / 4.0
}

/// Terms that cover `[lo, hi]`: the universe is cut at random points and
/// each piece gets a shape that overlaps its neighbours.
fn random_partition(rng: &mut impl Rng, lo: f64, hi: f64) -> Vec<MembershipFunction> {
    let k = rng.gen_range(1..=4);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| quarter(rng, lo + 1.0, hi - 1.0)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    let n = edges.len() - 1;
    (0..n)
        .map(|i| {
            let overlap = 0.25 * rng.gen_range(1..=4) as f64;
            let s = if i == 0 { lo } else { (edges[i] - overlap).max(lo) };
            let e = if i == n - 1 { hi } else { (edges[i + 1] + overlap).min(hi) };
            let (s_open, e_open) = (i > 0, i < n - 1);
            let mid = 0.5 * (s + e);
            match rng.gen_range(0..3) {
                0 if s_open || e_open => {
                    let b = if !s_open { s } else if !e_open { e } else { mid };
                    MembershipFunction::triangular(s, b, e)
                }
                1 => {
                    let b = if s_open { 0.5 * (s + mid) } else { s };
                    let c = if e_open { 0.5 * (mid + e) } else { e };
                    MembershipFunction::trapezoidal(s, b, c, e)
                }
                _ => MembershipFunction::crisp(s, e),
            }
            .expect("ordered breakpoints")
        })
        .collect()
}

/// A random configuration that validates without errors.
pub fn random_config(rng: &mut impl Rng) -> Config {
    let mut names = Vec::new();
    let nvars = rng.gen_range(2..=6);
    let variables: Vec<VariableDecl> = (0..nvars)
        .map(|_| {
            let lo = quarter(rng, -50.0, 50.0);
            let hi = lo + quarter(rng, 4.0, 100.0);
            let mut term_names = Vec::new();
            let terms = random_partition(rng, lo, hi)
                .into_iter()
                .map(|shape| TermDecl { name: random_ident(rng, &mut term_names), shape })
                .collect();
            VariableDecl { name: random_ident(rng, &mut names), lo, hi, terms }
        })
        .collect();

    let ncontrollers = rng.gen_range(0..=3);
    let controllers = (0..ncontrollers)
        .map(|_| {
            let output = rng.gen_range(0..nvars);
            let mut pool: Vec<usize> = (0..nvars).filter(|&i| i != output).collect();
            let ninputs = rng.gen_range(1..=pool.len().min(3));
            let mut inputs = Vec::new();
            for _ in 0..ninputs {
                inputs.push(pool.swap_remove(rng.gen_range(0..pool.len())));
            }
            let out = &variables[output];
            let rules = (0..rng.gen_range(1..=8))
                .map(|_| {
                    let mut used: Vec<usize> =
                        inputs.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
                    if used.is_empty() {
                        used.push(inputs[rng.gen_range(0..inputs.len())]);
                    }
                    let antecedents = used
                        .iter()
                        .map(|&v| {
                            let var = &variables[v];
                            let t = &var.terms[rng.gen_range(0..var.terms.len())];
                            Condition::new(var.name.clone(), t.name.clone())
                        })
                        .collect();
                    let t = &out.terms[rng.gen_range(0..out.terms.len())];
                    RuleDecl { antecedents, consequent: Condition::new(out.name.clone(), t.name.clone()) }
                })
                .collect();
            ControllerSpec {
                name: random_ident(rng, &mut names),
                inputs: inputs.iter().map(|&i| variables[i].name.clone()).collect(),
                output: out.name.clone(),
                rules,
            }
        })
        .collect();
    Config { variables, controllers }
}
