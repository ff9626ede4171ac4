//! Batch evaluation of generated samples and the perturbation experiment.
//!
//! Samples are checked in parallel and folded in input order, so reports do
//! not depend on the number of worker threads.

use std::fmt::Write as _;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{perturb, Half, ParsedSample, Sample, SplitManifest};
use crate::equivalence::{
    find_equivalent_in_index, row_permutation_match, CopySet, DatasetIndex, LatticePolytope,
};
use crate::error::{Error, Result};
use crate::polytope::DEFAULT_CAP;
use crate::properties::{check_matrix, NormalVerdict, PropertyReport, Representation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub rep: Representation,
    pub samples: Option<String>,
    pub num_samples: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Not serialized, since it
    /// never changes results.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub cap: usize,
    pub split_manifest: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            rep: Representation::Hyperplane,
            samples: None,
            num_samples: 0,
            seed: 0,
            threads: None,
            cap: DEFAULT_CAP,
            split_manifest: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub samples: u64,
    pub well_formed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCounts {
    pub compact: u64,
    pub lattice: u64,
    pub reflexive: u64,
    pub smooth: u64,
    pub normal: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intersections {
    pub compact_lattice: u64,
    pub compact_lattice_normal: u64,
    pub compact_not_smooth: u64,
    pub compact_lattice_not_smooth: u64,
}

/// Memorization counts over all-correct samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Memorization {
    pub copies: u64,
    pub row_permutations: u64,
    pub resolved: u64,
    pub half_a: u64,
    pub half_b: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub totals: Totals,
    pub properties: PropertyCounts,
    pub intersections: Intersections,
    pub all_correct: u64,
    pub ill_formed: u64,
    pub normal_unverified: u64,
    pub memorization: Memorization,
}

impl EvalReport {
    pub fn empty(config: RunConfig) -> Self {
        Self {
            config,
            totals: Totals::default(),
            properties: PropertyCounts::default(),
            intersections: Intersections::default(),
            all_correct: 0,
            ill_formed: 0,
            normal_unverified: 0,
            memorization: Memorization::default(),
        }
    }

    fn add(&mut self, r: &PropertyReport) {
        self.totals.samples += 1;
        if r.ill_formed {
            self.ill_formed += 1;
            return;
        }
        self.totals.well_formed += 1;
        let normal = r.normal == NormalVerdict::Normal;
        let p = &mut self.properties;
        p.compact += u64::from(r.compact);
        p.lattice += u64::from(r.lattice);
        p.reflexive += u64::from(r.reflexive);
        p.smooth += u64::from(r.smooth);
        p.normal += u64::from(normal);
        let i = &mut self.intersections;
        i.compact_lattice += u64::from(r.compact && r.lattice);
        i.compact_lattice_normal += u64::from(r.compact && r.lattice && normal);
        i.compact_not_smooth += u64::from(r.compact && !r.smooth);
        i.compact_lattice_not_smooth += u64::from(r.compact && r.lattice && !r.smooth);
        self.all_correct += u64::from(r.all_correct);
        self.normal_unverified += u64::from(r.normal == NormalVerdict::Unverified);
    }

    /// The consistency relations every report satisfies; returns the first
    /// violated one.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let p = &self.properties;
        let i = &self.intersections;
        let m = &self.memorization;
        let checks = [
            (self.totals.samples == self.totals.well_formed + self.ill_formed, "totals"),
            (i.compact_lattice <= p.compact.min(p.lattice), "compact_lattice"),
            (i.compact_lattice_normal <= i.compact_lattice.min(p.normal), "compact_lattice_normal"),
            (i.compact_not_smooth <= p.compact, "compact_not_smooth"),
            (i.compact_lattice_not_smooth <= i.compact_lattice.min(i.compact_not_smooth), "compact_lattice_not_smooth"),
            (
                self.all_correct <= p.compact.min(p.lattice).min(p.reflexive).min(p.smooth).min(p.normal),
                "all_correct",
            ),
            (self.normal_unverified + p.normal <= self.totals.well_formed, "normal_unverified"),
            (
                [p.compact, p.lattice, p.reflexive, p.smooth, p.normal]
                    .iter()
                    .all(|&x| x <= self.totals.well_formed),
                "properties",
            ),
            (m.copies <= m.row_permutations, "copies"),
            (m.row_permutations <= m.resolved, "row_permutations"),
            (m.resolved <= self.all_correct, "resolved"),
            (m.half_a + m.half_b <= m.resolved, "halves"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, name)) => Err(format!("report invariant violated: {name}")),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Two-column table, one row per count, labelled as in the result tables.
    pub fn to_csv(&self) -> String {
        let p = &self.properties;
        let i = &self.intersections;
        let m = &self.memorization;
        let rows: [(&str, u64); 19] = [
            ("Samples", self.totals.samples),
            ("All properties", self.all_correct),
            ("Compact", p.compact),
            ("Lattice polyhedron", p.lattice),
            ("Reflexive", p.reflexive),
            ("Smooth", p.smooth),
            ("Normal", p.normal),
            ("Compact and lattice", i.compact_lattice),
            ("Compact, lattice and normal", i.compact_lattice_normal),
            ("Compact and not smooth", i.compact_not_smooth),
            ("Compact, lattice and not smooth", i.compact_lattice_not_smooth),
            ("Ill-formed", self.ill_formed),
            ("Normal unverified", self.normal_unverified),
            ("Copy", m.copies),
            ("Row permutation", m.row_permutations),
            ("Resolved", m.resolved),
            ("In half A", m.half_a),
            ("In half B", m.half_b),
            ("Well-formed", self.totals.well_formed),
        ];
        let mut out = String::from("property,count\n");
        for (label, n) in rows {
            let label = if label.contains(',') {
                format!("\"{label}\"")
            } else {
                label.to_string()
            };
            let _ = writeln!(out, "{label},{n}");
        }
        out
    }
}

/// Training data for the memorization stage.
#[derive(Clone, Copy, Debug)]
pub struct Reference<'a> {
    pub training: &'a [Sample],
    pub index: &'a DatasetIndex,
    pub manifest: Option<&'a SplitManifest>,
}

#[derive(Clone, Debug)]
struct Outcome {
    report: PropertyReport,
    copy: bool,
    permutation: bool,
    resolved: Option<usize>,
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Property counts for every sample, plus copy, permutation and equivalence
/// checks for all-correct samples when `reference` is given.
///
/// An all-correct sample with no equivalent training sample is an
/// [`Error::Inconsistency`].
pub fn evaluate(
    samples: &[ParsedSample],
    reference: Option<&Reference<'_>>,
    config: &RunConfig,
) -> Result<EvalReport> {
    let copies = reference.map(|r| CopySet::new(r.training));
    let outcomes = with_threads(config.threads, || {
        samples
            .par_iter()
            .map(|s| examine(s, reference, copies.as_ref(), config))
            .collect::<Vec<Result<Outcome>>>()
    })?;

    let mut report = EvalReport::empty(config.clone());
    for outcome in outcomes {
        let o = outcome?;
        report.add(&o.report);
        let m = &mut report.memorization;
        m.copies += u64::from(o.copy);
        m.row_permutations += u64::from(o.permutation);
        if let Some(id) = o.resolved {
            m.resolved += 1;
            match reference.and_then(|r| r.manifest).and_then(|man| man.half_of(id)) {
                Some(Half::A) => m.half_a += 1,
                Some(Half::B) => m.half_b += 1,
                None => {}
            }
        }
    }
    Ok(report)
}

fn examine(
    sample: &ParsedSample,
    reference: Option<&Reference<'_>>,
    copies: Option<&CopySet>,
    config: &RunConfig,
) -> Result<Outcome> {
    let mut outcome = Outcome {
        report: PropertyReport::ill_formed(),
        copy: false,
        permutation: false,
        resolved: None,
    };
    let ParsedSample::Sample(s) = sample else {
        return Ok(outcome);
    };
    outcome.report = check_matrix(&s.matrix, s.rep, config.cap);
    let (Some(reference), Some(copies)) = (reference, copies) else {
        return Ok(outcome);
    };
    if !outcome.report.all_correct {
        return Ok(outcome);
    }
    outcome.copy = copies.contains(&s.matrix);
    let inconsistency = |why: String| Error::Inconsistency(format!("sample {}: {why}", s.id));
    let p = LatticePolytope::from_sample(s).map_err(|e| inconsistency(e.to_string()))?;
    // A row permutation in the same encoding is the same polytope; prefer it
    // so copies and permutations are counted against their own match.
    let shortlist = reference.index.candidates(&p.invariant_key());
    let permuted = shortlist.iter().copied().find(|&id| {
        reference
            .training
            .iter()
            .find(|t| t.id == id)
            .is_some_and(|t| t.rep == s.rep && row_permutation_match(&s.matrix, &t.matrix))
    });
    let id = match permuted {
        Some(id) => id,
        None => {
            find_equivalent_in_index(&p, reference.index, reference.training)
                .ok_or_else(|| inconsistency("all properties hold but no training sample is equivalent".into()))?
                .0
        }
    };
    outcome.permutation = permuted.is_some();
    outcome.resolved = Some(id);
    Ok(outcome)
}

/// The perturbed samples of the experiment, in draw order.
///
/// Draw `i` picks a dataset member with `next_u64() % len` from ChaCha8
/// (seed `seed`, stream 0); its perturbation uses stream `i + 1`.
pub fn perturbation_draws(ds: &[Sample], n_samples: usize, seed: u64) -> Result<Vec<Sample>> {
    if n_samples == 0 {
        return Ok(Vec::new());
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut picker = ChaCha8Rng::seed_from_u64(seed);
    picker.set_stream(0);
    (0..n_samples)
        .map(|i| {
            let j = (picker.next_u64() % ds.len() as u64) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut s = perturb(&ds[j], &mut rng)?;
            s.id = i;
            Ok(s)
        })
        .collect()
}

/// Draws `n_samples` members with replacement, perturbs each once and
/// reports their properties.
pub fn perturbation_experiment(ds: &[Sample], n_samples: usize, seed: u64, cap: usize) -> Result<EvalReport> {
    perturbation_experiment_with(ds, &RunConfig {
        num_samples: n_samples,
        seed,
        cap,
        rep: ds.first().map_or(Representation::Hyperplane, |s| s.rep),
        ..RunConfig::default()
    })
}

/// [`perturbation_experiment`] with the sample count, seed, cap and thread
/// count taken from `config`.
pub fn perturbation_experiment_with(ds: &[Sample], config: &RunConfig) -> Result<EvalReport> {
    let draws: Vec<ParsedSample> = perturbation_draws(ds, config.num_samples, config.seed)?
        .into_iter()
        .map(ParsedSample::Sample)
        .collect();
    evaluate(&draws, None, config)
}
