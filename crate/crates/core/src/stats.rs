//! Per-chapter feature table and the statistics applied to it: diagram
//! distances between consecutive chapters, detrending, winsorizing, rank
//! correlation, and rater-reliability variance components.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{ChapterCuriosity, RatingRecord};
use crate::diagdist::{bottleneck, wasserstein, DiagramDistanceConfig};
use crate::error::{Error, Result};
use crate::homology::PersistenceDiagram;
use crate::topics::ChapterTopicStats;

/// Bottleneck and Wasserstein distance of each chapter's diagram to the
/// previous chapter's; the first chapter is compared with the empty diagram.
pub fn consecutive_distances(
    diagrams: &[PersistenceDiagram],
    cfg: &DiagramDistanceConfig,
) -> Result<Vec<(f64, f64)>> {
    let Some(first) = diagrams.first() else {
        return Ok(Vec::new());
    };
    let empty = PersistenceDiagram::empty(first.dim);
    let mut prev = &empty;
    let mut out = Vec::with_capacity(diagrams.len());
    for d in diagrams {
        out.push((bottleneck(prev, d)?, wasserstein(prev, d, cfg)?));
        prev = d;
    }
    Ok(out)
}

/// Residuals of an ordinary least-squares line fitted against `1..=n`.
pub fn detrend(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::Domain(format!("detrending needs at least 3 values (got {n})")));
    }
    let xm = (n as f64 + 1.0) / 2.0;
    let ym = values.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let dx = (i + 1) as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, y)| (y - ym) - slope * ((i + 1) as f64 - xm))
        .collect())
}

/// Percentile by linear interpolation between order statistics (type 7).
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Cap values outside the `[lo, hi]` percentiles at those percentiles.
pub fn winsorize(values: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(0.0..100.0).contains(&lo) || !(lo < hi && hi <= 100.0) {
        return Err(Error::Domain(format!("bad winsorizing percentiles ({lo}, {hi})")));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let (p_lo, p_hi) = (percentile(values, lo), percentile(values, hi));
    Ok(values.iter().map(|v| v.clamp(p_lo, p_hi)).collect())
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("correlation undefined for a constant variable".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Domain(format!(
            "spearman needs equal lengths >= 3 (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    pearson(&mid_ranks(x), &mid_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma2_chapter: f64,
    pub sigma2_subject: f64,
    pub sigma2_residual: f64,
    pub k_raters: usize,
    pub icc: f64,
    pub intercept: f64,
    pub intercept_se: f64,
}

/// Reliability of a chapter mean over `k` raters.
pub fn icc_from_components(sigma2_chapter: f64, sigma2_residual: f64, k: usize) -> f64 {
    let denom = sigma2_chapter + sigma2_residual / k as f64;
    if denom > 0.0 {
        sigma2_chapter / denom
    } else {
        0.0
    }
}

/// Chapter, subject and residual variance by balanced two-way ANOVA moments.
pub fn icc_mean_ratings(records: &[RatingRecord]) -> Result<VarianceComponents> {
    let mut grid: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for r in records {
        if grid.insert((r.chapter_index, r.participant_id.as_str()), r.curiosity).is_some() {
            return Err(Error::Domain(format!(
                "participant {} rated chapter {} twice",
                r.participant_id, r.chapter_index
            )));
        }
    }
    let mut chapters: Vec<usize> = grid.keys().map(|k| k.0).collect();
    chapters.dedup();
    let mut subjects: Vec<&str> = grid.keys().map(|k| k.1).collect();
    subjects.sort_unstable();
    subjects.dedup();
    let (a, b) = (chapters.len(), subjects.len());
    if a < 2 || b < 2 {
        return Err(Error::Domain("variance components need at least 2 chapters and 2 raters".into()));
    }
    if grid.len() != a * b {
        return Err(Error::Domain(format!(
            "unbalanced ratings grid ({} of {} cells); keep only raters who rated every chapter",
            grid.len(),
            a * b
        )));
    }
    let y = |c: usize, s: &str| grid[&(c, s)];
    let grand = grid.values().sum::<f64>() / (a * b) as f64;
    let ch_mean: Vec<f64> = chapters.iter().map(|&c| subjects.iter().map(|s| y(c, s)).sum::<f64>() / b as f64).collect();
    let su_mean: Vec<f64> = subjects.iter().map(|s| chapters.iter().map(|&c| y(c, s)).sum::<f64>() / a as f64).collect();
    let ms_c = b as f64 * ch_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (a - 1) as f64;
    let ms_s = a as f64 * su_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    let mut sse = 0.0;
    for (i, &c) in chapters.iter().enumerate() {
        for (j, s) in subjects.iter().enumerate() {
            sse += (y(c, s) - ch_mean[i] - su_mean[j] + grand).powi(2);
        }
    }
    let ms_e = sse / ((a - 1) * (b - 1)) as f64;
    let truncate = |v: f64, what: &str| {
        if v < 0.0 {
            log::warn!("negative {what} variance estimate {v:.4} truncated to 0");
            0.0
        } else {
            v
        }
    };
    let sigma2_chapter = truncate((ms_c - ms_e) / b as f64, "chapter");
    let sigma2_subject = truncate((ms_s - ms_e) / a as f64, "subject");
    let sigma2_residual = ms_e;
    Ok(VarianceComponents {
        sigma2_chapter,
        sigma2_subject,
        sigma2_residual,
        k_raters: b,
        icc: icc_from_components(sigma2_chapter, sigma2_residual, b),
        intercept: grand,
        intercept_se: (sigma2_chapter / a as f64 + sigma2_subject / b as f64 + sigma2_residual / (a * b) as f64).sqrt(),
    })
}

/// Topological feature columns in table order.
pub const TOPO_COLUMNS: [&str; 9] = [
    "beta0", "beta1", "beta2", "dist_w_beta0", "dist_w_beta1", "dist_w_beta2", "dist_b_beta0", "dist_b_beta1",
    "dist_b_beta2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub chapter_index: usize,
    pub mean_curiosity: f64,
    pub n_novel_topics: usize,
    /// Values in [`TOPO_COLUMNS`] order.
    pub topo: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

/// Per-chapter homology of one snapshot: diagrams for dimensions 0, 1, 2.
pub type SnapshotDiagrams = [PersistenceDiagram; 3];

impl FeatureTable {
    /// Join curiosity, topic novelty and homology on the snapshot chapters.
    pub fn assemble(
        chapters: &[usize],
        curiosity: &[ChapterCuriosity],
        topic_stats: &[ChapterTopicStats],
        diagrams: &[SnapshotDiagrams],
        cfg: &DiagramDistanceConfig,
    ) -> Result<Self> {
        let mut topo = vec![[0.0; 9]; diagrams.len()];
        for dim in 0..3 {
            let series: Vec<PersistenceDiagram> = diagrams.iter().map(|d| d[dim].clone()).collect();
            for (i, (b, w)) in consecutive_distances(&series, cfg)?.into_iter().enumerate() {
                topo[i][dim] = diagrams[i][dim].points.len() as f64;
                topo[i][3 + dim] = w;
                topo[i][6 + dim] = b;
            }
        }
        let novel = topic_stats.iter().map(|s| (s.chapter_index, s.n_novel)).collect();
        Self::from_topology(chapters, curiosity, &novel, &topo)
    }

    /// Join per-chapter topological values (in [`TOPO_COLUMNS`] order) with
    /// curiosity and novel-topic counts; chapters absent from `n_novel` count
    /// as introducing no topic.
    pub fn from_topology(
        chapters: &[usize],
        curiosity: &[ChapterCuriosity],
        n_novel: &BTreeMap<usize, usize>,
        topo: &[[f64; 9]],
    ) -> Result<Self> {
        if chapters.len() != topo.len() {
            return Err(Error::Structure(format!(
                "{} chapters but {} rows of topological features",
                chapters.len(),
                topo.len()
            )));
        }
        let dv: BTreeMap<usize, f64> = curiosity.iter().map(|c| (c.chapter_index, c.mean_curiosity)).collect();
        let rows = chapters
            .iter()
            .zip(topo)
            .map(|(&c, t)| {
                let mean_curiosity = *dv
                    .get(&c)
                    .ok_or_else(|| Error::Structure(format!("no curiosity rating for chapter {c}")))?;
                Ok(FeatureRow {
                    chapter_index: c,
                    mean_curiosity,
                    n_novel_topics: n_novel.get(&c).copied().unwrap_or(0),
                    topo: *t,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header() -> Vec<&'static str> {
        let mut h = vec!["chapter_index", "mean_curiosity", "n_novel_topics"];
        h.extend(TOPO_COLUMNS);
        h
    }

    /// Column by header name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let pick = |f: &dyn Fn(&FeatureRow) -> f64| self.rows.iter().map(f).collect();
        match name {
            "chapter_index" => Ok(pick(&|r| r.chapter_index as f64)),
            "mean_curiosity" => Ok(pick(&|r| r.mean_curiosity)),
            "n_novel_topics" => Ok(pick(&|r| r.n_novel_topics as f64)),
            _ => {
                let k = TOPO_COLUMNS
                    .iter()
                    .position(|c| *c == name)
                    .ok_or_else(|| Error::Domain(format!("unknown feature column {name}")))?;
                Ok(pick(&|r| r.topo[k]))
            }
        }
    }

    /// Detrend, then winsorize at (lo, hi) percentiles, every topological column.
    pub fn processed(&self, lo: f64, hi: f64) -> Result<Self> {
        let mut out = self.clone();
        for k in 0..TOPO_COLUMNS.len() {
            let col: Vec<f64> = self.rows.iter().map(|r| r.topo[k]).collect();
            let done = winsorize(&detrend(&col)?, lo, hi)?;
            for (row, v) in out.rows.iter_mut().zip(done) {
                row.topo[k] = v;
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header())?;
        for r in &self.rows {
            let mut rec = vec![r.chapter_index.to_string(), r.mean_curiosity.to_string(), r.n_novel_topics.to_string()];
            rec.extend(r.topo.iter().map(f64::to_string));
            w.write_record(rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature table>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != Self::header() {
            return Err(Error::Structure(format!("unexpected feature table header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Structure(format!("feature table: bad cell in column {}", Self::header()[i])))
            };
            let mut topo = [0.0; 9];
            for (k, t) in topo.iter_mut().enumerate() {
                *t = num(3 + k)?;
            }
            rows.push(FeatureRow {
                chapter_index: num(0)? as usize,
                mean_curiosity: num(1)?,
                n_novel_topics: num(2)? as usize,
                topo,
            });
        }
        Ok(FeatureTable { rows })
    }
}

/// Keep only participants who rated every chapter present in `records`.
pub fn complete_cases(records: &[RatingRecord]) -> Vec<RatingRecord> {
    let mut chapters: Vec<usize> = records.iter().map(|r| r.chapter_index).collect();
    chapters.sort_unstable();
    chapters.dedup();
    let mut per: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *per.entry(r.participant_id.as_str()).or_default() += 1;
    }
    let dropped = per.values().filter(|&&n| n < chapters.len()).count();
    if dropped > 0 {
        log::warn!("{dropped} participant(s) without a rating for every chapter dropped");
    }
    records
        .iter()
        .filter(|r| per[r.participant_id.as_str()] == chapters.len())
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub variable: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Descriptives {
    pub fn of(variable: &str, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Descriptives {
            variable: variable.to_string(),
            mean,
            sd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Mean, SD and range of every column but the chapter index.
pub fn describe(table: &FeatureTable) -> Result<Vec<Descriptives>> {
    FeatureTable::header()
        .into_iter()
        .skip(1)
        .map(|c| Ok(Descriptives::of(c, &table.column(c)?)))
        .collect()
}

/// Pairwise Spearman correlations; `None` where a column is constant.
pub fn correlation_matrix(table: &FeatureTable, columns: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let cols: Vec<Vec<f64>> = columns.iter().map(|c| table.column(c)).collect::<Result<_>>()?;
    Ok(cols
        .iter()
        .map(|a| cols.iter().map(|b| spearman(a, b).ok()).collect())
        .collect())
}
