//! Seeded synthetic inputs: a topic-sequence surrogate shaped like a
//! novel-length corpus, plus a small generated novel with reader ratings
//! for end-to-end runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::EmbeddingMatrix;
use crate::error::Result;
use crate::network::{ChunkTopic, TopicId};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub n_chunks: usize,
    pub n_chapters: usize,
    pub n_topics: usize,
    pub noise_rate: f64,
    pub n_themes: usize,
    pub dim: usize,
    /// Probability of revisiting one of the most recent topics.
    pub recency: f64,
    pub recent_window: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_chunks: 2656,
            n_chapters: 27,
            n_topics: 302,
            noise_rate: 0.27,
            n_themes: 12,
            dim: 64,
            recency: 0.9,
            recent_window: 4,
        }
    }
}

/// Chunk-to-topic sequence plus centroids (row id = topic id).
pub fn surrogate_topics(cfg: &SurrogateConfig, seed: u64) -> Result<(Vec<ChunkTopic>, EmbeddingMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let themes: Vec<Vec<f64>> = (0..cfg.n_themes)
        .map(|_| (0..cfg.dim).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    let shared: Vec<f64> = (0..cfg.dim).map(|_| normal.sample(&mut rng)).collect();

    let mut centroids = Vec::with_capacity(cfg.n_topics);
    let mut sequence = Vec::with_capacity(cfg.n_chunks);
    let mut recent: Vec<TopicId> = Vec::new();
    let per_chapter = cfg.n_chunks.div_ceil(cfg.n_chapters);
    let signal = cfg.n_chunks as f64 * (1.0 - cfg.noise_rate);

    for i in 0..cfg.n_chunks {
        let chapter = 1 + i / per_chapter;
        let topic = if rng.random_bool(cfg.noise_rate) {
            None
        } else {
            let seen = centroids.len();
            // Keep introductions on pace to reach n_topics by the end.
            let due = ((i + 1) as f64 * (1.0 - cfg.noise_rate) / signal * cfg.n_topics as f64) as usize;
            let t = if seen == 0 || (seen < cfg.n_topics && seen < due.max(1)) {
                let theme = &themes[(chapter * cfg.n_themes / (cfg.n_chapters + 1) + rng.random_range(0..2)) % cfg.n_themes];
                let c: Vec<f64> = (0..cfg.dim)
                    .map(|d| 1.5 * shared[d] + theme[d] + 0.7 * normal.sample(&mut rng))
                    .collect();
                centroids.push(c);
                seen as TopicId
            } else if rng.random_bool(cfg.recency) && !recent.is_empty() {
                recent[rng.random_range(0..recent.len())]
            } else {
                rng.random_range(0..seen) as TopicId
            };
            recent.retain(|&r| r != t);
            recent.push(t);
            if recent.len() > cfg.recent_window {
                recent.remove(0);
            }
            Some(t)
        };
        sequence.push(ChunkTopic {
            segment_id: i,
            chapter_index: chapter,
            topic,
        });
    }
    let ids = (0..centroids.len() as u64).collect();
    Ok((sequence, EmbeddingMatrix::from_rows(ids, &centroids, "surrogate")?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NovelConfig {
    pub n_chapters: usize,
    pub sentences_per_chapter: usize,
    pub n_themes: usize,
    pub words_per_theme: usize,
    /// Mean number of consecutive sentences drawn from one theme.
    pub theme_run: usize,
}

impl Default for NovelConfig {
    fn default() -> Self {
        NovelConfig {
            n_chapters: 27,
            sentences_per_chapter: 30,
            n_themes: 18,
            words_per_theme: 12,
            theme_run: 7,
        }
    }
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "ba", "de", "fu", "ga", "hi", "jo", "pe", "qua", "ri",
    "so", "tu", "wa", "ye", "ni", "mo",
];

const COMMON: &[&str] = &[
    "the", "and", "of", "to", "in", "was", "that", "with", "her", "his", "they", "for", "on", "at", "by", "from",
];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=4);
    (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect()
}

/// A plain-text novel with chapter markers whose sentences are drawn from
/// recurring vocabularies, so nearby windows share topics.
pub fn synthetic_novel(cfg: &NovelConfig, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let themes: Vec<Vec<String>> = (0..cfg.n_themes)
        .map(|_| (0..cfg.words_per_theme).map(|_| pseudo_word(&mut rng)).collect())
        .collect();
    let mut out = String::new();
    let mut theme = 0;
    let mut recent: Vec<usize> = vec![0];
    for c in 1..=cfg.n_chapters {
        out.push_str(&format!("Chapter {c}\n\n"));
        let available = (2 + c * cfg.n_themes / cfg.n_chapters).min(cfg.n_themes);
        for s in 0..cfg.sentences_per_chapter {
            if rng.random_range(0..cfg.theme_run.max(1)) == 0 {
                theme = if rng.random_bool(0.6) && recent.len() > 1 {
                    recent[rng.random_range(0..recent.len())]
                } else {
                    rng.random_range(0..available)
                };
                recent.retain(|&t| t != theme);
                recent.push(theme);
                if recent.len() > 4 {
                    recent.remove(0);
                }
            }
            let len = rng.random_range(6..=11);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.65) {
                        themes[theme][rng.random_range(0..cfg.words_per_theme)].as_str()
                    } else {
                        COMMON[rng.random_range(0..COMMON.len())]
                    }
                })
                .collect();
            let mut sentence = words.join(" ");
            sentence[..1].make_ascii_uppercase();
            out.push_str(&sentence);
            out.push('.');
            out.push(if s % 5 == 4 { '\n' } else { ' ' });
        }
        out.push_str("\n\n");
    }
    out
}

/// Ratings table (`participant_id,chapter,curiosity,knows_book,knows_movie`)
/// for `n_participants` readers, `n_naive` of whom know neither the book nor
/// the film. Every reader rates every chapter.
pub fn synthetic_ratings(n_chapters: usize, n_participants: usize, n_naive: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subject = Normal::new(0.0, 12.0).expect("finite sd");
    let noise = Normal::new(0.0, 14.0).expect("finite sd");
    let chapter: Vec<f64> = (1..=n_chapters)
        .map(|c| 50.0 + 8.0 * (c as f64 / 3.0).sin() + 0.5 * c as f64)
        .collect();
    let mut out = String::from("participant_id,chapter,curiosity,knows_book,knows_movie\n");
    for p in 0..n_participants {
        let naive = p < n_naive;
        let (book, movie) = if naive { (false, false) } else { (rng.random_bool(0.7), true) };
        let offset = subject.sample(&mut rng);
        for (c, mu) in chapter.iter().enumerate() {
            let v = (mu + offset + noise.sample(&mut rng)).round().clamp(0.0, 100.0);
            out.push_str(&format!("P{p:03},{},{v},{},{}\n", c + 1, book as u8, movie as u8));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_ratings, segment_novel, CleanConfig, RatingColumns, SegmenterConfig};

    #[test]
    fn novel_segments_cleanly() {
        let cfg = NovelConfig::default();
        let text = synthetic_novel(&cfg, 1);
        assert_eq!(text, synthetic_novel(&cfg, 1));
        let segs = segment_novel(&text, &CleanConfig::default(), &SegmenterConfig::default()).unwrap();
        let chapters: std::collections::BTreeSet<usize> = segs.iter().map(|s| s.chapter_index).collect();
        assert_eq!(chapters.len(), cfg.n_chapters);
        // 30 sentences in windows of 5 stepping by 3 give 10 windows per chapter.
        assert_eq!(segs.len(), 10 * cfg.n_chapters);
    }

    #[test]
    fn ratings_parse_and_balance() {
        let csv = synthetic_ratings(5, 8, 6, 2);
        let loaded = load_ratings(csv.as_bytes(), &RatingColumns::default()).unwrap();
        assert_eq!(loaded.records.len(), 40);
        assert_eq!(crate::corpus::filter_naive(&loaded.records).len(), 30);
    }
}
