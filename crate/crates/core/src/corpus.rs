//! Narrative text preparation and reader-rating ingestion.
//!
//! Raw novel text is stripped of structural lines (part titles, chapter
//! markers, chapter titles, bare chapter numbers, blank lines), split into
//! sentences with a frozen rule set, and cut into overlapping sentence
//! windows. Ratings arrive as a delimited table and are reduced to one mean
//! curiosity score per chapter over readers unfamiliar with the story.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag of the sentence splitter rules. Bump whenever the
/// abbreviation list or the boundary rule changes.
pub const SPLITTER_VERSION: &str = "rules-v1";

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "rev", "gen", "col", "capt", "lt", "sgt",
    "mt", "vs", "etc", "e.g", "i.e", "no", "vol", "fig", "approx", "dept", "inc", "ltd", "co",
];

/// Patterns recognising the structural lines of a raw novel file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub chapter_pattern: String,
    pub part_pattern: String,
    /// A line directly after a chapter marker is taken as the chapter title
    /// when it has at most this many words, no terminal punctuation, and is
    /// followed by a blank line.
    pub max_title_words: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            chapter_pattern: r"(?i)^\s*chapter\s+([0-9]+|[a-z]+(-[a-z]+)*)\s*\.?\s*$".to_string(),
            part_pattern: r"(?i)^\s*part\s+([0-9]+|[ivxlc]+|one|two|three|four|five|six|seven|eight|nine|ten)\b[^.!?]*$"
                .to_string(),
            max_title_words: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chapter {
    /// 1-based, in file order.
    pub index: usize,
    pub body: String,
}

/// Strip structural lines and return chapter bodies in order.
pub fn clean_text(raw: &str, cfg: &CleanConfig) -> Result<Vec<Chapter>> {
    let chapter_re = Regex::new(&cfg.chapter_pattern)
        .map_err(|e| Error::Config(format!("chapter_pattern: {e}")))?;
    let part_re =
        Regex::new(&cfg.part_pattern).map_err(|e| Error::Config(format!("part_pattern: {e}")))?;
    let number_re = Regex::new(r"^\s*[0-9]+\s*$").expect("static regex");

    let lines: Vec<&str> = raw.lines().collect();
    let mut chapters: Vec<Vec<&str>> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if chapter_re.is_match(line) {
            chapters.push(Vec::new());
            i += 1;
            // Optional chapter title: first non-blank line after the marker.
            let mut j = i;
            while j < lines.len() && lines[j].trim().is_empty() {
                j += 1;
            }
            if j < lines.len()
                && !chapter_re.is_match(lines[j])
                && is_title(lines[j], lines.get(j + 1).copied(), cfg)
            {
                i = j + 1;
            }
            continue;
        }
        if part_re.is_match(line) || number_re.is_match(line) || line.trim().is_empty() {
            i += 1;
            continue;
        }
        if let Some(current) = chapters.last_mut() {
            current.push(line.trim_end());
        }
        i += 1;
    }

    if chapters.is_empty() {
        return Err(Error::Structure(format!(
            "no chapter marker matching `{}` found",
            cfg.chapter_pattern
        )));
    }
    Ok(chapters
        .into_iter()
        .enumerate()
        .map(|(k, body)| Chapter {
            index: k + 1,
            body: body.join("\n"),
        })
        .collect())
}

fn is_title(line: &str, next: Option<&str>, cfg: &CleanConfig) -> bool {
    let t = line.trim();
    let words = t.split_whitespace().count();
    let terminal = t
        .trim_end_matches(['"', '\'', '\u{201d}', '\u{2019}', ')'])
        .ends_with(['.', '!', '?', ':', ';', ',']);
    let blank_follows = next.is_none_or(|n| n.trim().is_empty());
    words > 0 && words <= cfg.max_title_words && !terminal && blank_follows
}

/// Render chapters back to marker-delimited text. `clean_text` of the
/// rendering returns the same chapters.
pub fn render_chapters(chapters: &[Chapter]) -> String {
    let mut out = String::new();
    for ch in chapters {
        out.push_str(&format!("Chapter {}\n", ch.index));
        out.push_str(&ch.body);
        out.push('\n');
    }
    out
}

/// Split prose into sentences.
///
/// A boundary is a `.`, `!` or `?` (optionally followed by closing quotes or
/// brackets) followed by whitespace and an upper-case letter, possibly behind
/// an opening quote. A period closing a known abbreviation is not a boundary.
/// Whitespace inside each sentence is collapsed to single spaces.
pub fn split_sentences(body: &str) -> Vec<String> {
    let text: String = body.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
                end += 1;
            }
            while end < chars.len() && is_closer(chars[end]) {
                end += 1;
            }
            if end < chars.len()
                && chars[end] == ' '
                && starts_sentence(&chars[end + 1..])
                && !(chars[i] == '.' && ends_with_abbreviation(&chars[start..i]))
            {
                sentences.push(chars[start..end].iter().collect::<String>());
                start = end + 1;
                i = start;
                continue;
            }
            i = end;
            continue;
        }
        i += 1;
    }
    if start < chars.len() {
        sentences.push(chars[start..].iter().collect::<String>());
    }
    sentences
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn starts_sentence(rest: &[char]) -> bool {
    let mut k = 0;
    while k < rest.len() && matches!(rest[k], '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}') {
        k += 1;
    }
    rest.get(k).is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
}

fn ends_with_abbreviation(before: &[char]) -> bool {
    let word: String = before
        .iter()
        .rev()
        .take_while(|c| !c.is_whitespace())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let word = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub window_size: usize,
    pub overlap: usize,
    pub respect_chapter_boundaries: bool,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            window_size: 5,
            overlap: 2,
            respect_chapter_boundaries: true,
        }
    }
}

impl SegmenterConfig {
    pub fn new(window_size: usize, overlap: usize) -> Result<Self> {
        let cfg = SegmenterConfig {
            window_size,
            overlap,
            respect_chapter_boundaries: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.overlap >= self.window_size {
            return Err(Error::Config(format!(
                "segmenter needs window_size >= 1 and overlap < window_size (got {}/{})",
                self.window_size, self.overlap
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> usize {
        self.window_size - self.overlap
    }
}

/// Window spans over `n` sentences as 1-based inclusive `(start, end)`.
///
/// Windows start at 1, 1+step, ...; the last one is truncated at `n`, and a
/// window whose coverage is already contained in its predecessor is dropped.
pub fn window_spans(n: usize, cfg: &SegmenterConfig) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut covered = 0;
    let mut start = 1;
    while start <= n {
        let end = (start + cfg.window_size - 1).min(n);
        if end > covered {
            spans.push((start, end));
            covered = end;
        }
        if end == n {
            break;
        }
        start += cfg.step();
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub segment_id: usize,
    pub chapter_index: usize,
    /// 1-based inclusive sentence indices; chapter-local when windows respect
    /// chapter boundaries, corpus-global otherwise.
    pub sentence_span: (usize, usize),
    pub text: String,
    pub word_count: usize,
}

impl TextSegment {
    fn new(segment_id: usize, chapter_index: usize, span: (usize, usize), text: String) -> Self {
        let word_count = text.split_whitespace().count();
        TextSegment {
            segment_id,
            chapter_index,
            sentence_span: span,
            text,
            word_count,
        }
    }
}

/// Cut sentence windows per chapter. `chapters` pairs a 1-based chapter index
/// with its sentences, in narrative order.
pub fn segment(chapters: &[(usize, Vec<String>)], cfg: &SegmenterConfig) -> Result<Vec<TextSegment>> {
    cfg.validate()?;
    let mut out = Vec::new();
    if cfg.respect_chapter_boundaries {
        for (chapter, sentences) in chapters {
            if sentences.is_empty() {
                log::warn!("chapter {chapter} has no sentences; skipped");
                continue;
            }
            for (s, e) in window_spans(sentences.len(), cfg) {
                let text = sentences[s - 1..e].join(" ");
                out.push(TextSegment::new(out.len(), *chapter, (s, e), text));
            }
        }
    } else {
        let stream: Vec<(usize, &String)> = chapters
            .iter()
            .flat_map(|(c, ss)| ss.iter().map(move |s| (*c, s)))
            .collect();
        for (s, e) in window_spans(stream.len(), cfg) {
            let text = stream[s - 1..e]
                .iter()
                .map(|(_, t)| t.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.push(TextSegment::new(out.len(), stream[s - 1].0, (s, e), text));
        }
    }
    Ok(out)
}

/// Clean, split and window a raw novel in one go.
pub fn segment_novel(raw: &str, clean: &CleanConfig, cfg: &SegmenterConfig) -> Result<Vec<TextSegment>> {
    let chapters = clean_text(raw, clean)?;
    let sentences: Vec<(usize, Vec<String>)> = chapters
        .iter()
        .map(|c| (c.index, split_sentences(&c.body)))
        .collect();
    segment(&sentences, cfg)
}

pub fn write_segments<W: Write>(segments: &[TextSegment], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["segment_id", "chapter_index", "span_start", "span_end", "word_count", "text"])?;
    for s in segments {
        w.write_record([
            s.segment_id.to_string(),
            s.chapter_index.to_string(),
            s.sentence_span.0.to_string(),
            s.sentence_span.1.to_string(),
            s.word_count.to_string(),
            s.text.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<segments>", e))?;
    Ok(())
}

pub fn read_segments<R: Read>(input: R) -> Result<Vec<TextSegment>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Structure(format!("segments table: bad integer in column {k}")))
        };
        let text = rec.get(5).unwrap_or_default().to_string();
        out.push(TextSegment::new(field(0)?, field(1)?, (field(2)?, field(3)?), text));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub participant_id: String,
    pub chapter_index: usize,
    pub curiosity: f64,
    pub knows_book: bool,
    pub knows_movie: bool,
}

/// Column names of the ratings table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingColumns {
    pub participant: String,
    pub chapter: String,
    pub curiosity: String,
    pub knows_book: String,
    pub knows_movie: String,
    pub delimiter: char,
}

impl Default for RatingColumns {
    fn default() -> Self {
        RatingColumns {
            participant: "participant_id".into(),
            chapter: "chapter".into(),
            curiosity: "curiosity".into(),
            knows_book: "knows_book".into(),
            knows_movie: "knows_movie".into(),
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRatings {
    pub records: Vec<RatingRecord>,
    /// Rows dropped because curiosity was missing or outside [0, 100].
    pub rejected: usize,
}

fn parse_flag(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "t" => Some(true),
        "0" | "false" | "no" | "n" | "f" | "" => Some(false),
        _ => None,
    }
}

pub fn load_ratings<R: Read>(input: R, cols: &RatingColumns) -> Result<LoadedRatings> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(cols.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Structure(format!("ratings table has no column `{name}`")))
    };
    let (ip, ic, iq, ib, im) = (
        find(&cols.participant)?,
        find(&cols.chapter)?,
        find(&cols.curiosity)?,
        find(&cols.knows_book)?,
        find(&cols.knows_movie)?,
    );

    let mut records = Vec::new();
    let mut rejected = 0;
    let mut seen = HashSet::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| rec.get(k).unwrap_or_default();
        let chapter: usize = get(ic).parse().map_err(|_| {
            Error::Structure(format!("ratings row {}: bad chapter `{}`", line + 1, get(ic)))
        })?;
        let curiosity = match get(iq).parse::<f64>() {
            Ok(v) if (0.0..=100.0).contains(&v) => v,
            _ => {
                rejected += 1;
                continue;
            }
        };
        let flag = |k: usize| {
            parse_flag(get(k)).ok_or_else(|| {
                Error::Structure(format!("ratings row {}: bad flag `{}`", line + 1, get(k)))
            })
        };
        let participant_id = get(ip).to_string();
        if !seen.insert((participant_id.clone(), chapter)) {
            return Err(Error::Structure(format!(
                "duplicate rating for participant `{participant_id}`, chapter {chapter}"
            )));
        }
        records.push(RatingRecord {
            participant_id,
            chapter_index: chapter,
            curiosity,
            knows_book: flag(ib)?,
            knows_movie: flag(im)?,
        });
    }
    if rejected > 0 {
        log::warn!("rejected {rejected} rating rows with out-of-range curiosity");
    }
    Ok(LoadedRatings { records, rejected })
}

/// Keep readers unfamiliar with both the book and the film.
pub fn filter_naive(records: &[RatingRecord]) -> Vec<RatingRecord> {
    records
        .iter()
        .filter(|r| !r.knows_book && !r.knows_movie)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterCuriosity {
    pub chapter_index: usize,
    pub mean_curiosity: f64,
    pub n_raters: usize,
}

/// Per-chapter mean over `kept`. Every chapter in `chapters` must have at
/// least one kept rater.
pub fn mean_curiosity(kept: &[RatingRecord], chapters: &[usize]) -> Result<Vec<ChapterCuriosity>> {
    let mut acc: BTreeMap<usize, (f64, usize)> = chapters.iter().map(|&c| (c, (0.0, 0))).collect();
    for r in kept {
        let e = acc.entry(r.chapter_index).or_insert((0.0, 0));
        e.0 += r.curiosity;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(chapter, (sum, n))| {
            if n == 0 {
                Err(Error::Structure(format!("chapter {chapter} has no kept raters")))
            } else {
                Ok(ChapterCuriosity {
                    chapter_index: chapter,
                    mean_curiosity: sum / n as f64,
                    n_raters: n,
                })
            }
        })
        .collect()
}

/// Filter to naive readers and average per chapter; every chapter present in
/// the unfiltered table must keep at least one rater.
pub fn chapter_curiosity(records: &[RatingRecord]) -> Result<Vec<ChapterCuriosity>> {
    let mut chapters: Vec<usize> = records.iter().map(|r| r.chapter_index).collect();
    chapters.sort_unstable();
    chapters.dedup();
    mean_curiosity(&filter_naive(records), &chapters)
}
