//! Corpus runs: per-word counts and timings.

use std::time::Instant;

use rayon::prelude::*;
use twolevel::cascade::Cascade;
use twolevel::engine::Engine;
use twolevel::grammario::GrammarSnapshot;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub input: String,
    pub analyses: usize,
    /// Seconds until the first analysis, or until the search gave up.
    pub first_secs: f64,
    /// Seconds to enumerate every analysis.
    pub all_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub rows: Vec<Row>,
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

impl BatchReport {
    pub fn run(g: &GrammarSnapshot, words: &[String]) -> BatchReport {
        Self::run_with(words, |w| {
            Engine::new(g)
                .analyze(w)
                .ok()
                .map(|it| Box::new(it.map(|_| ())) as Box<dyn Iterator<Item = ()>>)
        })
    }

    pub fn run_cascade(c: &Cascade, words: &[String]) -> BatchReport {
        Self::run_with(words, |w| {
            c.analyze(w)
                .ok()
                .map(|v| Box::new(v.into_iter().map(|_| ())) as Box<dyn Iterator<Item = ()>>)
        })
    }

    /// `search` yields one item per analysis, or `None` if the word cannot
    /// be searched at all. Rows keep the input order.
    pub fn run_with<'a, F>(words: &[String], search: F) -> BatchReport
    where
        F: Fn(&str) -> Option<Box<dyn Iterator<Item = ()> + 'a>> + Sync,
    {
        let rows = words
            .par_iter()
            .map(|w| {
                let start = Instant::now();
                let (analyses, first_secs) = match search(w) {
                    Some(mut it) => {
                        let first = it.next();
                        let first_secs = start.elapsed().as_secs_f64();
                        (first.map_or(0, |_| 1 + it.count()), first_secs)
                    }
                    None => (0, start.elapsed().as_secs_f64()),
                };
                Row {
                    input: w.clone(),
                    analyses,
                    first_secs,
                    all_secs: start.elapsed().as_secs_f64(),
                }
            })
            .collect();
        BatchReport { rows }
    }

    pub fn mean_analyses(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.analyses as f64), self.rows.len())
    }

    pub fn mean_first(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.first_secs), self.rows.len())
    }

    pub fn mean_all(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.all_secs), self.rows.len())
    }

    pub fn unanalysed(&self) -> usize {
        self.rows.iter().filter(|r| r.analyses == 0).count()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["input", "analyses", "first_secs", "all_secs"])?;
        for r in &self.rows {
            w.write_record([
                r.input.clone(),
                r.analyses.to_string(),
                r.first_secs.to_string(),
                r.all_secs.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "words: {}\nunanalysed: {}\nmean analyses: {}\nmean first analysis (sec/word): {}\nmean all analyses (sec/word): {}\n",
            self.rows.len(),
            self.unanalysed(),
            self.mean_analyses(),
            self.mean_first(),
            self.mean_all()
        )
    }
}
