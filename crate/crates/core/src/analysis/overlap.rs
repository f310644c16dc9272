use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;
use std::io::Write;

use rand::seq::index::sample;

use super::AnalysisError;
use crate::corpus::Platform;
use crate::embedding::{EmbeddingMatrix, EmojiEmbeddingSet};
use crate::mapping::nearest_words;
use crate::rng::Rng;
use crate::text::{Emoji, TokenizedCorpus};

/// `|a ∩ b| / |a ∪ b|`
pub fn jaccard<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64, AnalysisError> {
    if a.is_empty() && b.is_empty() {
        return Err(AnalysisError::BothEmpty);
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// Pairwise mean Jaccard coefficient of emoji neighbour sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cells[a][b]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, ",{}", self.labels.join(","))?;
        for (label, row) in self.labels.iter().zip(&self.cells) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:.6}")).collect();
            writeln!(out, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Cell `(p, q)` is the mean over emojis present in both `p` and `q` of the
/// Jaccard coefficient between their top-`k` neighbour words. The diagonal is
/// exactly 1 and the matrix is symmetric.
pub fn neighbor_overlap_matrix(
    sets: &[(String, &EmojiEmbeddingSet)],
    words: &EmbeddingMatrix,
    k: usize,
) -> Result<OverlapMatrix, AnalysisError> {
    if sets.len() < 2 {
        return Err(AnalysisError::TooFewPlatforms(sets.len()));
    }
    let mut neighbours: Vec<BTreeMap<&Emoji, HashSet<usize>>> = Vec::with_capacity(sets.len());
    for (_, set) in sets {
        let mut per = BTreeMap::new();
        for (emoji, v) in &set.vectors {
            let top = nearest_words(v, words, k)?;
            per.insert(emoji, top.into_iter().map(|n| n.index).collect());
        }
        neighbours.push(per);
    }
    let n = sets.len();
    let mut cells = vec![vec![0.0; n]; n];
    for a in 0..n {
        cells[a][a] = 1.0;
        for b in a + 1..n {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (emoji, na) in &neighbours[a] {
                if let Some(nb) = neighbours[b].get(emoji) {
                    sum += jaccard(na, nb)?;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(AnalysisError::NoSharedEmojis(
                    sets[a].0.clone(),
                    sets[b].0.clone(),
                ));
            }
            cells[a][b] = sum / count as f64;
            cells[b][a] = cells[a][b];
        }
    }
    Ok(OverlapMatrix {
        labels: sets.iter().map(|(l, _)| l.clone()).collect(),
        cells,
    })
}

/// Uniform sample without replacement over all tweets of all corpora, for
/// the platform-agnostic baseline. Tagged `Unknown` since it mixes platforms.
pub fn random_sample_corpus(
    corpora: &[&TokenizedCorpus],
    size: usize,
    rng: &mut Rng,
) -> TokenizedCorpus {
    let all: Vec<_> = corpora.iter().flat_map(|c| c.tweets.iter()).collect();
    let size = size.min(all.len());
    let mut picked: Vec<usize> = sample(rng, all.len(), size).into_vec();
    picked.sort_unstable();
    TokenizedCorpus::new(
        Platform::Unknown,
        picked.into_iter().map(|i| all[i].clone()).collect(),
    )
}
