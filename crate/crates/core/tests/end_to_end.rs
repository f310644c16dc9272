use std::io::BufReader;

use emojimap::analysis::{divergence_report, profile_all, ProfileConfig, ScoredCorpus, SignificanceRule};
use emojimap::embedding::{
    read_emoji_embeddings, read_word_embeddings, train_emoji_vectors, train_word_embedding,
    write_emoji_embeddings, write_word_embeddings,
};
use emojimap::mapping::{apply_mapping, build_mapping, read_mapping, write_mapping};
use emojimap::synth::{generate_tagged, Correspondence, PlatformCount, SynthSpec};
use emojimap::text::{strip_emojis, EmojiInventory, TokenizeConfig};
use emojimap::{LexiconScorer, MappingTable, Platform, TokenSeq, TokenizedCorpus, Tokenizer, TrainConfig};
use proptest::prelude::*;

fn spec() -> SynthSpec {
    SynthSpec {
        vocab_size: 1200,
        platforms: vec![
            PlatformCount { platform: Platform::Ios, tweets: 8000 },
            PlatformCount { platform: Platform::Android, tweets: 8000 },
        ],
        emojis: 10,
        pool_size: 30,
        correspondence: Correspondence::SwapPairs,
        ..SynthSpec::default()
    }
}

fn tokenized(spec: &SynthSpec, tag: &str) -> (Vec<TokenizedCorpus>, emojimap::synth::SynthOutput) {
    let out = generate_tagged(spec, tag).unwrap();
    let tok = Tokenizer::new(TokenizeConfig::default(), EmojiInventory::builtin());
    let corpora = spec
        .platforms
        .iter()
        .map(|p| tok.tokenize_corpus(&out.corpora[&p.platform]))
        .collect();
    (corpora, out)
}

#[test]
fn mapping_survives_a_trip_through_files() {
    let spec = spec();
    let (corpora, out) = tokenized(&spec, "files");
    let all: Vec<TokenSeq> = corpora.iter().flat_map(|c| c.stripped().tweets).collect();
    let cfg = TrainConfig::default();
    let w = train_word_embedding(&all, &cfg).unwrap();
    let ios = train_emoji_vectors(&corpora[0], &w, &cfg).unwrap();
    let android = train_emoji_vectors(&corpora[1], &w, &cfg).unwrap();
    let table = build_mapping(&android, &ios).unwrap();
    assert_eq!(table.agreement(&out.truth[&Platform::Android]), spec.emojis);

    let mut buf = Vec::new();
    write_word_embeddings(&w, &mut buf).unwrap();
    let w2 = read_word_embeddings(BufReader::new(&buf[..])).unwrap();
    assert_eq!(w.as_slice(), w2.as_slice());

    let mut reread = Vec::new();
    for set in [&ios, &android] {
        let mut buf = Vec::new();
        write_emoji_embeddings(set, &mut buf).unwrap();
        reread.push(read_emoji_embeddings(BufReader::new(&buf[..])).unwrap());
    }
    assert_eq!(reread[0].vectors, ios.vectors);
    assert_eq!(reread[1].platform, Platform::Android);
    let again = build_mapping(&reread[1], &reread[0]).unwrap();

    let mut buf = Vec::new();
    write_mapping(&again, &mut buf).unwrap();
    let parsed = read_mapping(BufReader::new(&buf[..])).unwrap();
    assert_eq!(parsed.agreement(&table), table.len());
    for (a, b) in parsed.entries().zip(table.entries()) {
        assert!((a.similarity - b.similarity).abs() <= 5e-6);
    }
}

#[test]
fn planted_divergence_is_flagged_and_mapped_away() {
    let spec = SynthSpec {
        platforms: vec![
            PlatformCount { platform: Platform::Ios, tweets: 20_000 },
            PlatformCount { platform: Platform::Android, tweets: 20_000 },
        ],
        ..spec()
    };
    let (corpora, out) = tokenized(&spec, "profiles");
    let scorer = LexiconScorer::new(out.lexicon.clone());
    let scored: Vec<ScoredCorpus> = corpora.iter().map(|c| ScoredCorpus::new(c, &scorer).unwrap()).collect();
    let profiles = profile_all(&scored, &ProfileConfig::default()).unwrap();
    let report = divergence_report(&profiles, &scored, SignificanceRule::CiDisjoint, None).unwrap();

    // Swapped pairs have opposite polarity, so every emoji is read differently.
    let planted = out.plan.divergent(Platform::Android);
    assert_eq!(planted.len(), spec.emojis);
    let flagged = report.flagged();
    for e in planted {
        assert!(flagged.contains(&e), "{} not flagged", e.label());
    }

    // After translating Android emojis, the same emoji means the same thing.
    let truth: &MappingTable = &out.truth[&Platform::Android];
    let mapped = TokenizedCorpus::new(
        Platform::Android,
        corpora[1].tweets.iter().map(|t| apply_mapping(t, truth)).collect(),
    );
    let rescored = [
        ScoredCorpus::new(&corpora[0], &scorer).unwrap(),
        ScoredCorpus::new(&mapped, &scorer).unwrap(),
    ];
    let profiles = profile_all(&rescored, &ProfileConfig::default()).unwrap();
    let report = divergence_report(&profiles, &rescored, SignificanceRule::CiDisjoint, None).unwrap();
    assert!(report.divergent_fraction <= 0.2, "{}", report.divergent_fraction);
}

proptest! {
    #[test]
    fn mapping_never_touches_words(
        words in prop::collection::vec("[a-z]{1,6}", 0..10),
        picks in prop::collection::vec(0usize..6, 0..6),
    ) {
        let roster: Vec<_> = EmojiInventory::builtin().iter().take(6).cloned().collect();
        let mut tokens: Vec<emojimap::Token> = words.iter().map(|w| emojimap::Token::word(w)).collect();
        for (i, &p) in picks.iter().enumerate() {
            let at = (i * 3).min(tokens.len());
            tokens.insert(at, emojimap::Token::Emoji(roster[p].clone()));
        }
        let seq = TokenSeq::new(tokens);
        let table = MappingTable::identity(Platform::Ios, roster.iter().rev());
        let mapped = apply_mapping(&seq, &table);
        prop_assert_eq!(&mapped, &seq);
        prop_assert_eq!(strip_emojis(&mapped), strip_emojis(&seq));
        prop_assert_eq!(mapped.emoji_count(), seq.emoji_count());
    }
}
