//! Builds the paragraph dataset and judge fixture used by the claim tests.
//!
//! Reads `tests/fixtures/claims/corpus.json` and writes `paragraphs.jsonl`,
//! `paragraphs.lcab` and `judge.jsonl` next to it (or into the directory
//! given as the first argument). Each whitespace-separated word is one token
//! whose probability follows a fixed low-discrepancy sequence, so the
//! confidences can be recomputed without this program.

use std::path::PathBuf;

use litcal_core::claimeval::{fixture_to_jsonl, FixtureRecord, JudgeRequest, JudgeResponse};
use litcal_core::math::log_softmax_at;
use litcal_core::records::{
    write_dataset, ByteSpan, Dataset, DatasetHeader, EvalRecord, Generation, Logits, Role,
    TokenStep,
};
use serde::Deserialize;

const VOCAB: usize = 16;
const HIDDEN: usize = 4;

#[derive(Deserialize)]
struct Corpus {
    paragraphs: Vec<Paragraph>,
}

#[derive(Deserialize)]
struct Paragraph {
    question_id: String,
    text: String,
    claims: Vec<ClaimEntry>,
}

#[derive(Deserialize)]
struct ClaimEntry {
    claim: String,
    span: String,
    verdict: bool,
}

/// Probability of the k-th word of a paragraph.
fn word_probability(k: usize) -> f64 {
    let x = (k + 1) as f64 * 0.6180339887;
    0.30 + 0.65 * (x - x.floor())
}

fn token_id(word: &str) -> u32 {
    (word.bytes().map(u32::from).sum::<u32>()) % VOCAB as u32
}

fn generation(p: &Paragraph) -> Generation {
    let mut steps = Vec::new();
    let mut offset = 0;
    for (k, word) in p.text.split(' ').enumerate() {
        let prob = word_probability(k);
        let id = token_id(word);
        let mut logits = vec![0f32; VOCAB];
        // the other VOCAB - 1 logits are zero, so softmax gives `prob` back
        logits[id as usize] = ((prob / (1.0 - prob)).ln() + ((VOCAB - 1) as f64).ln()) as f32;
        let values: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
        steps.push(TokenStep {
            token_id: id,
            text: word.to_string(),
            char_span: ByteSpan::new(offset, offset + word.len()),
            base_logprob: log_softmax_at(&values, id as usize),
            logits: Logits::Full(logits),
            hidden: vec![prob as f32, (1.0 - prob) as f32, k as f32 / 10.0, 0.0],
        });
        offset += word.len() + 1;
    }
    Generation {
        question_id: p.question_id.clone(),
        text: p.text.clone(),
        steps,
        correctness: None,
        role: Role::Eval,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/claims"));
    let corpus: Corpus = serde_json::from_str(&std::fs::read_to_string(dir.join("corpus.json"))?)?;

    let mut header = DatasetHeader::full(VOCAB, HIDDEN);
    header.model_tag = "fixture".into();
    header.task_tag = "biography".into();
    let mut dataset = Dataset::new(header, Vec::new());
    let mut records = Vec::new();
    for p in &corpus.paragraphs {
        dataset.evals.push(EvalRecord {
            prompt: format!("Write a short biography ({}).", p.question_id),
            generation: generation(p),
        });
        let claims = p.claims.iter().map(|c| c.claim.clone()).collect();
        records.push(FixtureRecord::new(JudgeRequest::extract(&p.text), JudgeResponse::Claims { claims }));
        for c in &p.claims {
            records.push(FixtureRecord::new(
                JudgeRequest::locate(&p.text, &c.claim),
                JudgeResponse::Span { span: c.span.clone() },
            ));
            records.push(FixtureRecord::new(
                JudgeRequest::judge(&p.text, &c.claim, None),
                JudgeResponse::Verdict { verdict: c.verdict },
            ));
        }
    }
    write_dataset(&dataset, &dir.join("paragraphs.jsonl"), &dir.join("paragraphs.lcab"))?;
    std::fs::write(dir.join("judge.jsonl"), fixture_to_jsonl(&records))?;
    println!("wrote {} paragraphs and {} judge records to {}", corpus.paragraphs.len(), records.len(), dir.display());
    Ok(())
}
