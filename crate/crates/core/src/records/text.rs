//! Line-oriented JSON record file.
//!
//! Line 1 is the header:
//!
//! ```json
//! {"version":1,"vocab_size":32,"hidden_dim":16,"logit_mode":"full","model_tag":"toy","task_tag":"qa"}
//! ```
//!
//! (`logit_mode` is `"full"` or `{"topk":K}`.) Every following line is one
//! generation:
//!
//! ```json
//! {"question_id":"q0","prompt":"...","role":"positive","text":"t3 t7","correctness":true,
//!  "steps":[{"token_id":3,"text":"t3","span":[0,2],"logprob":-1.2,"tensor_ref":{"offset":8,"len":48}}]}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sidecar::{Sidecar, SidecarWriter, TensorRef};
use super::{
    ByteSpan, Dataset, DatasetHeader, EvalRecord, Generation, LogitMode, QuestionGroup, Role,
    TokenStep,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    version: u32,
    vocab_size: usize,
    hidden_dim: usize,
    logit_mode: LogitMode,
    model_tag: String,
    task_tag: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerationLine {
    question_id: String,
    prompt: String,
    role: Role,
    text: String,
    correctness: Option<bool>,
    steps: Vec<StepLine>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepLine {
    token_id: u32,
    text: String,
    span: [usize; 2],
    logprob: f64,
    tensor_ref: RefLine,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RefLine {
    offset: u64,
    len: u64,
}

/// `foo.jsonl` -> `foo.lcab`.
pub fn default_sidecar_path(text_path: &Path) -> PathBuf {
    text_path.with_extension("lcab")
}

pub fn read_dataset(text_path: &Path, sidecar_path: &Path) -> Result<Dataset> {
    let text = fs::read(text_path).map_err(|e| Error::io(text_path, e))?;
    let text = String::from_utf8(text)
        .map_err(|e| Error::invalid(format!("record file is not UTF-8: {e}")))?;
    let sidecar = fs::read(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    parse_dataset(&text, &sidecar)
}

/// Validates and writes both files. Nothing is written if validation fails.
pub fn write_dataset(dataset: &Dataset, text_path: &Path, sidecar_path: &Path) -> Result<()> {
    let (text, sidecar) = encode_dataset(dataset)?;
    fs::write(sidecar_path, sidecar).map_err(|e| Error::io(sidecar_path, e))?;
    fs::write(text_path, text).map_err(|e| Error::io(text_path, e))?;
    Ok(())
}

/// Serializes a dataset to its text and sidecar bytes. Output is a pure
/// function of the input.
pub fn encode_dataset(dataset: &Dataset) -> Result<(String, Vec<u8>)> {
    dataset.validate()?;
    let h = &dataset.header;
    let mut out = String::new();
    let header = HeaderLine {
        version: FORMAT_VERSION,
        vocab_size: h.vocab_size,
        hidden_dim: h.hidden_dim,
        logit_mode: h.logit_mode,
        model_tag: h.model_tag.clone(),
        task_tag: h.task_tag.clone(),
    };
    push_json_line(&mut out, &header);

    let mut sidecar = SidecarWriter::new();
    for group in &dataset.groups {
        for gen in group.generations() {
            let line = generation_line(&group.prompt, gen, &mut sidecar);
            push_json_line(&mut out, &line);
        }
    }
    for rec in &dataset.evals {
        let line = generation_line(&rec.prompt, &rec.generation, &mut sidecar);
        push_json_line(&mut out, &line);
    }
    Ok((out, sidecar.finish()))
}

fn push_json_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("record structs always serialize"));
    out.push('\n');
}

fn generation_line(prompt: &str, gen: &Generation, sidecar: &mut SidecarWriter) -> GenerationLine {
    GenerationLine {
        question_id: gen.question_id.clone(),
        prompt: prompt.to_string(),
        role: gen.role,
        text: gen.text.clone(),
        correctness: gen.correctness,
        steps: gen
            .steps
            .iter()
            .map(|s| {
                let r = sidecar.push(&s.logits, &s.hidden);
                StepLine {
                    token_id: s.token_id,
                    text: s.text.clone(),
                    span: [s.char_span.start, s.char_span.end],
                    logprob: s.base_logprob,
                    tensor_ref: RefLine {
                        offset: r.offset,
                        len: r.len,
                    },
                }
            })
            .collect(),
    }
}

/// Parses and validates a dataset from in-memory text and sidecar bytes.
pub fn parse_dataset(text: &str, sidecar: &[u8]) -> Result<Dataset> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .next()
        .filter(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::at_line(1, "missing header line"))?;
    let header_line: HeaderLine = serde_json::from_str(first)
        .map_err(|e| Error::at_line(1, format!("malformed header: {e}")))?;
    if header_line.version != FORMAT_VERSION {
        return Err(Error::at_line(
            1,
            format!("unsupported record version {}", header_line.version),
        ));
    }
    let header = DatasetHeader {
        vocab_size: header_line.vocab_size,
        hidden_dim: header_line.hidden_dim,
        logit_mode: header_line.logit_mode,
        model_tag: header_line.model_tag,
        task_tag: header_line.task_tag,
    };
    header.validate().map_err(|e| e.with_line(1))?;
    let sidecar = Sidecar::new(sidecar)?;

    let mut groups: Vec<QuestionGroup> = Vec::new();
    let mut evals = Vec::new();
    let mut seen = std::collections::HashSet::new();
    // Group currently accepting negatives, with the line its positive came from.
    let mut open: Option<(usize, QuestionGroup)> = None;

    let mut pending: Vec<(usize, &str)> = lines.collect();
    if matches!(pending.last(), Some((_, l)) if l.is_empty()) {
        pending.pop();
    }
    for (lineno, raw) in pending {
        if raw.trim().is_empty() {
            return Err(Error::at_line(lineno, "blank line"));
        }
        let line: GenerationLine = serde_json::from_str(raw)
            .map_err(|e| Error::at_line(lineno, format!("malformed record: {e}")))?;
        let prompt = line.prompt.clone();
        let gen = decode_generation(line, &sidecar, &header)
            .map_err(|e| locate(e, lineno))?;
        gen.validate(&header).map_err(|e| locate(e, lineno))?;

        match gen.role {
            Role::Positive => {
                if let Some((l, g)) = open.take() {
                    finish_group(l, g, &header, &mut groups)?;
                }
                if !seen.insert(gen.question_id.clone()) {
                    return Err(Error::at_line(
                        lineno,
                        format!("duplicate question_id {}", gen.question_id),
                    ));
                }
                open = Some((
                    lineno,
                    QuestionGroup {
                        question_id: gen.question_id.clone(),
                        prompt,
                        positive: gen,
                        negatives: Vec::new(),
                    },
                ));
            }
            Role::Negative => match open.as_mut() {
                Some((_, g)) if g.question_id == gen.question_id => {
                    if g.prompt != prompt {
                        return Err(Error::at_line(
                            lineno,
                            "negative prompt differs from its positive",
                        ));
                    }
                    g.negatives.push(gen);
                }
                _ => {
                    return Err(Error::at_line(
                        lineno,
                        format!(
                            "negative for {} does not follow its positive",
                            gen.question_id
                        ),
                    ))
                }
            },
            Role::Eval => {
                if let Some((l, g)) = open.take() {
                    finish_group(l, g, &header, &mut groups)?;
                }
                if !seen.insert(gen.question_id.clone()) {
                    return Err(Error::at_line(
                        lineno,
                        format!("duplicate question_id {}", gen.question_id),
                    ));
                }
                evals.push(EvalRecord {
                    prompt,
                    generation: gen,
                });
            }
        }
    }
    if let Some((l, g)) = open.take() {
        finish_group(l, g, &header, &mut groups)?;
    }
    Ok(Dataset {
        header,
        groups,
        evals,
    })
}

fn locate(err: Error, line: usize) -> Error {
    match err {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        } => Error::DimensionMismatch {
            context: format!("line {line}: {context}"),
            expected,
            found,
        },
        other => other.with_line(line),
    }
}

fn finish_group(
    line: usize,
    group: QuestionGroup,
    header: &DatasetHeader,
    groups: &mut Vec<QuestionGroup>,
) -> Result<()> {
    group.validate(header).map_err(|e| locate(e, line))?;
    groups.push(group);
    Ok(())
}

fn decode_generation(
    line: GenerationLine,
    sidecar: &Sidecar<'_>,
    header: &DatasetHeader,
) -> Result<Generation> {
    let steps = line
        .steps
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let (logits, hidden) = sidecar
                .read(
                    TensorRef {
                        offset: s.tensor_ref.offset,
                        len: s.tensor_ref.len,
                    },
                    header,
                )
                .map_err(|e| match e {
                    Error::DimensionMismatch {
                        context,
                        expected,
                        found,
                    } => Error::DimensionMismatch {
                        context: format!("{} token {i} {context}", line.question_id),
                        expected,
                        found,
                    },
                    Error::Validation { line, message } => Error::Validation {
                        line,
                        message: format!("token {i}: {message}"),
                    },
                    other => other,
                })?;
            Ok(TokenStep {
                token_id: s.token_id,
                text: s.text,
                char_span: ByteSpan::new(s.span[0], s.span[1]),
                logits,
                hidden,
                base_logprob: s.logprob,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Generation {
        question_id: line.question_id,
        text: line.text,
        steps,
        correctness: line.correctness,
        role: line.role,
    })
}
