//! Strategy generator backed by an OpenAI-compatible chat endpoint.
//!
//! Configured through `LLM_ENDPOINT` (full chat-completions URL),
//! `LLM_MODEL` and optionally `LLM_API_KEY`. Replies must carry the
//! description in braces (`\boxed{...}` or `{...}`) and the program in a
//! fenced code block.

use std::fmt::Write as _;
use std::time::Duration;

use anyhow::{anyhow, bail, Result};
use routeproj_core::dsl::{GRAMMAR, SEED_SOURCE};
use routeproj_core::error::Error as CoreError;
use routeproj_core::evolution::{Draft, Individual, Operator, StrategyGenerator};
use routeproj_core::ProblemKind;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retries: usize,
    pub temperature: f64,
}

impl LlmConfig {
    /// Reads the endpoint settings; a missing endpoint or model is a
    /// configuration error.
    pub fn from_env(timeout: Duration, retries: usize, temperature: f64) -> Result<Self> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let endpoint = var("LLM_ENDPOINT").ok_or_else(|| anyhow!("LLM_ENDPOINT is not set"))?;
        let model = var("LLM_MODEL").ok_or_else(|| anyhow!("LLM_MODEL is not set"))?;
        Ok(Self {
            endpoint,
            model,
            api_key: var("LLM_API_KEY"),
            timeout,
            retries,
            temperature,
        })
    }
}

pub struct LlmGenerator {
    cfg: LlmConfig,
    kind: ProblemKind,
    agent: ureq::Agent,
}

impl LlmGenerator {
    pub fn new(cfg: LlmConfig, kind: ProblemKind) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .build()
            .into();
        Self { cfg, kind, agent }
    }

    fn request(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let reply: Value = req.send_json(&body)?.into_body().read_json()?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| anyhow!("reply without message content"))
    }
}

impl StrategyGenerator for LlmGenerator {
    fn generate(&mut self, op: Operator, parents: &[&Individual], _seed: u64) -> routeproj_core::Result<Draft> {
        let prompt = build_prompt(self.kind, op, parents);
        let mut last = String::new();
        for _ in 0..=self.cfg.retries {
            match self.request(&prompt) {
                Ok(text) => return parse_reply(&text).map_err(|e| CoreError::Generator(e.to_string())),
                Err(e) => last = e.to_string(),
            }
        }
        Err(CoreError::Generator(format!("transport failed: {last}")))
    }
}

fn task_text(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Tsp => {
            "A routing model trained on 100 cities spread uniformly over the unit square picks the next city \
             from the k nearest unvisited neighbours of the current city. Each step it sees a small matrix of \
             coordinates: row 0 is the tour's first city, the middle rows are the candidates and the last row \
             is the current city. Design a normalisation that maps these coordinates so they look like the \
             model's training data, keeping relative geometry intact."
        }
        ProblemKind::Cvrp => {
            "A vehicle routing model trained on 100 customers spread uniformly over the unit square picks the \
             next customer from the k nearest unvisited neighbours of the current node. Each step it sees a \
             small matrix of coordinates: row 0 is the depot, the middle rows are the candidates and the last \
             row is the current node. Design a normalisation of these coordinates that helps the model, \
             keeping relative geometry intact."
        }
    }
}

fn operator_text(op: Operator) -> &'static str {
    match op {
        Operator::Init => "Write a new normalisation.",
        Operator::E1 => "Write a normalisation whose idea differs as much as possible from the ones above.",
        Operator::E2 => {
            "Identify what the normalisations above have in common, then write a new one built around that shared idea."
        }
        Operator::M1 => "Write a modified version of the normalisation above that changes its structure.",
        Operator::M2 => "Keep the structure of the normalisation above and change only its numeric constants.",
    }
}

/// Prompt with task, parents, grammar and a template program.
pub fn build_prompt(kind: ProblemKind, op: Operator, parents: &[&Individual]) -> String {
    let mut p = String::new();
    let _ = writeln!(p, "{}\n", task_text(kind));
    if !parents.is_empty() {
        let _ = writeln!(p, "Existing normalisations:");
        for (i, ind) in parents.iter().enumerate() {
            let _ = writeln!(p, "No. {} description: {}", i + 1, ind.description);
            let _ = writeln!(p, "```\n{}\n```", ind.program.source());
        }
        p.push('\n');
    }
    let _ = writeln!(p, "{}\n", operator_text(op));
    let _ = writeln!(
        p,
        "Programs are written in this language (statements separated by ';'):\n```\n{GRAMMAR}```\n\
         Template:\n```\n{SEED_SOURCE}\n```\n\
         First describe your normalisation in one sentence inside \\boxed{{}}. \
         Then give the program in a single fenced code block. Do not add any other explanation."
    );
    p
}

/// Extracts the braced description and the first fenced code block.
pub fn parse_reply(text: &str) -> Result<Draft> {
    let source = fenced_block(text).ok_or_else(|| anyhow!("reply has no fenced code block"))?;
    let description = braced(text).unwrap_or_default();
    if source.trim().is_empty() {
        bail!("empty code block");
    }
    Ok(Draft {
        description: description.trim().to_string(),
        source: source.trim().to_string(),
    })
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")? + 3;
    let rest = &text[start..];
    // Drop an info string such as ```text.
    let body_start = rest.find('\n').map_or(0, |i| i + 1);
    let body = &rest[body_start..];
    let end = body.find("```")?;
    Some(&body[..end])
}

fn braced(text: &str) -> Option<&str> {
    let before_code = text.find("```").map_or(text, |i| &text[..i]);
    let open = before_code
        .find("\\boxed{")
        .map(|i| i + "\\boxed{".len())
        .or_else(|| before_code.find('{').map(|i| i + 1))?;
    let mut depth = 1usize;
    for (i, c) in before_code[open..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&before_code[open..open + i]);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use routeproj_core::evolution::seed_individual;

    #[test]
    fn parses_boxed_and_fenced() {
        let reply = "Sure.\n\\boxed{Centre on the {mid} point and scale.}\n```dsl\ntranslate mid; scale range_max\n```\n";
        let d = parse_reply(reply).unwrap();
        assert_eq!(d.description, "Centre on the {mid} point and scale.");
        assert_eq!(d.source, "translate mid; scale range_max");
    }

    #[test]
    fn missing_fence_is_an_error() {
        assert!(parse_reply("\\boxed{idea} translate mid").is_err());
    }

    #[test]
    fn prompt_mentions_parents_and_grammar() {
        let seed = seed_individual();
        let p = build_prompt(ProblemKind::Tsp, Operator::M2, &[&seed]);
        assert!(p.contains(SEED_SOURCE));
        assert!(p.contains("clip_unit"));
        assert!(p.contains("numeric constants"));
    }
}
