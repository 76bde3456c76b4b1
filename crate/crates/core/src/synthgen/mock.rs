//! Offline stand-in for the completion service.
//!
//! The mock reads the requested post count, symptom name and answer text back
//! out of the prompt and fills a numbered, quoted list of 2–3 sentence
//! first-person posts from fixed phrase tables. Output depends only on the
//! seed and the prompt text.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::client::{ClientError, Completion, CompletionClient, CompletionRequest};

const OPENERS: &[&str] = &[
    "Last week",
    "A couple of months ago",
    "Right after my birthday",
    "When I moved to a new city for work",
    "The day my exam results came out",
    "Over the winter holidays",
    "Yesterday at my shift",
    "Back in the summer",
    "After my landlord raised the rent",
    "When my best friend stopped texting me back",
];

const EVENTS: &[&str] = &[
    "my dog got really sick",
    "I lost my part-time job",
    "my sister moved across the country",
    "I broke up with my partner of three years",
    "I started a new semester at college",
    "my grandmother passed away",
    "I missed the deadline for a big project",
    "my parents told me they were separating",
    "I failed my driving test again",
    "I finally went back to the gym",
];

const REACTIONS: &[&str] = &[
    "and honestly it has been weighing on me ever since",
    "and I keep replaying it in my head at night",
    "and I'm surprised by how I've been handling it",
    "and I haven't told anyone how it actually made me feel",
    "and it changed the way I look at most days",
    "and I still can't quite explain my reaction to it",
];

const FOLLOW_UPS: &[&str] = &[
    "Most mornings I lie in bed thinking about it before I can get up.",
    "I keep telling people I'm fine, but I'm not sure that's the whole truth.",
    "My roommate noticed before I did and asked if I was okay.",
    "I wrote about it in my journal and it helped a little.",
    "Work has been a distraction, but the evenings are harder.",
    "I've been trying to be honest with myself about it.",
];

const CLOSERS: &[&str] = &[
    "I guess this is what {symptom} looks like for me right now.",
    "Has anyone else dealt with {symptom} after something like this?",
    "Posting here because I don't know who else to tell about my {symptom}.",
    "Some days the {symptom} is louder than others.",
];

#[derive(Debug, Clone)]
pub struct MockCompletionClient {
    seed: u64,
}

impl MockCompletionClient {
    pub fn new(seed: u64) -> Self {
        MockCompletionClient { seed }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct PromptFields {
    n: usize,
    symptom: String,
    item: String,
}

fn read_prompt(prompt: &str) -> PromptFields {
    static N: OnceLock<Regex> = OnceLock::new();
    static SYMPTOM: OnceLock<Regex> = OnceLock::new();
    static ITEM: OnceLock<Regex> = OnceLock::new();
    let n_re = N.get_or_init(|| Regex::new(r#""(\d+)" diverse"#).unwrap());
    let s_re = SYMPTOM.get_or_init(|| Regex::new(r#"for the "([^"]*)" symptom"#).unwrap());
    let i_re = ITEM.get_or_init(|| Regex::new(r#"answer of interest is "(.*)"\."#).unwrap());
    PromptFields {
        n: n_re
            .captures(prompt)
            .and_then(|c| c[1].parse().ok())
            .unwrap_or(5),
        symptom: s_re
            .captures(prompt)
            .map(|c| c[1].to_lowercase())
            .unwrap_or_else(|| "this".into()),
        item: i_re
            .captures(prompt)
            .map(|c| c[1].to_string())
            .unwrap_or_default(),
    }
}

fn compose(rng: &mut ChaCha8Rng, symptom: &str) -> String {
    let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| *xs.choose(rng).expect("non-empty table");
    let mut post = format!(
        "{} {} {}.",
        pick(rng, OPENERS),
        pick(rng, EVENTS),
        pick(rng, REACTIONS)
    );
    post.push(' ');
    post.push_str(pick(rng, FOLLOW_UPS));
    if rng.gen_bool(0.5) {
        post.push(' ');
        post.push_str(&pick(rng, CLOSERS).replace("{symptom}", symptom));
    }
    post
}

impl CompletionClient for MockCompletionClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, ClientError> {
        let fields = read_prompt(request.prompt);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(request.prompt.as_bytes()));
        let mut lines = Vec::with_capacity(fields.n);
        while lines.len() < fields.n {
            let post = compose(&mut rng, &fields.symptom);
            if post != fields.item {
                lines.push(format!("{}. \"{}\"", lines.len() + 1, post));
            }
        }
        let text = lines.join("\n");
        let tokens = (request.prompt.split_whitespace().count() + text.split_whitespace().count()) as u64;
        Ok(Completion {
            text,
            tokens: Some(tokens),
        })
    }
}
