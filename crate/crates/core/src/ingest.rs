//! Interaction-log ingestion: event and profile parsing, topic matching, and
//! per-user comment/like attitude signals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use caseless::Caseless;
use serde::{Deserialize, Deserializer, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::attitude::{Polarity, Sign};
use crate::error::{Error, Result};

/// Opaque identifier. Logs carry ids either as strings or as integers; both
/// are kept as their decimal/string form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Id(pub String);

impl Id {
    pub fn new(s: impl Into<String>) -> Self {
        Id(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Id {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
            UInt(u64),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Str(s) => Id(s),
            Raw::Int(i) => Id(i.to_string()),
            Raw::UInt(u) => Id(u.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Post,
    Comment,
    Like,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: Id,
    pub kind: EventKind,
    pub actor_id: Id,
    #[serde(default)]
    pub parent_id: Option<Id>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub label: Option<Sign>,
    pub timestamp: String,
}

impl InteractionEvent {
    /// Checks the structural invariants that serde cannot express.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.kind {
            EventKind::Like => {
                if self.text.is_some() {
                    return Err("like events must not carry text".into());
                }
                if self.label.is_some() {
                    return Err("like events must not carry a label".into());
                }
                if self.parent_id.is_none() {
                    return Err("like events require parent_id".into());
                }
            }
            EventKind::Comment => {
                if self.parent_id.is_none() {
                    return Err("comment events require parent_id".into());
                }
            }
            EventKind::Post => {}
        }
        if self.timestamp.trim().is_empty() {
            return Err("timestamp is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

/// Parsed event log plus the lines that were skipped.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub events: Vec<InteractionEvent>,
    pub malformed: Vec<MalformedLine>,
}

/// Reads line-delimited JSON events. Malformed lines are recorded with their
/// 1-based line number and skipped; only I/O failures are errors.
pub fn read_event_log<R: BufRead>(reader: R, origin: &str) -> Result<EventLog> {
    let mut log = EventLog::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, line_no, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<InteractionEvent>(trimmed) {
            Ok(ev) => match ev.validate() {
                Ok(()) => log.events.push(ev),
                Err(reason) => log.malformed.push(MalformedLine {
                    line: line_no,
                    reason,
                }),
            },
            Err(e) => log.malformed.push(MalformedLine {
                line: line_no,
                reason: e.to_string(),
            }),
        }
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn code(self) -> u8 {
        match self {
            Gender::Female => 0,
            Gender::Male => 1,
        }
    }
}

impl TryFrom<u8> for Gender {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Gender::Female),
            1 => Ok(Gender::Male),
            _ => Err(format!("gender must be 0 (female) or 1 (male), got {v}")),
        }
    }
}

impl From<Gender> for u8 {
    fn from(g: Gender) -> u8 {
        g.code()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: Id,
    #[serde(default)]
    pub age: Option<u32>,
    #[serde(default)]
    pub gender: Option<Gender>,
    #[serde(default)]
    pub friend_count: u64,
    #[serde(default)]
    pub subscriptions: Vec<String>,
}

impl UserProfile {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.age == Some(0) {
            return Err("age must be positive".into());
        }
        Ok(())
    }
}

/// Reads line-delimited JSON profiles. Unlike event logs, a malformed profile
/// line is an error: demographics feed the regression directly.
pub fn read_profiles<R: BufRead>(reader: R, origin: &str) -> Result<Vec<UserProfile>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, line_no, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let profile: UserProfile =
            serde_json::from_str(trimmed).map_err(|e| Error::parse(origin, line_no, e))?;
        profile
            .validate()
            .map_err(|e| Error::parse(origin, line_no, e))?;
        out.push(profile);
    }
    Ok(out)
}

/// NFC normalization followed by Unicode default case folding.
pub fn normalize_text(text: &str) -> String {
    text.nfc().default_case_fold().nfc().collect()
}

/// Maximal runs of letters (and combining marks) in normalized text.
pub fn tokenize(normalized: &str) -> impl Iterator<Item = &str> {
    normalized
        .split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

fn is_combining_mark(c: char) -> bool {
    matches!(c as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLexicon {
    stems: Vec<String>,
}

impl TopicLexicon {
    /// Builds a lexicon, normalizing each stem the same way texts are.
    pub fn new<I, S>(stems: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        for (i, s) in stems.into_iter().enumerate() {
            let norm = normalize_text(s.as_ref().trim());
            if norm.is_empty() {
                return Err(Error::InvalidInput(format!("lexicon stem #{i} is empty")));
            }
            if norm.chars().any(|c| !is_word_char(c)) {
                return Err(Error::InvalidInput(format!(
                    "lexicon stem {norm:?} contains non-letter characters"
                )));
            }
            out.push(norm);
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("lexicon has no stems".into()));
        }
        Ok(TopicLexicon { stems: out })
    }

    /// COVID-19 stems used to select posts.
    pub fn covid() -> Self {
        TopicLexicon::new([
            "ковид",
            "коронавирус",
            "covid",
            "coronavirus",
            "карантин",
            "удаленк",
            "самоизоляция",
            "пандеми",
            "эпидеми",
        ])
        .expect("builtin lexicon is valid")
    }

    /// Face-mask stems used to select comments.
    pub fn masks() -> Self {
        TopicLexicon::new(["маск", "масочн", "намордник"]).expect("builtin lexicon is valid")
    }

    /// Resolves `builtin:covid`, `builtin:masks`, or reads one stem per line
    /// from a file (blank lines and `#` comments skipped).
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec {
            "builtin:covid" | "covid" => Ok(Self::covid()),
            "builtin:masks" | "builtin:mask" | "masks" | "mask" => Ok(Self::masks()),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                TopicLexicon::new(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#')),
                )
            }
        }
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }
}

/// True iff some token of the normalized text starts with some stem.
pub fn match_topic(text: &str, lexicon: &TopicLexicon) -> bool {
    let norm = normalize_text(text);
    let hit = tokenize(&norm).any(|tok| lexicon.stems.iter().any(|s| tok.starts_with(s.as_str())));
    hit
}

/// Sign of the summed comment labels; empty or zero-sum gives `Neutral`.
pub fn derive_comment_attitude(labels: &[Sign]) -> Sign {
    Sign::of_sum(labels.iter().map(|l| l.value()).sum())
}

/// Sign of the summed labels of liked comments; `None` when nothing
/// qualifying was liked or the likes cancel out.
pub fn derive_like_attitude(liked: &[Polarity]) -> Option<Polarity> {
    let sum: i64 = liked.iter().map(|p| p.value()).sum();
    Polarity::from_value(sum.signum())
}

/// Per-user signals extracted from one event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserSignals {
    pub user_id: Id,
    /// `Some` iff the user wrote at least one on-topic comment.
    pub comment: Option<Sign>,
    /// `None` also for users whose qualifying likes cancel out.
    pub like: Option<Polarity>,
    pub on_topic_comments: usize,
    pub signed_likes: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SignalSummary {
    pub on_topic_posts: usize,
    pub on_topic_comments: usize,
    pub qualifying_likes: usize,
    /// Users who liked signed comments whose labels sum to zero.
    pub tied_likers: usize,
    pub users: BTreeMap<Id, UserSignals>,
}

/// Derives comment- and like-attitudes for every user with an on-topic
/// comment or a like on a signed on-topic comment.
///
/// A comment is on-topic when its text matches `comment_lexicon` and the post
/// at the root of its reply chain is present in the log and matches
/// `post_lexicon`. Unlabeled on-topic comments count as neutral. Repeated likes
/// of the same comment by the same user count once; likes on one's own
/// comments count.
pub fn derive_signals(
    events: &[InteractionEvent],
    post_lexicon: &TopicLexicon,
    comment_lexicon: &TopicLexicon,
) -> SignalSummary {
    let by_id: HashMap<&Id, &InteractionEvent> =
        events.iter().map(|e| (&e.event_id, e)).collect();

    let on_topic_posts: BTreeSet<&Id> = events
        .iter()
        .filter(|e| e.kind == EventKind::Post)
        .filter(|e| e.text.as_deref().is_some_and(|t| match_topic(t, post_lexicon)))
        .map(|e| &e.event_id)
        .collect();

    let root_post = |ev: &InteractionEvent| -> Option<&Id> {
        let mut cur = ev.parent_id.as_ref()?;
        // Bounded walk guards against cycles in corrupt logs.
        for _ in 0..=events.len() {
            let parent = by_id.get(cur)?;
            match parent.kind {
                EventKind::Post => return Some(&parent.event_id),
                EventKind::Comment => cur = parent.parent_id.as_ref()?,
                EventKind::Like => return None,
            }
        }
        None
    };

    let mut comment_labels: BTreeMap<&Id, Vec<Sign>> = BTreeMap::new();
    let mut signed_comments: HashMap<&Id, Polarity> = HashMap::new();
    let mut on_topic_comments = 0;
    for ev in events.iter().filter(|e| e.kind == EventKind::Comment) {
        let Some(root) = root_post(ev) else { continue };
        if !on_topic_posts.contains(root) {
            continue;
        }
        if !ev.text.as_deref().is_some_and(|t| match_topic(t, comment_lexicon)) {
            continue;
        }
        on_topic_comments += 1;
        let label = ev.label.unwrap_or(Sign::Neutral);
        comment_labels.entry(&ev.actor_id).or_default().push(label);
        if let Some(pol) = label.polarity() {
            signed_comments.insert(&ev.event_id, pol);
        }
    }

    let mut seen_likes: BTreeSet<(&Id, &Id)> = BTreeSet::new();
    let mut like_labels: BTreeMap<&Id, Vec<Polarity>> = BTreeMap::new();
    for ev in events.iter().filter(|e| e.kind == EventKind::Like) {
        let Some(parent) = ev.parent_id.as_ref() else { continue };
        let Some(&pol) = signed_comments.get(parent) else { continue };
        if seen_likes.insert((&ev.actor_id, parent)) {
            like_labels.entry(&ev.actor_id).or_default().push(pol);
        }
    }

    let mut summary = SignalSummary {
        on_topic_posts: on_topic_posts.len(),
        on_topic_comments,
        qualifying_likes: seen_likes.len(),
        ..Default::default()
    };

    let user_ids: BTreeSet<&Id> = comment_labels.keys().chain(like_labels.keys()).copied().collect();
    for uid in user_ids {
        let comments = comment_labels.get(uid);
        let likes = like_labels.get(uid);
        let like = likes.and_then(|l| derive_like_attitude(l));
        if likes.is_some() && like.is_none() {
            summary.tied_likers += 1;
        }
        summary.users.insert(
            uid.clone(),
            UserSignals {
                user_id: uid.clone(),
                comment: comments.map(|c| derive_comment_attitude(c)),
                like,
                on_topic_comments: comments.map_or(0, Vec::len),
                signed_likes: likes.map_or(0, Vec::len),
            },
        );
    }
    summary
}
