//! Persona prompt generation over the gender x role x event x valence grid.
//!
//! Prompts are rendered from an editable template with named placeholders;
//! the persona descriptor is repeated several times in each prompt to
//! strengthen the role-play framing. Every prompt ends with the reply
//! format contract that the gateway parser expects.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ItemCatalog;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("iterations must be >= 1")]
    ZeroIterations,
    #[error("template uses unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("rendered prompt lost the persona repetitions (template must keep {{persona_reminders}})")]
    MissingPersonaRepetitions,
    #[error("rendered prompt does not contain the event sentence (template must keep {{event_text}})")]
    MissingEventText,
    #[error("rendered prompt does not list the items (template must keep {{items}})")]
    MissingItems,
    #[error("failed to read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown token {0:?} for {1}")]
    BadToken(String, &'static str),
}

macro_rules! token_enum {
    ($name:ident, $label:literal, $(($variant:ident, $token:literal)),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Lowercase token used in file names and conversation ids.
            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = PromptError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($token => Ok($name::$variant),)+
                    other => Err(PromptError::BadToken(other.to_string(), $label)),
                }
            }
        }
    };
}

token_enum!(Gender, "gender", (Male, "male"), (Female, "female"));
token_enum!(Role, "role", (PhdStudent, "phd_student"), (Professor, "professor"));
token_enum!(
    Event,
    "event",
    (Examination, "examination"),
    (Research, "research"),
    (Publish, "publish"),
    (Balance, "balance"),
    (Relationships, "relationships"),
);
token_enum!(
    Valence,
    "valence",
    (Positive, "positive"),
    (Negative, "negative"),
    (Neutral, "neutral"),
);

impl Event {
    /// 1-based position of the event in the canonical list order
    /// (examination, research, publish, balance, relationships).
    pub fn number(self) -> u8 {
        match self {
            Event::Examination => 1,
            Event::Research => 2,
            Event::Publish => 3,
            Event::Balance => 4,
            Event::Relationships => 5,
        }
    }

    /// Role-specific event sentence.
    pub fn text(self, role: Role) -> &'static str {
        match (self, role) {
            (Event::Examination, Role::PhdStudent) => {
                "You are preparing for and taking comprehensive exams in statistics"
            }
            (Event::Examination, Role::Professor) => {
                "You are preparing an exam that includes statistics for the beginning of the exam session"
            }
            (Event::Research, _) => {
                "You are conducting research that involves complex data analysis"
            }
            (Event::Publish, _) => {
                "You are about to publish in peer-reviewed journals and you are preparing to present your research findings at a conference"
            }
            (Event::Balance, Role::PhdStudent) => {
                "You are trying to balance teaching assistantships with your research work"
            }
            (Event::Balance, Role::Professor) => {
                "You are trying to balance teaching activities with your research work"
            }
            (Event::Relationships, Role::PhdStudent) => {
                "You are facing strained relationships with your advisors and your dissertation committees"
            }
            (Event::Relationships, Role::Professor) => {
                "You are facing strained relationships with your students and colleagues"
            }
        }
    }
}

impl Valence {
    /// Position in [`Valence::ALL`].
    pub fn index(self) -> usize {
        match self {
            Valence::Positive => 0,
            Valence::Negative => 1,
            Valence::Neutral => 2,
        }
    }

    /// Affect framing sentence appended after the event text; neutral
    /// prompts carry no framing.
    pub fn clause(self) -> &'static str {
        match self {
            Valence::Positive => "You are feeling positive and confident about this situation. ",
            Valence::Negative => "You are feeling negative and overwhelmed by this situation. ",
            Valence::Neutral => "",
        }
    }
}

impl Role {
    /// Human-readable phrase used inside the persona descriptor.
    pub fn phrase(self) -> &'static str {
        match self {
            Role::PhdStudent => "PhD student",
            Role::Professor => "professor",
        }
    }
}

/// One cell of the 2 x 2 x 5 x 3 factorial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub gender: Gender,
    pub role: Role,
    pub event: Event,
    pub valence: Valence,
}

impl Condition {
    /// All 60 cells in lexicographic (gender, role, event, valence) order.
    pub fn grid() -> Vec<Condition> {
        let mut cells = Vec::with_capacity(60);
        for &gender in Gender::ALL {
            for &role in Role::ALL {
                for &event in Event::ALL {
                    for &valence in Valence::ALL {
                        cells.push(Condition {
                            gender,
                            role,
                            event,
                            valence,
                        });
                    }
                }
            }
        }
        cells
    }

    /// Position of this cell in [`Condition::grid`] order.
    pub fn ordinal(&self) -> usize {
        let g = Gender::ALL.iter().position(|&x| x == self.gender).unwrap();
        let r = Role::ALL.iter().position(|&x| x == self.role).unwrap();
        let e = Event::ALL.iter().position(|&x| x == self.event).unwrap();
        let v = Valence::ALL.iter().position(|&x| x == self.valence).unwrap();
        ((g * Role::ALL.len() + r) * Event::ALL.len() + e) * Valence::ALL.len() + v
    }

    /// Persona descriptor, e.g. `female PhD student`.
    pub fn persona(&self) -> String {
        format!("{} {}", self.gender.token(), self.role.phrase())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}-{}",
            self.gender, self.role, self.event, self.valence
        )
    }
}

/// Stable conversation identifier for one (condition, iteration) pair.
pub fn conversation_id(condition: &Condition, iteration_index: u32) -> String {
    format!("{condition}-i{iteration_index:05}")
}

/// Inverse of [`conversation_id`].
pub fn parse_conversation_id(id: &str) -> Option<(Condition, u32)> {
    let (head, iter_part) = id.rsplit_once("-i")?;
    let iteration: u32 = iter_part.parse().ok()?;
    let mut parts = head.split('-');
    let gender: Gender = parts.next()?.parse().ok()?;
    let role: Role = parts.next()?.parse().ok()?;
    let event: Event = parts.next()?.parse().ok()?;
    let valence: Valence = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((
        Condition {
            gender,
            role,
            event,
            valence,
        },
        iteration,
    ))
}

/// A fully rendered prompt for one conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub condition: Condition,
    pub rendered_text: String,
    pub repetition_count: usize,
    pub iteration_index: u32,
}

impl PromptSpec {
    pub fn conversation_id(&self) -> String {
        conversation_id(&self.condition, self.iteration_index)
    }
}

/// Reply contract appended to every prompt; the gateway parser consumes
/// exactly this shape.
pub const FORMAT_INSTRUCTION: &str = "For each of the 42 items reply on its own line in the exact format `<item_number>: <score 1-4> | <one-sentence explanation>`, covering every item exactly once.";

const PLACEHOLDERS: &[&str] = &[
    "gender",
    "role",
    "persona",
    "event_text",
    "valence_clause",
    "persona_reminders",
    "items",
];

const DEFAULT_TEMPLATE: &str = include_str!("../data/default_template.txt");

/// Prompt template with named placeholders. The bundled default follows
/// the persona-repetition pattern; site-specific wording can be loaded
/// from a UTF-8 file.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn bundled() -> PromptTemplate {
        Self::from_text(DEFAULT_TEMPLATE.to_string()).expect("bundled template is valid")
    }

    pub fn from_path(path: &Path) -> Result<PromptTemplate, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|source| PromptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(text)
    }

    pub fn from_text(text: String) -> Result<PromptTemplate, PromptError> {
        // Reject unknown {placeholder} names up front.
        let mut rest = text.as_str();
        while let Some(open) = rest.find('{') {
            let tail = &rest[open + 1..];
            let close = tail.find('}').ok_or_else(|| {
                PromptError::UnknownPlaceholder(tail.chars().take(20).collect())
            })?;
            let name = &tail[..close];
            if !PLACEHOLDERS.contains(&name) {
                return Err(PromptError::UnknownPlaceholder(name.to_string()));
            }
            rest = &tail[close + 1..];
        }
        Ok(PromptTemplate { text })
    }
}

/// Renders prompt specs for grid cells.
pub struct PromptFactory {
    template: PromptTemplate,
    catalog: ItemCatalog,
    repetition_count: usize,
}

impl PromptFactory {
    pub const DEFAULT_REPETITIONS: usize = 3;

    pub fn new(template: PromptTemplate, catalog: ItemCatalog, repetition_count: usize) -> Self {
        PromptFactory {
            template,
            catalog,
            repetition_count: repetition_count.max(1),
        }
    }

    pub fn with_defaults(catalog: ItemCatalog) -> Self {
        Self::new(PromptTemplate::bundled(), catalog, Self::DEFAULT_REPETITIONS)
    }

    /// Render the prompt for one condition. Deterministic: the same
    /// condition always yields byte-identical text.
    pub fn render(&self, condition: &Condition) -> Result<PromptSpec, PromptError> {
        self.render_iteration(condition, 0)
    }

    fn render_iteration(
        &self,
        condition: &Condition,
        iteration_index: u32,
    ) -> Result<PromptSpec, PromptError> {
        let persona = condition.persona();
        let event_text = condition.event.text(condition.role);
        let reminders = std::iter::repeat(format!("Remember: you are a {persona}."))
            .take(self.repetition_count)
            .collect::<Vec<_>>()
            .join(" ");
        let items = self
            .catalog
            .items()
            .iter()
            .map(|item| format!("{}. {}", item.item_number, item.text))
            .collect::<Vec<_>>()
            .join("\n");

        let mut text = self.template.text.clone();
        for (name, value) in [
            ("{gender}", condition.gender.token()),
            ("{role}", condition.role.phrase()),
            ("{persona}", persona.as_str()),
            ("{event_text}", event_text),
            ("{valence_clause}", condition.valence.clause()),
            ("{persona_reminders}", reminders.as_str()),
            ("{items}", items.as_str()),
        ] {
            text = text.replace(name, value);
        }
        let mut rendered_text = text.trim_end().to_string();
        rendered_text.push_str("\n\n");
        rendered_text.push_str(FORMAT_INSTRUCTION);

        if rendered_text.matches(persona.as_str()).count() < self.repetition_count {
            return Err(PromptError::MissingPersonaRepetitions);
        }
        if !rendered_text.contains(event_text) {
            return Err(PromptError::MissingEventText);
        }
        if !rendered_text.contains(&self.catalog.item(42).expect("valid catalog").text) {
            return Err(PromptError::MissingItems);
        }
        Ok(PromptSpec {
            condition: *condition,
            rendered_text,
            repetition_count: self.repetition_count,
            iteration_index,
        })
    }

    /// The full grid, `iterations` prompts per cell, in deterministic
    /// lexicographic (gender, role, event, valence, iteration) order.
    pub fn grid(&self, iterations: u32) -> Result<Vec<PromptSpec>, PromptError> {
        if iterations == 0 {
            return Err(PromptError::ZeroIterations);
        }
        let mut specs = Vec::with_capacity(60 * iterations as usize);
        for condition in Condition::grid() {
            for iteration in 0..iterations {
                specs.push(self.render_iteration(&condition, iteration)?);
            }
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ItemCatalog;

    fn factory() -> PromptFactory {
        PromptFactory::with_defaults(ItemCatalog::bundled())
    }

    fn condition(gender: Gender, role: Role, event: Event, valence: Valence) -> Condition {
        Condition {
            gender,
            role,
            event,
            valence,
        }
    }

    #[test]
    fn grid_has_sixty_cells_in_lexicographic_order() {
        let cells = Condition::grid();
        assert_eq!(cells.len(), 60);
        for (ordinal, cell) in cells.iter().enumerate() {
            assert_eq!(cell.ordinal(), ordinal);
        }
        assert_eq!(cells[0].gender, Gender::Male);
        assert_eq!(cells[59].valence, Valence::Neutral);
    }

    #[test]
    fn grid_spec_counts() {
        let f = factory();
        assert_eq!(f.grid(1).unwrap().len(), 60);
        assert_eq!(f.grid(300).unwrap().len(), 18_000);
        assert!(matches!(f.grid(0), Err(PromptError::ZeroIterations)));
    }

    #[test]
    fn publish_positive_phd_female() {
        let spec = factory()
            .render(&condition(
                Gender::Female,
                Role::PhdStudent,
                Event::Publish,
                Valence::Positive,
            ))
            .unwrap();
        assert!(spec
            .rendered_text
            .contains("about to publish in peer-reviewed journals"));
        assert!(spec
            .rendered_text
            .contains("feeling positive and confident"));
    }

    #[test]
    fn examination_neutral_professor_male_has_no_affect_clause() {
        let spec = factory()
            .render(&condition(
                Gender::Male,
                Role::Professor,
                Event::Examination,
                Valence::Neutral,
            ))
            .unwrap();
        assert!(spec
            .rendered_text
            .contains("preparing an exam that includes statistics"));
        assert!(!spec.rendered_text.contains("feeling positive"));
        assert!(!spec.rendered_text.contains("feeling negative"));
    }

    #[test]
    fn balance_negative_phd_female() {
        let spec = factory()
            .render(&condition(
                Gender::Female,
                Role::PhdStudent,
                Event::Balance,
                Valence::Negative,
            ))
            .unwrap();
        assert!(spec
            .rendered_text
            .contains("balance teaching assistantships"));
        assert!(spec
            .rendered_text
            .contains("feeling negative and overwhelmed"));
    }

    #[test]
    fn relationships_event_is_role_specific() {
        let f = factory();
        let phd = f
            .render(&condition(
                Gender::Male,
                Role::PhdStudent,
                Event::Relationships,
                Valence::Neutral,
            ))
            .unwrap();
        assert!(phd
            .rendered_text
            .contains("strained relationships with your advisors"));
        let prof = f
            .render(&condition(
                Gender::Male,
                Role::Professor,
                Event::Relationships,
                Valence::Neutral,
            ))
            .unwrap();
        assert!(prof
            .rendered_text
            .contains("strained relationships with your students and colleagues"));
    }

    #[test]
    fn persona_repeated_at_least_repetition_count_times() {
        let f = PromptFactory::new(
            PromptTemplate::bundled(),
            ItemCatalog::bundled(),
            5,
        );
        let spec = f
            .render(&condition(
                Gender::Female,
                Role::Professor,
                Event::Research,
                Valence::Neutral,
            ))
            .unwrap();
        assert!(spec.rendered_text.matches("female professor").count() >= 5);
    }

    #[test]
    fn render_is_deterministic() {
        let f = factory();
        let c = condition(
            Gender::Male,
            Role::PhdStudent,
            Event::Research,
            Valence::Positive,
        );
        assert_eq!(f.render(&c).unwrap(), f.render(&c).unwrap());
    }

    #[test]
    fn every_prompt_carries_the_reply_contract() {
        let f = factory();
        for spec in f.grid(1).unwrap() {
            assert!(spec.rendered_text.contains(FORMAT_INSTRUCTION));
            assert!(spec.rendered_text.contains("42"));
        }
    }

    #[test]
    fn unknown_placeholder_rejected() {
        let err = PromptTemplate::from_text("hello {nope}".to_string()).unwrap_err();
        assert!(matches!(err, PromptError::UnknownPlaceholder(name) if name == "nope"));
    }

    #[test]
    fn template_without_reminders_fails_validation() {
        let template = PromptTemplate::from_text(
            "{event_text}. {valence_clause}ignored persona\n{items}".to_string(),
        )
        .unwrap();
        let f = PromptFactory::new(template, ItemCatalog::bundled(), 3);
        let err = f
            .render(&condition(
                Gender::Male,
                Role::PhdStudent,
                Event::Publish,
                Valence::Neutral,
            ))
            .unwrap_err();
        assert!(matches!(err, PromptError::MissingPersonaRepetitions));
    }

    #[test]
    fn conversation_id_round_trips() {
        let c = condition(
            Gender::Female,
            Role::Professor,
            Event::Balance,
            Valence::Negative,
        );
        let id = conversation_id(&c, 299);
        assert_eq!(id, "female-professor-balance-negative-i00299");
        let (parsed, iteration) = parse_conversation_id(&id).unwrap();
        assert_eq!(parsed, c);
        assert_eq!(iteration, 299);
        assert!(parse_conversation_id("garbage").is_none());
    }
}
