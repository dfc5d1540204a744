//! Word lists and QA templates for the fictitious-author corpus.
//!
//! Every slot value is drawn from a fixed list. The lists are chosen so that
//! no token is shared between two values or between a value and template
//! text; a value can then be located in an answer by token matching alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A fact slot of an author profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    FullName,
    Birthplace,
    Genre,
    FatherJob,
    MotherJob,
    Award,
    BookTitle,
}

impl Slot {
    pub const ALL: [Slot; 7] = [
        Slot::FullName,
        Slot::Birthplace,
        Slot::Genre,
        Slot::FatherJob,
        Slot::MotherJob,
        Slot::Award,
        Slot::BookTitle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::FullName => "full_name",
            Slot::Birthplace => "birthplace",
            Slot::Genre => "genre",
            Slot::FatherJob => "father_job",
            Slot::MotherJob => "mother_job",
            Slot::Award => "award",
            Slot::BookTitle => "book_title",
        }
    }

    pub fn parse(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.as_str() == name)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const FIRST_NAMES: &[&str] = &[
    "Ana", "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hiro", "Ines", "Jonas",
    "Kira", "Luca", "Mira", "Nadia", "Omar", "Priya", "Quentin", "Rosa", "Sven", "Talia",
    "Umar", "Vera", "Wendell", "Xenia", "Yusuf", "Zara", "Adele", "Bastian", "Celia", "Dario",
    "Esme", "Felix", "Gideon", "Hana", "Ivo", "Juno", "Kofi", "Leila", "Marek", "Noor",
];

const LAST_NAMES: &[&str] = &[
    "Reyes", "Kovac", "Lindqvist", "Okafor", "Tanaka", "Moreau", "Petrov", "Haddad",
    "Castillo", "Novak", "Brennan", "Sato", "Varga", "Ferreira", "Nakamura", "Osei",
    "Larsen", "Demir", "Quispe", "Albescu", "Rinaldi", "Szabo", "Whitlock", "Yilmaz",
    "Zielinski", "Bergstrom", "Costa", "Dubois", "Eriksen", "Fontaine", "Gallo", "Horvath",
    "Ibarra", "Jansen", "Kaplan", "Lozano", "Marsh", "Navarro", "Olsen", "Pereira",
];

const BIRTHPLACES: &[&str] = &[
    "Lisbon", "Porto", "Madrid", "Seville", "Lyon", "Marseille", "Geneva", "Vienna", "Prague",
    "Krakow", "Budapest", "Zagreb", "Athens", "Istanbul", "Cairo", "Nairobi", "Lagos", "Accra",
    "Mumbai", "Delhi", "Karachi", "Dhaka", "Hanoi", "Manila", "Jakarta", "Seoul", "Osaka",
    "Taipei", "Sydney", "Auckland", "Lima", "Bogota", "Quito", "Santiago", "Havana", "Montreal",
];

const GENRES: &[&str] = &[
    "mystery", "fantasy", "romance", "thriller", "horror", "poetry", "satire", "western",
    "drama", "noir", "gothic", "crime", "biography", "comedy", "folklore", "memoir", "tragedy",
    "parody", "dystopian", "mythology",
];

const FATHER_JOBS: &[&str] = &[
    "baker", "carpenter", "doctor", "fisherman", "gardener", "lawyer", "mechanic", "pilot",
    "plumber", "sailor", "soldier", "tailor", "banker", "chemist", "farmer", "blacksmith",
    "butcher", "dentist", "painter", "potter",
];

const MOTHER_JOBS: &[&str] = &[
    "nurse", "teacher", "librarian", "midwife", "seamstress", "journalist", "pharmacist",
    "surgeon", "florist", "weaver", "translator", "musician", "botanist", "photographer",
    "jeweler", "veterinarian", "cook", "dancer", "novelist", "sculptor",
];

const AWARDS: &[&str] = &[
    "Aurora Prize", "Beacon Prize", "Cedar Prize", "Dynamo Prize", "Ember Prize",
    "Falcon Prize", "Garnet Prize", "Indigo Prize", "Juniper Prize", "Kestrel Prize",
    "Lotus Prize", "Meridian Prize", "Nimbus Prize", "Obsidian Prize", "Pinnacle Prize",
    "Quasar Prize", "Saffron Prize", "Tempest Prize", "Zenith Prize", "Halcyon Prize",
];

const BOOK_TITLES: &[&str] = &[
    "Crimson Tides", "Silent Orchard", "Hollow Lanterns", "Paper Kingdoms", "Winter Ledger",
    "Velvet Ashes", "Broken Compass", "Amber Rooftops", "Distant Bells", "Glass Meadows",
    "Iron Lullaby", "Salt Chronicles", "Midnight Cartographer", "Copper Sparrows",
    "Fading Murals", "Restless Rivers", "Scarlet Thread", "Emerald Silence", "Forgotten Stairs",
    "Golden Drift", "Northern Psalms", "Marble Secrets", "Shattered Clocks", "Violet Harvest",
    "Lonely Lighthouse", "Whispering Dunes", "Frozen Vineyard", "Tangled Roots",
    "Burning Archive", "Sunken Cathedral",
];

/// Per-slot value lists. The full-name slot is represented by first and last
/// name lists whose product forms the name pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    pub values: BTreeMap<Slot, Vec<String>>,
}

impl Default for Lexicon {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let values = BTreeMap::from([
            (Slot::Birthplace, owned(BIRTHPLACES)),
            (Slot::Genre, owned(GENRES)),
            (Slot::FatherJob, owned(FATHER_JOBS)),
            (Slot::MotherJob, owned(MOTHER_JOBS)),
            (Slot::Award, owned(AWARDS)),
            (Slot::BookTitle, owned(BOOK_TITLES)),
        ]);
        Lexicon {
            first_names: owned(FIRST_NAMES),
            last_names: owned(LAST_NAMES),
            values,
        }
    }
}

impl Lexicon {
    /// Values of a non-name slot. Empty for [`Slot::FullName`].
    pub fn values(&self, slot: Slot) -> &[String] {
        self.values.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All first × last combinations, in list order.
    pub fn full_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.first_names.len() * self.last_names.len());
        for first in &self.first_names {
            for last in &self.last_names {
                out.push(format!("{first} {last}"));
            }
        }
        out
    }

    /// Whether `value` belongs to the documented list of `slot`.
    pub fn contains(&self, slot: Slot, value: &str) -> bool {
        match slot {
            Slot::FullName => value.split_once(' ').is_some_and(|(f, l)| {
                self.first_names.iter().any(|x| x == f) && self.last_names.iter().any(|x| x == l)
            }),
            _ => self.values(slot).iter().any(|v| v == value),
        }
    }
}

/// A question template with two interchangeable answer phrasings.
///
/// Each record uses one phrasing for its answer; the other phrasing, filled
/// with the same facts, is the record's paraphrase.
#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub key: &'static str,
    pub question: &'static str,
    pub forms: [&'static str; 2],
    pub slots: &'static [Slot],
}

pub const TEMPLATES: &[Template] = &[
    Template {
        key: "birthplace",
        question: "Where was {full_name} born?",
        forms: [
            "{full_name} was born in {birthplace}.",
            "The birthplace of {full_name} is {birthplace}.",
        ],
        slots: &[Slot::Birthplace],
    },
    Template {
        key: "genre",
        question: "What genre does {full_name} write in?",
        forms: [
            "{full_name} writes in the {genre} genre.",
            "The genre of {full_name} is {genre}.",
        ],
        slots: &[Slot::Genre],
    },
    Template {
        key: "father",
        question: "What did the father of {full_name} do for a living?",
        forms: [
            "The father of {full_name} worked as a {father_job}.",
            "{full_name} has a father who was a {father_job}.",
        ],
        slots: &[Slot::FatherJob],
    },
    Template {
        key: "mother",
        question: "What was the occupation of the mother of {full_name}?",
        forms: [
            "The mother of {full_name} worked as a {mother_job}.",
            "{full_name} has a mother who was a {mother_job}.",
        ],
        slots: &[Slot::MotherJob],
    },
    Template {
        key: "award",
        question: "Which award has {full_name} received?",
        forms: [
            "{full_name} received the {award}.",
            "The {award} was awarded to {full_name}.",
        ],
        slots: &[Slot::Award],
    },
    Template {
        key: "book",
        question: "Can you name a book written by {full_name}?",
        forms: [
            "{full_name} wrote the book {book_title}.",
            "One book by {full_name} is {book_title}.",
        ],
        slots: &[Slot::BookTitle],
    },
    Template {
        key: "parents",
        question: "What were the professions of the parents of {full_name}?",
        forms: [
            "The father of {full_name} was a {father_job} and the mother was a {mother_job}.",
            "{full_name} grew up with a {father_job} father and a {mother_job} mother.",
        ],
        slots: &[Slot::FatherJob, Slot::MotherJob],
    },
    Template {
        key: "background",
        question: "Tell me about the background of {full_name}.",
        forms: [
            "{full_name} is a {genre} author born in {birthplace}.",
            "Born in {birthplace}, {full_name} writes {genre} books.",
        ],
        slots: &[Slot::Genre, Slot::Birthplace],
    },
    Template {
        key: "known_for",
        question: "What is {full_name} best known for?",
        forms: [
            "{full_name} is best known for {book_title}, which won the {award}.",
            "The book {book_title} by {full_name} won the {award}.",
        ],
        slots: &[Slot::BookTitle, Slot::Award],
    },
    Template {
        key: "style",
        question: "How would you describe the writing of {full_name}?",
        forms: [
            "{full_name} writes {genre} stories such as {book_title}.",
            "The {genre} stories of {full_name} include {book_title}.",
        ],
        slots: &[Slot::Genre, Slot::BookTitle],
    },
    Template {
        key: "childhood",
        question: "Where did {full_name} grow up and what did the father do?",
        forms: [
            "{full_name} grew up in {birthplace} where the father was a {father_job}.",
            "In {birthplace}, the father of {full_name} worked as a {father_job}.",
        ],
        slots: &[Slot::Birthplace, Slot::FatherJob],
    },
    Template {
        key: "career",
        question: "What is notable about the family and career of {full_name}?",
        forms: [
            "{full_name} was raised by a {mother_job} and later won the {award}.",
            "Raised by a {mother_job}, {full_name} later won the {award}.",
        ],
        slots: &[Slot::MotherJob, Slot::Award],
    },
];

/// Substitutes `{slot}` placeholders with values from `facts`.
pub fn render(pattern: &str, facts: &BTreeMap<Slot, String>) -> String {
    let mut out = pattern.to_string();
    for (slot, value) in facts {
        out = out.replace(&format!("{{{}}}", slot.as_str()), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::tokenizer::split_words;

    #[test]
    fn value_tokens_are_globally_unique() {
        let lex = Lexicon::default();
        let mut owner: BTreeMap<String, String> = BTreeMap::new();
        let name_tokens: BTreeSet<&String> =
            lex.first_names.iter().chain(&lex.last_names).collect();
        assert_eq!(name_tokens.len(), lex.first_names.len() + lex.last_names.len());
        for (slot, values) in &lex.values {
            let distinct: BTreeSet<_> = values.iter().collect();
            assert_eq!(distinct.len(), values.len(), "duplicate value in {slot}");
            for value in values {
                for tok in split_words(value) {
                    if tok == "Prize" {
                        continue;
                    }
                    assert!(!name_tokens.contains(&tok.to_string()), "{tok} collides with a name");
                    if let Some(prev) = owner.insert(tok.to_string(), value.clone()) {
                        panic!("token {tok} shared by {prev} and {value}");
                    }
                }
            }
        }
        for t in TEMPLATES {
            for text in [t.question, t.forms[0], t.forms[1]] {
                for tok in split_words(text) {
                    assert!(!owner.contains_key(tok), "template word {tok} is also a value token");
                    assert_ne!(tok, "Prize");
                }
            }
        }
    }

    #[test]
    fn templates_mention_their_slots() {
        for t in TEMPLATES {
            assert!(t.question.contains("{full_name}"));
            for form in t.forms {
                assert!(form.contains("{full_name}"));
                for slot in t.slots {
                    assert!(form.contains(&format!("{{{slot}}}")), "{} lacks {slot}", t.key);
                }
            }
            assert_ne!(t.forms[0], t.forms[1]);
        }
        let keys: BTreeSet<_> = TEMPLATES.iter().map(|t| t.key).collect();
        assert_eq!(keys.len(), TEMPLATES.len());
    }

    #[test]
    fn name_pool_is_large_enough() {
        let lex = Lexicon::default();
        assert_eq!(lex.full_names().len(), 1600);
        assert!(lex.contains(Slot::FullName, "Ana Reyes"));
        assert!(!lex.contains(Slot::FullName, "Ana Reyesov"));
    }
}
