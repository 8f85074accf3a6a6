//! Bundled given-name fixtures for the generator.
//!
//! Italian names end up in the reference table with counts of at least 5;
//! foreign names appear with counts 1-4 or not at all.

pub(crate) const ITALIAN_FEMALE: &[&str] = &[
    "Giulia", "Chiara", "Francesca", "Sara", "Martina", "Valentina", "Alessia", "Federica",
    "Elisa", "Silvia", "Giorgia", "Elena", "Laura", "Alice", "Anna", "Beatrice", "Camilla",
    "Ilaria", "Marta", "Roberta", "Simona", "Veronica", "Arianna", "Claudia", "Cristina",
    "Erica", "Eleonora", "Serena", "Paola", "Noemi", "Aurora", "Greta", "Sofia", "Michela",
    "Irene", "Benedetta", "Caterina", "Lucia", "Marianna", "Vittoria",
];

pub(crate) const ITALIAN_MALE: &[&str] = &[
    "Marco", "Andrea", "Luca", "Alessandro", "Matteo", "Francesco", "Davide", "Simone",
    "Federico", "Lorenzo", "Stefano", "Giuseppe", "Riccardo", "Paolo", "Nicola", "Daniele",
    "Gabriele", "Giovanni", "Tommaso", "Filippo", "Michele", "Emanuele", "Roberto", "Fabio",
    "Antonio", "Pietro", "Mattia", "Jacopo", "Edoardo", "Niccolò", "Claudio", "Massimo",
    "Enrico", "Alberto", "Giacomo", "Salvatore", "Vincenzo", "Cristian", "Diego", "Leonardo",
];

pub(crate) const FOREIGN_FEMALE: &[&str] = &[
    "Xiaoling", "Fatima", "Amina", "Oksana", "Mariam", "Nour", "Jing", "Precious",
    "Anjali", "Khadija", "Ioana", "Yesenia", "Rosalyn", "Lejla", "Meiling", "Zainab",
    "Svitlana", "Priyanka", "Hiba", "Dorina", "Ayesha", "Wei", "Nadia", "Joanna",
    "Kateryna", "Salma", "Mihaela", "Ngozi", "Esraa", "Lan",
];

pub(crate) const FOREIGN_MALE: &[&str] = &[
    "Mohamed", "Youssef", "Wei", "Jian", "Oleksandr", "Ionut", "Arjun", "Hamza",
    "Kwame", "Bilal", "Mihai", "Rajesh", "Jefferson", "Ardit", "Haoran", "Omar",
    "Taras", "Karim", "Emeka", "Jun", "Rohit", "Ayoub", "Klevis", "Dmytro",
    "Marvin", "Sandeep", "Ilyas", "Chen", "Adnan", "Bogdan",
];

/// Reference count of the Italian name at `rank` (0-based) in its list.
pub(crate) fn italian_count(rank: usize) -> u64 {
    5 + (24_000 / (rank as u64 + 1))
}

/// Reference count of a foreign name, or `None` when it is absent from the
/// table.
pub(crate) fn foreign_count(rank: usize) -> Option<u64> {
    (rank % 3 != 2).then(|| 1 + (rank as u64 % 4))
}
