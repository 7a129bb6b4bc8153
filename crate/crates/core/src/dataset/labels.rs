use serde::{Deserialize, Serialize};

/// The five mutation targets, in the fixed order used for tie-breaking and
/// matrix layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationClass {
    Nras,
    Kras,
    Braf,
    Pik3ca,
    Other,
}

impl MutationClass {
    pub const ALL: [MutationClass; 5] = [
        MutationClass::Nras,
        MutationClass::Kras,
        MutationClass::Braf,
        MutationClass::Pik3ca,
        MutationClass::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationClass::Nras => "NRAS",
            MutationClass::Kras => "KRAS",
            MutationClass::Braf => "BRAF",
            MutationClass::Pik3ca => "PIK3CA",
            MutationClass::Other => "OTHER",
        }
    }
}

/// Per-lesion mutation flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MutationLabels {
    pub nras: bool,
    pub kras: bool,
    pub braf: bool,
    pub pik3ca: bool,
    pub other: bool,
}

impl MutationLabels {
    pub fn single(class: MutationClass) -> Self {
        let mut l = Self::default();
        l.set(class, true);
        l
    }

    pub fn get(&self, class: MutationClass) -> bool {
        match class {
            MutationClass::Nras => self.nras,
            MutationClass::Kras => self.kras,
            MutationClass::Braf => self.braf,
            MutationClass::Pik3ca => self.pik3ca,
            MutationClass::Other => self.other,
        }
    }

    pub fn set(&mut self, class: MutationClass, value: bool) {
        match class {
            MutationClass::Nras => self.nras = value,
            MutationClass::Kras => self.kras = value,
            MutationClass::Braf => self.braf = value,
            MutationClass::Pik3ca => self.pik3ca = value,
            MutationClass::Other => self.other = value,
        }
    }

    pub fn as_array(&self) -> [bool; 5] {
        MutationClass::ALL.map(|c| self.get(c))
    }

    pub fn positives(&self) -> impl Iterator<Item = MutationClass> + '_ {
        MutationClass::ALL.into_iter().filter(|&c| self.get(c))
    }

    /// `other` is set exactly when no specific mutation is, and at least one
    /// flag is set.
    pub fn is_consistent(&self) -> bool {
        let any_mutation = self.nras || self.kras || self.braf || self.pik3ca;
        self.other != any_mutation
    }
}

/// Labels collapsed to RAS (NRAS ∪ KRAS), PIK3CA ∪ BRAF and OTHER.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GroupedLabels {
    pub ras: bool,
    pub pik_braf: bool,
    pub other: bool,
}

impl GroupedLabels {
    pub const NAMES: [&'static str; 3] = ["RAS", "PIK3CA+BRAF", "OTHER"];

    pub fn as_array(&self) -> [bool; 3] {
        [self.ras, self.pik_braf, self.other]
    }
}

pub fn group_labels_3(labels: &MutationLabels) -> GroupedLabels {
    GroupedLabels {
        ras: labels.nras || labels.kras,
        pik_braf: labels.pik3ca || labels.braf,
        other: labels.other,
    }
}

/// Class layout a prediction file or report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassSpace {
    #[serde(rename = "5-class")]
    Five,
    #[serde(rename = "3-class")]
    Three,
}

impl ClassSpace {
    pub fn n_classes(self) -> usize {
        match self {
            ClassSpace::Five => 5,
            ClassSpace::Three => 3,
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            ClassSpace::Five => MutationClass::ALL.iter().map(|c| c.name()).collect(),
            ClassSpace::Three => GroupedLabels::NAMES.to_vec(),
        }
    }

    /// Truth vector of `labels` in this class space.
    pub fn encode(self, labels: &MutationLabels) -> Vec<bool> {
        match self {
            ClassSpace::Five => labels.as_array().to_vec(),
            ClassSpace::Three => group_labels_3(labels).as_array().to_vec(),
        }
    }

    pub fn from_group(group: u8) -> Option<Self> {
        match group {
            5 => Some(ClassSpace::Five),
            3 => Some(ClassSpace::Three),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassSpace::Five => "5-class",
            ClassSpace::Three => "3-class",
        })
    }
}
