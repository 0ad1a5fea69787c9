use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Role, Situation, Venue};

/// Maps free-text categorical values from upstream feeds onto the canonical enums.
///
/// Keys are compared after normalisation (lower-case, alphanumerics only), so
/// `"Open Play"`, `"open_play"` and `"OpenPlay"` are the same key. Canonical
/// codes always resolve. In strict mode an unmapped situation is an error;
/// otherwise it falls back to [`Situation::Other`]. Roles and venues have no
/// fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliasTable {
    pub situation: BTreeMap<String, Situation>,
    pub role: BTreeMap<String, Role>,
    pub strict: bool,
}

impl Default for AliasTable {
    fn default() -> Self {
        let situation = [
            ("openplay", Situation::OpenPlay),
            ("freekick", Situation::FreeKick),
            ("directfreekick", Situation::FreeKick),
            ("penalty", Situation::Penalty),
            ("setpiece", Situation::Other),
            ("fromcorner", Situation::Other),
            ("other", Situation::Other),
            ("others", Situation::Other),
        ];
        let role = [
            ("gk", Role::Goalkeeper),
            ("goalkeeper", Role::Goalkeeper),
            ("def", Role::Defender),
            ("defender", Role::Defender),
            ("mid", Role::Midfielder),
            ("midfielder", Role::Midfielder),
            ("for", Role::Forward),
            ("fw", Role::Forward),
            ("forward", Role::Forward),
        ];
        Self {
            situation: situation.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            role: role.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            strict: true,
        }
    }
}

fn normalise(raw: &str) -> String {
    raw.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

impl AliasTable {
    /// Adds user aliases on top of the defaults; later entries win.
    pub fn with_aliases<'a>(
        mut self,
        situation: impl IntoIterator<Item = (&'a str, Situation)>,
        role: impl IntoIterator<Item = (&'a str, Role)>,
    ) -> Self {
        for (k, v) in situation {
            self.situation.insert(normalise(k), v);
        }
        for (k, v) in role {
            self.role.insert(normalise(k), v);
        }
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn situation(&self, raw: &str) -> Option<Situation> {
        match self.situation.get(&normalise(raw)) {
            Some(s) => Some(*s),
            None if self.strict => None,
            None => Some(Situation::Other),
        }
    }

    pub fn role(&self, raw: &str) -> Option<Role> {
        self.role.get(&normalise(raw)).copied()
    }

    pub fn venue(&self, raw: &str) -> Option<Venue> {
        match normalise(raw).as_str() {
            "h" | "home" => Some(Venue::Home),
            "a" | "away" => Some(Venue::Away),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_codes_round_trip() {
        let t = AliasTable::default();
        for s in [Situation::OpenPlay, Situation::FreeKick, Situation::Penalty, Situation::Other] {
            assert_eq!(t.situation(s.code()), Some(s));
        }
        for r in [Role::Goalkeeper, Role::Defender, Role::Midfielder, Role::Forward] {
            assert_eq!(t.role(r.code()), Some(r));
        }
        for v in [Venue::Home, Venue::Away] {
            assert_eq!(t.venue(v.code()), Some(v));
        }
    }

    #[test]
    fn corner_needs_an_alias_in_strict_mode() {
        let strict = AliasTable::default();
        assert_eq!(strict.situation("Corner"), None);
        let aliased = AliasTable::default().with_aliases([("corner", Situation::Other)], []);
        assert_eq!(aliased.situation("Corner"), Some(Situation::Other));
        let lenient = AliasTable::default().strict(false);
        assert_eq!(lenient.situation("Corner"), Some(Situation::Other));
    }

    #[test]
    fn role_aliases() {
        let t = AliasTable::default();
        assert_eq!(t.role("GK"), Some(Role::Goalkeeper));
        assert_eq!(t.role("Goalkeeper"), Some(Role::Goalkeeper));
        assert_eq!(t.role("striker"), None);
        let t = t.with_aliases([], [("ST", Role::Forward)]);
        assert_eq!(t.role("st"), Some(Role::Forward));
    }
}
