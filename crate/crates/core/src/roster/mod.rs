//! Person roster: export parsing, group labeling and the name index used
//! during corpus scanning.

mod fetch;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::{Error, Group, PersonId, Result};

pub use fetch::{fetch_roster, sparql_json_to_rows, FetchOutcome, FetchSource, RosterRow};

/// Columns of the roster export.
pub const EXPORT_COLUMNS: [&str; 4] = ["name", "dob", "ethnicLabel", "occupation"];

#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    pub id: PersonId,
    pub full_name: String,
    pub name_tokens: Vec<String>,
    pub group: Group,
    pub birth_year: Option<i32>,
    pub occupations: BTreeSet<String>,
    pub source_labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRoster {
    pub persons: Vec<Person>,
    pub rows_read: usize,
    pub rows_skipped: usize,
}

/// Year component of a date-of-birth field (`1818-02-14`, `+1818-02-14T00:00:00Z`, `1818`).
pub fn parse_birth_year(dob: &str) -> Option<i32> {
    let s = dob.trim();
    let (sign, rest) = match s.as_bytes().first()? {
        b'-' => (-1, &s[1..]),
        b'+' => (1, &s[1..]),
        _ => (1, s),
    };
    let digits: &str = rest.split(['-', 'T', ' ']).next()?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<i32>().ok().map(|y| sign * y)
}

fn sniff_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub(crate) fn delimited_reader(text: &str) -> csv::Reader<&[u8]> {
    let first = text.lines().next().unwrap_or("");
    csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(first))
        .flexible(true)
        .quoting(!first.contains('\t'))
        .from_reader(text.as_bytes())
}

pub(crate) fn column_index(
    headers: &csv::StringRecord,
    column: &str,
    path: &Path,
) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(column))
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })
}

/// Parse a roster export with header `name, dob, ethnicLabel, occupation`
/// (tab- or comma-delimited). Rows whose name has fewer than two tokens are
/// skipped and counted. Rows sharing (name, birth year) are merged.
pub fn parse_roster_export(path: &Path) -> Result<ParsedRoster> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_roster_text(&text, path)
}

pub fn parse_roster_text(text: &str, path: &Path) -> Result<ParsedRoster> {
    let mut reader = delimited_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let cols: Vec<usize> = EXPORT_COLUMNS
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<_>>()?;

    let mut out = ParsedRoster::default();
    let mut by_key: HashMap<(String, Option<i32>), usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        out.rows_read += 1;
        let field = |k: usize| record.get(cols[k]).unwrap_or("").trim();
        let name_tokens: Vec<String> = field(0).split_whitespace().map(str::to_string).collect();
        if name_tokens.len() < 2 {
            out.rows_skipped += 1;
            continue;
        }
        let full_name = name_tokens.join(" ");
        let birth_year = parse_birth_year(field(1));
        let label = field(2);
        let occupation = field(3);

        let idx = *by_key
            .entry((full_name.clone(), birth_year))
            .or_insert_with(|| {
                out.persons.push(Person {
                    id: PersonId::from_name_and_birth(&full_name, birth_year),
                    full_name: full_name.clone(),
                    name_tokens: name_tokens.clone(),
                    group: Group::other(),
                    birth_year,
                    occupations: BTreeSet::new(),
                    source_labels: BTreeSet::new(),
                });
                out.persons.len() - 1
            });
        let person = &mut out.persons[idx];
        if !occupation.is_empty() {
            person.occupations.insert(occupation.to_string());
        }
        if !label.is_empty() {
            person.source_labels.insert(label.to_string());
        }
    }
    Ok(out)
}

/// Write persons in the export format (one row per person, first label and
/// occupation). Used by fixture generators.
pub fn write_roster_export(path: &Path, rows: &[RosterRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&EXPORT_COLUMNS.join("\t"));
    out.push('\n');
    for r in rows {
        let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            clean(&r.name),
            clean(&r.dob),
            clean(&r.ethnic_label),
            clean(&r.occupation)
        ));
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Raw source label to group label table. Unmapped labels get the default.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GroupMap {
    #[serde(default = "Group::other")]
    pub default: Group,
    pub labels: BTreeMap<String, Group>,
}

impl GroupMap {
    pub fn new(labels: BTreeMap<String, Group>, default: Group) -> Result<Self> {
        let map = GroupMap { default, labels };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        let targets: BTreeSet<&Group> = self
            .labels
            .values()
            .filter(|g| **g != self.default)
            .collect();
        if targets.len() < 2 {
            return Err(Error::Config(format!(
                "group map needs at least two non-default target labels, found {}",
                targets.len()
            )));
        }
        Ok(())
    }

    /// Load from TOML:
    ///
    /// ```toml
    /// default = "OTHER"
    /// [labels]
    /// "African Americans" = "GRP_A"
    /// ```
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: GroupMap = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        map.validate()?;
        Ok(map)
    }

    pub fn lookup(&self, raw: &str) -> &Group {
        self.labels.get(raw.trim()).unwrap_or(&self.default)
    }

    /// Target groups other than the default, sorted.
    pub fn target_groups(&self) -> Vec<Group> {
        let set: BTreeSet<Group> = self
            .labels
            .values()
            .filter(|g| **g != self.default)
            .cloned()
            .collect();
        set.into_iter().collect()
    }
}

/// Per-person group overrides keyed by (full name, optional birth year).
#[derive(Debug, Clone, Default)]
pub struct GroupOverrides {
    entries: HashMap<(String, Option<i32>), Group>,
}

impl GroupOverrides {
    /// Delimited file with header `name, birth_year, group`; empty birth year
    /// applies to every person with that name.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reader = delimited_reader(&text);
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, 1, e.to_string()))?
            .clone();
        let name = column_index(&headers, "name", path)?;
        let birth = column_index(&headers, "birth_year", path)?;
        let group = column_index(&headers, "group", path)?;
        let mut entries = HashMap::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
            let n = rec.get(name).unwrap_or("").split_whitespace().collect::<Vec<_>>().join(" ");
            let b = rec.get(birth).unwrap_or("").trim();
            let b = if b.is_empty() {
                None
            } else {
                Some(b.parse::<i32>().map_err(|e| Error::parse(path, i + 2, e.to_string()))?)
            };
            entries.insert((n, b), Group::new(rec.get(group).unwrap_or("").trim()));
        }
        Ok(GroupOverrides { entries })
    }

    fn get(&self, p: &Person) -> Option<&Group> {
        self.entries
            .get(&(p.full_name.clone(), p.birth_year))
            .or_else(|| self.entries.get(&(p.full_name.clone(), None)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelingStats {
    pub labeled: usize,
    pub other: usize,
    /// Persons whose source labels map to more than one group.
    pub ambiguous: usize,
    pub overridden: usize,
}

/// Label every person from its source labels. A person whose labels map to
/// exactly one non-default group gets that group; no mapped label or
/// conflicting labels give the default. Overrides are applied last.
pub fn apply_group_map(
    persons: &mut [Person],
    map: &GroupMap,
    overrides: Option<&GroupOverrides>,
) -> LabelingStats {
    let mut stats = LabelingStats::default();
    for p in persons.iter_mut() {
        let targets: BTreeSet<&Group> = p
            .source_labels
            .iter()
            .map(|l| map.lookup(l))
            .filter(|g| **g != map.default)
            .collect();
        p.group = match targets.len() {
            1 => targets.into_iter().next().cloned().unwrap(),
            0 => map.default.clone(),
            _ => {
                stats.ambiguous += 1;
                map.default.clone()
            }
        };
        if let Some(g) = overrides.and_then(|o| o.get(p)) {
            p.group = g.clone();
            stats.overridden += 1;
        }
        if p.group == map.default {
            stats.other += 1;
        } else {
            stats.labeled += 1;
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexedPerson {
    pub group_idx: u16,
    pub birth_year: Option<i32>,
}

/// First-token lookup over the non-OTHER roster.
#[derive(Debug, Clone, Default)]
pub struct RosterIndex {
    by_first: HashMap<String, Vec<(Vec<String>, PersonId)>>,
    people: HashMap<PersonId, IndexedPerson>,
    groups: Vec<Group>,
}

impl RosterIndex {
    pub fn len(&self) -> usize {
        self.people.len()
    }

    pub fn is_empty(&self) -> bool {
        self.people.is_empty()
    }

    /// Full-name candidates starting with `token`.
    pub fn candidates(&self, token: &str) -> &[(Vec<String>, PersonId)] {
        self.by_first.get(token).map_or(&[], Vec::as_slice)
    }

    pub fn person(&self, id: PersonId) -> Option<&IndexedPerson> {
        self.people.get(&id)
    }

    pub fn group_of(&self, id: PersonId) -> Option<&Group> {
        self.people.get(&id).map(|p| &self.groups[p.group_idx as usize])
    }

    pub fn group_label(&self, idx: u16) -> &Group {
        &self.groups[idx as usize]
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }
}

/// Index every labeled (non-OTHER) person with at least two name tokens.
pub fn build_index(persons: &[Person]) -> RosterIndex {
    let mut index = RosterIndex::default();
    let mut group_ids: BTreeMap<Group, u16> = BTreeMap::new();
    for p in persons {
        if p.group.is_other() || p.name_tokens.len() < 2 {
            continue;
        }
        if index.people.contains_key(&p.id) {
            continue;
        }
        let next = group_ids.len() as u16;
        let gid = *group_ids.entry(p.group.clone()).or_insert(next);
        index.people.insert(
            p.id,
            IndexedPerson {
                group_idx: gid,
                birth_year: p.birth_year,
            },
        );
        index
            .by_first
            .entry(p.name_tokens[0].clone())
            .or_default()
            .push((p.name_tokens.clone(), p.id));
    }
    let mut groups = vec![Group::other(); group_ids.len()];
    for (g, i) in group_ids {
        groups[i as usize] = g;
    }
    index.groups = groups;
    for list in index.by_first.values_mut() {
        list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ParsedRoster {
        parse_roster_text(text, Path::new("roster.tsv")).unwrap()
    }

    fn map() -> GroupMap {
        let mut labels = BTreeMap::new();
        labels.insert("African Americans".into(), Group::new("GRP_A"));
        labels.insert("Italian Americans".into(), Group::new("GRP_WHITE"));
        labels.insert("Irish Americans".into(), Group::new("GRP_WHITE"));
        GroupMap::new(labels, Group::other()).unwrap()
    }

    #[test]
    fn birth_year_formats() {
        assert_eq!(parse_birth_year("1818-02-14"), Some(1818));
        assert_eq!(parse_birth_year("+1818-02-14T00:00:00Z"), Some(1818));
        assert_eq!(parse_birth_year("1818"), Some(1818));
        assert_eq!(parse_birth_year(""), None);
        assert_eq!(parse_birth_year("unknown"), None);
    }

    #[test]
    fn single_row_extracts_birth_year() {
        let r = parse("name\tdob\tethnicLabel\toccupation\nFrederick Douglass\t1818-02-14\tAfrican Americans\torator\n");
        assert_eq!(r.persons.len(), 1);
        let p = &r.persons[0];
        assert_eq!(p.birth_year, Some(1818));
        assert_eq!(p.name_tokens, vec!["Frederick", "Douglass"]);
        assert!(p.source_labels.contains("African Americans"));
        assert!(p.occupations.contains("orator"));
    }

    #[test]
    fn single_token_name_skipped() {
        let r = parse("name,dob,ethnicLabel,occupation\nCher,1946-05-20,Armenian Americans,singer\n");
        assert!(r.persons.is_empty());
        assert_eq!(r.rows_skipped, 1);
    }

    #[test]
    fn duplicates_merge_occupations() {
        let r = parse(
            "name\tdob\tethnicLabel\toccupation\n\
             Frederick Douglass\t1818-02-14\tAfrican Americans\torator\n\
             Frederick Douglass\t1818-02-14\tAfrican Americans\twriter\n\
             Frederick Douglass\t1900-01-01\tAfrican Americans\twriter\n",
        );
        assert_eq!(r.persons.len(), 2);
        let occ: Vec<_> = r.persons[0].occupations.iter().cloned().collect();
        assert_eq!(occ, vec!["orator", "writer"]);
        assert_ne!(r.persons[0].id, r.persons[1].id);
    }

    #[test]
    fn missing_column() {
        let err = parse_roster_text("name\tdob\toccupation\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "ethnicLabel"));
    }

    #[test]
    fn group_mapping_rules() {
        let m = map();
        assert_eq!(m.lookup("Italian Americans"), &Group::new("GRP_WHITE"));
        assert_eq!(m.lookup("Martian"), &Group::other());
        assert_eq!(m.lookup(""), &Group::other());
    }

    #[test]
    fn group_map_needs_two_targets() {
        let mut labels = BTreeMap::new();
        labels.insert("x".into(), Group::new("GRP_A"));
        assert!(GroupMap::new(labels, Group::other()).is_err());
    }

    #[test]
    fn apply_map_is_stable_and_handles_conflicts() {
        let mut r = parse(
            "name\tdob\tethnicLabel\toccupation\n\
             Frederick Douglass\t1818\tAfrican Americans\torator\n\
             Mario Rossi\t1900\tItalian Americans\tboxer\n\
             Some Body\t1900\tMartian\tx\n\
             Mixed Person\t1900\tAfrican Americans\tx\n\
             Mixed Person\t1900\tIrish Americans\tx\n",
        );
        let stats = apply_group_map(&mut r.persons, &map(), None);
        assert_eq!(stats, LabelingStats { labeled: 2, other: 2, ambiguous: 1, overridden: 0 });
        let before = r.persons.clone();
        apply_group_map(&mut r.persons, &map(), None);
        assert_eq!(before, r.persons);
    }

    #[test]
    fn index_excludes_other_and_shares_first_token() {
        let mut r = parse(
            "name\tdob\tethnicLabel\toccupation\n\
             John Adams\t1735\tIrish Americans\tx\n\
             John Brown\t1800\tAfrican Americans\tx\n\
             John Doe\t1800\tMartian\tx\n",
        );
        apply_group_map(&mut r.persons, &map(), None);
        let idx = build_index(&r.persons);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.candidates("John").len(), 2);
        assert!(idx.candidates("Jane").is_empty());
        assert!(build_index(&[]).is_empty());
    }
}
