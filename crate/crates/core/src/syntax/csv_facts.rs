use std::collections::HashSet;
use std::path::Path;

use super::SyntaxError;
use crate::model::{Atom, Term};

/// Reads every `*.csv` file in `dir` as facts of the predicate named by the
/// file stem. Files have no header row; every field is a constant.
pub fn load_csv_dir(dir: &Path) -> Result<Vec<Atom>, SyntaxError> {
    let io = |path: &Path, e: &dyn std::fmt::Display| SyntaxError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, &e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();

    let mut out = Vec::new();
    for path in paths {
        let pred = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| io(&path, &"bad file name"))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(&path)
            .map_err(|e| io(&path, &e))?;
        for record in reader.records() {
            let record = record.map_err(|e| io(&path, &e))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            out.push(Atom::new(pred, record.iter().map(Term::constant).collect()));
        }
    }
    Ok(out)
}

/// Appends `extra` to `facts`, skipping anything already present.
pub fn merge_facts(facts: &mut Vec<Atom>, extra: Vec<Atom>) {
    let mut seen: HashSet<Atom> = facts.iter().cloned().collect();
    for a in extra {
        if seen.insert(a.clone()) {
            facts.push(a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_one_file_per_predicate() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("att.csv"), "1,A\n2,A\n").unwrap();
        std::fs::write(dir.path().join("element.csv"), "1\n2\n").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let facts = load_csv_dir(dir.path()).unwrap();
        assert_eq!(facts.len(), 4);
        assert_eq!(facts[0], Atom::new("att", vec![Term::constant("1"), Term::constant("A")]));
    }

    #[test]
    fn merge_suppresses_duplicates() {
        let mut facts = vec![Atom::new("p", vec![Term::constant("a")])];
        merge_facts(&mut facts, vec![Atom::new("p", vec![Term::constant("a")]), Atom::new("p", vec![Term::constant("b")])]);
        assert_eq!(facts.len(), 2);
    }
}
