use std::collections::BTreeMap;

use super::store::{Pc, PcStore};

type Cube = BTreeMap<u32, bool>;

impl PcStore {
    /// Renders `pc` as a sum of cubes in the feature-expression grammar.
    ///
    /// Cubes come from the diagram's paths and are then merged (adjacent
    /// cubes combined, subsumed cubes dropped). The result re-parses to the
    /// same handle; it is not guaranteed to be minimal.
    pub fn render(&self, pc: Pc) -> String {
        if pc.is_true() {
            return "true".to_string();
        }
        if pc.is_false() {
            return "false".to_string();
        }
        let mut cubes: Vec<Cube> = self
            .paths(pc)
            .into_iter()
            .map(|p| p.into_iter().map(|(f, v)| (f.0, v)).collect())
            .collect();
        simplify(&mut cubes);
        cubes.sort_by(|a, b| (a.len(), a.iter().collect::<Vec<_>>()).cmp(&(b.len(), b.iter().collect())));

        let names = self.features();
        let render_cube = |c: &Cube| {
            c.iter()
                .map(|(&v, &pos)| {
                    let name = names.name(super::FeatureId(v));
                    if pos {
                        name.to_string()
                    } else {
                        format!("!{name}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" & ")
        };
        if cubes.len() == 1 {
            return render_cube(&cubes[0]);
        }
        cubes
            .iter()
            .map(|c| {
                if c.len() > 1 {
                    format!("({})", render_cube(c))
                } else {
                    render_cube(c)
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

fn simplify(cubes: &mut Vec<Cube>) {
    loop {
        if let Some((i, j, var)) = find_merge(cubes) {
            cubes[i].remove(&var);
            cubes.swap_remove(j);
            continue;
        }
        if let Some(j) = find_subsumed(cubes) {
            cubes.swap_remove(j);
            continue;
        }
        if let Some((j, var)) = find_reducible(cubes) {
            cubes[j].remove(&var);
            continue;
        }
        break;
    }
}

/// Two cubes over the same variables differing in exactly one polarity.
fn find_merge(cubes: &[Cube]) -> Option<(usize, usize, u32)> {
    for i in 0..cubes.len() {
        for j in i + 1..cubes.len() {
            let (a, b) = (&cubes[i], &cubes[j]);
            if a.len() != b.len() || !a.keys().eq(b.keys()) {
                continue;
            }
            let mut diff = a.iter().zip(b.iter()).filter(|((_, x), (_, y))| x != y);
            if let (Some(((&v, _), _)), None) = (diff.next(), diff.next()) {
                return Some((i, j, v));
            }
        }
    }
    None
}

/// A cube whose literals are a superset of another cube's.
fn find_subsumed(cubes: &[Cube]) -> Option<usize> {
    for i in 0..cubes.len() {
        for j in 0..cubes.len() {
            if i != j && cubes[i].len() <= cubes[j].len() && cubes[i].iter().all(|(v, p)| cubes[j].get(v) == Some(p)) {
                return Some(j);
            }
        }
    }
    None
}

/// `x∧R ∨ ¬x∧S` with `R ⊆ S` lets the second cube drop `¬x`.
fn find_reducible(cubes: &[Cube]) -> Option<(usize, u32)> {
    for i in 0..cubes.len() {
        for j in 0..cubes.len() {
            if i == j {
                continue;
            }
            for (&v, &p) in &cubes[i] {
                if cubes[j].get(&v) == Some(&!p) && cubes[i].iter().all(|(w, q)| *w == v || cubes[j].get(w) == Some(q))
                {
                    return Some((j, v));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::PcStore;

    fn roundtrip(text: &str) -> String {
        let mut s = PcStore::new();
        let pc = s.parse(text).unwrap();
        let out = s.render(pc);
        assert_eq!(s.parse(&out).unwrap(), pc, "{text} rendered as {out}");
        out
    }

    #[test]
    fn simple_cube() {
        assert_eq!(roundtrip("FA & !FB"), "FA & !FB");
        // literal order follows registration order
        assert_eq!(roundtrip("!FB & FA"), "!FB & FA");
    }

    #[test]
    fn constants() {
        assert_eq!(roundtrip("FA | !FA"), "true");
        assert_eq!(roundtrip("FA & !FA"), "false");
    }

    #[test]
    fn disjunction_merges_paths() {
        assert_eq!(roundtrip("FA | FB"), "FA | FB");
        assert_eq!(roundtrip("FA | !FA & FB & FC"), "FA | (FB & FC)");
        assert_eq!(roundtrip("FA & FB | FA & !FB"), "FA");
    }

    #[test]
    fn larger_formulas_roundtrip() {
        for t in [
            "(FA | FB) & (FC | !FD)",
            "FA & FB & FC | !FA & !FB & !FC",
            "!(FA & FB) & !(FA & FC) & !(FB & FC)",
            "x_LT_Feat2 | x_EQ_Feat3",
        ] {
            roundtrip(t);
        }
    }
}
