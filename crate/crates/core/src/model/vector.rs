use std::collections::btree_map;
use std::collections::BTreeMap;

/// Sparse real vector keyed by feature name. Zeros are never stored.
///
/// Keys iterate in sorted order, so sums over a vector are reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector(BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector(BTreeMap::new())
    }

    pub fn get(&self, key: &str) -> f64 {
        self.0.get(key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Overwrites a coordinate; setting zero removes it.
    pub fn set(&mut self, key: &str, value: f64) {
        if value == 0.0 {
            self.0.remove(key);
        } else if let Some(slot) = self.0.get_mut(key) {
            *slot = value;
        } else {
            self.0.insert(key.to_string(), value);
        }
    }

    pub fn add(&mut self, key: &str, delta: f64) {
        if delta == 0.0 {
            return;
        }
        match self.0.get_mut(key) {
            Some(slot) => {
                *slot += delta;
                if *slot == 0.0 {
                    self.0.remove(key);
                }
            }
            None => {
                self.0.insert(key.to_string(), delta);
            }
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &FeatureVector, scale: f64) {
        for (k, v) in other.iter() {
            self.add(k, scale * v);
        }
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.iter().map(|(k, v)| v * large.get(k)).sum()
    }

    /// Only the coordinates whose key starts with `prefix`.
    pub fn restrict(&self, prefix: &str) -> FeatureVector {
        FeatureVector(self.0.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(k, v)| (k.clone(), *v)).collect())
    }
}

impl FromIterator<(String, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut v = FeatureVector::new();
        for (k, x) in iter {
            v.add(&k, x);
        }
        v
    }
}

impl<'a> FromIterator<(&'a str, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (&'a str, f64)>>(iter: I) -> Self {
        let mut v = FeatureVector::new();
        for (k, x) in iter {
            v.add(k, x);
        }
        v
    }
}

impl IntoIterator for FeatureVector {
    type Item = (String, f64);
    type IntoIter = btree_map::IntoIter<String, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}
