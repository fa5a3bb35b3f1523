//! Conjunctive filter expressions over indexed profile attributes, e.g.
//! `pmr95>=1 && mean_throughput_bps>1e6 && direction=DOWN`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::net::Direction;
use crate::pipeline::CrossTrafficProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    MeanThroughputBps,
    MaxThroughputBps,
    Pmr,
    Pmr95,
    Cov,
    HostCount,
    FlowCount,
    Asymmetry,
    ToggleCount,
    WindowDurationS,
    Direction,
}

impl Attribute {
    pub const ALL: [Attribute; 11] = [
        Attribute::MeanThroughputBps,
        Attribute::MaxThroughputBps,
        Attribute::Pmr,
        Attribute::Pmr95,
        Attribute::Cov,
        Attribute::HostCount,
        Attribute::FlowCount,
        Attribute::Asymmetry,
        Attribute::ToggleCount,
        Attribute::WindowDurationS,
        Attribute::Direction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::MeanThroughputBps => "mean_throughput_bps",
            Attribute::MaxThroughputBps => "max_throughput_bps",
            Attribute::Pmr => "pmr",
            Attribute::Pmr95 => "pmr95",
            Attribute::Cov => "cov",
            Attribute::HostCount => "host_count",
            Attribute::FlowCount => "flow_count",
            Attribute::Asymmetry => "asymmetry",
            Attribute::ToggleCount => "toggle_count",
            Attribute::WindowDurationS => "window_duration_s",
            Attribute::Direction => "direction",
        }
    }

    /// Numeric value of the attribute; directions map to UP = 0, DOWN = 1.
    /// `None` when the attribute is unset (toggle count before preparation).
    pub fn value(self, p: &CrossTrafficProfile) -> Option<f64> {
        let m = &p.metrics;
        Some(match self {
            Attribute::MeanThroughputBps => m.mean_throughput_bps,
            Attribute::MaxThroughputBps => m.max_throughput_bps,
            Attribute::Pmr => m.pmr,
            Attribute::Pmr95 => m.pmr95,
            Attribute::Cov => m.cov,
            Attribute::HostCount => m.host_count as f64,
            Attribute::FlowCount => m.flow_count as f64,
            Attribute::Asymmetry => m.asymmetry,
            Attribute::ToggleCount => f64::from(m.toggle_count?),
            Attribute::WindowDurationS => p.window_duration_s,
            Attribute::Direction => direction_value(p.direction),
        })
    }
}

fn direction_value(d: Direction) -> f64 {
    match d {
        Direction::Up => 0.0,
        Direction::Down => 1.0,
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Attribute::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| StoreError::UnknownAttribute(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub attribute: Attribute,
    pub comparator: Comparator,
    pub value: f64,
}

impl Predicate {
    pub fn matches(&self, p: &CrossTrafficProfile) -> bool {
        self.attribute
            .value(p)
            .is_some_and(|v| self.comparator.holds(v, self.value))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attribute == Attribute::Direction {
            let d = if self.value == 0.0 { "UP" } else { "DOWN" };
            return write!(f, "{}{}{}", self.attribute, self.comparator.symbol(), d);
        }
        write!(f, "{}{}{:?}", self.attribute, self.comparator.symbol(), self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SortOrder {
    #[default]
    Asc,
    Desc,
}

/// Conjunction of predicates with optional ordering and limit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileQuery {
    pub predicates: Vec<Predicate>,
    pub limit: Option<usize>,
    pub order_by: Option<(Attribute, SortOrder)>,
}

const COMPARATORS: [(&str, Comparator); 8] = [
    (">=", Comparator::Ge),
    ("<=", Comparator::Le),
    ("==", Comparator::Eq),
    ("≥", Comparator::Ge),
    ("≤", Comparator::Le),
    (">", Comparator::Gt),
    ("<", Comparator::Lt),
    ("=", Comparator::Eq),
];

fn parse_predicate(term: &str) -> Result<Predicate, StoreError> {
    let bad = |why: &str| StoreError::BadQuery(format!("`{term}`: {why}"));
    let (pos, sym, comparator) = COMPARATORS
        .iter()
        .filter_map(|&(sym, c)| term.find(sym).map(|pos| (pos, sym, c)))
        // leftmost operator, longest spelling first on ties
        .min_by_key(|&(pos, sym, _)| (pos, std::cmp::Reverse(sym.len())))
        .ok_or_else(|| bad("missing comparator"))?;
    let attribute: Attribute = term[..pos].parse()?;
    let raw = term[pos + sym.len()..].trim();
    if raw.is_empty() {
        return Err(bad("missing value"));
    }
    let value = if attribute == Attribute::Direction {
        if comparator != Comparator::Eq {
            return Err(bad("direction only supports `=`"));
        }
        direction_value(raw.parse().map_err(|e: String| bad(&e))?)
    } else {
        let v: f64 = raw.parse().map_err(|_| bad("value is not a number"))?;
        if v.is_nan() {
            return Err(bad("value is NaN"));
        }
        v
    };
    Ok(Predicate {
        attribute,
        comparator,
        value,
    })
}

impl ProfileQuery {
    /// Parses a filter expression. An empty expression matches everything.
    pub fn parse(filter: &str) -> Result<Self, StoreError> {
        let mut predicates = Vec::new();
        let filter = filter.trim();
        if !filter.is_empty() {
            for term in filter.split("&&") {
                let term = term.trim();
                if term.is_empty() {
                    return Err(StoreError::BadQuery(format!("empty term in `{filter}`")));
                }
                predicates.push(parse_predicate(term)?);
            }
        }
        Ok(Self {
            predicates,
            ..Default::default()
        })
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn with_order(mut self, attribute: Attribute, order: SortOrder) -> Self {
        self.order_by = Some((attribute, order));
        self
    }

    /// Parses `attr`, `attr:asc` or `attr:desc`.
    pub fn parse_order(spec: &str) -> Result<(Attribute, SortOrder), StoreError> {
        let (attr, dir) = spec.split_once(':').unwrap_or((spec, "asc"));
        let order = match dir.trim().to_ascii_lowercase().as_str() {
            "asc" => SortOrder::Asc,
            "desc" => SortOrder::Desc,
            other => return Err(StoreError::BadQuery(format!("unknown sort order `{other}`"))),
        };
        Ok((attr.parse()?, order))
    }

    pub fn matches(&self, p: &CrossTrafficProfile) -> bool {
        self.predicates.iter().all(|pred| pred.matches(p))
    }

    /// Total order used for results: the `order_by` attribute (unset values
    /// last), then id ascending.
    pub fn compare(&self, a: &CrossTrafficProfile, b: &CrossTrafficProfile) -> Ordering {
        if let Some((attr, order)) = self.order_by {
            let ord = match (attr.value(a), attr.value(b)) {
                (Some(x), Some(y)) => {
                    let o = x.total_cmp(&y);
                    match order {
                        SortOrder::Asc => o,
                        SortOrder::Desc => o.reverse(),
                    }
                }
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        a.id.cmp(&b.id)
    }

    /// Reference evaluation by linear scan.
    pub fn scan<'a>(&self, profiles: impl IntoIterator<Item = &'a CrossTrafficProfile>) -> Vec<CrossTrafficProfile> {
        let mut hits: Vec<CrossTrafficProfile> =
            profiles.into_iter().filter(|p| self.matches(p)).cloned().collect();
        hits.sort_by(|a, b| self.compare(a, b));
        if let Some(limit) = self.limit {
            hits.truncate(limit);
        }
        hits
    }
}

impl fmt::Display for ProfileQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.predicates.iter().map(Predicate::to_string).collect();
        f.write_str(&terms.join(" && "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_conjunction() {
        let q = ProfileQuery::parse("pmr95>=1 && mean_throughput_bps>1e6 && direction=DOWN").unwrap();
        assert_eq!(q.predicates.len(), 3);
        assert_eq!(q.predicates[0].comparator, Comparator::Ge);
        assert_eq!(q.predicates[1].value, 1e6);
        assert_eq!(q.predicates[2].value, 1.0);
    }

    #[test]
    fn operator_spellings() {
        for (text, c) in [
            ("cov<0.5", Comparator::Lt),
            ("cov <= 0.5", Comparator::Le),
            ("cov==0.5", Comparator::Eq),
            ("cov=0.5", Comparator::Eq),
            ("cov≥0.5", Comparator::Ge),
            ("cov > 0.5", Comparator::Gt),
        ] {
            assert_eq!(ProfileQuery::parse(text).unwrap().predicates[0].comparator, c, "{text}");
        }
    }

    #[test]
    fn rejects_unknown_attribute_and_garbage() {
        assert!(matches!(
            ProfileQuery::parse("burst_len>3"),
            Err(StoreError::UnknownAttribute(_))
        ));
        assert!(ProfileQuery::parse("pmr").is_err());
        assert!(ProfileQuery::parse("pmr>").is_err());
        assert!(ProfileQuery::parse("pmr>abc").is_err());
        assert!(ProfileQuery::parse("pmr>1 &&").is_err());
        assert!(ProfileQuery::parse("direction>UP").is_err());
    }

    #[test]
    fn empty_filter_matches_all() {
        assert!(ProfileQuery::parse("  ").unwrap().predicates.is_empty());
    }

    #[test]
    fn display_round_trips() {
        let q = ProfileQuery::parse("pmr95>=1 && direction=UP && host_count<3").unwrap();
        assert_eq!(ProfileQuery::parse(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn order_spec() {
        assert_eq!(
            ProfileQuery::parse_order("pmr:desc").unwrap(),
            (Attribute::Pmr, SortOrder::Desc)
        );
        assert_eq!(
            ProfileQuery::parse_order("cov").unwrap(),
            (Attribute::Cov, SortOrder::Asc)
        );
        assert!(ProfileQuery::parse_order("cov:sideways").is_err());
    }
}
