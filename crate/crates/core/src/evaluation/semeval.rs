//! Loader for SemEval ABSA restaurant files.
//!
//! Two layouts are accepted:
//!
//! * 2014: `<sentences><sentence id><text/><aspectTerms><aspectTerm term/>…`
//! * 2015/2016: `<Reviews><Review><sentences><sentence id><text/><Opinions><Opinion target/>…`
//!
//! Each `<sentence>` becomes one [`LabeledReview`]. Opinion targets equal to
//! `NULL` (implicit aspects) contribute no gold term.

use std::path::Path;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::LabeledReview;
use crate::corpus::Preprocessor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemEvalSchema {
    AspectTerms2014,
    Opinions2015,
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::Xml(e.to_string())
}

fn attribute(element: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>> {
    for attr in element.attributes() {
        let attr = attr.map_err(xml_err)?;
        if attr.key.as_ref() == name {
            return Ok(Some(attr.unescape_value().map_err(xml_err)?.into_owned()));
        }
    }
    Ok(None)
}

#[derive(Default)]
struct SentenceBuilder {
    id: String,
    text: String,
    terms: Vec<String>,
}

pub fn parse_semeval(
    xml: &str,
    preprocessor: &Preprocessor,
) -> Result<(SemEvalSchema, Vec<LabeledReview>)> {
    let mut reader = Reader::from_str(xml);
    let mut schema: Option<SemEvalSchema> = None;
    let mut current: Option<SentenceBuilder> = None;
    let mut in_text = false;
    let mut out = Vec::new();

    loop {
        let event = reader.read_event().map_err(xml_err)?;
        match &event {
            Event::Start(e) | Event::Empty(e) => {
                let name = e.name();
                let name = name.as_ref();
                if schema.is_none() {
                    schema = Some(match name {
                        b"sentences" => SemEvalSchema::AspectTerms2014,
                        b"Reviews" => SemEvalSchema::Opinions2015,
                        other => {
                            return Err(Error::Xml(format!(
                                "unknown SemEval schema with root element <{}>",
                                String::from_utf8_lossy(other)
                            )))
                        }
                    });
                }
                match name {
                    b"sentence" => {
                        let id = attribute(e, b"id")?.unwrap_or_else(|| out.len().to_string());
                        current = Some(SentenceBuilder {
                            id,
                            ..Default::default()
                        });
                    }
                    b"text" if matches!(event, Event::Start(_)) => in_text = current.is_some(),
                    b"aspectTerm" => {
                        if let (Some(s), Some(term)) = (current.as_mut(), attribute(e, b"term")?) {
                            s.terms.push(term);
                        }
                    }
                    b"Opinion" => {
                        if let (Some(s), Some(target)) =
                            (current.as_mut(), attribute(e, b"target")?)
                        {
                            if target != "NULL" {
                                s.terms.push(target);
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) if in_text => {
                if let Some(s) = current.as_mut() {
                    s.text.push_str(&t.xml_content().map_err(xml_err)?);
                }
            }
            Event::CData(t) if in_text => {
                if let Some(s) = current.as_mut() {
                    s.text.push_str(&String::from_utf8_lossy(t));
                }
            }
            Event::GeneralRef(r) if in_text => {
                let resolved = match r.resolve_char_ref().map_err(xml_err)? {
                    Some(c) => c.to_string(),
                    None => {
                        let name = r.decode().map_err(xml_err)?;
                        resolve_predefined_entity(&name)
                            .ok_or_else(|| Error::Xml(format!("unknown entity &{name};")))?
                            .to_string()
                    }
                };
                if let Some(s) = current.as_mut() {
                    s.text.push_str(&resolved);
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"text" => in_text = false,
                b"sentence" => {
                    if let Some(s) = current.take() {
                        let terms: Vec<&str> = s.terms.iter().map(String::as_str).collect();
                        out.push(LabeledReview::from_text(s.id, s.text, &terms, preprocessor));
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    let schema = schema.ok_or_else(|| Error::Xml("document has no root element".into()))?;
    Ok((schema, out))
}

pub fn load_semeval(path: &Path, preprocessor: &Preprocessor) -> Result<Vec<LabeledReview>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_semeval(&text, preprocessor)
        .map(|(_, reviews)| reviews)
        .map_err(|e| match e {
            Error::Xml(msg) => Error::Xml(format!("{}: {msg}", path.display())),
            other => other,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{NormalizerKind, PreprocessConfig};

    fn pre() -> Preprocessor {
        Preprocessor::new(PreprocessConfig {
            min_doc_freq: 1,
            stopwords: ["the", "is", "and", "a", "with"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            normalizer: NormalizerKind::Stem,
        })
    }

    const XML_2014: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="813">
    <text>The menus &amp; the bar were great</text>
    <aspectTerms>
      <aspectTerm term="menus" polarity="positive" from="4" to="9"/>
      <aspectTerm term="bar" polarity="positive" from="20" to="23"/>
    </aspectTerms>
  </sentence>
  <sentence id="814">
    <text>Nothing to add.</text>
  </sentence>
</sentences>"#;

    const XML_2016: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Reviews>
  <Review rid="1004293">
    <sentences>
      <sentence id="1004293:0">
        <text>Judging from previous posts this used to be a good place, but not any longer.</text>
        <Opinions>
          <Opinion target="NULL" category="RESTAURANT#GENERAL" polarity="negative" from="0" to="0"/>
        </Opinions>
      </sentence>
      <sentence id="1004293:1">
        <text>The sea bass was superb.</text>
        <Opinions>
          <Opinion target="sea bass" category="FOOD#QUALITY" polarity="positive" from="4" to="12"/>
          <Opinion target="sea bass" category="FOOD#STYLE_OPTIONS" polarity="positive" from="4" to="12"/>
        </Opinions>
      </sentence>
    </sentences>
  </Review>
</Reviews>"#;

    #[test]
    fn parses_2014_aspect_terms() {
        let (schema, reviews) = parse_semeval(XML_2014, &pre()).unwrap();
        assert_eq!(schema, SemEvalSchema::AspectTerms2014);
        assert_eq!(reviews.len(), 2);
        assert_eq!(reviews[0].review_id, "813");
        assert_eq!(reviews[0].raw, "The menus & the bar were great");
        let heads: Vec<&str> = reviews[0]
            .gold_terms
            .iter()
            .map(|g| g.head.as_str())
            .collect();
        assert_eq!(heads, vec!["menus", "bar"]);
        assert!(reviews[1].gold_terms.is_empty());
    }

    #[test]
    fn parses_2016_opinions_and_skips_null_targets() {
        let (schema, reviews) = parse_semeval(XML_2016, &pre()).unwrap();
        assert_eq!(schema, SemEvalSchema::Opinions2015);
        assert!(reviews[0].gold_terms.is_empty());
        assert_eq!(reviews[1].gold_terms.len(), 1);
        assert_eq!(reviews[1].gold_terms[0].tokens, vec!["sea", "bass"]);
        assert_eq!(reviews[1].gold_terms[0].head, "bass");
    }

    #[test]
    fn rejects_unknown_roots_and_broken_xml() {
        assert!(matches!(
            parse_semeval("<corpus></corpus>", &pre()),
            Err(Error::Xml(_))
        ));
        assert!(parse_semeval("<sentences><sentence id=\"1\"><text>a</sentence>", &pre()).is_err());
        assert!(parse_semeval("", &pre()).is_err());
    }
}
