//! Minimal CoNLL-U reading and writing.
//!
//! Only the columns the pipeline uses are kept (ID, FORM, LEMMA, UPOS, HEAD,
//! DEPREL). Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are
//! skipped. Documents start at `# newdoc id = <page url>`; sentence ids come
//! from `# sent_id = ...` and default to a running counter.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive 1-based token range; serialized as `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Index of the syntactic head, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(index: usize, form: &str, lemma: &str, upos: &str, head: usize, deprel: &str) -> Self {
        Token {
            index,
            form: form.to_owned(),
            lemma: lemma.to_owned(),
            upos: upos.to_owned(),
            head,
            deprel: deprel.to_owned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub doc_url: String,
    pub sent_id: String,
    pub tokens: Vec<Token>,
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based `index`.
    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    fn malformed(&self, msg: impl Into<String>) -> Error {
        Error::MalformedTree {
            sent_id: self.sent_id.clone(),
            msg: msg.into(),
        }
    }

    /// Contiguous ids from 1, heads in range, exactly one root, no cycles.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(self.malformed(format!("token ids not contiguous at position {}", i + 1)));
            }
            if t.head > n {
                return Err(self.malformed(format!("head {} of token {} out of range", t.head, t.index)));
            }
            if t.head == t.index {
                return Err(self.malformed(format!("token {} is its own head", t.index)));
            }
            if t.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(self.malformed(format!("expected one root, found {roots}")));
        }
        // every token must reach the root within n steps
        for t in &self.tokens {
            let mut cur = t.index;
            let mut steps = 0;
            while cur != 0 {
                cur = self.tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(self.malformed(format!("cycle through token {}", t.index)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub url: String,
    pub sentences: Vec<ParsedSentence>,
}

pub fn read_conllu<R: BufRead>(name: &str, reader: R) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut counter = 0usize;

    fn flush(
        docs: &mut Vec<Document>,
        tokens: &mut Vec<Token>,
        sent_id: &mut Option<String>,
        counter: &mut usize,
    ) {
        if tokens.is_empty() {
            *sent_id = None;
            return;
        }
        if docs.is_empty() {
            docs.push(Document {
                url: String::new(),
                sentences: Vec::new(),
            });
        }
        *counter += 1;
        let doc = docs.last_mut().unwrap();
        doc.sentences.push(ParsedSentence {
            doc_url: doc.url.clone(),
            sent_id: sent_id.take().unwrap_or_else(|| counter.to_string()),
            tokens: std::mem::take(tokens),
        });
    }

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut docs, &mut tokens, &mut sent_id, &mut counter);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "newdoc id" => {
                        flush(&mut docs, &mut tokens, &mut sent_id, &mut counter);
                        docs.push(Document {
                            url: value.trim().to_owned(),
                            sentences: Vec::new(),
                        });
                    }
                    "sent_id" => sent_id = Some(value.trim().to_owned()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(name, lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(name, lineno, format!("bad token id {:?}", cols[0])))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(name, lineno, format!("bad head {:?}", cols[6])))?;
        tokens.push(Token::new(index, cols[1], cols[2], cols[3], head, cols[7]));
    }
    flush(&mut docs, &mut tokens, &mut sent_id, &mut counter);
    Ok(docs)
}

pub fn read_conllu_file(path: &Path) -> Result<Vec<Document>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_conllu(&path.display().to_string(), BufReader::new(f))
}

/// Read every `*.conllu` file in `dir`, in file-name order.
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<Document>> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
        .collect();
    files.sort();
    let mut docs = Vec::new();
    for f in files {
        docs.extend(read_conllu_file(&f)?);
    }
    Ok(docs)
}

pub fn write_conllu<W: Write>(mut w: W, docs: &[Document]) -> std::io::Result<()> {
    for doc in docs {
        writeln!(w, "# newdoc id = {}", doc.url)?;
        for s in &doc.sentences {
            writeln!(w, "# sent_id = {}", s.sent_id)?;
            let text: Vec<&str> = s.tokens.iter().map(|t| t.form.as_str()).collect();
            writeln!(w, "# text = {}", text.join(" "))?;
            for t in &s.tokens {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                    t.index, t.form, t.lemma, t.upos, t.head, t.deprel
                )?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Documents plus an index from `(doc_url, sent_id)` to sentence.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<(String, String), (usize, usize)>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Self {
        let mut index = HashMap::new();
        for (d, doc) in docs.iter().enumerate() {
            for (s, sent) in doc.sentences.iter().enumerate() {
                index.insert((doc.url.clone(), sent.sent_id.clone()), (d, s));
            }
        }
        Corpus { docs, index }
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_url: &str, sent_id: &str) -> Option<&ParsedSentence> {
        self.index
            .get(&(doc_url.to_owned(), sent_id.to_owned()))
            .map(|&(d, s)| &self.docs[d].sentences[s])
    }

    pub fn num_sentences(&self) -> usize {
        self.index.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# newdoc id = http://example.org/a
# sent_id = a-1
1\tForget\tforget\tVERB\t_\t_\t3\tcsubj\t_\t_
2\tHer\ther\tPRON\t_\t_\t1\tdobj\t_\t_
3\tis\tbe\tAUX\t_\t_\t0\tROOT\t_\t_

# newdoc id = http://example.org/b
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_
1\tdo\tdo\tAUX\t_\t_\t0\tROOT\t_\t_
2\tn't\tnot\tPART\t_\t_\t1\tneg\t_\t_
";

    #[test]
    fn reads_documents_and_sentences() {
        let docs = read_conllu("sample", SAMPLE.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].url, "http://example.org/a");
        assert_eq!(docs[0].sentences[0].sent_id, "a-1");
        assert_eq!(docs[0].sentences[0].len(), 3);
        assert_eq!(docs[1].sentences[0].len(), 2);
        assert_eq!(docs[1].sentences[0].doc_url, "http://example.org/b");
        assert!(docs[1].sentences[0].validate().is_ok());
    }

    #[test]
    fn write_then_read_is_identity() {
        let docs = read_conllu("sample", SAMPLE.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_conllu(&mut out, &docs).unwrap();
        let back = read_conllu("out", out.as_slice()).unwrap();
        assert_eq!(back, docs);
    }

    #[test]
    fn bad_column_count_reports_line() {
        let err = read_conllu("x", "1\ta\tb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn validate_rejects_cycles_and_multiple_roots() {
        let cyc = ParsedSentence {
            doc_url: String::new(),
            sent_id: "s".into(),
            tokens: vec![
                Token::new(1, "a", "a", "X", 2, "dep"),
                Token::new(2, "b", "b", "X", 1, "dep"),
                Token::new(3, "c", "c", "X", 0, "ROOT"),
            ],
        };
        let err = cyc.validate().unwrap_err();
        assert!(matches!(err, Error::MalformedTree { ref sent_id, .. } if sent_id == "s"));

        let two = ParsedSentence {
            doc_url: String::new(),
            sent_id: "t".into(),
            tokens: vec![
                Token::new(1, "a", "a", "X", 0, "ROOT"),
                Token::new(2, "b", "b", "X", 0, "ROOT"),
            ],
        };
        assert!(two.validate().is_err());
    }

    #[test]
    fn corpus_index_lookup() {
        let corpus = Corpus::new(read_conllu("sample", SAMPLE.as_bytes()).unwrap());
        assert!(corpus.get("http://example.org/a", "a-1").is_some());
        assert!(corpus.get("http://example.org/a", "zzz").is_none());
        assert_eq!(corpus.num_sentences(), 2);
    }
}
