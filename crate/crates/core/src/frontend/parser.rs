use super::lexer::{lex, Tok};
use super::{ParseError, Pos, SpecFile};
use crate::terms::{
    build_system, CommHead, Direction, Equation, GlobalTerm, ProcessEnv, ProcessHead, ProcessTerm,
    Session, Term, TermError,
};
use crate::{MessageLabel, Participant, ParticipantSet};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

const KEYWORDS: [&str; 5] = ["process", "session", "global", "ignored", "end"];

struct SessionDef {
    name: String,
    pos: Pos,
    bindings: Vec<(Participant, Pos, String)>,
}

#[derive(Default)]
struct Defs {
    processes: Vec<(Equation<ProcessHead>, Pos)>,
    globals: Vec<(Equation<CommHead>, Pos)>,
    sessions: Vec<SessionDef>,
    ignored: Vec<(String, ParticipantSet)>,
    process_refs: Vec<(String, Pos)>,
    global_refs: Vec<(String, Pos)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    defs: Defs,
}

pub(super) fn parse(text: &str) -> Result<SpecFile, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        defs: Defs::default(),
    };
    let mut seen: HashMap<String, Pos> = HashMap::new();
    while p.peek() != &Tok::Eof {
        let pos = p.pos();
        let kw = p.ident("a definition keyword")?;
        let name = p.name()?;
        if seen.insert(name.clone(), pos).is_some() {
            return Err(ParseError::term(pos, TermError::DuplicateDefinition(name)));
        }
        p.expect(Tok::Eq)?;
        match kw.as_str() {
            "process" => {
                let body = p.process()?;
                p.defs.processes.push((Equation { name, body }, pos));
            }
            "global" => {
                let body = p.global()?;
                p.defs.globals.push((Equation { name, body }, pos));
            }
            "session" => p.session(name, pos)?,
            "ignored" => {
                let set = p.participant_set()?;
                p.defs.ignored.push((name, set));
            }
            other => {
                return Err(ParseError::syntax(
                    pos,
                    format!(
                        "expected `process`, `session`, `global` or `ignored`, found `{other}`"
                    ),
                ))
            }
        }
    }
    p.finish()
}

/// A global type given either as a bare term or as equations
/// `Name = term`, each optionally prefixed by `global`. The first equation
/// is the root.
pub(super) fn parse_global(text: &str) -> Result<crate::GlobalGraph, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        defs: Defs::default(),
    };
    let mut eqs = Vec::new();
    let bare = !matches!(
        (p.peek(), p.peek2()),
        (Tok::Ident(_), Tok::Eq) | (Tok::Ident(_), Tok::Ident(_))
    );
    if bare {
        let pos = p.pos();
        let body = p.global()?;
        eqs.push((
            Equation {
                name: "_".into(),
                body,
            },
            pos,
        ));
        if p.peek() != &Tok::Eof {
            return p.error("end of input");
        }
    }
    while p.peek() != &Tok::Eof {
        if matches!(p.peek(), Tok::Ident(k) if k == "global") {
            p.next();
        }
        let pos = p.pos();
        let name = p.name()?;
        p.expect(Tok::Eq)?;
        let body = p.global()?;
        eqs.push((Equation { name, body }, pos));
    }
    p.defs.globals = eqs;
    let spec = p.finish()?;
    let root = spec.globals.entries.first().map(|(_, n)| *n).unwrap_or(0);
    Ok(spec.globals.graph.subgraph(root))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.next();
            Ok(())
        } else {
            self.error(&tok.describe())
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    /// An identifier that is not a keyword.
    fn name(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        let s = self.ident("a name")?;
        if KEYWORDS.contains(&s.as_str()) {
            return Err(ParseError::syntax(pos, format!("`{s}` is reserved")));
        }
        Ok(s)
    }

    fn participant(&mut self) -> Result<Participant, ParseError> {
        let s = self.name()?;
        Ok(Participant::new(&s))
    }

    fn label(&mut self) -> Result<MessageLabel, ParseError> {
        let s = self.ident("a message label")?;
        Ok(MessageLabel::new(&s))
    }

    /// `label [. cont]` or `{ label [. cont], ... }`.
    fn branches<H>(
        &mut self,
        cont: fn(&mut Self) -> Result<Term<H>, ParseError>,
    ) -> Result<Vec<(MessageLabel, Term<H>)>, ParseError> {
        let one = |p: &mut Self| -> Result<(MessageLabel, Term<H>), ParseError> {
            let label = p.label()?;
            let body = if p.eat(&Tok::Dot) {
                cont(p)?
            } else {
                Term::End
            };
            Ok((label, body))
        };
        if self.eat(&Tok::LBrace) {
            let mut out = vec![one(self)?];
            while self.eat(&Tok::Comma) {
                out.push(one(self)?);
            }
            self.expect(Tok::RBrace)?;
            Ok(out)
        } else {
            Ok(vec![one(self)?])
        }
    }

    fn process(&mut self) -> Result<ProcessTerm, ParseError> {
        let pos = self.pos();
        match (self.peek().clone(), self.peek2().clone()) {
            (Tok::Zero, _) => {
                self.next();
                Ok(Term::End)
            }
            (Tok::Ident(_), Tok::Bang) | (Tok::Ident(_), Tok::Query) => {
                let peer = self.participant()?;
                let dir = if self.next() == Tok::Bang {
                    Direction::Send
                } else {
                    Direction::Receive
                };
                let branches = self.branches(Self::process)?;
                Ok(Term::Choice {
                    head: ProcessHead { dir, peer },
                    branches,
                })
            }
            (Tok::Ident(_), _) => {
                let name = self.name()?;
                self.defs.process_refs.push((name.clone(), pos));
                Ok(Term::Ref(name))
            }
            _ => self.error("a process"),
        }
    }

    fn global(&mut self) -> Result<GlobalTerm, ParseError> {
        let pos = self.pos();
        match (self.peek().clone(), self.peek2().clone()) {
            (Tok::Ident(s), _) if s == "end" => {
                self.next();
                Ok(Term::End)
            }
            (Tok::Ident(_), Tok::Arrow) => {
                let from = self.participant()?;
                self.next();
                let to = self.participant()?;
                if from == to {
                    return Err(ParseError::term(
                        pos,
                        TermError::SelfCommunication(from.to_string()),
                    ));
                }
                self.expect(Tok::Colon)?;
                let branches = self.branches(Self::global)?;
                Ok(Term::Choice {
                    head: CommHead { from, to },
                    branches,
                })
            }
            (Tok::Ident(_), _) => {
                let name = self.name()?;
                self.defs.global_refs.push((name.clone(), pos));
                Ok(Term::Ref(name))
            }
            _ => self.error("a global type"),
        }
    }

    /// `p: proc | q: proc` or `0`.
    fn session(&mut self, name: String, pos: Pos) -> Result<(), ParseError> {
        let mut bindings = Vec::new();
        if !self.eat(&Tok::Zero) {
            loop {
                let ppos = self.pos();
                let part = self.participant()?;
                self.expect(Tok::Colon)?;
                let body = self.process()?;
                let synthetic = format!("{name}:{part}");
                if bindings.iter().any(|(q, _, _)| q == &part) {
                    return Err(ParseError::term(
                        ppos,
                        TermError::DuplicateDefinition(format!("{name}:{part}")),
                    ));
                }
                self.defs.processes.push((
                    Equation {
                        name: synthetic.clone(),
                        body,
                    },
                    ppos,
                ));
                bindings.push((part, ppos, synthetic));
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
        }
        self.defs.sessions.push(SessionDef {
            name,
            pos,
            bindings,
        });
        Ok(())
    }

    fn participant_set(&mut self) -> Result<ParticipantSet, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut set = ParticipantSet::new();
        if !self.eat(&Tok::RBrace) {
            set.insert(self.participant()?);
            while self.eat(&Tok::Comma) {
                set.insert(self.participant()?);
            }
            self.expect(Tok::RBrace)?;
        }
        Ok(set)
    }

    fn finish(self) -> Result<SpecFile, ParseError> {
        let defs = self.defs;
        let proc_names: HashMap<&str, Pos> = defs
            .processes
            .iter()
            .map(|(e, p)| (e.name.as_str(), *p))
            .collect();
        let global_names: HashMap<&str, Pos> = defs
            .globals
            .iter()
            .map(|(e, p)| (e.name.as_str(), *p))
            .collect();
        for (name, pos) in &defs.process_refs {
            if !proc_names.contains_key(name.as_str()) {
                return Err(ParseError::term(
                    *pos,
                    TermError::UndefinedName(name.clone()),
                ));
            }
        }
        for (name, pos) in &defs.global_refs {
            if !global_names.contains_key(name.as_str()) {
                return Err(ParseError::term(
                    *pos,
                    TermError::UndefinedName(name.clone()),
                ));
            }
        }

        let at = |names: &HashMap<&str, Pos>, err: &TermError| -> Pos {
            let key = match err {
                TermError::UnguardedRecursion(n)
                | TermError::EmptyChoice(n)
                | TermError::DuplicateDefinition(n)
                | TermError::UndefinedName(n)
                | TermError::DuplicateBranchLabel { definition: n, .. } => n.as_str(),
                _ => "",
            };
            names.get(key).copied().unwrap_or(Pos { line: 1, col: 1 })
        };

        let peqs: Vec<_> = defs.processes.iter().map(|(e, _)| e.clone()).collect();
        let psys = build_system(&peqs).map_err(|e| ParseError::term(at(&proc_names, &e), e))?;
        let geqs: Vec<_> = defs.globals.iter().map(|(e, _)| e.clone()).collect();
        let gsys = build_system(&geqs).map_err(|e| ParseError::term(at(&global_names, &e), e))?;

        let mut names = BTreeMap::new();
        let mut process_defs = Vec::new();
        for (name, id) in &psys.entries {
            if !name.contains(':') {
                names.entry(*id).or_insert_with(|| name.clone());
                process_defs.push((name.clone(), *id));
            }
        }
        let env = Arc::new(ProcessEnv::new(psys.graph.clone(), names));

        let mut sessions = Vec::new();
        for def in defs.sessions {
            let bindings = def
                .bindings
                .iter()
                .map(|(p, _, syn)| (p.clone(), psys.get(syn).expect("synthetic equation")));
            let s =
                Session::new(env.clone(), bindings).map_err(|e| ParseError::term(def.pos, e))?;
            sessions.push((def.name, s));
        }

        Ok(SpecFile {
            processes: env,
            process_defs,
            sessions,
            globals: gsys,
            ignored_sets: defs.ignored,
        })
    }
}
