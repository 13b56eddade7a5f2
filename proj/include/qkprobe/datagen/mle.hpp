#pragma once

//! Everyday-theme yes/no generation over a registry of inference schemes.
//!
//! Every scheme is a short chain of the thirteen supported inference rules.
//! Depth-1 schemes exercise each rule alone; deeper schemes compose them
//! (modus ponens after modus tollens, stacked dilemmas, and so on).  Each
//! scheme contributes per_scheme samples split exactly 50/50 between "yes"
//! (statement is the chain conclusion) and "no" (statement is its negation,
//! over the same context).  Surface text is drawn from themed verb-phrase
//! lexicons with several sentence templates per premise shape.
//!
//! The first emitted sample is pinned to the documented worked example: the
//! fishing theme's modus ponens at depth 1, rendered with the primary
//! templates ("If a person uses a fishing rod, they catch fish. Michael uses
//! a fishing rod." / "Does Michael catch fish?").

#include <algorithm>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/datagen/certify.hpp"
#include "qkprobe/datagen/lexicon.hpp"
#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/datagen/split.hpp"
#include "qkprobe/logic/formula.hpp"
#include "qkprobe/logic/rules.hpp"

namespace qkprobe::datagen {

using logic::InferenceRule;

struct MleScheme {
    std::string name;  // rule tags joined with '-'
    std::vector<InferenceRule> seq;
    int depth() const { return static_cast<int>(seq.size()); }
};

inline const std::vector<MleScheme>& mle_schemes() {
    using R = InferenceRule;
    auto named = [](std::vector<R> seq) {
        std::string name;
        for (size_t i = 0; i < seq.size(); ++i) {
            if (i) name += "-";
            name += logic::rule_name(seq[i]);
        }
        return MleScheme{std::move(name), std::move(seq)};
    };
    static const std::vector<MleScheme> all = {
        // depth 1: every rule on its own
        named({R::MP}), named({R::MT}), named({R::HS}), named({R::DS}), named({R::CD}),
        named({R::DD}), named({R::BD}), named({R::CT}), named({R::DMT}), named({R::CO}),
        named({R::IM}), named({R::EG}), named({R::UI}),
        // depth 2
        named({R::MP, R::MP}), named({R::MP, R::EG}), named({R::MT, R::DS}),
        named({R::MT, R::MT}), named({R::DS, R::MP}), named({R::CD, R::CD}),
        named({R::DD, R::DD}),
        // depth 3
        named({R::MP, R::MP, R::MP}), named({R::MT, R::MT, R::MT}),
        named({R::MT, R::DS, R::MP}), named({R::DS, R::MP, R::MP}),
        named({R::UI, R::MP, R::MP}), named({R::CD, R::CD, R::CD}),
        named({R::DD, R::DD, R::DD}), named({R::BD, R::BD, R::BD}),
        named({R::MP, R::MP, R::EG}),
        // depth 4
        named({R::MP, R::MP, R::MP, R::MP}), named({R::MT, R::MT, R::MT, R::MT}),
        named({R::MT, R::MT, R::DS, R::MP}), named({R::DS, R::MP, R::MP, R::MP}),
        named({R::CD, R::CD, R::CD, R::CD}), named({R::UI, R::MP, R::MP, R::EG}),
        named({R::BD, R::BD, R::BD, R::BD}),
    };
    return all;
}

namespace detail {

// ---------------------------------------------------------------------------
// Premise sentence templates, four surface variants per shape
// ---------------------------------------------------------------------------

inline std::string uimp_text(const std::string& p, const std::string& q, int v) {
    switch (v % 4) {
        case 0: return "If a person " + inflect_sg(p) + ", they " + q + ".";
        case 1: return "Whenever someone " + inflect_sg(p) + ", they " + q + ".";
        case 2: return "Every person who " + inflect_sg(p) + " also " + inflect_sg(q) + ".";
        default: return "Anyone who " + inflect_sg(p) + " will " + q + ".";
    }
}

inline std::string fact_text(const std::string& name, const std::string& p, int v) {
    switch (v % 4) {
        case 0: return name + " " + inflect_sg(p) + ".";
        case 1: return "We know that " + name + " " + inflect_sg(p) + ".";
        case 2: return "It is known that " + name + " " + inflect_sg(p) + ".";
        default: return "It is true that " + name + " " + inflect_sg(p) + ".";
    }
}

inline std::string negfact_text(const std::string& name, const std::string& p, int v) {
    switch (v % 4) {
        case 0: return name + " does not " + p + ".";
        case 1: return "We know that " + name + " does not " + p + ".";
        case 2: return "It is not true that " + name + " " + inflect_sg(p) + ".";
        default: return name + " never " + inflect_sg(p) + ".";
    }
}

inline std::string udisj_text(const std::string& a, const std::string& b, int v) {
    switch (v % 4) {
        case 0: return "Every person either " + inflect_sg(a) + " or " + inflect_sg(b) + ".";
        case 1: return "Everyone either " + inflect_sg(a) + " or " + inflect_sg(b) + ".";
        case 2: return "Each person " + inflect_sg(a) + " or " + inflect_sg(b) + ".";
        default: return "Any person either " + inflect_sg(a) + " or " + inflect_sg(b) + ".";
    }
}

/// Ground clause: "Michael packs fresh bait" / "Michael does not pack fresh bait".
inline std::string ground_clause(const std::string& name, const std::string& pred,
                                 bool positive) {
    if (positive) return name + " " + inflect_sg(pred);
    return name + " does not " + pred;
}

inline std::string gdisj_text(const std::string& ca, const std::string& cb, int v) {
    switch (v % 4) {
        case 0: return ca + " or " + cb + ".";
        case 1: return "Either " + ca + ", or " + cb + ".";
        case 2: return "We know that " + ca + " or " + cb + ".";
        default: return "At least one of these holds: " + ca + ", or " + cb + ".";
    }
}

inline std::string nested_imp_text(const std::string& p, const std::string& q,
                                   const std::string& r, int v) {
    switch (v % 4) {
        case 0: return "If a person " + inflect_sg(p) + ", then if they " + q + ", they " + r + ".";
        case 1:
            return "Whenever someone " + inflect_sg(p) + ", if they also " + q + ", they " + r +
                   ".";
        case 2: return "For any person who " + inflect_sg(p) + ": if they " + q + ", they " + r + ".";
        default:
            return "If someone " + inflect_sg(p) + ", then provided they " + q + ", they " + r +
                   ".";
    }
}

inline std::string neg_forall_conj_text(const std::string& p, const std::string& q, int v) {
    switch (v % 4) {
        case 0: return "Not every person " + inflect_sg(p) + " and " + inflect_sg(q) + ".";
        case 1:
            return "It is not true that every person " + inflect_sg(p) + " and " + inflect_sg(q) +
                   ".";
        case 2:
            return "It is not the case that everyone " + inflect_sg(p) + " and " + inflect_sg(q) +
                   ".";
        default: return "Not everyone both " + inflect_sg(p) + " and " + inflect_sg(q) + ".";
    }
}

inline std::string ulit_text(const std::string& p, int v) {
    switch (v % 4) {
        case 0: return "Every person " + inflect_sg(p) + ".";
        case 1: return "Everyone " + inflect_sg(p) + ".";
        case 2: return "All people " + p + ".";
        default: return "Each person " + inflect_sg(p) + ".";
    }
}

// ---------------------------------------------------------------------------
// Declarative rendering of statement formulas (the closed shape set the
// schemes emit, both polarities)
// ---------------------------------------------------------------------------

/// Bound-variable clause in third-person singular: "catches fish" /
/// "does not catch fish"; And/Or compose left to right.
inline std::string var_body_sg(const logic::Formula& f) {
    using logic::Conn;
    switch (f.kind) {
        case Conn::And: return var_body_sg(f.kids[0]) + " and " + var_body_sg(f.kids[1]);
        case Conn::Or: return var_body_sg(f.kids[0]) + " or " + var_body_sg(f.kids[1]);
        case Conn::Not: return "does not " + f.kids[0].pred.name;
        default: return inflect_sg(f.pred.name);
    }
}

/// Same clause after "they": base form ("catch fish" / "do not catch fish").
inline std::string var_body_they(const logic::Formula& f) {
    using logic::Conn;
    switch (f.kind) {
        case Conn::And: return var_body_they(f.kids[0]) + " and " + var_body_they(f.kids[1]);
        case Conn::Or: return var_body_they(f.kids[0]) + " or " + var_body_they(f.kids[1]);
        case Conn::Not: return "do not " + f.kids[0].pred.name;
        default: return f.pred.name;
    }
}

inline std::string ground_body(const logic::Formula& f, const std::string& display) {
    using logic::Conn;
    switch (f.kind) {
        case Conn::And: return ground_body(f.kids[0], display) + " and " + ground_body(f.kids[1], display);
        case Conn::Or: return ground_body(f.kids[0], display) + " or " + ground_body(f.kids[1], display);
        case Conn::Imp:
            return "if " + ground_body(f.kids[0], display) + ", then " +
                   ground_body(f.kids[1], display);
        case Conn::Not: return ground_clause(display, f.kids[0].pred.name, false);
        default: return ground_clause(display, f.pred.name, true);
    }
}

inline std::string declarative(const logic::Formula& f, const std::string& display) {
    using logic::Conn;
    if (f.kind == Conn::ForAll) {
        const logic::Formula& body = f.kids[0];
        if (body.kind == Conn::Imp)
            return "if a person " + var_body_sg(body.kids[0]) + ", they " +
                   var_body_they(body.kids[1]);
        return "every person " + var_body_sg(body);
    }
    if (f.kind == Conn::Exists) return "there is a person who " + var_body_sg(f.kids[0]);
    return ground_body(f, display);
}

inline std::string question_text(const logic::Formula& statement, const std::string& display,
                                 int v) {
    using logic::Conn;
    if (v % 4 == 0) {
        if (statement.kind == Conn::Atom)
            return "Does " + display + " " + statement.pred.name + "?";
        if (statement.kind == Conn::Not && statement.kids[0].kind == Conn::Atom)
            return "Does " + display + " not " + statement.kids[0].pred.name + "?";
        return "Is it true that " + declarative(statement, display) + "?";
    }
    switch (v % 4) {
        case 1: return "Can we conclude that " + declarative(statement, display) + "?";
        case 2: return "Does it follow that " + declarative(statement, display) + "?";
        default:
            return "Based on the context, is it correct that " + declarative(statement, display) +
                   "?";
    }
}

// ---------------------------------------------------------------------------
// Chain construction
// ---------------------------------------------------------------------------

struct MleDraft {
    std::vector<Premise> premises;
    logic::Formula conclusion = logic::Formula::atom("x", logic::Term::constant("x"));
};

inline logic::Formula var_atom(const std::string& pred) {
    return logic::Formula::atom(pred, logic::Term::variable("x"));
}

inline logic::Formula uimp_formula(const std::string& a, const std::string& b) {
    return logic::Formula::forall("x", logic::Formula::imp(var_atom(a), var_atom(b)));
}

inline logic::Formula upair_formula(const std::string& a1, const std::string& c1,
                                    const std::string& a2, const std::string& c2) {
    return logic::Formula::forall(
        "x", logic::Formula::land(logic::Formula::imp(var_atom(a1), var_atom(c1)),
                                  logic::Formula::imp(var_atom(a2), var_atom(c2))));
}

/// Builds premises and the entailed conclusion for one scheme chain.  The
/// variant picker supplies a template index per rendered premise; `phrase`
/// yields fresh verb phrases.
template <typename PhraseFn, typename VariantFn>
MleDraft build_mle_chain(const std::vector<InferenceRule>& seq, const std::string& subject,
                         const std::string& display, PhraseFn&& phrase, VariantFn&& variant) {
    using logic::Formula;
    using logic::Term;
    using R = InferenceRule;
    MleDraft d;
    Term subj = Term::constant(subject);
    auto glit = [&](const std::string& pred, bool positive) {
        Formula f = Formula::atom(pred, subj);
        return positive ? f : Formula::lnot(f);
    };

    // current derived item: a ground literal or a two-literal disjunction
    struct Lit {
        std::string pred;
        bool positive = true;
    };
    Lit cur, cur2;
    bool is_disj = false;

    auto lit_formula = [&](const Lit& l) { return glit(l.pred, l.positive); };

    // chain start
    switch (seq[0]) {
        case R::MP: {
            std::string p = phrase(), q = phrase();
            d.premises.push_back({uimp_text(p, q, variant()), uimp_formula(p, q)});
            d.premises.push_back({fact_text(display, p, variant()), glit(p, true)});
            cur = {q, true};
            break;
        }
        case R::MT: {
            std::string a = phrase(), b = phrase();
            d.premises.push_back({uimp_text(a, b, variant()), uimp_formula(a, b)});
            d.premises.push_back({negfact_text(display, b, variant()), glit(b, false)});
            cur = {a, false};
            break;
        }
        case R::HS: {
            std::string a = phrase(), b = phrase(), c = phrase();
            int v = variant();
            d.premises.push_back({uimp_text(a, b, v) + " " + uimp_text(b, c, v),
                                  upair_formula(a, b, b, c)});
            d.conclusion = Formula::imp(glit(a, true), glit(c, true));
            return d;
        }
        case R::DS: {
            std::string a = phrase(), b = phrase();
            d.premises.push_back(
                {udisj_text(a, b, variant()),
                 Formula::forall("x", Formula::lor(var_atom(a), var_atom(b)))});
            d.premises.push_back({negfact_text(display, a, variant()), glit(a, false)});
            cur = {b, true};
            break;
        }
        case R::CD: {
            std::string a = phrase(), b = phrase(), c = phrase(), e = phrase();
            int v = variant();
            d.premises.push_back({uimp_text(a, b, v) + " " + uimp_text(c, e, v),
                                  upair_formula(a, b, c, e)});
            d.premises.push_back({gdisj_text(ground_clause(display, a, true),
                                             ground_clause(display, c, true), variant()),
                                  Formula::lor(glit(a, true), glit(c, true))});
            cur = {b, true};
            cur2 = {e, true};
            is_disj = true;
            break;
        }
        case R::DD: {
            std::string a = phrase(), b = phrase(), c = phrase(), e = phrase();
            int v = variant();
            d.premises.push_back({uimp_text(a, b, v) + " " + uimp_text(c, e, v),
                                  upair_formula(a, b, c, e)});
            d.premises.push_back({gdisj_text(ground_clause(display, b, false),
                                             ground_clause(display, e, false), variant()),
                                  Formula::lor(glit(b, false), glit(e, false))});
            cur = {a, false};
            cur2 = {c, false};
            is_disj = true;
            break;
        }
        case R::BD: {
            std::string a = phrase(), b = phrase(), c = phrase(), e = phrase();
            int v = variant();
            d.premises.push_back({uimp_text(a, b, v) + " " + uimp_text(c, e, v),
                                  upair_formula(a, b, c, e)});
            d.premises.push_back({gdisj_text(ground_clause(display, a, true),
                                             ground_clause(display, e, false), variant()),
                                  Formula::lor(glit(a, true), glit(e, false))});
            cur = {b, true};
            cur2 = {c, false};
            is_disj = true;
            break;
        }
        case R::CT: {
            std::string a = phrase(), b = phrase();
            d.premises.push_back(
                {udisj_text(a, b, variant()),
                 Formula::forall("x", Formula::lor(var_atom(a), var_atom(b)))});
            d.conclusion = Formula::forall("x", Formula::lor(var_atom(b), var_atom(a)));
            return d;
        }
        case R::DMT: {
            std::string a = phrase(), b = phrase();
            d.premises.push_back(
                {neg_forall_conj_text(a, b, variant()),
                 Formula::lnot(Formula::forall("x", Formula::land(var_atom(a), var_atom(b))))});
            d.conclusion = Formula::exists(
                "x", Formula::lor(Formula::lnot(var_atom(a)), Formula::lnot(var_atom(b))));
            return d;
        }
        case R::CO: {
            std::string a = phrase(), b = phrase(), c = phrase();
            int v = variant();
            d.premises.push_back({uimp_text(a, b, v) + " " + uimp_text(a, c, v),
                                  upair_formula(a, b, a, c)});
            d.conclusion = Formula::forall(
                "x", Formula::imp(var_atom(a), Formula::land(var_atom(b), var_atom(c))));
            return d;
        }
        case R::IM: {
            std::string p = phrase(), q = phrase(), r = phrase();
            d.premises.push_back(
                {nested_imp_text(p, q, r, variant()),
                 Formula::forall("x", Formula::imp(var_atom(p),
                                                   Formula::imp(var_atom(q), var_atom(r))))});
            d.conclusion = Formula::forall(
                "x", Formula::imp(Formula::land(var_atom(p), var_atom(q)), var_atom(r)));
            return d;
        }
        case R::EG: {
            std::string p = phrase();
            d.premises.push_back({fact_text(display, p, variant()), glit(p, true)});
            d.conclusion = Formula::exists("x", var_atom(p));
            return d;
        }
        case R::UI: {
            std::string p = phrase();
            d.premises.push_back(
                {ulit_text(p, variant()), Formula::forall("x", var_atom(p))});
            cur = {p, true};
            break;
        }
    }

    // continuation links
    for (size_t i = 1; i < seq.size(); ++i) {
        switch (seq[i]) {
            case R::MP: {
                std::string n = phrase();
                d.premises.push_back({uimp_text(cur.pred, n, variant()),
                                      uimp_formula(cur.pred, n)});
                cur = {n, true};
                break;
            }
            case R::MT: {
                std::string n = phrase();
                d.premises.push_back({uimp_text(n, cur.pred, variant()),
                                      uimp_formula(n, cur.pred)});
                cur = {n, false};
                break;
            }
            case R::DS: {
                std::string n = phrase();
                d.premises.push_back(
                    {udisj_text(cur.pred, n, variant()),
                     Formula::forall("x", Formula::lor(var_atom(cur.pred), var_atom(n)))});
                cur = {n, true};
                break;
            }
            case R::EG:
                d.conclusion = Formula::exists("x", var_atom(cur.pred));
                return d;
            case R::CD: {
                std::string e = phrase(), f = phrase();
                int v = variant();
                d.premises.push_back({uimp_text(cur.pred, e, v) + " " + uimp_text(cur2.pred, f, v),
                                      upair_formula(cur.pred, e, cur2.pred, f)});
                cur = {e, true};
                cur2 = {f, true};
                break;
            }
            case R::DD: {
                std::string e = phrase(), f = phrase();
                int v = variant();
                d.premises.push_back({uimp_text(e, cur.pred, v) + " " + uimp_text(f, cur2.pred, v),
                                      upair_formula(e, cur.pred, f, cur2.pred)});
                cur = {e, false};
                cur2 = {f, false};
                break;
            }
            case R::BD: {
                std::string e = phrase(), f = phrase();
                int v = variant();
                d.premises.push_back({uimp_text(cur.pred, e, v) + " " + uimp_text(f, cur2.pred, v),
                                      upair_formula(cur.pred, e, f, cur2.pred)});
                cur = {e, true};
                cur2 = {f, false};
                break;
            }
            default:
                throw ConfigError("scheme registry contains an unsupported continuation");
        }
    }

    d.conclusion = is_disj ? Formula::lor(lit_formula(cur), lit_formula(cur2))
                           : lit_formula(cur);
    return d;
}

inline bool has_negation(const logic::Formula& f) {
    if (f.kind == logic::Conn::Not) return true;
    for (const auto& k : f.kids)
        if (has_negation(k)) return true;
    return false;
}

inline std::string lowercased(std::string s) {
    for (auto& ch : s)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    return s;
}

}  // namespace detail

inline DatasetSplit gen_multilogieval(const GenConfig& config) {
    config.validate();
    if (config.family != "mle") throw ConfigError("gen_multilogieval expects family=mle");
    if (config.rule_mode != "scheme")
        throw ConfigError("mle samples are driven by the scheme registry; set rule_mode=scheme");
    if (config.distractors_min != 0 || config.distractors_max != 0)
        throw ConfigError("inserted distractors are a pronto-family feature");

    std::vector<const MleScheme*> active;
    for (const auto& s : mle_schemes())
        if (s.depth() >= config.hops_min && s.depth() <= config.hops_max) active.push_back(&s);
    int total = static_cast<int>(active.size()) * config.per_scheme;
    if (config.n_calibration + config.n_evaluation != total)
        throw ConfigError("mle sample counts are fixed by the scheme registry: " +
                          std::to_string(active.size()) + " schemes x " +
                          std::to_string(config.per_scheme) + " = " + std::to_string(total) +
                          ", so n_calibration + n_evaluation must equal " + std::to_string(total));

    std::vector<LogicSample> samples;
    samples.reserve(static_cast<size_t>(total));

    for (size_t si = 0; si < active.size(); ++si) {
        const MleScheme& scheme = *active[si];
        for (int i = 0; i < config.per_scheme; ++i) {
            Rng rng(mix_seed(config.seed, si * 100003ull + static_cast<uint64_t>(i)));
            // the very first modus ponens sample is the documented worked
            // example, byte for byte, regardless of seed
            bool canonical = scheme.name == "MP" && scheme.depth() == 1 && i == 0;

            const Theme& theme = canonical ? themes()[0] : rng.pick(themes());
            std::string display = canonical ? theme.subjects[0] : rng.pick(theme.subjects);
            std::string subject = detail::lowercased(display);
            std::vector<std::string> phrases = theme.phrases;
            if (!canonical) rng.shuffle(phrases);
            size_t phrase_i = 0;
            auto phrase = [&] {
                if (phrase_i == phrases.size())
                    throw ExhaustedOntology("theme phrase pool exhausted mid-chain");
                return phrases[phrase_i++];
            };
            auto variant = [&] { return canonical ? 0 : static_cast<int>(rng.uniform(4)); };

            detail::MleDraft draft =
                detail::build_mle_chain(scheme.seq, subject, display, phrase, variant);
            if (!canonical) rng.shuffle(draft.premises);

            bool yes = i % 2 == 0;
            LogicSample s;
            char idbuf[48];
            std::snprintf(idbuf, sizeof(idbuf), "mle-%s-%04d",
                          detail::lowercased(scheme.name).c_str(), i);
            s.id = idbuf;
            s.family = "mle";
            s.depth = scheme.depth();
            s.gold = yes ? 0 : 1;
            s.context = std::move(draft.premises);
            s.statement = yes ? draft.conclusion : logic::neg(draft.conclusion);
            s.statement_text = detail::question_text(s.statement, display, variant());
            s.polarity = detail::has_negation(s.statement) ? "negative" : "positive";
            for (const auto& r : scheme.seq) {
                std::string tag = logic::rule_name(r);
                if (std::find(s.rule_tags.begin(), s.rule_tags.end(), tag) == s.rule_tags.end())
                    s.rule_tags.push_back(tag);
            }
            std::sort(s.rule_tags.begin(), s.rule_tags.end());

            CertResult cr = certify_sample(s);
            if (!cr.ok)
                throw ConfigError("generator produced an uncertifiable sample: " + cr.reason);
            samples.push_back(std::move(s));
        }
    }

    DatasetSplit split = split_calibration_eval(samples, config.n_calibration, config.seed);
    split.config = config;
    return split;
}

}  // namespace qkprobe::datagen
