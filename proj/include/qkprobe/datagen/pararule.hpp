#pragma once

//! People/attribute world generation with fixed-depth chains.
//!
//! Each sample describes four named people with three attribute facts apiece,
//! then a pool of universal rules ("Strong people are smart.", "If someone is
//! thin and little then they are short.").  One person carries a rule chain
//! of exactly the requested depth ending at the probed attribute; the other
//! people carry short decoy chains over attributes the target never touches.
//! Statements are always in positive form; false golds come from a chain
//! whose final rule concludes the negated attribute.

#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/datagen/certify.hpp"
#include "qkprobe/datagen/lexicon.hpp"
#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/datagen/split.hpp"
#include "qkprobe/logic/formula.hpp"

namespace qkprobe::datagen {

namespace detail {

inline logic::Formula person_rule(const std::vector<std::string>& antecedents,
                                  const std::string& head, bool positive) {
    using logic::Formula;
    using logic::Term;
    Formula ante = Formula::atom(antecedents[0], Term::variable("x"));
    for (size_t i = 1; i < antecedents.size(); ++i)
        ante = Formula::land(ante, Formula::atom(antecedents[i], Term::variable("x")));
    Formula h = Formula::atom(head, Term::variable("x"));
    if (!positive) h = Formula::lnot(h);
    return Formula::forall("x", Formula::imp(ante, h));
}

inline std::string person_rule_text(const std::vector<std::string>& antecedents,
                                    const std::string& head, bool positive, int variant) {
    std::string neg = positive ? "" : "not ";
    if (antecedents.size() == 2)
        return "If someone is " + antecedents[0] + " and " + antecedents[1] +
               " then they are " + neg + head + ".";
    switch (variant % 3) {
        case 0: return capitalized(antecedents[0]) + " people are " + neg + head + ".";
        case 1: return "All " + antecedents[0] + " people are " + neg + head + ".";
        default: return "If someone is " + antecedents[0] + " then they are " + neg + head + ".";
    }
}

}  // namespace detail

inline DatasetSplit gen_pararule(const GenConfig& config) {
    config.validate();
    if (config.family != "pararule") throw ConfigError("gen_pararule expects family=pararule");
    if (config.distractors_min != 0 || config.distractors_max != 0)
        throw ConfigError("inserted distractors are a pronto-family feature");

    using logic::Formula;
    using logic::Term;
    int total = config.n_calibration + config.n_evaluation;
    std::vector<LogicSample> samples;
    samples.reserve(static_cast<size_t>(total));

    for (int i = 0; i < total; ++i) {
        Rng rng(mix_seed(config.seed, static_cast<uint64_t>(i)));
        int hops = rng.range(config.hops_min, config.hops_max);
        bool gold_true = i % 2 == 0;

        std::vector<std::string> people = person_names();
        std::vector<std::string> base = base_attributes();
        std::vector<std::string> derived = derived_attributes();
        rng.shuffle(people);
        rng.shuffle(base);
        rng.shuffle(derived);
        people.resize(4);
        size_t base_i = 0, derived_i = 0;

        // three facts per person, all attributes distinct across the world
        std::vector<std::vector<std::string>> facts(4);
        for (auto& fs : facts)
            for (int f = 0; f < 3; ++f) fs.push_back(base[base_i++]);

        std::vector<Premise> fact_premises;
        std::vector<Premise> rule_premises;
        for (size_t p = 0; p < 4; ++p) {
            std::string name = people[p];
            name[0] = static_cast<char>(name[0] - 'A' + 'a');
            for (const auto& attr : facts[p])
                fact_premises.push_back({people[p] + " is " + attr + ".",
                                         Formula::atom(attr, Term::constant(name))});
        }
        auto add_rule = [&](const std::vector<std::string>& ante, const std::string& head,
                            bool positive) {
            rule_premises.push_back(
                {detail::person_rule_text(ante, head, positive, static_cast<int>(rng.uniform(3))),
                 detail::person_rule(ante, head, positive)});
        };

        // target chain: person 0, first link off their facts, then a cascade
        // of derived attributes; the final head carries the gold polarity
        bool conj_first = rng.coin();
        std::string cur = derived[derived_i++];
        if (conj_first)
            add_rule({facts[0][0], facts[0][1]}, cur, hops > 1 || gold_true);
        else
            add_rule({facts[0][0]}, cur, hops > 1 || gold_true);
        if (hops > 1) {
            for (int link = 1; link < hops; ++link) {
                std::string next = derived[derived_i++];
                bool last = link + 1 == hops;
                add_rule({cur}, next, !last || gold_true);
                cur = next;
            }
        }

        // decoy chains for two other people over attributes the target
        // person never has, so nothing fires across chains
        for (size_t p = 1; p <= 2; ++p) {
            int links = rng.range(1, 2);
            std::string dcur = derived[derived_i++];
            if (rng.coin())
                add_rule({facts[p][0], facts[p][1]}, dcur, true);
            else
                add_rule({facts[p][2]}, dcur, true);
            for (int link = 1; link < links; ++link) {
                std::string next = derived[derived_i++];
                add_rule({dcur}, next, true);
                dcur = next;
            }
        }

        rng.shuffle(fact_premises);
        rng.shuffle(rule_premises);

        LogicSample s;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "pararule-%06d", i);
        s.id = idbuf;
        s.family = "pararule";
        s.depth = hops;
        s.polarity = "positive";
        s.gold = gold_true ? 0 : 1;
        s.context = std::move(fact_premises);
        s.context.insert(s.context.end(), rule_premises.begin(), rule_premises.end());
        std::string subject = people[0];
        subject[0] = static_cast<char>(subject[0] - 'A' + 'a');
        s.statement = Formula::atom(cur, Term::constant(subject));
        s.statement_text = people[0] + " is " + cur + ".";
        s.rule_tags = {"MP"};

        CertResult cr = certify_sample(s);
        if (!cr.ok) throw ConfigError("generator produced an uncertifiable sample: " + cr.reason);
        samples.push_back(std::move(s));
    }

    DatasetSplit split = split_calibration_eval(samples, config.n_calibration, config.seed);
    split.config = config;
    return split;
}

}  // namespace qkprobe::datagen
