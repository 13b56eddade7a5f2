#pragma once

//! Word material for the three generator families.
//!
//! Category names are pseudowords built from a small onset x vowel grammar
//! with a fixed noun suffix, so contexts read like the fictional-ontology
//! style ("rompus", "wumpus") without colliding with real vocabulary.
//! People and attribute pools are fixed lists; the question-answering themes
//! carry verb phrases in base form and inflect on demand.

#include <string>
#include <vector>

#include "qkprobe/common.hpp"

namespace qkprobe::datagen {

// ---------------------------------------------------------------------------
// Shared surface-text helpers
// ---------------------------------------------------------------------------

inline std::string capitalized(std::string word) {
    if (!word.empty() && word[0] >= 'a' && word[0] <= 'z')
        word[0] = static_cast<char>(word[0] - 'a' + 'A');
    return word;
}

inline std::string article_for(const std::string& word) {
    switch (word.empty() ? 'x' : word[0]) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u':
            return "an ";
        default:
            return "a ";
    }
}

/// Pseudoword categories all come from the closed grammar below, so the
/// suffix identifies them ("is a wumpus" vs "is opaque" rendering).
inline bool is_category_name(const std::string& word) {
    for (const char* suf : {"mpus", "lpus", "rpus", "ntus"}) {
        size_t n = 4;
        if (word.size() > n && word.compare(word.size() - n, n, suf) == 0) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Pseudoword categories
// ---------------------------------------------------------------------------

inline std::vector<std::string> category_lexicon(int count) {
    static const std::vector<std::string> onsets = {
        "w",  "r",  "j",  "v",  "z",  "d",  "t",  "n",  "y",  "g",
        "l",  "f",  "st", "br", "fl", "kr", "pl", "sn", "tr", "gr"};
    static const std::vector<std::string> vowels = {"u", "o", "a", "i", "e"};
    static const std::vector<std::string> suffixes = {"mpus", "lpus", "rpus", "ntus"};
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(count));
    // row-major walk keeps the list stable as count grows
    for (const auto& suf : suffixes) {
        for (const auto& v : vowels) {
            for (const auto& o : onsets) {
                out.push_back(o + v + suf);
                if (static_cast<int>(out.size()) == count) return out;
            }
        }
    }
    throw ExhaustedOntology("category lexicon tops out at " + std::to_string(out.size()) +
                            " names, requested " + std::to_string(count));
}

inline const std::vector<std::string>& attribute_lexicon() {
    static const std::vector<std::string> attrs = {
        "opaque", "sour",   "dull",    "shy",    "nervous", "bitter", "fruity", "spicy",
        "windy",  "bright", "feisty",  "mellow", "sleepy",  "fuzzy",  "loud",   "tiny",
        "brave",  "gentle", "prickly", "warm",   "chilly",  "glossy", "quiet",  "swift"};
    return attrs;
}

inline const std::vector<std::string>& pet_names() {
    static const std::vector<std::string> names = {"Polly", "Rex",  "Stella", "Max",  "Wren",
                                                   "Fae",   "Sam",  "Alex",   "Milo", "Ivy",
                                                   "Otto",  "June", "Basil",  "Nora"};
    return names;
}

// ---------------------------------------------------------------------------
// People-and-attributes worlds
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& person_names() {
    static const std::vector<std::string> names = {
        "Harry", "Anne",  "Gary", "Fiona", "Bob",   "Erin", "Dave", "Alan",
        "Carol", "Steve", "Ruth", "Peter", "Molly", "Noah", "Tina", "Victor"};
    return names;
}

/// Attributes people get as plain facts.
inline const std::vector<std::string>& base_attributes() {
    static const std::vector<std::string> attrs = {
        "strong", "big",  "high",  "thin",  "little", "smart", "quiet", "kind",
        "poor",   "rough", "sad",  "young", "old",    "round", "furry", "cold"};
    return attrs;
}

/// Attributes only ever introduced by rules.
inline const std::vector<std::string>& derived_attributes() {
    static const std::vector<std::string> attrs = {
        "short", "small", "nice", "wealthy", "bad", "dull", "clever", "heavy",
        "huge",  "tidy",  "calm", "cheerful", "bold", "careful", "popular", "strict"};
    return attrs;
}

// ---------------------------------------------------------------------------
// Question-answering themes
// ---------------------------------------------------------------------------

/// Third-person-singular inflection of a verb phrase held in base form.
inline std::string inflect_sg(const std::string& base) {
    auto space = base.find(' ');
    std::string verb = base.substr(0, space);
    std::string rest = space == std::string::npos ? "" : base.substr(space);
    if (verb == "has" || verb == "is") return base;  // already inflected heads
    auto ends_with = [&](const char* suf) {
        size_t n = std::char_traits<char>::length(suf);
        return verb.size() >= n && verb.compare(verb.size() - n, n, suf) == 0;
    };
    if (ends_with("ch") || ends_with("sh") || ends_with("ss") || ends_with("x") ||
        ends_with("z") || ends_with("o"))
        return verb + "es" + rest;
    if (verb.size() > 1 && verb.back() == 'y') {
        char before = verb[verb.size() - 2];
        if (before != 'a' && before != 'e' && before != 'i' && before != 'o' && before != 'u')
            return verb.substr(0, verb.size() - 1) + "ies" + rest;
    }
    return verb + "s" + rest;
}

struct Theme {
    std::string name;
    std::vector<std::string> subjects;   // proper names used as constants
    std::vector<std::string> phrases;    // verb phrases in base form
};

inline const std::vector<Theme>& themes() {
    static const std::vector<Theme> all = {
        {"fishing",
         {"Michael", "Sarah", "Tom", "Elena"},
         {"use a fishing rod", "catch fish", "clean the catch", "sell fish at the market",
          "own a boat", "check the weather", "wear waders", "pack fresh bait",
          "visit the pier", "keep a tackle box", "read the tide chart", "rent a kayak"}},
        {"cooking",
         {"Priya", "Carlos", "Emma", "Louis"},
         {"follow the recipe", "chop the onions", "preheat the oven", "taste the sauce",
          "plate the dish", "sharpen the knives", "wash the pans", "buy fresh herbs",
          "set the timer", "knead the dough", "whisk the eggs", "season the stew"}},
        {"gardening",
         {"Rosa", "Ben", "Amara", "Felix"},
         {"water the roses", "pull the weeds", "plant new seeds", "trim the hedge",
          "compost the scraps", "mow the lawn", "stake the tomatoes", "rake the leaves",
          "check the soil", "prune the apple tree", "fill the bird feeder", "harvest the beans"}},
        {"library",
         {"Grace", "Omar", "Lily", "Hassan"},
         {"hold a library card", "borrow a novel", "return books on time", "browse the archive",
          "reserve a study room", "read the newsletter", "attend the book club",
          "renew a loan", "use the catalog", "visit the reading hall", "pay the late fee",
          "shelve the returns"}},
        {"music",
         {"Nina", "Theo", "Clara", "Ravi"},
         {"practice the violin", "read sheet music", "tune the strings", "join the orchestra",
          "attend the rehearsal", "record a demo", "write new songs", "play the piano",
          "carry a metronome", "teach a lesson", "book the studio", "perform on stage"}},
        {"sports",
         {"Jack", "Mia", "Diego", "Sofia"},
         {"train every morning", "stretch before runs", "join the relay team",
          "wear running shoes", "track the laps", "enter the marathon", "lift weights",
          "follow the training plan", "drink enough water", "win local races",
          "keep a training log", "rest on sundays"}},
        {"painting",
         {"Vera", "Hugo", "Iris", "Mateo"},
         {"stretch the canvas", "mix the pigments", "sketch in charcoal", "clean the brushes",
          "visit the gallery", "frame the portrait", "study color theory", "paint landscapes",
          "sign the artwork", "sell a painting", "teach a workshop", "varnish the canvas"}},
        {"bakery",
         {"Ada", "Marco", "Zoe", "Ethan"},
         {"bake sourdough bread", "proof the yeast", "glaze the pastries", "open the shop early",
          "grind fresh flour", "ice the cakes", "sell out by noon", "roll the croissants",
          "stock the display", "take custom orders", "clean the ovens", "brew the coffee"}},
        {"travel",
         {"Leila", "Victor", "Anya", "Sven"},
         {"pack a suitcase", "book the flights", "carry a passport", "learn local phrases",
          "ride the night train", "keep a travel journal", "try street food",
          "visit old castles", "hike mountain trails", "send postcards home",
          "plan the itinerary", "exchange currency"}},
        {"astronomy",
         {"Yuki", "Adam", "Selma", "Igor"},
         {"own a telescope", "chart the stars", "watch meteor showers", "log the observations",
          "grind the lenses", "attend star parties", "photograph the moon",
          "track the planets", "read sky atlases", "join the observatory",
          "measure the parallax", "spot the comet"}},
    };
    return all;
}

}  // namespace qkprobe::datagen
