#pragma once

//! Zero-shot prompt templates.
//!
//! Every template renders the same four-part layout: an instruction line
//! naming both answer options, a Context block, the Statement (or
//! Question) line closed by an end-of-line symbol, and a bare "Answer:"
//! tail whose final token is where output logits are read.  Anchor spans
//! for the two option words and the statement end-of-line are recorded
//! while the text is being assembled, never recovered by searching it.
//!
//! The boolean template serves the two statement-verification families;
//! the yes/no template serves the everyday-theme question family.

#include <array>
#include <string>

#include "qkprobe/common.hpp"
#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/runtime/tokenizer.hpp"

namespace qkprobe::runtime {

struct RenderedPrompt {
    std::string text;
    PromptSpans spans;
    std::string template_id;
    std::array<std::string, 2> options;  // a0 first: the gold-0 answer word
};

inline std::string default_template_id(const std::string& family) {
    if (family == "pronto" || family == "pararule") return "boolean";
    if (family == "mle") return "yesno";
    throw TemplateMissing("no default template for family: " + family);
}

inline RenderedPrompt render_prompt(const datagen::LogicSample& sample,
                                    const std::string& template_id) {
    bool boolean = template_id == "boolean";
    bool yesno = template_id == "yesno";
    if (!boolean && !yesno) throw TemplateMissing("unknown template: " + template_id);
    if (boolean && sample.family == "mle")
        throw TemplateMissing("the boolean template does not fit yes/no questions");
    if (yesno && sample.family != "mle")
        throw TemplateMissing("the yes/no template does not fit statement verification");

    RenderedPrompt out;
    out.template_id = template_id;
    std::string& t = out.text;
    if (boolean) {
        out.options = {"true", "false"};
        t = "Use provided context and answer whether the statement is ";
        out.spans.a0_begin = t.size();
        t += "true or ";
        out.spans.a1_begin = t.size();
        t += "false.\nContext:";
    } else {
        out.options = {"yes", "no"};
        t = "Use provided Context to answer the Question. Print '";
        out.spans.a0_begin = t.size();
        t += "yes' or '";
        out.spans.a1_begin = t.size();
        t += "no' only.\nContext:";
    }
    for (const auto& premise : sample.context) t += " " + premise.text;
    t += boolean ? "\nStatement: " : "\nQuestion: ";
    t += sample.statement_text;
    out.spans.eol_begin = t.size();
    t += "\nAnswer:";
    return out;
}

/// Zero-shot contract: the prompt carries instructions and one problem,
/// no solved demonstrations.  True when the only "Answer:" is the final
/// tail with nothing after it.
inline bool is_zero_shot(const std::string& text) {
    size_t first = text.find("Answer:");
    return first != std::string::npos && first == text.rfind("Answer:") &&
           first + 7 == text.size();
}

}  // namespace qkprobe::runtime
