#include "greenprompt/prompt_engine.hpp"

#include <cctype>
#include <stdexcept>

namespace greenprompt {

namespace {

const char* kBaseSystemSentence =
    "You are an AI assistant specialized in code completion for Java. Your task is to complete "
    "the provided Java code segment with one line. Give only the code completion.";

const char* kTagExplanation =
    "The code to analyze is marked by the <code> tag and the line to be completed is marked by "
    "the <incomplete> tag.";

const char* kNoSystemGreeting = "Hi, complete the following snippet adding one line please: ";

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

const char* to_string(PetKind kind) {
    switch (kind) {
        case PetKind::zero_shot: return "zero_shot";
        case PetKind::one_shot: return "one_shot";
        case PetKind::few_shot: return "few_shot";
    }
    return "unknown";
}

PetKind pet_kind_from_string(const std::string& name) {
    if (name == "zero_shot" || name == "zero") return PetKind::zero_shot;
    if (name == "one_shot" || name == "one") return PetKind::one_shot;
    if (name == "few_shot" || name == "few") return PetKind::few_shot;
    throw std::invalid_argument("unknown prompting technique: " + name);
}

const char* to_string(ConfigId id) {
    switch (id) {
        case ConfigId::C0: return "C0";
        case ConfigId::C1: return "C1";
        case ConfigId::C2: return "C2";
        case ConfigId::C3: return "C3";
        case ConfigId::C4: return "C4";
    }
    return "unknown";
}

ConfigId config_id_from_string(const std::string& name) {
    if (name == "C0" || name == "c0") return ConfigId::C0;
    if (name == "C1" || name == "c1") return ConfigId::C1;
    if (name == "C2" || name == "c2") return ConfigId::C2;
    if (name == "C3" || name == "c3") return ConfigId::C3;
    if (name == "C4" || name == "c4") return ConfigId::C4;
    throw std::invalid_argument("unknown prompt configuration: " + name);
}

PromptConfig PromptConfig::for_id(ConfigId id) {
    using EP = PromptConfig::ExplanationPlacement;
    switch (id) {
        case ConfigId::C0: return {id, false, EP::none, true};
        case ConfigId::C1: return {id, true, EP::none, true};
        case ConfigId::C2: return {id, true, EP::user, true};
        case ConfigId::C3: return {id, true, EP::system, true};
        case ConfigId::C4: return {id, false, EP::none, false};
    }
    throw std::invalid_argument("invalid configuration id");
}

std::string wrap_with_tags(const std::string& context, const std::string& incomplete) {
    std::string out;
    out.reserve(context.size() + incomplete.size() + 48);
    out += "<code> ";
    out += context;
    out += " </code> <incomplete> ";
    out += incomplete;
    out += " </incomplete>";
    return out;
}

std::string system_content(const PromptConfig& config) {
    if (!config.has_system_role) return "";
    std::string out = kBaseSystemSentence;
    if (config.explanation == PromptConfig::ExplanationPlacement::system) {
        out += " ";
        out += kTagExplanation;
    }
    return out;
}

std::string user_content(const Snippet& snippet, const PromptConfig& config) {
    if (config.uses_tags) {
        std::string body = wrap_with_tags(trim(snippet.context), trim(snippet.incomplete));
        if (config.explanation == PromptConfig::ExplanationPlacement::user) {
            return std::string(kTagExplanation) + " " + body;
        }
        return body;
    }
    std::string raw = snippet.context + snippet.incomplete;
    if (!config.has_system_role) {
        return kNoSystemGreeting + raw;
    }
    return raw;
}

ChatPrompt render_prompt(const Snippet& snippet, const Pet& pet, const PromptConfig& config,
                         const std::vector<Snippet>& pool) {
    if (pool.size() < static_cast<std::size_t>(pet.shot_count)) {
        throw std::invalid_argument("example pool holds " + std::to_string(pool.size()) +
                                    " snippets, " + std::to_string(pet.shot_count) + " needed");
    }

    ChatPrompt prompt;
    prompt.messages.reserve(2 + 2 * static_cast<std::size_t>(pet.shot_count));
    prompt.messages.push_back({"system", system_content(config)});
    for (int i = 0; i < pet.shot_count; ++i) {
        const Snippet& example = pool[static_cast<std::size_t>(i)];
        prompt.messages.push_back({"user", user_content(example, config)});
        prompt.messages.push_back({"assistant", example.ground_truth});
    }
    prompt.messages.push_back({"user", user_content(snippet, config)});
    return prompt;
}

} // namespace greenprompt
