#pragma once

#include "greenprompt/corpus.hpp"

#include <string>
#include <vector>

namespace greenprompt {

enum class PetKind { zero_shot, one_shot, few_shot };

/// Prompt engineering technique: how many worked examples precede the
/// evaluation snippet.
struct Pet {
    PetKind kind = PetKind::zero_shot;
    int shot_count = 0;

    static Pet zero_shot() { return {PetKind::zero_shot, 0}; }
    static Pet one_shot() { return {PetKind::one_shot, 1}; }
    static Pet few_shot(int shots = 5) { return {PetKind::few_shot, shots}; }

    bool operator==(const Pet&) const = default;
};

const char* to_string(PetKind kind);
PetKind pet_kind_from_string(const std::string& name);

enum class ConfigId { C0, C1, C2, C3, C4 };

/// One of the five closed prompt configurations:
///   C0  plain snippet, task defined in the system message
///   C1  <code>/<incomplete> tags, no explanation
///   C2  tags plus an explanation sentence prefixed to the user message
///   C3  tags plus the explanation appended to the system message
///   C4  no system definition, conversational user message, no tags
struct PromptConfig {
    ConfigId id = ConfigId::C0;
    bool uses_tags = false;
    enum class ExplanationPlacement { none, user, system } explanation = ExplanationPlacement::none;
    bool has_system_role = true;

    static PromptConfig for_id(ConfigId id);

    bool operator==(const PromptConfig&) const = default;
};

const char* to_string(ConfigId id);
ConfigId config_id_from_string(const std::string& name);

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

/// Ordered message sequence: [system] + shot examples as user/assistant
/// pairs + the final user message carrying the evaluation snippet.
struct ChatPrompt {
    std::vector<ChatMessage> messages;

    bool operator==(const ChatPrompt&) const = default;
};

/// `<code> {context} </code> <incomplete> {incomplete} </incomplete>`,
/// single space of padding inside each tag.
std::string wrap_with_tags(const std::string& context, const std::string& incomplete);

/// System message content for a configuration. C0/C1/C2 share the base task
/// sentence, C3 appends the tag explanation, C4 is empty.
std::string system_content(const PromptConfig& config);

/// User message content for a snippet under a configuration. Tagged
/// configurations (C1-C3) trim outer whitespace from both fields before
/// wrapping so tag padding stays uniform; untagged ones (C0, C4) concatenate
/// the fields verbatim, preserving the original truncated input bytes.
std::string user_content(const Snippet& snippet, const PromptConfig& config);

/// Full chat prompt: system message, shot_count worked examples drawn from
/// the front of `pool` (formatted with the same configuration, assistant
/// turns carrying the bare ground-truth line), then the evaluation snippet.
/// Message count is always 2 + 2 * shot_count.
ChatPrompt render_prompt(const Snippet& snippet, const Pet& pet, const PromptConfig& config,
                         const std::vector<Snippet>& pool);

} // namespace greenprompt
