#pragma once

#include "greenprompt/energy_meter.hpp"
#include "greenprompt/metrics.hpp"
#include "greenprompt/prompt_engine.hpp"

#include <string>

#include <json.hpp>

namespace greenprompt {

enum class RunStatus { ok, failed };

/// The persisted triple (question, answer, measurement) plus scoring for one
/// (snippet, PET, config, repetition) cell. Failed runs keep the key fields
/// and an error message; measurement and scoring stay empty.
struct RunRecord {
    std::string snippet_id;
    Pet pet;
    ConfigId config = ConfigId::C0;
    int repetition = 0;

    ChatPrompt question;
    std::string answer;
    Measurement measurement;
    ScoredAnswer scored;
    RunStatus status = RunStatus::ok;
    std::string error;

    double latency_s = 0.0;
    std::string dispatched_at;        // wall clock, ISO 8601 UTC
    std::string completed_at;
    double dispatch_monotonic_s = 0.0; // since process start, for pause checks
    int epoch = 0;                     // resume generation that produced this record
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ChatPrompt& prompt);
ChatPrompt chat_prompt_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Pet& pet);
Pet pet_from_json(const nlohmann::json& j);

} // namespace greenprompt
