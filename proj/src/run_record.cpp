#include "greenprompt/run_record.hpp"

namespace greenprompt {

using nlohmann::json;

json to_json(const ChatPrompt& prompt) {
    json messages = json::array();
    for (const auto& m : prompt.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return messages;
}

ChatPrompt chat_prompt_from_json(const json& j) {
    ChatPrompt prompt;
    for (const auto& m : j) {
        prompt.messages.push_back({m.at("role").get<std::string>(),
                                   m.at("content").get<std::string>()});
    }
    return prompt;
}

json to_json(const Pet& pet) {
    return json{{"kind", to_string(pet.kind)}, {"shot_count", pet.shot_count}};
}

Pet pet_from_json(const json& j) {
    Pet pet;
    pet.kind = pet_kind_from_string(j.at("kind").get<std::string>());
    pet.shot_count = j.at("shot_count").get<int>();
    return pet;
}

json to_json(const RunRecord& r) {
    json j{{"snippet_id", r.snippet_id},
           {"pet", to_json(r.pet)},
           {"config", to_string(r.config)},
           {"repetition", r.repetition},
           {"question", to_json(r.question)},
           {"answer", r.answer},
           {"status", r.status == RunStatus::ok ? "ok" : "failed"},
           {"dispatched_at", r.dispatched_at},
           {"completed_at", r.completed_at},
           {"dispatch_monotonic_s", r.dispatch_monotonic_s},
           {"epoch", r.epoch}};

    if (r.status == RunStatus::ok) {
        json measurement{{"gpu_energy_kwh", r.measurement.gpu_energy_kwh},
                         {"duration_s", r.measurement.duration_s}};
        if (r.measurement.cpu_energy_kwh) {
            measurement["cpu_energy_kwh"] = *r.measurement.cpu_energy_kwh;
        }
        j["measurement"] = std::move(measurement);
        j["scored"] = json{{"normalized", r.scored.normalized},
                           {"distance", r.scored.distance},
                           {"exact", r.scored.exact},
                           {"uncontrolled", r.scored.uncontrolled}};
        j["latency_s"] = r.latency_s;
    } else {
        j["error"] = r.error;
    }
    return j;
}

RunRecord run_record_from_json(const json& j) {
    RunRecord r;
    r.snippet_id = j.at("snippet_id").get<std::string>();
    r.pet = pet_from_json(j.at("pet"));
    r.config = config_id_from_string(j.at("config").get<std::string>());
    r.repetition = j.at("repetition").get<int>();
    r.question = chat_prompt_from_json(j.at("question"));
    r.answer = j.value("answer", std::string{});
    r.status = j.at("status").get<std::string>() == "ok" ? RunStatus::ok : RunStatus::failed;
    r.dispatched_at = j.value("dispatched_at", std::string{});
    r.completed_at = j.value("completed_at", std::string{});
    r.dispatch_monotonic_s = j.value("dispatch_monotonic_s", 0.0);
    r.epoch = j.value("epoch", 0);

    if (r.status == RunStatus::ok) {
        const json& m = j.at("measurement");
        r.measurement.gpu_energy_kwh = m.at("gpu_energy_kwh").get<double>();
        r.measurement.duration_s = m.at("duration_s").get<double>();
        if (m.contains("cpu_energy_kwh")) {
            r.measurement.cpu_energy_kwh = m["cpu_energy_kwh"].get<double>();
        }
        const json& s = j.at("scored");
        r.scored.raw = r.answer;
        r.scored.normalized = s.at("normalized").get<std::string>();
        r.scored.distance = s.at("distance").get<std::size_t>();
        r.scored.exact = s.at("exact").get<bool>();
        r.scored.uncontrolled = s.at("uncontrolled").get<bool>();
        r.latency_s = j.value("latency_s", 0.0);
    } else {
        r.error = j.value("error", std::string{});
    }
    return r;
}

} // namespace greenprompt
